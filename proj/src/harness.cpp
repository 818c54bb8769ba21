#include "eventid/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "eventid/modal.hpp"

namespace eventid {

using nlohmann::json;

const char* pairing_name(Pairing p) {
    switch (p) {
        case Pairing::WhiteLr: return "white-lr";
        case Pairing::WhiteGb: return "white-gb";
        case Pairing::GrayAtkGbOpLr: return "gray-gb-atk-lr-op";
        case Pairing::GrayAtkLrOpGb: return "gray-lr-atk-gb-op";
    }
    return "?";
}

Pairing pairing_from_name(const std::string& name) {
    for (Pairing p : kAllPairings)
        if (name == pairing_name(p)) return p;
    throw FormatError("unknown pairing name: " + name);
}

namespace {

bool attacker_is_lr(Pairing p) { return p == Pairing::WhiteLr || p == Pairing::GrayAtkLrOpGb; }
bool operator_is_lr(Pairing p) { return p == Pairing::WhiteLr || p == Pairing::GrayAtkGbOpLr; }

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 4;
}

/// Deterministic parallel for: results land by index, independent of
/// completion order.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (count == 0) return;
    const int n_threads = std::min<std::size_t>(static_cast<std::size_t>(resolve_threads(threads)),
                                                count);
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

json archetype_to_json(const ClassArchetype& a) {
    json j;
    j["noise_sigma"] = a.noise_sigma;
    j["residue_decay"] = a.residue_decay;
    j["theta_pmu_step"] = a.theta_pmu_step;
    for (Channel c : kChannels) {
        json modes = json::array();
        for (const auto& m : a.channel_modes(c)) {
            modes.push_back({{"sigma", m.sigma_base},
                             {"sigma_jitter", m.sigma_jitter},
                             {"omega", m.omega_base},
                             {"omega_jitter", m.omega_jitter},
                             {"rmag", m.rmag_base},
                             {"rmag_jitter", m.rmag_jitter},
                             {"theta", m.theta_base},
                             {"theta_jitter", m.theta_jitter}});
        }
        j["channels"][channel_name(c)] = std::move(modes);
    }
    return j;
}

ClassArchetype archetype_from_json(const json& j) {
    ClassArchetype a;
    a.noise_sigma = j.at("noise_sigma").get<double>();
    a.residue_decay = j.at("residue_decay").get<double>();
    a.theta_pmu_step = j.at("theta_pmu_step").get<double>();
    for (Channel c : kChannels) {
        auto& list = a.modes[static_cast<int>(c)];
        list.clear();
        for (const auto& mj : j.at("channels").at(channel_name(c))) {
            ArchetypeMode m;
            m.sigma_base = mj.at("sigma").get<double>();
            m.sigma_jitter = mj.at("sigma_jitter").get<double>();
            m.omega_base = mj.at("omega").get<double>();
            m.omega_jitter = mj.at("omega_jitter").get<double>();
            m.rmag_base = mj.at("rmag").get<double>();
            m.rmag_jitter = mj.at("rmag_jitter").get<double>();
            m.theta_base = mj.at("theta").get<double>();
            m.theta_jitter = mj.at("theta_jitter").get<double>();
            list.push_back(m);
        }
    }
    return a;
}

}  // namespace

RunConfig default_config(const std::string& scale) {
    RunConfig cfg;
    if (scale == "desk") return cfg;
    if (scale == "full") {
        cfg.synth.num_pmus = 95;
        cfg.gl_count = 750;
        cfg.ll_count = 750;
        cfg.m_prime = 20;
        cfg.sweep.set_size = 20;
        return cfg;
    }
    throw InvalidCount("unknown scale '" + scale + "' (expected desk or full)");
}

void save_config(const RunConfig& cfg, const std::string& path) {
    json j;
    j["geometry"] = {{"num_pmus", cfg.synth.num_pmus},
                     {"num_samples", cfg.synth.num_samples},
                     {"ts", cfg.synth.ts}};
    j["events"] = {{"gl", cfg.gl_count}, {"ll", cfg.ll_count}};
    j["features"] = {{"p", cfg.p}, {"m_prime", cfg.m_prime}};
    j["lr"] = {{"reg", cfg.lr.reg}, {"max_iter", cfg.lr.max_iter}, {"tol", cfg.lr.tol}};
    j["gb"] = {{"n_stumps", cfg.gb.n_stumps}, {"learn_rate", cfg.gb.learn_rate}};
    j["attack"] = {{"eta", cfg.attack.eta},
                   {"max_outer", cfg.attack.max_outer},
                   {"inner_cap", cfg.attack.inner_cap},
                   {"boost_factor", cfg.attack.boost_factor},
                   {"boost_cap", cfg.attack.boost_cap}};
    j["feasible"] = {{"omega_factor", cfg.feasible.omega_factor},
                     {"sigma_cap", cfg.feasible.sigma_cap},
                     {"rmag_lo", cfg.feasible.rmag_lo},
                     {"rmag_hi", cfg.feasible.rmag_hi}};
    json pairings = json::array();
    for (Pairing p : cfg.sweep.pairings) pairings.push_back(pairing_name(p));
    j["sweep"] = {{"n_sets", cfg.sweep.n_sets},
                  {"set_size", cfg.sweep.set_size},
                  {"m_atk_min", cfg.sweep.m_atk_min},
                  {"m_atk_max", cfg.sweep.m_atk_max},
                  {"pairings", std::move(pairings)}};
    j["master_seed"] = cfg.master_seed;
    j["threads"] = cfg.threads;
    j["archetypes"] = {{"gl", archetype_to_json(cfg.synth.gl)},
                       {"ll", archetype_to_json(cfg.synth.ll)}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    try {
        RunConfig cfg;
        cfg.synth.num_pmus = j.at("geometry").at("num_pmus").get<int>();
        cfg.synth.num_samples = j.at("geometry").at("num_samples").get<int>();
        cfg.synth.ts = j.at("geometry").at("ts").get<double>();
        cfg.gl_count = j.at("events").at("gl").get<int>();
        cfg.ll_count = j.at("events").at("ll").get<int>();
        cfg.p = j.at("features").at("p").get<int>();
        cfg.m_prime = j.at("features").at("m_prime").get<int>();
        cfg.lr.reg = j.at("lr").at("reg").get<double>();
        cfg.lr.max_iter = j.at("lr").at("max_iter").get<int>();
        cfg.lr.tol = j.at("lr").at("tol").get<double>();
        cfg.gb.n_stumps = j.at("gb").at("n_stumps").get<int>();
        cfg.gb.learn_rate = j.at("gb").at("learn_rate").get<double>();
        cfg.attack.eta = j.at("attack").at("eta").get<double>();
        cfg.attack.max_outer = j.at("attack").at("max_outer").get<int>();
        cfg.attack.inner_cap = j.at("attack").at("inner_cap").get<int>();
        cfg.attack.boost_factor = j.at("attack").at("boost_factor").get<double>();
        cfg.attack.boost_cap = j.at("attack").at("boost_cap").get<int>();
        cfg.feasible.omega_factor = j.at("feasible").at("omega_factor").get<double>();
        cfg.feasible.sigma_cap = j.at("feasible").at("sigma_cap").get<double>();
        cfg.feasible.rmag_lo = j.at("feasible").at("rmag_lo").get<double>();
        cfg.feasible.rmag_hi = j.at("feasible").at("rmag_hi").get<double>();
        cfg.sweep.n_sets = j.at("sweep").at("n_sets").get<int>();
        cfg.sweep.set_size = j.at("sweep").at("set_size").get<int>();
        cfg.sweep.m_atk_min = j.at("sweep").at("m_atk_min").get<int>();
        cfg.sweep.m_atk_max = j.at("sweep").at("m_atk_max").get<int>();
        cfg.sweep.pairings.clear();
        for (const auto& pj : j.at("sweep").at("pairings"))
            cfg.sweep.pairings.push_back(pairing_from_name(pj.get<std::string>()));
        cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
        cfg.threads = j.value("threads", 0);
        cfg.synth.gl = archetype_from_json(j.at("archetypes").at("gl"));
        cfg.synth.ll = archetype_from_json(j.at("archetypes").at("ll"));
        return cfg;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

Eigen::MatrixXd feature_matrix(const std::vector<const EventWindow*>& events, int p, int m_prime,
                               int threads) {
    if (events.empty()) throw InvalidCount("feature_matrix needs at least one event");
    const FeatureLayout layout(p / 2, m_prime);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(events.size()), layout.dim());
    parallel_for(events.size(), threads, [&](std::size_t i) {
        x.row(static_cast<Eigen::Index>(i)) =
            extract_features(*events[i], p, m_prime).values.transpose();
    });
    return x;
}

namespace {

Eigen::VectorXi labels_of(const std::vector<const EventWindow*>& events) {
    Eigen::VectorXi y(static_cast<Eigen::Index>(events.size()));
    for (std::size_t i = 0; i < events.size(); ++i) y(static_cast<Eigen::Index>(i)) = events[i]->label;
    return y;
}

}  // namespace

TrainedModels train_models(const Dataset& dataset, const RunConfig& cfg) {
    TrainedModels tm;
    const auto lr_events = dataset.events_in(Split::TrainLr);
    const auto gb_events = dataset.events_in(Split::TrainGb);
    tm.lr = lr_train(feature_matrix(lr_events, cfg.p, cfg.m_prime, cfg.threads),
                     labels_of(lr_events), cfg.lr);
    tm.gb = gb_train(feature_matrix(gb_events, cfg.p, cfg.m_prime, cfg.threads),
                     labels_of(gb_events), cfg.gb);
    return tm;
}

BaseCase evaluate_base_case(const Dataset& dataset, const TrainedModels& models,
                            const RunConfig& cfg) {
    const auto test = dataset.events_in(Split::Test);
    const Eigen::MatrixXd x = feature_matrix(test, cfg.p, cfg.m_prime, cfg.threads);
    std::vector<double> lr_scores(test.size()), gb_scores(test.size());
    std::vector<int> labels(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        const Eigen::VectorXd row = x.row(static_cast<Eigen::Index>(i));
        lr_scores[i] = lr_predict_proba(models.lr, row);
        gb_scores[i] = gb_predict_proba(models.gb, row);
        labels[i] = test[i]->label;
    }
    return {auc(lr_scores, labels), auc(gb_scores, labels)};
}

BaseCase run_base_case(const Dataset& dataset, const RunConfig& cfg) {
    return evaluate_base_case(dataset, train_models(dataset, cfg), cfg);
}

std::vector<std::vector<int>> draw_attack_sets(const RunConfig& cfg) {
    if (cfg.sweep.set_size < 1 || cfg.sweep.set_size > cfg.synth.num_pmus)
        throw InvalidCount("sweep set_size must be in 1..M");
    std::mt19937_64 rng(cfg.master_seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<int> ids(static_cast<std::size_t>(cfg.synth.num_pmus));
    std::iota(ids.begin(), ids.end(), 1);
    std::vector<std::vector<int>> sets;
    sets.reserve(static_cast<std::size_t>(cfg.sweep.n_sets));
    for (int s = 0; s < cfg.sweep.n_sets; ++s) {
        std::shuffle(ids.begin(), ids.end(), rng);
        sets.emplace_back(ids.begin(), ids.begin() + cfg.sweep.set_size);
    }
    return sets;
}

SweepResult run_sweep(const Dataset& dataset, const TrainedModels& models, const RunConfig& cfg) {
    SweepResult result;
    result.base = evaluate_base_case(dataset, models, cfg);

    const auto test = dataset.events_in(Split::Test);
    if (test.empty()) throw TooFewEvents("test split is empty");
    const int m_atk_max = cfg.sweep.m_atk_max > 0 ? cfg.sweep.m_atk_max : cfg.sweep.set_size;
    const int m_atk_min = std::max(cfg.sweep.m_atk_min, 0);
    if (m_atk_min > m_atk_max || m_atk_max > cfg.sweep.set_size)
        throw InvalidCount("invalid m_atk range in sweep spec");
    const auto sets = draw_attack_sets(cfg);

    // Feasible bounds come from each event's untampered features.
    std::vector<FeatureVector> untampered(test.size());
    std::vector<FeasibleBounds> bounds(test.size());
    parallel_for(test.size(), cfg.threads, [&](std::size_t i) {
        untampered[i] = extract_features(*test[i], cfg.p, cfg.m_prime);
        bounds[i] = make_feasible_bounds(untampered[i], cfg.feasible);
    });

    // An attack run depends only on (attacker model, set, m_atk, event); both
    // white and gray pairings of the same attacker reuse one run.
    const std::array<const Classifier, 2> attackers{Classifier{models.lr}, Classifier{models.gb}};
    const int n_matk = m_atk_max - m_atk_min + 1;
    struct Job {
        double score_lr = 0.0, score_gb = 0.0;  // operator probabilities on final features
        int outer_iters = 0;
        bool hard_error = false;
    };
    const std::size_t n_jobs =
        2 * sets.size() * static_cast<std::size_t>(n_matk) * test.size();
    std::vector<Job> jobs(n_jobs);
    auto job_index = [&](int atk, std::size_t set, int m_atk, std::size_t ev) {
        return ((static_cast<std::size_t>(atk) * sets.size() + set) * static_cast<std::size_t>(n_matk) +
                static_cast<std::size_t>(m_atk - m_atk_min)) *
                   test.size() +
               ev;
    };

    parallel_for(n_jobs, cfg.threads, [&](std::size_t idx) {
        std::size_t rest = idx;
        const std::size_t ev = rest % test.size();
        rest /= test.size();
        const int m_atk = m_atk_min + static_cast<int>(rest % static_cast<std::size_t>(n_matk));
        rest /= static_cast<std::size_t>(n_matk);
        const std::size_t set = rest % sets.size();
        const int atk = static_cast<int>(rest / sets.size());

        Job& job = jobs[idx];
        if (m_atk == 0) {
            // No attack: score the untampered features, reducing to base case.
            job.score_lr = lr_predict_proba(models.lr, untampered[ev].values);
            job.score_gb = gb_predict_proba(models.gb, untampered[ev].values);
            return;
        }
        AttackConfig acfg = cfg.attack;
        acfg.tampered_pmus.assign(sets[set].begin(), sets[set].begin() + m_atk);
        const AttackOutcome outcome = generate_adversarial(
            *test[ev], test[ev]->label, attackers[static_cast<std::size_t>(atk)], acfg, bounds[ev],
            cfg.p, cfg.m_prime);

        job.score_lr = lr_predict_proba(models.lr, outcome.features.values);
        job.score_gb = gb_predict_proba(models.gb, outcome.features.values);
        job.outer_iters = outcome.outer_iterations;
        job.hard_error = !outcome.diagnostic.empty();
    });

    std::vector<int> labels(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) labels[i] = test[i]->label;

    for (Pairing pairing : cfg.sweep.pairings) {
        const int atk = attacker_is_lr(pairing) ? 0 : 1;
        const bool op_lr = operator_is_lr(pairing);
        for (int m_atk = m_atk_min; m_atk <= m_atk_max; ++m_atk) {
            for (std::size_t set = 0; set < sets.size(); ++set) {
                SweepCell cell;
                cell.pairing = pairing;
                cell.m_atk = m_atk;
                cell.set_index = static_cast<int>(set);
                std::vector<double> scores(test.size());
                double iters = 0.0;
                int miscls = 0;
                for (std::size_t ev = 0; ev < test.size(); ++ev) {
                    const Job& job = jobs[job_index(atk, set, m_atk, ev)];
                    scores[ev] = op_lr ? job.score_lr : job.score_gb;
                    iters += job.outer_iters;
                    cell.hard_errors += job.hard_error ? 1 : 0;
                    const int pred = scores[ev] >= 0.5 ? kLabelGenLoss : kLabelLoadLoss;
                    if (pred != labels[ev]) ++miscls;
                }
                cell.auc = auc(scores, labels);
                cell.success_rate = static_cast<double>(miscls) / static_cast<double>(test.size());
                cell.mean_outer_iters = iters / static_cast<double>(test.size());
                result.cells.push_back(std::move(cell));
            }
        }
    }
    result.aggregates = aggregate_cells(result.cells);
    return result;
}

std::vector<SweepAggregate> aggregate_cells(const std::vector<SweepCell>& cells) {
    std::vector<SweepAggregate> out;
    std::size_t i = 0;
    while (i < cells.size()) {
        std::size_t j = i;
        while (j < cells.size() && cells[j].pairing == cells[i].pairing &&
               cells[j].m_atk == cells[i].m_atk)
            ++j;
        SweepAggregate agg;
        agg.pairing = cells[i].pairing;
        agg.m_atk = cells[i].m_atk;
        const double n = static_cast<double>(j - i);
        for (std::size_t k = i; k < j; ++k) {
            agg.mean_auc += cells[k].auc;
            agg.mean_success_rate += cells[k].success_rate;
            agg.mean_outer_iters += cells[k].mean_outer_iters;
        }
        agg.mean_auc /= n;
        agg.mean_success_rate /= n;
        agg.mean_outer_iters /= n;
        double var = 0.0;
        for (std::size_t k = i; k < j; ++k) {
            const double d = cells[k].auc - agg.mean_auc;
            var += d * d;
        }
        agg.std_auc = std::sqrt(var / n);
        out.push_back(agg);
        i = j;
    }
    return out;
}

void emit_report(const SweepResult& result, const std::string& out_dir) {
    if (result.cells.empty()) throw InvalidCount("cannot emit a report for an empty result");
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    std::ofstream detail(dir / "detail.csv");
    if (!detail) throw IoError("cannot open for writing: " + (dir / "detail.csv").string());
    detail << "pairing,m_atk,set,auc,success_rate,mean_outer_iterations,hard_errors\n";
    for (const SweepCell& c : result.cells)
        detail << pairing_name(c.pairing) << ',' << c.m_atk << ',' << c.set_index << ','
               << fmt_double(c.auc) << ',' << fmt_double(c.success_rate) << ','
               << fmt_double(c.mean_outer_iters) << ',' << c.hard_errors << '\n';
    if (!detail) throw IoError("write failed: detail.csv");

    for (Pairing p : kAllPairings) {
        bool any = false;
        for (const auto& a : result.aggregates) any = any || a.pairing == p;
        if (!any) continue;
        const auto path = dir / (std::string("series_") + pairing_name(p) + ".csv");
        std::ofstream series(path);
        if (!series) throw IoError("cannot open for writing: " + path.string());
        series << "m_atk,mean_auc,std_auc,mean_success_rate,mean_outer_iterations\n";
        for (const auto& a : result.aggregates)
            if (a.pairing == p)
                series << a.m_atk << ',' << fmt_double(a.mean_auc) << ',' << fmt_double(a.std_auc)
                       << ',' << fmt_double(a.mean_success_rate) << ','
                       << fmt_double(a.mean_outer_iters) << '\n';
        if (!series) throw IoError("write failed: " + path.string());
    }
}

std::vector<SweepCell> load_detail_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("pairing,", 0) != 0)
        throw FormatError(path + ": missing detail header");
    std::vector<SweepCell> cells;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        SweepCell c;
        auto next = [&](const char* what) {
            if (!std::getline(row, field, ','))
                throw FormatError(path + ":" + std::to_string(lineno) + ": missing " + what);
            return field;
        };
        c.pairing = pairing_from_name(next("pairing"));
        c.m_atk = std::stoi(next("m_atk"));
        c.set_index = std::stoi(next("set"));
        c.auc = std::stod(next("auc"));
        c.success_rate = std::stod(next("success_rate"));
        c.mean_outer_iters = std::stod(next("mean_outer_iterations"));
        c.hard_errors = std::stoi(next("hard_errors"));
        cells.push_back(c);
    }
    if (cells.empty()) throw FormatError(path + ": no detail rows");
    return cells;
}

}  // namespace eventid
