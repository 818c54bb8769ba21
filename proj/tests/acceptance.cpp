// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned here, next to the checks that use them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include "eventid/attack.hpp"
#include "eventid/harness.hpp"
#include "eventid/modal.hpp"
#include "test_util.hpp"

using namespace eventid;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

constexpr double kPi = std::numbers::pi;

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail, double seconds) {
    std::printf("[%s] criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", criterion,
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

// ---- criterion 1: modal round trip ----------------------------------------

void criterion_1() {
    const auto t0 = clock_type::now();
    const int m = 5, n = 300;
    const double ts = 1.0 / 30.0;
    constexpr double kRmseTol = 1e-6;

    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> n_pairs(1, 3);
    std::uniform_real_distribution<double> sig(-1.2, -0.1);
    std::uniform_real_distribution<double> freq(0.3, 3.0);
    std::uniform_real_distribution<double> mag(0.2, 1.5);
    std::uniform_real_distribution<double> ang(-2.5, 2.5);

    double worst = 0.0;
    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const int pairs = n_pairs(rng);
        std::array<std::vector<Mode>, kNumChannels> modes;
        for (Channel c : kChannels) {
            std::vector<Mode> cm;
            std::vector<double> used;
            for (int k = 0; k < pairs; ++k) {
                // redraw until poles are separated so the fit is well-posed
                double f = freq(rng);
                auto too_close = [&] {
                    for (double u : used)
                        if (std::abs(f - u) < 0.2) return true;
                    return false;
                };
                while (too_close()) f = freq(rng);
                used.push_back(f);
                cm.push_back(testutil::make_mode_varied(sig(rng), 2.0 * kPi * f, mag(rng),
                                                        ang(rng), m));
            }
            modes[static_cast<int>(c)] = cm;
        }
        const EventWindow w = testutil::window_from_modes(modes, m, n, ts);
        const FeatureVector fv = extract_features(w, 2 * pairs, m);
        for (Channel c : kChannels) {
            for (int pmu = 1; pmu <= m && ok; ++pmu) {
                const Eigen::VectorXd rec = reconstruct(fv, pmu, c, n, ts);
                const Eigen::VectorXd orig = w.channel(c).row(pmu - 1).transpose();
                const double rmse = (rec - orig).norm() / orig.norm();
                worst = std::max(worst, rmse);
                ok = ok && rmse < kRmseTol;
            }
        }
    }
    const double secs = seconds_since(t0);
    ok = ok && secs < 10.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "modal round trip, 100 noiseless windows, worst relative RMSE %.3g (< 1e-6)",
                  worst);
    report(1, ok, buf, secs);
}

// ---- criterion 2: LR gradient vs finite differences ------------------------

void criterion_2() {
    const auto t0 = clock_type::now();
    constexpr double kGradTol = 1e-5;
    constexpr double kStep = 1e-6;

    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 15, d = 6;
        Eigen::MatrixXd xs(n, d);
        Eigen::VectorXi y(n);
        Eigen::VectorXd w(d);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) xs(i, j) = g(rng);
            y(i) = g(rng) > 0 ? 1 : -1;
        }
        for (int j = 0; j < d; ++j) w(j) = g(rng);
        const double bias = g(rng);
        const double reg = 1e-4;

        Eigen::VectorXd grad_w;
        double grad_b = 0.0;
        lr_gradient(xs, y, w, bias, reg, grad_w, grad_b);
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd wp = w, wm = w;
            wp(j) += kStep;
            wm(j) -= kStep;
            const double fd =
                (lr_loss(xs, y, wp, bias, reg) - lr_loss(xs, y, wm, bias, reg)) / (2 * kStep);
            worst = std::max(worst, std::abs(grad_w(j) - fd));
        }
        const double fdb =
            (lr_loss(xs, y, w, bias + kStep, reg) - lr_loss(xs, y, w, bias - kStep, reg)) /
            (2 * kStep);
        worst = std::max(worst, std::abs(grad_b - fdb));
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "LR analytic vs central-difference gradient, max err %.3g (< 1e-5)",
                  worst);
    report(2, worst < kGradTol, buf, seconds_since(t0));
}

// ---- criterion 3: GB split oracle ------------------------------------------

Stump brute_force_stump(const Eigen::MatrixXd& xs, const Eigen::VectorXd& r) {
    Stump best;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int j = 0; j < xs.cols(); ++j) {
        std::vector<double> vals(xs.rows());
        for (int i = 0; i < xs.rows(); ++i) vals[i] = xs(i, j);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t t = 0; t + 1 < vals.size(); ++t) {
            const double th = 0.5 * (vals[t] + vals[t + 1]);
            double sl = 0, sr = 0;
            int nl = 0, nr = 0;
            for (int i = 0; i < xs.rows(); ++i)
                (xs(i, j) <= th ? (sl += r(i), ++nl) : (sr += r(i), ++nr));
            double loss = 0;
            for (int i = 0; i < xs.rows(); ++i) {
                const double mu = xs(i, j) <= th ? sl / nl : sr / nr;
                loss += (r(i) - mu) * (r(i) - mu);
            }
            if (loss < best_loss - 1e-12) {
                best_loss = loss;
                best = {j, th, sl / nl, sr / nr};
            }
        }
    }
    return best;
}

void criterion_3() {
    const auto t0 = clock_type::now();
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> rows(4, 50);
    bool ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = rows(rng), d = 10;
        Eigen::MatrixXd xs(n, d);
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) xs(i, j) = g(rng);
            r(i) = g(rng);
        }
        const Stump got = fit_stump(xs, r);
        const Stump want = brute_force_stump(xs, r);
        ok = ok && got.feature == want.feature && got.threshold == want.threshold;
    }
    report(3, ok, "first-stump split equals brute-force minimizer on 20 random datasets",
           seconds_since(t0));
}

// ---- criteria 4-9 share the default desk dataset ---------------------------

void criterion_4(const Dataset& d, const RunConfig& cfg, const TrainedModels& models,
                 BaseCase& base_out) {
    const auto t0 = clock_type::now();
    constexpr double kAucFloor = 0.95;
    constexpr double kGbSlack = 0.02;
    const BaseCase base = evaluate_base_case(d, models, cfg);
    base_out = base;
    const double secs = seconds_since(t0);
    const bool ok =
        base.lr_auc >= kAucFloor && base.gb_auc >= kAucFloor && base.gb_auc >= base.lr_auc - kGbSlack;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "base case LR AUC %.4f, GB AUC %.4f (floor 0.95, GB >= LR - 0.02)",
                  base.lr_auc, base.gb_auc);
    report(4, ok && secs < 60.0, buf, secs);
}

double mean_auc_at(const SweepResult& r, Pairing p, int m_atk) {
    for (const auto& a : r.aggregates)
        if (a.pairing == p && a.m_atk == m_atk) return a.mean_auc;
    return std::numeric_limits<double>::quiet_NaN();
}

void criterion_5(const SweepResult& sweep, double sweep_secs, int m_atk_max) {
    constexpr double kAucAtThree = 0.25;
    constexpr double kAucAtMax = 0.10;
    const double lr3 = mean_auc_at(sweep, Pairing::WhiteLr, 3);
    const double gb3 = mean_auc_at(sweep, Pairing::WhiteGb, 3);
    const double lrm = mean_auc_at(sweep, Pairing::WhiteLr, m_atk_max);
    const double gbm = mean_auc_at(sweep, Pairing::WhiteGb, m_atk_max);
    const bool ok = lr3 <= kAucAtThree && gb3 <= kAucAtThree && lrm <= kAucAtMax &&
                    gbm <= kAucAtMax && sweep_secs < 600.0;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "white-box collapse: AUC at m_atk=3 LR %.3f / GB %.3f (<= 0.25), at m_atk=%d "
                  "LR %.3f / GB %.3f (<= 0.10), sweep %.0f s (< 600)",
                  lr3, gb3, m_atk_max, lrm, gbm, sweep_secs);
    report(5, ok, buf, sweep_secs);
}

// Gray-box ordering on one sweep result: the gray-box mean AUC (averaged over
// the two gray pairings) stays at or above the white-box mean AUC (averaged
// over the two white pairings) at every m_atk, and the gray-box AUC at the
// maximum m_atk sits at least 0.10 below the base case. The pooled comparison
// matches how the two attack conditions are summarized: per-pairing cells at a
// single m_atk carry too much set-sampling noise to order individually.
bool gray_ordering_holds(const SweepResult& r, const BaseCase& base, int m_atk_min, int m_atk_max) {
    constexpr double kMinDecrease = 0.10;
    for (int m = m_atk_min; m <= m_atk_max; ++m) {
        const double gray = 0.5 * (mean_auc_at(r, Pairing::GrayAtkGbOpLr, m) +
                                   mean_auc_at(r, Pairing::GrayAtkLrOpGb, m));
        const double white =
            0.5 * (mean_auc_at(r, Pairing::WhiteLr, m) + mean_auc_at(r, Pairing::WhiteGb, m));
        if (gray < white) return false;
    }
    const double gray_max = 0.5 * (mean_auc_at(r, Pairing::GrayAtkGbOpLr, m_atk_max) +
                                   mean_auc_at(r, Pairing::GrayAtkLrOpGb, m_atk_max));
    return 0.5 * (base.lr_auc + base.gb_auc) - gray_max >= kMinDecrease;
}

// Reduced-scale geometry for the alternate-seed replications: same archetype
// and feature pipeline, fewer events and sets so ten sweeps stay tractable.
RunConfig reduced_config(std::uint64_t seed) {
    RunConfig cfg = default_config("desk");
    cfg.gl_count = 40;
    cfg.ll_count = 40;
    cfg.sweep.n_sets = 3;
    cfg.master_seed = seed;
    return cfg;
}

SweepResult run_config_sweep(const RunConfig& cfg, Dataset* dataset_out = nullptr) {
    auto events = generate_dataset(cfg.gl_count, cfg.ll_count, cfg.synth, cfg.master_seed);
    Dataset d = split_dataset(std::move(events), cfg.master_seed + 1);
    const TrainedModels models = train_models(d, cfg);
    SweepResult r = run_sweep(d, models, cfg);
    if (dataset_out) *dataset_out = std::move(d);
    return r;
}

void criterion_6(const SweepResult& default_sweep, const BaseCase& base, int m_atk_max) {
    const auto t0 = clock_type::now();
    const bool default_ok = gray_ordering_holds(default_sweep, base, 1, m_atk_max);

    int holds = 0;
    for (std::uint64_t seed = 1001; seed < 1011; ++seed) {
        const RunConfig cfg = reduced_config(seed);
        const SweepResult r = run_config_sweep(cfg);
        if (gray_ordering_holds(r, r.base, cfg.sweep.m_atk_min, cfg.sweep.set_size)) ++holds;
    }
    const bool ok = default_ok && holds >= 8;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "gray-box ordering: default seed %s, alternate seeds %d/10 (need >= 8)",
                  default_ok ? "holds" : "FAILS", holds);
    report(6, ok, buf, seconds_since(t0));
}

void criterion_7(const Dataset& d, const RunConfig& cfg, const TrainedModels& models) {
    const auto t0 = clock_type::now();
    const auto test = d.events_in(Split::Test);
    const auto sets = draw_attack_sets(cfg);

    int checked = 0;
    bool ok = true;
    for (int atk = 0; atk < 2 && ok; ++atk) {
        const Classifier attacker = atk == 0 ? Classifier{models.lr} : Classifier{models.gb};
        for (int m_atk : {1, 3, cfg.sweep.set_size}) {
            AttackConfig acfg = cfg.attack;
            acfg.tampered_pmus.assign(sets[0].begin(), sets[0].begin() + m_atk);
            for (std::size_t ev = 0; ev < test.size() && ok; ev += 4) {
                const FeatureVector fv = extract_features(*test[ev], cfg.p, cfg.m_prime);
                const FeasibleBounds bounds = make_feasible_bounds(fv, cfg.feasible);
                const AttackOutcome out = generate_adversarial(
                    *test[ev], test[ev]->label, attacker, acfg, bounds, cfg.p, cfg.m_prime);
                if (!out.attacked || !out.diagnostic.empty()) continue;
                ++checked;
                ok = ok && bounds.contains(out.features.values, 0.0);  // exact check
            }
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "feasibility: %d adversarial feature vectors inside the bounds, exact check",
                  checked);
    report(7, ok && checked > 0, buf, seconds_since(t0));
}

void criterion_8() {
    const auto t0 = clock_type::now();
    const RunConfig cfg = reduced_config(77);
    const fs::path base = fs::temp_directory_path() / "eventid-acceptance";
    fs::remove_all(base);
    fs::create_directories(base / "a");
    fs::create_directories(base / "b");

    emit_report(run_config_sweep(cfg), (base / "a").string());
    emit_report(run_config_sweep(cfg), (base / "b").string());

    bool ok = true;
    int files = 0;
    for (const auto& entry : fs::directory_iterator(base / "a")) {
        ++files;
        std::ifstream fa(entry.path(), std::ios::binary);
        std::ifstream fb(base / "b" / entry.path().filename(), std::ios::binary);
        const std::string sa((std::istreambuf_iterator<char>(fa)), {});
        const std::string sb((std::istreambuf_iterator<char>(fb)), {});
        ok = ok && fb.good() && sa == sb && !sa.empty();
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "determinism: %d result CSVs byte-identical across two runs",
                  files);
    report(8, ok && files == 5, buf, seconds_since(t0));
}

void criterion_9(const Dataset& d, const RunConfig& cfg, const TrainedModels& models) {
    const auto t0 = clock_type::now();
    const auto test = d.events_in(Split::Test);

    // plant a misclassified event by flipping the label of a well-classified one
    bool ok = false;
    for (const EventWindow* ev : test) {
        const FeatureVector fv = extract_features(*ev, cfg.p, cfg.m_prime);
        if (predict_label(Classifier{models.lr}, fv.values) != ev->label) continue;

        EventWindow planted = *ev;
        planted.label = -ev->label;

        AttackConfig acfg = cfg.attack;
        acfg.tampered_pmus = {1, 2};
        const FeasibleBounds bounds = make_feasible_bounds(fv, cfg.feasible);
        const AttackOutcome out = generate_adversarial(planted, planted.label,
                                                       Classifier{models.lr}, acfg, bounds, cfg.p,
                                                       cfg.m_prime);
        bool untouched = true;
        for (Channel c : kChannels)
            untouched = untouched && out.tampered.channel(c) == planted.channel(c);
        ok = out.success && !out.attacked && out.outer_iterations == 0 && untouched;
        break;
    }
    report(9, ok, "guard: planted misclassified event returned untampered with zero iterations",
           seconds_since(t0));
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();

    const RunConfig cfg = default_config("desk");
    const auto t_data = clock_type::now();
    auto events = generate_dataset(cfg.gl_count, cfg.ll_count, cfg.synth, cfg.master_seed);
    Dataset d = split_dataset(std::move(events), cfg.master_seed + 1);
    const TrainedModels models = train_models(d, cfg);
    std::printf("-- default desk dataset + models ready (%.1f s)\n", seconds_since(t_data));
    std::fflush(stdout);

    BaseCase base;
    criterion_4(d, cfg, models, base);

    const auto t_sweep = clock_type::now();
    const SweepResult sweep = run_sweep(d, models, cfg);
    const double sweep_secs = seconds_since(t_sweep);
    criterion_5(sweep, sweep_secs, cfg.sweep.set_size);
    criterion_6(sweep, base, cfg.sweep.set_size);
    criterion_7(d, cfg, models);
    criterion_8();
    criterion_9(d, cfg, models);

    if (g_failures) std::printf("%d criterion(s) FAILED\n", g_failures);
    else std::printf("all 9 criteria passed\n");
    return g_failures ? 1 : 0;
}
