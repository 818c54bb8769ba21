// Command-line front end: synthesize datasets, train classifiers, run single
// attacks with a trace, sweep attack effectiveness, and re-render reports.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "eventid/harness.hpp"
#include "eventid/modal.hpp"

namespace fs = std::filesystem;
using namespace eventid;

namespace {

RunConfig resolve_config(const std::string& config_path, const std::string& scale,
                         std::optional<std::uint64_t> seed) {
    RunConfig cfg = config_path.empty() ? default_config(scale) : load_config(config_path);
    if (seed) cfg.master_seed = *seed;
    return cfg;
}

Dataset build_dataset(const RunConfig& cfg) {
    auto events = generate_dataset(cfg.gl_count, cfg.ll_count, cfg.synth, cfg.master_seed);
    return split_dataset(std::move(events), cfg.master_seed + 1);
}

std::vector<int> parse_pmu_list(const std::string& csv) {
    std::vector<int> out;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Modal-feature event identification: synthesis, training, adversarial sweeps"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, scale = "desk", out_dir = "out";
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "Run-config JSON (default: built-in desk scale)");
    app.add_option("--scale", scale, "Built-in config scale: desk or full")
        ->check(CLI::IsMember({"desk", "full"}));
    app.add_option("--seed", seed, "Override the master seed");
    app.add_option("--out", out_dir, "Output directory");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic event dataset");
    auto* train = app.add_subcommand("train", "Train LR and GB models on a dataset");
    std::string data_path;
    train->add_option("--data", data_path, "Dataset path (default: <out>/dataset.txt)");

    auto* attack_cmd = app.add_subcommand("attack", "Attack a single event, verbose trace");
    std::string event_id, pairing_str = "white-lr", pmu_csv;
    attack_cmd->add_option("--data", data_path, "Dataset path (default: <out>/dataset.txt)");
    attack_cmd->add_option("--event-id", event_id, "Event to attack (default: first test event)");
    attack_cmd->add_option("--pairing", pairing_str, "Attacker/operator pairing");
    attack_cmd->add_option("--pmus", pmu_csv, "Tampered PMU ids, comma separated")->required();

    auto* sweep = app.add_subcommand("sweep", "Full white/gray-box sweep over tampered-PMU counts");
    sweep->add_option("--data", data_path, "Dataset path (default: regenerate from config)");

    auto* report = app.add_subcommand("report", "Re-render aggregate series from a detail CSV");
    std::string detail_path;
    report->add_option("--detail", detail_path, "Existing detail.csv")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = resolve_config(config_path, scale, seed);
        fs::create_directories(out_dir);
        const std::string default_data = (fs::path(out_dir) / "dataset.txt").string();
        if (data_path.empty()) data_path = default_data;

        if (synth->parsed()) {
            const Dataset d = build_dataset(cfg);
            save_dataset(d, default_data);
            save_config(cfg, (fs::path(out_dir) / "config.json").string());
            std::cout << "wrote " << d.events.size() << " events to " << default_data << "\n";
            return 0;
        }

        if (train->parsed()) {
            const Dataset d = load_dataset(data_path);
            const TrainedModels models = train_models(d, cfg);
            save_model(Classifier{models.lr}, (fs::path(out_dir) / "lr.model").string());
            save_model(Classifier{models.gb}, (fs::path(out_dir) / "gb.model").string());
            const BaseCase base = evaluate_base_case(d, models, cfg);
            std::printf("base case: LR AUC %.4f, GB AUC %.4f (lr converged: %s)\n", base.lr_auc,
                        base.gb_auc, models.lr.converged ? "yes" : "no");
            return 0;
        }

        if (attack_cmd->parsed()) {
            const Dataset d = load_dataset(data_path);
            const TrainedModels models = train_models(d, cfg);
            const Pairing pairing = pairing_from_name(pairing_str);
            const bool atk_lr =
                pairing == Pairing::WhiteLr || pairing == Pairing::GrayAtkLrOpGb;
            const bool op_lr = pairing == Pairing::WhiteLr || pairing == Pairing::GrayAtkGbOpLr;
            const Classifier attacker = atk_lr ? Classifier{models.lr} : Classifier{models.gb};
            const Classifier oper = op_lr ? Classifier{models.lr} : Classifier{models.gb};

            const EventWindow* ev = nullptr;
            for (const auto* cand : d.events_in(Split::Test))
                if (event_id.empty() || cand->id == event_id) {
                    ev = cand;
                    break;
                }
            if (!ev) throw FormatError("event not found in test split: " + event_id);

            AttackConfig acfg = cfg.attack;
            acfg.tampered_pmus = parse_pmu_list(pmu_csv);
            const FeatureVector base = extract_features(*ev, cfg.p, cfg.m_prime);
            const FeasibleBounds bounds = make_feasible_bounds(base, cfg.feasible);
            std::printf("event %s label %+d\n", ev->id.c_str(), ev->label);
            std::printf("untampered: attacker p=%.4f operator p=%.4f\n",
                        predict_proba(attacker, base.values), predict_proba(oper, base.values));
            const AttackOutcome outcome =
                generate_adversarial(*ev, ev->label, attacker, acfg, bounds, cfg.p, cfg.m_prime);
            std::printf("final:      attacker p=%.4f operator p=%.4f\n",
                        predict_proba(attacker, outcome.features.values),
                        predict_proba(oper, outcome.features.values));
            std::printf("success=%s outer_iterations=%d%s%s\n", outcome.success ? "true" : "false",
                        outcome.outer_iterations, outcome.diagnostic.empty() ? "" : " diagnostic: ",
                        outcome.diagnostic.c_str());
            return outcome.diagnostic.empty() ? 0 : 1;
        }

        if (sweep->parsed()) {
            Dataset d;
            if (fs::exists(data_path)) {
                d = load_dataset(data_path);
            } else {
                d = build_dataset(cfg);
                save_dataset(d, data_path);
            }
            const TrainedModels models = train_models(d, cfg);
            const SweepResult result = run_sweep(d, models, cfg);
            emit_report(result, out_dir);
            int hard_errors = 0;
            for (const auto& c : result.cells) hard_errors += c.hard_errors;
            std::printf("base case: LR AUC %.4f, GB AUC %.4f\n", result.base.lr_auc,
                        result.base.gb_auc);
            for (const auto& a : result.aggregates)
                if (a.m_atk == (cfg.sweep.m_atk_max > 0 ? cfg.sweep.m_atk_max : cfg.sweep.set_size))
                    std::printf("%s m_atk=%d mean AUC %.4f\n", pairing_name(a.pairing), a.m_atk,
                                a.mean_auc);
            std::printf("report written to %s (%d per-event hard errors)\n", out_dir.c_str(),
                        hard_errors);
            return hard_errors == 0 ? 0 : 1;
        }

        if (report->parsed()) {
            SweepResult result;
            result.cells = load_detail_csv(detail_path);
            result.aggregates = aggregate_cells(result.cells);
            emit_report(result, out_dir);
            std::cout << "aggregate series written to " << out_dir << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
