#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eventid/attack.hpp"
#include "eventid/core.hpp"
#include "eventid/models.hpp"
#include "eventid/synthgen.hpp"

namespace eventid {

/// Attacker/operator model pairing. White box: same model on both sides.
/// Gray box: the attacker optimizes against the model the operator does not
/// use (each trained on its own split).
enum class Pairing : int { WhiteLr = 0, WhiteGb = 1, GrayAtkGbOpLr = 2, GrayAtkLrOpGb = 3 };

inline constexpr std::array<Pairing, 4> kAllPairings{Pairing::WhiteLr, Pairing::WhiteGb,
                                                     Pairing::GrayAtkGbOpLr,
                                                     Pairing::GrayAtkLrOpGb};

const char* pairing_name(Pairing p);
Pairing pairing_from_name(const std::string& name);

struct SweepSpec {
    int n_sets = 10;
    int set_size = 10;  // PMUs per random attack set
    int m_atk_min = 1;
    int m_atk_max = 0;  // 0 = set_size
    std::vector<Pairing> pairings{kAllPairings.begin(), kAllPairings.end()};
};

/// Every knob of a run; one declarative record, fully reproducible together
/// with the master seed.
struct RunConfig {
    SynthConfig synth;
    int gl_count = 100;
    int ll_count = 100;
    int p = 6;
    int m_prime = 10;
    LrOptions lr;
    GbOptions gb;
    AttackConfig attack;  // tampered_pmus left empty; the sweep fills prefixes
    FeasibleConfig feasible;
    SweepSpec sweep;
    std::uint64_t master_seed = 42;
    int threads = 0;  // 0 = hardware concurrency
};

/// Desk scale (default) or the full-survey geometry.
RunConfig default_config(const std::string& scale = "desk");

void save_config(const RunConfig& cfg, const std::string& path);
RunConfig load_config(const std::string& path);

/// Feature matrix for a list of events, rows in the given order.
Eigen::MatrixXd feature_matrix(const std::vector<const EventWindow*>& events, int p, int m_prime,
                               int threads = 0);

struct TrainedModels {
    LrModel lr;
    GbModel gb;
};

TrainedModels train_models(const Dataset& dataset, const RunConfig& cfg);

struct BaseCase {
    double lr_auc = 0.0;
    double gb_auc = 0.0;
};

/// Train each model on its own split and score the shared untampered test set.
BaseCase run_base_case(const Dataset& dataset, const RunConfig& cfg);
BaseCase evaluate_base_case(const Dataset& dataset, const TrainedModels& models,
                            const RunConfig& cfg);

struct SweepCell {
    Pairing pairing;
    int m_atk = 0;
    int set_index = 0;
    double auc = 0.0;
    double success_rate = 0.0;       // operator misclassification rate
    double mean_outer_iters = 0.0;
    int hard_errors = 0;             // per-event attack failures (logged, not fatal)
};

struct SweepAggregate {
    Pairing pairing;
    int m_atk = 0;
    double mean_auc = 0.0;
    double std_auc = 0.0;
    double mean_success_rate = 0.0;
    double mean_outer_iters = 0.0;
};

struct SweepResult {
    BaseCase base;
    std::vector<SweepCell> cells;          // fixed order: pairing, m_atk, set
    std::vector<SweepAggregate> aggregates;
};

/// The random attack sets drawn for a config (set_size distinct PMU ids per
/// set); attack prefixes of length m_atk are taken from these.
std::vector<std::vector<int>> draw_attack_sets(const RunConfig& cfg);

SweepResult run_sweep(const Dataset& dataset, const TrainedModels& models, const RunConfig& cfg);

std::vector<SweepAggregate> aggregate_cells(const std::vector<SweepCell>& cells);

/// detail.csv plus one aggregated series file per pairing; byte-identical on
/// re-emission.
void emit_report(const SweepResult& result, const std::string& out_dir);
std::vector<SweepCell> load_detail_csv(const std::string& path);

}  // namespace eventid
