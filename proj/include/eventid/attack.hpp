#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eventid/core.hpp"
#include "eventid/models.hpp"

namespace eventid {

/// Box constraints on the feature vector derived from an event's untampered
/// features: |omega| <= omega cap, sigma <= sigma cap (<= 0 so reconstructed
/// signals never grow), residue magnitudes inside a band. Angle coordinates
/// are unconstrained.
struct FeasibleBounds {
    FeatureLayout layout;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
};

struct FeasibleConfig {
    double omega_factor = 2.0;  // cap = factor * |omega_0| per coordinate
    double sigma_cap = 0.0;     // feasible sigma is (-inf, min(sigma_cap, 0)]
    double rmag_lo = 0.8;       // band = [lo, hi] * |R_0| per coordinate
    double rmag_hi = 2.0;
};

/// Bounds from the untampered feature values of one event.
FeasibleBounds make_feasible_bounds(const FeatureVector& untampered,
                                    const FeasibleConfig& cfg = {});

/// Coordinate-wise clamp onto the feasible set; angle coordinates untouched.
FeatureVector project_feasible(const FeatureVector& x, const FeasibleBounds& b);

struct AttackConfig {
    double eta = 0.05;         // step size in standardized feature units
    int max_outer = 25;        // K
    int inner_cap = 500;
    double boost_factor = 1.2;  // lambda > 1
    int boost_cap = 200;        // scaling iterations before BoostDiverged
    std::vector<int> tampered_pmus;  // S_Matk, 1-based ids
};

/// Perturbation vector in standardized feature space, tau = -y eta w.
Eigen::VectorXd design_tau_lr(const LrModel& m, int label, double eta);

/// Stump-importance gradient surrogate: tau_j = eta y sum_{m: j_m=j} (v1_m - v2_m).
Eigen::VectorXd design_tau_gb(const GbModel& m, int label, double eta);

Eigen::VectorXd design_tau(const Classifier& m, int label, double eta);

/// The boosting function g: scale every tampered PMU's signal (all channels)
/// by boost_factor until the tampered set is inside the top-m_prime energy
/// set on every channel. Untampered PMUs are returned bit-identical.
EventWindow boost_energy(const EventWindow& window, const std::vector<int>& tampered_pmus,
                         double boost_factor, int m_prime, int boost_cap = 200);

struct AttackOutcome {
    bool success = false;      // attacker model misclassifies final features
    bool attacked = false;     // false when the guard short-circuited
    int outer_iterations = 0;
    EventWindow tampered;      // x_atk
    FeatureVector features;    // final (projected) feature vector
    std::string diagnostic;    // nonempty when the attack aborted on an error
};

/// Algorithm: guard, boost, then alternate feature-space perturbation with
/// time-domain reconstruction until the attacker's model flips or K outer
/// iterations pass. Deterministic for fixed inputs.
AttackOutcome generate_adversarial(const EventWindow& window, int label, const Classifier& attacker,
                                   const AttackConfig& cfg, const FeasibleBounds& bounds, int p,
                                   int m_prime);

}  // namespace eventid
