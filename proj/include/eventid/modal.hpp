#pragma once

#include <vector>

#include "eventid/core.hpp"

namespace eventid {

/// One retained mode: the representative of a complex-conjugate pole pair
/// (omega >= 0) with per-PMU residues. A real pole (omega == 0) occupies a
/// pair slot alone; its residue magnitude is stored halved so that the
/// uniform reconstruction formula
///   x(n) = sum_k 2 |R_k| e^{sigma_k n Ts} cos(omega_k n Ts + theta_k)
/// stays exact, with theta in {0, pi} carrying the sign.
struct Mode {
    double sigma = 0.0;  // damping, 1/s (real part of lambda)
    double omega = 0.0;  // angular frequency, rad/s (>= 0 canonical)
    struct Residue {
        double mag = 0.0;    // |R| >= 0
        double angle = 0.0;  // theta, (-pi, pi] at extraction time
    };
    std::vector<Residue> residues;  // one per selected PMU, slot order

    double residue_energy() const {
        double e = 0.0;
        for (const auto& r : residues) e += r.mag * r.mag;
        return e;
    }
};

/// Per-channel modal parameters for the p' retained modes over M' PMUs.
struct ModeSet {
    std::array<std::vector<Mode>, kNumChannels> modes;  // p' modes per channel
    std::array<std::vector<int>, kNumChannels> selected_pmus;
    double ts = 1.0 / 30.0;

    const std::vector<Mode>& channel_modes(Channel c) const { return modes[static_cast<int>(c)]; }
};

/// Sum of squared deviation samples for one PMU signal. `pmu` is 1-based.
double signal_energy(const EventWindow& window, Channel channel, int pmu);

/// The m_prime PMUs with largest signal energy, descending; ties broken by
/// ascending PMU id. Returned ids are 1-based.
std::vector<int> select_pmus(const EventWindow& window, Channel channel, int m_prime);

/// Joint matrix-pencil fit of p shared poles across the given PMU signals of
/// one channel, with per-PMU residues by linear least squares. Returns the
/// p' = p/2 conjugate-pair representatives ordered by descending aggregate
/// residue energy. Throws RankDeficient if the pencil cannot support p modes.
std::vector<Mode> decompose(const EventWindow& window, Channel channel,
                            const std::vector<int>& pmus, int p);

/// The transform h: per channel select M' PMUs, fit p modes, flatten.
FeatureVector extract_features(const EventWindow& window, int p, int m_prime);

/// Rebuild a ModeSet view of a feature vector (inverse of flattening).
ModeSet modes_from_features(const FeatureVector& features, double ts);

/// h^{-1} for one PMU: noiseless time series of length N from the feature
/// vector's modes for `pmu` (must be among the channel's selected PMUs).
Eigen::VectorXd reconstruct(const FeatureVector& features, int pmu, Channel channel, int n_samples,
                            double ts);

/// Forward model shared with synthgen: evaluate the modal sum for one PMU slot.
Eigen::VectorXd evaluate_modes(const std::vector<Mode>& modes, int slot, int n_samples, double ts);

}  // namespace eventid
