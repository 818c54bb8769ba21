#pragma once

#include <cstdint>
#include <vector>

#include "eventid/core.hpp"
#include "eventid/modal.hpp"

namespace eventid {

/// One base mode of a class archetype with per-event jitter ranges. Drawn
/// values are uniform in [base - jitter, base + jitter].
struct ArchetypeMode {
    double sigma_base = -0.5;
    double sigma_jitter = 0.1;
    double omega_base = 2.0;
    double omega_jitter = 0.2;
    double rmag_base = 1.0;
    double rmag_jitter = 0.1;   // relative: drawn scale in [1-j, 1+j]
    double theta_base = 0.0;
    double theta_jitter = 0.3;
};

/// Class-conditional event generator parameters grounded in the modal signal
/// model. Residue magnitudes decay geometrically with PMU index so that the
/// highest-energy ordering is meaningful; angles drift linearly per PMU.
struct ClassArchetype {
    std::array<std::vector<ArchetypeMode>, kNumChannels> modes;
    double noise_sigma = 1e-3;       // std of the additive Gaussian term
    double residue_decay = 0.88;     // per-PMU magnitude factor
    double theta_pmu_step = 0.05;    // per-PMU angle offset, rad

    const std::vector<ArchetypeMode>& channel_modes(Channel c) const {
        return modes[static_cast<int>(c)];
    }
};

/// Default GL/LL archetypes. The classes differ in the dominant frequency
/// channel mode: generation loss shows a lower-frequency, deeper-damped
/// swing than load loss.
ClassArchetype default_archetype(int label);

/// Draw one event: jitter mode parameters per the archetype, evaluate the
/// modal sum per PMU/channel, add i.i.d. Gaussian noise. Deterministic per
/// seed. Throws InvalidArchetype if any drawn sigma could be positive.
EventWindow generate_event(const ClassArchetype& arch, int label, int num_pmus, int num_samples,
                           double ts, std::uint64_t seed);

/// The exact per-event modal parameters drawn for a seed, for consistency
/// checks against extraction (slot j corresponds to PMU j+1).
ModeSet drawn_modes(const ClassArchetype& arch, int num_pmus, double ts, std::uint64_t seed);

struct SynthConfig {
    int num_pmus = 20;
    int num_samples = 300;
    double ts = 1.0 / 30.0;
    ClassArchetype gl = default_archetype(kLabelGenLoss);
    ClassArchetype ll = default_archetype(kLabelLoadLoss);
};

/// gl_count GL + ll_count LL events with per-event seeds derived from the
/// master seed.
std::vector<EventWindow> generate_dataset(int gl_count, int ll_count, const SynthConfig& cfg,
                                          std::uint64_t seed);

}  // namespace eventid
