#include "eventid/synthgen.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace eventid {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_archetype(const ClassArchetype& arch) {
    for (Channel c : kChannels) {
        if (arch.channel_modes(c).empty())
            throw InvalidArchetype(std::string("archetype has no modes for channel ") +
                                   channel_name(c));
        for (const auto& m : arch.channel_modes(c))
            if (m.sigma_base + m.sigma_jitter > 0.0)
                throw InvalidArchetype("archetype mode may draw sigma > 0 (growing response)");
    }
    if (arch.noise_sigma < 0.0) throw InvalidArchetype("noise sigma must be >= 0");
}

std::array<std::vector<Mode>, kNumChannels> draw_mode_params(const ClassArchetype& arch,
                                                             int num_pmus, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::array<std::vector<Mode>, kNumChannels> out;
    for (Channel c : kChannels) {
        auto& list = out[static_cast<int>(c)];
        for (const ArchetypeMode& am : arch.channel_modes(c)) {
            Mode m;
            m.sigma = am.sigma_base + am.sigma_jitter * unit(rng);
            m.omega = am.omega_base + am.omega_jitter * unit(rng);
            const double rscale = 1.0 + am.rmag_jitter * unit(rng);
            const double theta0 = am.theta_base + am.theta_jitter * unit(rng);
            m.residues.resize(static_cast<std::size_t>(num_pmus));
            double decay = 1.0;
            for (int i = 0; i < num_pmus; ++i) {
                m.residues[static_cast<std::size_t>(i)].mag = am.rmag_base * rscale * decay;
                m.residues[static_cast<std::size_t>(i)].angle =
                    std::remainder(theta0 + arch.theta_pmu_step * i, kTwoPi);
                decay *= arch.residue_decay;
            }
            list.push_back(std::move(m));
        }
    }
    return out;
}

ArchetypeMode mode(double sigma, double sigma_j, double freq_hz, double freq_j_hz, double rmag,
                   double theta) {
    ArchetypeMode m;
    m.sigma_base = sigma;
    m.sigma_jitter = sigma_j;
    m.omega_base = kTwoPi * freq_hz;
    m.omega_jitter = kTwoPi * freq_j_hz;
    m.rmag_base = rmag;
    m.rmag_jitter = 0.1;
    m.theta_base = theta;
    m.theta_jitter = 0.3;
    return m;
}

}  // namespace

ClassArchetype default_archetype(int label) {
    check_label(label);
    ClassArchetype a;
    auto& vm = a.modes[static_cast<int>(Channel::Vm)];
    auto& va = a.modes[static_cast<int>(Channel::Va)];
    auto& f = a.modes[static_cast<int>(Channel::F)];
    if (label == kLabelGenLoss) {
        // Generation loss: low-frequency, deeply damped dominant swing.
        f = {mode(-0.80, 0.10, 0.80, 0.05, 0.050, 0.4),
             mode(-1.10, 0.10, 1.90, 0.05, 0.020, -1.0),
             mode(-0.55, 0.05, 0.35, 0.03, 0.030, 0.9)};
        vm = {mode(-0.60, 0.10, 1.10, 0.05, 0.040, 0.2),
              mode(-0.90, 0.10, 2.20, 0.08, 0.015, -0.7),
              mode(-0.40, 0.05, 0.50, 0.04, 0.020, 1.2)};
        va = {mode(-0.70, 0.10, 0.95, 0.05, 0.060, -0.3),
              mode(-1.00, 0.10, 2.05, 0.08, 0.025, 0.8),
              mode(-0.45, 0.05, 0.40, 0.04, 0.030, -1.1)};
    } else {
        // Load loss: the dominant frequency-channel mode sits higher and is
        // only lightly damped.
        f = {mode(-0.35, 0.10, 1.30, 0.05, 0.045, 0.4),
             mode(-1.05, 0.10, 2.00, 0.05, 0.020, -1.0),
             mode(-0.50, 0.05, 0.45, 0.03, 0.030, 0.9)};
        // Vm/Va differ only mildly between the classes; the frequency channel
        // carries the separating dynamics.
        vm = {mode(-0.55, 0.10, 1.13, 0.05, 0.040, 0.2),
              mode(-0.88, 0.10, 2.23, 0.08, 0.015, -0.7),
              mode(-0.37, 0.05, 0.52, 0.04, 0.020, 1.2)};
        va = {mode(-0.65, 0.10, 0.98, 0.05, 0.060, -0.3),
              mode(-0.97, 0.10, 2.08, 0.08, 0.025, 0.8),
              mode(-0.42, 0.05, 0.42, 0.04, 0.030, -1.1)};
    }
    return a;
}

ModeSet drawn_modes(const ClassArchetype& arch, int num_pmus, double ts, std::uint64_t seed) {
    check_archetype(arch);
    std::mt19937_64 rng(seed);
    ModeSet ms;
    ms.ts = ts;
    ms.modes = draw_mode_params(arch, num_pmus, rng);
    for (Channel c : kChannels) {
        auto& sel = ms.selected_pmus[static_cast<int>(c)];
        sel.resize(static_cast<std::size_t>(num_pmus));
        for (int i = 0; i < num_pmus; ++i) sel[static_cast<std::size_t>(i)] = i + 1;
    }
    return ms;
}

EventWindow generate_event(const ClassArchetype& arch, int label, int num_pmus, int num_samples,
                           double ts, std::uint64_t seed) {
    check_label(label);
    check_archetype(arch);
    if (num_pmus < 1 || num_samples < 2 || ts <= 0.0)
        throw InvalidCount("invalid event geometry");

    std::mt19937_64 rng(seed);
    const auto modes = draw_mode_params(arch, num_pmus, rng);
    std::normal_distribution<double> noise(0.0, 1.0);

    EventWindow e;
    e.label = label;
    e.ts = ts;
    for (Channel c : kChannels) {
        Eigen::MatrixXd& block = e.channel(c);
        block.resize(num_pmus, num_samples);
        for (int i = 0; i < num_pmus; ++i)
            block.row(i) = evaluate_modes(modes[static_cast<int>(c)], i, num_samples, ts).transpose();
        if (arch.noise_sigma > 0.0)
            for (int i = 0; i < num_pmus; ++i)
                for (int n = 0; n < num_samples; ++n) block(i, n) += arch.noise_sigma * noise(rng);
    }
    return e;
}

std::vector<EventWindow> generate_dataset(int gl_count, int ll_count, const SynthConfig& cfg,
                                          std::uint64_t seed) {
    if (gl_count < 1 || ll_count < 1) throw InvalidCount("event counts must be >= 1");
    std::mt19937_64 seeder(seed);
    std::vector<EventWindow> events;
    events.reserve(static_cast<std::size_t>(gl_count + ll_count));
    for (int i = 0; i < gl_count; ++i) {
        EventWindow e = generate_event(cfg.gl, kLabelGenLoss, cfg.num_pmus, cfg.num_samples, cfg.ts,
                                       seeder());
        e.id = "gl-" + std::to_string(i);
        events.push_back(std::move(e));
    }
    for (int i = 0; i < ll_count; ++i) {
        EventWindow e = generate_event(cfg.ll, kLabelLoadLoss, cfg.num_pmus, cfg.num_samples, cfg.ts,
                                       seeder());
        e.id = "ll-" + std::to_string(i);
        events.push_back(std::move(e));
    }
    return events;
}

}  // namespace eventid
