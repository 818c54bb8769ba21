#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "eventid/errors.hpp"

namespace eventid {

/// PMU measurement channels: voltage magnitude, voltage angle, frequency.
enum class Channel : int { Vm = 0, Va = 1, F = 2 };

inline constexpr std::array<Channel, 3> kChannels{Channel::Vm, Channel::Va, Channel::F};
inline constexpr int kNumChannels = 3;

const char* channel_name(Channel c);
Channel channel_from_name(const std::string& name);

/// Label convention: -1 = load loss (LL), +1 = generation loss (GL).
inline constexpr int kLabelLoadLoss = -1;
inline constexpr int kLabelGenLoss = +1;

inline void check_label(int label) {
    if (label != kLabelLoadLoss && label != kLabelGenLoss)
        throw InvalidLabel("label must be -1 (LL) or +1 (GL), got " + std::to_string(label));
}

/// One event's multi-channel PMU block. Samples are per-unit deviations from
/// the pre-event steady state; the window starts at event onset.
/// samples[c] is an M x N matrix (row = PMU, column = time step).
struct EventWindow {
    std::string id;
    int label = kLabelGenLoss;
    double ts = 1.0 / 30.0;  // sample period, seconds
    std::array<Eigen::MatrixXd, kNumChannels> samples;

    int num_pmus() const { return static_cast<int>(samples[0].rows()); }
    int num_samples() const { return static_cast<int>(samples[0].cols()); }

    const Eigen::MatrixXd& channel(Channel c) const { return samples[static_cast<int>(c)]; }
    Eigen::MatrixXd& channel(Channel c) { return samples[static_cast<int>(c)]; }

    /// All three channels present with identical geometry, valid label, ts > 0.
    void validate() const;
};

/// Coordinate classes of the feature vector.
enum class FeatureClass : int { Omega = 0, Sigma = 1, ResidueMag = 2, ResidueAngle = 3 };

/// Fixed flattening of modal features. Per channel the layout is
///   [omega_1..omega_p'][sigma_1..sigma_p'][ |R|_{k,i} k-major ][ theta_{k,i} k-major ]
/// so d = |C| * (2 p' + 2 p' M').
struct FeatureLayout {
    int p_prime = 0;
    int m_prime = 0;

    FeatureLayout() = default;
    FeatureLayout(int p_prime_, int m_prime_) : p_prime(p_prime_), m_prime(m_prime_) {}

    int per_channel() const { return 2 * p_prime + 2 * p_prime * m_prime; }
    int dim() const { return kNumChannels * per_channel(); }

    int channel_base(Channel c) const { return static_cast<int>(c) * per_channel(); }

    int omega_index(Channel c, int k) const { return channel_base(c) + k; }
    int sigma_index(Channel c, int k) const { return channel_base(c) + p_prime + k; }
    int rmag_index(Channel c, int k, int slot) const {
        return channel_base(c) + 2 * p_prime + k * m_prime + slot;
    }
    int theta_index(Channel c, int k, int slot) const {
        return channel_base(c) + 2 * p_prime + p_prime * m_prime + k * m_prime + slot;
    }

    struct Coord {
        Channel channel;
        FeatureClass cls;
        int mode;  // 0-based mode index k
        int slot;  // 0-based PMU slot, -1 for omega/sigma
    };
    /// Inverse of the index functions.
    Coord describe(int index) const;

    bool operator==(const FeatureLayout&) const = default;
};

/// Flattened modal feature vector (the output of h).
struct FeatureVector {
    FeatureLayout layout;
    Eigen::VectorXd values;
    /// Per channel, the M' PMU ids (1-based) whose residues fill the slots,
    /// in slot order.
    std::array<std::vector<int>, kNumChannels> selected_pmus;

    const std::vector<int>& pmus(Channel c) const { return selected_pmus[static_cast<int>(c)]; }
};

enum class Split : int { Test = 0, TrainLr = 1, TrainGb = 2 };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct Dataset {
    std::vector<EventWindow> events;
    std::map<std::string, Split> split_assignment;

    std::vector<const EventWindow*> events_in(Split s) const;
};

/// Stratified 20/40/40 split, deterministic per seed.
Dataset split_dataset(std::vector<EventWindow> events, std::uint64_t seed);

/// Line-delimited text persistence. `path` holds the events, `path + ".splits"`
/// the split manifest. Round trip is bit-exact.
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace eventid
