#include "eventid/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "eventid/modal.hpp"

namespace eventid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const Standardizer& standardizer_of(const Classifier& m) {
    return std::visit([](const auto& model) -> const Standardizer& { return model.standardizer; },
                      m);
}

void check_tampered_set(const std::vector<int>& tampered, int num_pmus) {
    if (tampered.empty()) throw InvalidCount("tampered PMU set must be nonempty");
    std::set<int> seen;
    for (int id : tampered) {
        if (id < 1 || id > num_pmus)
            throw InvalidCount("tampered PMU id out of range: " + std::to_string(id));
        if (!seen.insert(id).second)
            throw InvalidCount("tampered PMU ids must be distinct");
    }
}

}  // namespace

bool FeasibleBounds::contains(const Eigen::VectorXd& x, double tol) const {
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x(i) < lower(i) - tol || x(i) > upper(i) + tol) return false;
    return true;
}

FeasibleBounds make_feasible_bounds(const FeatureVector& untampered, const FeasibleConfig& cfg) {
    FeasibleBounds b;
    b.layout = untampered.layout;
    const int d = b.layout.dim();
    b.lower = Eigen::VectorXd::Constant(d, -kInf);
    b.upper = Eigen::VectorXd::Constant(d, kInf);
    for (int i = 0; i < d; ++i) {
        const auto coord = b.layout.describe(i);
        const double x0 = untampered.values(i);
        switch (coord.cls) {
            case FeatureClass::Omega: {
                const double cap = cfg.omega_factor * std::abs(x0);
                b.lower(i) = -cap;
                b.upper(i) = cap;
                break;
            }
            case FeatureClass::Sigma:
                b.upper(i) = std::min(cfg.sigma_cap, 0.0);
                break;
            case FeatureClass::ResidueMag:
                b.lower(i) = cfg.rmag_lo * std::abs(x0);
                b.upper(i) = cfg.rmag_hi * std::abs(x0);
                break;
            case FeatureClass::ResidueAngle:
                break;  // unconstrained
        }
    }
    return b;
}

FeatureVector project_feasible(const FeatureVector& x, const FeasibleBounds& b) {
    if (x.layout != b.layout) throw InvalidCount("feasible bounds built for a different layout");
    FeatureVector out = x;
    out.values = x.values.cwiseMax(b.lower).cwiseMin(b.upper);
    return out;
}

Eigen::VectorXd design_tau_lr(const LrModel& m, int label, double eta) {
    check_label(label);
    if (eta <= 0.0) throw InvalidCount("step size eta must be > 0");
    return -static_cast<double>(label) * eta * m.w;
}

Eigen::VectorXd design_tau_gb(const GbModel& m, int label, double eta) {
    check_label(label);
    if (eta <= 0.0) throw InvalidCount("step size eta must be > 0");
    Eigen::VectorXd tau = Eigen::VectorXd::Zero(m.standardizer.mean.size());
    for (const Stump& st : m.stumps) tau(st.feature) += st.left - st.right;
    return eta * static_cast<double>(label) * tau;
}

Eigen::VectorXd design_tau(const Classifier& m, int label, double eta) {
    if (const auto* lr = std::get_if<LrModel>(&m)) return design_tau_lr(*lr, label, eta);
    return design_tau_gb(std::get<GbModel>(m), label, eta);
}

EventWindow boost_energy(const EventWindow& window, const std::vector<int>& tampered_pmus,
                         double boost_factor, int m_prime, int boost_cap) {
    if (boost_factor <= 1.0) throw InvalidCount("boost factor must be > 1");
    if (m_prime < 1 || m_prime > window.num_pmus())
        throw InvalidCount("m_prime out of range in boost_energy");
    check_tampered_set(tampered_pmus, window.num_pmus());

    EventWindow out = window;
    const int m = out.num_pmus();
    std::array<std::vector<double>, kNumChannels> energy;
    for (Channel c : kChannels) {
        auto& e = energy[static_cast<int>(c)];
        e.resize(static_cast<std::size_t>(m));
        for (int i = 1; i <= m; ++i) e[static_cast<std::size_t>(i - 1)] = signal_energy(out, c, i);
    }

    // Top-m_prime membership under the (energy desc, id asc) ordering.
    auto in_top_set = [&](Channel c, int id) {
        const auto& e = energy[static_cast<int>(c)];
        const double ei = e[static_cast<std::size_t>(id - 1)];
        int better = 0;
        for (int j = 1; j <= m; ++j) {
            const double ej = e[static_cast<std::size_t>(j - 1)];
            if (ej > ei || (ej == ei && j < id)) ++better;
        }
        return better < m_prime;
    };
    auto all_included = [&] {
        for (Channel c : kChannels)
            for (int id : tampered_pmus)
                if (!in_top_set(c, id)) return false;
        return true;
    };

    int boosts = 0;
    while (!all_included()) {
        if (++boosts > boost_cap)
            throw BoostDiverged("tampered PMUs never reached the top-" + std::to_string(m_prime) +
                                " energy set after " + std::to_string(boost_cap) + " boosts");
        for (Channel c : kChannels) {
            auto& block = out.channel(c);
            for (int id : tampered_pmus) {
                block.row(id - 1) *= boost_factor;
                energy[static_cast<int>(c)][static_cast<std::size_t>(id - 1)] =
                    block.row(id - 1).squaredNorm();
            }
        }
    }
    return out;
}

AttackOutcome generate_adversarial(const EventWindow& window, int label, const Classifier& attacker,
                                   const AttackConfig& cfg, const FeasibleBounds& bounds, int p,
                                   int m_prime) {
    check_label(label);
    if (cfg.eta <= 0.0 || cfg.max_outer < 1 || cfg.boost_factor <= 1.0 || cfg.inner_cap < 1)
        throw InvalidCount("invalid attack configuration");
    check_tampered_set(cfg.tampered_pmus, window.num_pmus());

    AttackOutcome out;
    out.tampered = window;
    out.features = extract_features(window, p, m_prime);

    // Algorithm guard: nothing to do if the attacker's model is already wrong.
    if (predict_label(attacker, out.features.values) != label) {
        out.success = true;
        return out;
    }

    const int n_samples = window.num_samples();
    const Standardizer& std_tf = standardizer_of(attacker);
    out.attacked = true;

    try {
        out.tampered = boost_energy(window, cfg.tampered_pmus, cfg.boost_factor, m_prime,
                                    cfg.boost_cap);
        out.features = project_feasible(extract_features(out.tampered, p, m_prime), bounds);

        while (out.outer_iterations < cfg.max_outer) {
            if (predict_label(attacker, out.features.values) != label) break;
            ++out.outer_iterations;

            // The perturbation is designed in standardized space; map it back
            // through the attacker's feature scales before adding.
            const Eigen::VectorXd tau_raw =
                design_tau(attacker, label, cfg.eta).cwiseProduct(std_tf.scale);
            for (int step = 0; step < cfg.inner_cap; ++step) {
                if (predict_label(attacker, out.features.values) != label) break;
                out.features.values += tau_raw;
                out.features = project_feasible(out.features, bounds);
            }

            // Realize the perturbed features on the attacker-controlled PMUs,
            // re-boost, re-extract.
            for (Channel c : kChannels) {
                const auto& sel = out.features.pmus(c);
                for (int id : cfg.tampered_pmus) {
                    if (std::find(sel.begin(), sel.end(), id) == sel.end()) continue;
                    out.tampered.channel(c).row(id - 1) =
                        reconstruct(out.features, id, c, n_samples, window.ts).transpose();
                }
            }
            out.tampered = boost_energy(out.tampered, cfg.tampered_pmus, cfg.boost_factor, m_prime,
                                        cfg.boost_cap);
            out.features = project_feasible(extract_features(out.tampered, p, m_prime), bounds);
        }
    } catch (const RankDeficient& e) {
        out.diagnostic = e.what();
        out.success = false;
        return out;
    } catch (const BoostDiverged& e) {
        out.diagnostic = e.what();
        out.success = false;
        return out;
    }

    out.success = predict_label(attacker, out.features.values) != label;
    return out;
}

}  // namespace eventid
