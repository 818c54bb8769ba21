#include "eventid/modal.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace eventid {

namespace {

// Relative eigenvalue floor of the Hankel Gram matrix below which the pencil
// is declared unable to support the requested order. Eigenvalues of the Gram
// matrix are squared singular values, so this corresponds to a singular-value
// ratio of 1e-6.
constexpr double kRankTol = 1e-12;

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);  // (-pi, pi], remainder gives [-pi, pi]
    if (a <= -kPi) a = kPi;
    return a;
}

// Top-q eigenpairs of a symmetric PSD matrix by blocked orthogonal iteration
// with Rayleigh-Ritz extraction, eigenvalues ascending. The Gram matrices here
// have a large spectral gap past the signal rank, so this settles in a handful
// of iterations; returns false on stall and the caller does a dense solve.
bool top_eigenpairs(const Eigen::MatrixXd& g, int q, Eigen::VectorXd& evals,
                    Eigen::MatrixXd& evecs) {
    const int n = static_cast<int>(g.rows());
    if (q >= n) return false;
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, q);
    const double gnorm = g.norm();
    if (!(gnorm > 0.0)) {
        evals = Eigen::VectorXd::Zero(q);
        evecs = v;
        return true;
    }
    for (int iter = 0; iter < 300; ++iter) {
        const Eigen::MatrixXd z = g * v;
        Eigen::MatrixXd b = v.transpose() * z;
        b = 0.5 * (b + b.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(b);
        if (ritz.info() != Eigen::Success) return false;
        if ((z - v * b).norm() <= 1e-12 * gnorm) {
            evecs = v * ritz.eigenvectors();
            evals = ritz.eigenvalues();
            return true;
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
        v = qr.householderQ() * Eigen::MatrixXd::Identity(n, q);
    }
    return false;
}

void check_pmu_ids(const EventWindow& window, const std::vector<int>& pmus) {
    for (int id : pmus)
        if (id < 1 || id > window.num_pmus())
            throw InvalidCount("PMU id " + std::to_string(id) + " out of range 1.." +
                               std::to_string(window.num_pmus()));
}

}  // namespace

double signal_energy(const EventWindow& window, Channel channel, int pmu) {
    if (pmu < 1 || pmu > window.num_pmus())
        throw InvalidCount("PMU id out of range: " + std::to_string(pmu));
    return window.channel(channel).row(pmu - 1).squaredNorm();
}

std::vector<int> select_pmus(const EventWindow& window, Channel channel, int m_prime) {
    const int m = window.num_pmus();
    if (m_prime < 1 || m_prime > m)
        throw InvalidCount("m_prime must be in 1..M, got " + std::to_string(m_prime));
    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(m);
    for (int i = 1; i <= m; ++i) ranked.emplace_back(signal_energy(window, channel, i), i);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int> out(m_prime);
    for (int i = 0; i < m_prime; ++i) out[i] = ranked[i].second;
    return out;
}

std::vector<Mode> decompose(const EventWindow& window, Channel channel,
                            const std::vector<int>& pmus, int p) {
    if (p < 2 || p % 2 != 0) throw InvalidCount("mode count p must be even and >= 2");
    if (pmus.empty()) throw InvalidCount("decompose needs at least one PMU");
    check_pmu_ids(window, pmus);

    const int n = window.num_samples();
    if (n < 2 * p + 2)
        throw RankDeficient("signal too short for " + std::to_string(p) + " modes (N=" +
                            std::to_string(n) + ")");

    const int pencil = n / 2;          // pencil parameter L
    const int rows = n - pencil;       // windows per signal
    const int cols = pencil + 1;
    const auto& block = window.channel(channel);

    // Gram matrix of the stacked per-PMU Hankel matrices, built with a
    // sliding-window recurrence per diagonal instead of forming the Hankels.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(cols, cols);
    for (int id : pmus) {
        const auto s = block.row(id - 1);
        for (int d = 0; d < cols; ++d) {
            double acc = 0.0;
            for (int r = 0; r < rows; ++r) acc += s(r) * s(r + d);
            gram(0, d) += acc;
            for (int a = 1; a + d < cols; ++a) {
                acc += s(a - 1 + rows) * s(a - 1 + d + rows) - s(a - 1) * s(a - 1 + d);
                gram(a, a + d) += acc;
            }
        }
    }
    gram = gram.selfadjointView<Eigen::Upper>();

    Eigen::VectorXd evals;   // ascending, top p only
    Eigen::MatrixXd basis;   // dominant p-dimensional row space
    if (!top_eigenpairs(gram, p, evals, basis)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success) throw RankDeficient("Gram eigendecomposition failed");
        evals = eig.eigenvalues().tail(p);
        basis = eig.eigenvectors().rightCols(p);
    }
    const double ev_max = evals(p - 1);
    if (!(ev_max > 0.0) || evals(0) / ev_max < kRankTol)
        throw RankDeficient("pencil cannot support " + std::to_string(p) +
                            " modes (signal flat or lower rank)");

    // The one-column shift inside the dominant row space gives the poles
    // (Hua-Sarkar pencil with hard truncation).
    const Eigen::MatrixXd shift =
        basis.topRows(cols - 1).colPivHouseholderQr().solve(basis.bottomRows(cols - 1));
    Eigen::EigenSolver<Eigen::MatrixXd> poles(shift);
    if (poles.info() != Eigen::Success) throw RankDeficient("pole eigendecomposition failed");

    std::vector<std::complex<double>> lambda(p);
    Eigen::MatrixXcd vander(n, p);
    for (int k = 0; k < p; ++k) {
        const std::complex<double> z = poles.eigenvalues()(k);
        if (std::abs(z) < 1e-300) throw RankDeficient("degenerate pole at zero");
        lambda[k] = std::log(z) / window.ts;
        std::complex<double> zn = 1.0;
        for (int t = 0; t < n; ++t) {
            vander(t, k) = zn;
            zn *= z;
        }
    }

    // Per-PMU residues, shared Vandermonde least squares.
    Eigen::MatrixXcd rhs(n, static_cast<int>(pmus.size()));
    for (std::size_t j = 0; j < pmus.size(); ++j)
        rhs.col(static_cast<int>(j)) = block.row(pmus[j] - 1).transpose().cast<std::complex<double>>();
    const Eigen::MatrixXcd residues = vander.colPivHouseholderQr().solve(rhs);

    // Group the p poles into conjugate-pair representatives (omega >= 0).
    const double omega_tol = 1e-9 * kPi / window.ts;
    std::vector<bool> used(p, false);
    std::vector<Mode> reps;
    for (int k = 0; k < p; ++k) {
        if (used[k]) continue;
        const double im = lambda[k].imag();
        Mode mode;
        mode.residues.resize(pmus.size());
        if (std::abs(im) <= omega_tol) {
            used[k] = true;
            mode.sigma = lambda[k].real();
            mode.omega = 0.0;
            for (std::size_t j = 0; j < pmus.size(); ++j) {
                const double r = residues(k, static_cast<int>(j)).real();
                mode.residues[j].mag = std::abs(r) / 2.0;  // halved, see header
                mode.residues[j].angle = r >= 0.0 ? 0.0 : kPi;
            }
        } else {
            // Find the best conjugate partner among unused poles.
            int partner = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int l = 0; l < p; ++l) {
                if (used[l] || l == k) continue;
                if (lambda[l].imag() * im >= 0.0) continue;
                const double dist = std::abs(lambda[l] - std::conj(lambda[k]));
                if (dist < best) {
                    best = dist;
                    partner = l;
                }
            }
            used[k] = true;
            const int rep = im > 0.0 ? k : partner;
            if (partner >= 0) used[partner] = true;
            const int canon = rep >= 0 ? rep : k;
            if (partner >= 0) {
                mode.sigma = 0.5 * (lambda[k].real() + lambda[partner].real());
                mode.omega = std::abs(0.5 * (lambda[k].imag() - lambda[partner].imag()));
            } else {
                mode.sigma = lambda[canon].real();
                mode.omega = std::abs(lambda[canon].imag());
            }
            for (std::size_t j = 0; j < pmus.size(); ++j) {
                std::complex<double> r = residues(canon, static_cast<int>(j));
                if (canon == k && im < 0.0 && partner < 0) r = std::conj(r);
                mode.residues[j].mag = std::abs(r);
                mode.residues[j].angle = wrap_angle(std::arg(r));
            }
        }
        reps.push_back(std::move(mode));
    }

    std::stable_sort(reps.begin(), reps.end(), [](const Mode& a, const Mode& b) {
        return a.residue_energy() > b.residue_energy();
    });
    const std::size_t p_prime = static_cast<std::size_t>(p / 2);
    if (reps.size() > p_prime) reps.resize(p_prime);
    while (reps.size() < p_prime) {
        // Fewer representatives than slots can only happen when every pole is
        // strictly complex and pairing collapsed duplicates; pad with silence.
        Mode zero;
        zero.residues.resize(pmus.size());
        reps.push_back(std::move(zero));
    }
    return reps;
}

FeatureVector extract_features(const EventWindow& window, int p, int m_prime) {
    if (p < 2 || p % 2 != 0) throw InvalidCount("mode count p must be even and >= 2");
    FeatureVector fv;
    fv.layout = FeatureLayout(p / 2, m_prime);
    fv.values = Eigen::VectorXd::Zero(fv.layout.dim());
    for (Channel c : kChannels) {
        std::vector<int> pmus = select_pmus(window, c, m_prime);
        std::vector<Mode> modes;
        try {
            modes = decompose(window, c, pmus, p);
        } catch (const RankDeficient& e) {
            throw RankDeficient(std::string("channel ") + channel_name(c) + ": " + e.what());
        }
        for (int k = 0; k < fv.layout.p_prime; ++k) {
            fv.values(fv.layout.omega_index(c, k)) = modes[k].omega;
            fv.values(fv.layout.sigma_index(c, k)) = modes[k].sigma;
            for (int j = 0; j < m_prime; ++j) {
                fv.values(fv.layout.rmag_index(c, k, j)) = modes[k].residues[j].mag;
                fv.values(fv.layout.theta_index(c, k, j)) = modes[k].residues[j].angle;
            }
        }
        fv.selected_pmus[static_cast<int>(c)] = std::move(pmus);
    }
    return fv;
}

ModeSet modes_from_features(const FeatureVector& features, double ts) {
    ModeSet ms;
    ms.ts = ts;
    ms.selected_pmus = features.selected_pmus;
    for (Channel c : kChannels) {
        auto& list = ms.modes[static_cast<int>(c)];
        list.resize(features.layout.p_prime);
        for (int k = 0; k < features.layout.p_prime; ++k) {
            Mode& m = list[k];
            m.omega = features.values(features.layout.omega_index(c, k));
            m.sigma = features.values(features.layout.sigma_index(c, k));
            m.residues.resize(features.layout.m_prime);
            for (int j = 0; j < features.layout.m_prime; ++j) {
                m.residues[j].mag = features.values(features.layout.rmag_index(c, k, j));
                m.residues[j].angle = features.values(features.layout.theta_index(c, k, j));
            }
        }
    }
    return ms;
}

Eigen::VectorXd evaluate_modes(const std::vector<Mode>& modes, int slot, int n_samples, double ts) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_samples);
    for (const Mode& m : modes) {
        const auto& r = m.residues.at(static_cast<std::size_t>(slot));
        for (int n = 0; n < n_samples; ++n) {
            const double t = n * ts;
            x(n) += 2.0 * r.mag * std::exp(m.sigma * t) * std::cos(m.omega * t + r.angle);
        }
    }
    return x;
}

Eigen::VectorXd reconstruct(const FeatureVector& features, int pmu, Channel channel, int n_samples,
                            double ts) {
    const auto& sel = features.pmus(channel);
    const auto it = std::find(sel.begin(), sel.end(), pmu);
    if (it == sel.end())
        throw PmuNotSelected("PMU " + std::to_string(pmu) + " not among selected PMUs for channel " +
                             channel_name(channel));
    const int slot = static_cast<int>(it - sel.begin());
    const ModeSet ms = modes_from_features(features, ts);
    return evaluate_modes(ms.channel_modes(channel), slot, n_samples, ts);
}

}  // namespace eventid
