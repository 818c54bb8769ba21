#include "eventid/models.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace eventid {

Eigen::MatrixXd Standardizer::apply_rows(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Standardizer standardize_fit(const Eigen::MatrixXd& x) {
    if (x.rows() < 2) throw InvalidCount("standardize_fit needs at least 2 rows");
    Standardizer s;
    s.mean = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
    s.scale = (centered.array().square().colwise().sum() / static_cast<double>(x.rows()))
                  .sqrt()
                  .matrix()
                  .transpose();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
        if (s.scale(j) <= 0.0) s.scale(j) = 1.0;
    return s;
}

namespace {

// log(1 + exp(-t)) without overflow
double log1pexp_neg(double t) {
    if (t > 0.0) return std::log1p(std::exp(-t));
    return -t + std::log1p(std::exp(t));
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

void check_xy(const Eigen::MatrixXd& x, const Eigen::VectorXi& y) {
    if (x.rows() != y.size()) throw InvalidCount("rows of X must match y");
    for (Eigen::Index i = 0; i < y.size(); ++i) check_label(y(i));
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double lr_loss(const Eigen::MatrixXd& xs, const Eigen::VectorXi& y, const Eigen::VectorXd& w,
               double bias, double reg) {
    double loss = 0.5 * reg * w.squaredNorm();
    const Eigen::VectorXd f = xs * w + Eigen::VectorXd::Constant(xs.rows(), bias);
    for (Eigen::Index i = 0; i < xs.rows(); ++i) loss += log1pexp_neg(y(i) * f(i));
    return loss;
}

void lr_gradient(const Eigen::MatrixXd& xs, const Eigen::VectorXi& y, const Eigen::VectorXd& w,
                 double bias, double reg, Eigen::VectorXd& grad_w, double& grad_b) {
    const Eigen::VectorXd f = xs * w + Eigen::VectorXd::Constant(xs.rows(), bias);
    Eigen::VectorXd coef(xs.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) coef(i) = -y(i) * sigmoid(-y(i) * f(i));
    grad_w = xs.transpose() * coef + reg * w;
    grad_b = coef.sum();
}

LrModel lr_train(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, const LrOptions& opt) {
    check_xy(x, y);
    LrModel m;
    m.standardizer = standardize_fit(x);
    const Eigen::MatrixXd xs = m.standardizer.apply_rows(x);
    const Eigen::Index d = x.cols();
    m.w = Eigen::VectorXd::Zero(d);
    m.bias = 0.0;

    double loss = lr_loss(xs, y, m.w, m.bias, opt.reg);
    Eigen::VectorXd grad_w(d);
    double grad_b = 0.0;
    m.converged = false;
    for (int iter = 0; iter < opt.max_iter; ++iter) {
        lr_gradient(xs, y, m.w, m.bias, opt.reg, grad_w, grad_b);
        const double gnorm = std::sqrt(grad_w.squaredNorm() + grad_b * grad_b);
        if (gnorm <= opt.tol) {
            m.converged = true;
            break;
        }
        // Newton step on the (w, bias) block with step halving.
        const Eigen::VectorXd f = xs * m.w + Eigen::VectorXd::Constant(xs.rows(), m.bias);
        Eigen::VectorXd wgt(xs.rows());
        for (Eigen::Index i = 0; i < xs.rows(); ++i) {
            const double s = sigmoid(f(i));
            wgt(i) = std::max(s * (1.0 - s), 1e-12);
        }
        Eigen::MatrixXd h(d + 1, d + 1);
        const Eigen::MatrixXd xw = xs.array().colwise() * wgt.array();
        h.topLeftCorner(d, d) = xs.transpose() * xw;
        h.topLeftCorner(d, d).diagonal().array() += opt.reg;
        h.topRightCorner(d, 1) = xw.colwise().sum().transpose();
        h.bottomLeftCorner(1, d) = xw.colwise().sum();
        h(d, d) = wgt.sum();

        Eigen::VectorXd g(d + 1);
        g.head(d) = grad_w;
        g(d) = grad_b;
        Eigen::VectorXd step = h.ldlt().solve(g);

        double scale = 1.0;
        for (int half = 0; half < 40; ++half) {
            const Eigen::VectorXd w_try = m.w - scale * step.head(d);
            const double b_try = m.bias - scale * step(d);
            const double l_try = lr_loss(xs, y, w_try, b_try, opt.reg);
            if (l_try <= loss) {
                m.w = w_try;
                m.bias = b_try;
                loss = l_try;
                break;
            }
            scale *= 0.5;
        }
    }
    if (!m.converged) {
        lr_gradient(xs, y, m.w, m.bias, opt.reg, grad_w, grad_b);
        m.converged = std::sqrt(grad_w.squaredNorm() + grad_b * grad_b) <= opt.tol;
    }
    return m;
}

double lr_predict_proba(const LrModel& m, const Eigen::VectorXd& raw) {
    return sigmoid(m.margin(raw));
}

Stump fit_stump(const Eigen::MatrixXd& xs, const Eigen::VectorXd& residuals) {
    const Eigen::Index n = xs.rows();
    const double total = residuals.sum();
    const double mean = total / static_cast<double>(n);

    Stump best;
    best.left = best.right = mean;
    best.threshold = std::numeric_limits<double>::infinity();  // constant leaf fallback
    double best_gain = -std::numeric_limits<double>::infinity();

    std::vector<int> order(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < xs.cols(); ++j) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return xs(a, j) < xs(b, j); });
        double left_sum = 0.0;
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            left_sum += residuals(order[static_cast<std::size_t>(i)]);
            const double lo = xs(order[static_cast<std::size_t>(i)], j);
            const double hi = xs(order[static_cast<std::size_t>(i + 1)], j);
            if (lo == hi) continue;
            const double nl = static_cast<double>(i + 1);
            const double nr = static_cast<double>(n - i - 1);
            const double right_sum = total - left_sum;
            const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr;
            if (gain > best_gain) {
                best_gain = gain;
                best.feature = static_cast<int>(j);
                best.threshold = 0.5 * (lo + hi);
                best.left = left_sum / nl;
                best.right = right_sum / nr;
            }
        }
    }
    return best;
}

GbModel gb_train(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, const GbOptions& opt) {
    check_xy(x, y);
    if (opt.n_stumps < 1) throw InvalidCount("stump count must be >= 1");
    GbModel m;
    m.standardizer = standardize_fit(x);
    const Eigen::MatrixXd xs = m.standardizer.apply_rows(x);
    const Eigen::Index n = x.rows();

    double n_pos = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) n_pos += y(i) == kLabelGenLoss ? 1.0 : 0.0;
    const double n_neg = static_cast<double>(n) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) throw SingleClass("gb_train needs both classes");
    m.f0 = std::log(n_pos / n_neg);

    Eigen::VectorXd score = Eigen::VectorXd::Constant(n, m.f0);
    Eigen::VectorXd residual(n);
    m.stumps.reserve(static_cast<std::size_t>(opt.n_stumps));
    for (int it = 0; it < opt.n_stumps; ++it) {
        for (Eigen::Index i = 0; i < n; ++i)
            residual(i) = y(i) * sigmoid(-y(i) * score(i));  // negative logistic gradient
        Stump st = fit_stump(xs, residual);
        st.left *= opt.learn_rate;
        st.right *= opt.learn_rate;
        for (Eigen::Index i = 0; i < n; ++i)
            score(i) += xs(i, st.feature) <= st.threshold ? st.left : st.right;
        m.stumps.push_back(st);
    }
    return m;
}

double gb_raw_score(const GbModel& m, const Eigen::VectorXd& raw) {
    const Eigen::VectorXd z = m.standardizer.apply(raw);
    double f = m.f0;
    for (const Stump& st : m.stumps) f += z(st.feature) <= st.threshold ? st.left : st.right;
    return f;
}

double gb_predict_proba(const GbModel& m, const Eigen::VectorXd& raw) {
    return sigmoid(gb_raw_score(m, raw));
}

double predict_proba(const Classifier& m, const Eigen::VectorXd& raw) {
    return std::visit(
        [&raw](const auto& model) -> double {
            if constexpr (std::is_same_v<std::decay_t<decltype(model)>, LrModel>)
                return lr_predict_proba(model, raw);
            else
                return gb_predict_proba(model, raw);
        },
        m);
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw InvalidCount("scores and labels must match");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int l : labels) {
        check_label(l);
        if (l == kLabelGenLoss) ++n_pos;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw SingleClass("auc needs both classes present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over ties, then the Mann-Whitney statistic.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == kLabelGenLoss) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

void save_model(const Classifier& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    auto write_vec = [&out](const char* name, const Eigen::VectorXd& v) {
        out << name;
        for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << fmt_double(v(i));
        out << '\n';
    };
    if (const auto* lr = std::get_if<LrModel>(&m)) {
        out << "model lr\n";
        out << "dim " << lr->w.size() << '\n';
        out << "bias " << fmt_double(lr->bias) << '\n';
        out << "converged " << (lr->converged ? 1 : 0) << '\n';
        write_vec("mean", lr->standardizer.mean);
        write_vec("scale", lr->standardizer.scale);
        write_vec("w", lr->w);
    } else {
        const auto& gb = std::get<GbModel>(m);
        out << "model gb\n";
        out << "dim " << gb.standardizer.mean.size() << '\n';
        out << "f0 " << fmt_double(gb.f0) << '\n';
        out << "nstumps " << gb.stumps.size() << '\n';
        write_vec("mean", gb.standardizer.mean);
        write_vec("scale", gb.standardizer.scale);
        for (const Stump& st : gb.stumps)
            out << "stump " << st.feature << ' ' << fmt_double(st.threshold) << ' '
                << fmt_double(st.left) << ' ' << fmt_double(st.right) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

namespace {

Eigen::VectorXd read_vec(std::istream& in, const std::string& expect, Eigen::Index dim,
                         const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": truncated, expected " + expect);
    std::istringstream row(line);
    std::string name;
    row >> name;
    if (name != expect) throw FormatError(path + ": expected '" + expect + "', got '" + name + "'");
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        if (!(row >> v(i))) throw FormatError(path + ": short vector '" + expect + "'");
    return v;
}

}  // namespace

Classifier load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string tag, kind;
    in >> tag >> kind;
    if (tag != "model" || (kind != "lr" && kind != "gb"))
        throw FormatError(path + ": not a model file");
    Eigen::Index dim = 0;
    in >> tag >> dim;
    if (tag != "dim" || dim < 1) throw FormatError(path + ": bad dim record");
    if (kind == "lr") {
        LrModel m;
        int conv = 1;
        in >> tag >> m.bias;
        if (tag != "bias") throw FormatError(path + ": bad bias record");
        in >> tag >> conv;
        if (tag != "converged") throw FormatError(path + ": bad converged record");
        m.converged = conv != 0;
        in.ignore(1, '\n');
        m.standardizer.mean = read_vec(in, "mean", dim, path);
        m.standardizer.scale = read_vec(in, "scale", dim, path);
        m.w = read_vec(in, "w", dim, path);
        return m;
    }
    GbModel m;
    std::size_t n_stumps = 0;
    in >> tag >> m.f0;
    if (tag != "f0") throw FormatError(path + ": bad f0 record");
    in >> tag >> n_stumps;
    if (tag != "nstumps" || n_stumps < 1) throw FormatError(path + ": bad nstumps record");
    in.ignore(1, '\n');
    m.standardizer.mean = read_vec(in, "mean", dim, path);
    m.standardizer.scale = read_vec(in, "scale", dim, path);
    m.stumps.resize(n_stumps);
    for (std::size_t i = 0; i < n_stumps; ++i) {
        in >> tag >> m.stumps[i].feature >> m.stumps[i].threshold >> m.stumps[i].left >>
            m.stumps[i].right;
        if (tag != "stump" || !in) throw FormatError(path + ": bad stump record " + std::to_string(i));
    }
    return m;
}

}  // namespace eventid
