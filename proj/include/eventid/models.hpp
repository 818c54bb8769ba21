#pragma once

#include <string>
#include <variant>
#include <vector>

#include "eventid/core.hpp"

namespace eventid {

/// Per-feature zero-mean unit-scale transform fitted on training data only.
/// Zero-variance features get scale 1 (pass-through).
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        return (x - mean).cwiseQuotient(scale);
    }
    Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd invert(const Eigen::VectorXd& z) const {
        return z.cwiseProduct(scale) + mean;
    }
};

Standardizer standardize_fit(const Eigen::MatrixXd& x);

/// Logistic regression on standardized features with intercept and a small
/// ridge term on the weights.
struct LrModel {
    Eigen::VectorXd w;
    double bias = 0.0;
    Standardizer standardizer;
    bool converged = true;

    double margin(const Eigen::VectorXd& raw) const {
        return w.dot(standardizer.apply(raw)) + bias;
    }
};

struct LrOptions {
    double reg = 1e-4;  // ridge lambda on w (bias excluded)
    int max_iter = 100;
    double tol = 1e-8;  // gradient 2-norm
};

/// Logistic loss and gradient at (w, bias) on standardized rows; exposed for
/// finite-difference checks.
double lr_loss(const Eigen::MatrixXd& xs, const Eigen::VectorXi& y, const Eigen::VectorXd& w,
               double bias, double reg);
void lr_gradient(const Eigen::MatrixXd& xs, const Eigen::VectorXi& y, const Eigen::VectorXd& w,
                 double bias, double reg, Eigen::VectorXd& grad_w, double& grad_b);

LrModel lr_train(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, const LrOptions& opt = {});
double lr_predict_proba(const LrModel& m, const Eigen::VectorXd& raw);

/// Single-feature depth-1 regression tree.
struct Stump {
    int feature = 0;
    double threshold = 0.0;
    double left = 0.0;   // value when x_j <= threshold
    double right = 0.0;  // value when x_j >  threshold
};

struct GbModel {
    std::vector<Stump> stumps;
    double f0 = 0.0;  // prior log-odds
    Standardizer standardizer;
};

struct GbOptions {
    int n_stumps = 100;
    double learn_rate = 0.1;
};

GbModel gb_train(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, const GbOptions& opt = {});
double gb_raw_score(const GbModel& m, const Eigen::VectorXd& raw);
double gb_predict_proba(const GbModel& m, const Eigen::VectorXd& raw);

/// Best (feature, threshold) by squared-residual reduction; ties broken by
/// lowest feature index then lowest threshold. Threshold candidates are
/// midpoints of consecutive sorted unique values. Exposed for the split
/// oracle tests.
Stump fit_stump(const Eigen::MatrixXd& xs, const Eigen::VectorXd& residuals);

using Classifier = std::variant<LrModel, GbModel>;

double predict_proba(const Classifier& m, const Eigen::VectorXd& raw);
inline int predict_label(const Classifier& m, const Eigen::VectorXd& raw) {
    return predict_proba(m, raw) >= 0.5 ? kLabelGenLoss : kLabelLoadLoss;
}

/// Mann-Whitney AUC, ties counted 1/2. Throws SingleClass if only one label
/// is present.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Self-describing text serialization; load(save(m)) reproduces identical
/// predictions.
void save_model(const Classifier& m, const std::string& path);
Classifier load_model(const std::string& path);

}  // namespace eventid
