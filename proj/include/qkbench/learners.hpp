#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <numbers>
#include <string>

#include "qkbench/datasets.hpp"
#include "qkbench/kernels.hpp"

namespace qkb {

/// Per-feature affine map learned on training data: feature min -> f_min,
/// feature max -> f_max. Applying the scaler uses training statistics only;
/// test values may land outside [f_min, f_max] unless clamping is on
/// (ChebyshevPQC clamps to the arccos domain [-1, 1]).
struct ScalerSpec {
    double f_min = -std::numbers::pi / 2.0;
    double f_max = std::numbers::pi / 2.0;
    Eigen::VectorXd data_min;
    Eigen::VectorXd data_max;
    bool clamp = false;
    double clamp_lo = -1.0;
    double clamp_hi = 1.0;
};

/// chebyshev_box switches the admissible [f_min, f_max] box from
/// [-pi/2, 0) x (0, pi/2] to [-1, 0) x (0, 1] and enables clamping.
ScalerSpec scaler_fit(const Eigen::MatrixXd& X_train, double f_min, double f_max,
                      bool chebyshev_box = false);
Eigen::MatrixXd scaler_apply(const ScalerSpec& scaler, const Eigen::MatrixXd& X);

/// Affine map of training targets onto [0, 1]; constant targets map to 0.5.
struct TargetScaler {
    double y_min = 0.0;
    double y_max = 1.0;
};
TargetScaler target_scaler_fit(const Eigen::VectorXd& y_train);
Eigen::VectorXd target_scaler_apply(const TargetScaler& scaler, const Eigen::VectorXd& y);

enum class LearnerKind { QKRR, QSVR, QSVC };

std::string to_string(LearnerKind kind);
LearnerKind learner_from_string(const std::string& name);

/// Kernel machine in dual form. dual_coef holds alpha_i * y_i for QSVC,
/// beta_i for QSVR and the ridge solution alpha for QKRR, so predictions
/// are always G_test_train * dual_coef + intercept.
struct FittedModel {
    LearnerKind kind = LearnerKind::QKRR;
    Eigen::VectorXd dual_coef;
    double intercept = 0.0;
    std::vector<int> support;
    bool converged = true;
};

/// Solves (G + lambda I) alpha = y by Cholesky with jitter escalation
/// (1e-12, x10 per retry, up to 1e-6).
FittedModel krr_fit(const Eigen::MatrixXd& G_train, const Eigen::VectorXd& y, double lambda);
Eigen::VectorXd krr_predict(const FittedModel& model, const Eigen::MatrixXd& G_test_train);

/// C-SVC dual solved by two-variable sequential optimization on the
/// precomputed kernel; working set by maximal KKT violation.
FittedModel svc_fit(const Eigen::MatrixXd& G_train, const Eigen::VectorXd& y, double C,
                    double tol = 1e-3, long max_pair_updates = 100000);
Eigen::VectorXd svc_decision(const FittedModel& model, const Eigen::MatrixXd& G_test_train);

/// epsilon-insensitive SVR dual via the same sequential solver on the
/// doubled problem; sum of the returned beta is 0 within 1e-8.
FittedModel svr_fit(const Eigen::MatrixXd& G_train, const Eigen::VectorXd& y, double C,
                    double epsilon, double tol = 1e-3, long max_pair_updates = 100000);
Eigen::VectorXd svr_predict(const FittedModel& model, const Eigen::MatrixXd& G_test_train);

double mse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_pred);

/// ROC-AUC from the Mann-Whitney rank statistic with mid-rank ties; labels
/// must contain both classes.
double roc_auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

enum class Scoring { NegMSE, RocAuc };

struct CVResult {
    std::array<double, 5> fold_scores{};
    double objective = 0.0; // min(mean, median) of the fold scores
    Scoring scoring = Scoring::NegMSE;
};

/// One fully specified model: circuit + kernel + learner + preprocessing.
struct PipelineConfig {
    CircuitSpec circuit;
    std::uint64_t param_seed = 0;
    KernelConfig kernel;
    LearnerKind learner = LearnerKind::QKRR;
    double lambda = 1e-3;
    double C = 1.0;
    double epsilon = 0.1;
    double f_min = -std::numbers::pi / 2.0;
    double f_max = std::numbers::pi / 2.0;

    Scoring scoring() const {
        return learner == LearnerKind::QSVC ? Scoring::RocAuc : Scoring::NegMSE;
    }
};

/// Five-fold cross-validation on the training split; folds are stratified
/// for classification and contiguous-shuffled for regression, deterministic
/// in `seed`. Scaling (features, and targets for regression) is fitted per
/// fold on the fold's training part only.
CVResult cv_evaluate(const Dataset& dataset, const PipelineConfig& config, std::uint64_t seed);

struct FinalScores {
    double train_score = 0.0;
    double test_score = 0.0; // MSE on [0,1]-scaled targets, or ROC-AUC
};

/// Refits on the full training split and scores train and held-out test.
FinalScores fit_final_and_test(const Dataset& dataset, const PipelineConfig& config);

} // namespace qkb
