#include "qkbench/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qkbench/rng.hpp"
#include "qkbench/stats.hpp"

namespace qkb {

ScalerSpec scaler_fit(const Eigen::MatrixXd& X_train, double f_min, double f_max,
                      bool chebyshev_box) {
    const double box = chebyshev_box ? 1.0 : std::numbers::pi / 2.0;
    if (!(f_min >= -box && f_min < 0.0)) {
        throw ConfigError("scaler_fit: f_min must lie in [-" + std::to_string(box) + ", 0)");
    }
    if (!(f_max > 0.0 && f_max <= box)) {
        throw ConfigError("scaler_fit: f_max must lie in (0, " + std::to_string(box) + "]");
    }
    ScalerSpec scaler;
    scaler.f_min = f_min;
    scaler.f_max = f_max;
    scaler.data_min = X_train.colwise().minCoeff();
    scaler.data_max = X_train.colwise().maxCoeff();
    scaler.clamp = chebyshev_box;
    return scaler;
}

Eigen::MatrixXd scaler_apply(const ScalerSpec& scaler, const Eigen::MatrixXd& X) {
    if (X.cols() != scaler.data_min.size()) {
        throw ShapeError("scaler_apply: feature count mismatch");
    }
    Eigen::MatrixXd out(X.rows(), X.cols());
    const double span = scaler.f_max - scaler.f_min;
    for (int c = 0; c < X.cols(); ++c) {
        const double lo = scaler.data_min(c);
        const double hi = scaler.data_max(c);
        if (hi - lo < 1e-300) {
            // constant feature maps to the midpoint
            out.col(c).setConstant(0.5 * (scaler.f_min + scaler.f_max));
            continue;
        }
        out.col(c) = scaler.f_min + span * (X.col(c).array() - lo) / (hi - lo);
    }
    if (scaler.clamp) {
        out = out.array().max(scaler.clamp_lo).min(scaler.clamp_hi);
    }
    return out;
}

TargetScaler target_scaler_fit(const Eigen::VectorXd& y_train) {
    TargetScaler scaler;
    scaler.y_min = y_train.minCoeff();
    scaler.y_max = y_train.maxCoeff();
    return scaler;
}

Eigen::VectorXd target_scaler_apply(const TargetScaler& scaler, const Eigen::VectorXd& y) {
    if (scaler.y_max - scaler.y_min < 1e-300) {
        return Eigen::VectorXd::Constant(y.size(), 0.5);
    }
    return (y.array() - scaler.y_min) / (scaler.y_max - scaler.y_min);
}

std::string to_string(LearnerKind kind) {
    switch (kind) {
    case LearnerKind::QKRR:
        return "qkrr";
    case LearnerKind::QSVR:
        return "qsvr";
    case LearnerKind::QSVC:
        return "qsvc";
    }
    return "?";
}

LearnerKind learner_from_string(const std::string& name) {
    if (name == "qkrr" || name == "QKRR") {
        return LearnerKind::QKRR;
    }
    if (name == "qsvr" || name == "QSVR") {
        return LearnerKind::QSVR;
    }
    if (name == "qsvc" || name == "QSVC") {
        return LearnerKind::QSVC;
    }
    throw ConfigError("unknown learner: " + name);
}

FittedModel krr_fit(const Eigen::MatrixXd& G_train, const Eigen::VectorXd& y, double lambda) {
    if (G_train.rows() != G_train.cols() || G_train.rows() != y.size()) {
        throw ShapeError("krr_fit: Gram/label shape mismatch");
    }
    if (lambda < 0.0) {
        throw ConfigError("krr_fit: lambda must be non-negative");
    }
    const int m = static_cast<int>(G_train.rows());
    const Eigen::MatrixXd base =
        G_train + lambda * Eigen::MatrixXd::Identity(m, m);
    double jitter = 0.0;
    for (;;) {
        Eigen::MatrixXd A = base;
        if (jitter > 0.0) {
            A.diagonal().array() += jitter;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() == Eigen::Success) {
            FittedModel model;
            model.kind = LearnerKind::QKRR;
            model.dual_coef = llt.solve(y);
            for (int i = 0; i < m; ++i) {
                model.support.push_back(i);
            }
            return model;
        }
        jitter = (jitter == 0.0) ? 1e-12 : jitter * 10.0;
        if (jitter > 1e-6) {
            throw ConditioningError("krr_fit: factorization failed even with jitter 1e-6");
        }
    }
}

Eigen::VectorXd krr_predict(const FittedModel& model, const Eigen::MatrixXd& G_test_train) {
    if (G_test_train.cols() != model.dual_coef.size()) {
        throw ShapeError("krr_predict: Gram column count mismatch");
    }
    return G_test_train * model.dual_coef;
}

namespace {

// Generic SMO for: min 1/2 a^T Q a + p^T a, s.t. y^T a = 0, 0 <= a_i <= C,
// with Q(s,t) = y_s y_t K(s,t). Working set is the maximal violating pair.
struct SmoResult {
    Eigen::VectorXd alpha;
    double b = 0.0;
    bool converged = true;
    long iterations = 0;
};

SmoResult smo_solve(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& p, double C, double tol, long max_iter) {
    const int m = static_cast<int>(y.size());
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd grad = p; // gradient of the objective at alpha = 0
    constexpr double tau = 1e-12;

    SmoResult result;
    long it = 0;
    for (; it < max_iter; ++it) {
        // select i in I_up with maximal -y*grad, j in I_low with minimal
        int i = -1, j = -1;
        double up_max = -std::numeric_limits<double>::infinity();
        double low_min = std::numeric_limits<double>::infinity();
        for (int t = 0; t < m; ++t) {
            const bool in_up = (y(t) > 0 && alpha(t) < C) || (y(t) < 0 && alpha(t) > 0);
            const bool in_low = (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < C);
            const double v = -y(t) * grad(t);
            if (in_up && v > up_max) {
                up_max = v;
                i = t;
            }
            if (in_low && v < low_min) {
                low_min = v;
                j = t;
            }
        }
        if (i < 0 || j < 0 || up_max - low_min < tol) {
            break;
        }

        const double kii = K(i, i), kjj = K(j, j), kij = K(i, j);
        const double old_ai = alpha(i), old_aj = alpha(j);
        if (y(i) != y(j)) {
            double quad = kii + kjj + 2.0 * kij;
            if (quad <= 0.0) {
                quad = tau;
            }
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0.0) {
                if (alpha(j) < 0.0) {
                    alpha(j) = 0.0;
                    alpha(i) = diff;
                }
            } else {
                if (alpha(i) < 0.0) {
                    alpha(i) = 0.0;
                    alpha(j) = -diff;
                }
            }
            if (diff > 0.0) {
                if (alpha(i) > C) {
                    alpha(i) = C;
                    alpha(j) = C - diff;
                }
            } else {
                if (alpha(j) > C) {
                    alpha(j) = C;
                    alpha(i) = C + diff;
                }
            }
        } else {
            double quad = kii + kjj - 2.0 * kij;
            if (quad <= 0.0) {
                quad = tau;
            }
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > C) {
                if (alpha(i) > C) {
                    alpha(i) = C;
                    alpha(j) = sum - C;
                }
            } else {
                if (alpha(j) < 0.0) {
                    alpha(j) = 0.0;
                    alpha(i) = sum;
                }
            }
            if (sum > C) {
                if (alpha(j) > C) {
                    alpha(j) = C;
                    alpha(i) = sum - C;
                }
            } else {
                if (alpha(i) < 0.0) {
                    alpha(i) = 0.0;
                    alpha(j) = sum;
                }
            }
        }

        const double dai = alpha(i) - old_ai;
        const double daj = alpha(j) - old_aj;
        if (dai == 0.0 && daj == 0.0) {
            break; // numerically stuck pair; KKT gap is below resolution
        }
        for (int t = 0; t < m; ++t) {
            grad(t) += y(t) * y(i) * K(t, i) * dai + y(t) * y(j) * K(t, j) * daj;
        }
    }
    result.converged = it < max_iter;
    result.iterations = it;
    result.alpha = alpha;

    // intercept from free variables, midpoint of the KKT bounds otherwise
    double sum_free = 0.0;
    int n_free = 0;
    double up_max = -std::numeric_limits<double>::infinity();
    double low_min = std::numeric_limits<double>::infinity();
    for (int t = 0; t < m; ++t) {
        const double v = -y(t) * grad(t);
        if (alpha(t) > 0.0 && alpha(t) < C) {
            sum_free += v;
            ++n_free;
        }
        const bool in_up = (y(t) > 0 && alpha(t) < C) || (y(t) < 0 && alpha(t) > 0);
        const bool in_low = (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < C);
        if (in_up) {
            up_max = std::max(up_max, v);
        }
        if (in_low) {
            low_min = std::min(low_min, v);
        }
    }
    result.b = n_free > 0 ? sum_free / n_free : 0.5 * (up_max + low_min);
    return result;
}

} // namespace

FittedModel svc_fit(const Eigen::MatrixXd& G_train, const Eigen::VectorXd& y, double C,
                    double tol, long max_pair_updates) {
    const int m = static_cast<int>(y.size());
    if (G_train.rows() != m || G_train.cols() != m) {
        throw ShapeError("svc_fit: Gram/label shape mismatch");
    }
    if (!(C > 0.0)) {
        throw ConfigError("svc_fit: C must be positive");
    }
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < m; ++i) {
        if (y(i) > 0) {
            has_pos = true;
        } else {
            has_neg = true;
        }
    }
    if (!has_pos || !has_neg) {
        throw LabelError("svc_fit: both classes must be present");
    }

    Eigen::VectorXd labels(m);
    for (int i = 0; i < m; ++i) {
        labels(i) = y(i) > 0 ? 1.0 : -1.0;
    }
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(m, -1.0);
    const SmoResult sol = smo_solve(G_train, labels, p, C, tol, max_pair_updates);

    FittedModel model;
    model.kind = LearnerKind::QSVC;
    model.dual_coef.resize(m);
    for (int i = 0; i < m; ++i) {
        model.dual_coef(i) = sol.alpha(i) * labels(i);
        if (sol.alpha(i) > 0.0) {
            model.support.push_back(i);
        }
    }
    model.intercept = sol.b;
    model.converged = sol.converged;
    return model;
}

Eigen::VectorXd svc_decision(const FittedModel& model, const Eigen::MatrixXd& G_test_train) {
    if (G_test_train.cols() != model.dual_coef.size()) {
        throw ShapeError("svc_decision: Gram column count mismatch");
    }
    return (G_test_train * model.dual_coef).array() + model.intercept;
}

FittedModel svr_fit(const Eigen::MatrixXd& G_train, const Eigen::VectorXd& y, double C,
                    double epsilon, double tol, long max_pair_updates) {
    const int m = static_cast<int>(y.size());
    if (G_train.rows() != m || G_train.cols() != m) {
        throw ShapeError("svr_fit: Gram/label shape mismatch");
    }
    if (!(C > 0.0) || epsilon < 0.0) {
        throw ConfigError("svr_fit: need C > 0 and epsilon >= 0");
    }

    // doubled problem over (alpha+, alpha-) with labels (+1..., -1...)
    const int n = 2 * m;
    Eigen::MatrixXd K(n, n);
    Eigen::VectorXd labels(n), p(n);
    for (int s = 0; s < n; ++s) {
        labels(s) = s < m ? 1.0 : -1.0;
        p(s) = s < m ? epsilon - y(s) : epsilon + y(s - m);
        for (int t = 0; t < n; ++t) {
            K(s, t) = G_train(s % m, t % m);
        }
    }
    const SmoResult sol = smo_solve(K, labels, p, C, tol, max_pair_updates);

    FittedModel model;
    model.kind = LearnerKind::QSVR;
    model.dual_coef.resize(m);
    for (int i = 0; i < m; ++i) {
        model.dual_coef(i) = sol.alpha(i) - sol.alpha(i + m);
        if (std::abs(model.dual_coef(i)) > 0.0) {
            model.support.push_back(i);
        }
    }
    model.intercept = sol.b;
    model.converged = sol.converged;
    return model;
}

Eigen::VectorXd svr_predict(const FittedModel& model, const Eigen::MatrixXd& G_test_train) {
    if (G_test_train.cols() != model.dual_coef.size()) {
        throw ShapeError("svr_predict: Gram column count mismatch");
    }
    return (G_test_train * model.dual_coef).array() + model.intercept;
}

double mse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_pred) {
    if (y.size() != y_pred.size()) {
        throw ShapeError("mse: length mismatch");
    }
    return (y - y_pred).squaredNorm() / static_cast<double>(y.size());
}

double roc_auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
    if (scores.size() != labels.size()) {
        throw ShapeError("roc_auc: length mismatch");
    }
    const int n = static_cast<int>(scores.size());
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) {
        s[i] = scores(i);
    }
    const auto ranks = midranks(s);
    double rank_pos = 0.0;
    int n_pos = 0;
    for (int i = 0; i < n; ++i) {
        if (labels(i) > 0) {
            rank_pos += ranks[i];
            ++n_pos;
        }
    }
    const int n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw LabelError("roc_auc: both classes must be present");
    }
    const double u = rank_pos - 0.5 * n_pos * (n_pos + 1.0);
    return u / (static_cast<double>(n_pos) * n_neg);
}

namespace {

// 5-fold assignment: contiguous blocks of a shuffled order for regression,
// round-robin within shuffled classes for classification.
std::vector<std::vector<int>> make_folds(const Eigen::VectorXd& y, Task task,
                                         std::uint64_t seed) {
    constexpr int k = 5;
    const int n = static_cast<int>(y.size());
    Rng rng(derive_seed(seed, "cv-folds"));
    std::vector<std::vector<int>> folds(k);
    if (task == Task::Classification) {
        std::vector<int> pos, neg;
        for (int i = 0; i < n; ++i) {
            (y(i) > 0 ? pos : neg).push_back(i);
        }
        rng.shuffle(pos);
        rng.shuffle(neg);
        int f = 0;
        for (int i : pos) {
            folds[f].push_back(i);
            f = (f + 1) % k;
        }
        for (int i : neg) {
            folds[f].push_back(i);
            f = (f + 1) % k;
        }
    } else {
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) {
            order[i] = i;
        }
        rng.shuffle(order);
        const int base = n / k, extra = n % k;
        int at = 0;
        for (int f = 0; f < k; ++f) {
            const int size = base + (f < extra ? 1 : 0);
            for (int s = 0; s < size; ++s) {
                folds[f].push_back(order[at++]);
            }
        }
    }
    return folds;
}

struct FitOutcome {
    FittedModel model;
    ScalerSpec scaler;
    TargetScaler target_scaler;
    Eigen::MatrixXd X_train_scaled;
    std::vector<double> circuit_params;
};

FitOutcome fit_pipeline(const Eigen::MatrixXd& X_train, const Eigen::VectorXd& y_train,
                        const PipelineConfig& config) {
    FitOutcome out;
    const bool cheby = config.circuit.name == CircuitName::ChebyshevPQC;
    out.scaler = scaler_fit(X_train, config.f_min, config.f_max, cheby);
    out.X_train_scaled = scaler_apply(out.scaler, X_train);
    out.circuit_params = init_params(config.circuit, config.param_seed);

    const Eigen::MatrixXd G =
        kernel_gram(config.circuit, out.circuit_params, config.kernel, out.X_train_scaled);

    switch (config.learner) {
    case LearnerKind::QKRR: {
        out.target_scaler = target_scaler_fit(y_train);
        const Eigen::VectorXd ys = target_scaler_apply(out.target_scaler, y_train);
        out.model = krr_fit(G, ys, config.lambda);
        break;
    }
    case LearnerKind::QSVR: {
        out.target_scaler = target_scaler_fit(y_train);
        const Eigen::VectorXd ys = target_scaler_apply(out.target_scaler, y_train);
        out.model = svr_fit(G, ys, config.C, config.epsilon);
        break;
    }
    case LearnerKind::QSVC:
        out.model = svc_fit(G, y_train, config.C);
        break;
    }
    return out;
}

// score on held-out rows given a fitted pipeline; higher is better
double score_pipeline(const FitOutcome& fit, const PipelineConfig& config,
                      const Eigen::MatrixXd& X_eval, const Eigen::VectorXd& y_eval,
                      bool negate_mse) {
    const Eigen::MatrixXd X_scaled = scaler_apply(fit.scaler, X_eval);
    const Eigen::MatrixXd G = kernel_gram(config.circuit, fit.circuit_params, config.kernel,
                                          X_scaled, fit.X_train_scaled);
    switch (config.learner) {
    case LearnerKind::QKRR: {
        const Eigen::VectorXd pred = krr_predict(fit.model, G);
        const Eigen::VectorXd ys = target_scaler_apply(fit.target_scaler, y_eval);
        const double err = mse(ys, pred);
        return negate_mse ? -err : err;
    }
    case LearnerKind::QSVR: {
        const Eigen::VectorXd pred = svr_predict(fit.model, G);
        const Eigen::VectorXd ys = target_scaler_apply(fit.target_scaler, y_eval);
        const double err = mse(ys, pred);
        return negate_mse ? -err : err;
    }
    case LearnerKind::QSVC:
        return roc_auc(svc_decision(fit.model, G), y_eval);
    }
    return 0.0;
}

} // namespace

CVResult cv_evaluate(const Dataset& dataset, const PipelineConfig& config, std::uint64_t seed) {
    if (dataset.train_idx.size() < 10) {
        throw ConfigError("cv_evaluate: need at least 10 training samples");
    }
    const Eigen::MatrixXd X = dataset.train_X();
    const Eigen::VectorXd y = dataset.train_y();
    const auto folds = make_folds(y, dataset.task, seed);

    CVResult result;
    result.scoring = config.scoring() == Scoring::RocAuc ? Scoring::RocAuc : Scoring::NegMSE;
    for (int f = 0; f < 5; ++f) {
        std::vector<int> val = folds[f];
        std::vector<int> train;
        for (int g = 0; g < 5; ++g) {
            if (g != f) {
                train.insert(train.end(), folds[g].begin(), folds[g].end());
            }
        }
        std::sort(val.begin(), val.end());
        std::sort(train.begin(), train.end());

        Eigen::MatrixXd Xf(train.size(), X.cols()), Xv(val.size(), X.cols());
        Eigen::VectorXd yf(train.size()), yv(val.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            Xf.row(i) = X.row(train[i]);
            yf(i) = y(train[i]);
        }
        for (std::size_t i = 0; i < val.size(); ++i) {
            Xv.row(i) = X.row(val[i]);
            yv(i) = y(val[i]);
        }

        if (dataset.task == Task::Classification) {
            const bool pos = (yv.array() > 0).any();
            const bool neg = (yv.array() < 0).any();
            if (!pos || !neg) {
                throw LabelError("cv_evaluate: fold " + std::to_string(f) +
                                 " holds a single class");
            }
        }

        const FitOutcome fit = fit_pipeline(Xf, yf, config);
        result.fold_scores[f] = score_pipeline(fit, config, Xv, yv, /*negate_mse=*/true);
    }

    std::array<double, 5> sorted = result.fold_scores;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[2];
    double mean = 0.0;
    for (double s : result.fold_scores) {
        mean += s;
    }
    mean /= 5.0;
    result.objective = std::min(mean, median);
    return result;
}

FinalScores fit_final_and_test(const Dataset& dataset, const PipelineConfig& config) {
    const Eigen::MatrixXd X_train = dataset.train_X();
    const Eigen::VectorXd y_train = dataset.train_y();
    const FitOutcome fit = fit_pipeline(X_train, y_train, config);

    FinalScores scores;
    scores.train_score =
        score_pipeline(fit, config, X_train, y_train, /*negate_mse=*/false);
    scores.test_score =
        score_pipeline(fit, config, dataset.test_X(), dataset.test_y(), /*negate_mse=*/false);
    return scores;
}

} // namespace qkb
