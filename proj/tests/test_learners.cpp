#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "qkbench/learners.hpp"
#include "qkbench/rng.hpp"
#include "support/oracles.hpp"

using namespace qkb;
constexpr double pi = std::numbers::pi;

namespace {

// linear kernel on 1-D points, strictly positive definite after adding a
// small diagonal
Eigen::MatrixXd linear_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& xp) {
    return x * xp.transpose() + Eigen::MatrixXd::Ones(x.size(), xp.size());
}

Eigen::MatrixXd rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& xp, double gamma) {
    Eigen::MatrixXd K(x.size(), xp.size());
    for (int i = 0; i < x.size(); ++i) {
        for (int j = 0; j < xp.size(); ++j) {
            const double d = x(i) - xp(j);
            K(i, j) = std::exp(-gamma * d * d);
        }
    }
    return K;
}

} // namespace

TEST_CASE("scaler maps training extremes onto [f_min, f_max]") {
    Eigen::MatrixXd X(3, 1);
    X << 0.0, 0.5, 1.0;
    const ScalerSpec scaler = scaler_fit(X, -pi / 2, pi / 2);
    const Eigen::MatrixXd S = scaler_apply(scaler, X);
    CHECK(S(0, 0) == doctest::Approx(-pi / 2));
    CHECK(S(1, 0) == doctest::Approx(0.0));
    CHECK(S(2, 0) == doctest::Approx(pi / 2));
    CHECK(scaler.f_max - scaler.f_min == doctest::Approx(pi)); // w_e

    // test values outside the training range extrapolate without clipping
    Eigen::MatrixXd T(1, 1);
    T << 2.0;
    CHECK(scaler_apply(scaler, T)(0, 0) > pi / 2);
}

TEST_CASE("chebyshev box clamps to the arccos domain") {
    Eigen::MatrixXd X(2, 1);
    X << 0.0, 1.0;
    const ScalerSpec scaler = scaler_fit(X, -1.0, 1.0, /*chebyshev_box=*/true);
    Eigen::MatrixXd T(2, 1);
    T << -3.0, 4.0;
    const Eigen::MatrixXd S = scaler_apply(scaler, T);
    CHECK(S(0, 0) == doctest::Approx(-1.0));
    CHECK(S(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("scaler rejects bounds outside the admissible box") {
    Eigen::MatrixXd X(2, 1);
    X << 0.0, 1.0;
    CHECK_THROWS_AS(scaler_fit(X, -pi, pi / 2), ConfigError);
    CHECK_THROWS_AS(scaler_fit(X, -pi / 2, 0.0), ConfigError);
    CHECK_THROWS_AS(scaler_fit(X, -1.5, 1.0, true), ConfigError);
}

TEST_CASE("constant features map to the midpoint") {
    Eigen::MatrixXd X(3, 2);
    X << 1.0, 7.0, 2.0, 7.0, 3.0, 7.0;
    const ScalerSpec scaler = scaler_fit(X, -1.0, 1.0, true);
    const Eigen::MatrixXd S = scaler_apply(scaler, X);
    CHECK(S(0, 1) == doctest::Approx(0.0));
    CHECK(S(2, 1) == doctest::Approx(0.0));
}

TEST_CASE("krr solves the regularized system") {
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd y(2);
    y << 1, 2;
    FittedModel m0 = krr_fit(I, y, 0.0);
    CHECK(m0.dual_coef(0) == doctest::Approx(1.0));
    CHECK(m0.dual_coef(1) == doctest::Approx(2.0));

    Eigen::VectorXd y2(2);
    y2 << 2, 4;
    FittedModel m1 = krr_fit(I, y2, 1.0);
    CHECK(m1.dual_coef(0) == doctest::Approx(1.0));
    CHECK(m1.dual_coef(1) == doctest::Approx(2.0));

    CHECK_THROWS_AS(krr_fit(I, y, -1.0), ConfigError);
}

TEST_CASE("krr residual identity and coefficient shrinkage") {
    Rng rng(3);
    const int m = 20;
    Eigen::VectorXd x(m), y(m);
    for (int i = 0; i < m; ++i) {
        x(i) = rng.uniform(-1, 1);
        y(i) = std::sin(3 * x(i)) + 0.01 * rng.normal();
    }
    const Eigen::MatrixXd G = rbf_kernel(x, x, 2.0);

    double prev_norm = 1e100;
    for (double lambda : {1e-6, 1e-3, 1e-1, 1e1, 1e3}) {
        const FittedModel model = krr_fit(G, y, lambda);
        const Eigen::VectorXd residual =
            (G + lambda * Eigen::MatrixXd::Identity(m, m)) * model.dual_coef - y;
        CHECK(residual.cwiseAbs().maxCoeff() < 1e-8);
        const double norm = model.dual_coef.norm();
        CHECK(norm < prev_norm);
        prev_norm = norm;
    }
}

TEST_CASE("svc separates a separable 1-D toy problem") {
    // x < 0 -> -1, x > 0 -> +1, linear-in-feature kernel
    Eigen::VectorXd x(8), y(8);
    x << -2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0;
    y << -1, -1, -1, -1, 1, 1, 1, 1;
    const Eigen::MatrixXd G = linear_kernel(x, x);
    const FittedModel model = svc_fit(G, y, 10.0);
    CHECK(model.converged);

    Eigen::VectorXd xt(4), yt(4);
    xt << -1.2, -0.3, 0.4, 1.7;
    yt << -1, -1, 1, 1;
    const Eigen::VectorXd scores = svc_decision(model, linear_kernel(xt, x));
    CHECK(roc_auc(scores, yt) == doctest::Approx(1.0));
}

TEST_CASE("svc dual variables respect the box and KKT conditions") {
    Rng rng(11);
    const int m = 16;
    Eigen::VectorXd x(m), y(m);
    for (int i = 0; i < m; ++i) {
        x(i) = rng.uniform(-1, 1);
        y(i) = x(i) + 0.3 * rng.normal() > 0 ? 1.0 : -1.0;
    }
    const double C = 2.0;
    const Eigen::MatrixXd G = rbf_kernel(x, x, 1.0);
    const FittedModel model = svc_fit(G, y, C);

    const Eigen::VectorXd decision = svc_decision(model, G);
    for (int i = 0; i < m; ++i) {
        const double alpha = model.dual_coef(i) * y(i);
        CHECK(alpha >= -1e-12);
        CHECK(alpha <= C + 1e-12);
        // non-bound support vectors sit on the margin
        if (alpha > 1e-6 && alpha < C - 1e-6) {
            CHECK(std::abs(y(i) * decision(i) - 1.0) < 5e-3);
        }
    }
    CHECK_THROWS_AS(svc_fit(G, Eigen::VectorXd::Ones(m), C), LabelError);
    CHECK_THROWS_AS(svc_fit(G, y, 0.0), ConfigError);
}

TEST_CASE("svc dual objective matches the projected-gradient reference") {
    Rng rng(29);
    for (int rep = 0; rep < 3; ++rep) {
        const int m = 14 + 2 * rep;
        Eigen::VectorXd x(m), y(m);
        for (int i = 0; i < m; ++i) {
            x(i) = rng.uniform(-1, 1);
            y(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
        }
        const double C = 1.5;
        const Eigen::MatrixXd K = rbf_kernel(x, x, 1.5);
        const FittedModel model = svc_fit(K, y, C, 1e-4, 200000);
        Eigen::VectorXd alpha(m);
        for (int i = 0; i < m; ++i) {
            alpha(i) = model.dual_coef(i) * y(i);
        }
        const double smo_obj = oracles::svc_dual_objective(K, y, alpha);

        Eigen::MatrixXd Q(m, m);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                Q(i, j) = y(i) * y(j) * K(i, j);
            }
        }
        const auto pg = oracles::projected_gradient_dual(
            Q, Eigen::VectorXd::Constant(m, -1.0), y, C, 20000);
        const double scale = std::max({std::abs(pg.objective), std::abs(smo_obj), 1e-12});
        CHECK(std::abs(smo_obj - pg.objective) / scale < 1e-4);
        CHECK(smo_obj <= pg.objective + 1e-6 * scale); // SMO must not be worse
    }
}

TEST_CASE("duplicating every training point leaves the svc decision unchanged") {
    Eigen::VectorXd x(6), y(6);
    x << -1.1, -0.7, -0.2, 0.3, 0.8, 1.2;
    y << -1, -1, -1, 1, 1, 1;
    const Eigen::MatrixXd G = rbf_kernel(x, x, 1.0);
    const FittedModel model = svc_fit(G, y, 1.0, 1e-5, 200000);

    Eigen::VectorXd x2(12), y2(12);
    x2 << x, x;
    y2 << y, y;
    const Eigen::MatrixXd G2 = rbf_kernel(x2, x2, 1.0);
    const FittedModel model2 = svc_fit(G2, y2, 0.5, 1e-5, 200000);

    Eigen::VectorXd xt(5);
    xt << -0.9, -0.4, 0.0, 0.5, 1.0;
    const Eigen::VectorXd d1 = svc_decision(model, rbf_kernel(xt, x, 1.0));
    const Eigen::VectorXd d2 = svc_decision(model2, rbf_kernel(xt, x2, 1.0));
    CHECK((d1 - d2).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("svr with constant targets predicts the constant with no support vectors") {
    Eigen::VectorXd x(6);
    x << -1.0, -0.5, 0.0, 0.3, 0.7, 1.0;
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(6, 3.25);
    const Eigen::MatrixXd G = rbf_kernel(x, x, 1.0);
    const FittedModel model = svr_fit(G, y, 1.0, 0.1);
    CHECK(model.support.empty());
    const Eigen::VectorXd pred = svr_predict(model, G);
    for (int i = 0; i < 6; ++i) {
        CHECK(pred(i) == doctest::Approx(3.25).epsilon(1e-9));
    }
}

TEST_CASE("svr respects the box and the equality constraint") {
    Rng rng(17);
    const int m = 18;
    Eigen::VectorXd x(m), y(m);
    for (int i = 0; i < m; ++i) {
        x(i) = rng.uniform(-1, 1);
        y(i) = std::cos(2 * x(i)) + 0.05 * rng.normal();
    }
    const double C = 3.0;
    const Eigen::MatrixXd G = rbf_kernel(x, x, 2.0);
    const FittedModel model = svr_fit(G, y, C, 0.05);
    CHECK(std::abs(model.dual_coef.sum()) < 1e-8);
    for (int i = 0; i < m; ++i) {
        CHECK(std::abs(model.dual_coef(i)) <= C + 1e-12);
    }
    CHECK_THROWS_AS(svr_fit(G, y, 1.0, -0.1), ConfigError);
}

TEST_CASE("svr with tiny epsilon tracks krr with tiny lambda on 5 points") {
    Eigen::VectorXd x(5), y(5);
    x << -1.0, -0.5, 0.0, 0.5, 1.0;
    y << 0.1, 0.4, 0.5, 0.6, 0.9;
    const Eigen::MatrixXd G = rbf_kernel(x, x, 1.0);

    const FittedModel svr = svr_fit(G, y, 1e4, 0.0, 1e-6, 500000);
    const FittedModel krr = krr_fit(G, y, 1e-9);

    const Eigen::VectorXd ps = svr_predict(svr, G);
    const Eigen::VectorXd pk = krr_predict(krr, G);
    CHECK((ps - pk).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("svr dual objective matches the projected-gradient reference") {
    Rng rng(31);
    const int m = 10;
    Eigen::VectorXd x(m), y(m);
    for (int i = 0; i < m; ++i) {
        x(i) = rng.uniform(-1, 1);
        y(i) = 0.5 * x(i) + 0.1 * rng.normal();
    }
    const double C = 2.0, eps = 0.05;
    const Eigen::MatrixXd K = rbf_kernel(x, x, 1.0);
    const FittedModel model = svr_fit(K, y, C, eps, 1e-5, 500000);

    // doubled problem objective at the SMO solution
    const int n = 2 * m;
    Eigen::MatrixXd Q(n, n);
    Eigen::VectorXd p(n), labels(n);
    for (int s = 0; s < n; ++s) {
        labels(s) = s < m ? 1.0 : -1.0;
        p(s) = s < m ? eps - y(s) : eps + y(s - m);
    }
    for (int s = 0; s < n; ++s) {
        for (int t = 0; t < n; ++t) {
            Q(s, t) = labels(s) * labels(t) * K(s % m, t % m);
        }
    }
    const auto pg = oracles::projected_gradient_dual(Q, p, labels, C, 40000);

    // recover the doubled-variable objective from beta: beta = a+ - a-,
    // objective in beta form: 1/2 b^T K b - y^T b + eps * |b|_1
    const Eigen::VectorXd beta = model.dual_coef;
    const double smo_obj =
        0.5 * beta.dot(K * beta) - y.dot(beta) + eps * beta.cwiseAbs().sum();
    const double scale = std::max({std::abs(pg.objective), std::abs(smo_obj), 1e-12});
    CHECK(std::abs(smo_obj - pg.objective) / scale < 1e-4);
}

TEST_CASE("mse and roc_auc basics") {
    Eigen::VectorXd y(3), yhat(3);
    y << 1, 2, 3;
    CHECK(mse(y, y) == 0.0);
    yhat << 1, 2, 4;
    CHECK(mse(y, yhat) == doctest::Approx(1.0 / 3.0));

    Eigen::VectorXd scores(4), labels(4);
    scores << 0.1, 0.2, 0.8, 0.9;
    labels << -1, -1, 1, 1;
    CHECK(roc_auc(scores, labels) == doctest::Approx(1.0));
    CHECK(roc_auc((-scores).eval(), labels) == doctest::Approx(0.0));

    CHECK_THROWS_AS(roc_auc(scores, Eigen::VectorXd::Ones(4)), LabelError);
}

TEST_CASE("roc_auc handles ties by pair counting with half credit") {
    const std::vector<double> s = {0.5, 0.5, 0.9, 0.1};
    const std::vector<int> l = {1, 0, 1, 0};
    const double expected = oracles::pair_counting_auc(s, l); // = 0.875
    CHECK(expected == doctest::Approx(0.875));

    Eigen::VectorXd scores(4), labels(4);
    scores << 0.5, 0.5, 0.9, 0.1;
    labels << 1, -1, 1, -1;
    CHECK(roc_auc(scores, labels) == doctest::Approx(expected));

    // a handful of random tie patterns against the pair-counting oracle
    Rng rng(13);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 10;
        std::vector<double> sv(n);
        std::vector<int> lv(n);
        Eigen::VectorXd se(n), le(n);
        bool pos = false, neg = false;
        for (int i = 0; i < n; ++i) {
            sv[i] = std::round(rng.uniform() * 4.0) / 4.0; // forced ties
            lv[i] = rng.uniform() < 0.5 ? 1 : 0;
            se(i) = sv[i];
            le(i) = lv[i] == 1 ? 1.0 : -1.0;
            (lv[i] == 1 ? pos : neg) = true;
        }
        if (!pos || !neg) {
            continue;
        }
        CHECK(roc_auc(se, le) == doctest::Approx(oracles::pair_counting_auc(sv, lv)));
    }
}

namespace {

Dataset toy_regression(int n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.task = Task::Regression;
    ds.seed = seed;
    ds.X.resize(n, 2);
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) {
        ds.X(i, 0) = rng.uniform();
        ds.X(i, 1) = rng.uniform();
        ds.y(i) = std::sin(3 * ds.X(i, 0)) + ds.X(i, 1);
        if (i < n * 4 / 5) {
            ds.train_idx.push_back(i);
        } else {
            ds.test_idx.push_back(i);
        }
    }
    return ds;
}

PipelineConfig toy_pipeline() {
    PipelineConfig config;
    config.circuit = named_circuit(CircuitName::SeparableRx, 2, 1, 2, EncodingStrategy::Option1);
    config.kernel.kind = KernelKind::FQK;
    config.learner = LearnerKind::QKRR;
    config.lambda = 1e-6;
    return config;
}

} // namespace

TEST_CASE("cv_evaluate is deterministic and uses min(mean, median)") {
    const Dataset ds = toy_regression(40, 19);
    const PipelineConfig config = toy_pipeline();

    const CVResult a = cv_evaluate(ds, config, 5);
    const CVResult b = cv_evaluate(ds, config, 5);
    CHECK(a.objective == b.objective);
    CHECK(a.fold_scores == b.fold_scores);

    std::array<double, 5> sorted = a.fold_scores;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (double s : a.fold_scores) {
        mean += s;
    }
    mean /= 5.0;
    CHECK(a.objective == doctest::Approx(std::min(mean, sorted[2])));

    Dataset tiny = toy_regression(8, 19);
    CHECK_THROWS_AS(cv_evaluate(tiny, config, 5), ConfigError);
}

TEST_CASE("objective examples: min(mean, median)") {
    // fold scores (1,1,1,1,0): mean 0.8, median 1 -> 0.8
    std::array<double, 5> scores = {1, 1, 1, 1, 0};
    std::array<double, 5> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (double s : scores) {
        mean += s;
    }
    mean /= 5.0;
    CHECK(std::min(mean, sorted[2]) == doctest::Approx(0.8));
}

TEST_CASE("test rows never influence cross-validation scores") {
    Dataset ds = toy_regression(40, 23);
    const PipelineConfig config = toy_pipeline();
    const CVResult before = cv_evaluate(ds, config, 9);

    // scramble the held-out block
    Rng rng(1);
    for (int idx : ds.test_idx) {
        ds.X(idx, 0) = rng.uniform(-5, 5);
        ds.X(idx, 1) = rng.uniform(-5, 5);
        ds.y(idx) = rng.uniform(-5, 5);
    }
    const CVResult after = cv_evaluate(ds, config, 9);
    CHECK(before.fold_scores == after.fold_scores);
}

TEST_CASE("fit_final_and_test reports the right score kind") {
    const Dataset ds = toy_regression(40, 29);
    const PipelineConfig config = toy_pipeline();
    const FinalScores scores = fit_final_and_test(ds, config);
    CHECK(scores.train_score >= 0.0); // MSE
    CHECK(scores.test_score >= 0.0);
    CHECK(scores.train_score < 0.05); // near-interpolation on the toy set
}

TEST_CASE("classification folds are stratified and single-class folds fail loudly") {
    Rng rng(37);
    Dataset ds;
    ds.task = Task::Classification;
    ds.X.resize(30, 2);
    ds.y.resize(30);
    for (int i = 0; i < 30; ++i) {
        const double cls = i % 2 == 0 ? 1.0 : -1.0;
        ds.X(i, 0) = cls + 0.3 * rng.normal();
        ds.X(i, 1) = rng.normal();
        ds.y(i) = cls;
        if (i < 25) {
            ds.train_idx.push_back(i);
        } else {
            ds.test_idx.push_back(i);
        }
    }
    PipelineConfig config;
    config.circuit = named_circuit(CircuitName::SeparableRx, 2, 1, 2, EncodingStrategy::Option1);
    config.kernel.kind = KernelKind::FQK;
    config.learner = LearnerKind::QSVC;
    config.C = 5.0;
    const CVResult result = cv_evaluate(ds, config, 3);
    CHECK(result.scoring == Scoring::RocAuc);
    for (double s : result.fold_scores) {
        CHECK(s >= 0.5); // stratified folds make the toy problem learnable
    }
}
