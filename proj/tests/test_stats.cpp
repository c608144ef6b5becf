#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qkbench/rng.hpp"
#include "qkbench/stats.hpp"
#include "support/oracles.hpp"

using namespace qkb;

TEST_CASE("pearson on exact linear relationships") {
    const std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> y(5);
    for (int i = 0; i < 5; ++i) {
        y[i] = 2.0 * x[i] + 1.0;
    }
    CHECK(pearson(x, y).coefficient == doctest::Approx(1.0));

    for (int i = 0; i < 5; ++i) {
        y[i] = -x[i];
    }
    CHECK(pearson(x, y).coefficient == doctest::Approx(-1.0));

    const std::vector<double> a = {1, 2, 3};
    const std::vector<double> b = {1, 3, 2};
    CHECK(pearson(a, b).coefficient == doctest::Approx(0.5));
}

TEST_CASE("pearson error paths") {
    const std::vector<double> constant = {2, 2, 2, 2};
    const std::vector<double> y = {1, 2, 3, 4};
    CHECK_THROWS_AS(pearson(constant, y), DegenerateError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ShapeError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}),
                    ShapeError);
}

TEST_CASE("spearman is the rank pearson") {
    // monotone map: rho = 1
    const std::vector<double> x = {0.5, 1.2, 2.0, 3.3, 4.1};
    std::vector<double> y(5);
    for (int i = 0; i < 5; ++i) {
        y[i] = x[i] * x[i] * x[i];
    }
    CHECK(spearman(x, y).coefficient == doctest::Approx(1.0));

    // ranks (1,2,3) vs (3,1,2): rho = -0.5
    const std::vector<double> a = {1, 2, 3};
    const std::vector<double> b = {3, 1, 2};
    CHECK(spearman(a, b).coefficient == doctest::Approx(-0.5));

    // invariant under monotone transforms
    Rng rng(4);
    std::vector<double> u(20), v(20), u3(20), ev(20);
    for (int i = 0; i < 20; ++i) {
        u[i] = rng.uniform(-2, 2);
        v[i] = rng.uniform(-2, 2);
        u3[i] = u[i] * u[i] * u[i];
        ev[i] = std::exp(v[i]);
    }
    CHECK(spearman(u, v).coefficient == doctest::Approx(spearman(u3, ev).coefficient));
}

TEST_CASE("spearman matches the closed form on distinct values") {
    Rng rng(8);
    for (int n = 4; n <= 8; ++n) {
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = rng.uniform();
            y[i] = rng.uniform();
        }
        CHECK(spearman(x, y).coefficient ==
              doctest::Approx(oracles::spearman_closed_form(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("spearman equals pearson of midranks including ties") {
    const std::vector<double> x = {1.0, 1.0, 2.0, 3.0, 3.0, 4.0};
    const std::vector<double> y = {2.0, 1.0, 1.0, 5.0, 4.0, 4.0};
    const auto rx = midranks(x);
    const auto ry = midranks(y);
    CHECK(spearman(x, y).coefficient == doctest::Approx(pearson(rx, ry).coefficient));
}

TEST_CASE("midranks average tied positions") {
    const std::vector<double> x = {10.0, 20.0, 20.0, 30.0};
    const auto r = midranks(x);
    CHECK(r[0] == doctest::Approx(1.0));
    CHECK(r[1] == doctest::Approx(2.5));
    CHECK(r[2] == doctest::Approx(2.5));
    CHECK(r[3] == doctest::Approx(4.0));
}

TEST_CASE("p-values behave: bounded, decreasing in |r| at fixed n") {
    Rng rng(10);
    const int n = 30;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.uniform();
    }
    double prev_p = 1.1;
    for (double strength : {0.1, 0.5, 2.0, 10.0}) {
        std::vector<double> y(n);
        Rng noise(11);
        for (int i = 0; i < n; ++i) {
            y[i] = strength * x[i] + noise.normal();
        }
        const CorrResult res = pearson(x, y);
        CHECK(res.p_value >= 0.0);
        CHECK(res.p_value <= 1.0);
        CHECK(res.p_value < prev_p);
        prev_p = res.p_value;
    }
    CHECK(pearson(std::vector<double>{1, 2, 3, 4},
                  std::vector<double>{2, 4, 6, 8})
              .p_value == doctest::Approx(0.0));
}

TEST_CASE("significance flag sits at the 0.05 threshold") {
    Rng rng(12);
    const int n = 120;
    std::vector<double> x(n), strong(n), weak(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.uniform();
        strong[i] = x[i] + 0.1 * rng.normal();
        weak[i] = rng.uniform();
    }
    const auto s = spearman(x, strong);
    CHECK(s.significant);
    CHECK(s.p_value <= 0.05);
    const auto w = spearman(x, weak);
    CHECK(w.significant == (w.p_value <= 0.05));
}

TEST_CASE("exact permutation p-value for small n agrees with extremeness counting") {
    const std::vector<double> x = {1, 2, 3, 4, 5};
    const std::vector<double> y = {1, 2, 3, 5, 4};
    const auto exact = spearman(x, y, /*exact_small_n=*/true);
    CHECK(exact.p_value > 0.0);
    CHECK(exact.p_value <= 1.0);
    // perfectly monotone: only the two extreme orderings match |rho| = 1
    const std::vector<double> mono = {1, 2, 3, 4, 5};
    const auto perfect = spearman(x, mono, true);
    CHECK(perfect.p_value == doctest::Approx(2.0 / 120.0));
}

TEST_CASE("partial correlation with no controls reduces to the plain coefficient") {
    Rng rng(14);
    const int n = 40;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.uniform();
        y[i] = 0.7 * x[i] + 0.2 * rng.normal();
    }
    const Eigen::MatrixXd empty(n, 0);
    CHECK(partial_corr(x, y, empty, CorrMethod::Pearson).coefficient ==
          doctest::Approx(pearson(x, y).coefficient).epsilon(1e-12));
    CHECK(partial_corr(x, y, empty, CorrMethod::Spearman).coefficient ==
          doctest::Approx(spearman(x, y).coefficient).epsilon(1e-12));
}

TEST_CASE("controlling for a shared cause removes the correlation") {
    Rng rng(15);
    const int n = 200;
    std::vector<double> x(n), y(n);
    Eigen::MatrixXd Z(n, 1);
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        Z(i, 0) = z;
        x[i] = z + 0.05 * rng.normal();
        y[i] = z + 0.05 * rng.normal();
    }
    CHECK(std::abs(pearson(x, y).coefficient) > 0.9);
    const auto part = partial_corr(x, y, Z, CorrMethod::Pearson);
    CHECK(std::abs(part.coefficient) < 0.2);
    const auto spart = partial_corr(x, y, Z, CorrMethod::Spearman);
    CHECK(std::abs(spart.coefficient) < 0.2);
}

TEST_CASE("partial correlation is symmetric; semi-partial picks one side") {
    Rng rng(16);
    const int n = 100;
    std::vector<double> x(n), y(n);
    Eigen::MatrixXd Z(n, 2);
    for (int i = 0; i < n; ++i) {
        Z(i, 0) = rng.normal();
        Z(i, 1) = rng.normal();
        x[i] = Z(i, 0) + 0.5 * rng.normal();
        y[i] = 0.4 * x[i] + Z(i, 1) + 0.5 * rng.normal();
    }
    const auto xy = partial_corr(x, y, Z, CorrMethod::Pearson, PartialMode::Partial);
    const auto yx = partial_corr(y, x, Z, CorrMethod::Pearson, PartialMode::Partial);
    CHECK(xy.coefficient == doctest::Approx(yx.coefficient).epsilon(1e-12));

    // semipartial_x regresses Z out of x only; it differs from the full
    // partial in general
    const auto sx = partial_corr(x, y, Z, CorrMethod::Pearson, PartialMode::SemipartialX);
    CHECK(sx.coefficient != doctest::Approx(xy.coefficient).epsilon(1e-6));
}

TEST_CASE("rank-deficient controls raise a conditioning error") {
    Rng rng(17);
    const int n = 30;
    std::vector<double> x(n), y(n);
    Eigen::MatrixXd Z(n, 2);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.uniform();
        y[i] = rng.uniform();
        Z(i, 0) = rng.normal();
        Z(i, 1) = 2.0 * Z(i, 0); // collinear
    }
    CHECK_THROWS_AS(partial_corr(x, y, Z, CorrMethod::Pearson), ConditioningError);

    // too few samples for the control count
    std::vector<double> sx = {1, 2, 3, 4};
    std::vector<double> sy = {2, 1, 4, 3};
    Eigen::MatrixXd bigz = Eigen::MatrixXd::Random(4, 2);
    CHECK_THROWS_AS(partial_corr(sx, sy, bigz, CorrMethod::Pearson), ShapeError);
}

TEST_CASE("correlation matrix layout and edge cases") {
    Rng rng(18);
    const int n = 300;
    std::map<std::string, std::vector<double>> columns;
    columns["a"].resize(n);
    columns["b"].resize(n);
    columns["c"].resize(n);
    for (int i = 0; i < n; ++i) {
        columns["a"][i] = rng.uniform();
        columns["b"][i] = rng.uniform();
        columns["c"][i] = columns["a"][i]; // duplicate of a
    }
    const CorrMatrix m = corr_matrix(columns, {"a", "b", "c"}, CorrMethod::Spearman);
    CHECK(m.coefficients(0, 2) == doctest::Approx(1.0));
    CHECK(m.coefficients(2, 0) == doctest::Approx(1.0));
    CHECK(m.coefficients(0, 0) == doctest::Approx(1.0));
    CHECK(std::abs(m.coefficients(0, 1)) < 0.15); // independent at n = 300
    CHECK(m.coefficients(1, 0) == m.coefficients(0, 1));
    CHECK(m.significant(0, 2));

    CHECK_THROWS_AS(corr_matrix(columns, {}, CorrMethod::Pearson), SchemaError);
    CHECK_THROWS_AS(corr_matrix(columns, {"a", "nope"}, CorrMethod::Pearson), SchemaError);
}

TEST_CASE("benjamini-hochberg adjustment is monotone and bounded") {
    const std::vector<double> p = {0.001, 0.02, 0.03, 0.04, 0.9};
    const auto adj = benjamini_hochberg(p);
    REQUIRE(adj.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(adj[i] >= p[i] - 1e-15);
        CHECK(adj[i] <= 1.0);
    }
    // BH at the largest p equals the raw p
    CHECK(adj[4] == doctest::Approx(0.9));
    // classic worked value: 0.02 * 5 / 2 = 0.05
    CHECK(adj[1] == doctest::Approx(0.05));
}
