#include "qkbench/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

namespace qkb {

namespace {

bool is_constant(std::span<const double> x) {
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i] != x[0]) {
            return false;
        }
    }
    return true;
}

double pearson_coefficient(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        throw DegenerateError("correlation undefined for constant input");
    }
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

// two-sided p from the t statistic of r with the given degrees of freedom
double p_from_r(double r, int dof) {
    if (dof < 1) {
        return 1.0;
    }
    const double denom = 1.0 - r * r;
    if (denom <= 0.0) {
        return 0.0;
    }
    const double t = r * std::sqrt(static_cast<double>(dof) / denom);
    const boost::math::students_t dist(dof);
    return 2.0 * boost::math::cdf(dist, -std::abs(t));
}

CorrResult make_result(double r, double p, int n) {
    CorrResult res;
    res.coefficient = r;
    res.p_value = std::clamp(p, 0.0, 1.0);
    res.n = n;
    res.significant = res.p_value <= 0.05;
    return res;
}

void check_lengths(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ShapeError("correlation inputs differ in length");
    }
    if (x.size() < 3) {
        throw ShapeError("correlation needs at least 3 samples");
    }
}

double exact_spearman_p(std::span<const double> x, std::span<const double> y) {
    const auto rx = midranks(x);
    const auto ry = midranks(y);
    const double observed = std::abs(pearson_coefficient(rx, ry));
    std::vector<double> perm = ry;
    std::sort(perm.begin(), perm.end());
    std::size_t total = 0;
    std::size_t extreme = 0;
    do {
        const double r = pearson_coefficient(rx, perm);
        ++total;
        if (std::abs(r) >= observed - 1e-12) {
            ++extreme;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
}

} // namespace

std::vector<double> midranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

CorrResult pearson(std::span<const double> x, std::span<const double> y) {
    check_lengths(x, y);
    const double r = pearson_coefficient(x, y);
    return make_result(r, p_from_r(r, static_cast<int>(x.size()) - 2), static_cast<int>(x.size()));
}

CorrResult spearman(std::span<const double> x, std::span<const double> y, bool exact_small_n) {
    check_lengths(x, y);
    if (is_constant(x) || is_constant(y)) {
        throw DegenerateError("correlation undefined for constant input");
    }
    const auto rx = midranks(x);
    const auto ry = midranks(y);
    const double r = pearson_coefficient(rx, ry);
    double p;
    if (exact_small_n && x.size() <= 10) {
        p = exact_spearman_p(x, y);
    } else {
        p = p_from_r(r, static_cast<int>(x.size()) - 2);
    }
    return make_result(r, p, static_cast<int>(x.size()));
}

namespace {

// least-squares residuals of v against [1 Z]
Eigen::VectorXd regress_out(const Eigen::VectorXd& v, const Eigen::MatrixXd& Z) {
    Eigen::MatrixXd design(Z.rows(), Z.cols() + 1);
    design.col(0).setOnes();
    if (Z.cols() > 0) {
        design.rightCols(Z.cols()) = Z;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < design.cols()) {
        throw ConditioningError("partial_corr: rank-deficient control matrix");
    }
    return v - design * qr.solve(v);
}

} // namespace

CorrResult partial_corr(std::span<const double> x, std::span<const double> y,
                        const Eigen::MatrixXd& Z, CorrMethod method, PartialMode mode) {
    check_lengths(x, y);
    const int n = static_cast<int>(x.size());
    const int k = static_cast<int>(Z.cols());
    if (Z.rows() != 0 && Z.rows() != n) {
        throw ShapeError("partial_corr: control matrix row count mismatch");
    }
    if (n <= k + 2) {
        throw ShapeError("partial_corr: need n > #controls + 2");
    }

    Eigen::VectorXd vx(n), vy(n);
    Eigen::MatrixXd vz = Z;
    if (method == CorrMethod::Spearman) {
        const auto rx = midranks(x);
        const auto ry = midranks(y);
        for (int i = 0; i < n; ++i) {
            vx(i) = rx[i];
            vy(i) = ry[i];
        }
        for (int c = 0; c < k; ++c) {
            std::vector<double> col(n);
            for (int i = 0; i < n; ++i) {
                col[i] = Z(i, c);
            }
            const auto rc = midranks(col);
            for (int i = 0; i < n; ++i) {
                vz(i, c) = rc[i];
            }
        }
    } else {
        for (int i = 0; i < n; ++i) {
            vx(i) = x[i];
            vy(i) = y[i];
        }
    }

    const Eigen::VectorXd ex = (mode == PartialMode::SemipartialY) ? vx : regress_out(vx, vz);
    const Eigen::VectorXd ey = (mode == PartialMode::SemipartialX) ? vy : regress_out(vy, vz);

    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
        a[i] = ex(i);
        b[i] = ey(i);
    }
    const double r = pearson_coefficient(a, b);
    return make_result(r, p_from_r(r, n - k - 2), n);
}

CorrMatrix corr_matrix(const std::map<std::string, std::vector<double>>& columns,
                       const std::vector<std::string>& variables, CorrMethod method) {
    if (variables.empty()) {
        throw SchemaError("corr_matrix: empty variable selection");
    }
    std::vector<const std::vector<double>*> cols;
    cols.reserve(variables.size());
    std::size_t n = 0;
    for (const auto& name : variables) {
        auto it = columns.find(name);
        if (it == columns.end()) {
            throw SchemaError("corr_matrix: variable not present: " + name);
        }
        if (cols.empty()) {
            n = it->second.size();
        } else if (it->second.size() != n) {
            throw ShapeError("corr_matrix: column length mismatch for " + name);
        }
        cols.push_back(&it->second);
    }
    if (n < 3) {
        throw ShapeError("corr_matrix: need at least 3 rows");
    }

    const int v = static_cast<int>(variables.size());
    CorrMatrix out;
    out.variables = variables;
    out.coefficients = Eigen::MatrixXd::Identity(v, v);
    out.p_values = Eigen::MatrixXd::Zero(v, v);
    for (int i = 0; i < v; ++i) {
        for (int j = i + 1; j < v; ++j) {
            const auto res = (method == CorrMethod::Pearson) ? pearson(*cols[i], *cols[j])
                                                             : spearman(*cols[i], *cols[j]);
            out.coefficients(i, j) = res.coefficient;
            out.coefficients(j, i) = res.coefficient;
            out.p_values(i, j) = res.p_value;
            out.p_values(j, i) = res.p_value;
        }
    }
    return out;
}

std::vector<double> benjamini_hochberg(const std::vector<double>& p_values) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        const double scaled =
            p_values[order[k]] * static_cast<double>(m) / static_cast<double>(k + 1);
        running = std::min(running, scaled);
        adjusted[order[k]] = running;
    }
    return adjusted;
}

} // namespace qkb
