#include "qkbench/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qkb {

namespace {

const std::vector<PauliOp> kAllPaulis = {PauliOp::X, PauliOp::Y, PauliOp::Z};

std::vector<PauliOp> paulis_for(OperatorSetName name) {
    switch (name) {
    case OperatorSetName::X1:
    case OperatorSetName::X2:
        return {PauliOp::X};
    case OperatorSetName::Z1:
    case OperatorSetName::Z2:
        return {PauliOp::Z};
    case OperatorSetName::XZ1:
    case OperatorSetName::XZ2:
        return {PauliOp::X, PauliOp::Z};
    default:
        return kAllPaulis;
    }
}

bool is_two_local(OperatorSetName name) {
    switch (name) {
    case OperatorSetName::X2:
    case OperatorSetName::Z2:
    case OperatorSetName::XZ2:
    case OperatorSetName::AllP2:
        return true;
    default:
        return false;
    }
}

void append_one_local(std::vector<PauliString>& terms, const std::vector<PauliOp>& paulis,
                      int n_qubits) {
    for (int q = 0; q < n_qubits; ++q) {
        for (PauliOp p : paulis) {
            terms.push_back(PauliString::single(p, q));
        }
    }
}

void append_two_local(std::vector<PauliString>& terms, const std::vector<PauliOp>& paulis,
                      int n_qubits) {
    for (int i = 0; i < n_qubits; ++i) {
        for (int j = i + 1; j < n_qubits; ++j) {
            for (PauliOp p : paulis) {
                terms.push_back(PauliString::pair(p, i, j));
            }
        }
    }
}

std::vector<StateVector> encode_all(const CircuitSpec& spec, std::span<const double> params,
                                    const Eigen::MatrixXd& X) {
    const int m = static_cast<int>(X.rows());
    std::vector<StateVector> states;
    states.reserve(m);
    for (int i = 0; i < m; ++i) {
        states.emplace_back(spec.n_qubits);
    }
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < m; ++i) {
        std::vector<double> x(X.cols());
        for (int c = 0; c < X.cols(); ++c) {
            x[c] = X(i, c);
        }
        states[i] = encode_state(spec, x, params);
    }
    return states;
}

double fidelity(const StateVector& a, const StateVector& b) {
    return std::norm(inner_product(a, b));
}

} // namespace

std::string to_string(KernelKind kind) { return kind == KernelKind::FQK ? "fqk" : "pqk"; }

KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "fqk" || name == "FQK") {
        return KernelKind::FQK;
    }
    if (name == "pqk" || name == "PQK") {
        return KernelKind::PQK;
    }
    throw ConfigError("unknown kernel kind: " + name);
}

std::string to_string(OperatorSetName name) {
    switch (name) {
    case OperatorSetName::X1:
        return "X1";
    case OperatorSetName::Z1:
        return "Z1";
    case OperatorSetName::XZ1:
        return "XZ1";
    case OperatorSetName::AllP1:
        return "AllP1";
    case OperatorSetName::X2:
        return "X2";
    case OperatorSetName::Z2:
        return "Z2";
    case OperatorSetName::XZ2:
        return "XZ2";
    case OperatorSetName::AllP2:
        return "AllP2";
    case OperatorSetName::P1plus2:
        return "P1plus2";
    }
    return "?";
}

OperatorSetName opset_from_string(const std::string& name) {
    for (OperatorSetName s : all_opsets()) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw ConfigError("unknown operator set: " + name);
}

const std::vector<OperatorSetName>& all_opsets() {
    static const std::vector<OperatorSetName> names = {
        OperatorSetName::X1,  OperatorSetName::Z1,  OperatorSetName::XZ1,
        OperatorSetName::AllP1, OperatorSetName::X2, OperatorSetName::Z2,
        OperatorSetName::XZ2, OperatorSetName::AllP2, OperatorSetName::P1plus2,
    };
    return names;
}

OperatorSet expand_operator(OperatorSetName name, int n_qubits) {
    if (n_qubits < 1) {
        throw ConfigError("expand_operator: n_qubits must be positive");
    }
    if ((is_two_local(name) || name == OperatorSetName::P1plus2) && n_qubits < 2) {
        throw ConfigError("operator set " + to_string(name) + " needs at least 2 qubits");
    }
    OperatorSet set;
    set.name = name;
    if (name == OperatorSetName::P1plus2) {
        append_one_local(set.terms, kAllPaulis, n_qubits);
        append_two_local(set.terms, kAllPaulis, n_qubits);
    } else if (is_two_local(name)) {
        append_two_local(set.terms, paulis_for(name), n_qubits);
    } else {
        append_one_local(set.terms, paulis_for(name), n_qubits);
    }
    return set;
}

std::string to_string(OuterKernelKind kind) {
    switch (kind) {
    case OuterKernelKind::Gaussian:
        return "gaussian";
    case OuterKernelKind::Matern32:
        return "matern32";
    case OuterKernelKind::RationalQuadratic:
        return "rq";
    }
    return "?";
}

OuterKernelKind outer_from_string(const std::string& name) {
    if (name == "gaussian" || name == "rbf") {
        return OuterKernelKind::Gaussian;
    }
    if (name == "matern32" || name == "matern") {
        return OuterKernelKind::Matern32;
    }
    if (name == "rq" || name == "rationalquadratic") {
        return OuterKernelKind::RationalQuadratic;
    }
    throw ConfigError("unknown outer kernel: " + name);
}

void OuterKernelParams::validate() const {
    switch (kind) {
    case OuterKernelKind::Gaussian:
        // gamma = 0 is legal (all-ones Gram); negative is not
        if (!(gamma >= 0.0)) {
            throw ConfigError("gaussian outer kernel requires gamma >= 0");
        }
        break;
    case OuterKernelKind::Matern32:
        if (!(ell > 0.0)) {
            throw ConfigError("matern32 outer kernel requires ell > 0");
        }
        break;
    case OuterKernelKind::RationalQuadratic:
        if (!(ell > 0.0) || !(alpha > 0.0)) {
            throw ConfigError("rational quadratic outer kernel requires ell > 0 and alpha > 0");
        }
        break;
    }
}

namespace {

double outer_from_sqdist(double d2, const OuterKernelParams& p) {
    switch (p.kind) {
    case OuterKernelKind::Gaussian:
        return std::exp(-p.gamma * d2);
    case OuterKernelKind::Matern32: {
        const double t = std::sqrt(3.0 * d2) / p.ell;
        return (1.0 + t) * std::exp(-t);
    }
    case OuterKernelKind::RationalQuadratic:
        return std::pow(1.0 + d2 / (2.0 * p.alpha * p.ell * p.ell), -p.alpha);
    }
    return 0.0;
}

double squared_distance(std::span<const double> u, std::span<const double> v) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double d = u[k] - v[k];
        d2 += d * d;
    }
    return d2;
}

double row_sqdist(const Eigen::MatrixXd& F, int i, const Eigen::MatrixXd& Fp, int j) {
    return (F.row(i) - Fp.row(j)).squaredNorm();
}

} // namespace

double outer_kernel(std::span<const double> u, std::span<const double> v,
                    const OuterKernelParams& params) {
    params.validate();
    if (u.size() != v.size()) {
        throw ShapeError("outer_kernel: feature-length mismatch");
    }
    return outer_from_sqdist(squared_distance(u, v), params);
}

Eigen::MatrixXd fqk_gram(const CircuitSpec& spec, std::span<const double> params,
                         const Eigen::MatrixXd& X) {
    const auto states = encode_all(spec, params, X);
    const int m = static_cast<int>(states.size());
    Eigen::MatrixXd G(m, m);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < m; ++i) {
        G(i, i) = 1.0;
        for (int j = i + 1; j < m; ++j) {
            const double k = fidelity(states[i], states[j]);
            G(i, j) = k;
            G(j, i) = k;
        }
    }
    return G;
}

Eigen::MatrixXd fqk_gram(const CircuitSpec& spec, std::span<const double> params,
                         const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp) {
    const auto states = encode_all(spec, params, X);
    const auto states_p = encode_all(spec, params, Xp);
    Eigen::MatrixXd G(states.size(), states_p.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < static_cast<int>(states.size()); ++i) {
        for (int j = 0; j < static_cast<int>(states_p.size()); ++j) {
            G(i, j) = fidelity(states[i], states_p[j]);
        }
    }
    return G;
}

Eigen::MatrixXd pqk_features(const CircuitSpec& spec, std::span<const double> params,
                             const Eigen::MatrixXd& X, const OperatorSet& opset) {
    for (const auto& term : opset.terms) {
        if (term.max_qubit() >= spec.n_qubits) {
            throw IndexError("operator set addresses qubit " + std::to_string(term.max_qubit()) +
                             " beyond circuit width " + std::to_string(spec.n_qubits));
        }
    }
    const int m = static_cast<int>(X.rows());
    const int t = static_cast<int>(opset.terms.size());
    Eigen::MatrixXd F(m, t);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < m; ++i) {
        std::vector<double> x(X.cols());
        for (int c = 0; c < X.cols(); ++c) {
            x[c] = X(i, c);
        }
        const StateVector state = encode_state(spec, x, params);
        for (int k = 0; k < t; ++k) {
            F(i, k) = pauli_expectation(state, opset.terms[k]);
        }
    }
    return F;
}

Eigen::MatrixXd pqk_gram(const Eigen::MatrixXd& F, const OuterKernelParams& params) {
    params.validate();
    const int m = static_cast<int>(F.rows());
    Eigen::MatrixXd G(m, m);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < m; ++i) {
        G(i, i) = 1.0;
        for (int j = i + 1; j < m; ++j) {
            const double k = outer_from_sqdist(row_sqdist(F, i, F, j), params);
            G(i, j) = k;
            G(j, i) = k;
        }
    }
    return G;
}

Eigen::MatrixXd pqk_gram(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Fp,
                         const OuterKernelParams& params) {
    params.validate();
    if (F.cols() != Fp.cols()) {
        throw ShapeError("pqk_gram: feature dimension mismatch");
    }
    Eigen::MatrixXd G(F.rows(), Fp.rows());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < static_cast<int>(F.rows()); ++i) {
        for (int j = 0; j < static_cast<int>(Fp.rows()); ++j) {
            G(i, j) = outer_from_sqdist(row_sqdist(F, i, Fp, j), params);
        }
    }
    return G;
}

Eigen::MatrixXd kernel_gram(const CircuitSpec& spec, std::span<const double> params,
                            const KernelConfig& config, const Eigen::MatrixXd& X) {
    if (config.kind == KernelKind::FQK) {
        return fqk_gram(spec, params, X);
    }
    const OperatorSet opset = expand_operator(config.opset, spec.n_qubits);
    return pqk_gram(pqk_features(spec, params, X, opset), config.outer);
}

Eigen::MatrixXd kernel_gram(const CircuitSpec& spec, std::span<const double> params,
                            const KernelConfig& config, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& Xp) {
    if (config.kind == KernelKind::FQK) {
        return fqk_gram(spec, params, X, Xp);
    }
    const OperatorSet opset = expand_operator(config.opset, spec.n_qubits);
    return pqk_gram(pqk_features(spec, params, X, opset),
                    pqk_features(spec, params, Xp, opset), config.outer);
}

namespace ref {

Eigen::MatrixXd fqk_gram(const CircuitSpec& spec, std::span<const double> params,
                         const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp) {
    Eigen::MatrixXd G(X.rows(), Xp.rows());
    for (int i = 0; i < X.rows(); ++i) {
        std::vector<double> xi(X.cols());
        for (int c = 0; c < X.cols(); ++c) {
            xi[c] = X(i, c);
        }
        const StateVector a = encode_state(spec, xi, params);
        for (int j = 0; j < Xp.rows(); ++j) {
            std::vector<double> xj(Xp.cols());
            for (int c = 0; c < Xp.cols(); ++c) {
                xj[c] = Xp(j, c);
            }
            const StateVector b = encode_state(spec, xj, params);
            G(i, j) = std::norm(inner_product(a, b));
        }
    }
    return G;
}

Eigen::MatrixXd pqk_features(const CircuitSpec& spec, std::span<const double> params,
                             const Eigen::MatrixXd& X, const OperatorSet& opset) {
    Eigen::MatrixXd F(X.rows(), opset.terms.size());
    for (int i = 0; i < X.rows(); ++i) {
        std::vector<double> x(X.cols());
        for (int c = 0; c < X.cols(); ++c) {
            x[c] = X(i, c);
        }
        const StateVector state = encode_state(spec, x, params);
        for (int k = 0; k < static_cast<int>(opset.terms.size()); ++k) {
            F(i, k) = pauli_expectation(state, opset.terms[k]);
        }
    }
    return F;
}

Eigen::MatrixXd pqk_gram(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Fp,
                         const OuterKernelParams& params) {
    params.validate();
    Eigen::MatrixXd G(F.rows(), Fp.rows());
    for (int i = 0; i < F.rows(); ++i) {
        for (int j = 0; j < Fp.rows(); ++j) {
            G(i, j) = outer_from_sqdist(row_sqdist(F, i, Fp, j), params);
        }
    }
    return G;
}

} // namespace ref

double gram_distance(const Eigen::MatrixXd& G, const Eigen::MatrixXd& Gp) {
    if (G.rows() != Gp.rows() || G.cols() != Gp.cols()) {
        throw ShapeError("gram_distance: shape mismatch");
    }
    return (G - Gp).squaredNorm() / static_cast<double>(G.size());
}

Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& G) {
    const double lo = G.minCoeff();
    const double hi = G.maxCoeff();
    if (hi - lo < 1e-300) {
        return Eigen::MatrixXd::Zero(G.rows(), G.cols());
    }
    return (G.array() - lo) / (hi - lo);
}

Eigen::MatrixXd extract_F(const Eigen::MatrixXd& G, double gamma) {
    if (!(gamma > 0.0)) {
        throw ConfigError("extract_F: gamma must be positive");
    }
    if ((G.array() <= 0.0).any()) {
        throw DomainError("extract_F: Gram entries must be positive");
    }
    return -G.array().log() / gamma;
}

double gram_variance(const Eigen::MatrixXd& G) {
    if (G.rows() != G.cols()) {
        throw ShapeError("gram_variance: matrix must be square");
    }
    const int m = static_cast<int>(G.rows());
    if (m < 2) {
        throw DomainError("gram_variance: no off-diagonal entries in a 1x1 matrix");
    }
    const double count = static_cast<double>(m) * (m - 1);
    double mean = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i != j) {
                mean += G(i, j);
            }
        }
    }
    mean /= count;
    double var = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i != j) {
                const double d = G(i, j) - mean;
                var += d * d;
            }
        }
    }
    return var / count;
}

double kta(const Eigen::MatrixXd& G, const Eigen::VectorXd& y) {
    if (G.rows() != G.cols() || G.rows() != y.size()) {
        throw ShapeError("kta: Gram and label sizes do not match");
    }
    const Eigen::MatrixXd yyT = y * y.transpose();
    const double gnorm = G.norm();
    const double ynorm = yyT.norm();
    if (gnorm < 1e-300 || ynorm < 1e-300) {
        throw DegenerateError("kta: zero-norm Gram or label matrix");
    }
    return (G.array() * yyT.array()).sum() / (gnorm * ynorm);
}

KtaResult kta_optimize(const CircuitSpec& spec, std::span<const double> params0,
                       const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const KernelConfig& kernel, const KtaConfig& config) {
    if (spec.n_params == 0) {
        throw ConfigError("kta_optimize: circuit has no trainable parameters");
    }
    auto alignment = [&](const std::vector<double>& p) {
        return kta(kernel_gram(spec, p, kernel, X), y);
    };

    std::vector<double> params(params0.begin(), params0.end());
    KtaResult result;
    result.initial_kta = alignment(params);
    result.trace.push_back(result.initial_kta);
    result.best_kta = result.initial_kta;
    result.params = params;

    const int n = spec.n_params;
    std::vector<double> m(n, 0.0);
    std::vector<double> v(n, 0.0);
    std::vector<double> grad(n, 0.0);

    for (int it = 1; it <= config.iterations; ++it) {
        for (int k = 0; k < n; ++k) {
            std::vector<double> plus = params;
            std::vector<double> minus = params;
            plus[k] += config.fd_step;
            minus[k] -= config.fd_step;
            grad[k] = (alignment(plus) - alignment(minus)) / (2.0 * config.fd_step);
        }
        // Adam ascent
        for (int k = 0; k < n; ++k) {
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
            const double mhat = m[k] / (1.0 - std::pow(config.beta1, it));
            const double vhat = v[k] / (1.0 - std::pow(config.beta2, it));
            params[k] += config.learning_rate * mhat / (std::sqrt(vhat) + config.eps);
        }
        const double a = alignment(params);
        result.trace.push_back(a);
        if (a > result.best_kta) {
            result.best_kta = a;
            result.params = params;
        }
    }
    return result;
}

} // namespace qkb
