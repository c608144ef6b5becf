#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qkbench/circuits.hpp"

namespace qkb {

enum class KernelKind { FQK, PQK };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

enum class OperatorSetName { X1, Z1, XZ1, AllP1, X2, Z2, XZ2, AllP2, P1plus2 };

std::string to_string(OperatorSetName name);
OperatorSetName opset_from_string(const std::string& name);
const std::vector<OperatorSetName>& all_opsets();

/// Pauli terms defining the projected features, in deterministic order:
/// qubits ascending, pairs lexicographic, Paulis in order X, Y, Z.
struct OperatorSet {
    OperatorSetName name;
    std::vector<PauliString> terms;
};

OperatorSet expand_operator(OperatorSetName name, int n_qubits);

enum class OuterKernelKind { Gaussian, Matern32, RationalQuadratic };

std::string to_string(OuterKernelKind kind);
OuterKernelKind outer_from_string(const std::string& name);

struct OuterKernelParams {
    OuterKernelKind kind = OuterKernelKind::Gaussian;
    double gamma = 1.0; // Gaussian
    double ell = 1.0;   // Matern32, RationalQuadratic
    double alpha = 1.0; // RationalQuadratic

    void validate() const;
};

double outer_kernel(std::span<const double> u, std::span<const double> v,
                    const OuterKernelParams& params);

/// Everything needed to turn encoded states into a kernel value; opset and
/// outer are ignored for FQK.
struct KernelConfig {
    KernelKind kind = KernelKind::FQK;
    OperatorSetName opset = OperatorSetName::AllP1;
    OuterKernelParams outer{};
};

struct GramMeta {
    KernelKind kind = KernelKind::FQK;
    std::string circuit;
    std::string operator_set;
    std::string outer_kernel;
    std::map<std::string, double> hyperparameters;
};

// --- Gram assembly (OpenMP-parallel over samples / entries) ---

/// Symmetric training Gram |<psi(x_i)|psi(x_j)>|^2; only the upper triangle
/// is computed and then mirrored.
Eigen::MatrixXd fqk_gram(const CircuitSpec& spec, std::span<const double> params,
                         const Eigen::MatrixXd& X);

/// Rectangular Gram between two sample sets (rows of X against rows of Xp).
Eigen::MatrixXd fqk_gram(const CircuitSpec& spec, std::span<const double> params,
                         const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp);

/// Row i, column t = <psi(x_i)| term_t |psi(x_i)>.
Eigen::MatrixXd pqk_features(const CircuitSpec& spec, std::span<const double> params,
                             const Eigen::MatrixXd& X, const OperatorSet& opset);

Eigen::MatrixXd pqk_gram(const Eigen::MatrixXd& F, const OuterKernelParams& params);
Eigen::MatrixXd pqk_gram(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Fp,
                         const OuterKernelParams& params);

/// Unified entry point used by the learners and the tuner.
Eigen::MatrixXd kernel_gram(const CircuitSpec& spec, std::span<const double> params,
                            const KernelConfig& config, const Eigen::MatrixXd& X);
Eigen::MatrixXd kernel_gram(const CircuitSpec& spec, std::span<const double> params,
                            const KernelConfig& config, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& Xp);

/// Serial reference implementations; entry-by-entry, no mirroring, no
/// threading. Kept for testing the parallel paths and for the benchmark.
namespace ref {
Eigen::MatrixXd fqk_gram(const CircuitSpec& spec, std::span<const double> params,
                         const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp);
Eigen::MatrixXd pqk_features(const CircuitSpec& spec, std::span<const double> params,
                             const Eigen::MatrixXd& X, const OperatorSet& opset);
Eigen::MatrixXd pqk_gram(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Fp,
                         const OuterKernelParams& params);
} // namespace ref

// --- Gram diagnostics ---

/// Mean squared entry difference sum_ij (G_ij - G'_ij)^2 / |G|. Both inputs
/// are expected to carry normalized entries; min-max normalize first when
/// comparing across kernel kinds.
double gram_distance(const Eigen::MatrixXd& G, const Eigen::MatrixXd& Gp);

/// Affine rescale of all entries onto [0, 1]; constant matrices map to all
/// zeros.
Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& G);

/// Inverts the Gaussian outer kernel entry-wise: F_ij = -log(G_ij) / gamma.
Eigen::MatrixXd extract_F(const Eigen::MatrixXd& G, double gamma);

/// Population variance of the strictly off-diagonal entries.
double gram_variance(const Eigen::MatrixXd& G);

/// Kernel-target alignment <G, yy^T>_F / (|G|_F |yy^T|_F).
double kta(const Eigen::MatrixXd& G, const Eigen::VectorXd& y);

struct KtaConfig {
    int iterations = 100;
    double learning_rate = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double fd_step = 1e-3; // central finite differences
};

struct KtaResult {
    std::vector<double> params;     // best-seen iterate
    std::vector<double> trace;      // alignment per iteration, trace[0] = initial
    double initial_kta = 0.0;
    double best_kta = 0.0;
};

/// Adam ascent on the kernel-target alignment of the training Gram with
/// central finite-difference gradients; returns the best-seen iterate.
KtaResult kta_optimize(const CircuitSpec& spec, std::span<const double> params0,
                       const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const KernelConfig& kernel, const KtaConfig& config = {});

} // namespace qkb
