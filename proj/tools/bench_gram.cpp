// Benchmark of the production Gram assembly (states encoded once per
// sample, upper triangle mirrored, OpenMP over rows) against the serial
// entry-by-entry reference. The two paths must agree to machine precision;
// the table reports wall times and the max entry difference. On a single
// core the FQK gap comes from state reuse; extra cores widen it further.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qkbench/datasets.hpp"
#include "qkbench/kernels.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void bench_case(const char* label, int n_qubits, int m_samples, int n_layers) {
    using namespace qkb;
    const Dataset ds = friedman1(n_qubits, m_samples, 0.0, 7);
    // map features into the canonical encoding range
    const Eigen::MatrixXd X =
        (ds.X.array() - 0.5) * 3.0; // roughly [-1.5, 1.5]

    const CircuitSpec spec = named_circuit(CircuitName::HardwareEfficientRx, n_qubits,
                                           n_layers, n_qubits, EncodingStrategy::Option1);
    const std::vector<double> params = init_params(spec, 1);

    auto t0 = clock_type::now();
    const Eigen::MatrixXd serial = ref::fqk_gram(spec, params, X, X);
    const double t_serial = seconds_since(t0);

    t0 = clock_type::now();
    const Eigen::MatrixXd parallel = fqk_gram(spec, params, X);
    const double t_parallel = seconds_since(t0);

    const double diff = (serial - parallel).cwiseAbs().maxCoeff();
    std::printf("%-28s %4d qb %5d pts   reference %8.3fs   production %8.3fs   x%5.2f   max|d| %.2e\n",
                label, n_qubits, m_samples, t_serial, t_parallel,
                t_serial / std::max(t_parallel, 1e-12), diff);

    const OperatorSet opset = expand_operator(OperatorSetName::AllP1, n_qubits);
    OuterKernelParams outer;
    outer.kind = OuterKernelKind::Gaussian;
    outer.gamma = 1.0;

    t0 = clock_type::now();
    const Eigen::MatrixXd f_serial = ref::pqk_features(spec, params, X, opset);
    const Eigen::MatrixXd g_serial = ref::pqk_gram(f_serial, f_serial, outer);
    const double t_serial_pqk = seconds_since(t0);

    t0 = clock_type::now();
    const Eigen::MatrixXd f_parallel = pqk_features(spec, params, X, opset);
    const Eigen::MatrixXd g_parallel = pqk_gram(f_parallel, outer);
    const double t_parallel_pqk = seconds_since(t0);

    const double diff_pqk = (g_serial - g_parallel).cwiseAbs().maxCoeff();
    std::printf("%-28s %4d qb %5d pts   reference %8.3fs   production %8.3fs   x%5.2f   max|d| %.2e\n",
                "  pqk (AllP1, gaussian)", n_qubits, m_samples, t_serial_pqk, t_parallel_pqk,
                t_serial_pqk / std::max(t_parallel_pqk, 1e-12), diff_pqk);
}

} // namespace

int main(int argc, char** argv) {
    int scale = 1;
    if (argc > 1) {
        scale = std::stoi(argv[1]);
    }
#ifdef _OPENMP
    std::printf("OpenMP: %d threads\n", omp_get_max_threads());
#else
    std::printf("OpenMP: not enabled\n");
#endif
    bench_case("fqk (HardwareEfficientRx)", 6, 64 * scale, 2);
    bench_case("fqk (HardwareEfficientRx)", 10, 96 * scale, 2);
    bench_case("fqk (HardwareEfficientRx)", 12, 64 * scale, 3);
    return 0;
}
