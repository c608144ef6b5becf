#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "qkbench/errors.hpp"

namespace qkb {

using Complex = std::complex<double>;

enum class GateKind { H, X, RX, RY, RZ, Phase, CX, CZ, CPhase, CRZ, CRY, CRX };

bool is_two_qubit(GateKind kind);
bool has_angle(GateKind kind);
std::string gate_name(GateKind kind);

/// One gate of a compiled circuit. Single-qubit kinds use `q0`; two-qubit
/// kinds use `q0` as the control and `q1` as the target.
struct Gate {
    GateKind kind;
    int q0 = 0;
    int q1 = -1;
    double angle = 0.0;

    static Gate h(int q) { return {GateKind::H, q}; }
    static Gate x(int q) { return {GateKind::X, q}; }
    static Gate rx(int q, double a) { return {GateKind::RX, q, -1, a}; }
    static Gate ry(int q, double a) { return {GateKind::RY, q, -1, a}; }
    static Gate rz(int q, double a) { return {GateKind::RZ, q, -1, a}; }
    static Gate phase(int q, double a) { return {GateKind::Phase, q, -1, a}; }
    static Gate cx(int control, int target) { return {GateKind::CX, control, target}; }
    static Gate cz(int control, int target) { return {GateKind::CZ, control, target}; }
    static Gate cphase(int control, int target, double a) { return {GateKind::CPhase, control, target, a}; }
    static Gate crz(int control, int target, double a) { return {GateKind::CRZ, control, target, a}; }
    static Gate cry(int control, int target, double a) { return {GateKind::CRY, control, target, a}; }
    static Gate crx(int control, int target, double a) { return {GateKind::CRX, control, target, a}; }
};

using GateSequence = std::vector<Gate>;

enum class PauliOp { X, Y, Z };

struct PauliTerm {
    int qubit;
    PauliOp op;
};

/// Tensor product of single-qubit Pauli operators; identity on every qubit
/// not listed. Terms are kept sorted by qubit index and distinct.
struct PauliString {
    std::vector<PauliTerm> terms;

    PauliString() = default;
    explicit PauliString(std::vector<PauliTerm> t);

    int weight() const { return static_cast<int>(terms.size()); }
    int max_qubit() const;
    std::string to_string() const;

    static PauliString single(PauliOp op, int qubit) { return PauliString({{qubit, op}}); }
    static PauliString pair(PauliOp op, int q_a, int q_b) { return PauliString({{q_a, op}, {q_b, op}}); }
};

/// Dense statevector over n qubits, little-endian: qubit 0 is the least
/// significant bit of the basis-state index.
class StateVector {
  public:
    /// Constructs |0...0>. n_qubits outside [1, 24] raises CapacityError.
    explicit StateVector(int n_qubits);

    int n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return amps_.size(); }

    const std::vector<Complex>& amplitudes() const { return amps_; }
    std::vector<Complex>& amplitudes() { return amps_; }
    Complex amplitude(std::size_t i) const { return amps_[i]; }

    /// Applies one gate in place over strided amplitude pairs; no full
    /// unitary matrix is ever built.
    void apply(const Gate& gate);
    void apply(const GateSequence& gates);

    double norm() const;

  private:
    void apply_single(int target, const Complex m[2][2]);
    void apply_controlled(int control, int target, const Complex m[2][2]);
    void check_target(int q) const;

    int n_qubits_;
    std::vector<Complex> amps_;
};

/// <a|b> = sum_i conj(a_i) b_i. Dimension mismatch raises ShapeError.
Complex inner_product(const StateVector& a, const StateVector& b);

/// Applies the Pauli string to the state in place (one pass over the
/// amplitudes).
void apply_pauli(StateVector& state, const PauliString& op);

/// <psi|P|psi>, computed by applying P to a scratch copy and taking the
/// inner product with the original state. Always real within 1e-10 and
/// in [-1, 1] for normalized states.
double pauli_expectation(const StateVector& state, const PauliString& op);

} // namespace qkb
