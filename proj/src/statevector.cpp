#include "qkbench/statevector.hpp"

#include <algorithm>
#include <cmath>

namespace qkb {

namespace {

constexpr Complex kI{0.0, 1.0};

// Rotation convention: RP(theta) = exp(-i theta P / 2) for P in {X, Y, Z};
// Phase(theta) = diag(1, e^{i theta}).
void gate_matrix(GateKind kind, double angle, Complex m[2][2]) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    switch (kind) {
    case GateKind::H: {
        const double r = 1.0 / std::sqrt(2.0);
        m[0][0] = r;
        m[0][1] = r;
        m[1][0] = r;
        m[1][1] = -r;
        break;
    }
    case GateKind::X:
        m[0][0] = 0.0;
        m[0][1] = 1.0;
        m[1][0] = 1.0;
        m[1][1] = 0.0;
        break;
    case GateKind::RX:
    case GateKind::CRX:
        m[0][0] = c;
        m[0][1] = -kI * s;
        m[1][0] = -kI * s;
        m[1][1] = c;
        break;
    case GateKind::RY:
    case GateKind::CRY:
        m[0][0] = c;
        m[0][1] = -s;
        m[1][0] = s;
        m[1][1] = c;
        break;
    case GateKind::RZ:
    case GateKind::CRZ:
        m[0][0] = std::exp(-kI * (angle / 2.0));
        m[0][1] = 0.0;
        m[1][0] = 0.0;
        m[1][1] = std::exp(kI * (angle / 2.0));
        break;
    case GateKind::Phase:
    case GateKind::CPhase:
        m[0][0] = 1.0;
        m[0][1] = 0.0;
        m[1][0] = 0.0;
        m[1][1] = std::exp(kI * angle);
        break;
    case GateKind::CX:
        gate_matrix(GateKind::X, 0.0, m);
        break;
    case GateKind::CZ:
        m[0][0] = 1.0;
        m[0][1] = 0.0;
        m[1][0] = 0.0;
        m[1][1] = -1.0;
        break;
    }
}

} // namespace

bool is_two_qubit(GateKind kind) {
    switch (kind) {
    case GateKind::CX:
    case GateKind::CZ:
    case GateKind::CPhase:
    case GateKind::CRZ:
    case GateKind::CRY:
    case GateKind::CRX:
        return true;
    default:
        return false;
    }
}

bool has_angle(GateKind kind) {
    switch (kind) {
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::RZ:
    case GateKind::Phase:
    case GateKind::CPhase:
    case GateKind::CRZ:
    case GateKind::CRY:
    case GateKind::CRX:
        return true;
    default:
        return false;
    }
}

std::string gate_name(GateKind kind) {
    switch (kind) {
    case GateKind::H:
        return "H";
    case GateKind::X:
        return "X";
    case GateKind::RX:
        return "RX";
    case GateKind::RY:
        return "RY";
    case GateKind::RZ:
        return "RZ";
    case GateKind::Phase:
        return "PHASE";
    case GateKind::CX:
        return "CX";
    case GateKind::CZ:
        return "CZ";
    case GateKind::CPhase:
        return "CPHASE";
    case GateKind::CRZ:
        return "CRZ";
    case GateKind::CRY:
        return "CRY";
    case GateKind::CRX:
        return "CRX";
    }
    return "?";
}

PauliString::PauliString(std::vector<PauliTerm> t) : terms(std::move(t)) {
    std::sort(terms.begin(), terms.end(),
              [](const PauliTerm& a, const PauliTerm& b) { return a.qubit < b.qubit; });
    for (std::size_t i = 0; i + 1 < terms.size(); ++i) {
        if (terms[i].qubit == terms[i + 1].qubit) {
            throw IndexError("PauliString: duplicate qubit " + std::to_string(terms[i].qubit));
        }
    }
    for (const auto& term : terms) {
        if (term.qubit < 0) {
            throw IndexError("PauliString: negative qubit index");
        }
    }
}

int PauliString::max_qubit() const {
    return terms.empty() ? -1 : terms.back().qubit;
}

std::string PauliString::to_string() const {
    if (terms.empty()) {
        return "I";
    }
    std::string out;
    for (const auto& term : terms) {
        if (!out.empty()) {
            out += "*";
        }
        out += (term.op == PauliOp::X ? "X" : term.op == PauliOp::Y ? "Y" : "Z");
        out += std::to_string(term.qubit);
    }
    return out;
}

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > 24) {
        throw CapacityError("StateVector: n_qubits must be in [1, 24], got " +
                            std::to_string(n_qubits));
    }
    amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
    amps_[0] = 1.0;
}

void StateVector::check_target(int q) const {
    if (q < 0 || q >= n_qubits_) {
        throw IndexError("gate target " + std::to_string(q) + " out of range for " +
                         std::to_string(n_qubits_) + " qubits");
    }
}

void StateVector::apply_single(int target, const Complex m[2][2]) {
    const std::size_t step = std::size_t{1} << target;
    const std::size_t n = amps_.size();
    for (std::size_t base = 0; base < n; base += 2 * step) {
        for (std::size_t i0 = base; i0 < base + step; ++i0) {
            const std::size_t i1 = i0 + step;
            const Complex v0 = amps_[i0];
            const Complex v1 = amps_[i1];
            amps_[i0] = m[0][0] * v0 + m[0][1] * v1;
            amps_[i1] = m[1][0] * v0 + m[1][1] * v1;
        }
    }
}

void StateVector::apply_controlled(int control, int target, const Complex m[2][2]) {
    const std::size_t cmask = std::size_t{1} << control;
    const std::size_t step = std::size_t{1} << target;
    const std::size_t n = amps_.size();
    for (std::size_t base = 0; base < n; base += 2 * step) {
        for (std::size_t i0 = base; i0 < base + step; ++i0) {
            if ((i0 & cmask) == 0) {
                continue;
            }
            const std::size_t i1 = i0 + step;
            const Complex v0 = amps_[i0];
            const Complex v1 = amps_[i1];
            amps_[i0] = m[0][0] * v0 + m[0][1] * v1;
            amps_[i1] = m[1][0] * v0 + m[1][1] * v1;
        }
    }
}

void StateVector::apply(const Gate& gate) {
    Complex m[2][2];
    gate_matrix(gate.kind, gate.angle, m);
    if (is_two_qubit(gate.kind)) {
        check_target(gate.q0);
        check_target(gate.q1);
        if (gate.q0 == gate.q1) {
            throw IndexError("two-qubit gate with identical control and target " +
                             std::to_string(gate.q0));
        }
        apply_controlled(gate.q0, gate.q1, m);
    } else {
        check_target(gate.q0);
        apply_single(gate.q0, m);
    }
}

void StateVector::apply(const GateSequence& gates) {
    for (const auto& gate : gates) {
        apply(gate);
    }
}

double StateVector::norm() const {
    double s = 0.0;
    for (const auto& a : amps_) {
        s += std::norm(a);
    }
    return std::sqrt(s);
}

Complex inner_product(const StateVector& a, const StateVector& b) {
    if (a.n_qubits() != b.n_qubits()) {
        throw ShapeError("inner_product: dimension mismatch (" + std::to_string(a.n_qubits()) +
                         " vs " + std::to_string(b.n_qubits()) + " qubits)");
    }
    Complex s{0.0, 0.0};
    const auto& va = a.amplitudes();
    const auto& vb = b.amplitudes();
    for (std::size_t i = 0; i < va.size(); ++i) {
        s += std::conj(va[i]) * vb[i];
    }
    return s;
}

void apply_pauli(StateVector& state, const PauliString& op) {
    if (op.max_qubit() >= state.n_qubits()) {
        throw IndexError("pauli operator qubit " + std::to_string(op.max_qubit()) +
                         " out of range for " + std::to_string(state.n_qubits()) + " qubits");
    }
    std::size_t x_mask = 0; // qubits whose basis bit flips (X and Y)
    std::size_t y_mask = 0;
    std::size_t z_mask = 0;
    for (const auto& term : op.terms) {
        const std::size_t bit = std::size_t{1} << term.qubit;
        switch (term.op) {
        case PauliOp::X:
            x_mask |= bit;
            break;
        case PauliOp::Y:
            x_mask |= bit;
            y_mask |= bit;
            break;
        case PauliOp::Z:
            z_mask |= bit;
            break;
        }
    }
    auto& amps = state.amplitudes();
    const std::size_t n = amps.size();
    std::vector<Complex> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Y|0> = i|1>, Y|1> = -i|0>; Z|b> = (-1)^b |b>
        Complex coef{1.0, 0.0};
        for (std::size_t bits = i & y_mask; bits; bits &= bits - 1) {
            coef *= -kI;
        }
        for (std::size_t bits = ~i & y_mask; bits; bits &= bits - 1) {
            coef *= kI;
        }
        if (__builtin_popcountll(i & z_mask) & 1) {
            coef = -coef;
        }
        out[i ^ x_mask] = coef * amps[i];
    }
    amps.swap(out);
}

double pauli_expectation(const StateVector& state, const PauliString& op) {
    StateVector scratch = state;
    apply_pauli(scratch, op);
    return std::real(inner_product(state, scratch));
}

} // namespace qkb
