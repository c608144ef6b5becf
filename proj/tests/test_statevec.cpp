#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "qkbench/rng.hpp"
#include "qkbench/statevector.hpp"
#include "support/oracles.hpp"

using namespace qkb;
constexpr double pi = std::numbers::pi;

TEST_CASE("new state is |0...0>") {
    StateVector one(1);
    CHECK(one.dim() == 2);
    CHECK(one.amplitude(0) == Complex{1.0, 0.0});
    CHECK(one.amplitude(1) == Complex{0.0, 0.0});

    StateVector two(2);
    CHECK(two.dim() == 4);
    CHECK(two.amplitude(0) == Complex{1.0, 0.0});
    for (std::size_t i = 1; i < 4; ++i) {
        CHECK(two.amplitude(i) == Complex{0.0, 0.0});
    }
}

TEST_CASE("qubit count outside [1, 24] is a capacity error") {
    CHECK_THROWS_AS(StateVector(0), CapacityError);
    CHECK_THROWS_AS(StateVector(-3), CapacityError);
    CHECK_THROWS_AS(StateVector(25), CapacityError);
}

TEST_CASE("RX(pi) on |0> gives (0, -i)") {
    StateVector s(1);
    s.apply(Gate::rx(0, pi));
    CHECK(std::abs(s.amplitude(0)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(s.amplitude(1) - Complex{0.0, -1.0}) < 1e-12);
}

TEST_CASE("H on |0> gives the plus state") {
    StateVector s(1);
    s.apply(Gate::h(0));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(s.amplitude(0) - Complex{r, 0.0}) < 1e-12);
    CHECK(std::abs(s.amplitude(1) - Complex{r, 0.0}) < 1e-12);
}

TEST_CASE("CX flips the target when the control is set") {
    // |10> in little-endian: qubit 0 set -> index 1
    StateVector s(2);
    s.apply(Gate::x(0));
    s.apply(Gate::cx(0, 1));
    CHECK(std::abs(s.amplitude(3) - Complex{1.0, 0.0}) < 1e-12); // |11>

    // control clear: nothing happens
    StateVector t(2);
    t.apply(Gate::cx(0, 1));
    CHECK(std::abs(t.amplitude(0) - Complex{1.0, 0.0}) < 1e-12);
}

TEST_CASE("gate with an out-of-range target is an index error") {
    StateVector s(2);
    CHECK_THROWS_AS(s.apply(Gate::h(2)), IndexError);
    CHECK_THROWS_AS(s.apply(Gate::cx(0, 5)), IndexError);
    CHECK_THROWS_AS(s.apply(Gate::cx(1, 1)), IndexError);
}

TEST_CASE("inner product basics") {
    StateVector a(1), b(1);
    CHECK(std::abs(inner_product(a, a) - Complex{1.0, 0.0}) < 1e-12);

    b.apply(Gate::x(0));
    CHECK(std::abs(inner_product(a, b)) < 1e-12);

    StateVector c(2);
    CHECK_THROWS_AS(inner_product(a, c), ShapeError);
}

TEST_CASE("single-qubit RX overlap matches cos((x - x')/2)") {
    Rng rng(42);
    for (int rep = 0; rep < 20; ++rep) {
        const double x = rng.uniform(-pi, pi);
        const double xp = rng.uniform(-pi, pi);
        StateVector a(1), b(1);
        a.apply(Gate::rx(0, x));
        b.apply(Gate::rx(0, xp));
        const Complex ip = inner_product(a, b);
        CHECK(std::abs(ip.real() - std::cos((x - xp) / 2.0)) < 1e-12);
    }
}

TEST_CASE("inner_product(a, b) = conj(inner_product(b, a))") {
    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        StateVector a(3), b(3);
        for (int g = 0; g < 12; ++g) {
            a.apply(Gate::ry(static_cast<int>(rng.randint(0, 2)), rng.uniform(0, 2 * pi)));
            a.apply(Gate::phase(static_cast<int>(rng.randint(0, 2)), rng.uniform(0, 2 * pi)));
            b.apply(Gate::rx(static_cast<int>(rng.randint(0, 2)), rng.uniform(0, 2 * pi)));
        }
        const Complex ab = inner_product(a, b);
        const Complex ba = inner_product(b, a);
        CHECK(std::abs(ab - std::conj(ba)) < 1e-12);
    }
}

TEST_CASE("pauli expectation examples") {
    StateVector zero(1);
    CHECK(pauli_expectation(zero, PauliString::single(PauliOp::Z, 0)) ==
          doctest::Approx(1.0).epsilon(1e-12));

    StateVector rot(1);
    rot.apply(Gate::rx(0, pi / 2.0));
    CHECK(pauli_expectation(rot, PauliString::single(PauliOp::Y, 0)) ==
          doctest::Approx(-1.0).epsilon(1e-12));

    // X (x) Z on H|0> (x) |0>: <+|X|+> * <0|Z|0> = 1
    StateVector hz(2);
    hz.apply(Gate::h(0));
    CHECK(pauli_expectation(hz, PauliString({{0, PauliOp::X}, {1, PauliOp::Z}})) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pauli expectation rejects out-of-range qubits") {
    StateVector s(2);
    CHECK_THROWS_AS(pauli_expectation(s, PauliString::single(PauliOp::X, 2)), IndexError);
}

namespace {

Gate random_gate(Rng& rng, int n_qubits) {
    const GateKind kinds[] = {GateKind::H,   GateKind::X,      GateKind::RX,  GateKind::RY,
                              GateKind::RZ,  GateKind::Phase,  GateKind::CX,  GateKind::CZ,
                              GateKind::CPhase, GateKind::CRZ, GateKind::CRY, GateKind::CRX};
    for (;;) {
        const GateKind kind = kinds[rng.randint(0, 11)];
        if (is_two_qubit(kind) && n_qubits < 2) {
            continue;
        }
        Gate g;
        g.kind = kind;
        g.q0 = static_cast<int>(rng.randint(0, n_qubits - 1));
        if (is_two_qubit(kind)) {
            do {
                g.q1 = static_cast<int>(rng.randint(0, n_qubits - 1));
            } while (g.q1 == g.q0);
        }
        if (has_angle(kind)) {
            g.angle = rng.uniform(-2.0 * pi, 2.0 * pi);
        }
        return g;
    }
}

} // namespace

TEST_CASE("norm is preserved over long random sequences") {
    Rng rng(1234);
    for (int n_qubits : {2, 5, 8}) {
        StateVector s(n_qubits);
        for (int g = 0; g < 200; ++g) {
            s.apply(random_gate(rng, n_qubits));
        }
        CHECK(std::abs(s.norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("every gate kind matches the dense-matrix oracle on <= 3 qubits") {
    Rng rng(99);
    for (int n_qubits : {1, 2, 3}) {
        for (int rep = 0; rep < 40; ++rep) {
            // random initial state from a short warmup sequence
            StateVector s(n_qubits);
            for (int g = 0; g < 6; ++g) {
                s.apply(random_gate(rng, n_qubits));
            }
            const Gate gate = random_gate(rng, n_qubits);
            const Eigen::VectorXcd before = oracles::to_vector(s);
            const Eigen::VectorXcd expected =
                oracles::dense_unitary(gate, n_qubits) * before;
            s.apply(gate);
            const Eigen::VectorXcd got = oracles::to_vector(s);
            CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("pauli expectation is bounded, real, and matches the dense oracle") {
    Rng rng(2024);
    for (int rep = 0; rep < 30; ++rep) {
        const int n_qubits = 3;
        StateVector s(n_qubits);
        for (int g = 0; g < 15; ++g) {
            s.apply(random_gate(rng, n_qubits));
        }
        std::vector<PauliTerm> terms;
        const PauliOp ops[] = {PauliOp::X, PauliOp::Y, PauliOp::Z};
        const int weight = 1 + static_cast<int>(rng.randint(0, 1));
        std::vector<int> qubits = {0, 1, 2};
        rng.shuffle(qubits);
        for (int w = 0; w < weight; ++w) {
            terms.push_back({qubits[w], ops[rng.randint(0, 2)]});
        }
        const PauliString p(terms);

        const double value = pauli_expectation(s, p);
        CHECK(std::abs(value) <= 1.0 + 1e-12);

        const Complex dense = oracles::dense_expectation(s, p);
        CHECK(std::abs(dense.imag()) < 1e-10);
        CHECK(std::abs(value - dense.real()) < 1e-12);

        // the bracket itself carries no imaginary residue
        StateVector scratch = s;
        apply_pauli(scratch, p);
        CHECK(std::abs(inner_product(s, scratch).imag()) < 1e-10);
    }
}

TEST_CASE("norm stays within 1e-12 per gate") {
    Rng rng(555);
    StateVector s(4);
    double prev = s.norm();
    for (int g = 0; g < 50; ++g) {
        s.apply(random_gate(rng, 4));
        const double now = s.norm();
        CHECK(std::abs(now - prev) < 1e-12);
        prev = now;
    }
}
