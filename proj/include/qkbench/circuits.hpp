#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qkbench/statevector.hpp"

namespace qkb {

enum class CircuitName {
    YZ_CX,
    HighDim,
    HZY_CZ,
    ChebyshevPQC,
    ParamZFeatureMap,
    SeparableRx,
    HardwareEfficientRx,
    ZFeatureMap,
    ZZFeatureMap,
};

enum class EncodingStrategy { Option1, Option2 };
enum class Nonlinearity { Identity, Arccos };

std::string to_string(CircuitName name);
CircuitName circuit_from_string(const std::string& name);
std::string to_string(EncodingStrategy strategy);
EncodingStrategy strategy_from_string(const std::string& name);
const std::vector<CircuitName>& all_circuits();

/// Declarative description of one data encoding circuit. The gate layout
/// per circuit is documented in README.md; n_params counts the trainable
/// angles (fresh parameters per layer).
struct CircuitSpec {
    CircuitName name;
    int n_qubits = 1;
    int n_layers = 1;
    int n_features = 1;
    EncodingStrategy strategy = EncodingStrategy::Option1;
    Nonlinearity nonlinearity = Nonlinearity::Identity;
    int n_params = 0;
};

CircuitSpec named_circuit(CircuitName name, int n_qubits, int n_layers, int n_features,
                          EncodingStrategy strategy);

/// Maps (layer, qubit) to the feature index encoded there.
///
/// Option1 repeats the features within each layer (slot = qubit mod d), so a
/// feature always sits on the same qubit. Option2 keeps counting across
/// layers (slot = (layer * n_qubits + qubit) mod d), shuffling features
/// across qubits from layer to layer.
struct FeatureAssignment {
    EncodingStrategy strategy;
    int n_qubits;
    int n_features;

    int slot(int layer, int qubit) const {
        if (strategy == EncodingStrategy::Option1) {
            return qubit % n_features;
        }
        return (layer * n_qubits + qubit) % n_features;
    }
};

FeatureAssignment assign_features(const CircuitSpec& spec);

/// Trainable parameters drawn i.i.d. uniform on [0, 2*pi); deterministic in
/// (spec, seed).
std::vector<double> init_params(const CircuitSpec& spec, std::uint64_t seed);

/// Compiles the circuit for one data point. Features are expected to be
/// scaled into the circuit's admissible range by the caller (ChebyshevPQC
/// requires every encoded value in [-1, 1]).
GateSequence compile(const CircuitSpec& spec, std::span<const double> x,
                     std::span<const double> params);

/// new_state(n_qubits) with the compiled gates applied.
StateVector encode_state(const CircuitSpec& spec, std::span<const double> x,
                         std::span<const double> params);

} // namespace qkb
