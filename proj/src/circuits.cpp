#include "qkbench/circuits.hpp"

#include <cmath>
#include <numbers>

#include "qkbench/rng.hpp"

namespace qkb {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int params_per_layer(CircuitName name, int n_qubits) {
    switch (name) {
    case CircuitName::YZ_CX:
        return 2 * n_qubits; // one RY and one RZ multiplier per qubit
    case CircuitName::HZY_CZ:
        return n_qubits; // RY angles
    case CircuitName::ChebyshevPQC:
        return n_qubits + (n_qubits - 1); // RY layer + CRZ chain
    case CircuitName::ParamZFeatureMap:
        return n_qubits; // phase multipliers
    default:
        return 0;
    }
}

int count_params(CircuitName name, int n_qubits, int n_layers) {
    int n = n_layers * params_per_layer(name, n_qubits);
    if (name == CircuitName::ChebyshevPQC) {
        n += n_qubits; // closing RY layer
    }
    return n;
}

} // namespace

std::string to_string(CircuitName name) {
    switch (name) {
    case CircuitName::YZ_CX:
        return "YZ_CX";
    case CircuitName::HighDim:
        return "HighDim";
    case CircuitName::HZY_CZ:
        return "HZY_CZ";
    case CircuitName::ChebyshevPQC:
        return "ChebyshevPQC";
    case CircuitName::ParamZFeatureMap:
        return "ParamZFeatureMap";
    case CircuitName::SeparableRx:
        return "SeparableRx";
    case CircuitName::HardwareEfficientRx:
        return "HardwareEfficientRx";
    case CircuitName::ZFeatureMap:
        return "ZFeatureMap";
    case CircuitName::ZZFeatureMap:
        return "ZZFeatureMap";
    }
    return "?";
}

CircuitName circuit_from_string(const std::string& name) {
    for (CircuitName c : all_circuits()) {
        if (to_string(c) == name) {
            return c;
        }
    }
    throw ConfigError("unknown circuit name: " + name);
}

std::string to_string(EncodingStrategy strategy) {
    return strategy == EncodingStrategy::Option1 ? "Option1" : "Option2";
}

EncodingStrategy strategy_from_string(const std::string& name) {
    if (name == "Option1" || name == "option1") {
        return EncodingStrategy::Option1;
    }
    if (name == "Option2" || name == "option2") {
        return EncodingStrategy::Option2;
    }
    throw ConfigError("unknown encoding strategy: " + name);
}

const std::vector<CircuitName>& all_circuits() {
    static const std::vector<CircuitName> names = {
        CircuitName::YZ_CX,        CircuitName::HighDim,
        CircuitName::HZY_CZ,       CircuitName::ChebyshevPQC,
        CircuitName::ParamZFeatureMap, CircuitName::SeparableRx,
        CircuitName::HardwareEfficientRx, CircuitName::ZFeatureMap,
        CircuitName::ZZFeatureMap,
    };
    return names;
}

CircuitSpec named_circuit(CircuitName name, int n_qubits, int n_layers, int n_features,
                          EncodingStrategy strategy) {
    if (n_qubits < 1 || n_layers < 1 || n_features < 1) {
        throw ConfigError("circuit dimensions must be positive");
    }
    CircuitSpec spec;
    spec.name = name;
    spec.n_qubits = n_qubits;
    spec.n_layers = n_layers;
    spec.n_features = n_features;
    spec.strategy = strategy;
    spec.nonlinearity =
        name == CircuitName::ChebyshevPQC ? Nonlinearity::Arccos : Nonlinearity::Identity;
    spec.n_params = count_params(name, n_qubits, n_layers);
    return spec;
}

FeatureAssignment assign_features(const CircuitSpec& spec) {
    return {spec.strategy, spec.n_qubits, spec.n_features};
}

std::vector<double> init_params(const CircuitSpec& spec, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "circuit-params"));
    std::vector<double> params(spec.n_params);
    for (double& p : params) {
        p = rng.uniform(0.0, kTwoPi);
    }
    return params;
}

namespace {

class Compiler {
  public:
    Compiler(const CircuitSpec& spec, std::span<const double> x, std::span<const double> params)
        : spec_(spec), assignment_(assign_features(spec)), x_(x), params_(params) {
        if (static_cast<int>(x.size()) != spec.n_features) {
            throw ShapeError("compile: expected " + std::to_string(spec.n_features) +
                             " features, got " + std::to_string(x.size()));
        }
        if (static_cast<int>(params.size()) != spec.n_params) {
            throw ShapeError("compile: expected " + std::to_string(spec.n_params) +
                             " parameters, got " + std::to_string(params.size()));
        }
    }

    GateSequence run() {
        for (int layer = 0; layer < spec_.n_layers; ++layer) {
            emit_layer(layer);
        }
        if (spec_.name == CircuitName::ChebyshevPQC) {
            for (int q = 0; q < spec_.n_qubits; ++q) {
                gates_.push_back(Gate::ry(q, next_param()));
            }
        }
        return std::move(gates_);
    }

  private:
    // Feature value for (layer, qubit) after the circuit's nonlinearity.
    double feature(int layer, int qubit) const {
        const double v = x_[assignment_.slot(layer, qubit)];
        if (spec_.nonlinearity == Nonlinearity::Arccos) {
            if (v < -1.0 || v > 1.0) {
                throw DomainError("ChebyshevPQC feature " + std::to_string(v) +
                                  " outside [-1, 1]");
            }
            return std::acos(v);
        }
        return v;
    }

    double next_param() { return params_[param_cursor_++]; }

    void cx_chain() {
        for (int q = 0; q + 1 < spec_.n_qubits; ++q) {
            gates_.push_back(Gate::cx(q, q + 1));
        }
    }

    void emit_layer(int layer) {
        const int n = spec_.n_qubits;
        switch (spec_.name) {
        case CircuitName::YZ_CX:
            for (int q = 0; q < n; ++q) {
                const double v = feature(layer, q);
                gates_.push_back(Gate::ry(q, next_param() * v));
                gates_.push_back(Gate::rz(q, next_param() * v));
            }
            cx_chain();
            break;
        case CircuitName::HighDim: {
            // Angles shrink with the feature crowding factor ceil(d / n) so
            // stacked encodings of many features stay in one period.
            const double scale =
                1.0 / std::ceil(static_cast<double>(spec_.n_features) / n);
            for (int q = 0; q < n; ++q) {
                const double v = feature(layer, q) * scale;
                gates_.push_back(Gate::ry(q, v));
                gates_.push_back(Gate::rz(q, v));
            }
            cx_chain();
            break;
        }
        case CircuitName::HZY_CZ:
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::h(q));
            }
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::rz(q, feature(layer, q)));
            }
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::ry(q, next_param()));
            }
            for (int q = 0; q + 1 < n; ++q) {
                gates_.push_back(Gate::cz(q, q + 1));
            }
            break;
        case CircuitName::ChebyshevPQC:
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::ry(q, next_param()));
            }
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::rx(q, feature(layer, q)));
            }
            for (int q = 0; q + 1 < n; ++q) {
                gates_.push_back(Gate::crz(q, q + 1, next_param()));
            }
            break;
        case CircuitName::ParamZFeatureMap:
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::h(q));
            }
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::phase(q, next_param() * feature(layer, q)));
            }
            cx_chain();
            break;
        case CircuitName::SeparableRx:
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::rx(q, feature(layer, q)));
            }
            break;
        case CircuitName::HardwareEfficientRx:
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::rx(q, feature(layer, q)));
            }
            cx_chain();
            break;
        case CircuitName::ZFeatureMap:
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::h(q));
            }
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::phase(q, 2.0 * feature(layer, q)));
            }
            break;
        case CircuitName::ZZFeatureMap: {
            constexpr double pi = std::numbers::pi;
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::h(q));
            }
            for (int q = 0; q < n; ++q) {
                gates_.push_back(Gate::phase(q, 2.0 * feature(layer, q)));
            }
            // second-order terms on all pairs, lexicographic
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    const double vi = feature(layer, i);
                    const double vj = feature(layer, j);
                    gates_.push_back(Gate::cx(i, j));
                    gates_.push_back(Gate::phase(j, 2.0 * (pi - vi) * (pi - vj)));
                    gates_.push_back(Gate::cx(i, j));
                }
            }
            break;
        }
        }
    }

    const CircuitSpec& spec_;
    FeatureAssignment assignment_;
    std::span<const double> x_;
    std::span<const double> params_;
    std::size_t param_cursor_ = 0;
    GateSequence gates_;
};

} // namespace

GateSequence compile(const CircuitSpec& spec, std::span<const double> x,
                     std::span<const double> params) {
    return Compiler(spec, x, params).run();
}

StateVector encode_state(const CircuitSpec& spec, std::span<const double> x,
                         std::span<const double> params) {
    StateVector state(spec.n_qubits);
    state.apply(compile(spec, x, params));
    return state;
}

} // namespace qkb
