#include "qkde/qsim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qkde/error.hpp"
#include "qkde/seeding.hpp"

namespace qkde::qsim {

namespace {

constexpr Complex kI{0.0, 1.0};

struct Mat2 {
    Complex a00, a01, a10, a11;
};

Mat2 rotation_matrix(Axis axis, double theta) {
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    switch (axis) {
        case Axis::X:
            return {c, -kI * s, -kI * s, c};
        case Axis::Y:
            return {c, -s, s, c};
        case Axis::Z:
            return {std::polar(1.0, -0.5 * theta), 0.0, 0.0, std::polar(1.0, 0.5 * theta)};
    }
    return {1.0, 0.0, 0.0, 1.0};
}

Mat2 pauli(Axis axis) {
    switch (axis) {
        case Axis::X:
            return {0.0, 1.0, 1.0, 0.0};
        case Axis::Y:
            return {0.0, -kI, kI, 0.0};
        case Axis::Z:
            return {1.0, 0.0, 0.0, -1.0};
    }
    return {1.0, 0.0, 0.0, 1.0};
}

void apply_1q(std::span<Complex> amps, int target, const Mat2& m) {
    const std::size_t bit = std::size_t{1} << target;
    for (std::size_t i = 0; i < amps.size(); ++i) {
        if (i & bit) continue;
        const Complex a0 = amps[i];
        const Complex a1 = amps[i | bit];
        amps[i] = m.a00 * a0 + m.a01 * a1;
        amps[i | bit] = m.a10 * a0 + m.a11 * a1;
    }
}

void apply_cz(std::span<Complex> amps, int control, int target) {
    const std::size_t mask = (std::size_t{1} << control) | (std::size_t{1} << target);
    for (std::size_t i = 0; i < amps.size(); ++i) {
        if ((i & mask) == mask) amps[i] = -amps[i];
    }
}

void validate_gate(const GateOp& g, int qubits) {
    if (g.target < 0 || g.target >= qubits) {
        throw ConfigError("gate target " + std::to_string(g.target) + " out of range for " +
                          std::to_string(qubits) + " qubits");
    }
    if (g.kind == GateKind::controlled_z) {
        if (g.control < 0 || g.control >= qubits) {
            throw ConfigError("gate control " + std::to_string(g.control) + " out of range");
        }
        if (g.control == g.target) throw ConfigError("controlled-Z with control == target");
    }
}

void check_offsets(const FeatureMapSpec& spec, std::span<const double> offsets) {
    if (!offsets.empty() && offsets.size() != spec.encoded_gate_count()) {
        throw UsageError("angle offsets: expected " + std::to_string(spec.encoded_gate_count()) + " entries, got " +
                         std::to_string(offsets.size()));
    }
}

}  // namespace

GateOp GateOp::rotation(Axis axis, int target, double angle) {
    return {GateKind::rotation, axis, target, -1, angle};
}
GateOp GateOp::encoded(Axis axis, int target, double coefficient) {
    return {GateKind::encoded_rotation, axis, target, -1, coefficient};
}
GateOp GateOp::cz(int control, int target) { return {GateKind::controlled_z, Axis::Z, target, control, 0.0}; }
GateOp GateOp::hadamard(int target) { return {GateKind::hadamard, Axis::X, target, -1, 0.0}; }

void CircuitBlock::validate() const {
    if (qubit_count < 1 || qubit_count > kMaxQubits) {
        throw ConfigError("qubit count must be in [1, " + std::to_string(kMaxQubits) + "], got " +
                          std::to_string(qubit_count));
    }
    for (const auto& g : gates) validate_gate(g, qubit_count);
}

void FeatureMapSpec::validate() const {
    if (qubit_count < 1 || qubit_count > kMaxQubits) {
        throw ConfigError("qubit count must be in [1, " + std::to_string(kMaxQubits) + "], got " +
                          std::to_string(qubit_count));
    }
    if (layers.empty()) throw ConfigError("feature map needs at least one layer");
    if (layers.back().encoder.empty()) throw ConfigError("feature map must terminate with an encoder layer");
    for (const auto& layer : layers) {
        if (layer.entangler.qubit_count != qubit_count) throw ConfigError("entangler qubit count mismatch");
        layer.entangler.validate();
        for (const auto& g : layer.encoder) {
            if (!g.is_encoded()) throw ConfigError("encoder layers may contain only encoded rotations");
            validate_gate(g, qubit_count);
        }
    }
}

std::vector<GateOp> FeatureMapSpec::encoded_gates() const {
    std::vector<GateOp> out;
    for (const auto& layer : layers) {
        for (const auto& g : layer.entangler.gates) {
            if (g.is_encoded()) out.push_back(g);
        }
        out.insert(out.end(), layer.encoder.begin(), layer.encoder.end());
    }
    return out;
}

std::size_t FeatureMapSpec::encoded_gate_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) {
        for (const auto& g : layer.entangler.gates) n += g.is_encoded() ? 1 : 0;
        n += layer.encoder.size();
    }
    return n;
}

bool FeatureMapSpec::has_entanglers() const {
    for (const auto& layer : layers) {
        if (!layer.entangler.gates.empty()) return true;
    }
    return false;
}

Statevector::Statevector(int qubits) : qubits_(qubits), amps_(std::size_t{1} << qubits, Complex{0.0}) {
    amps_[0] = 1.0;
}

Statevector::Statevector(int qubits, std::vector<Complex> amplitudes, bool unit_norm)
    : qubits_(qubits), amps_(std::move(amplitudes)), unit_norm_(unit_norm) {
    if (amps_.size() != (std::size_t{1} << qubits)) throw UsageError("amplitude count does not match 2^qubits");
}

double Statevector::norm() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return std::sqrt(s);
}

void Statevector::apply(const GateOp& gate, double x) {
    switch (gate.kind) {
        case GateKind::rotation:
            apply_1q(amps_, gate.target, rotation_matrix(gate.axis, gate.value));
            break;
        case GateKind::encoded_rotation:
            apply_1q(amps_, gate.target, rotation_matrix(gate.axis, gate.value * x));
            break;
        case GateKind::controlled_z:
            apply_cz(amps_, gate.control, gate.target);
            break;
        case GateKind::hadamard: {
            const double r = std::numbers::sqrt2 / 2.0;
            apply_1q(amps_, gate.target, {r, r, r, -r});
            break;
        }
    }
}

void Statevector::apply_encoded(const GateOp& gate, double angle) {
    apply_1q(amps_, gate.target, rotation_matrix(gate.axis, angle));
}

void Statevector::apply_inverse(const GateOp& gate, double angle) {
    switch (gate.kind) {
        case GateKind::rotation:
            apply_1q(amps_, gate.target, rotation_matrix(gate.axis, -gate.value));
            break;
        case GateKind::encoded_rotation:
            apply_1q(amps_, gate.target, rotation_matrix(gate.axis, -angle));
            break;
        case GateKind::controlled_z:
        case GateKind::hadamard:
            apply(gate, 0.0);  // self-inverse
            break;
    }
}

void Statevector::apply_generator(const GateOp& gate) {
    const Mat2 p = pauli(gate.axis);
    const Complex f = -kI * (0.5 * gate.value);
    apply_1q(amps_, gate.target, {f * p.a00, f * p.a01, f * p.a10, f * p.a11});
    unit_norm_ = false;
}

Statevector prepare_state(const FeatureMapSpec& spec, double x) { return prepare_state(spec, x, {}); }

Statevector prepare_state(const FeatureMapSpec& spec, double x, std::span<const double> angle_offsets) {
    spec.validate();
    check_offsets(spec, angle_offsets);
    Statevector psi(spec.qubit_count);
    std::size_t k = 0;
    auto encoded = [&](const GateOp& g) {
        const double shift = angle_offsets.empty() ? 0.0 : angle_offsets[k];
        ++k;
        psi.apply_encoded(g, g.value * x + shift);
    };
    for (const auto& layer : spec.layers) {
        for (const auto& g : layer.entangler.gates) {
            if (g.is_encoded()) {
                encoded(g);
            } else {
                psi.apply(g, x);
            }
        }
        for (const auto& g : layer.encoder) encoded(g);
    }
    return psi;
}

Statevector apply_adjoint(const FeatureMapSpec& spec, double x, std::span<const double> angle_offsets,
                          Statevector state) {
    spec.validate();
    check_offsets(spec, angle_offsets);
    if (state.qubit_count() != spec.qubit_count) throw UsageError("state/spec qubit count mismatch");
    std::size_t k = spec.encoded_gate_count();
    auto angle = [&](const GateOp& g) {
        --k;
        return g.value * x + (angle_offsets.empty() ? 0.0 : angle_offsets[k]);
    };
    for (auto layer = spec.layers.rbegin(); layer != spec.layers.rend(); ++layer) {
        for (auto g = layer->encoder.rbegin(); g != layer->encoder.rend(); ++g) state.apply_inverse(*g, angle(*g));
        for (auto g = layer->entangler.gates.rbegin(); g != layer->entangler.gates.rend(); ++g) {
            state.apply_inverse(*g, g->is_encoded() ? angle(*g) : 0.0);
        }
    }
    return state;
}

Complex overlap(const Statevector& a, const Statevector& b) {
    if (a.dimension() != b.dimension()) {
        throw UsageError("overlap: dimension mismatch (" + std::to_string(a.dimension()) + " vs " +
                         std::to_string(b.dimension()) + ")");
    }
    Complex s{0.0};
    const auto ea = a.amplitudes();
    const auto eb = b.amplitudes();
    for (std::size_t i = 0; i < ea.size(); ++i) s += std::conj(ea[i]) * eb[i];
    return s;
}

const Statevector& DerivativeStates::order(int k) const {
    switch (k) {
        case 0:
            return value;
        case 1:
            return first;
        case 2:
            return second;
        default:
            throw UsageError("derivative order " + std::to_string(k) + " unsupported (max 2)");
    }
}

DerivativeStates derivative_states(const FeatureMapSpec& spec, double x, int max_order) {
    if (max_order < 0 || max_order > 2) {
        throw UsageError("derivative order " + std::to_string(max_order) + " unsupported (max 2)");
    }
    spec.validate();
    const int n = spec.qubit_count;
    const std::size_t dim = std::size_t{1} << n;
    Statevector psi(n);
    Statevector d1(n, std::vector<Complex>(dim, Complex{0.0}), false);
    Statevector d2(n, std::vector<Complex>(dim, Complex{0.0}), false);

    auto step = [&](const GateOp& g) {
        if (!g.is_encoded()) {
            psi.apply(g, x);
            if (max_order >= 1) d1.apply(g, x);
            if (max_order >= 2) d2.apply(g, x);
            return;
        }
        // (G psi)'' = G psi'' + 2 A G psi' + A^2 G psi, with A = (-i P/2) c and A^2 = -(c^2/4) I.
        psi.apply(g, x);
        if (max_order >= 1) d1.apply(g, x);
        if (max_order >= 2) {
            d2.apply(g, x);
            Statevector t = d1;
            t.apply_generator(g);
            const double a2 = -0.25 * g.value * g.value;
            auto out = d2.amplitudes();
            const auto tv = t.amplitudes();
            const auto pv = psi.amplitudes();
            for (std::size_t i = 0; i < dim; ++i) out[i] += 2.0 * tv[i] + a2 * pv[i];
        }
        if (max_order >= 1) {
            Statevector t = psi;
            t.apply_generator(g);
            auto out = d1.amplitudes();
            const auto tv = t.amplitudes();
            for (std::size_t i = 0; i < dim; ++i) out[i] += tv[i];
        }
    };
    for (const auto& layer : spec.layers) {
        for (const auto& g : layer.entangler.gates) step(g);
        for (const auto& g : layer.encoder) step(g);
    }
    return {std::move(psi), std::move(d1), std::move(d2)};
}

Statevector derivative_state(const FeatureMapSpec& spec, double x, int order) {
    if (order < 0 || order > 2) throw UsageError("derivative order " + std::to_string(order) + " unsupported (max 2)");
    if (order == 0) return prepare_state(spec, x);
    auto states = derivative_states(spec, x, order);
    return order == 1 ? std::move(states.first) : std::move(states.second);
}

CircuitBlock hea_block(std::uint64_t seed, int depth, int qubits) {
    if (depth < 1) throw ConfigError("HEA depth must be >= 1");
    if (qubits < 1 || qubits > kMaxQubits) throw ConfigError("HEA qubit count out of range");
    Rng rng(seed);
    const double two_pi = 2.0 * std::numbers::pi;
    CircuitBlock block{qubits, {}};
    block.gates.reserve(static_cast<std::size_t>(depth) * (3 * qubits));
    for (int d = 0; d < depth; ++d) {
        for (int q = 0; q < qubits; ++q) {
            const double ty = two_pi * uniform01(rng);
            const double tz = two_pi * uniform01(rng);
            block.gates.push_back(GateOp::rotation(Axis::Y, q, ty));
            block.gates.push_back(GateOp::rotation(Axis::Z, q, tz));
        }
        for (int q = 0; q + 1 < qubits; ++q) block.gates.push_back(GateOp::cz(q, q + 1));
    }
    return block;
}

FeatureMapSpec layered_feature_map(int qubits, int layers, int hea_depth, std::uint64_t hea_seed,
                                   double coeff_divisor, Axis encoder_axis) {
    if (layers < 1) throw ConfigError("feature map needs at least one layer");
    if (!(coeff_divisor > 0.0)) throw ConfigError("encoding coefficient divisor must be positive");
    FeatureMapSpec spec{qubits, {}, hea_seed, hea_depth};
    for (int l = 0; l < layers; ++l) {
        EncodingLayer layer;
        layer.entangler = hea_depth > 0 ? hea_block(derive_seed(hea_seed, static_cast<std::uint64_t>(l)), hea_depth, qubits)
                                        : CircuitBlock{qubits, {}};
        for (int q = 0; q < qubits; ++q) {
            layer.encoder.push_back(GateOp::encoded(encoder_axis, q, static_cast<double>(q + 1) / coeff_divisor));
        }
        spec.layers.push_back(std::move(layer));
    }
    spec.validate();
    return spec;
}

FeatureMapSpec product_feature_map(std::span<const double> coefficients, Axis axis) {
    const int n = static_cast<int>(coefficients.size());
    FeatureMapSpec spec{n, {}, 0, 0};
    EncodingLayer layer;
    layer.entangler = CircuitBlock{n, {}};
    for (int q = 0; q < n; ++q) layer.encoder.push_back(GateOp::encoded(axis, q, coefficients[q]));
    spec.layers.push_back(std::move(layer));
    spec.validate();
    return spec;
}

}  // namespace qkde::qsim
