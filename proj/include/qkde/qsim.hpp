#pragma once

// Exact statevector simulation of layered feature-map circuits.
//
// Conventions:
//  * rotation gates are exp(-i theta P / 2) for P in {X, Y, Z};
//  * an encoded rotation on variable value x has angle c * x (linear encoding);
//  * qubit q is bit q of the amplitude index (little-endian).

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace qkde::qsim {

using Complex = std::complex<double>;

inline constexpr int kMaxQubits = 16;

enum class Axis { X, Y, Z };

enum class GateKind { rotation, encoded_rotation, controlled_z, hadamard };

struct GateOp {
    GateKind kind = GateKind::hadamard;
    Axis axis = Axis::X;
    int target = 0;
    int control = -1;
    // Fixed angle for `rotation`, radians per unit x for `encoded_rotation`.
    double value = 0.0;

    static GateOp rotation(Axis axis, int target, double angle);
    static GateOp encoded(Axis axis, int target, double coefficient);
    static GateOp cz(int control, int target);
    static GateOp hadamard(int target);

    [[nodiscard]] bool is_encoded() const noexcept { return kind == GateKind::encoded_rotation; }
    bool operator==(const GateOp&) const = default;
};

struct CircuitBlock {
    int qubit_count = 1;
    std::vector<GateOp> gates;

    /// Throws ConfigError when an index is out of range or control == target.
    void validate() const;
    bool operator==(const CircuitBlock&) const = default;
};

struct EncodingLayer {
    CircuitBlock entangler;
    std::vector<GateOp> encoder;  // encoded rotations only
};

/// U(x) = U_enc_M(x) V_M ... U_enc_1(x) V_1. Layers are applied in order, entangler first.
struct FeatureMapSpec {
    int qubit_count = 1;
    std::vector<EncodingLayer> layers;
    std::uint64_t hea_seed = 0;
    int hea_depth = 0;

    void validate() const;
    /// Encoded gates in application order; the index used by angle offsets.
    [[nodiscard]] std::vector<GateOp> encoded_gates() const;
    [[nodiscard]] std::size_t encoded_gate_count() const;
    [[nodiscard]] bool has_entanglers() const;
};

class Statevector {
public:
    Statevector() = default;
    /// |0...0> on `qubits` qubits.
    explicit Statevector(int qubits);
    Statevector(int qubits, std::vector<Complex> amplitudes, bool unit_norm);

    [[nodiscard]] int qubit_count() const noexcept { return qubits_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return amps_.size(); }
    [[nodiscard]] std::span<const Complex> amplitudes() const noexcept { return amps_; }
    [[nodiscard]] std::span<Complex> amplitudes() noexcept { return amps_; }
    [[nodiscard]] const Complex& operator[](std::size_t i) const { return amps_[i]; }
    [[nodiscard]] Complex& operator[](std::size_t i) { return amps_[i]; }
    /// False for derivative states, which are not normalized.
    [[nodiscard]] bool unit_norm() const noexcept { return unit_norm_; }
    [[nodiscard]] double norm() const;

    void apply(const GateOp& gate, double x);
    /// Applies exp(-i (c x + offset) P / 2) for an encoded gate.
    void apply_encoded(const GateOp& gate, double angle);
    void apply_inverse(const GateOp& gate, double angle);
    /// Multiplies by the insertion operator (-i P / 2) * c of an encoded gate.
    void apply_generator(const GateOp& gate);

private:
    int qubits_ = 0;
    std::vector<Complex> amps_;
    bool unit_norm_ = true;
};

[[nodiscard]] Statevector prepare_state(const FeatureMapSpec& spec, double x);

/// U(x)|0> with the angle of encoded gate k shifted by offsets[k]. Empty offsets means none.
[[nodiscard]] Statevector prepare_state(const FeatureMapSpec& spec, double x,
                                        std::span<const double> angle_offsets);

/// U^dagger(x) applied to `state`, with the same offset convention as prepare_state.
[[nodiscard]] Statevector apply_adjoint(const FeatureMapSpec& spec, double x,
                                        std::span<const double> angle_offsets, Statevector state);

/// Sum_i conj(a_i) b_i. Throws UsageError on dimension mismatch.
[[nodiscard]] Complex overlap(const Statevector& a, const Statevector& b);

/// The state and its first two x-derivatives, d^k/dx^k U(x)|0>.
struct DerivativeStates {
    Statevector value;
    Statevector first;
    Statevector second;

    [[nodiscard]] const Statevector& order(int k) const;
};

/// Propagates (psi, psi', psi'') through the circuit in one pass. Each encoded gate G
/// contributes its insertion operator A = (-i P/2) c via the Leibniz rule, which
/// accumulates exactly the sum over single (first order) and ordered-pair (second
/// order) generator insertions.
[[nodiscard]] DerivativeStates derivative_states(const FeatureMapSpec& spec, double x, int max_order = 2);

/// d^order/dx^order U(x)|0>; order 0 delegates to prepare_state. Throws UsageError for order > 2.
[[nodiscard]] Statevector derivative_state(const FeatureMapSpec& spec, double x, int order);

/// Hardware-efficient entangler: per depth unit, Ry then Rz on every qubit with angles drawn
/// uniformly from [0, 2 pi) in qubit order, then CZ on (q, q+1) for q = 0..N-2.
[[nodiscard]] CircuitBlock hea_block(std::uint64_t seed, int depth, int qubits);

/// `layers` repetitions of [HEA block; encoder] with encoder coefficient c_q = q / divisor on
/// qubit q-1 (q = 1..N). Layer l draws its HEA angles from derive_seed(seed, l).
[[nodiscard]] FeatureMapSpec layered_feature_map(int qubits, int layers, int hea_depth, std::uint64_t hea_seed,
                                                 double coeff_divisor, Axis encoder_axis = Axis::X);

/// Single encoder layer, no entangler: one encoded rotation per qubit with the given coefficients.
[[nodiscard]] FeatureMapSpec product_feature_map(std::span<const double> coefficients, Axis axis = Axis::X);

}  // namespace qkde::qsim
