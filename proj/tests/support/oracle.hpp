#pragma once

// Test-only reference implementations, written independently of the library simulator:
// dense Kronecker-product unitaries and literal generator-insertion sums.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "qkde/qsim.hpp"
#include "qkde/seeding.hpp"

namespace oracle {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using qkde::qsim::Axis;
using qkde::qsim::FeatureMapSpec;
using qkde::qsim::GateKind;
using qkde::qsim::GateOp;

inline CMatrix pauli(Axis a) {
    const std::complex<double> i{0.0, 1.0};
    CMatrix p(2, 2);
    switch (a) {
        case Axis::X:
            p << 0, 1, 1, 0;
            break;
        case Axis::Y:
            p << 0, -i, i, 0;
            break;
        case Axis::Z:
            p << 1, 0, 0, -1;
            break;
    }
    return p;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
    return out;
}

/// Embeds a 2x2 operator on `qubit` (bit `qubit` of the index).
inline CMatrix embed(const CMatrix& m, int qubit, int n) {
    const CMatrix hi = CMatrix::Identity(1 << (n - qubit - 1), 1 << (n - qubit - 1));
    const CMatrix lo = CMatrix::Identity(1 << qubit, 1 << qubit);
    return kron(hi, kron(m, lo));
}

/// exp(-i theta P / 2) = cos(theta/2) I - i sin(theta/2) P.
inline CMatrix rot(Axis a, double theta) {
    const std::complex<double> i{0.0, 1.0};
    return std::cos(theta / 2) * CMatrix::Identity(2, 2) - i * std::sin(theta / 2) * pauli(a);
}

inline CMatrix full_gate(const GateOp& g, int n, double x) {
    const int dim = 1 << n;
    switch (g.kind) {
        case GateKind::rotation:
            return embed(rot(g.axis, g.value), g.target, n);
        case GateKind::encoded_rotation:
            return embed(rot(g.axis, g.value * x), g.target, n);
        case GateKind::hadamard: {
            CMatrix h(2, 2);
            h << 1, 1, 1, -1;
            return embed(h / std::sqrt(2.0), g.target, n);
        }
        case GateKind::controlled_z: {
            CMatrix m = CMatrix::Identity(dim, dim);
            for (int k = 0; k < dim; ++k) {
                if (((k >> g.control) & 1) && ((k >> g.target) & 1)) m(k, k) = -1.0;
            }
            return m;
        }
    }
    return CMatrix::Identity(dim, dim);
}

/// (-i P / 2) c, the x-derivative factor of an encoded rotation.
inline CMatrix full_generator(const GateOp& g, int n) {
    const std::complex<double> i{0.0, 1.0};
    return embed(-i * 0.5 * g.value * pauli(g.axis), g.target, n);
}

inline std::vector<GateOp> flat_gates(const FeatureMapSpec& spec) {
    std::vector<GateOp> out;
    for (const auto& layer : spec.layers) {
        out.insert(out.end(), layer.entangler.gates.begin(), layer.entangler.gates.end());
        out.insert(out.end(), layer.encoder.begin(), layer.encoder.end());
    }
    return out;
}

inline CVector zero_state(int n) {
    CVector v = CVector::Zero(1 << n);
    v(0) = 1.0;
    return v;
}

inline CVector dense_state(const FeatureMapSpec& spec, double x) {
    CVector v = zero_state(spec.qubit_count);
    for (const auto& g : flat_gates(spec)) v = full_gate(g, spec.qubit_count, x) * v;
    return v;
}

/// d^order/dx^order U(x)|0> as the explicit sum over single (order 1) or ordered pairs of
/// (order 2) generator insertions, one circuit per term.
inline CVector literal_insertion(const FeatureMapSpec& spec, double x, int order) {
    const auto gates = flat_gates(spec);
    const int n = spec.qubit_count;
    std::vector<std::size_t> enc;
    for (std::size_t k = 0; k < gates.size(); ++k) {
        if (gates[k].kind == GateKind::encoded_rotation) enc.push_back(k);
    }
    auto circuit = [&](std::size_t first, std::size_t second, int inserts) {
        CVector v = zero_state(n);
        for (std::size_t k = 0; k < gates.size(); ++k) {
            v = full_gate(gates[k], n, x) * v;
            if (inserts >= 1 && k == first) v = full_generator(gates[k], n) * v;
            if (inserts >= 2 && k == second) v = full_generator(gates[k], n) * v;
        }
        return v;
    };
    CVector total = CVector::Zero(1 << n);
    if (order == 0) return dense_state(spec, x);
    for (std::size_t a : enc) {
        if (order == 1) {
            total += circuit(a, a, 1);
            continue;
        }
        for (std::size_t b : enc) total += circuit(a, b, 2);
    }
    return total;
}

inline double uniform(qkde::Rng& rng, double lo, double hi) { return lo + (hi - lo) * qkde::uniform01(rng); }

inline int uniform_int(qkde::Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

/// Random layered map: entanglers from seeded HEA blocks (optionally empty), encoders with
/// random axes and coefficients in [-coeff, coeff]. Without entanglers the axes are X or Y,
/// the family covered by the cos^2 product closed form.
inline FeatureMapSpec random_spec(qkde::Rng& rng, int max_qubits, double coeff, bool entanglers = true,
                                  int max_layers = 3) {
    FeatureMapSpec spec;
    spec.qubit_count = uniform_int(rng, 1, max_qubits);
    const int layers = uniform_int(rng, 1, max_layers);
    for (int l = 0; l < layers; ++l) {
        qkde::qsim::EncodingLayer layer;
        if (entanglers) {
            layer.entangler = qkde::qsim::hea_block(rng(), uniform_int(rng, 1, 2), spec.qubit_count);
        } else {
            layer.entangler = {spec.qubit_count, {}};
        }
        for (int q = 0; q < spec.qubit_count; ++q) {
            const auto axis = static_cast<Axis>(uniform_int(rng, 0, entanglers ? 2 : 1));
            layer.encoder.push_back(GateOp::encoded(axis, q, uniform(rng, -coeff, coeff)));
        }
        spec.layers.push_back(std::move(layer));
    }
    return spec;
}

}  // namespace oracle
