#pragma once

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <numbers>

#include "wva/errors.hpp"
#include "wva/spin.hpp"

// Closed-form weak-value and pointer-shift predictions. Everything in this
// header is analytic and deliberately shares no code with the Fock-space
// simulator, so the two can serve as independent cross-checks.

namespace wva::theory {

struct WeakValueResult {
    Complex value;    // A_w
    Complex overlap;  // <psi_f | psi_i>
};

/// A_w = <psi_f| A |psi_i> / <psi_f|psi_i> for a 2x2 Hermitian observable.
inline WeakValueResult weak_value(const SpinState& psi_i, const SpinState& psi_f,
                                  const Eigen::Matrix2cd& observable) {
    psi_i.require_normalized();
    psi_f.require_normalized();
    if ((observable - observable.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
        throw ContractViolation("weak_value: observable must be Hermitian");
    }
    const Complex overlap = inner(psi_f, psi_i);
    if (std::abs(overlap) <= 1e-14) {
        throw UndefinedWeakValueError(
            "weak_value: pre- and postselection are orthogonal");
    }
    const SpinState a_psi = apply(observable, psi_i);
    const Complex numerator = inner(psi_f, a_psi);
    return {numerator / overlap, overlap};
}

/// Threshold on |A_w| g beyond which the first-order treatment is flagged.
inline constexpr double kWeakRegimeThreshold = 0.1;

struct PointerShift {
    double dz = 0.0;        // delta_z units
    double dp = 0.0;        // delta_p units
    double coupling = 0.0;  // |A_w| g regime indicator
    bool weak_regime = true;
};

/// First-order prediction: dz = g Re(A_w), dp = g Im(A_w).
inline PointerShift first_order_pointer_shift(double g, Complex weak_val) {
    PointerShift s;
    s.dz = g * weak_val.real();
    s.dp = g * weak_val.imag();
    s.coupling = std::abs(weak_val) * std::abs(g);
    s.weak_regime = s.coupling < kWeakRegimeThreshold;
    return s;
}

/// Postselection success probability 0.5 (1 - cos(2 theta) e^{-g^2/2}).
inline double success_probability(double g, double theta) {
    if (theta < 0.0 || theta > std::numbers::pi / 2) {
        throw ContractViolation("success_probability: theta must lie in [0, pi/2]");
    }
    double p = 0.5 * (1.0 - std::cos(2.0 * theta) * std::exp(-0.5 * g * g));
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    return p;
}

/// Exact postselected mean position shift (delta_z units),
/// -g sin(2 theta) / (1 - e^{-g^2/2} cos(2 theta)).
inline double delta_z(double g, double theta) {
    const double denom = 1.0 - std::exp(-0.5 * g * g) * std::cos(2.0 * theta);
    if (std::abs(denom) < 1e-14) {
        throw UndefinedShiftError("delta_z: postselection denominator vanished "
                                  "(g and theta jointly degenerate)");
    }
    return -g * std::sin(2.0 * theta) / denom;
}

/// Imaginary-weak-value momentum shift (delta_p units),
/// g sin(2 phi) / (e^{g^2/2} - cos(2 phi)).
inline double delta_p(double g, double phi) {
    const double denom = std::exp(0.5 * g * g) - std::cos(2.0 * phi);
    if (std::abs(denom) < 1e-14) {
        throw UndefinedShiftError("delta_p: denominator vanished (g = 0 and phi in {0, pi})");
    }
    return g * std::sin(2.0 * phi) / denom;
}

/// Normalized postselected pointer wavefunction (real-valued),
///
///   phi_f(z) = N [cos(pi/4 + theta) e^{-(z-g)^2/4}
///               - sin(pi/4 + theta) e^{-(z+g)^2/4}],
///   N^-2 = sqrt(2 pi) (1 - cos(2 theta) e^{-g^2/2}),
///
/// with z in delta_z units.
struct PostselectedWavefunction {
    double g = 0.0;
    double theta = 0.0;
    double prefactor = 0.0;  // N above

    double amplitude(double z) const {
        const double c = std::cos(std::numbers::pi / 4 + theta);
        const double s = std::sin(std::numbers::pi / 4 + theta);
        return prefactor * (c * std::exp(-0.25 * (z - g) * (z - g)) -
                            s * std::exp(-0.25 * (z + g) * (z + g)));
    }

    double density(double z) const {
        const double a = amplitude(z);
        return a * a;
    }
};

inline PostselectedWavefunction postselected_wavefunction(double g, double theta) {
    const double weight = 1.0 - std::cos(2.0 * theta) * std::exp(-0.5 * g * g);
    if (weight <= 1e-14) {
        throw UndefinedStateError("postselected_wavefunction: degenerate postselection "
                                  "(theta -> 0 and g -> 0 jointly)");
    }
    PostselectedWavefunction w;
    w.g = g;
    w.theta = theta;
    w.prefactor = 1.0 / (std::pow(2.0 * std::numbers::pi, 0.25) * std::sqrt(weight));
    return w;
}

}  // namespace wva::theory
