#pragma once

#include <Eigen/Core>
#include <cmath>
#include <complex>

#include "wva/errors.hpp"

namespace wva {

using Complex = std::complex<double>;

/// Two-level internal state. Basis order |up> = (1,0), |down> = (0,1).
struct SpinState {
    Complex c_up{0.0, 0.0};
    Complex c_down{0.0, 0.0};

    double norm2() const { return std::norm(c_up) + std::norm(c_down); }

    SpinState normalized() const {
        const double n = std::sqrt(norm2());
        if (n == 0.0) throw ContractViolation("SpinState: zero vector cannot be normalized");
        return {c_up / n, c_down / n};
    }

    void require_normalized(double tol = 1e-12) const {
        if (std::abs(norm2() - 1.0) > tol) {
            throw ContractViolation("SpinState: state is not normalized");
        }
    }

    static SpinState up() { return {1.0, 0.0}; }
    static SpinState down() { return {0.0, 1.0}; }
    /// sigma_x = +1 eigenstate, (|up> + |down>)/sqrt(2)
    static SpinState plus() { return {1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2}; }
    /// sigma_x = -1 eigenstate
    static SpinState minus() { return {1.0 / std::numbers::sqrt2, -1.0 / std::numbers::sqrt2}; }
    /// sigma_y = +1 eigenstate, (|up> + i|down>)/sqrt(2)
    static SpinState y_plus() {
        return {1.0 / std::numbers::sqrt2, Complex(0.0, 1.0) / std::numbers::sqrt2};
    }
};

/// <a|b>
inline Complex inner(const SpinState& a, const SpinState& b) {
    return std::conj(a.c_up) * b.c_up + std::conj(a.c_down) * b.c_down;
}

inline Eigen::Matrix2cd sigma_x() {
    Eigen::Matrix2cd m;
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline Eigen::Matrix2cd sigma_y() {
    Eigen::Matrix2cd m;
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}

inline Eigen::Matrix2cd sigma_z() {
    Eigen::Matrix2cd m;
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

/// exp(-i angle sigma_axis / 2) in closed form.
inline Eigen::Matrix2cd spin_rotation_matrix(const Eigen::Matrix2cd& sigma, double angle) {
    const double h = 0.5 * angle;
    return std::cos(h) * Eigen::Matrix2cd::Identity() - Complex(0, 1) * std::sin(h) * sigma;
}

inline SpinState apply(const Eigen::Matrix2cd& m, const SpinState& s) {
    Eigen::Vector2cd v(s.c_up, s.c_down);
    Eigen::Vector2cd w = m * v;
    return {w(0), w(1)};
}

}  // namespace wva
