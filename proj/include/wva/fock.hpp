#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "wva/errors.hpp"
#include "wva/spin.hpp"

namespace wva {

inline constexpr int kDefaultNmax = 64;

/// Population allowed in the top four Fock levels before a state is rejected.
inline constexpr double kTruncationGuard = 1e-10;

namespace detail {

inline double top_level_population(const Eigen::VectorXcd& amps) {
    const Eigen::Index n = amps.size();
    const Eigen::Index start = std::max<Eigen::Index>(0, n - 4);
    double s = 0.0;
    for (Eigen::Index i = start; i < n; ++i) s += std::norm(amps(i));
    return s;
}

inline void check_truncation(const Eigen::VectorXcd& amps, const char* where) {
    if (top_level_population(amps) >= kTruncationGuard) {
        throw InvalidStateError(std::string(where) +
                                ": population leaked into the top Fock levels; "
                                "increase n_max or reduce the displacement");
    }
}

/// Annihilation operator on the truncated basis |0..n_max>.
inline Eigen::MatrixXcd lowering_operator(int n_max) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

/// zeta = a + a^dag (position in delta_z units)
inline Eigen::MatrixXcd position_operator(int n_max) {
    const Eigen::MatrixXcd a = lowering_operator(n_max);
    return a + a.adjoint();
}

/// pi = i(a^dag - a) (momentum in delta_p units)
inline Eigen::MatrixXcd momentum_operator(int n_max) {
    const Eigen::MatrixXcd a = lowering_operator(n_max);
    return Complex(0, 1) * (a.adjoint() - a);
}

/// exp(-i t K) v for Hermitian K, via spectral decomposition.
inline Eigen::VectorXcd hermitian_evolution(const Eigen::MatrixXcd& k_op, double t,
                                            const Eigen::VectorXcd& v) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k_op);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const Eigen::MatrixXcd& vec = es.eigenvectors();
    Eigen::VectorXcd coeff = vec.adjoint() * v;
    for (Eigen::Index i = 0; i < coeff.size(); ++i) {
        coeff(i) *= std::exp(Complex(0, -lam(i) * t));
    }
    return vec * coeff;
}

/// Normalized harmonic-oscillator position eigenfunctions h_0..h_nmax at
/// zeta, by stable upward recurrence of the Hermite functions.
/// integral |h_n(zeta)|^2 dzeta = 1; h_0(zeta) = (2 pi)^(-1/4) exp(-zeta^2/4).
inline void hermite_functions(int n_max, double zeta, std::vector<double>& out) {
    out.resize(n_max + 1);
    const double x = zeta / std::numbers::sqrt2;
    const double f0 = std::pow(2.0 * std::numbers::pi, -0.25) * std::exp(-0.25 * zeta * zeta);
    out[0] = f0;
    if (n_max >= 1) out[1] = std::numbers::sqrt2 * x * f0;
    for (int n = 1; n < n_max; ++n) {
        out[n + 1] = std::sqrt(2.0 / (n + 1)) * x * out[n] - std::sqrt(double(n) / (n + 1)) * out[n - 1];
    }
}

}  // namespace detail

/// Motional state of one harmonic mode in the truncated Fock basis.
/// amps(n) is the amplitude of |n>, n = 0..n_max.
struct MotionalState {
    Eigen::VectorXcd amps;

    int n_max() const { return static_cast<int>(amps.size()) - 1; }
    double norm2() const { return amps.squaredNorm(); }

    void require_normalized(double tol = 1e-12) const {
        if (std::abs(norm2() - 1.0) > tol) {
            throw ContractViolation("MotionalState: state is not normalized");
        }
    }
};

/// Joint spin (x) motion state. Blocks are unnormalized; the total norm is 1.
struct JointState {
    Eigen::VectorXcd up;    // motional amplitudes paired with |up>
    Eigen::VectorXcd down;  // motional amplitudes paired with |down>

    int n_max() const { return static_cast<int>(up.size()) - 1; }
    double norm2() const { return up.squaredNorm() + down.squaredNorm(); }
    double p_up() const { return up.squaredNorm(); }
    double p_down() const { return down.squaredNorm(); }

    void require_normalized(double tol = 1e-12) const {
        if (std::abs(norm2() - 1.0) > tol) {
            throw ContractViolation("JointState: state is not normalized");
        }
    }

    static JointState product(const SpinState& spin, const MotionalState& motional) {
        spin.require_normalized();
        motional.require_normalized();
        JointState j;
        j.up = spin.c_up * motional.amps;
        j.down = spin.c_down * motional.amps;
        return j;
    }

    /// Stacked vector [up; down], matching kron(spin, motion) operators.
    Eigen::VectorXcd stacked() const {
        Eigen::VectorXcd v(2 * up.size());
        v.head(up.size()) = up;
        v.tail(down.size()) = down;
        return v;
    }

    static JointState from_stacked(const Eigen::VectorXcd& v) {
        JointState j;
        const Eigen::Index half = v.size() / 2;
        j.up = v.head(half);
        j.down = v.tail(half);
        return j;
    }
};

inline MotionalState ground_state(int n_max) {
    if (n_max < 8) throw ConfigError("ground_state: n_max must be at least 8");
    MotionalState s;
    s.amps = Eigen::VectorXcd::Zero(n_max + 1);
    s.amps(0) = 1.0;
    return s;
}

/// Coherent state |alpha>, amplitudes e^{-|a|^2/2} a^n / sqrt(n!),
/// renormalized after truncation.
inline MotionalState coherent_state(Complex alpha, int n_max = kDefaultNmax) {
    if (n_max < 8) throw ConfigError("coherent_state: n_max must be at least 8");
    if (std::norm(alpha) > n_max / 4.0) {
        throw InvalidStateError("coherent_state: |alpha|^2 exceeds n_max/4");
    }
    MotionalState s;
    s.amps.resize(n_max + 1);
    s.amps(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n <= n_max; ++n) s.amps(n) = s.amps(n - 1) * alpha / std::sqrt(double(n));
    detail::check_truncation(s.amps, "coherent_state");
    s.amps /= std::sqrt(s.norm2());
    return s;
}

/// D(alpha) = exp(alpha a^dag - alpha* a), by exact exponentiation of the
/// truncated generator.
inline MotionalState apply_displacement(const MotionalState& state, Complex alpha) {
    state.require_normalized();
    const int n_max = state.n_max();
    // D(alpha) = exp(-i K) with Hermitian K = i(alpha a^dag - alpha* a)
    const Eigen::MatrixXcd a = detail::lowering_operator(n_max);
    const Eigen::MatrixXcd k_op =
        Complex(0, 1) * (alpha * a.adjoint() - std::conj(alpha) * a);
    MotionalState out;
    out.amps = detail::hermitian_evolution(k_op, 1.0, state.amps);
    detail::check_truncation(out.amps, "apply_displacement");
    out.amps /= std::sqrt(out.norm2());
    return out;
}

/// <zeta> in delta_z units: <a + a^dag>.
inline double expect_z(const MotionalState& state) {
    state.require_normalized();
    Complex acc = 0.0;
    for (int n = 1; n <= state.n_max(); ++n) {
        acc += std::conj(state.amps(n - 1)) * std::sqrt(double(n)) * state.amps(n);
    }
    return 2.0 * acc.real();
}

/// <pi> in delta_p units: <i(a^dag - a)>.
inline double expect_p(const MotionalState& state) {
    state.require_normalized();
    Complex acc = 0.0;
    for (int n = 1; n <= state.n_max(); ++n) {
        acc += std::conj(state.amps(n - 1)) * std::sqrt(double(n)) * state.amps(n);
    }
    // <i(adag - a)> = i(<adag> - <a>) = i(conj(acc) - acc) = 2 Im(acc)
    return 2.0 * acc.imag();
}

/// <pi^2> in delta_p^2 units, as ||(a^dag - a) psi||^2.
inline double expect_p2(const MotionalState& state) {
    state.require_normalized();
    const int n_max = state.n_max();
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(n_max + 2);
    for (int n = 0; n <= n_max; ++n) {
        if (n + 1 <= n_max + 1) w(n + 1) += std::sqrt(double(n + 1)) * state.amps(n);  // a^dag
        if (n >= 1) w(n - 1) -= std::sqrt(double(n)) * state.amps(n);                  // -a
    }
    return w.squaredNorm();
}

/// Mean phonon number <n>.
inline double expect_n(const MotionalState& state) {
    state.require_normalized();
    double acc = 0.0;
    for (int n = 1; n <= state.n_max(); ++n) acc += n * std::norm(state.amps(n));
    return acc;
}

/// |phi(zeta)|^2 on the given sorted grid (density per unit zeta).
/// Throws AccuracyError when the grid fails to capture unit probability
/// to 1e-3 (too coarse or too narrow).
inline std::vector<double> position_distribution(const MotionalState& state,
                                                 std::span<const double> grid) {
    state.require_normalized();
    if (grid.size() < 2) throw AccuracyError("position_distribution: grid needs >= 2 points");
    for (size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw ContractViolation("position_distribution: grid must be strictly increasing");
        }
    }
    const int n_max = state.n_max();
    std::vector<double> h;
    std::vector<double> density(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        detail::hermite_functions(n_max, grid[i], h);
        Complex amp = 0.0;
        for (int n = 0; n <= n_max; ++n) amp += state.amps(n) * h[n];
        density[i] = std::norm(amp);
    }
    double riemann = 0.0;
    for (size_t i = 0; i + 1 < grid.size(); ++i) {
        riemann += 0.5 * (density[i] + density[i + 1]) * (grid[i + 1] - grid[i]);
    }
    if (std::abs(riemann - 1.0) > 1e-3) {
        throw AccuracyError("position_distribution: grid too coarse or too narrow "
                            "(captured probability deviates from 1 by more than 1e-3)");
    }
    return density;
}

}  // namespace wva
