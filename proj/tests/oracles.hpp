// Independent oracles used by the test suite. Everything here is computed
// through a different route than include/wva (analytic matrix elements,
// direct summation, quadrature) so that agreement is a genuine cross-check.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

namespace oracle {

using Complex = std::complex<double>;

inline Eigen::MatrixXcd lowering(int dim) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

inline Eigen::MatrixXcd position(int dim) {
    const Eigen::MatrixXcd a = lowering(dim);
    return a + a.adjoint();
}

inline Eigen::MatrixXcd momentum(int dim) {
    const Eigen::MatrixXcd a = lowering(dim);
    return Complex(0, 1) * (a.adjoint() - a);
}

inline Eigen::VectorXcd coherent(Complex alpha, int dim) {
    Eigen::VectorXcd v(dim);
    v(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < dim; ++n) v(n) = v(n - 1) * alpha / std::sqrt(double(n));
    return v;
}

inline Complex expectation(const Eigen::VectorXcd& psi, const Eigen::MatrixXcd& op) {
    return psi.adjoint() * (op * psi);
}

/// Generalized Laguerre polynomial L_n^(k)(x) by the three-term recurrence.
inline double laguerre(int n, int k, double x) {
    if (n == 0) return 1.0;
    double lm1 = 1.0;
    double l = 1.0 + k - x;
    for (int j = 2; j <= n; ++j) {
        const double next = ((2.0 * j - 1.0 + k - x) * l - (j - 1.0 + k) * lm1) / j;
        lm1 = l;
        l = next;
    }
    return l;
}

/// Displacement operator in the Fock basis via the analytic matrix elements
/// <m|D(alpha)|n> (Laguerre form), entirely independent of exponentiation.
inline Eigen::MatrixXcd displacement_matrix(Complex alpha, int dim) {
    const double x = std::norm(alpha);
    Eigen::MatrixXcd d(dim, dim);
    for (int m = 0; m < dim; ++m) {
        for (int n = 0; n < dim; ++n) {
            if (m >= n) {
                double ratio = 1.0;  // sqrt(n!/m!)
                for (int j = n + 1; j <= m; ++j) ratio /= std::sqrt(double(j));
                d(m, n) = ratio * std::pow(alpha, m - n) * std::exp(-0.5 * x) *
                          laguerre(n, m - n, x);
            } else {
                double ratio = 1.0;  // sqrt(m!/n!)
                for (int j = m + 1; j <= n; ++j) ratio /= std::sqrt(double(j));
                d(m, n) = ratio * std::pow(-std::conj(alpha), n - m) * std::exp(-0.5 * x) *
                          laguerre(m, n - m, x);
            }
        }
    }
    return d;
}

/// Composite-Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
    if (intervals % 2) ++intervals;
    const double h = (b - a) / intervals;
    double acc = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

/// Unnormalized Eq.-5-style two-Gaussian amplitude, written out directly.
inline double two_gaussian_amplitude(double z, double g, double theta) {
    const double c = std::cos(std::numbers::pi / 4 + theta);
    const double s = std::sin(std::numbers::pi / 4 + theta);
    return c * std::exp(-0.25 * (z - g) * (z - g)) - s * std::exp(-0.25 * (z + g) * (z + g));
}

/// Postselected mean position by direct quadrature of the two-Gaussian density.
inline double postselected_mean_by_quadrature(double g, double theta) {
    const double lo = -12.0 - g;
    const double hi = 12.0 + g;
    const auto dens = [&](double z) {
        const double a = two_gaussian_amplitude(z, g, theta);
        return a * a;
    };
    const double norm = simpson(dens, lo, hi, 4000);
    const double mean = simpson([&](double z) { return z * dens(z); }, lo, hi, 4000);
    return mean / norm;
}

/// Tiny deterministic generator for reproducible random test inputs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    double uniform() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        z ^= z >> 31;
        return double(z >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    Complex complex_in_disk(double radius) {
        while (true) {
            const double x = uniform(-1.0, 1.0);
            const double y = uniform(-1.0, 1.0);
            if (x * x + y * y <= 1.0) return radius * Complex(x, y);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace oracle
