#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "wva/errors.hpp"
#include "wva/fock.hpp"

namespace wva {

/// Bichromatic spin-dependent-displacement pulse knobs.
/// phi_plus/phi_minus are the half-sum and half-difference of the red and
/// blue sideband phases.
struct PulseParams {
    double rabi = 0.0;      // Omega, rad/s
    double eta = 0.0;       // Lamb-Dicke parameter
    double duration = 0.0;  // s
    double phi_plus = std::numbers::pi / 2;
    double phi_minus = std::numbers::pi / 2;

    /// g = eta * Omega * t, the dimensionless wavepacket splitting.
    double coupling_g() const { return eta * rabi * duration; }

    void validate() const {
        if (!(eta > 0.0) || eta > 0.3) {
            throw ConfigError("PulseParams: eta must lie in (0, 0.3] (Lamb-Dicke regime)");
        }
        if (rabi < 0.0 || duration < 0.0) {
            throw ConfigError("PulseParams: rabi and duration must be nonnegative");
        }
        if (!std::isfinite(phi_plus) || !std::isfinite(phi_minus)) {
            throw ConfigError("PulseParams: phases must be finite");
        }
    }
};

enum class Axis { x, y, z };

struct RotationSpec {
    Axis axis = Axis::y;
    double angle = 0.0;  // rad

    void validate() const {
        if (!std::isfinite(angle)) throw ConfigError("RotationSpec: angle must be finite");
    }
};

/// Interaction generator H_d / hbar (rad/s) on the joint space:
///
///   (eta Omega / 2) [sx sin(phi+) + sy cos(phi+)]
///                (x) [-(a^dag + a) cos(phi-) + i(a^dag - a) sin(phi-)]
///
/// phi- selects the displacement axis in phase space, the spin state the
/// direction along it, phi+ the spin eigenbasis being split.
inline Eigen::MatrixXcd bichromatic_generator(const PulseParams& params, int n_max) {
    params.validate();
    const Eigen::Matrix2cd spin_part =
        std::sin(params.phi_plus) * sigma_x() + std::cos(params.phi_plus) * sigma_y();
    const Eigen::MatrixXcd motion_part =
        -std::cos(params.phi_minus) * detail::position_operator(n_max) +
        std::sin(params.phi_minus) * detail::momentum_operator(n_max);
    const int dim = n_max + 1;
    Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(2 * dim, 2 * dim);
    const double scale = 0.5 * params.eta * params.rabi;
    gen.topLeftCorner(dim, dim) = scale * spin_part(0, 0) * motion_part;
    gen.topRightCorner(dim, dim) = scale * spin_part(0, 1) * motion_part;
    gen.bottomLeftCorner(dim, dim) = scale * spin_part(1, 0) * motion_part;
    gen.bottomRightCorner(dim, dim) = scale * spin_part(1, 1) * motion_part;
    return gen;
}

/// Apply U = exp(-i H_d t / hbar) for one pulse. The generator is
/// time-independent, so a single exact exponential suffices.
inline JointState evolve_displacement(const JointState& state, const PulseParams& params) {
    state.require_normalized();
    const Eigen::MatrixXcd gen = bichromatic_generator(params, state.n_max());
    Eigen::VectorXcd evolved = detail::hermitian_evolution(gen, params.duration, state.stacked());
    JointState out = JointState::from_stacked(evolved);
    detail::check_truncation(out.up, "evolve_displacement");
    detail::check_truncation(out.down, "evolve_displacement");
    const double n = std::sqrt(out.norm2());
    out.up /= n;
    out.down /= n;
    return out;
}

/// Single-qubit rotation exp(-i angle sigma_axis / 2) (x) identity.
inline JointState rotate(const JointState& state, const RotationSpec& spec) {
    state.require_normalized();
    spec.validate();
    Eigen::Matrix2cd sigma;
    switch (spec.axis) {
        case Axis::x: sigma = sigma_x(); break;
        case Axis::y: sigma = sigma_y(); break;
        case Axis::z: sigma = sigma_z(); break;
        default: throw ConfigError("rotate: unknown axis");
    }
    const Eigen::Matrix2cd r = spin_rotation_matrix(sigma, spec.angle);
    JointState out;
    out.up = r(0, 0) * state.up + r(0, 1) * state.down;
    out.down = r(1, 0) * state.up + r(1, 1) * state.down;
    const double n = std::sqrt(out.norm2());
    out.up /= n;
    out.down /= n;
    return out;
}

}  // namespace wva
