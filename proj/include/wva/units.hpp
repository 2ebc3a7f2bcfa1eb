#pragma once

#include <cmath>
#include <numbers>

#include "wva/errors.hpp"

namespace wva {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double ca40_mass_u = 39.9626;          // 40Ca+ in u
}  // namespace constants

/// Harmonic-trap unit system for one motional mode.
///
/// All simulator quantities are dimensionless: position in units of the
/// ground-state wavepacket size delta_z = sqrt(hbar / 2 m omega_z), momentum
/// in units of delta_p = hbar / (2 delta_z). TrapUnits converts at the edges.
struct TrapUnits {
    double omega_z = 0.0;  // rad/s
    double mass = 0.0;     // kg
    double delta_z = 0.0;  // m
    double delta_p = 0.0;  // kg m/s

    static TrapUnits from(double omega_z, double mass) {
        if (!(omega_z > 0.0) || !(mass > 0.0)) {
            throw ConfigError("TrapUnits: omega_z and mass must be positive");
        }
        TrapUnits u;
        u.omega_z = omega_z;
        u.mass = mass;
        u.delta_z = std::sqrt(constants::hbar / (2.0 * mass * omega_z));
        u.delta_p = constants::hbar / (2.0 * u.delta_z);
        return u;
    }

    double z_to_meters(double zeta) const { return zeta * delta_z; }
    double p_to_si(double pi_dimensionless) const { return pi_dimensionless * delta_p; }
};

/// Units for a 40Ca+ ion in the axial mode (default 2pi x 1.41 MHz).
inline TrapUnits calcium40_trap(double omega_z = 2.0 * std::numbers::pi * 1.41e6) {
    return TrapUnits::from(omega_z, constants::ca40_mass_u * constants::atomic_mass_unit);
}

}  // namespace wva
