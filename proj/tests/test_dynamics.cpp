#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "wva/dynamics.hpp"
#include "wva/measurement.hpp"

using namespace wva;
using Catch::Matchers::WithinAbs;

namespace {

PulseParams paper_pulse(double duration = 4.0e-6) {
    PulseParams p;
    p.rabi = 2.0 * std::numbers::pi * 19.0e3;
    p.eta = 0.08;
    p.duration = duration;
    return p;
}

/// Largest element difference between two joint states modulo global phase.
double state_distance_mod_phase(const JointState& a, const JointState& b) {
    const Eigen::VectorXcd va = a.stacked();
    const Eigen::VectorXcd vb = b.stacked();
    Complex overlap = vb.dot(va);  // conj(vb) . va
    if (std::abs(overlap) < 1e-14) return 2.0;
    const Complex phase = overlap / std::abs(overlap);
    return (va - phase * vb).norm();
}

}  // namespace

TEST_CASE("bichromatic generator matches the interaction term") {
    const int n_max = 24;
    const int dim = n_max + 1;

    SECTION("phi+ = phi- = pi/2 gives the sigma_x momentum coupling") {
        PulseParams p = paper_pulse();
        const Eigen::MatrixXcd gen = bichromatic_generator(p, n_max);
        Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(2 * dim, 2 * dim);
        const Eigen::MatrixXcd block = 0.5 * p.eta * p.rabi * oracle::momentum(dim);
        expected.topRightCorner(dim, dim) = block;   // sigma_x upper
        expected.bottomLeftCorner(dim, dim) = block;  // sigma_x lower
        CHECK((gen - expected).cwiseAbs().maxCoeff() < 1e-12 * p.eta * p.rabi);
    }

    SECTION("phi- = 0 couples to -(a^dag + a)") {
        PulseParams p = paper_pulse();
        p.phi_minus = 0.0;
        const Eigen::MatrixXcd gen = bichromatic_generator(p, n_max);
        Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(2 * dim, 2 * dim);
        const Eigen::MatrixXcd block = -0.5 * p.eta * p.rabi * oracle::position(dim);
        expected.topRightCorner(dim, dim) = block;
        expected.bottomLeftCorner(dim, dim) = block;
        CHECK((gen - expected).cwiseAbs().maxCoeff() < 1e-12 * p.eta * p.rabi);
    }

    SECTION("zero Rabi strength gives the zero operator") {
        PulseParams p = paper_pulse();
        p.rabi = 0.0;
        CHECK(bichromatic_generator(p, n_max).cwiseAbs().maxCoeff() == 0.0);
    }

    SECTION("Hermiticity for random phases") {
        oracle::Rng rng(5);
        for (int i = 0; i < 6; ++i) {
            PulseParams p = paper_pulse();
            p.phi_plus = rng.uniform(-3.14, 3.14);
            p.phi_minus = rng.uniform(-3.14, 3.14);
            const Eigen::MatrixXcd gen = bichromatic_generator(p, n_max);
            CHECK((gen - gen.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        }
    }

    SECTION("eta outside the Lamb-Dicke regime is rejected") {
        PulseParams p = paper_pulse();
        p.eta = 0.4;
        CHECK_THROWS_AS(bichromatic_generator(p, n_max), ConfigError);
    }
}

TEST_CASE("spin-dependent displacement evolution") {
    const MotionalState vac = ground_state(kDefaultNmax);
    const JointState start = JointState::product(SpinState::down(), vac);

    SECTION("paper parameters give g close to 0.04") {
        const PulseParams p = paper_pulse();
        CHECK_THAT(p.coupling_g(), WithinAbs(0.038201766667651886, 1e-15));
    }

    SECTION("zero duration is the identity") {
        const JointState out = evolve_displacement(start, paper_pulse(0.0));
        CHECK(state_distance_mod_phase(out, start) < 1e-13);
    }

    SECTION("produces the entangled two-Gaussian state") {
        const PulseParams p = paper_pulse();
        const double g = p.coupling_g();
        const JointState evolved = evolve_displacement(start, p);

        // |Psi> = (|+>|g/2> - |->|-g/2>)/sqrt(2), assembled from the analytic
        // coherent amplitudes and the sigma_x eigenbasis
        const Eigen::VectorXcd plus_branch = oracle::coherent(g / 2.0, kDefaultNmax + 1);
        const Eigen::VectorXcd minus_branch = oracle::coherent(-g / 2.0, kDefaultNmax + 1);
        JointState expected;
        expected.up = 0.5 * (plus_branch - minus_branch);
        expected.down = 0.5 * (plus_branch + minus_branch);
        CHECK(state_distance_mod_phase(evolved, expected) < 1e-9);
    }

    SECTION("cat-state readout probability follows the calibration law") {
        for (double t : {1e-6, 4e-6, 12e-6, 30e-6}) {
            const PulseParams p = paper_pulse(t);
            const double alpha = 0.5 * p.eta * p.rabi * t;
            const JointState evolved = evolve_displacement(start, p);
            CHECK_THAT(evolved.p_up(),
                       WithinAbs(0.5 * (1.0 - std::exp(-2.0 * alpha * alpha)), 1e-10));
        }
    }

    SECTION("equivalent to conditional displacement in the sigma_x eigenbasis") {
        oracle::Rng rng(17);
        for (int trial = 0; trial < 4; ++trial) {
            PulseParams p = paper_pulse(rng.uniform(1e-6, 40e-6));
            const double half_g = 0.5 * p.coupling_g();
            const JointState evolved = evolve_displacement(start, p);
            // |down> = (|+> - |->)/sqrt(2); displace each branch analytically
            const int dim = kDefaultNmax + 1;
            const Eigen::VectorXcd plus_branch =
                oracle::displacement_matrix(half_g, dim).col(0) / std::numbers::sqrt2;
            const Eigen::VectorXcd minus_branch =
                -oracle::displacement_matrix(-half_g, dim).col(0) / std::numbers::sqrt2;
            JointState expected;
            expected.up = (plus_branch + minus_branch) / std::numbers::sqrt2;
            expected.down = (plus_branch - minus_branch) / std::numbers::sqrt2;
            CHECK(state_distance_mod_phase(evolved, expected) < 1e-9);
        }
    }

    SECTION("pulse durations add up") {
        const PulseParams p1 = paper_pulse(3e-6);
        const PulseParams p2 = paper_pulse(5e-6);
        const PulseParams total = paper_pulse(8e-6);
        const JointState split = evolve_displacement(evolve_displacement(start, p1), p2);
        const JointState joined = evolve_displacement(start, total);
        CHECK(state_distance_mod_phase(split, joined) < 1e-9);
    }

    SECTION("phi- switches the displacement axis") {
        PulseParams p = paper_pulse(20e-6);
        const JointState z_axis = evolve_displacement(start, p);
        p.phi_minus = 0.0;
        const JointState p_axis = evolve_displacement(start, p);
        // project onto |up> (no rotation) and look at the branch quadratures
        const MotionalState z_branch = project_spin(z_axis, SpinOutcome::up).collapsed;
        const MotionalState p_branch = project_spin(p_axis, SpinOutcome::up).collapsed;
        CHECK(std::abs(expect_p(z_branch)) < 1e-9);
        CHECK(std::abs(expect_z(p_branch)) < 1e-9);
        CHECK(expect_p2(p_branch) > 1.0 + 1e-3);  // momentum-split cat
    }

    SECTION("norm is preserved") {
        const JointState out = evolve_displacement(start, paper_pulse(25e-6));
        CHECK_THAT(out.norm2(), WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("single-qubit rotations") {
    const MotionalState vac = ground_state(16);

    SECTION("R_y(-2 theta)|up> = cos(theta)|up> - sin(theta)|down>") {
        const double theta = 0.02;
        const JointState up = JointState::product(SpinState::up(), vac);
        const JointState rotated = rotate(up, {Axis::y, -2.0 * theta});
        CHECK_THAT(std::abs(rotated.up(0) - Complex(std::cos(theta), 0.0)), WithinAbs(0.0, 1e-14));
        CHECK_THAT(std::abs(rotated.down(0) - Complex(-std::sin(theta), 0.0)),
                   WithinAbs(0.0, 1e-14));
    }

    SECTION("R_x(2 phi)|down> = (|+> - e^{i 2 phi}|->)/sqrt(2) up to global phase") {
        const double phi = 0.37;
        const JointState down = JointState::product(SpinState::down(), vac);
        const JointState rotated = rotate(down, {Axis::x, 2.0 * phi});
        JointState expected;
        const Complex e2iphi = std::exp(Complex(0.0, 2.0 * phi));
        expected.up = ((1.0 - e2iphi) / 2.0) * vac.amps;
        expected.down = ((1.0 + e2iphi) / 2.0) * vac.amps;
        CHECK(state_distance_mod_phase(rotated, expected) < 1e-12);
    }

    SECTION("zero angle is the identity") {
        const JointState down = JointState::product(SpinState::down(), vac);
        const JointState rotated = rotate(down, {Axis::z, 0.0});
        CHECK(state_distance_mod_phase(rotated, down) == 0.0);
    }

    SECTION("non-finite angle is rejected") {
        const JointState down = JointState::product(SpinState::down(), vac);
        CHECK_THROWS_AS(rotate(down, {Axis::y, std::nan("")}), ConfigError);
    }
}
