// Temporary scratch harness used while bringing the library up.
#include <cstdio>

#include "wva/wva.hpp"

using namespace wva;

int main() {
    // units
    const TrapUnits trap = calcium40_trap();
    std::printf("delta_z = %.6e m (expect ~9.47e-9)\n", trap.delta_z);

    // vacuum expectations
    const MotionalState vac = ground_state(kDefaultNmax);
    std::printf("vacuum: <z>=%.3e <p>=%.3e <p2>=%.12f <n>=%.3e\n", expect_z(vac), expect_p(vac),
                expect_p2(vac), expect_n(vac));

    // coherent state conventions
    const MotionalState c = coherent_state(Complex(0.3, 0.0));
    std::printf("coherent(0.3): <z>=%.12f (expect 0.6), <n>=%.12f (expect 0.09)\n", expect_z(c),
                expect_n(c));
    const MotionalState ci = coherent_state(Complex(0.0, 0.5));
    std::printf("coherent(i0.5): <p>=%.12f (expect 1.0) <p2>=%.12f (expect 2.0)\n", expect_p(ci),
                expect_p2(ci));

    // displacement
    const MotionalState d = apply_displacement(vac, Complex(0.02, 0.0));
    std::printf("D(0.02)|0>: <z>=%.12f (expect 0.04)\n", expect_z(d));

    // Eq. 4 pipeline: g = 0.0382..., theta = 0.02
    PulseParams pulse;
    pulse.rabi = 2.0 * std::numbers::pi * 19.0e3;
    pulse.eta = 0.08;
    pulse.duration = 4.0e-6;
    const double g = pulse.coupling_g();
    std::printf("g = %.6f (expect ~0.038)\n", g);

    JointState psi = JointState::product(SpinState::down(), vac);
    psi = evolve_displacement(psi, pulse);
    std::printf("p_up after evolve = %.9f (Eq.9: %.9f)\n", psi.p_up(),
                0.5 * (1.0 - std::exp(-0.5 * g * g)));

    const double theta = 0.02;
    JointState rotated = rotate(psi, {Axis::y, 2.0 * theta});
    const ProjectionResult proj = project_spin(rotated, SpinOutcome::up);
    std::printf("success prob: pipeline=%.9e theory=%.9e\n", proj.probability,
                theory::success_probability(g, theta));
    std::printf("delta_z: pipeline=%.9f theory=%.9f\n", expect_z(proj.collapsed),
                theory::delta_z(g, theta));

    // imaginary WVA: phi = 0.02
    const double phi = 0.02;
    JointState psi2 = JointState::product(SpinState::down(), vac);
    psi2 = rotate(psi2, {Axis::x, 2.0 * phi});
    psi2 = evolve_displacement(psi2, pulse);
    const ProjectionResult proj2 = project_spin(psi2, SpinOutcome::up);
    std::printf("delta_p: pipeline=%.9f theory=%.9f\n", expect_p(proj2.collapsed),
                theory::delta_p(g, phi));

    // observable expectation on vacuum
    for (double k : {0.5, 1.0, 2.0}) {
        std::printf("vacuum <cos(%g z)> = %.12f (expect %.12f)\n", k,
                    observable_expectation(vac, k, SpinPrep::sigma_z, Quadrature::z),
                    std::exp(-0.5 * k * k));
    }
    const MotionalState shifted = apply_displacement(vac, Complex(0.25, 0.0));
    std::printf("coherent(0.25) <sin(0.3 z)> = %.12f\n",
                observable_expectation(shifted, 0.3, SpinPrep::sigma_y, Quadrature::z));

    // sampling determinism
    const ShotPlan plan{1000, 42};
    const PopulationSample s1 = sample_population(0.3, plan);
    const PopulationSample s2 = sample_population(0.3, plan);
    std::printf("sample twice: %.6f %.6f (must match)\n", s1.estimate, s2.estimate);

    // reconstruction quick check: vacuum, exact signals
    const Grid grid = Grid::uniform(-8.0, 8.0, 64);
    std::vector<double> ks(24);
    for (int i = 0; i < 24; ++i) ks[i] = 3.0 * i / 23.0;
    const SignalSet cs = generate_signals(vac, ks, SpinPrep::sigma_z, Quadrature::z, {}, true);
    const SignalSet ss = generate_signals(vac, ks, SpinPrep::sigma_y, Quadrature::z, {}, true);
    const ReconstructionResult rec = reconstruct_distribution(cs, ss, grid, 1.0);
    double l1 = 0.0;
    for (int i = 0; i < 64; ++i) {
        const double truth = std::exp(-0.5 * grid.points[i] * grid.points[i]) /
                             std::sqrt(2.0 * std::numbers::pi) * grid.spacing;
        l1 += std::abs(rec.probabilities[i] - truth);
    }
    std::printf("vacuum recon: L1=%.5f objective=%.3e iters=%d bound_active=%d converged=%d\n", l1,
                rec.objective, rec.iterations, int(rec.kinetic_bound_active), int(rec.converged));

    // extract_mean small-k on the postselected state (g=0.2, theta=0.2)
    PulseParams p02 = pulse;
    p02.duration = 0.2 / (pulse.eta * pulse.rabi);
    JointState e5 = JointState::product(SpinState::down(), vac);
    e5 = evolve_displacement(e5, p02);
    e5 = rotate(e5, {Axis::y, 2.0 * 0.2});
    const MotionalState post = project_spin(e5, SpinOutcome::up).collapsed;
    std::vector<double> small_ks(6);
    for (int i = 0; i < 6; ++i) small_ks[i] = 0.001 * i / 5.0;
    const SignalSet sm = generate_signals(post, small_ks, SpinPrep::sigma_y, Quadrature::z, {}, true);
    const MeanFit fit = extract_mean(sm);
    std::printf("extract_mean: %.10f vs delta_z(0.2,0.2)=%.10f diff=%.2e\n", fit.mean,
                theory::delta_z(0.2, 0.2), std::abs(fit.mean - theory::delta_z(0.2, 0.2)));

    // extract_p2 on vacuum
    std::vector<double> p2ks(7);
    for (int i = 0; i < 7; ++i) p2ks[i] = 0.1 * i / 6.0;
    const SignalSet pset = generate_signals(vac, p2ks, SpinPrep::sigma_z, Quadrature::p, {}, true);
    std::printf("extract_p2(vacuum) = %.8f (expect 1)\n", extract_p2(pset));

    return 0;
}
