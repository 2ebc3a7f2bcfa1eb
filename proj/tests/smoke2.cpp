// Second scratch pass: noisy reconstruction quality, Eq.5 reconstruction,
// pathological input, herald statistics.
#include <cstdio>

#include "wva/wva.hpp"

using namespace wva;

static MotionalState postselected_state(double g, double theta) {
    PulseParams pulse;
    pulse.rabi = 2.0 * std::numbers::pi * 19.0e3;
    pulse.eta = 0.08;
    pulse.duration = g / (pulse.eta * pulse.rabi);
    JointState psi = JointState::product(SpinState::down(), ground_state(kDefaultNmax));
    psi = evolve_displacement(psi, pulse);
    psi = rotate(psi, {Axis::y, 2.0 * theta});
    return project_spin(psi, SpinOutcome::up).collapsed;
}

static double recon_l1(const MotionalState& state, long shots, std::uint64_t seed,
                       double kinetic_bound, int* iters = nullptr, bool* active = nullptr) {
    const Grid grid = Grid::uniform(-8.0, 8.0, 64);
    std::vector<double> ks(24);
    for (int i = 0; i < 24; ++i) ks[i] = 3.0 * i / 23.0;
    const bool exact = shots == 0;
    const ShotPlan plan{exact ? 1 : shots, seed};
    const SignalSet cs =
        generate_signals(state, ks, SpinPrep::sigma_z, Quadrature::z, {plan.shots, derive_seed(seed, 1)}, exact);
    const SignalSet ss =
        generate_signals(state, ks, SpinPrep::sigma_y, Quadrature::z, {plan.shots, derive_seed(seed, 2)}, exact);
    const ReconstructionResult rec = reconstruct_distribution(cs, ss, grid, kinetic_bound);
    if (iters) *iters = rec.iterations;
    if (active) *active = rec.kinetic_bound_active;
    // truth masses by fine quadrature of the state's density over each cell
    std::vector<double> grid_fine;
    const auto density = [&](double z) {
        std::vector<double> h;
        detail::hermite_functions(state.n_max(), z, h);
        Complex a = 0.0;
        for (int n = 0; n <= state.n_max(); ++n) a += state.amps(n) * h[n];
        return std::norm(a);
    };
    double l1 = 0.0;
    for (int i = 0; i < 64; ++i) {
        l1 += std::abs(rec.probabilities[i] - density(grid.points[i]) * grid.spacing);
    }
    return l1;
}

int main() {
    const MotionalState vac = ground_state(kDefaultNmax);

    // vacuum p2 for kinetic bound
    printf("== noiseless ==\n");
    printf("vacuum   L1 = %.4f\n", recon_l1(vac, 0, 0, expect_p2(vac)));
    const MotionalState amp = postselected_state(0.0382, 0.02);
    printf("eq5 amp  L1 = %.4f  (p2=%.4f)\n", recon_l1(amp, 0, 0, expect_p2(amp)), expect_p2(amp));
    const MotionalState big = postselected_state(1.0, 0.3);
    printf("eq5 g=1  L1 = %.4f  (p2=%.4f)\n", recon_l1(big, 0, 0, expect_p2(big)), expect_p2(big));

    printf("== noisy 1000 shots ==\n");
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 7ull, 2026ull}) {
        int it = 0;
        bool act = false;
        const double l1v = recon_l1(vac, 1000, seed, expect_p2(vac), &it, &act);
        printf("vacuum  seed=%llu L1 = %.4f iters=%d active=%d\n", (unsigned long long)seed, l1v,
               it, int(act));
        const double l1a = recon_l1(amp, 1000, seed + 100, expect_p2(amp), &it, &act);
        printf("eq5amp  seed=%llu L1 = %.4f iters=%d active=%d\n", (unsigned long long)seed, l1a,
               it, int(act));
    }

    // pathological: C_k = delta_{k,0}, S_k = 0
    printf("== pathological ==\n");
    {
        const Grid grid = Grid::uniform(-8.0, 8.0, 64);
        SignalSet cs, ss;
        cs.kind = SignalKind::cos;
        ss.kind = SignalKind::sin;
        for (int i = 0; i < 24; ++i) {
            const double k = 3.0 * i / 23.0;
            cs.ks.push_back(k);
            ss.ks.push_back(k);
            cs.values.push_back(i == 0 ? 1.0 : 0.0);
            ss.values.push_back(0.0);
            cs.sigmas.push_back(1.0);
            ss.sigmas.push_back(1.0);
        }
        const ReconstructionResult rec = reconstruct_distribution(cs, ss, grid, 0.05);
        double fish = detail::fisher_term(
            Eigen::Map<const Eigen::VectorXd>(rec.probabilities.data(), 64), grid.spacing, 1e-8);
        double sum = 0.0, mn = 1.0;
        for (double p : rec.probabilities) {
            sum += p;
            mn = std::min(mn, p);
        }
        printf("patho: obj=%.4e fisher=%.6f (bound 0.05) active=%d sum=%.12f min=%.2e\n",
               rec.objective, fish, int(rec.kinetic_bound_active), sum, mn);
    }

    // herald statistics at the amplify point
    printf("== herald ==\n");
    {
        PulseParams pulse;
        pulse.rabi = 2.0 * std::numbers::pi * 19.0e3;
        pulse.eta = 0.08;
        pulse.duration = 4e-6;
        JointState psi = JointState::product(SpinState::down(), vac);
        psi = evolve_displacement(psi, pulse);
        const HeraldResult h = heralded_postselect(psi, 0.02, {}, {1000000, 99});
        const double p = theory::success_probability(pulse.coupling_g(), 0.02);
        printf("kept=%ld expect=%.1f (+-%.1f)\n", h.kept, p * 1e6, 3 * std::sqrt(1e6 * p * (1 - p)));
    }

    // monotone trace check
    {
        const Grid grid = Grid::uniform(-8.0, 8.0, 64);
        std::vector<double> ks(24);
        for (int i = 0; i < 24; ++i) ks[i] = 3.0 * i / 23.0;
        const SignalSet cs = generate_signals(vac, ks, SpinPrep::sigma_z, Quadrature::z,
                                              {1000, 5}, false);
        const SignalSet ss = generate_signals(vac, ks, SpinPrep::sigma_y, Quadrature::z,
                                              {1000, 6}, false);
        ReconstructionOptions opt;
        opt.record_trace = true;
        const ReconstructionResult rec = reconstruct_distribution(cs, ss, grid, 1.0, opt);
        bool mono = true;
        for (size_t i = 1; i < rec.objective_trace.size(); ++i) {
            if (rec.objective_trace[i] > rec.objective_trace[i - 1] + 1e-12) mono = false;
        }
        printf("trace monotone=%d (len %zu)\n", int(mono), rec.objective_trace.size());
    }
    return 0;
}
