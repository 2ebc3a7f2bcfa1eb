// Compare discretizations of the kinetic-energy functional at the truth, and
// reconstruction quality under the faithful (sum p'^2/p) scaling.
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

static std::vector<double> truth_masses(const MotionalState& state, const Grid& grid) {
    std::vector<double> h, out(grid.points.size());
    for (size_t i = 0; i < grid.points.size(); ++i) {
        detail::hermite_functions(state.n_max(), grid.points[i], h);
        Complex a = 0.0;
        for (int n = 0; n <= state.n_max(); ++n) a += state.amps(n) * h[n];
        out[i] = std::norm(a) * grid.spacing;
    }
    return out;
}

// faithful mass-form discretization of Eq.-12-style functional
static double fisher_exact(const std::vector<double>& p, double dz, double eps = 1e-8) {
    const int n = int(p.size());
    double acc = 0.0;
    auto deriv = [&](int i) {
        if (i == 0) return (p[1] - p[0]) / dz;
        if (i == n - 1) return (p[n - 1] - p[n - 2]) / dz;
        return (p[i + 1] - p[i - 1]) / (2.0 * dz);
    };
    for (int i = 0; i < n; ++i) {
        const double d = deriv(i);
        acc += d * d / std::max(p[i], eps);
    }
    return acc;
}

int main() {
    for (auto [g, th] : std::vector<std::pair<double, double>>{
             {0.0382, 0.02}, {0.5, 0.2}, {1.0, 0.3}}) {
        const MotionalState s = postselected_state(g, th);
        printf("state g=%.3f th=%.2f  <p2>=%.4f\n", g, th, expect_p2(s));
        for (int n : {64, 128, 256, 1024}) {
            const Grid grid = Grid::uniform(-8.0, 8.0, n);
            const auto tm = truth_masses(s, grid);
            printf("  n=%4d  sum p'^2/p = %.4f\n", n, fisher_exact(tm, grid.spacing));
        }
    }
    const MotionalState vac = ground_state(kDefaultNmax);
    for (int n : {64, 256}) {
        const Grid grid = Grid::uniform(-8.0, 8.0, n);
        const auto tm = truth_masses(vac, grid);
        printf("vacuum n=%d sum p'^2/p = %.6f\n", n, fisher_exact(tm, grid.spacing));
    }
    return 0;
}
