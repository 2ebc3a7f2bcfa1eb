// Finite-difference check of the fisher gradient.
#include <cstdio>

#include "wva/wva.hpp"

using namespace wva;

int main() {
    const int n = 24;
    const double dz = 0.3;
    TrialStream st(7, 0);
    Eigen::VectorXd p(n);
    for (int i = 0; i < n; ++i) p(i) = 0.02 + st.uniform();
    p /= p.sum();
    p(5) = 1e-9;  // exercise the floor branch
    const double eps = 1e-8;
    const Eigen::VectorXd g = detail::fisher_gradient(p, dz, eps);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double h = 1e-7 * std::max(1.0, std::abs(p(i)));
        Eigen::VectorXd pp = p, pm = p;
        pp(i) += h;
        pm(i) -= h;
        const double fd =
            (detail::fisher_term(pp, dz, eps) - detail::fisher_term(pm, dz, eps)) / (2 * h);
        const double rel = std::abs(fd - g(i)) / std::max(1.0, std::abs(fd));
        worst = std::max(worst, rel);
    }
    printf("fisher gradient max rel err = %.3e\n", worst);
    return 0;
}
