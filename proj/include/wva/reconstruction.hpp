#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "wva/errors.hpp"
#include "wva/fock.hpp"
#include "wva/measurement.hpp"
#include "wva/random.hpp"

namespace wva {

enum class SignalKind { cos, sin };
enum class Quadrature { z, p };
enum class SpinPrep { sigma_z, sigma_y };

/// Sampled characteristic-function signals <cos(k q)> or <sin(k q)> with
/// their projection-noise deviations. shots == 0 marks exact (noise-free)
/// signals.
struct SignalSet {
    std::vector<double> ks;
    std::vector<double> values;
    std::vector<double> sigmas;
    SignalKind kind = SignalKind::cos;
    Quadrature quadrature = Quadrature::z;
    long shots = 0;

    void validate() const {
        if (ks.size() != values.size() || ks.size() != sigmas.size()) {
            throw ContractViolation("SignalSet: ks/values/sigmas lengths differ");
        }
        for (size_t i = 0; i < ks.size(); ++i) {
            if (!(sigmas[i] > 0.0)) throw ContractViolation("SignalSet: sigmas must be positive");
            if (std::abs(values[i]) > 1.0 + 1e-12) {
                throw ContractViolation("SignalSet: |values| must not exceed 1");
            }
        }
    }
};

/// Uniform reconstruction grid in dimensionless position.
struct Grid {
    std::vector<double> points;
    double spacing = 0.0;

    static Grid uniform(double lo, double hi, int n) {
        if (n < 8 || !(hi > lo)) throw ConfigError("Grid: need hi > lo and at least 8 points");
        Grid g;
        g.points.resize(n);
        g.spacing = (hi - lo) / (n - 1);
        for (int i = 0; i < n; ++i) g.points[i] = lo + g.spacing * i;
        return g;
    }

    void validate() const {
        if (points.size() < 8) throw ConfigError("Grid: at least 8 points required");
        for (size_t i = 1; i < points.size(); ++i) {
            if (std::abs((points[i] - points[i - 1]) - spacing) > 1e-12) {
                throw ConfigError("Grid: spacing is not uniform");
            }
        }
    }
};

/// Expectation of the effective observable O(k) = U^dag sigma_z U with
/// U = exp(-i k q sigma_x / 2), q = zhat or phat: prepares the requested
/// spin eigenstate, applies U to the joint state and reads <sigma_z>.
/// Returns <cos(k q)> for a sigma_z preparation, <sin(k q)> for sigma_y.
inline double observable_expectation(const MotionalState& motional, double k, SpinPrep prep,
                                     Quadrature quadrature) {
    motional.require_normalized();
    const int n_max = motional.n_max();
    const SpinState spin = (prep == SpinPrep::sigma_z) ? SpinState::up() : SpinState::y_plus();
    const JointState joint = JointState::product(spin, motional);

    const Eigen::MatrixXcd q_op = (quadrature == Quadrature::z)
                                      ? detail::position_operator(n_max)
                                      : detail::momentum_operator(n_max);
    const int dim = n_max + 1;
    Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(2 * dim, 2 * dim);
    gen.topRightCorner(dim, dim) = 0.5 * k * q_op;    // kron(sigma_x, q) upper block
    gen.bottomLeftCorner(dim, dim) = 0.5 * k * q_op;  // lower block
    const Eigen::VectorXcd evolved = detail::hermitian_evolution(gen, 1.0, joint.stacked());
    JointState out = JointState::from_stacked(evolved);
    detail::check_truncation(out.up, "observable_expectation");
    detail::check_truncation(out.down, "observable_expectation");
    double value = out.p_up() - out.p_down();
    return std::clamp(value, -1.0, 1.0);
}

/// Sample the O(k) signals at the given k values. Each point maps the exact
/// expectation e to a binomial estimate of p_up = (1 + e)/2 on its own
/// derived stream; sigmas are the projection-noise deviations (x2 for the
/// expectation scale). With exact = true no sampling occurs and shots is
/// recorded as 0.
inline SignalSet generate_signals(const MotionalState& motional, std::span<const double> ks,
                                  SpinPrep prep, Quadrature quadrature, const ShotPlan& plan,
                                  bool exact = false) {
    if (!exact) plan.validate();
    SignalSet set;
    set.kind = (prep == SpinPrep::sigma_z) ? SignalKind::cos : SignalKind::sin;
    set.quadrature = quadrature;
    set.shots = exact ? 0 : plan.shots;
    set.ks.assign(ks.begin(), ks.end());
    set.values.resize(ks.size());
    set.sigmas.resize(ks.size());
    for (size_t i = 0; i < ks.size(); ++i) {
        const double e = observable_expectation(motional, ks[i], prep, quadrature);
        if (exact) {
            set.values[i] = e;
            set.sigmas[i] = 1.0;
            continue;
        }
        const double p = std::clamp(0.5 * (1.0 + e), 0.0, 1.0);
        ShotPlan sub{plan.shots, derive_seed(plan.seed, i)};
        const PopulationSample s = sample_population(p, sub);
        set.values[i] = 2.0 * s.estimate - 1.0;
        set.sigmas[i] = 2.0 * s.sigma;
    }
    return set;
}

struct ReconstructionResult {
    std::vector<double> probabilities;  // masses on the grid, sum = 1
    double objective = 0.0;             // final value of the data-misfit F
    int iterations = 0;                 // accepted descent steps (best restart)
    bool kinetic_bound_active = false;
    bool converged = false;
    double kinetic_bound = 0.0;
    std::string p2_source;                     // where the bound's <p^2> came from
    std::vector<double> objective_trace;       // F after each accepted step
};

/// Carries the best iterate found before the iteration budget ran out.
class ReconstructionConvergenceError : public Error {
public:
    ReconstructionConvergenceError(const std::string& what, ReconstructionResult best)
        : Error(what), best_iterate(std::move(best)) {}
    ReconstructionResult best_iterate;
};

struct ReconstructionOptions {
    int restarts = 10;
    int max_iterations = 100000;  // accepted steps per restart, all phases
    double epsilon = 1e-8;      // floor inside p'^2 / p
    double f_tol = 1e-12;       // relative improvement counted as progress
    int stall_limit = 20;       // tolerated no-progress steps before stopping
    std::uint64_t restart_seed = 0x5eedULL;
    bool record_trace = false;
    std::string p2_source = "caller";
};

namespace detail {

/// Euclidean projection onto the probability simplex (sort-based).
inline void project_simplex(Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0;
    double tau = 0.0;
    Eigen::Index rho = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        css += u[j];
        const double t = (css - 1.0) / double(j + 1);
        if (u[j] - t > 0.0) {
            rho = j;
            tau = t;
        }
    }
    (void)rho;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = std::max(v(i) - tau, 0.0);
        sum += v(i);
    }
    // absorb the fp residue into the largest entry
    Eigen::Index imax = 0;
    v.maxCoeff(&imax);
    v(imax) += 1.0 - sum;
    if (v(imax) < 0.0) v(imax) = 0.0;
}

/// Central-difference derivative of the massvector on a uniform grid,
/// one-sided at the edges.
inline Eigen::VectorXd mass_derivative(const Eigen::VectorXd& p, double spacing) {
    const Eigen::Index n = p.size();
    Eigen::VectorXd d(n);
    d(0) = (p(1) - p(0)) / spacing;
    for (Eigen::Index i = 1; i + 1 < n; ++i) d(i) = (p(i + 1) - p(i - 1)) / (2.0 * spacing);
    d(n - 1) = (p(n - 1) - p(n - 2)) / spacing;
    return d;
}

/// Discretized kinetic-energy functional sum_i p'_i^2 / max(p_i, eps),
/// the mass-form Riemann sum of integral p'(z)^2/p(z) dz in <pi^2> units;
/// equals <pi^2> exactly for real wavefunctions in the continuum limit.
inline double fisher_term(const Eigen::VectorXd& p, double spacing, double eps) {
    const Eigen::VectorXd d = mass_derivative(p, spacing);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        acc += d(i) * d(i) / std::max(p(i), eps);
    }
    return acc;
}

inline Eigen::VectorXd fisher_gradient(const Eigen::VectorXd& p, double spacing, double eps) {
    const Eigen::Index n = p.size();
    const Eigen::VectorXd d = mass_derivative(p, spacing);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = 2.0 * d(i) / std::max(p(i), eps);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    // D^T r with the same stencil as mass_derivative
    g(0) -= r(0) / spacing;
    g(1) += r(0) / spacing;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        g(i - 1) -= r(i) / (2.0 * spacing);
        g(i + 1) += r(i) / (2.0 * spacing);
    }
    g(n - 2) -= r(n - 1) / spacing;
    g(n - 1) += r(n - 1) / spacing;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (p(i) > eps) g(i) -= d(i) * d(i) / (p(i) * p(i));
    }
    return g;
}

/// Largest lambda in [0,1] such that (1-lambda) base + lambda trial stays
/// within the bound; both inputs live on the simplex and base is feasible.
inline Eigen::VectorXd pull_back_to_bound(const Eigen::VectorXd& base,
                                          const Eigen::VectorXd& trial, double bound,
                                          double spacing, double eps) {
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Eigen::VectorXd q = (1.0 - mid) * base + mid * trial;
        if (fisher_term(q, spacing, eps) <= bound) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return (1.0 - lo) * base + lo * trial;
}

}  // namespace detail

/// Constrained least-squares reconstruction of the position distribution:
/// minimizes the quadratic misfit between sum_i p(z_i) {cos,sin}(k z_i) and
/// the measured C_k, S_k over the probability simplex, subject to the
/// kinetic-energy bound 1/4 sum_i spacing p'_i^2/max(p_i,eps) <= kinetic_bound
/// (in <pi^2> units). Projected-gradient descent with feasibility pull-back;
/// the best of `restarts` deterministic restarts is returned.
inline ReconstructionResult reconstruct_distribution(const SignalSet& cos_set,
                                                     const SignalSet& sin_set, const Grid& grid,
                                                     double kinetic_bound,
                                                     const ReconstructionOptions& options = {}) {
    cos_set.validate();
    sin_set.validate();
    grid.validate();
    if (cos_set.kind != SignalKind::cos || sin_set.kind != SignalKind::sin) {
        throw ContractViolation("reconstruct_distribution: expected one cos and one sin set");
    }
    if (cos_set.ks.size() != sin_set.ks.size()) {
        throw ContractViolation("reconstruct_distribution: k-grids differ in length");
    }
    for (size_t i = 0; i < cos_set.ks.size(); ++i) {
        if (std::abs(cos_set.ks[i] - sin_set.ks[i]) > 1e-12) {
            throw ContractViolation("reconstruct_distribution: k-grids are inconsistent");
        }
    }
    // the flat distribution has zero discretized kinetic term, so any
    // positive bound is attainable
    if (!(kinetic_bound > 0.0)) {
        throw InfeasibleBoundError("reconstruct_distribution: kinetic_bound must be positive");
    }

    const int n = static_cast<int>(grid.points.size());
    const int m = static_cast<int>(cos_set.ks.size());
    Eigen::MatrixXd design(2 * m, n);
    Eigen::VectorXd target(2 * m);
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < n; ++c) {
            design(r, c) = std::cos(cos_set.ks[r] * grid.points[c]);
            design(m + r, c) = std::sin(sin_set.ks[r] * grid.points[c]);
        }
        target(r) = cos_set.values[r];
        target(m + r) = sin_set.values[r];
    }
    const Eigen::MatrixXd normal = design.transpose() * design;
    const Eigen::VectorXd rhs = design.transpose() * target;
    const double target_sq = target.squaredNorm();
    auto objective = [&](const Eigen::VectorXd& p) {
        return p.dot(normal * p) - 2.0 * rhs.dot(p) + target_sq;
    };
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normal);
    const double lipschitz = std::max(2.0 * es.eigenvalues().maxCoeff(), 1e-12);

    const double spacing = grid.spacing;
    const double eps = options.epsilon;
    // feasibility margin keeps iterates strictly inside the 1e-9 slack
    const double bound_eff = kinetic_bound * (1.0 - 1e-12);

    ReconstructionResult best;
    bool have_best = false;
    bool any_converged = false;

    for (int restart = 0; restart < options.restarts; ++restart) {
        Eigen::VectorXd p(n);
        if (restart == 0) {
            p.setConstant(1.0 / n);
        } else {
            TrialStream stream(options.restart_seed, static_cast<std::uint64_t>(restart));
            for (int i = 0; i < n; ++i) p(i) = -std::log(1.0 - stream.uniform() + 1e-300);
            p /= p.sum();
            if (detail::fisher_term(p, spacing, eps) > bound_eff) {
                Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);
                p = detail::pull_back_to_bound(uniform, p, bound_eff, spacing, eps);
            }
        }

        int accepted_total = 0;
        std::vector<double> trace;
        auto fisher_of = [&](const Eigen::VectorXd& q) {
            return detail::fisher_term(q, spacing, eps);
        };

        // Monotone projected-gradient descent of F + lam * Fisher over the
        // simplex (with enforce_bound, iterates additionally stay inside the
        // kinetic bound). Returns true when the merit stalled rather than the
        // step budget running out.
        auto descend = [&](Eigen::VectorXd& q, double lam, int slice, bool enforce_bound,
                           std::vector<double>* trace_out) {
            auto merit = [&](const Eigen::VectorXd& x) {
                return objective(x) + lam * detail::fisher_term(x, spacing, eps);
            };
            double m_val = merit(q);
            if (trace_out) trace_out->push_back(objective(q));
            double step = 1.0 / lipschitz;
            int stalled = 0;
            for (int it = 0; it < slice && accepted_total < options.max_iterations; ++it) {
                Eigen::VectorXd dir = -2.0 * (normal * q - rhs);
                if (lam > 0.0) dir -= lam * detail::fisher_gradient(q, spacing, eps);
                if (enforce_bound && fisher_of(q) >= 0.95 * bound_eff) {
                    const Eigen::VectorXd fg = detail::fisher_gradient(q, spacing, eps);
                    const double fg2 = fg.squaredNorm();
                    const double outward = dir.dot(fg);
                    if (fg2 > 0.0 && outward > 0.0) dir -= (outward / fg2) * fg;
                }
                bool moved = false;
                for (int bt = 0; bt < 50; ++bt) {
                    Eigen::VectorXd trial = q + step * dir;
                    detail::project_simplex(trial);
                    if (enforce_bound && fisher_of(trial) > bound_eff) {
                        trial = detail::pull_back_to_bound(q, trial, bound_eff, spacing, eps);
                    }
                    const double m_trial = merit(trial);
                    if (m_trial <= m_val + 1e-15 * std::max(1.0, std::abs(m_val))) {
                        const double improvement = m_val - m_trial;
                        q = std::move(trial);
                        m_val = m_trial;
                        ++accepted_total;
                        moved = true;
                        if (trace_out) trace_out->push_back(objective(q));
                        stalled = (improvement <= options.f_tol * std::max(1.0, std::abs(m_val)))
                                      ? stalled + 1
                                      : 0;
                        step = std::min(step * 1.25, 4.0 / lipschitz);
                        break;
                    }
                    step *= 0.5;
                }
                if (!moved || stalled >= options.stall_limit) return true;
            }
            return false;
        };

        // unconstrained-on-simplex fit first; if it violates the kinetic
        // bound, trace the regularization path downward: the map
        // lam -> Fisher(argmin F + lam Fisher) is nonincreasing, so walk lam
        // down from the smooth side until the bound is crossed, then bisect
        descend(p, 0.0, 8000, false, nullptr);
        if (fisher_of(p) > bound_eff) {
            const double f_scale = std::max(1.0, objective(p));
            double lam_hi = 30.0 * f_scale / std::max(kinetic_bound, 1e-12);
            Eigen::VectorXd q = Eigen::VectorXd::Constant(n, 1.0 / n);
            descend(q, lam_hi, 2000, false, nullptr);
            for (int k = 0; k < 40 && fisher_of(q) > bound_eff; ++k) {
                lam_hi *= 8.0;
                descend(q, lam_hi, 1000, false, nullptr);
            }
            Eigen::VectorXd p_feasible = q;
            double lam_lo = 0.0;
            double lam = lam_hi;
            while (lam > 1e-10 * lam_hi) {
                lam *= 0.5;
                descend(q, lam, 800, false, nullptr);
                if (fisher_of(q) > bound_eff) {
                    lam_lo = lam;
                    break;
                }
                p_feasible = q;
                lam_hi = lam;
            }
            for (int round = 0; round < 20 && lam_hi - lam_lo > 1e-3 * lam_hi; ++round) {
                const double lam_mid = 0.5 * (lam_lo + lam_hi);
                q = p_feasible;
                descend(q, lam_mid, 500, false, nullptr);
                if (fisher_of(q) <= bound_eff) {
                    lam_hi = lam_mid;
                    p_feasible = q;
                } else {
                    lam_lo = lam_mid;
                }
            }
            q = p_feasible;
            descend(q, lam_hi, 6000, false, nullptr);
            if (fisher_of(q) <= bound_eff) p_feasible = q;
            if (fisher_of(p_feasible) > bound_eff) {
                const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);
                p_feasible = detail::pull_back_to_bound(uniform, p_feasible, bound_eff,
                                                        spacing, eps);
            }
            p = p_feasible;
        }

        // feasible monotone polish; this phase provides the reported
        // objective trace
        const bool converged = descend(p, 0.0, 12000, true,
                                       options.record_trace ? &trace : nullptr) &&
                               accepted_total < options.max_iterations;
        const double f_val = objective(p);

        const double final_fisher = detail::fisher_term(p, spacing, eps);
        ReconstructionResult r;
        r.probabilities.assign(p.data(), p.data() + n);
        r.objective = f_val;
        r.iterations = accepted_total;
        // active = the bound constrains the returned point, not a transient trial
        r.kinetic_bound_active = final_fisher >= kinetic_bound * (1.0 - 1e-6);
        r.converged = converged;
        r.kinetic_bound = kinetic_bound;
        r.p2_source = options.p2_source;
        if (options.record_trace) r.objective_trace = std::move(trace);
        any_converged = any_converged || converged;

        if (!have_best || r.objective < best.objective - 1e-12) {
            best = std::move(r);
            have_best = true;
        }
    }

    if (!any_converged) {
        throw ReconstructionConvergenceError(
            "reconstruct_distribution: iteration budget exhausted before convergence", best);
    }
    return best;
}

struct MeanFit {
    double mean = 0.0;       // slope of the weighted line through the origin
    double fit_sigma = 0.0;  // 1-sigma uncertainty from the weighted-fit covariance
};

/// Weighted least-squares line through the origin on small-k sin-kind
/// signals: the slope estimates <z>/delta_z (or <p>/delta_p for the p
/// quadrature). Weights are 1/sigma_i^2.
inline MeanFit extract_mean(const SignalSet& signals) {
    signals.validate();
    if (signals.kind != SignalKind::sin) {
        throw ContractViolation("extract_mean: sin-kind signals required");
    }
    if (signals.ks.size() < 3) throw FitError("extract_mean: need at least 3 points");
    const double sigma_ref = signals.sigmas[0];
    double swkk = 0.0;
    double swky = 0.0;
    for (size_t i = 0; i < signals.ks.size(); ++i) {
        const double w = (sigma_ref / signals.sigmas[i]) * (sigma_ref / signals.sigmas[i]);
        swkk += w * signals.ks[i] * signals.ks[i];
        swky += w * signals.ks[i] * signals.values[i];
    }
    if (swkk == 0.0) throw FitError("extract_mean: degenerate k grid (all k are zero)");
    MeanFit fit;
    fit.mean = swky / swkk;
    fit.fit_sigma = sigma_ref / std::sqrt(swkk);
    return fit;
}

/// Second moment <pi^2> from small-k cos-kind p-quadrature signals: fits
/// c0 + c2 k^2 and returns -2 c2 (the signal behaves as 1 - <pi^2> k^2 / 2).
inline double extract_p2(const SignalSet& signals) {
    signals.validate();
    if (signals.kind != SignalKind::cos || signals.quadrature != Quadrature::p) {
        throw ContractViolation("extract_p2: cos-kind p-quadrature signals required");
    }
    if (signals.ks.size() < 5) throw ExtractionError("extract_p2: need at least 5 points");
    const double k_min = *std::min_element(signals.ks.begin(), signals.ks.end());
    if (k_min < 0.0) {
        std::vector<double> sorted(signals.ks);
        std::sort(sorted.begin(), sorted.end());
        for (size_t i = 0; i < sorted.size(); ++i) {
            if (std::abs(sorted[i] + sorted[sorted.size() - 1 - i]) > 1e-12) {
                throw ExtractionError("extract_p2: k grid must start at 0 or be symmetric");
            }
        }
    }
    const double sigma_ref = signals.sigmas[0];
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
    for (size_t i = 0; i < signals.ks.size(); ++i) {
        const double w = (sigma_ref / signals.sigmas[i]) * (sigma_ref / signals.sigmas[i]);
        const double k2 = signals.ks[i] * signals.ks[i];
        s0 += w;
        s1 += w * k2;
        s2 += w * k2 * k2;
        t0 += w * signals.values[i];
        t1 += w * k2 * signals.values[i];
    }
    const double det = s0 * s2 - s1 * s1;
    if (det <= 1e-30) throw ExtractionError("extract_p2: k grid too degenerate for a quadratic fit");
    const double c2 = (s0 * t1 - s1 * t0) / det;
    if (c2 > 0.0) {
        throw ExtractionError("extract_p2: fitted curvature is not concave at the origin");
    }
    return -2.0 * c2;
}

}  // namespace wva
