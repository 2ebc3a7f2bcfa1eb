#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "wva/dynamics.hpp"
#include "wva/errors.hpp"
#include "wva/fock.hpp"
#include "wva/random.hpp"

namespace wva {

/// Two-parameter confusion matrix for the fluorescence readout.
struct DetectionModel {
    double error_up = 0.0;    // probability a true |up> is misread
    double error_down = 0.0;  // probability a true |down> is misread
    double detection_time = 120e-6;  // s, documentation only

    void validate() const {
        if (error_up < 0.0 || error_up >= 0.5 || error_down < 0.0 || error_down >= 0.5) {
            throw ConfigError("DetectionModel: error probabilities must lie in [0, 0.5)");
        }
    }
};

struct ShotPlan {
    long shots = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (shots < 1) throw ConfigError("ShotPlan: shots must be >= 1");
    }
};

enum class SpinOutcome { up, down };

struct ProjectionResult {
    double probability = 0.0;
    MotionalState collapsed;
};

/// Projective sigma_z measurement: outcome probability and the renormalized
/// motional state of that branch.
inline ProjectionResult project_spin(const JointState& state, SpinOutcome outcome) {
    state.require_normalized();
    const Eigen::VectorXcd& block = (outcome == SpinOutcome::up) ? state.up : state.down;
    const double prob = block.squaredNorm();
    if (prob < 1e-14) {
        throw ImpossibleOutcomeError("project_spin: requested outcome has zero probability");
    }
    ProjectionResult r;
    r.probability = prob;
    r.collapsed.amps = block / std::sqrt(prob);
    return r;
}

struct HeraldResult {
    long kept = 0;
    long discarded = 0;
    MotionalState pointer;  // ideal |up>-branch wavepacket
};

/// Rotate by 2 theta about y, then herald on |up> over `shots` Bernoulli
/// trials with detection errors. Misreads affect the tallies only; the kept
/// pointer remains the ideal projected state.
inline HeraldResult heralded_postselect(const JointState& state, double theta,
                                        const DetectionModel& model, const ShotPlan& plan) {
    model.validate();
    plan.validate();
    const JointState rotated = rotate(state, {Axis::y, 2.0 * theta});
    const double p_up = rotated.p_up();
    if (p_up < 1e-14) {
        throw ImpossibleOutcomeError("heralded_postselect: |up> branch has zero weight");
    }

    HeraldResult r;
    for (long trial = 0; trial < plan.shots; ++trial) {
        TrialStream stream(plan.seed, static_cast<std::uint64_t>(trial));
        const bool truly_up = stream.uniform() < p_up;
        const double u_misread = stream.uniform();
        const bool read_up = truly_up ? (u_misread >= model.error_up)
                                      : (u_misread < model.error_down);
        if (read_up) {
            ++r.kept;
        } else {
            ++r.discarded;
        }
    }
    if (r.kept == 0) {
        throw EmptyPostselectionError("heralded_postselect: zero shots were kept");
    }
    r.pointer.amps = rotated.up / std::sqrt(p_up);
    return r;
}

struct PopulationSample {
    double estimate = 0.0;
    double sigma = 0.0;
};

/// Projection-noise sigma for a binomial estimate, floored at 1/(2 shots)
/// when the estimate saturates at 0 or 1.
inline double binomial_sigma(double estimate, long shots) {
    if (estimate <= 0.0 || estimate >= 1.0) return 1.0 / (2.0 * double(shots));
    return std::sqrt(estimate * (1.0 - estimate) / double(shots));
}

/// k/shots with k ~ Binomial(shots, p), drawn from per-trial streams.
inline PopulationSample sample_population(double p, const ShotPlan& plan) {
    plan.validate();
    if (p < 0.0 || p > 1.0) throw ContractViolation("sample_population: p must lie in [0, 1]");
    long k = 0;
    for (long trial = 0; trial < plan.shots; ++trial) {
        TrialStream stream(plan.seed, static_cast<std::uint64_t>(trial));
        if (stream.uniform() < p) ++k;
    }
    PopulationSample s;
    s.estimate = double(k) / double(plan.shots);
    s.sigma = binomial_sigma(s.estimate, plan.shots);
    return s;
}

/// Cat-state readout curve p_up(t) = 0.5 (1 - e^{-2 |alpha(t)|^2}) with
/// alpha(t) = eta Omega t / 2, used to calibrate the sideband balance.
inline std::vector<double> calibration_curve(const PulseParams& params,
                                             std::span<const double> times) {
    params.validate();
    std::vector<double> p_up(times.size());
    for (size_t i = 0; i < times.size(); ++i) {
        const double alpha = 0.5 * params.eta * params.rabi * times[i];
        p_up[i] = 0.5 * (1.0 - std::exp(-2.0 * alpha * alpha));
    }
    return p_up;
}

/// Least-squares fit of sqrt(nbar) = (eta Omega / 2) t through the origin;
/// returns the Rabi strength Omega.
inline double fit_rabi_from_phonon(std::span<const std::pair<double, double>> t_nbar,
                                   double eta) {
    if (!(eta > 0.0)) throw ConfigError("fit_rabi_from_phonon: eta must be positive");
    if (t_nbar.size() < 3) throw FitError("fit_rabi_from_phonon: need at least 3 points");
    double stt = 0.0;
    double sty = 0.0;
    for (const auto& [t, nbar] : t_nbar) {
        if (nbar < 0.0) throw ContractViolation("fit_rabi_from_phonon: nbar must be >= 0");
        stt += t * t;
        sty += t * std::sqrt(nbar);
    }
    if (stt == 0.0) throw FitError("fit_rabi_from_phonon: all pulse times are zero");
    const double slope = sty / stt;
    return 2.0 * slope / eta;
}

}  // namespace wva
