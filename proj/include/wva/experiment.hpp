#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "wva/io.hpp"
#include "wva/measurement.hpp"
#include "wva/reconstruction.hpp"
#include "wva/theory.hpp"
#include "wva/units.hpp"

namespace wva {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kConfigSchemaVersion = 1;

enum class Scenario { amplify, sweep_z, sweep_p, calibrate, reconstruct, fitdemo };

inline const std::vector<std::pair<Scenario, std::string>>& scenario_names() {
    static const std::vector<std::pair<Scenario, std::string>> names = {
        {Scenario::amplify, "amplify"},       {Scenario::sweep_z, "sweep_z"},
        {Scenario::sweep_p, "sweep_p"},       {Scenario::calibrate, "calibrate"},
        {Scenario::reconstruct, "reconstruct"}, {Scenario::fitdemo, "fitdemo"},
    };
    return names;
}

inline Scenario scenario_from_string(const std::string& s) {
    for (const auto& [sc, name] : scenario_names()) {
        if (name == s) return sc;
    }
    throw ConfigError("scenario: unknown value '" + s +
                      "' (expected amplify|sweep_z|sweep_p|calibrate|reconstruct|fitdemo)");
}

inline std::string to_string(Scenario s) {
    for (const auto& [sc, name] : scenario_names()) {
        if (sc == s) return name;
    }
    return "?";
}

/// Fully resolved experiment description. Every field has a recorded
/// provenance ("config" or "default") so runs are auditable.
struct ExperimentConfig {
    Scenario scenario = Scenario::amplify;
    std::uint64_t seed = 1;
    std::string seed_source = "default";
    int n_max = kDefaultNmax;

    // trap
    double omega_z = 2.0 * std::numbers::pi * 1.41e6;  // rad/s
    double mass_kg = constants::ca40_mass_u * constants::atomic_mass_unit;

    // bichromatic pulse
    PulseParams pulse{2.0 * std::numbers::pi * 19.0e3, 0.08, 4.0e-6,
                      std::numbers::pi / 2, std::numbers::pi / 2};

    std::vector<double> thetas;  // postselection angles
    std::vector<double> phis;    // preparation phases (imaginary weak value)

    // g sweep
    double g_start = 0.02;
    double g_stop = 1.2;
    int g_count = 60;

    long shots = 500;
    DetectionModel detection;
    bool exact_only = false;

    // reconstruction defaults
    int grid_points = 64;
    double grid_span = 8.0;
    int k_count = 24;
    double k_max = 3.0;
    int slope_k_count = 6;
    double slope_k_max = 0.3;
    int p2_k_count = 9;
    double p2_k_max = 0.8;
    std::string recon_state = "postselected";  // or "vacuum"
    std::string p2_source = "extract";         // or "true"

    // calibrate
    double calib_t_max = 60e-6;
    int calib_t_count = 61;
    double fit_rabi = 2.0 * std::numbers::pi * 19.0e3;  // low-coupling pulse for Fig-7-style fit
    double fit_t_max = 40e-6;
    int fit_t_count = 20;
    double nbar_noise_sigma = 0.01;

    // fitdemo (g, theta) cases
    std::vector<std::pair<double, double>> fitdemo_cases{{0.2, 0.2}, {0.4, 0.2}};

    std::map<std::string, std::string> provenance;  // field -> config|default

    TrapUnits trap() const { return TrapUnits::from(omega_z, mass_kg); }
};

namespace detail {

class ConfigReader {
public:
    ConfigReader(const nlohmann::json& j, std::string prefix, ExperimentConfig& cfg)
        : j_(j), prefix_(std::move(prefix)), cfg_(cfg) {}

    template <class T>
    T get(const char* key, T fallback) {
        seen_.push_back(key);
        if (j_.contains(key)) {
            try {
                T v = j_.at(key).get<T>();
                cfg_.provenance[prefix_ + key] = "config";
                return v;
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("config field '" + prefix_ + key + "': " + e.what());
            }
        }
        cfg_.provenance[prefix_ + key] = "default";
        return fallback;
    }

    std::optional<nlohmann::json> section(const char* key) {
        seen_.push_back(key);
        if (!j_.contains(key)) return std::nullopt;
        if (!j_.at(key).is_object()) {
            throw ConfigError("config field '" + prefix_ + key + "' must be an object");
        }
        return j_.at(key);
    }

    void reject_unknown() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
                throw ConfigError("config: unknown field '" + prefix_ + it.key() + "'");
            }
        }
    }

private:
    const nlohmann::json& j_;
    std::string prefix_;
    ExperimentConfig& cfg_;
    std::vector<std::string> seen_;
};

inline std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("WVA_SEED");
    if (!s || !*s) return std::nullopt;
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw ConfigError("WVA_SEED: cannot parse '" + std::string(s) + "' as an integer");
    }
}

}  // namespace detail

/// Parse and resolve a config. Seed priority: --seed flag (handled by the
/// caller via `seed_override`), config file, WVA_SEED env var, default 1.
inline ExperimentConfig config_from_json(const nlohmann::json& j,
                                         std::optional<std::uint64_t> seed_override = {}) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    ExperimentConfig cfg;
    detail::ConfigReader top(j, "", cfg);

    const int schema = top.get<int>("schema_version", kConfigSchemaVersion);
    if (schema != kConfigSchemaVersion) {
        throw ConfigError("schema_version: expected " + std::to_string(kConfigSchemaVersion));
    }
    if (!j.contains("scenario")) throw ConfigError("scenario: required field is missing");
    cfg.scenario = scenario_from_string(top.get<std::string>("scenario", ""));

    if (seed_override) {
        cfg.seed = *seed_override;
        cfg.seed_source = "flag";
        top.get<std::uint64_t>("seed", 0);  // mark as seen either way
        cfg.provenance["seed"] = "flag";
    } else if (j.contains("seed")) {
        cfg.seed = top.get<std::uint64_t>("seed", 0);
        cfg.seed_source = "config";
    } else if (auto env = detail::env_seed()) {
        top.get<std::uint64_t>("seed", 0);
        cfg.seed = *env;
        cfg.seed_source = "env";
        cfg.provenance["seed"] = "env";
    } else {
        top.get<std::uint64_t>("seed", 0);
        cfg.seed = 1;
        cfg.seed_source = "default";
    }

    cfg.n_max = top.get<int>("n_max", cfg.n_max);
    if (cfg.n_max < 8) throw ConfigError("n_max: must be at least 8");

    if (auto sec = top.section("trap")) {
        detail::ConfigReader r(*sec, "trap.", cfg);
        cfg.omega_z = r.get<double>("omega_z_rad_s", cfg.omega_z);
        cfg.mass_kg = r.get<double>("mass_kg", cfg.mass_kg);
        r.reject_unknown();
    }
    if (!(cfg.omega_z > 0.0) || !(cfg.mass_kg > 0.0)) {
        throw ConfigError("trap: omega_z_rad_s and mass_kg must be positive");
    }

    if (auto sec = top.section("pulse")) {
        detail::ConfigReader r(*sec, "pulse.", cfg);
        cfg.pulse.rabi = r.get<double>("rabi_rad_s", cfg.pulse.rabi);
        cfg.pulse.eta = r.get<double>("eta", cfg.pulse.eta);
        cfg.pulse.duration = r.get<double>("duration_s", cfg.pulse.duration);
        cfg.pulse.phi_plus = r.get<double>("phi_plus", cfg.pulse.phi_plus);
        cfg.pulse.phi_minus = r.get<double>("phi_minus", cfg.pulse.phi_minus);
        r.reject_unknown();
    }
    cfg.pulse.validate();

    cfg.thetas = top.get<std::vector<double>>("theta", {});
    cfg.phis = top.get<std::vector<double>>("phi", {});

    if (auto sec = top.section("g_grid")) {
        detail::ConfigReader r(*sec, "g_grid.", cfg);
        cfg.g_start = r.get<double>("start", cfg.g_start);
        cfg.g_stop = r.get<double>("stop", cfg.g_stop);
        cfg.g_count = r.get<int>("count", cfg.g_count);
        r.reject_unknown();
        if (cfg.g_count < 1 || cfg.g_stop < cfg.g_start || cfg.g_start < 0.0) {
            throw ConfigError("g_grid: need 0 <= start <= stop and count >= 1");
        }
    }

    cfg.shots = top.get<long>("shots", cfg.shots);
    if (cfg.shots < 1) throw ConfigError("shots: must be >= 1");

    if (auto sec = top.section("detection")) {
        detail::ConfigReader r(*sec, "detection.", cfg);
        cfg.detection.error_up = r.get<double>("error_up", 0.0);
        cfg.detection.error_down = r.get<double>("error_down", 0.0);
        cfg.detection.detection_time = r.get<double>("detection_time_s", 120e-6);
        r.reject_unknown();
        cfg.detection.validate();
    }

    cfg.exact_only = top.get<bool>("exact_only", false);

    if (auto sec = top.section("reconstruction")) {
        detail::ConfigReader r(*sec, "reconstruction.", cfg);
        cfg.grid_points = r.get<int>("grid_points", cfg.grid_points);
        cfg.grid_span = r.get<double>("grid_span", cfg.grid_span);
        cfg.k_count = r.get<int>("k_count", cfg.k_count);
        cfg.k_max = r.get<double>("k_max", cfg.k_max);
        cfg.recon_state = r.get<std::string>("state", cfg.recon_state);
        cfg.p2_source = r.get<std::string>("p2_source", cfg.p2_source);
        cfg.p2_k_count = r.get<int>("p2_k_count", cfg.p2_k_count);
        cfg.p2_k_max = r.get<double>("p2_k_max", cfg.p2_k_max);
        r.reject_unknown();
        if (cfg.recon_state != "postselected" && cfg.recon_state != "vacuum") {
            throw ConfigError("reconstruction.state: expected 'postselected' or 'vacuum'");
        }
        if (cfg.p2_source != "extract" && cfg.p2_source != "true") {
            throw ConfigError("reconstruction.p2_source: expected 'extract' or 'true'");
        }
        if (cfg.grid_points < 8 || cfg.k_count < 2 || !(cfg.grid_span > 0.0) ||
            !(cfg.k_max > 0.0) || cfg.p2_k_count < 5 || !(cfg.p2_k_max > 0.0)) {
            throw ConfigError("reconstruction: grid/k parameters out of range");
        }
    }

    if (auto sec = top.section("slope_k")) {
        detail::ConfigReader r(*sec, "slope_k.", cfg);
        cfg.slope_k_count = r.get<int>("count", cfg.slope_k_count);
        cfg.slope_k_max = r.get<double>("k_max", cfg.slope_k_max);
        r.reject_unknown();
        if (cfg.slope_k_count < 3 || !(cfg.slope_k_max > 0.0)) {
            throw ConfigError("slope_k: need count >= 3 and k_max > 0");
        }
    }

    if (auto sec = top.section("calibrate")) {
        detail::ConfigReader r(*sec, "calibrate.", cfg);
        cfg.calib_t_max = r.get<double>("t_max_s", cfg.calib_t_max);
        cfg.calib_t_count = r.get<int>("t_count", cfg.calib_t_count);
        cfg.fit_rabi = r.get<double>("fit_rabi_rad_s", cfg.fit_rabi);
        cfg.fit_t_max = r.get<double>("fit_t_max_s", cfg.fit_t_max);
        cfg.fit_t_count = r.get<int>("fit_t_count", cfg.fit_t_count);
        cfg.nbar_noise_sigma = r.get<double>("nbar_noise_sigma", cfg.nbar_noise_sigma);
        r.reject_unknown();
        if (cfg.calib_t_count < 2 || cfg.fit_t_count < 3 || !(cfg.calib_t_max > 0.0) ||
            !(cfg.fit_t_max > 0.0) || !(cfg.fit_rabi > 0.0) || cfg.nbar_noise_sigma < 0.0) {
            throw ConfigError("calibrate: time grid / fit parameters out of range");
        }
    }

    if (j.contains("fitdemo_cases")) {
        top.get<nlohmann::json>("fitdemo_cases", {});
        cfg.fitdemo_cases.clear();
        for (const auto& item : j.at("fitdemo_cases")) {
            if (!item.is_object() || !item.contains("g") || !item.contains("theta")) {
                throw ConfigError("fitdemo_cases: entries need 'g' and 'theta'");
            }
            cfg.fitdemo_cases.emplace_back(item.at("g").get<double>(),
                                           item.at("theta").get<double>());
        }
        if (cfg.fitdemo_cases.empty()) throw ConfigError("fitdemo_cases: must not be empty");
    }

    top.reject_unknown();

    // scenario-specific required fields and defaults
    switch (cfg.scenario) {
        case Scenario::amplify:
            if (cfg.thetas.empty()) cfg.thetas = {0.02};
            if (cfg.thetas.size() != 1) throw ConfigError("theta: amplify takes exactly one angle");
            break;
        case Scenario::sweep_z:
            if (cfg.thetas.empty()) throw ConfigError("theta: required for scenario sweep_z");
            break;
        case Scenario::sweep_p:
            if (cfg.phis.empty()) throw ConfigError("phi: required for scenario sweep_p");
            break;
        case Scenario::reconstruct:
            if (cfg.recon_state == "postselected" && cfg.thetas.empty()) cfg.thetas = {0.02};
            break;
        case Scenario::calibrate:
        case Scenario::fitdemo:
            break;
    }
    for (double t : cfg.thetas) {
        if (!std::isfinite(t) || t < 0.0 || t > std::numbers::pi / 2) {
            throw ConfigError("theta: angles must lie in [0, pi/2]");
        }
    }
    for (double f : cfg.phis) {
        if (!std::isfinite(f)) throw ConfigError("phi: angles must be finite");
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path,
                                    std::optional<std::uint64_t> seed_override = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j, seed_override);
}

namespace detail {

/// Deterministic worker pool: point i depends only on (seed, i); results are
/// gathered into slot i, so the output is identical for any pool size.
inline void parallel_for(int count, int workers, const std::function<void(int)>& body) {
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> v(count);
    if (count == 1) {
        v[0] = lo;
        return v;
    }
    for (int i = 0; i < count; ++i) v[i] = lo + (hi - lo) * i / (count - 1);
    return v;
}

/// Gaussian deviate via Box-Muller on the trial stream.
inline double gaussian(TrialStream& stream) {
    const double u1 = 1.0 - stream.uniform();
    const double u2 = stream.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

struct RunResult {
    std::vector<std::string> files;  // relative paths written
    nlohmann::json manifest;
};

namespace detail {

struct CsvBuilder {
    std::ostringstream out;
    explicit CsvBuilder(const std::string& header) { out << header << '\n'; }
    void row(const std::vector<double>& values) {
        for (size_t i = 0; i < values.size(); ++i) {
            if (i) out << ',';
            out << format_double(values[i]);
        }
        out << '\n';
    }
    std::string str() const { return out.str(); }
};

inline nlohmann::json config_snapshot(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["scenario"] = to_string(cfg.scenario);
    j["seed"] = cfg.seed;
    j["n_max"] = cfg.n_max;
    j["trap"] = {{"omega_z_rad_s", cfg.omega_z}, {"mass_kg", cfg.mass_kg}};
    j["pulse"] = {{"rabi_rad_s", cfg.pulse.rabi},
                  {"eta", cfg.pulse.eta},
                  {"duration_s", cfg.pulse.duration},
                  {"phi_plus", cfg.pulse.phi_plus},
                  {"phi_minus", cfg.pulse.phi_minus}};
    j["theta"] = cfg.thetas;
    j["phi"] = cfg.phis;
    j["g_grid"] = {{"start", cfg.g_start}, {"stop", cfg.g_stop}, {"count", cfg.g_count}};
    j["shots"] = cfg.shots;
    j["detection"] = {{"error_up", cfg.detection.error_up},
                      {"error_down", cfg.detection.error_down},
                      {"detection_time_s", cfg.detection.detection_time}};
    j["exact_only"] = cfg.exact_only;
    j["reconstruction"] = {{"grid_points", cfg.grid_points}, {"grid_span", cfg.grid_span},
                           {"k_count", cfg.k_count},         {"k_max", cfg.k_max},
                           {"state", cfg.recon_state},       {"p2_source", cfg.p2_source},
                           {"p2_k_count", cfg.p2_k_count},   {"p2_k_max", cfg.p2_k_max}};
    j["slope_k"] = {{"count", cfg.slope_k_count}, {"k_max", cfg.slope_k_max}};
    j["calibrate"] = {{"t_max_s", cfg.calib_t_max},
                      {"t_count", cfg.calib_t_count},
                      {"fit_rabi_rad_s", cfg.fit_rabi},
                      {"fit_t_max_s", cfg.fit_t_max},
                      {"fit_t_count", cfg.fit_t_count},
                      {"nbar_noise_sigma", cfg.nbar_noise_sigma}};
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& [g, theta] : cfg.fitdemo_cases) {
        cases.push_back({{"g", g}, {"theta", theta}});
    }
    j["fitdemo_cases"] = cases;
    return j;
}

inline MotionalState postselected_pointer(const ExperimentConfig& cfg, double g, double theta) {
    PulseParams pulse = cfg.pulse;
    pulse.duration = g / (pulse.eta * pulse.rabi);
    JointState psi = JointState::product(SpinState::down(), ground_state(cfg.n_max));
    psi = evolve_displacement(psi, pulse);
    psi = rotate(psi, {Axis::y, 2.0 * theta});
    return project_spin(psi, SpinOutcome::up).collapsed;
}

inline MotionalState momentum_shifted_pointer(const ExperimentConfig& cfg, double g, double phi) {
    PulseParams pulse = cfg.pulse;
    pulse.duration = g / (pulse.eta * pulse.rabi);
    JointState psi = JointState::product(SpinState::down(), ground_state(cfg.n_max));
    psi = rotate(psi, {Axis::x, 2.0 * phi});
    psi = evolve_displacement(psi, pulse);
    return project_spin(psi, SpinOutcome::up).collapsed;
}

}  // namespace detail

/// Derived quantities reported by `validate` and recorded in manifests.
struct ValidationReport {
    double g = 0.0;
    double weak_value_mag = 0.0;   // |A_w| of the first angle, when defined
    double coupling = 0.0;         // |A_w| g
    bool weak_regime = false;
    double success_prob = 0.0;
    std::vector<std::string> notes;
};

inline ValidationReport validate_config(const ExperimentConfig& cfg) {
    ValidationReport rep;
    rep.g = cfg.pulse.coupling_g();
    const double angle = !cfg.thetas.empty() ? cfg.thetas.front()
                        : !cfg.phis.empty()  ? cfg.phis.front()
                                             : 0.0;
    if (angle > 0.0) {
        rep.weak_value_mag = std::abs(1.0 / std::tan(angle));
        rep.coupling = rep.weak_value_mag * rep.g;
        rep.weak_regime = rep.coupling < theory::kWeakRegimeThreshold;
        if (!rep.weak_regime) {
            rep.notes.push_back("outside weak-coupling limit (|A_w| g = " +
                                format_double(rep.coupling) + " >= " +
                                format_double(theory::kWeakRegimeThreshold) + ")");
        }
    }
    if (!cfg.thetas.empty()) {
        try {
            rep.success_prob = theory::success_probability(rep.g, cfg.thetas.front());
            theory::delta_z(rep.g, cfg.thetas.front());
        } catch (const Error& e) {
            rep.notes.push_back(std::string("undefined-postselection precondition: ") + e.what());
        }
    }
    const double branch_alpha = 0.5 * rep.g;
    if (branch_alpha * branch_alpha > cfg.n_max / 4.0) {
        rep.notes.push_back("g too large for n_max: coherent branch exceeds truncation safety");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// scenario runners

namespace detail {

inline std::vector<double> slope_k_grid(const ExperimentConfig& cfg) {
    return linspace(0.0, cfg.slope_k_max, cfg.slope_k_count);
}

/// Noisy (or exact) sin-kind signals of a pointer state, then the weighted
/// line fit. Seeds derive from (seed, salt).
inline MeanFit probe_mean(const ExperimentConfig& cfg, const MotionalState& pointer,
                          Quadrature quadrature, std::uint64_t salt) {
    const std::vector<double> ks = slope_k_grid(cfg);
    const ShotPlan plan{cfg.shots, derive_seed(cfg.seed, salt)};
    const SignalSet set = generate_signals(pointer, ks, SpinPrep::sigma_y, quadrature, plan,
                                           cfg.exact_only);
    return extract_mean(set);
}

inline RunResult run_amplify(const ExperimentConfig& cfg, const std::string& out_dir, int workers);
inline RunResult run_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int workers);
inline RunResult run_calibrate(const ExperimentConfig& cfg, const std::string& out_dir);
inline RunResult run_reconstruct(const ExperimentConfig& cfg, const std::string& out_dir);
inline RunResult run_fitdemo(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace detail

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                         int workers = 1);

namespace detail {

inline nlohmann::json manifest_skeleton(const ExperimentConfig& cfg) {
    nlohmann::json m;
    m["version"] = kVersion;
    m["scenario"] = to_string(cfg.scenario);
    m["seed"] = cfg.seed;
    m["seed_source"] = cfg.seed_source;
    m["config"] = config_snapshot(cfg);
    m["provenance"] = cfg.provenance;
    return m;
}

inline void finish_run(RunResult& result, const ExperimentConfig& cfg,
                       const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    result.manifest["outputs"] = result.files;
    write_text_file((std::filesystem::path(out_dir) / "manifest.json").string(),
                    result.manifest.dump(2) + "\n");
    result.files.push_back("manifest.json");
}

// Fig. 2 analogue: the headline amplification numbers plus densities on the
// grid (exact Eq.-5-style curve, first-order prediction, and the
// reconstructed histogram from simulated signals).
inline RunResult run_amplify(const ExperimentConfig& cfg, const std::string& out_dir,
                             int workers) {
    (void)workers;
    RunResult result;
    const TrapUnits trap = cfg.trap();
    const double g = cfg.pulse.coupling_g();
    const double theta = cfg.thetas.front();

    const auto wv = theory::weak_value(SpinState::down(),
                                       {std::cos(theta), -std::sin(theta)}, sigma_x());
    const double dz_exact = theory::delta_z(g, theta);
    const auto first_order = theory::first_order_pointer_shift(g, wv.value);
    const double success = theory::success_probability(g, theta);

    // full simulated chain
    JointState psi = JointState::product(SpinState::down(), ground_state(cfg.n_max));
    psi = evolve_displacement(psi, cfg.pulse);
    const HeraldResult herald =
        heralded_postselect(psi, theta, cfg.detection, {cfg.shots, derive_seed(cfg.seed, 0)});

    const Grid grid = Grid::uniform(-cfg.grid_span, cfg.grid_span, cfg.grid_points);
    const std::vector<double> ks = linspace(0.0, cfg.k_max, cfg.k_count);
    const SignalSet cos_set =
        generate_signals(herald.pointer, ks, SpinPrep::sigma_z, Quadrature::z,
                         {cfg.shots, derive_seed(cfg.seed, 1)}, cfg.exact_only);
    const SignalSet sin_set =
        generate_signals(herald.pointer, ks, SpinPrep::sigma_y, Quadrature::z,
                         {cfg.shots, derive_seed(cfg.seed, 2)}, cfg.exact_only);

    double p2 = 0.0;
    std::string p2_source;
    if (cfg.p2_source == "true") {
        p2 = expect_p2(herald.pointer);
        p2_source = "true_state";
    } else {
        const std::vector<double> p2ks = linspace(0.0, cfg.p2_k_max, cfg.p2_k_count);
        const SignalSet p2_set =
            generate_signals(herald.pointer, p2ks, SpinPrep::sigma_z, Quadrature::p,
                             {cfg.shots, derive_seed(cfg.seed, 3)}, cfg.exact_only);
        p2 = extract_p2(p2_set);
        p2_source = "extract_p2";
    }

    ReconstructionOptions opts;
    opts.p2_source = p2_source;
    const ReconstructionResult recon = reconstruct_distribution(cos_set, sin_set, grid, p2, opts);

    const auto exact_wf = theory::postselected_wavefunction(g, theta);
    CsvBuilder csv("z,exact_density,weak_density,reconstructed_density");
    const double weak_shift = first_order.dz;
    for (int i = 0; i < cfg.grid_points; ++i) {
        const double z = grid.points[i];
        const double weak_density = std::exp(-0.5 * (z - weak_shift) * (z - weak_shift)) /
                                    std::sqrt(2.0 * std::numbers::pi);
        csv.row({z, exact_wf.density(z), weak_density, recon.probabilities[i] / grid.spacing});
    }

    result.manifest = manifest_skeleton(cfg);
    nlohmann::json derived;
    derived["g"] = g;
    derived["splitting_m"] = g * trap.delta_z;
    derived["delta_z_dimensionless"] = dz_exact;
    derived["delta_z_m"] = dz_exact * trap.delta_z;
    derived["amplification_factor"] = std::abs(dz_exact) / g;
    derived["weak_value"] = {{"re", wv.value.real()}, {"im", wv.value.imag()}};
    derived["coupling_awg"] = first_order.coupling;
    derived["weak_regime"] = first_order.weak_regime;
    derived["success_probability"] = success;
    derived["kept"] = herald.kept;
    derived["discarded"] = herald.discarded;
    derived["delta_z_m_per_delta_z_unit"] = trap.delta_z;
    derived["reconstruction"] = reconstruction_sidecar(recon);
    result.manifest["derived"] = derived;

    std::filesystem::create_directories(out_dir);
    const auto dir = std::filesystem::path(out_dir);
    write_text_file((dir / "amplify.csv").string(), csv.str());
    write_text_file((dir / "signals_cos.csv").string(), to_csv(cos_set));
    write_text_file((dir / "signals_sin.csv").string(), to_csv(sin_set));
    write_text_file((dir / "reconstruction.csv").string(), to_csv(recon, grid));
    write_text_file((dir / "reconstruction.json").string(),
                    reconstruction_sidecar(recon).dump(2) + "\n");
    result.files = {"amplify.csv", "signals_cos.csv", "signals_sin.csv", "reconstruction.csv",
                    "reconstruction.json"};
    finish_run(result, cfg, out_dir);
    return result;
}

// Figs. 3 and 4 analogues: shift-vs-g curves for several postselection
// angles, with exact, weak-limit and simulated columns.
inline RunResult run_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int workers) {
    const bool momentum = cfg.scenario == Scenario::sweep_p;
    const std::vector<double>& angles = momentum ? cfg.phis : cfg.thetas;
    const std::vector<double> gs = linspace(cfg.g_start, cfg.g_stop, cfg.g_count);

    struct Row {
        double angle, g, exact, weak, sim, sigma;
        long kept;
    };
    const int count = static_cast<int>(angles.size()) * cfg.g_count;
    std::vector<Row> rows(count);

    parallel_for(count, workers, [&](int idx) {
        const double angle = angles[idx / cfg.g_count];
        const double g = gs[idx % cfg.g_count];
        Row row{};
        row.angle = angle;
        row.g = g;
        row.exact = momentum ? theory::delta_p(g, angle) : theory::delta_z(g, angle);
        const double cot = 1.0 / std::tan(angle);
        row.weak = momentum ? g * cot : -g * cot;

        PulseParams pulse = cfg.pulse;
        pulse.duration = g / (pulse.eta * pulse.rabi);
        JointState psi = JointState::product(SpinState::down(), ground_state(cfg.n_max));
        if (momentum) psi = rotate(psi, {Axis::x, 2.0 * angle});
        psi = evolve_displacement(psi, pulse);
        try {
            const HeraldResult herald = heralded_postselect(
                psi, momentum ? 0.0 : angle, cfg.detection,
                {cfg.shots, derive_seed(cfg.seed, 2 * idx)});
            row.kept = herald.kept;
            const MeanFit fit = probe_mean(cfg, herald.pointer,
                                           momentum ? Quadrature::p : Quadrature::z,
                                           2 * idx + 1);
            row.sim = fit.mean;
            row.sigma = fit.fit_sigma;
        } catch (const EmptyPostselectionError&) {
            row.kept = 0;
            row.sim = std::nan("");
            row.sigma = std::nan("");
        }
        rows[idx] = row;
    });

    const char* prefix = momentum ? "delta_p" : "delta_z";
    CsvBuilder csv(std::string(momentum ? "phi" : "theta") + ",g," + prefix + "_exact," + prefix +
                   "_weak," + prefix + "_sim," + prefix + "_sigma,kept");
    for (const Row& r : rows) {
        csv.row({r.angle, r.g, r.exact, r.weak, r.sim, r.sigma, double(r.kept)});
    }

    RunResult result;
    result.manifest = manifest_skeleton(cfg);
    result.manifest["derived"] = {{"points", count},
                                  {"angles", angles},
                                  {"weak_limit_model", momentum ? "g*cot(phi)" : "-g*cot(theta)"}};
    std::filesystem::create_directories(out_dir);
    const std::string name = momentum ? "sweep_p.csv" : "sweep_z.csv";
    write_text_file((std::filesystem::path(out_dir) / name).string(), csv.str());
    result.files = {name};
    finish_run(result, cfg, out_dir);
    return result;
}

// Fig. 6 saturation curve plus the Fig. 7 low-coupling Rabi calibration.
inline RunResult run_calibrate(const ExperimentConfig& cfg, const std::string& out_dir) {
    const std::vector<double> times = linspace(0.0, cfg.calib_t_max, cfg.calib_t_count);
    const std::vector<double> p_exact = calibration_curve(cfg.pulse, times);

    CsvBuilder csv("t,p_up_exact,p_up_sim,p_up_sigma");
    for (size_t i = 0; i < times.size(); ++i) {
        double sim = p_exact[i];
        double sigma = 0.0;
        if (!cfg.exact_only) {
            const PopulationSample s =
                sample_population(p_exact[i], {cfg.shots, derive_seed(cfg.seed, i)});
            sim = s.estimate;
            sigma = s.sigma;
        }
        csv.row({times[i], p_exact[i], sim, sigma});
    }

    // low-coupling phonon-number calibration: nbar = |alpha(t)|^2 with
    // optional Gaussian measurement noise, fit through sqrt(nbar)
    PulseParams fit_pulse = cfg.pulse;
    fit_pulse.rabi = cfg.fit_rabi;
    const std::vector<double> fit_times =
        linspace(cfg.fit_t_max / cfg.fit_t_count, cfg.fit_t_max, cfg.fit_t_count);
    std::vector<std::pair<double, double>> t_nbar(fit_times.size());
    CsvBuilder phonon_csv("t,alpha,nbar_exact,nbar_sim");
    for (size_t i = 0; i < fit_times.size(); ++i) {
        const double alpha = 0.5 * fit_pulse.eta * fit_pulse.rabi * fit_times[i];
        const double nbar = alpha * alpha;
        double measured = nbar;
        if (!cfg.exact_only && cfg.nbar_noise_sigma > 0.0) {
            TrialStream stream(derive_seed(cfg.seed, 0xCAB), i);
            measured = std::max(0.0, nbar + cfg.nbar_noise_sigma * gaussian(stream));
        }
        t_nbar[i] = {fit_times[i], measured};
        phonon_csv.row({fit_times[i], alpha, nbar, measured});
    }
    const double rabi_fit = fit_rabi_from_phonon(t_nbar, fit_pulse.eta);

    RunResult result;
    result.manifest = manifest_skeleton(cfg);
    result.manifest["derived"] = {
        {"saturation_limit", 0.5},
        {"fit_rabi_target_rad_s", cfg.fit_rabi},
        {"fitted_rabi_rad_s", rabi_fit},
        {"fitted_rabi_rel_error", std::abs(rabi_fit - cfg.fit_rabi) / cfg.fit_rabi}};
    std::filesystem::create_directories(out_dir);
    const auto dir = std::filesystem::path(out_dir);
    write_text_file((dir / "calibrate.csv").string(), csv.str());
    write_text_file((dir / "calibrate_phonon.csv").string(), phonon_csv.str());
    result.files = {"calibrate.csv", "calibrate_phonon.csv"};
    finish_run(result, cfg, out_dir);
    return result;
}

// Appendix measurement chain end to end on a chosen state.
inline RunResult run_reconstruct(const ExperimentConfig& cfg, const std::string& out_dir) {
    MotionalState state = ground_state(cfg.n_max);
    double g = 0.0;
    double theta = 0.0;
    if (cfg.recon_state == "postselected") {
        g = cfg.pulse.coupling_g();
        theta = cfg.thetas.front();
        state = postselected_pointer(cfg, g, theta);
    }

    const Grid grid = Grid::uniform(-cfg.grid_span, cfg.grid_span, cfg.grid_points);
    const std::vector<double> ks = linspace(0.0, cfg.k_max, cfg.k_count);
    const SignalSet cos_set = generate_signals(state, ks, SpinPrep::sigma_z, Quadrature::z,
                                               {cfg.shots, derive_seed(cfg.seed, 1)},
                                               cfg.exact_only);
    const SignalSet sin_set = generate_signals(state, ks, SpinPrep::sigma_y, Quadrature::z,
                                               {cfg.shots, derive_seed(cfg.seed, 2)},
                                               cfg.exact_only);
    double p2 = 0.0;
    std::string p2_source;
    if (cfg.p2_source == "true") {
        p2 = expect_p2(state);
        p2_source = "true_state";
    } else {
        const std::vector<double> p2ks = linspace(0.0, cfg.p2_k_max, cfg.p2_k_count);
        const SignalSet p2_set = generate_signals(state, p2ks, SpinPrep::sigma_z, Quadrature::p,
                                                  {cfg.shots, derive_seed(cfg.seed, 3)},
                                                  cfg.exact_only);
        p2 = extract_p2(p2_set);
        p2_source = "extract_p2";
    }
    ReconstructionOptions opts;
    opts.p2_source = p2_source;
    const ReconstructionResult recon = reconstruct_distribution(cos_set, sin_set, grid, p2, opts);

    RunResult result;
    result.manifest = manifest_skeleton(cfg);
    result.manifest["derived"] = {{"state", cfg.recon_state},
                                  {"g", g},
                                  {"theta", theta},
                                  {"kinetic_bound", p2},
                                  {"p2_source", p2_source},
                                  {"reconstruction", reconstruction_sidecar(recon)}};
    std::filesystem::create_directories(out_dir);
    const auto dir = std::filesystem::path(out_dir);
    write_text_file((dir / "reconstruct.csv").string(), to_csv(recon, grid));
    write_text_file((dir / "signals_cos.csv").string(), to_csv(cos_set));
    write_text_file((dir / "signals_sin.csv").string(), to_csv(sin_set));
    write_text_file((dir / "reconstruction.json").string(),
                    reconstruction_sidecar(recon).dump(2) + "\n");
    result.files = {"reconstruct.csv", "signals_cos.csv", "signals_sin.csv",
                    "reconstruction.json"};
    finish_run(result, cfg, out_dir);
    return result;
}

// Fig. 8 analogue: <sin(k z)> curves of postselected states with the
// weighted linear fit extracting <z>.
inline RunResult run_fitdemo(const ExperimentConfig& cfg, const std::string& out_dir) {
    CsvBuilder csv("g,theta,k,signal_exact,signal_sim,signal_sigma");
    nlohmann::json cases = nlohmann::json::array();
    const std::vector<double> curve_ks = linspace(0.0, cfg.k_max, 2 * cfg.k_count);
    for (size_t c = 0; c < cfg.fitdemo_cases.size(); ++c) {
        const auto [g, theta] = cfg.fitdemo_cases[c];
        const MotionalState pointer = postselected_pointer(cfg, g, theta);
        const SignalSet exact_curve =
            generate_signals(pointer, curve_ks, SpinPrep::sigma_y, Quadrature::z, {}, true);
        const SignalSet sampled =
            generate_signals(pointer, curve_ks, SpinPrep::sigma_y, Quadrature::z,
                             {cfg.shots, derive_seed(cfg.seed, 100 + c)}, cfg.exact_only);
        for (size_t i = 0; i < curve_ks.size(); ++i) {
            csv.row({g, theta, curve_ks[i], exact_curve.values[i], sampled.values[i],
                     cfg.exact_only ? 0.0 : sampled.sigmas[i]});
        }

        const MeanFit fit = probe_mean(cfg, pointer, Quadrature::z, 200 + c);
        nlohmann::json entry;
        entry["g"] = g;
        entry["theta"] = theta;
        entry["extracted_mean"] = fit.mean;
        entry["fit_sigma"] = fit.fit_sigma;
        entry["true_mean"] = expect_z(pointer);
        entry["analytic_delta_z"] = theory::delta_z(g, theta);
        cases.push_back(entry);
    }

    RunResult result;
    result.manifest = manifest_skeleton(cfg);
    result.manifest["derived"] = {{"cases", cases}};
    std::filesystem::create_directories(out_dir);
    write_text_file((std::filesystem::path(out_dir) / "fitdemo.csv").string(), csv.str());
    result.files = {"fitdemo.csv"};
    finish_run(result, cfg, out_dir);
    return result;
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                int workers) {
    switch (cfg.scenario) {
        case Scenario::amplify: return detail::run_amplify(cfg, out_dir, workers);
        case Scenario::sweep_z:
        case Scenario::sweep_p: return detail::run_sweep(cfg, out_dir, workers);
        case Scenario::calibrate: return detail::run_calibrate(cfg, out_dir);
        case Scenario::reconstruct: return detail::run_reconstruct(cfg, out_dir);
        case Scenario::fitdemo: return detail::run_fitdemo(cfg, out_dir);
    }
    throw ConfigError("run_experiment: unhandled scenario");
}

/// Parse a scenario curve CSV with the given expected header; returns rows of
/// doubles. Used by the schema round-trip checks.
inline std::vector<std::vector<double>> parse_table(const std::string& text,
                                                    const std::string& expected_header) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("curve CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header) {
        throw ConfigError("curve CSV: header mismatch: got '" + line + "'");
    }
    const size_t columns = detail::split_csv_line(line).size();
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != columns) {
            throw ConfigError("curve CSV: wrong number of fields in row: " + line);
        }
        std::vector<double> row(columns);
        for (size_t i = 0; i < columns; ++i) {
            row[i] = std::strtod(fields[i].c_str(), nullptr);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace wva
