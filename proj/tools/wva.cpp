// Command-line runner for the weak-value-amplification simulator.
//
//   wva run --config configs/amplify.json --out-dir out
//   wva validate --config configs/amplify.json
//   wva list-scenarios
//
// Exit codes: 0 success, 2 configuration error, 3 numeric/convergence error.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "wva/experiment.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool exact_only = false;
};

wva::ExperimentConfig load(const CommonOpts& opts) {
    wva::ExperimentConfig cfg = wva::load_config(opts.config_path, opts.seed);
    if (opts.exact_only) {
        cfg.exact_only = true;
        cfg.provenance["exact_only"] = "flag";
    }
    return cfg;
}

void print_validation(const wva::ExperimentConfig& cfg) {
    const wva::ValidationReport rep = wva::validate_config(cfg);
    std::cout << "scenario:             " << wva::to_string(cfg.scenario) << "\n";
    std::cout << "seed:                 " << cfg.seed << " (" << cfg.seed_source << ")\n";
    std::cout << "n_max:                " << cfg.n_max << "\n";
    const wva::TrapUnits trap = cfg.trap();
    std::cout << "delta_z:              " << wva::format_double(trap.delta_z) << " m\n";
    std::cout << "delta_p:              " << wva::format_double(trap.delta_p) << " kg m/s\n";
    std::cout << "g = eta*Omega*t:      " << wva::format_double(rep.g) << "\n";
    if (rep.weak_value_mag > 0.0) {
        std::cout << "|A_w|:                " << wva::format_double(rep.weak_value_mag) << "\n";
        std::cout << "|A_w| g:              " << wva::format_double(rep.coupling)
                  << (rep.weak_regime ? "  (weak-coupling regime)" : "") << "\n";
    }
    if (!cfg.thetas.empty()) {
        std::cout << "success probability:  " << wva::format_double(rep.success_prob) << "\n";
    }
    for (const std::string& note : rep.notes) std::cout << "note: " << note << "\n";
    std::cout << "resolved config:\n"
              << wva::detail::config_snapshot(cfg).dump(2) << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trapped-ion weak value amplification simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string out_dir = "out";
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;

    CLI::App* run_cmd = app.add_subcommand("run", "Run a scenario and write CSV/JSON outputs");
    run_cmd->add_option("--config", opts.config_path, "JSON experiment config")->required();
    std::uint64_t seed_value = 0;
    CLI::Option* seed_opt =
        run_cmd->add_option("--seed", seed_value, "Override the config/env seed");
    run_cmd->add_option("--out-dir", out_dir, "Output directory (created if needed)");
    run_cmd->add_flag("--exact-only", opts.exact_only, "Skip Monte Carlo sampling");
    run_cmd->add_option("--workers", workers, "Worker threads for sweep points");

    CLI::App* validate_cmd =
        app.add_subcommand("validate", "Resolve a config and print derived quantities");
    validate_cmd->add_option("--config", opts.config_path, "JSON experiment config")->required();
    CLI::Option* vseed_opt =
        validate_cmd->add_option("--seed", seed_value, "Override the config/env seed");
    validate_cmd->add_flag("--exact-only", opts.exact_only, "Skip Monte Carlo sampling");

    CLI::App* list_cmd = app.add_subcommand("list-scenarios", "List available scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (list_cmd->parsed()) {
            std::cout << "amplify      headline amplification numbers and densities (Fig.-2-style)\n"
                      << "sweep_z      position shift vs g for each theta (Fig.-3-style)\n"
                      << "sweep_p      momentum shift vs g for each phi (Fig.-4-style)\n"
                      << "calibrate    sideband-balance saturation curve and Rabi fit (Figs. 6/7)\n"
                      << "reconstruct  characteristic-function signals and wavepacket reconstruction\n"
                      << "fitdemo      <sin(k z)> curves with the weighted linear fit (Fig.-8-style)\n";
            return 0;
        }
        if (run_cmd->parsed()) {
            if (*seed_opt) opts.seed = seed_value;
            const wva::ExperimentConfig cfg = load(opts);
            const auto t0 = std::chrono::steady_clock::now();
            const wva::RunResult result = wva::run_experiment(cfg, out_dir, workers);
            const double dt =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            for (const std::string& f : result.files) std::cout << "wrote " << out_dir << "/" << f << "\n";
            std::printf("done in %.3f s\n", dt);
            return 0;
        }
        if (validate_cmd->parsed()) {
            if (*vseed_opt) opts.seed = seed_value;
            print_validation(load(opts));
            return 0;
        }
    } catch (const wva::ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 2;
    } catch (const wva::Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 3;
    }
    return 0;
}
