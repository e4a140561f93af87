#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdiqkd/baseline.hpp"
#include "mdiqkd/config.hpp"
#include "mdiqkd/decoy.hpp"
#include "mdiqkd/model.hpp"
#include "mdiqkd/optimize.hpp"
#include "mdiqkd/simkit.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInfeasible = 4;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> pairs;
    std::optional<double> distance_km;
    std::string out_path;
    bool expected_mode = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_out = true) {
    cmd->add_option("--config", opts.config_path,
                    "Config file path (default: $MDIQKD_CONFIG)");
    cmd->add_option("--seed", opts.seed, "Override run.seed");
    cmd->add_option("--pairs", opts.pairs, "Override run.n_pairs");
    cmd->add_option("--distance", opts.distance_km,
                    "Override system.channel.total_length_km");
    cmd->add_flag("--expected-mode", opts.expected_mode,
                  "Use deterministic expected counts instead of sampling");
    if (with_out) cmd->add_option("--out", opts.out_path, "Output file path");
}

mdiqkd::config::RunConfig resolve_config(const CommonOptions& opts) {
    std::string path = opts.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv(mdiqkd::config::kConfigEnvVar))
            path = env;
    }
    if (path.empty())
        throw mdiqkd::config::ConfigError(
            "no config given (use --config or set MDIQKD_CONFIG)");
    auto cfg = mdiqkd::config::load_config(path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.pairs) cfg.n_pairs = *opts.pairs;
    if (opts.expected_mode) cfg.expected_mode = true;
    if (opts.distance_km) {
        cfg.system.channel.total_length_km = *opts.distance_km;
        cfg.system.validate();
    }
    return cfg;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
    } else {
        mdiqkd::config::atomic_write(out_path, content);
    }
}

int cmd_model(const CommonOptions& opts) {
    const auto cfg = resolve_config(opts);
    const auto obs =
        mdiqkd::model::expected_observables(cfg.system, cfg.protocol);
    const std::string hash =
        mdiqkd::config::config_hash(cfg.system, cfg.protocol);

    std::cout << "pair     gain            error_gain\n";
    for (mdiqkd::PairLabel label : mdiqkd::kAllLabels) {
        const auto& ge = obs.at(label);
        std::cout << std::left << std::setw(8) << mdiqkd::to_string(label)
                  << std::scientific << std::setprecision(6) << ge.gain
                  << "    " << ge.error_gain << "\n";
    }
    if (!opts.out_path.empty())
        emit(opts.out_path, mdiqkd::config::observables_to_json(obs, hash));
    return kExitOk;
}

int cmd_simulate(const CommonOptions& opts) {
    const auto cfg = resolve_config(opts);
    mdiqkd::simkit::SourcePairStats stats;
    if (cfg.expected_mode) {
        stats = mdiqkd::simkit::expected_stats(cfg.system, cfg.protocol,
                                               cfg.n_pairs);
    } else {
        stats = mdiqkd::simkit::simulate(cfg.system, cfg.protocol, cfg.n_pairs,
                                         cfg.seed);
    }
    const std::string hash =
        mdiqkd::config::config_hash(cfg.system, cfg.protocol);
    emit(opts.out_path, mdiqkd::config::stats_to_json(stats, hash));
    return kExitOk;
}

int cmd_analyze(const CommonOptions& opts, const std::string& counts_path,
                bool override_provenance) {
    const auto cfg = resolve_config(opts);
    std::string stored_hash;
    const auto stats = mdiqkd::config::stats_from_json(
        mdiqkd::config::read_file(counts_path), stored_hash);
    const std::string hash =
        mdiqkd::config::config_hash(cfg.system, cfg.protocol);
    if (stored_hash != hash && !override_provenance) {
        std::cerr << "analyze: counts file was produced under different "
                     "physical parameters (hash "
                  << stored_hash << " vs " << hash
                  << "); pass --override-provenance to proceed\n";
        return kExitData;
    }
    const auto report = mdiqkd::decoy::finite_key(
        stats, cfg.protocol, cfg.system, cfg.fluctuation, cfg.analysis);
    emit(opts.out_path, mdiqkd::config::report_to_json(report, hash));
    return kExitOk;
}

int cmd_optimize(const CommonOptions& opts, int starts_override,
                 std::uint64_t budget_override) {
    auto cfg = resolve_config(opts);
    const int starts = starts_override > 0 ? starts_override : cfg.starts;
    const std::uint64_t budget =
        budget_override > 0 ? budget_override : cfg.budget;
    const auto result =
        mdiqkd::optimize::optimize(cfg.system, cfg.n_pairs, cfg.fluctuation,
                                   cfg.analysis, cfg.seed, budget, starts);

    nlohmann::json j;
    j["meta"] = {{"tool_version", mdiqkd::config::kToolVersion},
                 {"seed", cfg.seed},
                 {"n_pairs", cfg.n_pairs}};
    j["result"] = {{"mu_x", result.best_params.mu_x},
                   {"mu_y", result.best_params.mu_y},
                   {"mu_z", result.best_params.mu_z},
                   {"p_x", result.best_params.p_x},
                   {"p_y", result.best_params.p_y},
                   {"p_z", result.best_params.p_z},
                   {"rate_per_pulse", result.best_rate_per_pulse},
                   {"rate_bps", result.best_rate_per_pulse *
                                    cfg.system.clock_rate_hz},
                   {"evaluations", result.evaluations},
                   {"starts", result.starts},
                   {"converged", result.converged}};
    emit(opts.out_path, j.dump(2) + "\n");
    return kExitOk;
}

int cmd_sweep(const CommonOptions& opts, const std::vector<double>& distances) {
    if (distances.empty())
        throw mdiqkd::config::ConfigError("sweep: distance list is empty");
    const auto cfg = resolve_config(opts);

    std::ostringstream csv;
    csv << "distance_km,mdi_finite_bps,mdi_asymptotic_bps,bb84_ideal_sp,"
           "bb84_practical_sp,bb84_wcs_decoy\n";
    for (double distance : distances) {
        auto system = cfg.system;
        system.channel.total_length_km = distance;
        system.validate();

        const double finite_rate =
            mdiqkd::optimize::expected_finite_rate(
                system, cfg.protocol, cfg.n_pairs, cfg.fluctuation,
                cfg.analysis) *
            system.clock_rate_hz;
        const double asym_rate =
            mdiqkd::decoy::asymptotic_rate(system, cfg.protocol, cfg.analysis)
                .rate_bps;

        // BB84 comparison uses the mean raw detector efficiency, as in the
        // no-key argument; the window factor is an MDI post-selection knob.
        mdiqkd::baseline::BB84Spec bb84;
        bb84.end_to_end_loss_db =
            distance * system.channel.attenuation_db_per_km +
            system.channel.extra_loss_alice_db +
            system.channel.extra_loss_bob_db;
        bb84.detector_efficiency = 0.5 * (system.detectors.efficiency_d1 +
                                          system.detectors.efficiency_d2);
        bb84.dark_prob = system.detectors.dark_prob;

        const double clock = system.clock_rate_hz;
        csv << distance << "," << finite_rate << "," << asym_rate << ","
            << mdiqkd::baseline::bb84_ideal_sp_rate(bb84) * clock << ","
            << mdiqkd::baseline::bb84_practical_sp_rate(bb84, 0.01) * clock
            << ","
            << mdiqkd::baseline::bb84_wcs_decoy_rate(
                   bb84, cfg.analysis.ec_efficiency) *
                   clock
            << "\n";
    }
    emit(opts.out_path, csv.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Four-intensity decoy-state MDIQKD analysis toolkit"};
    app.require_subcommand(1);

    CommonOptions model_opts, sim_opts, analyze_opts, opt_opts, sweep_opts;
    std::string counts_path;
    bool override_provenance = false;
    int starts_override = 0;
    std::uint64_t budget_override = 0;
    std::vector<double> distances;

    add_common(app.add_subcommand("model", "Print expected observables"),
               model_opts);
    add_common(app.add_subcommand("simulate", "Run the Monte Carlo and write "
                                              "a counts file"),
               sim_opts);
    auto* analyze =
        app.add_subcommand("analyze", "Run the decoy analysis on a counts file");
    add_common(analyze, analyze_opts);
    analyze->add_option("--counts", counts_path, "Counts file to analyze")
        ->required();
    analyze->add_flag("--override-provenance", override_provenance,
                      "Analyze even if the counts file hash differs");
    auto* optimize_cmd =
        app.add_subcommand("optimize", "Globally optimize protocol parameters");
    add_common(optimize_cmd, opt_opts);
    optimize_cmd->add_option("--starts", starts_override,
                             "Number of simplex restarts");
    optimize_cmd->add_option("--budget", budget_override,
                             "Total objective evaluation budget");
    auto* sweep =
        app.add_subcommand("sweep", "Emit rate-vs-distance curves as CSV");
    add_common(sweep, sweep_opts);
    sweep->add_option("--distances", distances, "Distances in km")
        ->required()
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (app.got_subcommand("model")) return cmd_model(model_opts);
        if (app.got_subcommand("simulate")) return cmd_simulate(sim_opts);
        if (app.got_subcommand("analyze"))
            return cmd_analyze(analyze_opts, counts_path, override_provenance);
        if (app.got_subcommand("optimize"))
            return cmd_optimize(opt_opts, starts_override, budget_override);
        if (app.got_subcommand("sweep")) return cmd_sweep(sweep_opts, distances);
    } catch (const mdiqkd::config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mdiqkd::config::SchemaError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const mdiqkd::decoy::DataInconsistentError& e) {
        std::cerr << "analysis infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
