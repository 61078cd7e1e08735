#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gasest/config.hpp"
#include "gasest/csv.hpp"
#include "gasest/errors.hpp"
#include "gasest/estimators.hpp"
#include "gasest/model.hpp"
#include "gasest/montecarlo.hpp"
#include "gasest/theory.hpp"

namespace {

using namespace gasest;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitEstimator = 4;

void write_output(const std::string& path, const std::string& body) {
    if (path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << body;
    if (!out) throw IoError("write to '" + path + "' failed");
}

struct SimulateArgs {
    std::string config_path;
    std::string out_path;
    int n = 300;
    std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateArgs& args) {
    const ParsedConfig cfg = load_config(args.config_path);
    if (!cfg.zone) throw ConfigError("missing section 'zone'");
    if (!cfg.profile) throw ConfigError("missing section 'profile'");
    const double sigma = cfg.sigma_ppm.value_or(0.0);
    const TimeSeries series = simulate(*cfg.zone, *cfg.profile, sigma, args.n, args.seed);
    std::ostringstream body;
    csv::write_timeseries(body, series, cfg.zone->background_ppm);
    write_output(args.out_path, body.str());
    return kExitOk;
}

struct EstimateArgs {
    std::string config_path;
    std::string data_path;
    std::string out_path;
    std::string method = "mle";
    bool online = false;
};

int cmd_estimate(const EstimateArgs& args) {
    const ParsedConfig cfg = load_config(args.config_path);
    if (!cfg.zone) throw ConfigError("missing section 'zone'");
    const ZoneParams& zone = *cfg.zone;
    const double sigma = cfg.sigma_ppm.value_or(1.0);
    const TimeSeries obs = csv::read_timeseries_file(args.data_path, zone.background_ppm);

    if (args.online) {
        if (args.method != "rls" && args.method != "mme2") {
            throw ConfigError("online mode supports methods 'rls' and 'mme2'");
        }
        write_output(args.out_path, online_trace_csv(run_online_trace(obs, zone)));
        return kExitOk;
    }

    Estimate est;
    if (args.method == "mle") {
        est = mle_fit(obs, zone);
    } else if (args.method == "rls") {
        est = rls_fit(obs, zone, sigma).estimate;
    } else if (args.method == "mme2") {
        est = mme_fit(obs, zone, 2);
    } else if (args.method == "mme3") {
        est = mme_fit(obs, zone, 3);
    } else {
        throw ConfigError("unknown method '" + args.method + "'");
    }
    std::ostringstream body;
    body << "N_hat,Q_hat_m3s,converged\n"
         << csv::format_double(est.occupants) << ','
         << csv::format_double(est.inflow_m3s) << ','
         << (est.converged ? "true" : "false") << '\n';
    write_output(args.out_path, body.str());
    return kExitOk;
}

struct TheoryArgs {
    std::string config_path;
    std::string out_path;
    std::string method = "crlb";
    int moment_order = 2;
    int expansion_order = 3;
    double occupants = 1.0;
    std::optional<double> sigma;
    std::vector<double> k_grid;
    std::vector<int> n_grid;
};

int cmd_theory(const TheoryArgs& args) {
    const ParsedConfig cfg = load_config(args.config_path);
    if (!cfg.zone) throw ConfigError("missing section 'zone'");
    const ZoneParams& zone = *cfg.zone;
    // Reported factors are noise-normalized, so any positive sigma gives the
    // same table; fall back to 1 when the config pins sigma to zero.
    double sigma = args.sigma ? *args.sigma : cfg.sigma_ppm.value_or(1.0);
    if (sigma <= 0.0) sigma = 1.0;
    if (args.k_grid.empty() == args.n_grid.empty()) {
        throw ConfigError("give exactly one of --k-grid and --n-grid");
    }
    Method method;
    if (args.method == "crlb") {
        method = Method::kMle;
    } else if (args.method == "rls") {
        method = Method::kRls;
    } else if (args.method == "mme") {
        method = Method::kMme;
    } else {
        throw ConfigError("unknown method '" + args.method + "'");
    }

    std::vector<int> samples = args.n_grid;
    for (double k : args.k_grid) {
        if (!(k > 0.0)) throw ConfigError("--k-grid entries must be positive");
        samples.push_back(std::max(
            2, static_cast<int>(std::lround(k * zone.volume_m3 /
                                            (zone.inflow_m3s * zone.sample_interval_s)))));
    }

    std::ostringstream body;
    body << "K,factor_exact,factor_expansion_" << args.expansion_order << '\n';
    for (int n : samples) {
        if (n < 2) throw ConfigError("--n-grid entries must be >= 2");
        const VarianceReport rep =
            variance_report(zone, method, args.moment_order, args.occupants,
                            zone.inflow_m3s, n, sigma, args.expansion_order);
        body << csv::format_double(rep.air_changes) << ','
             << csv::format_double(rep.factor_exact) << ','
             << csv::format_double(rep.factor_expansion) << '\n';
    }
    write_output(args.out_path, body.str());
    return kExitOk;
}

struct MonteCarloArgs {
    std::string config_path;
    std::string out_path;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

int cmd_montecarlo(const MonteCarloArgs& args) {
    const ParsedConfig cfg = load_config(args.config_path);
    if (!cfg.experiment || !cfg.experiment_kind) {
        throw ConfigError("missing section 'experiment'");
    }
    ExperimentConfig exp = *cfg.experiment;
    if (args.trials) exp.trials = *args.trials;
    if (args.seed) exp.seed = *args.seed;
    if (args.threads) exp.threads = *args.threads;

    ResultTable table;
    switch (*cfg.experiment_kind) {
        case ExperimentKind::kRmseVsN: table = run_rmse_vs_n(exp); break;
        case ExperimentKind::kTheoryVsMc: table = run_theory_vs_mc(exp); break;
        case ExperimentKind::kMetabolic: table = run_metabolic(exp); break;
        case ExperimentKind::kRandomWalk: table = run_random_walk(exp); break;
    }
    std::ostringstream body;
    body << table.to_csv();
    body << "# failed_trials=" << table.total_failures() << '\n';
    write_output(args.out_path, body.str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gas source-strength and airflow estimation from transient data"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "Generate a noisy concentration trace");
    simulate_cmd->add_option("--config", sim.config_path, "Config file")->required();
    simulate_cmd->add_option("--out", sim.out_path, "Output CSV (default stdout)");
    simulate_cmd->add_option("--n", sim.n, "Number of sampling intervals")
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--seed", sim.seed, "Simulation seed");

    EstimateArgs est;
    CLI::App* estimate_cmd =
        app.add_subcommand("estimate", "Estimate occupancy and inflow from a trace");
    estimate_cmd->add_option("--config", est.config_path, "Config file")->required();
    estimate_cmd->add_option("--data", est.data_path, "Input CSV")->required();
    estimate_cmd->add_option("--method", est.method, "mle|rls|mme2|mme3");
    estimate_cmd->add_flag("--online", est.online, "Per-sample recursive estimates");
    estimate_cmd->add_option("--out", est.out_path, "Output (default stdout)");

    TheoryArgs theory;
    CLI::App* theory_cmd =
        app.add_subcommand("theory", "Predicted variance factors across K");
    theory_cmd->add_option("--config", theory.config_path, "Config file")->required();
    theory_cmd->add_option("--method", theory.method, "crlb|rls|mme");
    theory_cmd->add_option("--m", theory.moment_order, "Moment order for mme");
    theory_cmd->add_option("--order", theory.expansion_order, "Expansion order")
        ->check(CLI::Range(1, 3));
    theory_cmd->add_option("--occupants", theory.occupants, "Occupancy for exact factors");
    double sigma_opt = 0.0;
    CLI::Option* sigma_flag =
        theory_cmd->add_option("--sigma", sigma_opt, "Noise std-dev [ppm]");
    theory_cmd->add_option("--k-grid", theory.k_grid, "Air-change sweep")->delimiter(',');
    theory_cmd->add_option("--n-grid", theory.n_grid, "Sample-count sweep")->delimiter(',');
    theory_cmd->add_option("--out", theory.out_path, "Output (default stdout)");

    MonteCarloArgs mc;
    CLI::App* mc_cmd = app.add_subcommand("montecarlo", "Run a Monte-Carlo experiment");
    mc_cmd->add_option("--config", mc.config_path, "Config file")->required();
    int mc_trials = 0;
    std::uint64_t mc_seed = 0;
    int mc_threads = 0;
    CLI::Option* trials_flag = mc_cmd->add_option("--trials", mc_trials, "Trial count");
    CLI::Option* seed_flag = mc_cmd->add_option("--seed", mc_seed, "Master seed");
    CLI::Option* threads_flag = mc_cmd->add_option("--threads", mc_threads, "Worker threads");
    mc_cmd->add_option("--out", mc.out_path, "Output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);   // --help
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (simulate_cmd->parsed()) return cmd_simulate(sim);
        if (estimate_cmd->parsed()) return cmd_estimate(est);
        if (theory_cmd->parsed()) {
            if (sigma_flag->count() > 0) theory.sigma = sigma_opt;
            return cmd_theory(theory);
        }
        if (mc_cmd->parsed()) {
            if (trials_flag->count() > 0) mc.trials = mc_trials;
            if (seed_flag->count() > 0) mc.seed = mc_seed;
            if (threads_flag->count() > 0) mc.threads = mc_threads;
            return cmd_montecarlo(mc);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const EstimatorError& e) {
        std::cerr << "estimator error: " << e.what() << '\n';
        return kExitEstimator;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitConfig;
}
