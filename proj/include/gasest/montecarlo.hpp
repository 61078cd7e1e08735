#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gasest/estimators.hpp"
#include "gasest/model.hpp"

namespace gasest {

enum class EstimatorKind { kMle, kRls, kMme2, kMme3 };

std::string estimator_name(EstimatorKind kind);

// Presets for the two studied zones: the 780 cu.ft test chamber
// (28 CFM, 0.42 SLPM source, C0 392 ppm, Ts 20 s) and the 6143 cu.ft
// classroom (115 CFM, metabolic source at multiplier 1.5, Ts 150 s).
ZoneParams chamber_preset();
ZoneParams classroom_preset();

// "chamber_v_a" or "classroom_v_c"; throws ParameterError otherwise.
ZoneParams scenario_preset(const std::string& name);

struct ExperimentConfig {
    ZoneParams zone;
    std::vector<EstimatorKind> estimators;
    int trials = 10000;
    std::uint64_t seed = 1;
    double sigma_ppm = 10.0;

    std::vector<int> sample_grid;          // run_rmse_vs_n
    std::vector<double> air_change_grid;   // run_theory_vs_mc
    std::vector<int> population_grid;      // run_metabolic
    std::vector<double> step_sd_grid;      // run_random_walk
    std::vector<int> horizons;             // inner sample-count axis

    double occupants = 1.0;                // constant-profile truth
    double walk_start = 20.0;              // random-walk N'_0
    int threads = 0;                       // <= 0 picks hardware concurrency
};

struct ResultRow {
    double sweep = 0.0;
    std::string estimator;
    int n = 0;
    double rmse = 0.0;
    double rmse_se = 0.0;
    double theory = 0.0;   // predicted std-dev, NaN when not applicable
    double var_n = 0.0;    // sample variance of the estimate
    double mean_n = 0.0;
    int successes = 0;
    int failures = 0;
};

struct ResultTable {
    std::vector<ResultRow> rows;

    int total_failures() const;
    // Header sweep,estimator,n,rmse,rmse_se,theory; stable byte-for-byte
    // across runs with the same config and seed.
    std::string to_csv() const;
};

// RMSE of N_hat per (n, estimator) with constant occupancy, against the
// per-method predicted std-dev.
ResultTable run_rmse_vs_n(const ExperimentConfig& cfg);

// Sweep of transient depth K (sample count chosen to reach each K) comparing
// Monte-Carlo spread with the order-3 small-K expansions.
ResultTable run_theory_vs_mc(const ExperimentConfig& cfg);

// Heterogeneous-population study: per trial the per-person metabolic
// multipliers are drawn uniformly from [1, 2] while the estimators assume the
// nominal multiplier; rows per (population, horizon, estimator).
ResultTable run_metabolic(const ExperimentConfig& cfg);

// Random-walk occupancy study: rows per (step std-dev, horizon, estimator);
// errors are measured against the period-mean occupancy of each window.
ResultTable run_random_walk(const ExperimentConfig& cfg);

struct OnlineTraceRow {
    int index = 0;
    double y = 0.0;
    double rls = 0.0;   // NaN while underdetermined
    double mme = 0.0;   // NaN while underdetermined
};

// Feeds one trace sample-by-sample through the recursive estimators.
std::vector<OnlineTraceRow> run_online_trace(const TimeSeries& trace,
                                             const ZoneParams& p);

std::string online_trace_csv(const std::vector<OnlineTraceRow>& rows);

} // namespace gasest
