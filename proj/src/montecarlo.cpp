#include "gasest/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "gasest/csv.hpp"
#include "gasest/errors.hpp"
#include "gasest/rng.hpp"
#include "gasest/theory.hpp"
#include "gasest/units.hpp"

namespace gasest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Experiment ids keep the trial substreams of different runs disjoint.
enum : std::uint64_t {
    kExpRmseVsN = 1,
    kExpTheoryVsMc = 2,
    kExpMetabolic = 3,
    kExpRandomWalk = 4,
};

constexpr std::uint64_t kStreamMetRates = 0xA11CE;

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(trial) for trial in [0, trials) over a fixed static partition.
// Output must go to per-trial slots, which keeps every reduction
// independent of the thread count.
void parallel_trials(int trials, int threads, const std::function<void(int)>& fn) {
    threads = std::min(std::max(threads, 1), std::max(trials, 1));
    if (threads == 1) {
        for (int t = 0; t < trials; ++t) fn(t);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const int chunk = (trials + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const int begin = w * chunk;
        const int end = std::min(trials, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                for (int t = begin; t < end; ++t) fn(t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

// A trial contributes whenever the estimator returns a finite value; thrown
// domain errors (moment ratio outside the invertible range, singular fits)
// are the only exclusions, and those are counted per estimator.
std::optional<double> estimate_occupants(EstimatorKind kind, const TimeSeries& obs,
                                         const ZoneParams& p, double sigma) {
    double value = kNaN;
    try {
        switch (kind) {
            case EstimatorKind::kMle:
                value = mle_fit(obs, p).occupants;
                break;
            case EstimatorKind::kRls:
                value = rls_fit(obs, p, sigma).estimate.occupants;
                break;
            case EstimatorKind::kMme2:
                value = mme_fit(obs, p, 2).occupants;
                break;
            case EstimatorKind::kMme3:
                value = mme_fit(obs, p, 3).occupants;
                break;
        }
    } catch (const EstimatorError&) {
        return std::nullopt;
    }
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

TimeSeries prefix_series(const TimeSeries& full, int n) {
    TimeSeries out;
    out.ts = full.ts;
    out.above_background = full.above_background;
    out.has_t0 = full.has_t0;
    const std::size_t count = static_cast<std::size_t>(n) + (full.has_t0 ? 1 : 0);
    out.y.assign(full.y.begin(), full.y.begin() + static_cast<std::ptrdiff_t>(count));
    if (full.truth.size() == full.y.size()) {
        out.truth.assign(full.truth.begin(),
                         full.truth.begin() + static_cast<std::ptrdiff_t>(count));
    }
    return out;
}

// Per-trial estimate (or failure) for one table cell.
struct CellStats {
    double sum_err = 0.0;
    double sum_sq = 0.0;
    double sum_quad = 0.0;   // sum of squared squared-errors, for SE(RMSE)
    int successes = 0;
    int failures = 0;

    void add(double err) {
        const double sq = err * err;
        sum_err += err;
        sum_sq += sq;
        sum_quad += sq * sq;
        ++successes;
    }

    void finish(ResultRow& row) const {
        row.successes = successes;
        row.failures = failures;
        if (successes == 0) {
            row.rmse = kNaN;
            row.rmse_se = kNaN;
            row.var_n = kNaN;
            row.mean_n = kNaN;
            return;
        }
        const double m = successes;
        const double mse = sum_sq / m;
        row.rmse = std::sqrt(mse);
        const double mean_err = sum_err / m;
        row.mean_n = mean_err;   // caller shifts by the target when constant
        row.var_n = successes > 1 ? (sum_sq - m * mean_err * mean_err) / (m - 1.0) : kNaN;
        // Delta method: SE(RMSE) = SE(MSE) / (2 RMSE).
        if (successes > 1 && mse > 0.0) {
            const double var_sq = (sum_quad - m * mse * mse) / (m - 1.0);
            row.rmse_se = std::sqrt(var_sq / m) / (2.0 * row.rmse);
        } else {
            row.rmse_se = kNaN;
        }
    }
};

void require_common(const ExperimentConfig& cfg) {
    cfg.zone.validate();
    if (cfg.trials < 1) throw ParameterError("trial count must be >= 1");
    if (cfg.estimators.empty()) throw ParameterError("no estimators selected");
    if (!std::isfinite(cfg.sigma_ppm) || cfg.sigma_ppm < 0.0) {
        throw ParameterError("noise sigma [ppm] must be finite and >= 0");
    }
}

double theory_stddev(EstimatorKind kind, const ZoneParams& zone, double occupants,
                     int n, double sigma) {
    try {
        switch (kind) {
            case EstimatorKind::kMle:
                return std::sqrt(crlb_exact(zone, occupants, zone.inflow_m3s, n, sigma));
            case EstimatorKind::kRls:
                return std::sqrt(
                    rls_variance_exact(zone, occupants, zone.inflow_m3s, n, sigma));
            case EstimatorKind::kMme2:
                return std::sqrt(
                    mme_variance_exact(zone, occupants, zone.inflow_m3s, n, sigma, 2));
            case EstimatorKind::kMme3:
                return std::sqrt(
                    mme_variance_exact(zone, occupants, zone.inflow_m3s, n, sigma, 3));
        }
    } catch (const EstimatorError&) {
        return kNaN;
    } catch (const ParameterError&) {
        return kNaN;
    }
    return kNaN;
}

} // namespace

std::string estimator_name(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::kMle: return "mle";
        case EstimatorKind::kRls: return "rls";
        case EstimatorKind::kMme2: return "mme2";
        case EstimatorKind::kMme3: return "mme3";
    }
    return "unknown";
}

ZoneParams chamber_preset() {
    ZoneParams p;
    p.volume_m3 = units::cuft_to_m3(780.0);
    p.inflow_m3s = units::cfm_to_m3s(28.0);
    p.generation_m3s = units::slpm_to_m3s(0.42);
    p.background_ppm = 392.0;
    p.sample_interval_s = 20.0;
    return p;
}

ZoneParams classroom_preset() {
    ZoneParams p;
    p.volume_m3 = units::cuft_to_m3(6143.0);
    p.inflow_m3s = units::cfm_to_m3s(115.0);
    p.generation_m3s = co2_generation_rate(1.8, 1.5, 0.83);
    p.background_ppm = 400.0;
    p.sample_interval_s = 150.0;
    return p;
}

ZoneParams scenario_preset(const std::string& name) {
    if (name == "chamber_v_a") return chamber_preset();
    if (name == "classroom_v_c") return classroom_preset();
    throw ParameterError("unknown scenario '" + name + "'");
}

int ResultTable::total_failures() const {
    int total = 0;
    for (const auto& row : rows) total += row.failures;
    return total;
}

std::string ResultTable::to_csv() const {
    std::ostringstream out;
    out << "sweep,estimator,n,rmse,rmse_se,theory\n";
    for (const auto& row : rows) {
        out << csv::format_double(row.sweep) << ',' << row.estimator << ','
            << row.n << ',' << csv::format_double(row.rmse) << ','
            << csv::format_double(row.rmse_se) << ','
            << csv::format_double(row.theory) << '\n';
    }
    return out.str();
}

ResultTable run_rmse_vs_n(const ExperimentConfig& cfg) {
    require_common(cfg);
    if (cfg.sample_grid.empty()) throw ParameterError("sample grid is empty");
    if (!(cfg.occupants > 0.0)) throw ParameterError("occupancy must be positive");

    const int threads = resolve_threads(cfg.threads);
    const std::uint64_t exp_key = rng::derive(cfg.seed, kExpRmseVsN);
    const std::size_t n_est = cfg.estimators.size();

    ResultTable table;
    for (std::size_t si = 0; si < cfg.sample_grid.size(); ++si) {
        const int n = cfg.sample_grid[si];
        if (n < 3) throw ParameterError("sample counts must be >= 3");
        const std::uint64_t sweep_key = rng::derive(exp_key, si);
        std::vector<double> cells(static_cast<std::size_t>(cfg.trials) * n_est, kNaN);
        parallel_trials(cfg.trials, threads, [&](int trial) {
            const std::uint64_t trial_key =
                rng::derive(sweep_key, static_cast<std::uint64_t>(trial));
            const TimeSeries obs =
                simulate(cfg.zone, ConstantOccupancy{cfg.occupants}, cfg.sigma_ppm, n,
                         trial_key);
            for (std::size_t e = 0; e < n_est; ++e) {
                const auto value =
                    estimate_occupants(cfg.estimators[e], obs, cfg.zone, cfg.sigma_ppm);
                if (value) {
                    cells[static_cast<std::size_t>(trial) * n_est + e] = *value;
                }
            }
        });
        for (std::size_t e = 0; e < n_est; ++e) {
            CellStats stats;
            for (int trial = 0; trial < cfg.trials; ++trial) {
                const double v = cells[static_cast<std::size_t>(trial) * n_est + e];
                if (std::isnan(v)) {
                    ++stats.failures;
                } else {
                    stats.add(v - cfg.occupants);
                }
            }
            ResultRow row;
            row.sweep = n;
            row.estimator = estimator_name(cfg.estimators[e]);
            row.n = n;
            stats.finish(row);
            row.mean_n += cfg.occupants;
            row.theory =
                theory_stddev(cfg.estimators[e], cfg.zone, cfg.occupants, n, cfg.sigma_ppm);
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

ResultTable run_theory_vs_mc(const ExperimentConfig& cfg) {
    require_common(cfg);
    if (cfg.air_change_grid.empty()) throw ParameterError("air-change grid is empty");
    if (!(cfg.occupants > 0.0)) throw ParameterError("occupancy must be positive");

    const int threads = resolve_threads(cfg.threads);
    const std::uint64_t exp_key = rng::derive(cfg.seed, kExpTheoryVsMc);
    const std::size_t n_est = cfg.estimators.size();

    ResultTable table;
    for (std::size_t si = 0; si < cfg.air_change_grid.size(); ++si) {
        const double target_k = cfg.air_change_grid[si];
        if (!(target_k > 0.0)) throw ParameterError("air-change targets must be positive");
        const int n = std::max(
            3, static_cast<int>(std::lround(target_k * cfg.zone.volume_m3 /
                                            (cfg.zone.inflow_m3s *
                                             cfg.zone.sample_interval_s))));
        const double k = air_changes(cfg.zone, cfg.zone.inflow_m3s, n);
        const std::uint64_t sweep_key = rng::derive(exp_key, si);
        std::vector<double> cells(static_cast<std::size_t>(cfg.trials) * n_est, kNaN);
        parallel_trials(cfg.trials, threads, [&](int trial) {
            const std::uint64_t trial_key =
                rng::derive(sweep_key, static_cast<std::uint64_t>(trial));
            const TimeSeries obs =
                simulate(cfg.zone, ConstantOccupancy{cfg.occupants}, cfg.sigma_ppm, n,
                         trial_key);
            for (std::size_t e = 0; e < n_est; ++e) {
                const auto value =
                    estimate_occupants(cfg.estimators[e], obs, cfg.zone, cfg.sigma_ppm);
                if (value) {
                    cells[static_cast<std::size_t>(trial) * n_est + e] = *value;
                }
            }
        });
        for (std::size_t e = 0; e < n_est; ++e) {
            CellStats stats;
            for (int trial = 0; trial < cfg.trials; ++trial) {
                const double v = cells[static_cast<std::size_t>(trial) * n_est + e];
                if (std::isnan(v)) {
                    ++stats.failures;
                } else {
                    stats.add(v - cfg.occupants);
                }
            }
            ResultRow row;
            row.sweep = k;
            row.estimator = estimator_name(cfg.estimators[e]);
            row.n = n;
            stats.finish(row);
            row.mean_n += cfg.occupants;
            double expansion = kNaN;
            switch (cfg.estimators[e]) {
                case EstimatorKind::kMle:
                    expansion =
                        crlb_expansion(cfg.zone, cfg.zone.inflow_m3s, n, cfg.sigma_ppm, 3);
                    break;
                case EstimatorKind::kRls:
                    expansion = rls_variance_expansion(cfg.zone, cfg.zone.inflow_m3s, n,
                                                       cfg.sigma_ppm, 3);
                    break;
                case EstimatorKind::kMme2:
                    expansion = mme_variance_expansion(cfg.zone, cfg.zone.inflow_m3s, n,
                                                       cfg.sigma_ppm, 3);
                    break;
                case EstimatorKind::kMme3:
                    break;
            }
            row.theory = std::sqrt(expansion);
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

ResultTable run_metabolic(const ExperimentConfig& cfg) {
    require_common(cfg);
    if (cfg.population_grid.empty()) throw ParameterError("population grid is empty");
    if (cfg.horizons.empty()) throw ParameterError("horizon list is empty");

    const int threads = resolve_threads(cfg.threads);
    const std::uint64_t exp_key = rng::derive(cfg.seed, kExpMetabolic);
    const std::size_t n_est = cfg.estimators.size();
    const std::size_t n_hor = cfg.horizons.size();
    const int n_max = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());
    for (int h : cfg.horizons) {
        if (h < 3) throw ParameterError("horizons must be >= 3");
    }

    ResultTable table;
    for (std::size_t si = 0; si < cfg.population_grid.size(); ++si) {
        const int population = cfg.population_grid[si];
        if (population < 1) throw ParameterError("population must be >= 1");
        const std::uint64_t sweep_key = rng::derive(exp_key, si);
        std::vector<double> cells(
            static_cast<std::size_t>(cfg.trials) * n_hor * n_est, kNaN);
        parallel_trials(cfg.trials, threads, [&](int trial) {
            const std::uint64_t trial_key =
                rng::derive(sweep_key, static_cast<std::uint64_t>(trial));
            const std::uint64_t rate_key = rng::derive(trial_key, kStreamMetRates);
            HeterogeneousOccupancy profile;
            profile.met_rates.resize(static_cast<std::size_t>(population));
            for (int k = 0; k < population; ++k) {
                profile.met_rates[static_cast<std::size_t>(k)] =
                    1.0 + rng::uniform(rate_key, static_cast<std::uint64_t>(k));
            }
            const TimeSeries obs =
                simulate(cfg.zone, profile, cfg.sigma_ppm, n_max, trial_key);
            for (std::size_t h = 0; h < n_hor; ++h) {
                const TimeSeries window = prefix_series(obs, cfg.horizons[h]);
                for (std::size_t e = 0; e < n_est; ++e) {
                    const auto value = estimate_occupants(cfg.estimators[e], window,
                                                          cfg.zone, cfg.sigma_ppm);
                    if (value) {
                        cells[(static_cast<std::size_t>(trial) * n_hor + h) * n_est + e] =
                            *value;
                    }
                }
            }
        });
        for (std::size_t h = 0; h < n_hor; ++h) {
            for (std::size_t e = 0; e < n_est; ++e) {
                CellStats stats;
                for (int trial = 0; trial < cfg.trials; ++trial) {
                    const double v =
                        cells[(static_cast<std::size_t>(trial) * n_hor + h) * n_est + e];
                    if (std::isnan(v)) {
                        ++stats.failures;
                    } else {
                        stats.add(v - population);
                    }
                }
                ResultRow row;
                row.sweep = population;
                row.estimator = estimator_name(cfg.estimators[e]);
                row.n = cfg.horizons[h];
                stats.finish(row);
                row.mean_n += population;
                row.theory = kNaN;
                table.rows.push_back(std::move(row));
            }
        }
    }
    return table;
}

ResultTable run_random_walk(const ExperimentConfig& cfg) {
    require_common(cfg);
    if (cfg.step_sd_grid.empty()) throw ParameterError("step std-dev grid is empty");
    if (cfg.horizons.empty()) throw ParameterError("horizon list is empty");
    if (!(cfg.walk_start >= 0.0)) throw ParameterError("walk start must be >= 0");

    const int threads = resolve_threads(cfg.threads);
    const std::uint64_t exp_key = rng::derive(cfg.seed, kExpRandomWalk);
    const std::size_t n_est = cfg.estimators.size();
    const std::size_t n_hor = cfg.horizons.size();
    const int n_max = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());
    for (int h : cfg.horizons) {
        if (h < 3) throw ParameterError("horizons must be >= 3");
    }

    ResultTable table;
    for (std::size_t si = 0; si < cfg.step_sd_grid.size(); ++si) {
        const double step_sd = cfg.step_sd_grid[si];
        if (!(step_sd >= 0.0)) throw ParameterError("step std-dev must be >= 0");
        const std::uint64_t sweep_key = rng::derive(exp_key, si);
        // err cells plus per-cell target already folded in.
        std::vector<double> cells(
            static_cast<std::size_t>(cfg.trials) * n_hor * n_est, kNaN);
        parallel_trials(cfg.trials, threads, [&](int trial) {
            const std::uint64_t trial_key =
                rng::derive(sweep_key, static_cast<std::uint64_t>(trial));
            RandomWalkOccupancy profile;
            profile.start = cfg.walk_start;
            profile.step_sd = step_sd;
            const TimeSeries obs =
                simulate(cfg.zone, profile, cfg.sigma_ppm, n_max, trial_key);
            double occupancy_sum = 0.0;
            std::size_t summed = 0;
            for (std::size_t h = 0; h < n_hor; ++h) {
                const int window_n = cfg.horizons[h];
                while (summed < static_cast<std::size_t>(window_n)) {
                    occupancy_sum += obs.truth[summed];
                    ++summed;
                }
                const double period_mean = occupancy_sum / window_n;
                const TimeSeries window = prefix_series(obs, window_n);
                for (std::size_t e = 0; e < n_est; ++e) {
                    const auto value = estimate_occupants(cfg.estimators[e], window,
                                                          cfg.zone, cfg.sigma_ppm);
                    if (value) {
                        cells[(static_cast<std::size_t>(trial) * n_hor + h) * n_est + e] =
                            *value - period_mean;
                    }
                }
            }
        });
        for (std::size_t h = 0; h < n_hor; ++h) {
            for (std::size_t e = 0; e < n_est; ++e) {
                CellStats stats;
                for (int trial = 0; trial < cfg.trials; ++trial) {
                    const double v =
                        cells[(static_cast<std::size_t>(trial) * n_hor + h) * n_est + e];
                    if (std::isnan(v)) {
                        ++stats.failures;
                    } else {
                        stats.add(v);
                    }
                }
                ResultRow row;
                row.sweep = step_sd;
                row.estimator = estimator_name(cfg.estimators[e]);
                row.n = cfg.horizons[h];
                stats.finish(row);
                row.theory = kNaN;
                table.rows.push_back(std::move(row));
            }
        }
    }
    return table;
}

std::vector<OnlineTraceRow> run_online_trace(const TimeSeries& trace,
                                             const ZoneParams& p) {
    p.validate();
    if (!trace.has_t0) {
        throw ParameterError("online replay needs the t = 0 sample");
    }
    RlsOnline rls(p, 1.0, trace.y.empty() ? 0.0 : trace.y[0]);
    MmeOnline mme(p, 2, trace.y.empty() ? 0.0 : trace.y[0]);
    std::vector<OnlineTraceRow> rows;
    for (std::size_t i = 1; i < trace.y.size(); ++i) {
        const double y = trace.y[i];
        rls.update(y);
        mme.update(y);
        OnlineTraceRow row;
        row.index = static_cast<int>(i);
        row.y = y;
        row.rls = kNaN;
        row.mme = kNaN;
        try {
            row.rls = rls.estimate().estimate.occupants;
        } catch (const EstimatorError&) {
        }
        try {
            row.mme = mme.estimate().occupants;
        } catch (const EstimatorError&) {
        }
        rows.push_back(row);
    }
    return rows;
}

std::string online_trace_csv(const std::vector<OnlineTraceRow>& rows) {
    std::ostringstream out;
    out << "i,y_ppm,occupants_rls,occupants_mme2\n";
    for (const auto& row : rows) {
        out << row.index << ',' << csv::format_double(row.y) << ','
            << csv::format_double(row.rls) << ',' << csv::format_double(row.mme) << '\n';
    }
    return out.str();
}

} // namespace gasest
