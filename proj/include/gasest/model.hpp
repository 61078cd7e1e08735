#pragma once

#include <cstdint>
#include <variant>
#include <vector>

namespace gasest {

// Well-mixed single zone: volume-equivalent M, fresh-air inflow Q, per-source
// generation rate c, background level C0, sampling interval Ts.
struct ZoneParams {
    double volume_m3 = 0.0;
    double inflow_m3s = 0.0;
    double generation_m3s = 0.0;   // per occupant
    double background_ppm = 0.0;
    double sample_interval_s = 0.0;

    // Throws ParameterError on a non-physical configuration.
    void validate() const;

    double time_constant_s() const { return volume_m3 / inflow_m3s; }

    // Generation rate per occupant expressed in ppm·m3/s, so that
    // generation_ppm() * N / Q is directly an above-background concentration.
    double generation_ppm() const;

    // Steady-state above-background concentration for N occupants.
    double equilibrium_ppm(double occupants) const;
};

struct ConstantOccupancy {
    double occupants = 1.0;
};

// Integer-valued random walk: N'_{i+1} = N'_i + step, step ~ N(0, step_sd^2),
// effective occupancy floor(N'_i) clamped at zero when floor_to_integer is set.
struct RandomWalkOccupancy {
    double start = 0.0;
    double step_sd = 0.0;
    bool floor_to_integer = true;
};

// Fixed population with per-person metabolic multipliers in [1, 2]; the
// generation rate of person k comes from co2_generation_rate(area, rate_k, rq).
struct HeterogeneousOccupancy {
    std::vector<double> met_rates;
    double dubois_area_m2 = 1.8;
    double respiratory_quotient = 0.83;
};

using OccupancyProfile =
    std::variant<ConstantOccupancy, RandomWalkOccupancy, HeterogeneousOccupancy>;

// Sampled concentration record. `y` holds above-background values when
// above_background is set, raw values otherwise. When has_t0 is set the first
// entry is the sample at t = 0 and entry i sits at t = i*ts; otherwise entry i
// sits at t = (i+1)*ts. `truth` is empty or parallel to `y` (occupancy track).
struct TimeSeries {
    double ts = 0.0;
    bool above_background = true;
    bool has_t0 = false;
    std::vector<double> y;
    std::vector<double> truth;

    std::size_t sample_count() const { return y.size(); }
    // Number of sampling intervals n covered by the record (duration = n*ts).
    std::size_t interval_count() const {
        return has_t0 ? (y.empty() ? 0 : y.size() - 1) : y.size();
    }
    double duration_s() const { return static_cast<double>(interval_count()) * ts; }
    double time_of(std::size_t index) const {
        return ts * static_cast<double>(has_t0 ? index : index + 1);
    }
};

// Above-background response at time t for N occupants and inflow Q:
// (c_ppm*N/Q) * (1 - e^{-tQ/M}).
double growth_value(const ZoneParams& p, double occupants, double inflow_m3s, double t_s);

struct GrowthGradient {
    double d_occupants = 0.0;
    double d_inflow = 0.0;
};

// Partial derivatives of growth_value with respect to N and Q.
GrowthGradient growth_gradient(const ZoneParams& p, double occupants,
                               double inflow_m3s, double t_s);

// Noise-free samples a_i at t = i*Ts, i = 1..n, constant occupancy.
std::vector<double> growth_curve(const ZoneParams& p, double occupants, int n);

// Truncated-exponential approximation of growth_curve:
// (c_ppm*N/Q) * (1 - sum_{j=0}^{order} (-i*Ts*Q/M)^j / j!).
std::vector<double> poly_approx(const ZoneParams& p, double occupants, int order, int n);

// Per-person CO2 generation rate [m3/s]:
// 0.0028 * A_D * M_H * R_Q / (0.23*R_Q + 0.77) litres per second.
double co2_generation_rate(double dubois_area_m2, double met_rate,
                           double respiratory_quotient);

// Noisy above-background trace with n+1 samples including t = 0.
// Noise draws come from per-sample substreams of `seed`, so traces are
// reproducible independent of evaluation order.
TimeSeries simulate(const ZoneParams& p, const OccupancyProfile& profile,
                    double sigma_ppm, int n, std::uint64_t seed);

} // namespace gasest
