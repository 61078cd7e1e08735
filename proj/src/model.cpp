#include "gasest/model.hpp"

#include <cmath>
#include <string>

#include "gasest/errors.hpp"
#include "gasest/rng.hpp"
#include "gasest/units.hpp"

namespace gasest {

namespace {

// Substream ids under one simulation seed.
constexpr std::uint64_t kStreamNoise = 1;
constexpr std::uint64_t kStreamWalk = 2;

void require_sample_count(int n) {
    if (n < 1) throw ParameterError("sample count must be >= 1");
}

} // namespace

void ZoneParams::validate() const {
    units::require_positive_finite(volume_m3, "zone volume [m3]");
    units::require_positive_finite(inflow_m3s, "zone inflow [m3/s]");
    units::require_positive_finite(generation_m3s, "generation rate [m3/s]");
    units::require_positive_finite(sample_interval_s, "sample interval [s]");
    if (!std::isfinite(background_ppm) || background_ppm < 0.0) {
        throw ParameterError("background concentration [ppm] must be finite and >= 0");
    }
}

double ZoneParams::generation_ppm() const {
    return units::fraction_to_ppm(generation_m3s);
}

double ZoneParams::equilibrium_ppm(double occupants) const {
    return generation_ppm() * occupants / inflow_m3s;
}

double growth_value(const ZoneParams& p, double occupants, double inflow_m3s,
                    double t_s) {
    const double decay = inflow_m3s / p.volume_m3;
    return p.generation_ppm() * occupants / inflow_m3s * (-std::expm1(-decay * t_s));
}

GrowthGradient growth_gradient(const ZoneParams& p, double occupants,
                               double inflow_m3s, double t_s) {
    const double c = p.generation_ppm();
    const double m = p.volume_m3;
    const double q = inflow_m3s;
    const double rise = -std::expm1(-t_s * q / m);   // 1 - e^{-tQ/M}
    const double tail = std::exp(-t_s * q / m);
    GrowthGradient g;
    g.d_occupants = c / q * rise;
    g.d_inflow = -c * occupants / (q * q) * rise + c * occupants * t_s / (q * m) * tail;
    return g;
}

std::vector<double> growth_curve(const ZoneParams& p, double occupants, int n) {
    p.validate();
    require_sample_count(n);
    std::vector<double> a(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        a[static_cast<std::size_t>(i - 1)] =
            growth_value(p, occupants, p.inflow_m3s, p.sample_interval_s * i);
    }
    return a;
}

std::vector<double> poly_approx(const ZoneParams& p, double occupants, int order, int n) {
    p.validate();
    require_sample_count(n);
    if (order < 1) throw ParameterError("approximation order must be >= 1");
    const double gain = p.generation_ppm() * occupants / p.inflow_m3s;
    const double decay = p.inflow_m3s / p.volume_m3;
    std::vector<double> a(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        const double x = decay * p.sample_interval_s * i;
        // 1 - sum_{j=0}^{order} (-x)^j/j!  ==  -sum_{j=1}^{order} (-x)^j/j!
        double term = 1.0;
        double sum = 0.0;
        for (int j = 1; j <= order; ++j) {
            term *= -x / j;
            sum -= term;
        }
        a[static_cast<std::size_t>(i - 1)] = gain * sum;
    }
    return a;
}

double co2_generation_rate(double dubois_area_m2, double met_rate,
                           double respiratory_quotient) {
    units::require_positive_finite(dubois_area_m2, "DuBois area [m2]");
    units::require_positive_finite(met_rate, "metabolic rate");
    units::require_positive_finite(respiratory_quotient, "respiratory quotient");
    const double litres_per_s = 0.0028 * dubois_area_m2 * met_rate *
                                respiratory_quotient /
                                (0.23 * respiratory_quotient + 0.77);
    return litres_per_s / 1000.0;
}

TimeSeries simulate(const ZoneParams& p, const OccupancyProfile& profile,
                    double sigma_ppm, int n, std::uint64_t seed) {
    p.validate();
    require_sample_count(n);
    if (!std::isfinite(sigma_ppm) || sigma_ppm < 0.0) {
        throw ParameterError("noise sigma [ppm] must be finite and >= 0");
    }

    TimeSeries out;
    out.ts = p.sample_interval_s;
    out.above_background = true;
    out.has_t0 = true;
    const auto count = static_cast<std::size_t>(n) + 1;
    out.y.assign(count, 0.0);
    out.truth.assign(count, 0.0);

    if (const auto* c = std::get_if<ConstantOccupancy>(&profile)) {
        if (!std::isfinite(c->occupants) || c->occupants < 0.0) {
            throw ParameterError("constant occupancy must be finite and >= 0");
        }
        for (int i = 1; i <= n; ++i) {
            out.y[static_cast<std::size_t>(i)] =
                growth_value(p, c->occupants, p.inflow_m3s, p.sample_interval_s * i);
        }
        for (auto& t : out.truth) t = c->occupants;
    } else if (const auto* w = std::get_if<RandomWalkOccupancy>(&profile)) {
        if (!std::isfinite(w->start) || w->start < 0.0) {
            throw ParameterError("random-walk start occupancy must be finite and >= 0");
        }
        if (!std::isfinite(w->step_sd) || w->step_sd < 0.0) {
            throw ParameterError("random-walk step std-dev must be finite and >= 0");
        }
        const std::uint64_t walk_key = rng::derive(seed, kStreamWalk);
        const double decay = std::exp(-p.inflow_m3s * p.sample_interval_s / p.volume_m3);
        double state = w->start;
        double level = 0.0;
        for (int i = 0; i < n; ++i) {
            double occ = w->floor_to_integer ? std::floor(state) : state;
            if (occ < 0.0) occ = 0.0;
            out.truth[static_cast<std::size_t>(i)] = occ;
            // Exact response over one interval of constant occupancy.
            level = level * decay + p.equilibrium_ppm(occ) * (1.0 - decay);
            out.y[static_cast<std::size_t>(i) + 1] = level;
            state += w->step_sd * rng::gaussian(walk_key, static_cast<std::uint64_t>(i));
        }
        double occ_end = w->floor_to_integer ? std::floor(state) : state;
        if (occ_end < 0.0) occ_end = 0.0;
        out.truth[static_cast<std::size_t>(n)] = occ_end;
    } else {
        const auto& h = std::get<HeterogeneousOccupancy>(profile);
        if (h.met_rates.empty()) {
            throw ParameterError("heterogeneous profile needs at least one occupant");
        }
        double total_ppm_rate = 0.0;
        for (double rate : h.met_rates) {
            if (!(rate >= 1.0 && rate <= 2.0)) {
                throw ParameterError("metabolic multiplier " + std::to_string(rate) +
                                     " outside [1, 2]");
            }
            total_ppm_rate += units::fraction_to_ppm(co2_generation_rate(
                h.dubois_area_m2, rate, h.respiratory_quotient));
        }
        const double gain = total_ppm_rate / p.inflow_m3s;
        const double decay = p.inflow_m3s / p.volume_m3;
        for (int i = 1; i <= n; ++i) {
            out.y[static_cast<std::size_t>(i)] =
                gain * (-std::expm1(-decay * p.sample_interval_s * i));
        }
        for (auto& t : out.truth) t = static_cast<double>(h.met_rates.size());
    }

    if (sigma_ppm > 0.0) {
        const std::uint64_t noise_key = rng::derive(seed, kStreamNoise);
        for (std::size_t i = 0; i < count; ++i) {
            out.y[i] += sigma_ppm * rng::gaussian(noise_key, i);
        }
    }
    return out;
}

} // namespace gasest
