#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "gasest/errors.hpp"
#include "gasest/estimators.hpp"
#include "gasest/units.hpp"

namespace gasest {

namespace {

double ipow(double x, int m) {
    double r = 1.0;
    for (int i = 0; i < m; ++i) r *= x;
    return r;
}

double binom(int m, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (m - k + i) / i;
    return r;
}

// phi(x) = (1 - e^{-x})/x, phi(0) = 1, and its derivative.
double phi(double x) {
    if (x == 0.0) return 1.0;
    return -std::expm1(-x) / x;
}

double phi_prime(double x) {
    if (x == 0.0) return -0.5;
    return (x * std::exp(-x) + std::expm1(-x)) / (x * x);
}

// Power-series coefficients of phi(u)^m; phi(u) = sum_j (-u)^j/(j+1)!.
// Used below the series/binomial switch where the alternating binomial sum
// for int_0^1 (1-e^{-rz})^m dz loses ~m*log10(1/r) digits to cancellation.
constexpr int kSeriesTerms = 36;
constexpr double kSeriesSwitch = 1.0;

const std::vector<double>& phi_power_coeffs(int m) {
    thread_local std::map<int, std::vector<double>> cache;
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;

    std::vector<double> base(kSeriesTerms);
    double fact = 1.0;
    for (int j = 0; j < kSeriesTerms; ++j) {
        fact *= (j + 1);
        base[j] = (j % 2 == 0 ? 1.0 : -1.0) / fact;
    }
    std::vector<double> coeffs = base;
    for (int pow_count = 2; pow_count <= m; ++pow_count) {
        std::vector<double> next(kSeriesTerms, 0.0);
        for (int a = 0; a < kSeriesTerms; ++a) {
            for (int b = 0; a + b < kSeriesTerms; ++b) {
                next[a + b] += coeffs[a] * base[b];
            }
        }
        coeffs = std::move(next);
    }
    return cache.emplace(m, std::move(coeffs)).first->second;
}

// curve_integral(m, r) = int_0^1 (1 - e^{-r z})^m dz and its r-derivative.
double curve_integral(int m, double r) {
    if (r <= kSeriesSwitch) {
        const auto& c = phi_power_coeffs(m);
        double sum = 0.0;
        double rj = 1.0;
        for (int j = 0; j < kSeriesTerms; ++j) {
            sum += c[j] * rj / (m + j + 1);
            rj *= r;
        }
        return ipow(r, m) * sum;
    }
    double sum = 0.0;
    for (int k = 0; k <= m; ++k) {
        const double term = binom(m, k) * phi(k * r);
        sum += (k % 2 == 0) ? term : -term;
    }
    return sum;
}

double curve_integral_dr(int m, double r) {
    if (r <= kSeriesSwitch) {
        const auto& c = phi_power_coeffs(m);
        double sum = 0.0;
        double rj = 1.0;
        for (int j = 0; j < kSeriesTerms; ++j) {
            sum += c[j] * (m + j) * rj / (m + j + 1);
            rj *= r;
        }
        return ipow(r, m - 1) * sum;
    }
    double sum = 0.0;
    for (int k = 1; k <= m; ++k) {
        const double term = binom(m, k) * k * phi_prime(k * r);
        sum += (k % 2 == 0) ? term : -term;
    }
    return sum;
}

void require_moment_order(int m) {
    if (m < 2 || m > 30) throw ParameterError("moment order must be in [2, 30]");
}

void require_air_changes(double r) {
    if (!std::isfinite(r) || r <= 0.0) {
        throw ParameterError("air-change argument must be positive and finite");
    }
}

struct Moments {
    double y1 = 0.0;
    double ym = 0.0;
    double duration = 0.0;
    std::size_t intervals = 0;
};

Estimate mme_from_moments(const ZoneParams& p, const Moments& mo, int m) {
    if (mo.intervals < 2) {
        throw EstimatorError("moment estimator is underdetermined with fewer than two intervals");
    }
    if (!(mo.y1 > 0.0)) {
        throw EstimatorError("degenerate data: first moment integral is not positive");
    }
    const double rho = ipow(mo.duration, m - 1) * mo.ym / ipow(mo.y1, m);
    const double r = g_inverse(m, rho, 1e-12);
    const double inflow = p.volume_m3 * r / mo.duration;

    // A_{1,T} for one occupant at the fitted inflow.
    const double unit_area = expected_moment(p, 1.0, inflow, mo.duration, 1);
    Estimate e;
    e.occupants = mo.y1 / unit_area;
    e.inflow_m3s = inflow;
    e.method = Method::kMme;
    e.moment_order = m;
    e.converged = true;
    return e;
}

} // namespace

double empirical_moment(const TimeSeries& obs, int m) {
    if (m < 1 || m > 30) throw ParameterError("moment order must be in [1, 30]");
    if (obs.y.empty()) throw ParameterError("empty series");
    if (!(obs.ts > 0.0)) throw ParameterError("series needs a positive sample interval");
    if (!obs.has_t0 && !obs.above_background) {
        throw ParameterError("raw series needs an explicit t = 0 sample");
    }
    double last = 0.0;
    std::size_t start = 0;
    if (obs.has_t0) {
        last = obs.y[0];
        start = 1;
    }
    double integral = 0.0;
    double last_pow = ipow(last, m);
    for (std::size_t i = start; i < obs.y.size(); ++i) {
        const double cur_pow = ipow(obs.y[i], m);
        integral += obs.ts * 0.5 * (last_pow + cur_pow);
        last_pow = cur_pow;
    }
    return integral;
}

MomentAccumulator::MomentAccumulator(int m, double sample_interval_s, double y0)
    : order(m), ts(sample_interval_s), last_y(y0) {
    require_moment_order(m);
    if (!(ts > 0.0)) throw ParameterError("sample interval must be positive");
    count = 1;
}

void MomentAccumulator::absorb(double y) {
    y1 += ts * 0.5 * (last_y + y);
    ym += ts * 0.5 * (ipow(last_y, order) + ipow(y, order));
    last_y = y;
    ++count;
}

double g_function(int m, double air_changes) {
    require_moment_order(m);
    require_air_changes(air_changes);
    const double num = curve_integral(m, air_changes);
    const double den = curve_integral(1, air_changes);
    return num / ipow(den, m);
}

double g_derivative(int m, double air_changes) {
    require_moment_order(m);
    require_air_changes(air_changes);
    const double im = curve_integral(m, air_changes);
    const double i1 = curve_integral(1, air_changes);
    const double im_dr = curve_integral_dr(m, air_changes);
    const double i1_dr = curve_integral_dr(1, air_changes);
    return (im_dr * i1 - m * im * i1_dr) / ipow(i1, m + 1);
}

double g_inverse(int m, double rho, double tol) {
    require_moment_order(m);
    if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");
    const double upper = ipow(2.0, m) / (m + 1);
    if (!std::isfinite(rho) || rho <= 1.0 || rho >= upper) {
        throw EstimatorError("moment ratio " + std::to_string(rho) +
                             " outside the invertible range (1, " +
                             std::to_string(upper) + ")");
    }

    double lo = 1e-6;
    double hi = 100.0;
    for (int i = 0; g_function(m, lo) <= rho; ++i) {
        if (i >= 8) throw EstimatorError("moment ratio too close to its small-r limit");
        lo *= 1e-3;
    }
    for (int i = 0; g_function(m, hi) >= rho; ++i) {
        if (i >= 8) throw EstimatorError("moment ratio too close to 1");
        hi *= 10.0;
    }

    double r = std::sqrt(lo * hi);
    if (r < lo || r > hi) r = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = g_function(m, r) - rho;
        if (f > 0.0) {
            lo = r;
        } else if (f < 0.0) {
            hi = r;
        } else {
            return r;
        }
        double next = r - f / g_derivative(m, r);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - r);
        r = next;
        if (step <= tol * r) break;
    }
    return r;
}

double expected_moment(const ZoneParams& p, double occupants, double inflow_m3s,
                       double duration_s, int m) {
    if (m < 1 || m > 30) throw ParameterError("moment order must be in [1, 30]");
    units::require_positive_finite(inflow_m3s, "inflow [m3/s]");
    units::require_positive_finite(duration_s, "duration [s]");
    const double r = inflow_m3s * duration_s / p.volume_m3;
    const double gain = p.generation_ppm() * occupants / inflow_m3s;
    return ipow(gain, m) * duration_s * curve_integral(m, r);
}

double expected_moment_dq(const ZoneParams& p, double occupants, double inflow_m3s,
                          double duration_s, int m) {
    if (m < 1 || m > 30) throw ParameterError("moment order must be in [1, 30]");
    units::require_positive_finite(inflow_m3s, "inflow [m3/s]");
    units::require_positive_finite(duration_s, "duration [s]");
    const double r = inflow_m3s * duration_s / p.volume_m3;
    const double gain = p.generation_ppm() * occupants / inflow_m3s;
    const double value = ipow(gain, m) * duration_s * curve_integral(m, r);
    const double shape = ipow(gain, m) * duration_s * curve_integral_dr(m, r) *
                         duration_s / p.volume_m3;
    return -m / inflow_m3s * value + shape;
}

Estimate mme_fit(const TimeSeries& obs, const ZoneParams& p, int m) {
    require_moment_order(m);
    p.validate();
    Moments mo;
    mo.y1 = empirical_moment(obs, 1);
    mo.ym = empirical_moment(obs, m);
    mo.duration = obs.duration_s();
    mo.intervals = obs.interval_count();
    return mme_from_moments(p, mo, m);
}

MmeOnline::MmeOnline(const ZoneParams& p, int m, double y0)
    : p_(p), acc_(m, p.sample_interval_s, y0) {
    p_.validate();
}

void MmeOnline::update(double y) { acc_.absorb(y); }

Estimate MmeOnline::estimate() const {
    Moments mo;
    mo.y1 = acc_.y1;
    mo.ym = acc_.ym;
    mo.duration = acc_.duration_s();
    mo.intervals = acc_.count - 1;
    return mme_from_moments(p_, mo, acc_.order);
}

} // namespace gasest
