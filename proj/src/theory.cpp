#include "gasest/theory.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "gasest/errors.hpp"
#include "gasest/units.hpp"

namespace gasest {

namespace {

constexpr std::array<double, 3> kCrlbCoeffs = {2.0 / 3.0, 377.0 / 945.0,
                                               2411.0 / 11340.0};
constexpr std::array<double, 3> kRlsCoeffs = {3.0 / 8.0, 169.0 / 1120.0,
                                              57.0 / 1120.0};
constexpr std::array<double, 3> kMme2Coeffs = {24.0 / 35.0, 11.0 / 25.0,
                                               1581.0 / 6125.0};

void require_theory_inputs(const ZoneParams& p, double inflow_m3s, int n,
                           double sigma_ppm) {
    p.validate();
    units::require_positive_finite(inflow_m3s, "inflow [m3/s]");
    units::require_positive_finite(sigma_ppm, "noise sigma [ppm]");
    if (n < 2) throw ParameterError("window must cover at least two samples");
}

double expansion_series(const std::array<double, 3>& coeffs, double k, int order) {
    if (order < 1 || order > 3) {
        throw ParameterError("expansion order must be 1, 2 or 3");
    }
    double sum = 1.0;
    double k_pow = 1.0;
    double factorial = 1.0;
    for (int j = 1; j <= order; ++j) {
        k_pow *= k;
        factorial *= j;
        sum += coeffs[static_cast<std::size_t>(j - 1)] * k_pow / factorial;
    }
    return sum;
}

} // namespace

double air_changes(const ZoneParams& p, double inflow_m3s, int n) {
    return inflow_m3s * n * p.sample_interval_s / p.volume_m3;
}

double variance_unit(const ZoneParams& p, int n, double sigma_ppm) {
    const double duration = n * p.sample_interval_s;
    const double c = p.generation_ppm();
    return sigma_ppm * sigma_ppm * p.sample_interval_s * p.volume_m3 * p.volume_m3 /
           (duration * duration * duration * c * c);
}

Matrix2 fisher_information(const ZoneParams& p, double occupants,
                           double inflow_m3s, int n, double sigma_ppm) {
    require_theory_inputs(p, inflow_m3s, n, sigma_ppm);
    Matrix2 info;
    for (int i = 1; i <= n; ++i) {
        const GrowthGradient g =
            growth_gradient(p, occupants, inflow_m3s, i * p.sample_interval_s);
        info.a11 += g.d_occupants * g.d_occupants;
        info.a12 += g.d_occupants * g.d_inflow;
        info.a22 += g.d_inflow * g.d_inflow;
    }
    const double inv_var = 1.0 / (sigma_ppm * sigma_ppm);
    info.a11 *= inv_var;
    info.a12 *= inv_var;
    info.a22 *= inv_var;
    return info;
}

double crlb_exact(const ZoneParams& p, double occupants, double inflow_m3s,
                  int n, double sigma_ppm) {
    const Matrix2 info = fisher_information(p, occupants, inflow_m3s, n, sigma_ppm);
    const double det = info.a11 * info.a22 - info.a12 * info.a12;
    if (!(det > 0.0)) {
        throw EstimatorError("Fisher information is singular for this configuration");
    }
    return info.a22 / det;
}

double crlb_expansion(const ZoneParams& p, double inflow_m3s, int n,
                      double sigma_ppm, int order) {
    require_theory_inputs(p, inflow_m3s, n, sigma_ppm);
    const double k = air_changes(p, inflow_m3s, n);
    return 48.0 * variance_unit(p, n, sigma_ppm) * expansion_series(kCrlbCoeffs, k, order);
}

double rls_variance_exact(const ZoneParams& p, double occupants,
                          double inflow_m3s, int n, double sigma_ppm) {
    require_theory_inputs(p, inflow_m3s, n, sigma_ppm);
    std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
    std::vector<double> level(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        level[static_cast<std::size_t>(i - 1)] =
            growth_value(p, occupants, inflow_m3s, i * p.sample_interval_s);
    }
    const double s = p.sample_interval_s / p.volume_m3;
    const double c = p.generation_ppm();
    const double scale = 1.0 / (sigma_ppm * sigma_ppm * (n + 1));
    const double a11 = s * s * c * c * tridiag_weighted_quadform(ones, ones) * scale;
    const double a12 = -s * s * c * tridiag_weighted_quadform(ones, level) * scale;
    const double a22 = s * s * tridiag_weighted_quadform(level, level) * scale;
    const double det = a11 * a22 - a12 * a12;
    if (!(det > 0.0)) {
        throw EstimatorError("difference-regression information is singular");
    }
    return a22 / det;
}

double rls_variance_expansion(const ZoneParams& p, double inflow_m3s, int n,
                              double sigma_ppm, int order) {
    require_theory_inputs(p, inflow_m3s, n, sigma_ppm);
    const double k = air_changes(p, inflow_m3s, n);
    return 192.0 * variance_unit(p, n, sigma_ppm) * expansion_series(kRlsCoeffs, k, order);
}

double mme_variance_factor(int m) {
    if (m < 2 || m > 30) throw ParameterError("moment order must be in [2, 30]");
    const double md = m;
    return 4.0 * (md + 1.0) * (md + 1.0) * (12.0 + md) / (md * (2.0 * md - 1.0));
}

double mme_variance_exact(const ZoneParams& p, double occupants,
                          double inflow_m3s, int n, double sigma_ppm, int m) {
    require_theory_inputs(p, inflow_m3s, n, sigma_ppm);
    if (m < 2 || m > 30) throw ParameterError("moment order must be in [2, 30]");
    units::require_positive_finite(occupants, "occupancy");
    const double ts = p.sample_interval_s;
    const double duration = n * ts;

    // H = [dA/d(N, Q)]^-1, first row.
    const double a1 = expected_moment(p, occupants, inflow_m3s, duration, 1);
    const double am = expected_moment(p, occupants, inflow_m3s, duration, m);
    const double d11 = a1 / occupants;               // dA1/dN
    const double d12 = expected_moment_dq(p, occupants, inflow_m3s, duration, 1);
    const double d21 = m * am / occupants;           // dAm/dN
    const double d22 = expected_moment_dq(p, occupants, inflow_m3s, duration, m);
    const double det = d11 * d22 - d12 * d21;
    if (!(std::abs(det) > 0.0)) {
        throw EstimatorError("moment map is singular for this configuration");
    }
    const double h11 = d22 / det;
    const double h12 = -d12 / det;

    double sum_m1 = 0.0;    // sum a_i^{m-1}
    double sum_2m2 = 0.0;   // sum a_i^{2m-2}
    for (int i = 1; i <= n; ++i) {
        const double a = growth_value(p, occupants, inflow_m3s, i * ts);
        double pw = 1.0;
        for (int j = 0; j < m - 1; ++j) pw *= a;
        sum_m1 += pw;
        sum_2m2 += pw * pw;
    }
    const double noise = sigma_ppm * sigma_ppm * ts * ts;
    const double s11 = noise * n;
    const double s12 = noise * m * sum_m1;
    const double s22 = noise * m * m * sum_2m2;

    return h11 * h11 * s11 + 2.0 * h11 * h12 * s12 + h12 * h12 * s22;
}

double mme_variance_expansion(const ZoneParams& p, double inflow_m3s, int n,
                              double sigma_ppm, int order) {
    require_theory_inputs(p, inflow_m3s, n, sigma_ppm);
    const double k = air_changes(p, inflow_m3s, n);
    return mme_variance_factor(2) * variance_unit(p, n, sigma_ppm) *
           expansion_series(kMme2Coeffs, k, order);
}

double sample_count_ratio(double factor_a, double factor_b) {
    units::require_positive_finite(factor_a, "variance factor");
    units::require_positive_finite(factor_b, "variance factor");
    return std::cbrt(factor_a / factor_b);
}

double sensor_count_ratio(double factor_a, double factor_b) {
    units::require_positive_finite(factor_a, "variance factor");
    units::require_positive_finite(factor_b, "variance factor");
    return factor_a / factor_b;
}

ResourceRatios resource_ratios() {
    ResourceRatios r;
    r.sample_ratio = sample_count_ratio(192.0, mme_variance_factor(2));
    r.sensor_ratio = sensor_count_ratio(192.0, mme_variance_factor(2));
    return r;
}

VarianceReport variance_report(const ZoneParams& p, Method method, int moment_order,
                               double occupants, double inflow_m3s, int n,
                               double sigma_ppm, int expansion_order) {
    VarianceReport rep;
    rep.method = method;
    rep.air_changes = air_changes(p, inflow_m3s, n);
    switch (method) {
        case Method::kMle:
            rep.variance_exact = crlb_exact(p, occupants, inflow_m3s, n, sigma_ppm);
            rep.variance_expansion =
                crlb_expansion(p, inflow_m3s, n, sigma_ppm, expansion_order);
            break;
        case Method::kRls:
            rep.variance_exact =
                rls_variance_exact(p, occupants, inflow_m3s, n, sigma_ppm);
            rep.variance_expansion =
                rls_variance_expansion(p, inflow_m3s, n, sigma_ppm, expansion_order);
            break;
        case Method::kMme:
            rep.moment_order = moment_order;
            rep.variance_exact =
                mme_variance_exact(p, occupants, inflow_m3s, n, sigma_ppm, moment_order);
            rep.variance_expansion =
                moment_order == 2
                    ? mme_variance_expansion(p, inflow_m3s, n, sigma_ppm, expansion_order)
                    : std::numeric_limits<double>::quiet_NaN();
            break;
    }
    const double unit = variance_unit(p, n, sigma_ppm);
    rep.factor_exact = rep.variance_exact / unit;
    rep.factor_expansion = rep.variance_expansion / unit;
    return rep;
}

} // namespace gasest
