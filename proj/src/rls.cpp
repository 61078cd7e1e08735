#include <cmath>
#include <vector>

#include "gasest/errors.hpp"
#include "gasest/estimators.hpp"

namespace gasest {

// u'Wv = sum_i u_i [ (n+1-i) * sum_{j<=i} j v_j  +  i * sum_{j>i} (n+1-j) v_j ].
double tridiag_weighted_quadform(const std::vector<double>& u,
                                 const std::vector<double>& v) {
    const std::size_t n = u.size();
    if (v.size() != n) throw ParameterError("quadratic form needs equal-length vectors");
    std::vector<double> suffix(n + 1, 0.0);
    for (std::size_t j = n; j >= 1; --j) {
        suffix[j - 1] = suffix[j] + static_cast<double>(n + 1 - j) * v[j - 1];
    }
    double prefix = 0.0;
    double total = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        prefix += static_cast<double>(i) * v[i - 1];
        total += u[i - 1] * (static_cast<double>(n + 1 - i) * prefix +
                             static_cast<double>(i) * suffix[i]);
    }
    return total;
}

namespace {

struct NormalEq {
    // X'V^-1X (unit sigma) and X'V^-1Y for theta = [N, Q]'.
    double a11 = 0, a12 = 0, a22 = 0;
    double b1 = 0, b2 = 0;
    std::size_t n = 0;
};

RlsResult solve_difference_gls(const NormalEq& eq, const ZoneParams& p,
                               double sigma_ppm) {
    if (eq.n < 2) {
        throw EstimatorError("difference regression is underdetermined with fewer than two equations");
    }
    const double det = eq.a11 * eq.a22 - eq.a12 * eq.a12;
    if (!(det > 1e-12 * std::abs(eq.a11 * eq.a22))) {
        throw EstimatorError("singular normal equations (samples carry no transient)");
    }
    const double n_lin = (eq.a22 * eq.b1 - eq.a12 * eq.b2) / det;
    const double q_lin = (eq.a11 * eq.b2 - eq.a12 * eq.b1) / det;

    // The Euler difference form represents the exact exponential response at
    // (N, Q) * (e^L - 1)/L, L = Ts*Q/M; undo that map exactly.  The map is
    // invertible for any L > -1; a heavily noised fit can land below zero, in
    // which case the estimate is still reported but flagged as unconverged.
    const double l_lin = p.sample_interval_s * q_lin / p.volume_m3;
    if (!(l_lin > -1.0)) {
        throw EstimatorError("difference regression left the invertible decay range");
    }
    const double shrink = l_lin == 0.0 ? 1.0 : std::log1p(l_lin) / l_lin;

    RlsResult out;
    out.estimate.occupants = n_lin * shrink;
    out.estimate.inflow_m3s = q_lin * shrink;
    out.estimate.method = Method::kRls;
    out.estimate.converged = q_lin > 0.0 && std::isfinite(out.estimate.occupants);
    out.occupant_variance = sigma_ppm * sigma_ppm * eq.a22 / det;
    return out;
}

} // namespace

RlsResult rls_fit(const TimeSeries& obs, const ZoneParams& p, double sigma_ppm) {
    p.validate();
    if (!std::isfinite(sigma_ppm) || sigma_ppm < 0.0) {
        throw ParameterError("noise sigma [ppm] must be finite and >= 0");
    }
    if (!obs.has_t0) {
        throw EstimatorError("difference regression needs the t = 0 sample");
    }
    const std::size_t n = obs.interval_count();
    if (n < 2) {
        throw EstimatorError("difference regression is underdetermined with fewer than two equations");
    }

    std::vector<double> ones(n, 1.0);
    std::vector<double> right(n);
    std::vector<double> diff(n);
    for (std::size_t i = 1; i <= n; ++i) {
        right[i - 1] = obs.y[i];
        diff[i - 1] = obs.y[i] - obs.y[i - 1];
    }

    const double s = p.sample_interval_s / p.volume_m3;
    const double c = p.generation_ppm();
    const double scale = 1.0 / static_cast<double>(n + 1);

    NormalEq eq;
    eq.n = n;
    eq.a11 = s * s * c * c * tridiag_weighted_quadform(ones, ones) * scale;
    eq.a12 = -s * s * c * tridiag_weighted_quadform(ones, right) * scale;
    eq.a22 = s * s * tridiag_weighted_quadform(right, right) * scale;
    eq.b1 = s * c * tridiag_weighted_quadform(ones, diff) * scale;
    eq.b2 = -s * tridiag_weighted_quadform(right, diff) * scale;
    return solve_difference_gls(eq, p, sigma_ppm);
}

std::vector<std::vector<double>> tridiag_inverse(int n, double sigma2) {
    if (n < 1) throw ParameterError("matrix dimension must be >= 1");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw ParameterError("noise variance must be positive and finite");
    }
    std::vector<std::vector<double>> inv(static_cast<std::size_t>(n),
                                         std::vector<double>(static_cast<std::size_t>(n)));
    const double scale = 1.0 / (sigma2 * (n + 1));
    for (int i = 1; i <= n; ++i) {
        for (int j = i; j <= n; ++j) {
            const double value = static_cast<double>(i) * (n + 1 - j) * scale;
            inv[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] = value;
            inv[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(i - 1)] = value;
        }
    }
    return inv;
}

RlsOnline::RlsOnline(const ZoneParams& p, double sigma_ppm, double y0)
    : p_(p), sigma_(sigma_ppm), last_y_(y0) {
    p_.validate();
    if (!std::isfinite(sigma_ppm) || sigma_ppm < 0.0) {
        throw ParameterError("noise sigma [ppm] must be finite and >= 0");
    }
}

void RlsOnline::update(double y) {
    const double k = static_cast<double>(++count_);
    const double d = y - last_y_;
    last_y_ = y;

    // m_uv gains v_k * t_u + u_k * t_v + k * u_k * v_k for each tracked pair.
    m_oo_ += t_o_ + t_o_ + k;
    m_oy_ += y * t_o_ + t_y_ + k * y;
    m_yy_ += y * t_y_ + y * t_y_ + k * y * y;
    m_od_ += d * t_o_ + t_d_ + k * d;
    m_yd_ += d * t_y_ + y * t_d_ + k * y * d;

    t_o_ += k;
    t_y_ += k * y;
    t_d_ += k * d;
}

bool RlsOnline::has_estimate() const {
    if (count_ < 2) return false;
    try {
        estimate();
        return true;
    } catch (const EstimatorError&) {
        return false;
    }
}

RlsResult RlsOnline::estimate() const {
    const double n1 = static_cast<double>(count_ + 1);
    const double s = p_.sample_interval_s / p_.volume_m3;
    const double c = p_.generation_ppm();

    // u'Wv = (n+1) * m_uv - t_u * t_v; the common 1/(n+1) scale follows.
    const double w_oo = n1 * m_oo_ - t_o_ * t_o_;
    const double w_oy = n1 * m_oy_ - t_o_ * t_y_;
    const double w_yy = n1 * m_yy_ - t_y_ * t_y_;
    const double w_od = n1 * m_od_ - t_o_ * t_d_;
    const double w_yd = n1 * m_yd_ - t_y_ * t_d_;

    NormalEq eq;
    eq.n = count_;
    eq.a11 = s * s * c * c * w_oo / n1;
    eq.a12 = -s * s * c * w_oy / n1;
    eq.a22 = s * s * w_yy / n1;
    eq.b1 = s * c * w_od / n1;
    eq.b2 = -s * w_yd / n1;
    return solve_difference_gls(eq, p_, sigma_);
}

} // namespace gasest
