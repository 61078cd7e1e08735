#pragma once

#include <cstddef>
#include <vector>

#include "gasest/model.hpp"

namespace gasest {

enum class Method { kMle, kRls, kMme };

struct Estimate {
    double occupants = 0.0;
    double inflow_m3s = 0.0;
    Method method = Method::kMle;
    int moment_order = 0;   // MME only
    int iterations = 0;     // MLE only
    bool converged = false;
};

// ---------------------------------------------------------------- maximum likelihood

// Damped Gauss-Newton fit of the growth curve to the samples at t = i*Ts
// (a t = 0 sample, if present, carries no information and is skipped).
// Starts from the method-of-moments solution, falling back to
// (N = 1, Q = M/T) when that fails. Throws EstimatorError when the
// Jacobian is degenerate or the damping loop cannot make progress.
Estimate mle_fit(const TimeSeries& obs, const ZoneParams& p);
Estimate mle_fit(const TimeSeries& obs, const ZoneParams& p,
                 double init_occupants, double init_inflow_m3s);

// ---------------------------------------------------------------- regression (GLS)

struct RlsResult {
    Estimate estimate;
    // Reported [(X' V^-1 X)^-1]_11 for the given noise level.
    double occupant_variance = 0.0;
};

// Generalised least squares on the difference equations
//   y_i - y_{i-1} = (Ts/M) * (c*N - Q*y_i) + (e_i - e_{i-1}),  i = 1..n,
// with the correlated-difference covariance sigma^2 * tridiag(-1, 2, -1)
// applied through its closed-form inverse. The Euler difference form maps the
// true parameters to (N, Q) * (e^L - 1)/L with L = Ts*Q/M, so the linear
// solution is passed through the exact inverse of that map before being
// returned; noise-free data then reproduces (N, Q) to machine precision.
// Requires a t = 0 sample and at least two intervals.
RlsResult rls_fit(const TimeSeries& obs, const ZoneParams& p, double sigma_ppm);

// Closed-form inverse of sigma^2 * tridiag(-1, 2, -1):
// entry (i, j), 1-based, i <= j, equals i*(n+1-j) / (sigma^2 * (n+1)).
std::vector<std::vector<double>> tridiag_inverse(int n, double sigma2);

// u' W v for the unscaled inverse-covariance kernel
// W_ij = min(i,j) * (n+1-max(i,j)) = sigma^2 * (n+1) * [V^-1]_ij,
// evaluated in O(n) with prefix/suffix sums.
double tridiag_weighted_quadform(const std::vector<double>& u,
                                 const std::vector<double>& v);

// Sample-by-sample version of rls_fit. Sufficient statistics are updated in
// O(1) per sample; the estimate after k samples equals rls_fit on the same
// k+1-sample prefix.
class RlsOnline {
public:
    RlsOnline(const ZoneParams& p, double sigma_ppm, double y0);

    void update(double y);

    std::size_t equation_count() const { return count_; }
    bool has_estimate() const;
    // Throws EstimatorError while underdetermined (fewer than two equations).
    RlsResult estimate() const;

private:
    ZoneParams p_;
    double sigma_ = 0.0;
    double last_y_ = 0.0;
    std::size_t count_ = 0;
    // Running sums for the closed-form quadratic forms over the base vectors
    // o (ones), y (right endpoints), d (first differences):
    //   m_uv = sum_{i,j<=k} min(i,j) u_i v_j,   t_u = sum_{i<=k} i u_i.
    double m_oo_ = 0, m_oy_ = 0, m_yy_ = 0, m_od_ = 0, m_yd_ = 0;
    double t_o_ = 0, t_y_ = 0, t_d_ = 0;
};

// ---------------------------------------------------------------- method of moments

// Trapezoidal integral of y^m over [0, T]. Series without a t = 0 sample are
// anchored with y(0) = 0 (above-background start).
double empirical_moment(const TimeSeries& obs, int m);

// Incremental trapezoid tracker for the first and the m-th moment integrals.
struct MomentAccumulator {
    int order = 2;
    double ts = 0.0;
    double y1 = 0.0;       // integral of y
    double ym = 0.0;       // integral of y^order
    std::size_t count = 0; // samples seen, including the t = 0 anchor
    double last_y = 0.0;

    MomentAccumulator(int m, double sample_interval_s, double y0);
    void absorb(double y);
    double duration_s() const { return ts * static_cast<double>(count - 1); }
};

// Normalised moment-ratio curve
//   G_m(r) = int_0^1 (1 - e^{-r z})^m dz / (int_0^1 (1 - e^{-r z}) dz)^m,
// strictly decreasing and convex on (0, inf), range (1, 2^m/(m+1)).
double g_function(int m, double air_changes);
double g_derivative(int m, double air_changes);

// Inverts g_function by safeguarded Newton on the bracket [1e-6, 100]
// (expanded geometrically when needed) to relative tolerance `tol`.
// Throws EstimatorError when rho is outside (1, 2^m/(m+1)).
double g_inverse(int m, double rho, double tol);

// Moment integral of the noise-free growth curve,
//   A_{m,T}(N, Q) = (c*N/Q)^m * T * int_0^1 (1 - e^{-r z})^m dz,  r = Q*T/M,
// and its partial derivative in Q. The partial in N is m/N * A_{m,T}.
double expected_moment(const ZoneParams& p, double occupants, double inflow_m3s,
                       double duration_s, int m);
double expected_moment_dq(const ZoneParams& p, double occupants, double inflow_m3s,
                          double duration_s, int m);

// Moment-ratio estimator of order m >= 2:
//   rho = T^{m-1} Ym / Y1^m,  r = G_m^{-1}(rho),  Q = M r / T,
//   N = Y1 / A_{1,T}(1, Q).
// Throws EstimatorError on degenerate data (Y1 <= 0) or rho out of range.
Estimate mme_fit(const TimeSeries& obs, const ZoneParams& p, int m);

// Sample-by-sample version of mme_fit; accumulation arithmetic is identical
// to the batch path, so prefixes agree exactly.
class MmeOnline {
public:
    MmeOnline(const ZoneParams& p, int m, double y0);

    void update(double y);

    bool has_estimate() const { return acc_.count >= 3; }
    // Throws EstimatorError while underdetermined or on degenerate moments.
    Estimate estimate() const;

private:
    ZoneParams p_;
    MomentAccumulator acc_;
};

} // namespace gasest
