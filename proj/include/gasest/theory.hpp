#pragma once

#include "gasest/estimators.hpp"
#include "gasest/model.hpp"

namespace gasest {

struct Matrix2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a22 = 0.0;   // symmetric
};

// Transient depth of an n-sample window: K = Q * n * Ts / M
// (air changes delivered over the observation window).
double air_changes(const ZoneParams& p, double inflow_m3s, int n);

// sigma^2 * Ts * M^2 / (T^3 * c^2): the common scale of every small-K
// variance law; normalised factors below are variance / this unit.
double variance_unit(const ZoneParams& p, int n, double sigma_ppm);

// Fisher information of (N, Q) from n Gaussian samples of the growth curve.
Matrix2 fisher_information(const ZoneParams& p, double occupants,
                           double inflow_m3s, int n, double sigma_ppm);

// Lower bound on Var(N_hat): [I^-1]_11.
double crlb_exact(const ZoneParams& p, double occupants, double inflow_m3s,
                  int n, double sigma_ppm);

// 48 * variance_unit * (1 + a1 K + a2 K^2/2! + a3 K^3/3!) truncated at order j.
double crlb_expansion(const ZoneParams& p, double inflow_m3s, int n,
                      double sigma_ppm, int order);

// Var(N_hat) of the difference-equation GLS with exact regressors:
// [(X' V^-1 X)^-1]_11 where X rows are (Ts/M)[c, -a_i].
double rls_variance_exact(const ZoneParams& p, double occupants,
                          double inflow_m3s, int n, double sigma_ppm);

// 192 * variance_unit * (1 + b1 K + b2 K^2/2! + b3 K^3/3!) truncated at order j.
double rls_variance_expansion(const ZoneParams& p, double inflow_m3s, int n,
                              double sigma_ppm, int order);

// Small-K leading factor of the order-m moment estimator:
// 4 * (m+1)^2 * (12+m) / (m * (2m-1)).  84 at m=2, 64 at m=3.
double mme_variance_factor(int m);

// Delta-method Var(N_hat) of the order-m moment estimator: H Sigma H' with
// H = [dA/d(N,Q)]^-1 and Sigma the exact-sum covariance of (Y1, Ym):
//   Var(Y1) = Ts^2 n sigma^2,
//   Var(Ym) = Ts^2 m^2 sigma^2 sum a_i^{2m-2},
//   Cov     = Ts^2 m sigma^2 sum a_i^{m-1}.
double mme_variance_exact(const ZoneParams& p, double occupants,
                          double inflow_m3s, int n, double sigma_ppm, int m);

// 84 * variance_unit * (1 + c1 K + c2 K^2/2! + c3 K^3/3!) truncated at order j
// (order-2 moment estimator).
double mme_variance_expansion(const ZoneParams& p, double inflow_m3s, int n,
                              double sigma_ppm, int order);

// Sampling-resource tradeoffs between two estimators with small-K leading
// factors fa and fb: equal-variance sample-count ratio (fa/fb)^(1/3) via the
// T^3 scale, equal-variance sensor-count ratio fa/fb via 1/L averaging.
double sample_count_ratio(double factor_a, double factor_b);
double sensor_count_ratio(double factor_a, double factor_b);

struct ResourceRatios {
    double sample_ratio = 0.0;   // RLS vs order-2 moment estimator
    double sensor_ratio = 0.0;
};

ResourceRatios resource_ratios();

struct VarianceReport {
    Method method = Method::kMle;   // kMle reports the CRLB
    int moment_order = 0;
    double air_changes = 0.0;
    double variance_exact = 0.0;
    double variance_expansion = 0.0;
    double factor_exact = 0.0;       // variance_exact / variance_unit
    double factor_expansion = 0.0;
};

VarianceReport variance_report(const ZoneParams& p, Method method, int moment_order,
                               double occupants, double inflow_m3s, int n,
                               double sigma_ppm, int expansion_order);

} // namespace gasest
