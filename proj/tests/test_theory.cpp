#include <doctest.h>

#include <cmath>
#include <gasest/errors.hpp>
#include <gasest/model.hpp>
#include <gasest/theory.hpp>
#include <gasest/units.hpp>
#include <vector>

#include "oracles.hpp"

using namespace gasest;
using gasest::units::cfm_to_m3s;
using gasest::units::cuft_to_m3;
using gasest::units::slpm_to_m3s;

namespace {

ZoneParams chamber_zone() {
  ZoneParams p;
  p.volume_m3 = cuft_to_m3(780.0);
  p.inflow_m3s = cfm_to_m3s(28.0);
  p.generation_m3s = slpm_to_m3s(0.42);
  p.background_ppm = 392.0;
  p.sample_interval_s = 20.0;
  return p;
}

ZoneParams scaled_zone(double k, int n) {
  ZoneParams p = chamber_zone();
  p.inflow_m3s = k * p.volume_m3 / (n * p.sample_interval_s);
  return p;
}

}  // namespace

TEST_CASE("window depth and variance scale") {
  const ZoneParams p = chamber_zone();
  CHECK(air_changes(p, p.inflow_m3s, 50) ==
        doctest::Approx(0.59829059829059827).epsilon(1e-12));
  CHECK(variance_unit(p, 50, 10.0) ==
        doctest::Approx(1.9911908917412339e-5).epsilon(1e-12));
  // sigma enters squared, exactly.
  CHECK(variance_unit(p, 50, 20.0) ==
        doctest::Approx(4.0 * variance_unit(p, 50, 10.0)).epsilon(1e-15));
}

TEST_CASE("information matrix: structure, differences, noise scaling") {
  const ZoneParams p = chamber_zone();
  const double q = p.inflow_m3s;
  const double sigma = 10.0;
  const int n = 40;

  // With zero sources the flow column carries no information.
  const Matrix2 empty = fisher_information(p, 0.0, q, n, sigma);
  CHECK(empty.a11 > 0.0);
  CHECK(empty.a12 == 0.0);
  CHECK(empty.a22 == 0.0);

  // Entries are the noise-scaled sums of products of sensitivity curves.
  const Matrix2 info = fisher_information(p, 2.0, q, n, sigma);
  double s11 = 0, s12 = 0, s22 = 0;
  for (int i = 1; i <= n; ++i) {
    const double t = p.sample_interval_s * i;
    const double dn = oracle::central_diff(
        [&](double occ) { return growth_value(p, occ, q, t); }, 2.0, 1e-5);
    const double dq = oracle::central_diff(
        [&](double x) { return growth_value(p, 2.0, x, t); }, q, q * 1e-6);
    s11 += dn * dn;
    s12 += dn * dq;
    s22 += dq * dq;
  }
  const double inv_noise = 1.0 / (sigma * sigma);
  CHECK(info.a11 == doctest::Approx(s11 * inv_noise).epsilon(1e-6));
  CHECK(info.a12 == doctest::Approx(s12 * inv_noise).epsilon(1e-6));
  CHECK(info.a22 == doctest::Approx(s22 * inv_noise).epsilon(1e-6));

  const Matrix2 loud = fisher_information(p, 2.0, q, n, 2.0 * sigma);
  CHECK(loud.a11 == doctest::Approx(0.25 * info.a11).epsilon(1e-15));
  CHECK(loud.a22 == doctest::Approx(0.25 * info.a22).epsilon(1e-15));
}

TEST_CASE("information bound: frozen value, limits, noise scaling") {
  const ZoneParams p = chamber_zone();
  const int n = 50;
  const double sigma = 10.0;
  const double unit = variance_unit(p, n, sigma);
  const double v = crlb_exact(p, 1.0, p.inflow_m3s, n, sigma);
  CHECK(v / unit == doctest::Approx(69.16950803947023).epsilon(1e-9));
  // The exact bound sits between its leading term and the cubic expansion.
  const double cubic = crlb_expansion(p, p.inflow_m3s, n, sigma, 3);
  CHECK(v > 48.0 * unit);
  CHECK(v < cubic);
  CHECK(std::abs(v / cubic - 1.0) < 0.03);
  // Shallow window: the factor collapses to its leading constant.
  const ZoneParams shallow = scaled_zone(0.05, 200);
  const double f0 = crlb_exact(shallow, 1.0, shallow.inflow_m3s, 200, sigma) /
                    variance_unit(shallow, 200, sigma);
  CHECK(std::abs(f0 / 48.0 - 1.0) < 0.05);
  // Quadratic in sigma, exactly.
  CHECK(crlb_exact(p, 1.0, p.inflow_m3s, n, 2.0 * sigma) ==
        doctest::Approx(4.0 * v).epsilon(1e-12));
}

TEST_CASE("cubic expansions at frozen operating points") {
  const int n = 1000;
  const double sigma = 10.0;
  {
    const ZoneParams p = scaled_zone(1e-9, n);
    const double unit = variance_unit(p, n, sigma);
    CHECK(crlb_expansion(p, p.inflow_m3s, n, sigma, 3) / unit ==
          doctest::Approx(48.0).epsilon(1e-8));
    CHECK(rls_variance_expansion(p, p.inflow_m3s, n, sigma, 3) / unit ==
          doctest::Approx(192.0).epsilon(1e-8));
    CHECK(mme_variance_expansion(p, p.inflow_m3s, n, sigma, 3) / unit ==
          doctest::Approx(84.0).epsilon(1e-8));
  }
  {
    const ZoneParams p = scaled_zone(0.5, n);
    const double unit = variance_unit(p, n, sigma);
    CHECK(crlb_expansion(p, p.inflow_m3s, n, sigma, 3) / unit ==
          doctest::Approx(66.606261022927683).epsilon(1e-12));
    CHECK(mme_variance_expansion(p, p.inflow_m3s, n, sigma, 3) / unit ==
          doctest::Approx(117.87171428571429).epsilon(1e-12));
    // Truncation orders nest monotonically on a growing curve.
    const double j1 = crlb_expansion(p, p.inflow_m3s, n, sigma, 1);
    const double j2 = crlb_expansion(p, p.inflow_m3s, n, sigma, 2);
    const double j3 = crlb_expansion(p, p.inflow_m3s, n, sigma, 3);
    CHECK(j1 < j2);
    CHECK(j2 < j3);
    CHECK_THROWS_AS(crlb_expansion(p, p.inflow_m3s, n, sigma, 4), ParameterError);
  }
  {
    const ZoneParams p = scaled_zone(1.0, n);
    const double unit = variance_unit(p, n, sigma);
    CHECK(rls_variance_expansion(p, p.inflow_m3s, n, sigma, 3) / unit ==
          doctest::Approx(280.11428571428571).epsilon(1e-12));
  }
}

TEST_CASE("exact factors reproduce the cubic coefficients on a shallow sweep") {
  // Fit factor(K)/F0 - 1 over K in [0.01, 0.3] with a quartic and recover the
  // first three series coefficients to 1%.
  const int n = 20000;
  const double sigma = 10.0;
  struct Series {
    double leading;
    std::vector<double> coeffs;  // factorial convention
    std::function<double(const ZoneParams&, int)> factor;
  };
  const std::vector<Series> all = {
      {48.0,
       {2.0 / 3.0, 377.0 / 945.0, 2411.0 / 11340.0},
       [&](const ZoneParams& p, int nn) {
         return crlb_exact(p, 1.0, p.inflow_m3s, nn, sigma) /
                variance_unit(p, nn, sigma);
       }},
      {192.0,
       {3.0 / 8.0, 169.0 / 1120.0, 57.0 / 1120.0},
       [&](const ZoneParams& p, int nn) {
         return rls_variance_exact(p, 1.0, p.inflow_m3s, nn, sigma) /
                variance_unit(p, nn, sigma);
       }},
      {84.0,
       {24.0 / 35.0, 11.0 / 25.0, 1581.0 / 6125.0},
       [&](const ZoneParams& p, int nn) {
         return mme_variance_exact(p, 1.0, p.inflow_m3s, nn, sigma, 2) /
                variance_unit(p, nn, sigma);
       }}};
  for (const auto& s : all) {
    std::vector<double> ks, excess;
    for (int i = 0; i < 30; ++i) {
      const double k = 0.01 + (0.3 - 0.01) * i / 29.0;
      const ZoneParams p = scaled_zone(k, n);
      ks.push_back(k);
      excess.push_back(s.factor(p, n) / s.leading - 1.0);
    }
    const auto poly = oracle::polyfit(ks, excess, 4);
    double factorial = 1.0;
    for (int j = 1; j <= 3; ++j) {
      factorial *= j;
      const double fitted = poly[std::size_t(j)] * factorial;
      CHECK(std::abs(fitted / s.coeffs[std::size_t(j - 1)] - 1.0) < 0.01);
    }
  }
}

TEST_CASE("regression variance: frozen value and shallow limit") {
  const ZoneParams p = chamber_zone();
  const int n = 50;
  const double sigma = 10.0;
  CHECK(rls_variance_exact(p, 1.0, p.inflow_m3s, n, sigma) /
            variance_unit(p, n, sigma) ==
        doctest::Approx(228.221010006296).epsilon(1e-10));
  const ZoneParams shallow = scaled_zone(0.05, 200);
  const double f0 =
      rls_variance_exact(shallow, 1.0, shallow.inflow_m3s, 200, sigma) /
      variance_unit(shallow, 200, sigma);
  CHECK(std::abs(f0 / 192.0 - 1.0) < 0.05);
}

TEST_CASE("moment variance: leading factors by order") {
  CHECK(mme_variance_factor(2) == doctest::Approx(84.0).epsilon(1e-15));
  CHECK(mme_variance_factor(3) == doctest::Approx(64.0).epsilon(1e-15));
  CHECK(mme_variance_factor(6) == doctest::Approx(3528.0 / 66.0).epsilon(1e-15));
  CHECK(std::abs(mme_variance_factor(6) - 53.45) < 0.01);
  CHECK_THROWS_AS(mme_variance_factor(1), ParameterError);
  // The factor dips to its minimum near order six and climbs back up.
  for (int m = 3; m <= 6; ++m) {
    CHECK(mme_variance_factor(m) < mme_variance_factor(m - 1));
  }
  for (int m = 8; m <= 12; ++m) {
    CHECK(mme_variance_factor(m) > mme_variance_factor(m - 1));
  }
}

TEST_CASE("moment variance: frozen value and shallow limits by order") {
  const ZoneParams p = chamber_zone();
  const int n = 50;
  const double sigma = 10.0;
  CHECK(mme_variance_exact(p, 1.0, p.inflow_m3s, n, sigma, 2) /
            variance_unit(p, n, sigma) ==
        doctest::Approx(120.79511373804324).epsilon(1e-9));
  const int sn = 200;
  const ZoneParams shallow = scaled_zone(0.05, sn);
  const double unit = variance_unit(shallow, sn, sigma);
  for (int m : {2, 3, 6}) {
    const double f =
        mme_variance_exact(shallow, 1.0, shallow.inflow_m3s, sn, sigma, m) / unit;
    CHECK(std::abs(f / mme_variance_factor(m) - 1.0) < 0.05);
  }
}

TEST_CASE("excess variance grows like the fourth power of window depth") {
  // Continuum-extrapolated factors (Richardson in n) isolate the K-dependence
  // from the finite-sample correction.
  const double sigma = 10.0;
  const int n0 = 100000;
  auto extrapolate = [&](auto&& factor_at) {
    return [&, factor_at](double k) {
      return 2.0 * factor_at(k, 2 * n0) - factor_at(k, n0);
    };
  };
  // Excess beyond the full cubic expansion, in factor units.
  auto crlb_at = [&](double k, int n) {
    const ZoneParams p = scaled_zone(k, n);
    return (crlb_exact(p, 1.0, p.inflow_m3s, n, sigma) -
            crlb_expansion(p, p.inflow_m3s, n, sigma, 3)) /
           variance_unit(p, n, sigma);
  };
  auto rls_at = [&](double k, int n) {
    const ZoneParams p = scaled_zone(k, n);
    return (rls_variance_exact(p, 1.0, p.inflow_m3s, n, sigma) -
            rls_variance_expansion(p, p.inflow_m3s, n, sigma, 3)) /
           variance_unit(p, n, sigma);
  };
  auto mme_at = [&](double k, int n) {
    const ZoneParams p = scaled_zone(k, n);
    return (mme_variance_exact(p, 1.0, p.inflow_m3s, n, sigma, 2) -
            mme_variance_expansion(p, p.inflow_m3s, n, sigma, 3)) /
           variance_unit(p, n, sigma);
  };
  const auto crlb_cont = extrapolate(crlb_at);
  const auto rls_cont = extrapolate(rls_at);
  const auto mme_cont = extrapolate(mme_at);
  CHECK(oracle::loglog_slope(crlb_cont, 0.05, 0.4, 5) > 3.8);
  CHECK(oracle::loglog_slope(crlb_cont, 0.15, 0.4, 5) > 3.7);
  CHECK(oracle::loglog_slope(rls_cont, 0.15, 0.4, 5) > 3.7);
  CHECK(oracle::loglog_slope(mme_cont, 0.15, 0.4, 5) > 3.7);
}

TEST_CASE("bound stays below both estimators across the depth range") {
  const double sigma = 10.0;
  const int n = 50;
  for (int i = 1; i <= 25; ++i) {
    const double k = 0.1 * i;
    const ZoneParams p = scaled_zone(k, n);
    const double bound = crlb_exact(p, 1.0, p.inflow_m3s, n, sigma);
    CHECK(bound < rls_variance_exact(p, 1.0, p.inflow_m3s, n, sigma));
    CHECK(bound < mme_variance_exact(p, 1.0, p.inflow_m3s, n, sigma, 2));
  }
}

TEST_CASE("doubling the window at fixed depth cuts variance eightfold") {
  const double sigma = 10.0;
  const int n = 50;
  const ZoneParams base = scaled_zone(0.6, n);
  const ZoneParams twice = scaled_zone(0.6, 2 * n);
  const double r_crlb = crlb_exact(twice, 1.0, twice.inflow_m3s, 2 * n, sigma) /
                        crlb_exact(base, 1.0, base.inflow_m3s, n, sigma);
  const double r_rls =
      rls_variance_exact(twice, 1.0, twice.inflow_m3s, 2 * n, sigma) /
      rls_variance_exact(base, 1.0, base.inflow_m3s, n, sigma);
  const double r_mme =
      mme_variance_exact(twice, 1.0, twice.inflow_m3s, 2 * n, sigma, 2) /
      mme_variance_exact(base, 1.0, base.inflow_m3s, n, sigma, 2);
  CHECK(std::abs(r_crlb * 8.0 - 1.0) < 0.03);
  CHECK(std::abs(r_rls * 8.0 - 1.0) < 0.03);
  CHECK(std::abs(r_mme * 8.0 - 1.0) < 0.03);
}

TEST_CASE("resource ratios between the regression and moment estimators") {
  CHECK(sample_count_ratio(192.0, 84.0) ==
        doctest::Approx(1.317267512016699).epsilon(1e-12));
  CHECK(sensor_count_ratio(192.0, 84.0) ==
        doctest::Approx(2.2857142857142856).epsilon(1e-12));
  const ResourceRatios r = resource_ratios();
  CHECK(r.sample_ratio == doctest::Approx(1.317267512016699).epsilon(1e-12));
  CHECK(r.sensor_ratio == doctest::Approx(2.2857142857142856).epsilon(1e-12));
  // About 30% more samples, or 2.3x the sensors, buys regression simplicity.
  CHECK(std::abs(r.sample_ratio - 1.3) < 0.05);
  CHECK(std::abs(r.sensor_ratio - 2.28) < 0.006);
  CHECK(sample_count_ratio(192.0, 64.0) ==
        doctest::Approx(1.4422495703074083).epsilon(1e-12));
}

TEST_CASE("variance report is self-consistent") {
  const ZoneParams p = chamber_zone();
  const int n = 50;
  const double sigma = 10.0;
  const VarianceReport bound =
      variance_report(p, Method::kMle, 0, 1.0, p.inflow_m3s, n, sigma, 3);
  const double unit = variance_unit(p, n, sigma);
  CHECK(bound.method == Method::kMle);
  CHECK(bound.air_changes == doctest::Approx(0.59829059829059827).epsilon(1e-12));
  CHECK(bound.variance_exact ==
        doctest::Approx(crlb_exact(p, 1.0, p.inflow_m3s, n, sigma)).epsilon(1e-15));
  CHECK(bound.factor_exact ==
        doctest::Approx(bound.variance_exact / unit).epsilon(1e-12));
  CHECK(bound.factor_expansion ==
        doctest::Approx(crlb_expansion(p, p.inflow_m3s, n, sigma, 3) / unit)
            .epsilon(1e-12));

  const VarianceReport m3 =
      variance_report(p, Method::kMme, 3, 1.0, p.inflow_m3s, n, sigma, 3);
  CHECK(m3.moment_order == 3);
  CHECK(m3.variance_exact ==
        doctest::Approx(mme_variance_exact(p, 1.0, p.inflow_m3s, n, sigma, 3))
            .epsilon(1e-15));
  // No cubic series is defined away from order two.
  CHECK(std::isnan(m3.variance_expansion));
  CHECK(std::isnan(m3.factor_expansion));
}
