#include <cmath>
#include <cstddef>
#include <vector>

#include "gasest/errors.hpp"
#include "gasest/estimators.hpp"

namespace gasest {

namespace {

constexpr int kMaxIterations = 200;
constexpr double kStepTolerance = 1e-10;
constexpr double kDampingInit = 1e-3;
constexpr double kDampingMax = 1e14;

struct Samples {
    std::vector<double> t;
    std::vector<double> y;
};

Samples transient_samples(const TimeSeries& obs) {
    if (!obs.above_background) {
        throw ParameterError("fit expects an above-background series");
    }
    Samples s;
    const std::size_t start = obs.has_t0 ? 1 : 0;
    s.t.reserve(obs.y.size() - start);
    s.y.reserve(obs.y.size() - start);
    for (std::size_t i = start; i < obs.y.size(); ++i) {
        s.t.push_back(obs.time_of(i));
        s.y.push_back(obs.y[i]);
    }
    return s;
}

double residual_cost(const ZoneParams& p, const Samples& s, double occ, double q) {
    double cost = 0.0;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        const double r = s.y[i] - growth_value(p, occ, q, s.t[i]);
        cost += r * r;
    }
    return cost;
}

} // namespace

Estimate mle_fit(const TimeSeries& obs, const ZoneParams& p,
                 double init_occupants, double init_inflow_m3s) {
    p.validate();
    if (!std::isfinite(init_occupants) || !std::isfinite(init_inflow_m3s) ||
        init_inflow_m3s <= 0.0) {
        throw ParameterError("fit needs a finite start with positive inflow");
    }
    const Samples s = transient_samples(obs);
    if (s.t.size() < 3) {
        throw EstimatorError("likelihood fit needs at least three transient samples");
    }

    double occ = init_occupants;
    double q = init_inflow_m3s;
    double cost = residual_cost(p, s, occ, q);
    double damping = kDampingInit;

    Estimate e;
    e.method = Method::kMle;

    int iter = 0;
    while (iter < kMaxIterations) {
        ++iter;
        // Normal equations from the analytic Jacobian.
        double a11 = 0, a12 = 0, a22 = 0, g1 = 0, g2 = 0;
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            const GrowthGradient gr = growth_gradient(p, occ, q, s.t[i]);
            const double r = s.y[i] - growth_value(p, occ, q, s.t[i]);
            a11 += gr.d_occupants * gr.d_occupants;
            a12 += gr.d_occupants * gr.d_inflow;
            a22 += gr.d_inflow * gr.d_inflow;
            g1 += gr.d_occupants * r;
            g2 += gr.d_inflow * r;
        }
        if (!(a11 > 0.0) || !(a22 > 0.0)) {
            throw EstimatorError("degenerate Jacobian: signal carries no information");
        }

        bool stepped = false;
        while (damping <= kDampingMax) {
            const double d11 = a11 * (1.0 + damping);
            const double d22 = a22 * (1.0 + damping);
            const double det = d11 * d22 - a12 * a12;
            if (det <= 0.0) {
                damping *= 10.0;
                continue;
            }
            const double step_occ = (d22 * g1 - a12 * g2) / det;
            const double step_q = (d11 * g2 - a12 * g1) / det;
            const double occ_next = occ + step_occ;
            const double q_next = q + step_q;
            if (q_next <= 0.0 || !std::isfinite(occ_next) || !std::isfinite(q_next)) {
                damping *= 10.0;
                continue;
            }
            const double cost_next = residual_cost(p, s, occ_next, q_next);
            if (cost_next <= cost) {
                const double rel_step =
                    std::max(std::abs(step_occ) / std::max(std::abs(occ_next), 1e-300),
                             std::abs(step_q) / std::max(std::abs(q_next), 1e-300));
                occ = occ_next;
                q = q_next;
                cost = cost_next;
                damping = std::max(damping * 0.1, 1e-14);
                stepped = true;
                if (rel_step < kStepTolerance) {
                    e.converged = true;
                }
                break;
            }
            damping *= 10.0;
        }
        if (!stepped) {
            // Damping exhausted: the current point is a numerical optimum.
            e.converged = true;
            break;
        }
        if (e.converged) break;
    }

    e.occupants = occ;
    e.inflow_m3s = q;
    e.iterations = iter;
    if (!(q > 0.0) || !std::isfinite(occ)) e.converged = false;
    return e;
}

Estimate mle_fit(const TimeSeries& obs, const ZoneParams& p) {
    p.validate();
    double init_occ = 1.0;
    double init_q = p.volume_m3 / (std::max<double>(obs.interval_count(), 1) *
                                   p.sample_interval_s);
    try {
        const Estimate seed = mme_fit(obs, p, 2);
        init_occ = seed.occupants;
        init_q = seed.inflow_m3s;
    } catch (const EstimatorError&) {
        // Fall back to one occupant and one air change over the window.
    }
    Estimate e = mle_fit(obs, p, init_occ, init_q);
    return e;
}

} // namespace gasest
