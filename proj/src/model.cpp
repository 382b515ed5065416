#include "latchkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "latchkit/quadrature.hpp"
#include "latchkit/rng.hpp"

namespace latchkit::model {

namespace {

double residual_mean_of(const HoldingDist& d) {
    return d.second_moment() / (2.0 * d.mean());
}

/// Closed-form tail integral of the survival function beyond t: mean - I(t),
/// computed directly per kind so large t does not cancel to noise.
double survival_tail_integral(const HoldingDist& d, double t) {
    if (t <= 0.0) return d.mean();
    switch (d.kind()) {
        case HoldingDist::Kind::Exponential:
            return d.param_a() * std::exp(-t / d.param_a());
        case HoldingDist::Kind::Deterministic:
            return std::max(0.0, d.param_a() - t);
        case HoldingDist::Kind::Uniform: {
            double a = d.param_a(), b = d.param_b();
            if (t <= a) return d.mean() - t;
            if (t >= b) return 0.0;
            double r = b - t;
            return r * r / (2.0 * (b - a));
        }
        case HoldingDist::Kind::Pareto: {
            double alpha = d.param_a(), xm = d.param_b();
            if (t <= xm) return d.mean() - t;
            return std::pow(xm, alpha) * std::pow(t, 1.0 - alpha) / (alpha - 1.0);
        }
        case HoldingDist::Kind::Histogram:
            return std::max(0.0, d.mean() - d.integrated_survival(t));
    }
    return 0.0;
}

/// H beyond which the remaining integral of the residual survival Q_l is
/// below eps * residual mean. Bounded-support kinds end exactly.
double residual_horizon(const HoldingDist& d, double eps) {
    switch (d.kind()) {
        case HoldingDist::Kind::Exponential:
            // Q_l(t) = exp(-t/mu); tail integral mu * exp(-H/mu).
            return d.param_a() * std::log(1.0 / eps);
        case HoldingDist::Kind::Deterministic:
            return d.param_a();
        case HoldingDist::Kind::Uniform:
            return d.param_b();
        case HoldingDist::Kind::Histogram:
            return d.bin_uppers().back();
        case HoldingDist::Kind::Pareto: {
            double alpha = d.param_a(), xm = d.param_b();
            // Integral of Q_l beyond H: xm^alpha H^(2-alpha) /
            // (mean (alpha-1)(alpha-2)).
            double target =
                eps * residual_mean_of(d) * d.mean() * (alpha - 1.0) * (alpha - 2.0);
            double h = std::pow(std::pow(xm, alpha) / target, 1.0 / (alpha - 2.0));
            return std::max(h, 2.0 * xm);
        }
    }
    return 0.0;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

ResidualDist residual(const HoldingDist& dist) {
    ResidualDist r{dist, residual_mean_of(dist)};
    double h = dist.horizon(1e-9);
    double norm = integrate([&](double t) { return r.density(t); }, 0.0, h,
                            dist.breakpoints());
    if (std::abs(norm - 1.0) > 1e-6) {
        throw ModelInconsistency("residual density integrates to " + fmt(norm) +
                                 ", expected 1 within 1e-6");
    }
    return r;
}

double spin_efficiency(const HoldingDist& dist, double delta) {
    if (delta <= 0.0) return 0.0;
    double s = integrate([&](double t) { return dist.survival(t); }, 0.0, delta,
                         dist.breakpoints()) /
               dist.mean();
    return std::clamp(s, 0.0, 1.0);
}

double spin_efficiency_exact(const HoldingDist& dist, double delta) {
    if (delta <= 0.0) return 0.0;
    return std::clamp(dist.integrated_survival(delta) / dist.mean(), 0.0, 1.0);
}

double sleep_ratio(const HoldingDist& dist, double delta) {
    if (delta <= 0.0) return 1.0;
    return std::clamp(survival_tail_integral(dist, delta) / dist.mean(), 0.0, 1.0);
}

double spin_cpu_time_bound(const HoldingDist& dist, double delta) {
    return std::min(residual_mean_of(dist), delta);
}

GammaForms spin_cpu_time_forms(const HoldingDist& dist, double delta) {
    if (delta < 0.0) throw ConfigInvalid("spin budget must be non-negative");
    GammaForms g;
    if (delta == 0.0) return g;

    const double mean = dist.mean();
    const double t_l = residual_mean_of(dist);
    const std::vector<double> bps = dist.breakpoints();

    // Direct: mean of the spin-time variable min(residual, delta); the point
    // mass at delta carries the residual mass beyond the budget.
    double t_weighted =
        integrate([&](double t) { return t * dist.survival(t); }, 0.0, delta, bps) / mean;
    double p_l_delta =
        integrate([&](double t) { return dist.survival(t); }, 0.0, delta, bps) / mean;
    g.direct = t_weighted + delta * std::max(0.0, 1.0 - p_l_delta);

    // Survival route: residual mean minus the residual survival beyond delta.
    double h = residual_horizon(dist, 1e-10);
    double tail = 0.0;
    if (h > delta) {
        tail = integrate(
            [&](double t) {
                return std::max(0.0, 1.0 - dist.integrated_survival(t) / mean);
            },
            delta, h, bps);
    }
    g.survival = t_l - tail;

    // Nested route: outer quadrature over the closed-form inner integral.
    g.nested = integrate(
                   [&](double t) { return survival_tail_integral(dist, t); }, 0.0, delta,
                   bps) /
               mean;
    return g;
}

double spin_cpu_time(const HoldingDist& dist, double delta) {
    GammaForms g = spin_cpu_time_forms(dist, delta);
    double scale = std::max({std::abs(g.direct), std::abs(g.survival), std::abs(g.nested)});
    double tol = 1e-5 * scale + 1e-15;
    if (std::abs(g.direct - g.survival) > tol || std::abs(g.direct - g.nested) > tol ||
        std::abs(g.survival - g.nested) > tol) {
        throw ModelInconsistency("spin CPU time routes disagree: direct=" + fmt(g.direct) +
                                 " survival=" + fmt(g.survival) + " nested=" + fmt(g.nested));
    }
    double bound = spin_cpu_time_bound(dist, delta);
    if (g.direct > bound * (1.0 + 1e-9) + 1e-15) {
        throw ModelInconsistency("spin CPU time " + fmt(g.direct) + " exceeds its bound " +
                                 fmt(bound));
    }
    return g.direct;
}

ModelPrediction predict(const HoldingDist& dist, double delta) {
    ModelPrediction p;
    p.delta = delta;
    p.kappa = sleep_ratio(dist, delta);
    p.sigma = 1.0 - p.kappa;
    p.gamma_sg = spin_cpu_time(dist, delta);
    p.bound = spin_cpu_time_bound(dist, delta);
    return p;
}

LowEfficiencyApprox low_efficiency_expansion(const HoldingDist& dist, double delta) {
    if (delta < 0.0) throw ConfigInvalid("spin budget must be non-negative");
    if (dist.cdf(0.0) > 0.0) {
        throw PrecondViolated("holding time has a point mass at zero; the short-spin "
                              "expansion assumes releases are never immediate");
    }
    LowEfficiencyApprox a;
    a.sigma_approx = delta / dist.mean();
    a.gamma_approx = delta - delta * delta / (2.0 * dist.mean());
    if (delta > 0.0) {
        a.sigma_error = std::abs(a.sigma_approx - spin_efficiency(dist, delta));
        a.gamma_error = std::abs(a.gamma_approx - spin_cpu_time(dist, delta));
    }
    return a;
}

TailLaw high_efficiency_tail(const HoldingDist& dist, double delta) {
    if (!(delta > 0.0)) throw PrecondViolated("tail fit needs a positive spin budget");

    constexpr int kPoints = 41;
    const double lo = 0.5 * delta;
    const double hi = 4.0 * delta;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    double ys[kPoints];
    double xs[kPoints];
    for (int i = 0; i < kPoints; ++i) {
        double t = lo + (hi - lo) * i / (kPoints - 1);
        double q = dist.survival(t);
        if (!(q > 0.0)) {
            throw NoExponentialTail("survival vanishes inside the probe window [" + fmt(lo) +
                                    ", " + fmt(hi) + "]");
        }
        xs[i] = t;
        ys[i] = std::log(q);
        sx += t;
        sy += ys[i];
        sxx += t * t;
        sxy += t * ys[i];
    }
    const double n = kPoints;
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    if (!(slope < 0.0)) {
        throw NoExponentialTail("log-survival slope is not negative over the probe window");
    }

    double ss_res = 0.0, ss_tot = 0.0;
    const double y_mean = sy / n;
    for (int i = 0; i < kPoints; ++i) {
        double fit = intercept + slope * xs[i];
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - y_mean) * (ys[i] - y_mean);
    }
    double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    if (r2 < 0.99) {
        throw NoExponentialTail("log-survival fit R^2 = " + fmt(r2) +
                                " below 0.99; no exponential tail in [" + fmt(lo) + ", " +
                                fmt(hi) + "]");
    }

    TailLaw law;
    law.tau = -1.0 / slope;
    law.c = std::exp(intercept);
    law.r_squared = r2;
    law.kappa_pred = law.c * std::exp(-delta / law.tau) * law.tau / dist.mean();
    // From the survival route with the fitted tail: the residual survival
    // integrates to c tau^2 exp(-delta/tau) / mean beyond delta.
    law.gamma_pred = residual_mean_of(dist) -
                     law.c * law.tau * law.tau * std::exp(-delta / law.tau) / dist.mean();
    return law;
}

McEstimate mc_oracle(const HoldingDist& dist, double delta, std::uint64_t n_samples,
                     std::uint64_t seed) {
    if (n_samples == 0) throw ConfigInvalid("mc_oracle needs at least one sample");
    std::mt19937_64 rng(seed);
    std::uint64_t hits = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        // The interval an arrival lands in, picked with probability weight
        // t/<t>, and a uniform position inside it: the residual time.
        double interval = dist.sample_length_biased(rng);
        double tau = uniform01(rng) * interval;
        if (tau <= delta) ++hits;
        double burned = std::min(tau, delta);
        sum += burned;
        sum_sq += burned * burned;
    }
    McEstimate e;
    e.n = n_samples;
    double n = static_cast<double>(n_samples);
    e.sigma = static_cast<double>(hits) / n;
    e.gamma = sum / n;
    e.sigma_se = std::sqrt(std::max(0.0, e.sigma * (1.0 - e.sigma)) / n);
    double var = std::max(0.0, sum_sq / n - e.gamma * e.gamma);
    e.gamma_se = std::sqrt(var / n);
    return e;
}

}  // namespace latchkit::model
