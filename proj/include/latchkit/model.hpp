#pragma once

#include <cstdint>

#include "latchkit/dist.hpp"
#include "latchkit/errors.hpp"

namespace latchkit::model {

/// Distribution of the residual holding time: what is left of the holder's
/// current interval when an independent process arrives and misses. Density
/// p_l(t) = Q(t)/<t> where Q is the base survival function.
struct ResidualDist {
    HoldingDist base;
    double mean = 0.0;  // <t^2> / (2 <t>)

    double density(double t) const {
        return t < 0.0 ? 0.0 : base.survival(t) / base.mean();
    }
    double cdf(double t) const {
        return t <= 0.0 ? 0.0 : base.integrated_survival(t) / base.mean();
    }
    double survival(double t) const { return 1.0 - cdf(t); }
};

/// Builds the residual distribution and verifies its normalization by
/// quadrature to 1e-6. Throws ModelInconsistency if the check fails.
ResidualDist residual(const HoldingDist& dist);

/// Spin efficiency: the probability that the holder releases within the spin
/// budget, sigma(delta) = (1/<t>) * integral of Q over [0, delta], evaluated
/// by adaptive quadrature and clamped to [0,1].
double spin_efficiency(const HoldingDist& dist, double delta);

/// Same quantity through the closed-form integrated survival — no quadrature
/// error, which the asymptotic laws (squaring of the sleep ratio) need.
double spin_efficiency_exact(const HoldingDist& dist, double delta);

/// Sleep ratio kappa(delta) = 1 - sigma(delta), closed form.
double sleep_ratio(const HoldingDist& dist, double delta);

/// The three algebraically equal routes to the mean spin CPU time per miss:
///   direct:    integral of t p_l(t) over [0,delta] plus delta * (1 - P_l(delta))
///   survival:  residual mean minus the residual-survival tail beyond delta
///   nested:    (1/<t>) * double integral of Q (inner integral in closed form)
struct GammaForms {
    double direct = 0.0;
    double survival = 0.0;
    double nested = 0.0;
};

GammaForms spin_cpu_time_forms(const HoldingDist& dist, double delta);

/// Mean CPU time burned spinning per miss. Cross-checks the three forms to
/// 1e-5 relative and the bound gamma <= min(residual mean, delta); throws
/// ModelInconsistency when either fails.
double spin_cpu_time(const HoldingDist& dist, double delta);

/// Upper bound on the spin cost: min(<t^2>/(2<t>), delta).
double spin_cpu_time_bound(const HoldingDist& dist, double delta);

struct ModelPrediction {
    double delta = 0.0;
    double sigma = 0.0;     // spin efficiency
    double kappa = 0.0;     // 1 - sigma
    double gamma_sg = 0.0;  // spin CPU time per miss
    double bound = 0.0;     // min(residual mean, delta)
};

ModelPrediction predict(const HoldingDist& dist, double delta);

/// Short-spin expansion (valid when sigma << 1): sigma ~ delta/<t> and
/// gamma ~ delta - delta^2/(2<t>), with absolute errors against the exact
/// quadrature values. Throws PrecondViolated if the distribution has a point
/// mass at zero (a release can then be immediate and the expansion is wrong).
struct LowEfficiencyApprox {
    double sigma_approx = 0.0;
    double gamma_approx = 0.0;
    double sigma_error = 0.0;
    double gamma_error = 0.0;
};

LowEfficiencyApprox low_efficiency_expansion(const HoldingDist& dist, double delta);

/// Exponential-tail fit of the survival function over the probe window
/// [delta/2, 4*delta]: Q(t) ~ c * exp(-t/tau). When the fit holds, the sleep
/// ratio obeys kappa(delta) ~ c * exp(-delta/tau) * tau/<t>, which is what
/// makes doubling the spin budget square the sleep ratio.
struct TailLaw {
    double c = 0.0;
    double tau = 0.0;
    double kappa_pred = 0.0;
    double gamma_pred = 0.0;
    double r_squared = 0.0;  // of the linear fit on log-survival
};

/// Throws NoExponentialTail when the survival vanishes inside the window, the
/// fitted slope is not negative, or the log-survival fit has R^2 < 0.99
/// (power-law tails such as Pareto land here).
TailLaw high_efficiency_tail(const HoldingDist& dist, double delta);

/// Monte-Carlo estimate of (sigma, gamma): draws the holding interval an
/// arrival lands in with probability weight t/<t>, a uniform position inside
/// it, and measures the wait-to-release tail against delta. Independent of
/// the quadrature path; deterministic for a fixed seed.
struct McEstimate {
    double sigma = 0.0;
    double gamma = 0.0;
    double sigma_se = 0.0;  // standard error of sigma
    double gamma_se = 0.0;  // standard error of gamma
    std::uint64_t n = 0;
};

McEstimate mc_oracle(const HoldingDist& dist, double delta, std::uint64_t n_samples,
                     std::uint64_t seed);

}  // namespace latchkit::model
