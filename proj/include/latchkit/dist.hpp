#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "latchkit/errors.hpp"

namespace latchkit::model {

/// Holding-time distribution with closed-form moments, survival function and
/// integrated survival. All supported parameterizations have finite first and
/// second moments; Pareto therefore requires alpha > 2 (InfiniteMoment
/// otherwise). Values are plain time units — the CLI and simulator read them
/// as microseconds.
class HoldingDist {
public:
    enum class Kind { Exponential, Deterministic, Uniform, Pareto, Histogram };

    static HoldingDist exponential(double mean);
    static HoldingDist deterministic(double value);
    static HoldingDist uniform(double a, double b);
    static HoldingDist pareto(double alpha, double x_min);

    /// Piecewise-uniform density: bin k covers [upper_{k-1}, upper_k) with the
    /// given probability mass (first bin starts at 0). Masses are normalized;
    /// they must be non-negative and sum to something positive.
    static HoldingDist histogram(std::vector<double> bin_uppers, std::vector<double> masses);

    Kind kind() const { return kind_; }

    double mean() const { return mean_; }
    double second_moment() const { return second_moment_; }

    /// P(t) = probability holding time <= t.
    double cdf(double t) const;
    /// Q(t) = 1 - P(t).
    double survival(double t) const { return 1.0 - cdf(t); }
    /// Closed-form I(t) = integral of Q over [0, t]; I(inf) = mean.
    double integrated_survival(double t) const;

    /// Abscissae where the density or survival has kinks; quadrature splits here.
    std::vector<double> breakpoints() const;

    /// T such that the tail integral of Q beyond T is below eps * mean.
    double horizon(double eps = 1e-12) const;

    /// One holding-time draw.
    double sample(std::mt19937_64& rng) const;

    /// One draw weighted by duration (probability weight t/mean): the holding
    /// interval an independent observer lands in.
    double sample_length_biased(std::mt19937_64& rng) const;

    /// Round-trips through parse_dist_spec (histograms render inline).
    std::string spec_string() const;

    // Histogram internals (exposed for exact piecewise integration in tests).
    const std::vector<double>& bin_uppers() const { return uppers_; }
    const std::vector<double>& bin_masses() const { return masses_; }

    // Scalar parameters, meaning depends on kind: Exponential{a=mean},
    // Deterministic{a=value}, Uniform{a,b}, Pareto{a=alpha, b=x_min}.
    double param_a() const { return a_; }
    double param_b() const { return b_; }

private:
    HoldingDist() = default;

    Kind kind_ = Kind::Exponential;
    double a_ = 0.0;
    double b_ = 0.0;
    double mean_ = 0.0;
    double second_moment_ = 0.0;

    // Histogram only.
    std::vector<double> uppers_;
    std::vector<double> masses_;       // normalized
    std::vector<double> cum_mass_;     // cumulative masses at uppers
    std::vector<double> cum_isurv_;    // I(upper_k), precomputed
};

/// Parses the distribution mini-grammar: `exp:MEAN`, `det:VALUE`,
/// `uniform:A:B`, `pareto:ALPHA:XMIN`, `hist:FILE` where FILE is a CSV of
/// `bin_upper,probability_mass` rows (no header). Throws ConfigInvalid on a
/// malformed spec, ParseError for histogram file contents, InfiniteMoment for
/// Pareto alpha <= 2.
HoldingDist parse_dist_spec(const std::string& spec);

/// Histogram CSV reader behind `hist:FILE` (also usable on any stream).
HoldingDist read_histogram_csv(std::istream& in);

}  // namespace latchkit::model
