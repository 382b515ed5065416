#include "latchkit/dist.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "latchkit/rng.hpp"

namespace latchkit::model {

namespace {

double parse_double_token(const std::string& token, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
        if (!std::isfinite(v)) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw ConfigInvalid("bad number '" + token + "' in " + what);
    }
}

std::string format_value(double v) {
    std::ostringstream os;
    os << std::setprecision(15) << v;
    return os.str();
}

}  // namespace

HoldingDist HoldingDist::exponential(double mean) {
    if (!(mean > 0.0)) throw ConfigInvalid("exponential mean must be positive");
    HoldingDist d;
    d.kind_ = Kind::Exponential;
    d.a_ = mean;
    d.mean_ = mean;
    d.second_moment_ = 2.0 * mean * mean;
    return d;
}

HoldingDist HoldingDist::deterministic(double value) {
    if (!(value > 0.0)) throw ConfigInvalid("deterministic holding time must be positive");
    HoldingDist d;
    d.kind_ = Kind::Deterministic;
    d.a_ = value;
    d.mean_ = value;
    d.second_moment_ = value * value;
    return d;
}

HoldingDist HoldingDist::uniform(double a, double b) {
    if (!(a >= 0.0) || !(b > a)) {
        throw ConfigInvalid("uniform holding time needs 0 <= A < B");
    }
    HoldingDist d;
    d.kind_ = Kind::Uniform;
    d.a_ = a;
    d.b_ = b;
    d.mean_ = 0.5 * (a + b);
    d.second_moment_ = (a * a + a * b + b * b) / 3.0;
    return d;
}

HoldingDist HoldingDist::pareto(double alpha, double x_min) {
    if (!(x_min > 0.0)) throw ConfigInvalid("pareto x_min must be positive");
    if (!(alpha > 2.0)) {
        throw InfiniteMoment("pareto with alpha <= 2 has no finite second moment (alpha = " +
                             format_value(alpha) + ")");
    }
    HoldingDist d;
    d.kind_ = Kind::Pareto;
    d.a_ = alpha;
    d.b_ = x_min;
    d.mean_ = alpha * x_min / (alpha - 1.0);
    d.second_moment_ = alpha * x_min * x_min / (alpha - 2.0);
    return d;
}

HoldingDist HoldingDist::histogram(std::vector<double> bin_uppers, std::vector<double> masses) {
    if (bin_uppers.empty() || bin_uppers.size() != masses.size()) {
        throw ConfigInvalid("histogram needs matching, non-empty bin and mass lists");
    }
    double prev = 0.0;
    for (double u : bin_uppers) {
        if (!(u > prev)) throw ConfigInvalid("histogram bin uppers must be positive, increasing");
        prev = u;
    }
    double total = 0.0;
    for (double m : masses) {
        if (!(m >= 0.0)) throw ConfigInvalid("histogram masses must be non-negative");
        total += m;
    }
    if (!(total > 0.0)) throw ConfigInvalid("histogram total mass must be positive");

    HoldingDist d;
    d.kind_ = Kind::Histogram;
    d.uppers_ = std::move(bin_uppers);
    d.masses_ = std::move(masses);
    for (double& m : d.masses_) m /= total;

    double mean = 0.0;
    double m2 = 0.0;
    double cum = 0.0;
    double isurv = 0.0;
    double lower = 0.0;
    d.cum_mass_.reserve(d.masses_.size());
    d.cum_isurv_.reserve(d.masses_.size());
    for (std::size_t k = 0; k < d.masses_.size(); ++k) {
        double upper = d.uppers_[k];
        double m = d.masses_[k];
        double w = upper - lower;
        mean += m * 0.5 * (lower + upper);
        m2 += m * (lower * lower + lower * upper + upper * upper) / 3.0;
        // Q decreases linearly by m across the bin.
        isurv += (1.0 - cum) * w - 0.5 * m * w;
        cum += m;
        d.cum_mass_.push_back(cum);
        d.cum_isurv_.push_back(isurv);
        lower = upper;
    }
    d.mean_ = mean;
    d.second_moment_ = m2;
    return d;
}

double HoldingDist::cdf(double t) const {
    if (t <= 0.0) return 0.0;
    switch (kind_) {
        case Kind::Exponential:
            return 1.0 - std::exp(-t / a_);
        case Kind::Deterministic:
            return t < a_ ? 0.0 : 1.0;
        case Kind::Uniform:
            if (t <= a_) return 0.0;
            if (t >= b_) return 1.0;
            return (t - a_) / (b_ - a_);
        case Kind::Pareto:
            if (t <= b_) return 0.0;
            return 1.0 - std::pow(b_ / t, a_);
        case Kind::Histogram: {
            auto it = std::lower_bound(uppers_.begin(), uppers_.end(), t);
            if (it == uppers_.end()) return 1.0;
            std::size_t k = static_cast<std::size_t>(it - uppers_.begin());
            double lower = k == 0 ? 0.0 : uppers_[k - 1];
            double below = k == 0 ? 0.0 : cum_mass_[k - 1];
            return below + masses_[k] * (t - lower) / (uppers_[k] - lower);
        }
    }
    return 0.0;
}

double HoldingDist::integrated_survival(double t) const {
    if (t <= 0.0) return 0.0;
    switch (kind_) {
        case Kind::Exponential:
            return a_ * (1.0 - std::exp(-t / a_));
        case Kind::Deterministic:
            return std::min(t, a_);
        case Kind::Uniform: {
            if (t <= a_) return t;
            if (t >= b_) return mean_;
            double u = t - a_;
            return a_ + u - u * u / (2.0 * (b_ - a_));
        }
        case Kind::Pareto: {
            if (t <= b_) return t;
            return b_ + (b_ / (a_ - 1.0)) * (1.0 - std::pow(b_ / t, a_ - 1.0));
        }
        case Kind::Histogram: {
            auto it = std::lower_bound(uppers_.begin(), uppers_.end(), t);
            if (it == uppers_.end()) return mean_;
            std::size_t k = static_cast<std::size_t>(it - uppers_.begin());
            double lower = k == 0 ? 0.0 : uppers_[k - 1];
            double base = k == 0 ? 0.0 : cum_isurv_[k - 1];
            double q_left = 1.0 - (k == 0 ? 0.0 : cum_mass_[k - 1]);
            double w = uppers_[k] - lower;
            double u = t - lower;
            return base + q_left * u - 0.5 * masses_[k] * u * u / w;
        }
    }
    return 0.0;
}

std::vector<double> HoldingDist::breakpoints() const {
    switch (kind_) {
        case Kind::Exponential:
            return {};
        case Kind::Deterministic:
            return {a_};
        case Kind::Uniform:
            return {a_, b_};
        case Kind::Pareto:
            return {b_};
        case Kind::Histogram:
            return uppers_;
    }
    return {};
}

double HoldingDist::horizon(double eps) const {
    switch (kind_) {
        case Kind::Exponential:
            return a_ * std::log(1.0 / eps);
        case Kind::Deterministic:
            return a_;
        case Kind::Uniform:
            return b_;
        case Kind::Pareto: {
            // Tail integral beyond T is (T/(alpha-1)) * (x_min/T)^alpha.
            double t = b_ * std::pow(1.0 / ((a_ - 1.0) * eps * mean_ / b_), 1.0 / (a_ - 1.0));
            return std::max(t, b_);
        }
        case Kind::Histogram:
            return uppers_.back();
    }
    return 0.0;
}

double HoldingDist::sample(std::mt19937_64& rng) const {
    switch (kind_) {
        case Kind::Exponential:
            return exponential_sample(rng, a_);
        case Kind::Deterministic:
            return a_;
        case Kind::Uniform:
            return a_ + uniform01(rng) * (b_ - a_);
        case Kind::Pareto:
            return pareto_sample(rng, a_, b_);
        case Kind::Histogram: {
            double u = uniform01(rng);
            auto it = std::lower_bound(cum_mass_.begin(), cum_mass_.end(), u);
            std::size_t k = it == cum_mass_.end() ? cum_mass_.size() - 1
                                                  : static_cast<std::size_t>(it - cum_mass_.begin());
            double lower = k == 0 ? 0.0 : uppers_[k - 1];
            return lower + uniform01(rng) * (uppers_[k] - lower);
        }
    }
    return 0.0;
}

double HoldingDist::sample_length_biased(std::mt19937_64& rng) const {
    switch (kind_) {
        case Kind::Exponential:
            // Weighting an exponential by duration gives the two-stage Erlang.
            return exponential_sample(rng, a_) + exponential_sample(rng, a_);
        case Kind::Deterministic:
            return a_;
        case Kind::Uniform: {
            double u = uniform01(rng);
            return std::sqrt(a_ * a_ + u * (b_ * b_ - a_ * a_));
        }
        case Kind::Pareto:
            // Density ~ t * t^-(alpha+1) = t^-alpha: a Pareto with alpha-1.
            return pareto_sample(rng, a_ - 1.0, b_);
        case Kind::Histogram: {
            // Bin weight = mass * mid (the within-bin mean), then sqrt-shaping
            // inside the bin for the linear-in-t density.
            double total = 0.0;
            for (std::size_t k = 0; k < masses_.size(); ++k) {
                double lower = k == 0 ? 0.0 : uppers_[k - 1];
                total += masses_[k] * 0.5 * (lower + uppers_[k]);
            }
            double u = uniform01(rng) * total;
            double acc = 0.0;
            std::size_t k = 0;
            for (; k < masses_.size(); ++k) {
                double lower = k == 0 ? 0.0 : uppers_[k - 1];
                acc += masses_[k] * 0.5 * (lower + uppers_[k]);
                if (u <= acc || k + 1 == masses_.size()) break;
            }
            double lower = k == 0 ? 0.0 : uppers_[k - 1];
            double upper = uppers_[k];
            double v = uniform01(rng);
            return std::sqrt(lower * lower + v * (upper * upper - lower * lower));
        }
    }
    return 0.0;
}

std::string HoldingDist::spec_string() const {
    switch (kind_) {
        case Kind::Exponential:
            return "exp:" + format_value(a_);
        case Kind::Deterministic:
            return "det:" + format_value(a_);
        case Kind::Uniform:
            return "uniform:" + format_value(a_) + ":" + format_value(b_);
        case Kind::Pareto:
            return "pareto:" + format_value(a_) + ":" + format_value(b_);
        case Kind::Histogram: {
            std::string s = "hist:[";
            for (std::size_t k = 0; k < uppers_.size(); ++k) {
                if (k) s += ",";
                s += format_value(uppers_[k]) + ":" + format_value(masses_[k]);
            }
            return s + "]";
        }
    }
    return "";
}

HoldingDist read_histogram_csv(std::istream& in) {
    std::vector<double> uppers;
    std::vector<double> masses;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError(line_no, "expected 'bin_upper,probability_mass'");
        }
        try {
            uppers.push_back(parse_double_token(line.substr(0, comma), "histogram bin upper"));
            masses.push_back(parse_double_token(line.substr(comma + 1), "histogram mass"));
        } catch (const ConfigInvalid& e) {
            throw ParseError(line_no, e.what());
        }
    }
    if (uppers.empty()) throw ParseError(line_no ? line_no : 1, "histogram file has no rows");
    try {
        return HoldingDist::histogram(std::move(uppers), std::move(masses));
    } catch (const ConfigInvalid& e) {
        throw ParseError(line_no, e.what());
    }
}

HoldingDist parse_dist_spec(const std::string& spec) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto colon = spec.find(':', start);
        if (colon == std::string::npos) {
            parts.push_back(spec.substr(start));
            break;
        }
        parts.push_back(spec.substr(start, colon - start));
        start = colon + 1;
    }
    const std::string& kind = parts[0];

    auto expect_parts = [&](std::size_t n) {
        if (parts.size() != n) {
            throw ConfigInvalid("distribution spec '" + spec + "': expected " +
                                std::to_string(n - 1) + " parameter(s)");
        }
    };

    if (kind == "exp") {
        expect_parts(2);
        return HoldingDist::exponential(parse_double_token(parts[1], spec));
    }
    if (kind == "det") {
        expect_parts(2);
        return HoldingDist::deterministic(parse_double_token(parts[1], spec));
    }
    if (kind == "uniform") {
        expect_parts(3);
        return HoldingDist::uniform(parse_double_token(parts[1], spec),
                                    parse_double_token(parts[2], spec));
    }
    if (kind == "pareto") {
        expect_parts(3);
        return HoldingDist::pareto(parse_double_token(parts[1], spec),
                                   parse_double_token(parts[2], spec));
    }
    if (kind == "hist") {
        // The file name may itself contain colons; take everything after "hist:".
        if (parts.size() < 2 || spec.size() <= 5) {
            throw ConfigInvalid("distribution spec '" + spec + "': missing histogram file");
        }
        std::string path = spec.substr(5);
        std::ifstream in(path);
        if (!in) throw ConfigInvalid("cannot open histogram file '" + path + "'");
        return read_histogram_csv(in);
    }
    throw ConfigInvalid("unknown distribution kind '" + kind + "' in spec '" + spec + "'");
}

}  // namespace latchkit::model
