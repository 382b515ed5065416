#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace latchkit {

/// Adaptive Simpson quadrature.
///
/// The integrand may have kinks; callers pass the known breakpoints and the
/// interval is pre-split there so each panel sees a smooth piece. Subdivision
/// stops when the local Richardson error estimate is below the scaled
/// tolerance or the depth cap is reached.
struct QuadratureOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_depth = 48;
};

namespace detail {

inline double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_panel(F&& f, double a, double fa, double b, double fb, double m, double fm,
                      double whole, double tol, int depth, int max_depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth >= max_depth || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_panel(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1, max_depth) +
           adaptive_panel(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace detail

/// Integrates f over [a, b], splitting first at the supplied breakpoints.
template <typename F>
double integrate(F&& f, double a, double b, const std::vector<double>& breakpoints = {},
                 const QuadratureOptions& opt = {}) {
    if (!(b > a)) return 0.0;

    std::vector<double> knots;
    knots.push_back(a);
    for (double x : breakpoints) {
        if (x > a && x < b) knots.push_back(x);
    }
    knots.push_back(b);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    // First pass estimates the magnitude so the relative tolerance has a scale.
    double rough = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double lo = knots[i], hi = knots[i + 1], mid = 0.5 * (lo + hi);
        rough += (hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi));
    }
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(rough));

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double lo = knots[i], hi = knots[i + 1], mid = 0.5 * (lo + hi);
        const double flo = f(lo), fhi = f(hi), fmid = f(mid);
        const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        const double panel_tol = std::max(opt.abs_tol, tol * (hi - lo) / (b - a));
        total += detail::adaptive_panel(f, lo, flo, hi, fhi, mid, fmid, whole, panel_tol, 0,
                                        opt.max_depth);
    }
    return total;
}

}  // namespace latchkit
