#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "prophetlab/errors.hpp"

namespace prophetlab::search1d {

struct Extremum {
    double x = 0.0;
    double value = 0.0;
};

// Root of a function with a sign change on [lo, hi]. Stops once the bracket is narrower than xtol.
template <class F>
double bisect(F&& f, double lo, double hi, double xtol, int max_iter = 400) {
    double f_lo = f(lo);
    const double f_hi = f(hi);
    if (f_lo == 0.0) {
        return lo;
    }
    if (f_hi == 0.0) {
        return hi;
    }
    if ((f_lo > 0.0) == (f_hi > 0.0)) {
        throw DomainError("bisect: no sign change on the bracket");
    }
    for (int it = 0; it < max_iter && hi - lo > xtol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        const double f_mid = f(mid);
        if (f_mid == 0.0) {
            return mid;
        }
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

template <class F>
Extremum golden_maximize(F&& f, double lo, double hi, double xtol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > xtol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? Extremum{c, fc} : Extremum{d, fd};
}

// Maximum over `points` equally spaced abscissae in (lo, hi], followed by golden-section
// refinement on the bracket around the best grid point. The grid point wins ties.
template <class F>
Extremum grid_then_golden(F&& f, double lo, double hi, int points, double xtol) {
    const double h = (hi - lo) / points;
    Extremum best{hi, f(hi)};
    int best_index = points;
    for (int t = 1; t < points; ++t) {
        const double x = lo + h * t;
        const double v = f(x);
        if (v > best.value) {
            best = {x, v};
            best_index = t;
        }
    }
    const double a = lo + h * std::max(best_index - 1, 0);
    const double b = std::min(hi, lo + h * (best_index + 1));
    const Extremum refined = golden_maximize(f, std::max(a, lo + 1e-15), b, xtol);
    return refined.value > best.value ? refined : best;
}

namespace detail {

template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                    int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol, int max_depth = 50) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

}  // namespace prophetlab::search1d
