#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ringflow/error.hpp"
#include "ringflow/grid.hpp"
#include "ringflow/speedlaws.hpp"

namespace ringflow {

/// Relative-entropy functional h sum(rho ln(rho / rho*) + rho* - rho).
inline double lyapunov_V(const DensityProfile& profile, double rho_star) {
    if (!(rho_star > 0.0)) throw InvalidInput("rho_star must be positive");
    std::vector<double> terms(profile.n_cells());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const double r = profile[i];
        terms[i] = r * std::log(r / rho_star) + rho_star - r;
    }
    return compensated_sum(terms) * profile.cell_width();
}

/**
 * Extremal quantities of the nudging stability condition for the uniform
 * look-ahead kernel of width eta and the full-ring linear look-behind kernel.
 *
 *   F_max, F_min  max / min of |f'| on [rho_min, min(rho* / eta, rho_max)]
 *   f_min         f(min(rho* / eta, rho_max))
 *   g_max         g(min(2 rho* - rho_min, rho_max) / 2)
 *   g_min         g(max(2 rho* - rho_max, rho_min) / 2)
 *   G_min         min of g' on [max(2 rho* - rho_max, rho_min) / 2, min(2 rho* - rho_min, rho_max) / 2]
 *
 * The condition holds when lhs = F_max g_max - F_min g_min is strictly below
 * rhs = 2 eta f_min G_min; c_bar is the guaranteed decay rate of V.
 */
struct StabilityReport {
    double eta = 0.0;
    double rho_min = 0.0;
    double rho_max = 0.0;
    double rho_star = 0.0;

    double F_max = 0.0;
    double F_min = 0.0;
    double f_min = 0.0;
    double g_max = 0.0;
    double g_min = 0.0;
    double G_min = 0.0;

    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    double c_bar = 0.0;
    bool feasible = false;
};

namespace detail {

// Extremum of fn on [a, b]: endpoints when the shape allows it, otherwise a
// 10^4-point scan refined by golden-section search around the best sample.
inline double extremum(const std::function<double(double)>& fn, double a, double b,
                       SlopeShape shape, bool want_max) {
    if (!(b > a)) return fn(a);
    switch (shape) {
        case SlopeShape::decreasing:
            return want_max ? fn(a) : fn(b);
        case SlopeShape::increasing:
            return want_max ? fn(b) : fn(a);
        case SlopeShape::unimodal_peak:
            if (!want_max) return std::min(fn(a), fn(b));
            break;
        case SlopeShape::unknown:
            break;
    }
    const double sign = want_max ? 1.0 : -1.0;
    constexpr int samples = 10000;
    int best = 0;
    double best_val = sign * fn(a);
    for (int k = 1; k <= samples; ++k) {
        const double v = sign * fn(a + (b - a) * k / samples);
        if (v > best_val) {
            best_val = v;
            best = k;
        }
    }
    double lo = a + (b - a) * std::max(0, best - 1) / samples;
    double hi = a + (b - a) * std::min(samples, best + 1) / samples;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
        const double c = hi - gr * (hi - lo);
        const double d = lo + gr * (hi - lo);
        if (sign * fn(c) > sign * fn(d)) {
            hi = d;
        } else {
            lo = c;
        }
    }
    best_val = std::max(best_val, sign * fn(0.5 * (lo + hi)));
    return sign * best_val;
}

}  // namespace detail

inline StabilityReport stability_condition(const SpeedLaw& law, double eta, double rho_min,
                                           double rho_max, double rho_star) {
    if (!(eta > 0.0 && eta <= 1.0)) throw InvalidInput("eta must lie in (0, 1]");
    if (!(rho_min > 0.0) || !(rho_min <= rho_star) || !(rho_star <= rho_max)) {
        throw InvalidInput("need 0 < rho_min <= rho_star <= rho_max");
    }
    StabilityReport r;
    r.eta = eta;
    r.rho_min = rho_min;
    r.rho_max = rho_max;
    r.rho_star = rho_star;

    const double f_hi = std::min(rho_star / eta, rho_max);
    const std::function<double(double)> abs_df = [&law](double s) { return std::abs(law.f.d1(s)); };
    r.F_max = detail::extremum(abs_df, rho_min, f_hi, law.f.slope_shape, true);
    r.F_min = detail::extremum(abs_df, rho_min, f_hi, law.f.slope_shape, false);
    r.f_min = law.f(f_hi);

    const double g_lo = 0.5 * std::max(2.0 * rho_star - rho_max, rho_min);
    const double g_hi = 0.5 * std::min(2.0 * rho_star - rho_min, rho_max);
    r.g_max = law.g(g_hi);
    r.g_min = law.g(g_lo);
    r.G_min = detail::extremum(law.g.d1, g_lo, g_hi, law.g.slope_shape, false);

    r.lhs = r.F_max * r.g_max - r.F_min * r.g_min;
    r.rhs = 2.0 * eta * r.f_min * r.G_min;
    r.margin = r.rhs - r.lhs;
    r.feasible = r.lhs < r.rhs;
    r.c_bar = rho_min / eta * r.margin;
    return r;
}

/// Largest R in [0, rho*) such that [rho* - R, rho* + R] satisfies the condition.
inline double largest_feasible_halfwidth(const SpeedLaw& law, double eta, double rho_star,
                                         double tol = 1e-10) {
    if (!stability_condition(law, eta, rho_star, rho_star, rho_star).feasible) return 0.0;
    double lo = 0.0;
    double hi = rho_star * (1.0 - 1e-12);
    if (stability_condition(law, eta, rho_star - hi, rho_star + hi, rho_star).feasible) return hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (stability_condition(law, eta, rho_star - mid, rho_star + mid, rho_star).feasible) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

/// Key-value rendering, one `key=value` per line.
inline std::string to_record(const StabilityReport& r) {
    auto kv = [](const char* k, double v) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(k) + "=" + std::string(buf, res.ptr) + "\n";
    };
    std::string out;
    out += kv("eta", r.eta) + kv("rho_min", r.rho_min) + kv("rho_max", r.rho_max) +
           kv("rho_star", r.rho_star) + kv("F_max", r.F_max) + kv("F_min", r.F_min) +
           kv("f_min", r.f_min) + kv("g_max", r.g_max) + kv("g_min", r.g_min) +
           kv("G_min", r.G_min) + kv("lhs", r.lhs) + kv("rhs", r.rhs) + kv("margin", r.margin) +
           kv("c_bar", r.c_bar);
    out += std::string("feasible=") + (r.feasible ? "true" : "false") + "\n";
    return out;
}

/// Multi-line human-readable rendering.
inline std::string to_text(const StabilityReport& r) {
    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "bounds       rho_min = %.6g, rho* = %.6g, rho_max = %.6g, eta = %.6g\n"
                  "look-ahead   F_max = %.10g, F_min = %.10g, f_min = %.10g\n"
                  "nudging      g_max = %.10g, g_min = %.10g, G_min = %.10g\n"
                  "condition    %.10g %s %.10g  (margin %.6g)\n"
                  "verdict      %s",
                  r.rho_min, r.rho_star, r.rho_max, r.eta, r.F_max, r.F_min, r.f_min, r.g_max,
                  r.g_min, r.G_min, r.lhs, r.feasible ? "<" : ">=", r.rhs, r.margin,
                  r.feasible ? "feasible" : "infeasible");
    std::string out(buf);
    if (r.feasible) {
        std::snprintf(buf, sizeof buf, ", V decays at least like exp(-%.6g t)", r.c_bar);
        out += buf;
    }
    return out + "\n";
}

struct DiagramRow {
    double rho = 0.0;
    double q_nudge = 0.0;
    double q_base = 0.0;
    double v_nudge = 0.0;
};

struct FundamentalDiagram {
    std::vector<DiagramRow> rows;
    double critical_nudge = 0.0;  ///< argmax of q_nudge over the grid
    double critical_base = 0.0;   ///< argmax of q_base over the grid
};

inline FundamentalDiagram fundamental_diagram(const SpeedLaw& law, double sigma,
                                              std::span<const double> rho_grid) {
    FundamentalDiagram fd;
    double best_nudge = -1.0, best_base = -1.0;
    double prev = -std::numeric_limits<double>::infinity();
    for (double rho : rho_grid) {
        if (!(rho >= 0.0) || !(rho > prev)) {
            throw InvalidInput("density grid must be non-negative and strictly increasing");
        }
        prev = rho;
        DiagramRow row{rho, equilibrium_flow(law, sigma, rho), rho * law.f(rho),
                       law.f(rho) * law.g(sigma * rho)};
        if (row.q_nudge > best_nudge) {
            best_nudge = row.q_nudge;
            fd.critical_nudge = rho;
        }
        if (row.q_base > best_base) {
            best_base = row.q_base;
            fd.critical_base = rho;
        }
        fd.rows.push_back(row);
    }
    return fd;
}

struct DecayFit {
    double rate = 0.0;       ///< minus the slope of ln(l2) against t
    double r_squared = 0.0;
    std::size_t points = 0;
    bool truncated = false;  ///< a value at or below the floor ended the window early
};

/**
 * Least-squares fit of ln(l2) = c - rate * t over records with t in [t_a, t_b].
 * Records with l2 <= floor end the window; the fit then uses the prefix before
 * them and is flagged as truncated.
 */
inline DecayFit fit_decay_rate(std::span<const double> t, std::span<const double> l2, double t_a,
                               double t_b, double floor = 0.0) {
    if (t.size() != l2.size()) throw InvalidInput("time and norm series differ in length");
    DecayFit fit;
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t_a || t[k] > t_b) continue;
        if (!(l2[k] > floor)) {
            fit.truncated = true;
            break;
        }
        xs.push_back(t[k]);
        ys.push_back(std::log(l2[k]));
    }
    fit.points = xs.size();
    if (xs.size() < 10) {
        throw InvalidInput("decay fit needs at least 10 positive records in the window, got " +
                           std::to_string(xs.size()));
    }
    const auto m = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    const double slope = sxy / sxx;
    fit.rate = -slope;
    double ss_res = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double e = ys[k] - (my + slope * (xs[k] - mx));
        ss_res += e * e;
    }
    // A flat series is fitted exactly.
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

/// Default fit floor relative to the first norm; below it the scheme's
/// increments fall under rounding and the log-norm stagnates.
inline constexpr double decay_fit_relative_floor = 1e-10;

/// Fit over the last `fraction` of the time span (default window).
inline DecayFit fit_decay_tail(std::span<const double> t, std::span<const double> l2,
                               double fraction = 0.6, double floor = 0.0) {
    if (t.empty()) throw InvalidInput("empty series");
    const double t0 = t.front(), t1 = t.back();
    return fit_decay_rate(t, l2, t1 - fraction * (t1 - t0), t1, floor);
}

/**
 * Largest ratio over the series of ||rho - rho*||^2 to the guaranteed
 * envelope (rho_max / rho_min) e^{-c_bar t} ||rho_0 - rho*||^2. Values <= 1
 * mean the envelope holds.
 */
inline double l2_envelope_ratio(std::span<const double> t, std::span<const double> l2,
                                const StabilityReport& report) {
    if (t.empty() || t.size() != l2.size()) throw InvalidInput("bad series");
    const double initial = l2.front() * l2.front();
    double worst = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double bound =
            report.rho_max / report.rho_min * std::exp(-report.c_bar * (t[k] - t.front())) * initial;
        if (bound > 0.0) worst = std::max(worst, l2[k] * l2[k] / bound);
    }
    return worst;
}

}  // namespace ringflow
