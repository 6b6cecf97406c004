#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ringflow/error.hpp"
#include "ringflow/grid.hpp"
#include "ringflow/kernels.hpp"
#include "ringflow/quadrature.hpp"

namespace ringflow {

/// Shape of |first derivative| on [0, inf); lets extremum searches use endpoints.
enum class SlopeShape { decreasing, increasing, unimodal_peak, unknown };

/**
 * One factor of the speed law: the look-ahead factor f or the nudging factor g,
 * with derivatives up to third order.
 */
struct LawComponent {
    using Fn = std::function<double(double)>;

    std::string name;
    Fn value, d1, d2, d3;
    double sup_value = std::numeric_limits<double>::infinity();
    /// sup over rho >= 0 of |value| + |d1| + |d2| + |d3|.
    double derivative_sum_sup = std::numeric_limits<double>::infinity();
    SlopeShape slope_shape = SlopeShape::unknown;

    double operator()(double x) const { return value(x); }

    /// Component from arbitrary callables. The derivative-sum bound is
    /// estimated by scanning [0, scan_max].
    static LawComponent custom(std::string name, Fn value, Fn d1, Fn d2, Fn d3, double sup_value,
                               SlopeShape slope_shape = SlopeShape::unknown,
                               double scan_max = 50.0) {
        LawComponent c{std::move(name), std::move(value), std::move(d1), std::move(d2),
                       std::move(d3), sup_value, 0.0, slope_shape};
        double m = 0.0;
        constexpr int samples = 10000;
        for (int k = 0; k <= samples; ++k) {
            const double x = scan_max * static_cast<double>(k) / samples;
            m = std::max(m, std::abs(c.value(x)) + std::abs(c.d1(x)) + std::abs(c.d2(x)) +
                                std::abs(c.d3(x)));
        }
        c.derivative_sum_sup = m;
        return c;
    }
};

/// f(rho) = A exp(-b rho).
inline LawComponent exp_f(double A, double b) {
    if (!(A > 0.0) || !(b > 0.0)) {
        throw InvalidInput("exp law needs A > 0 and b > 0");
    }
    LawComponent c;
    c.name = "exp(A=" + std::to_string(A) + ", b=" + std::to_string(b) + ")";
    c.value = [A, b](double x) { return A * std::exp(-b * x); };
    c.d1 = [A, b](double x) { return -b * A * std::exp(-b * x); };
    c.d2 = [A, b](double x) { return b * b * A * std::exp(-b * x); };
    c.d3 = [A, b](double x) { return -b * b * b * A * std::exp(-b * x); };
    c.sup_value = A;
    c.derivative_sum_sup = A * (1.0 + b + b * b + b * b * b);
    c.slope_shape = SlopeShape::decreasing;
    return c;
}

/**
 * g(s) = (1 + kappa) e^{a s} / (kappa + e^{a s}); g(0) = 1, sup g = 1 + kappa.
 * Evaluated through u = kappa e^{-a s} so large arguments cannot overflow.
 */
inline LawComponent logistic_g(double kappa, double a) {
    if (!(kappa > 0.0) || !(a > 0.0)) {
        throw InvalidInput("logistic law needs kappa > 0 and a > 0");
    }
    const double k1 = 1.0 + kappa;
    auto u = [kappa, a](double s) { return kappa * std::exp(-a * s); };
    LawComponent c;
    c.name = "logistic(kappa=" + std::to_string(kappa) + ", a=" + std::to_string(a) + ")";
    c.value = [k1, u](double s) { return k1 / (1.0 + u(s)); };
    c.d1 = [k1, a, u](double s) {
        const double v = u(s);
        return k1 * a * v / ((1.0 + v) * (1.0 + v));
    };
    c.d2 = [k1, a, u](double s) {
        const double v = u(s);
        return -a * a * k1 * v * (1.0 - v) / std::pow(1.0 + v, 3);
    };
    c.d3 = [k1, a, u](double s) {
        const double v = u(s);
        return a * a * a * k1 * v * (1.0 - 4.0 * v + v * v) / std::pow(1.0 + v, 4);
    };
    c.sup_value = k1;
    // g' is proportional to v / (1 + v)^2, which peaks at v = 1, i.e. s = ln(kappa) / a.
    c.slope_shape = kappa <= 1.0 ? SlopeShape::decreasing : SlopeShape::unimodal_peak;
    double m = 0.0;
    const double scan_max = 50.0 / a + std::max(0.0, std::log(kappa) / a);
    for (int k = 0; k <= 10000; ++k) {
        const double s = scan_max * k / 10000.0;
        m = std::max(m, std::abs(c.value(s)) + std::abs(c.d1(s)) + std::abs(c.d2(s)) +
                            std::abs(c.d3(s)));
    }
    c.derivative_sum_sup = m;
    return c;
}

/// g(s) = (1 + a s) / (1 + gamma s) with a > gamma >= 0.
inline LawComponent rational_g(double a, double gamma) {
    if (!(gamma >= 0.0) || !(a > gamma)) {
        throw InvalidInput("rational law needs a > gamma >= 0");
    }
    LawComponent c;
    c.name = "rational(a=" + std::to_string(a) + ", gamma=" + std::to_string(gamma) + ")";
    const double diff = a - gamma;
    c.value = [a, gamma](double s) { return (1.0 + a * s) / (1.0 + gamma * s); };
    c.d1 = [diff, gamma](double s) { return diff / std::pow(1.0 + gamma * s, 2); };
    c.d2 = [diff, gamma](double s) { return -2.0 * gamma * diff / std::pow(1.0 + gamma * s, 3); };
    c.d3 = [diff, gamma](double s) {
        return 6.0 * gamma * gamma * diff / std::pow(1.0 + gamma * s, 4);
    };
    if (gamma > 0.0) {
        c.sup_value = a / gamma;
        // Each term is maximal at s = 0 except |g| itself, which is bounded by a/gamma.
        c.derivative_sum_sup = a / gamma + diff * (1.0 + 2.0 * gamma + 6.0 * gamma * gamma);
    }
    c.slope_shape = SlopeShape::decreasing;
    return c;
}

/// g identically 1 (no nudging).
inline LawComponent unit_g() {
    LawComponent c;
    c.name = "none";
    c.value = [](double) { return 1.0; };
    c.d1 = c.d2 = c.d3 = [](double) { return 0.0; };
    c.sup_value = 1.0;
    c.derivative_sum_sup = 1.0;
    c.slope_shape = SlopeShape::decreasing;
    return c;
}

/**
 * Speed law v = f(downstream perception) * g(upstream perception).
 *
 * v_max = sup f * sup g. bound_M is the sum of the two derivative-sum bounds.
 */
struct SpeedLaw {
    LawComponent f;
    LawComponent g;
    double v_max = 0.0;
    double bound_M = 0.0;

    double speed(double downstream, double upstream) const { return f(downstream) * g(upstream); }
};

/// Builds a law and checks the sign/monotonicity requirements on sampled points.
inline SpeedLaw make_law(LawComponent f, LawComponent g, double scan_max = 20.0) {
    for (int k = 0; k <= 1000; ++k) {
        const double x = scan_max * k / 1000.0;
        if (!(f(x) > 0.0) || f.d1(x) > 0.0) {
            throw InvalidInput("f must be positive and non-increasing; fails at " + std::to_string(x));
        }
        if (!(g(x) >= 1.0 - 1e-15) || g.d1(x) < 0.0) {
            throw InvalidInput("g must be >= 1 and non-decreasing; fails at " + std::to_string(x));
        }
    }
    SpeedLaw law;
    law.v_max = f.sup_value * g.sup_value;
    law.bound_M = f.derivative_sum_sup + g.derivative_sum_sup;
    law.f = std::move(f);
    law.g = std::move(g);
    return law;
}

using VelocityField = std::vector<double>;

/**
 * Discrete non-local velocity: v[i] = f(B rho^(i)) * g(Bu rho^(i)), with the
 * g factor dropped (taken as 1) when no upstream weights are given.
 */
inline VelocityField discrete_velocity(const SpeedLaw& law, const DiscreteWeights& down,
                                       const std::optional<DiscreteWeights>& up,
                                       const DensityProfile& profile,
                                       bool prefix_fast_path = false) {
    const auto n = profile.n_cells();
    if (down.n_cells() != n || (up && up->n_cells() != n)) {
        throw InvalidInput("kernel weights and profile disagree on the cell count");
    }
    const auto ahead = apply_weights_all(down, profile.values(), prefix_fast_path);
    VelocityField v(n);
    if (up) {
        const auto behind = apply_weights_all(*up, profile.values());
        for (std::size_t i = 0; i < n; ++i) v[i] = law.f(ahead[i]) * law.g(behind[i]);
    } else {
        for (std::size_t i = 0; i < n; ++i) v[i] = law.f(ahead[i]);
    }
    return v;
}

namespace detail {

// Integral of kernel(r) * density(x + dir * r) over r in [0, support], split
// wherever x + dir * r crosses a multiple of `node_spacing` (0 disables splitting).
template <typename DensityFn>
double window_integral(const KernelSpec& kernel, const DensityFn& density, double x, double dir,
                       double node_spacing) {
    const double support = kernel.support();
    auto integrand = [&](double r) { return kernel(r) * density(x + dir * r); };
    std::vector<double> cuts{0.0};
    if (node_spacing > 0.0) {
        // r values at which x + dir * r is a node k * node_spacing.
        const double start = x / node_spacing;
        if (dir > 0) {
            for (double k = std::floor(start) + 1.0;; k += 1.0) {
                const double r = k * node_spacing - x;
                if (r >= support) break;
                if (r > 0.0) cuts.push_back(r);
            }
        } else {
            for (double k = std::ceil(start) - 1.0;; k -= 1.0) {
                const double r = x - k * node_spacing;
                if (r >= support) break;
                if (r > 0.0) cuts.push_back(r);
            }
        }
    }
    cuts.push_back(support);
    if (node_spacing <= 0.0) return quad::adaptive(integrand, 0.0, support);
    // Between nodes the integrand is smooth (polynomial for the built-in
    // kernels and a piecewise-linear density), so a fixed rule suffices.
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        total += quad::gauss_legendre(integrand, cuts[p], cuts[p + 1]);
    }
    return total;
}

}  // namespace detail

/**
 * Continuum velocity f(int_x^{x+eta} w(s-x) rho(s) ds) * g(int_{x-zeta}^x wu(x-s) rho(s) ds)
 * for an arbitrary 1-periodic density callable. Reference values only; the
 * solver never calls this.
 */
template <typename DensityFn>
double continuum_velocity(const SpeedLaw& law, const KernelSpec& down,
                          const std::optional<KernelSpec>& up, const DensityFn& density, double x,
                          double node_spacing = 0.0) {
    const double ahead = detail::window_integral(down, density, x, +1.0, node_spacing);
    const double behind =
        up ? detail::window_integral(*up, density, x, -1.0, node_spacing) : 0.0;
    return up ? law.f(ahead) * law.g(behind) : law.f(ahead);
}

/// Continuum velocity of the piecewise-linear interpolant of `profile`, at x.
inline double continuum_velocity_oracle(const SpeedLaw& law, const KernelSpec& down,
                                        const std::optional<KernelSpec>& up,
                                        const DensityProfile& profile, double x) {
    auto density = [&profile](double s) { return interpolate(profile, s); };
    return continuum_velocity(law, down, up, density, x, profile.cell_width());
}

/// Equilibrium flow with nudging: rho f(rho) g(sigma rho).
inline double equilibrium_flow(const SpeedLaw& law, double sigma, double rho) {
    if (!(rho >= 0.0)) throw InvalidInput("equilibrium density must be non-negative");
    return rho * law.f(rho) * law.g(sigma * rho);
}

struct VelocityTerm {
    SpeedLaw law;
    DiscreteWeights down;
    std::optional<DiscreteWeights> up;
};

/// Sum of several speed-adjustment terms, evaluated cellwise.
inline VelocityField multi_term_velocity(const std::vector<VelocityTerm>& terms,
                                         const DensityProfile& profile) {
    if (terms.empty()) throw InvalidInput("multi-term velocity needs at least one term");
    VelocityField total(profile.n_cells(), 0.0);
    for (const auto& term : terms) {
        const auto v = discrete_velocity(term.law, term.down, term.up, profile);
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += v[i];
    }
    return total;
}

}  // namespace ringflow
