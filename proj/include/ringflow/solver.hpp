#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ringflow/analysis.hpp"
#include "ringflow/error.hpp"
#include "ringflow/grid.hpp"
#include "ringflow/kernels.hpp"
#include "ringflow/speedlaws.hpp"

namespace ringflow {

enum class SchemeMode { nonlocal, lwr_godunov };

struct SchemeConfig {
    std::size_t n_cells = 500;
    double lambda = 0.25;          ///< time step / cell width
    double horizon = 40.0;         ///< requested T; realized T is steps * delta
    std::size_t snapshot_every = 0;  ///< 0: only first and last profile
    SchemeMode mode = SchemeMode::nonlocal;
    double cfl_margin = 0.05;

    double cell_width() const { return 1.0 / static_cast<double>(n_cells); }
    double time_step() const { return lambda * cell_width(); }
    std::size_t steps() const {
        return static_cast<std::size_t>(std::llround(horizon / time_step()));
    }
    double realized_horizon() const { return static_cast<double>(steps()) * time_step(); }
};

struct LambdaCheck {
    bool admissible = false;
    double max_stable_lambda = 0.0;  ///< (1 - margin) / v_max
};

/// lambda is admissible iff 0 < lambda and lambda * v_max <= 1 - margin.
inline LambdaCheck lambda_check(double lambda, double v_max, double margin = 0.05) {
    if (!(v_max > 0.0)) throw InvalidInput("v_max must be positive");
    LambdaCheck out;
    out.max_stable_lambda = (1.0 - margin) / v_max;
    out.admissible = lambda > 0.0 && lambda * v_max <= 1.0 - margin;
    return out;
}

/**
 * One explicit step of the non-local upwind scheme,
 *   rho_i+ = (1 - lambda v_{i+1}) rho_i + lambda v_i rho_{i-1},
 * written in flux-difference form with interface flux F_i = v_{i+1} rho_i
 * so the ring total telescopes.
 */
inline DensityProfile step_nonlocal(const DensityProfile& profile, const VelocityField& velocity,
                                    double lambda, std::size_t step_index = 0) {
    const auto n = profile.n_cells();
    if (velocity.size() != n) throw InvalidInput("velocity and profile sizes differ");
    const double vmax = *std::max_element(velocity.begin(), velocity.end());
    if (!(lambda > 0.0) || lambda * vmax > 1.0) {
        throw CflViolation("step ratio lambda * max(v) = " + std::to_string(lambda * vmax) +
                               " exceeds 1 at step " + std::to_string(step_index),
                           step_index);
    }
    std::vector<double> flux(n);
    for (std::size_t i = 0; i < n; ++i) flux[i] = velocity[(i + 1) % n] * profile[i];
    std::vector<double> next(n);
    next[0] = profile[0] - lambda * (flux[0] - flux[n - 1]);
    for (std::size_t i = 1; i < n; ++i) next[i] = profile[i] - lambda * (flux[i] - flux[i - 1]);
    return DensityProfile(std::move(next));
}

/**
 * Godunov flux for q(rho) = rho f(rho) with a single interior maximum at
 * rho_c. Unimodality is checked on a 10^4-point scan of [0, scan_max].
 */
class GodunovFlux {
public:
    explicit GodunovFlux(LawComponent f, double scan_max = 20.0) : f_(std::move(f)) {
        constexpr int samples = 10000;
        std::vector<double> q(samples + 1);
        std::size_t peak = 0;
        for (int k = 0; k <= samples; ++k) {
            q[k] = flux(scan_max * k / samples);
            if (q[k] > q[peak]) peak = static_cast<std::size_t>(k);
        }
        const double tol = 1e-14 * std::max(1.0, q[peak]);
        for (std::size_t k = 1; k <= peak; ++k) {
            if (q[k] < q[k - 1] - tol) throw InvalidInput("flux rho f(rho) is not unimodal");
        }
        for (std::size_t k = peak + 1; k < q.size(); ++k) {
            if (q[k] > q[k - 1] + tol) throw InvalidInput("flux rho f(rho) is not unimodal");
        }
        if (peak == 0 || peak == static_cast<std::size_t>(samples)) {
            throw InvalidInput("flux maximum is not interior to the scanned range");
        }
        // Golden-section refinement in the bracketing samples.
        double a = scan_max * (peak - 1) / samples;
        double b = scan_max * (peak + 1) / samples;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - gr * (b - a), d = a + gr * (b - a);
        for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, b); ++it) {
            if (flux(c) > flux(d)) {
                b = d;
            } else {
                a = c;
            }
            c = b - gr * (b - a);
            d = a + gr * (b - a);
        }
        critical_ = 0.5 * (a + b);
    }

    double flux(double rho) const { return rho * f_(rho); }
    double flux_slope(double rho) const { return f_(rho) + rho * f_.d1(rho); }
    double critical_density() const noexcept { return critical_; }
    const LawComponent& f() const noexcept { return f_; }

    /// Exact Riemann-problem flux at an interface with left/right states.
    double interface_flux(double left, double right) const {
        if (left <= right) {
            // min of q over [left, right]; q is unimodal so the min is at an end.
            return std::min(flux(left), flux(right));
        }
        if (critical_ >= right && critical_ <= left) return flux(critical_);
        return std::max(flux(left), flux(right));
    }

private:
    LawComponent f_;
    double critical_ = 0.0;
};

/// One conservative Godunov step for the local LWR model.
inline DensityProfile godunov_step(const DensityProfile& profile, const GodunovFlux& flux,
                                   double lambda, std::size_t step_index = 0) {
    const auto n = profile.n_cells();
    const auto s = stats(profile);
    double slope = 0.0;
    constexpr int probes = 256;
    for (int k = 0; k <= probes; ++k) {
        slope = std::max(slope, std::abs(flux.flux_slope(s.min + (s.max - s.min) * k / probes)));
    }
    if (!(lambda > 0.0) || lambda * slope > 1.0) {
        throw CflViolation("Godunov step ratio lambda * max|q'| = " +
                               std::to_string(lambda * slope) + " exceeds 1 at step " +
                               std::to_string(step_index),
                           step_index);
    }
    // F[i] sits between cell i and i+1.
    std::vector<double> F(n);
    for (std::size_t i = 0; i < n; ++i) F[i] = flux.interface_flux(profile[i], profile[(i + 1) % n]);
    std::vector<double> next(n);
    next[0] = profile[0] - lambda * (F[0] - F[n - 1]);
    for (std::size_t i = 1; i < n; ++i) next[i] = profile[i] - lambda * (F[i] - F[i - 1]);
    return DensityProfile(std::move(next));
}

inline DensityProfile godunov_step(const DensityProfile& profile, const LawComponent& f,
                                   double lambda) {
    return godunov_step(profile, GodunovFlux(f), lambda);
}

struct SeriesRecord {
    double t = 0.0;
    double mass = 0.0;
    double min = 0.0;
    double max = 0.0;
    double l2 = 0.0;  ///< L2 deviation from the initial discrete mass
    double V = 0.0;   ///< relative-entropy functional
};

struct SimulationResult {
    std::vector<double> times;
    std::vector<DensityProfile> profiles;
    std::vector<VelocityField> velocities;
    std::vector<SeriesRecord> series;
    double rho_star = 0.0;
    std::size_t steps = 0;
    double time_step = 0.0;
    bool nudging = false;

    std::vector<double> series_times() const {
        std::vector<double> out;
        out.reserve(series.size());
        for (const auto& r : series) out.push_back(r.t);
        return out;
    }
    std::vector<double> series_l2() const {
        std::vector<double> out;
        out.reserve(series.size());
        for (const auto& r : series) out.push_back(r.l2);
        return out;
    }
};

namespace detail {

inline SeriesRecord record(const DensityProfile& p, double t, double rho_star) {
    const auto s = stats(p);
    return {t, s.mass, s.min, s.max, l2_deviation(p, rho_star), lyapunov_V(p, rho_star)};
}

}  // namespace detail

/**
 * Runs the configured scheme for round(T / delta) steps, recording the
 * series after every step and snapshots every `snapshot_every` steps (plus
 * the initial and final states). In non-local mode the velocity is evaluated
 * once per step from the pre-update profile.
 */
inline SimulationResult run(const SchemeConfig& config, const DensityProfile& ic,
                            const SpeedLaw& law, const std::optional<DiscreteWeights>& down,
                            const std::optional<DiscreteWeights>& up) {
    if (ic.n_cells() != config.n_cells) throw InvalidInput("initial profile has the wrong size");
    if (!(config.horizon >= 0.0)) throw InvalidInput("horizon must be non-negative");
    const bool nonlocal = config.mode == SchemeMode::nonlocal;
    if (nonlocal) {
        if (!down) throw InvalidInput("non-local mode needs downstream weights");
        const auto check = lambda_check(config.lambda, law.v_max, config.cfl_margin);
        if (!check.admissible) {
            throw CflViolation("lambda = " + std::to_string(config.lambda) +
                                   " is not admissible; largest stable lambda is " +
                                   std::to_string(check.max_stable_lambda),
                               0);
        }
    } else if (!(config.lambda > 0.0)) {
        throw InvalidInput("lambda must be positive");
    }

    std::optional<GodunovFlux> godunov;
    if (!nonlocal) godunov.emplace(law.f);

    SimulationResult result;
    result.rho_star = stats(ic).mass;
    result.steps = config.steps();
    result.time_step = config.time_step();
    result.nudging = nonlocal && up.has_value();
    result.series.reserve(result.steps + 1);

    auto velocity_of = [&](const DensityProfile& p) {
        if (nonlocal) return discrete_velocity(law, *down, up, p);
        VelocityField v(p.n_cells());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = law.f(p[i]);
        return v;
    };

    DensityProfile current = ic;
    auto snapshot = [&](double t, VelocityField v) {
        result.times.push_back(t);
        result.profiles.push_back(current);
        result.velocities.push_back(std::move(v));
    };

    result.series.push_back(detail::record(current, 0.0, result.rho_star));
    VelocityField v = velocity_of(current);
    snapshot(0.0, v);
    for (std::size_t k = 0; k < result.steps; ++k) {
        current = nonlocal ? step_nonlocal(current, v, config.lambda, k)
                           : godunov_step(current, *godunov, config.lambda, k);
        const double t = static_cast<double>(k + 1) * result.time_step;
        result.series.push_back(detail::record(current, t, result.rho_star));
        const bool last = k + 1 == result.steps;
        if (nonlocal || last || (config.snapshot_every && (k + 1) % config.snapshot_every == 0)) {
            v = velocity_of(current);
        }
        if (last || (config.snapshot_every && (k + 1) % config.snapshot_every == 0)) {
            snapshot(t, v);
        }
    }
    return result;
}

}  // namespace ringflow
