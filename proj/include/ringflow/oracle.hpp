#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ringflow/error.hpp"
#include "ringflow/grid.hpp"
#include "ringflow/solver.hpp"

namespace ringflow {

/**
 * Exact sinusoidal wave rho* + b sin(2 k q pi (x - c t)) of the look-ahead
 * model without nudging, for a uniform kernel of rational width eta = p / q.
 * The wave speed c is f(rho*).
 */
struct TravellingWave {
    double rho_star = 1.0;
    double amplitude = 0.0;
    int k = 1;
    int q = 1;
    double speed = 0.0;

    TravellingWave(double rho_star_, double amplitude_, int k_, int q_, double speed_)
        : rho_star(rho_star_), amplitude(amplitude_), k(k_), q(q_), speed(speed_) {
        if (!(rho_star > 0.0)) throw InvalidInput("wave needs rho* > 0");
        if (!(std::abs(amplitude) < rho_star)) throw InvalidInput("wave needs |b| < rho*");
        if (k <= 0 || q <= 0) throw InvalidInput("wave needs positive integers k and q");
    }

    double wavenumber() const { return 2.0 * M_PI * k * q; }
};

inline double wave_density(const TravellingWave& w, double t, double x) {
    return w.rho_star + w.amplitude * std::sin(w.wavenumber() * (x - w.speed * t));
}

/**
 * Uniform-window mean (1/eta) int_x^{x+eta} rho(t, s) ds of the wave, in
 * closed form. Requires eta k q to be an integer (whole periods in the
 * window), in which case the result is rho* up to rounding.
 */
inline double perceived_density_identity(const TravellingWave& w, double eta, double t, double x) {
    if (!(eta > 0.0 && eta <= 1.0)) throw InvalidInput("eta must lie in (0, 1]");
    const double periods = eta * w.k * w.q;
    if (std::abs(periods - std::round(periods)) > 1e-9 || std::round(periods) < 1.0) {
        throw InvalidInput("window of width " + std::to_string(eta) +
                           " does not cover a whole number of wave periods");
    }
    const double K = w.wavenumber();
    const double phase = x - w.speed * t;
    return w.rho_star +
           w.amplitude / (eta * K) * (std::cos(K * phase) - std::cos(K * (phase + eta)));
}

struct WaveError {
    double t = 0.0;
    double l2_error = 0.0;
    double sup_error = 0.0;
    double l2_deviation = 0.0;  ///< snapshot deviation from the wave's rho*
};

struct WaveComparison {
    std::vector<WaveError> rows;
    std::string warning;  ///< non-empty when the run is not the no-nudging model
};

/// Errors between each snapshot and the wave sampled on the same nodes.
inline WaveComparison compare_to_wave(const SimulationResult& result, const TravellingWave& w) {
    WaveComparison cmp;
    if (result.nudging) {
        cmp.warning = "run uses nudging; the travelling wave is not an exact solution of it";
    }
    auto& out = cmp.rows;
    out.reserve(result.profiles.size());
    for (std::size_t s = 0; s < result.profiles.size(); ++s) {
        const auto& p = result.profiles[s];
        const double t = result.times[s];
        std::vector<double> sq(p.n_cells());
        WaveError e;
        e.t = t;
        for (std::size_t i = 0; i < p.n_cells(); ++i) {
            const double d = p[i] - wave_density(w, t, p.node(i));
            sq[i] = d * d;
            e.sup_error = std::max(e.sup_error, std::abs(d));
        }
        e.l2_error = std::sqrt(compensated_sum(sq) * p.cell_width());
        e.l2_deviation = l2_deviation(p, w.rho_star);
        out.push_back(e);
    }
    return cmp;
}

}  // namespace ringflow
