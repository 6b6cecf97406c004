#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ringflow/error.hpp"

namespace ringflow {

/// Neumaier-compensated sum; used wherever conserved totals are measured.
inline double compensated_sum(std::span<const double> xs) {
    double sum = 0.0;
    double comp = 0.0;
    for (double x : xs) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

/// Cyclic index reduction into [0, n).
inline std::size_t wrap_index(std::int64_t i, std::size_t n) {
    const auto nn = static_cast<std::int64_t>(n);
    auto r = i % nn;
    if (r < 0) r += nn;
    return static_cast<std::size_t>(r);
}

/**
 * Point values of a density on the N nodes x_i = i/N of the unit ring.
 *
 * Every value is strictly positive and finite; the cell count is at least 3.
 * Indices passed to at() are reduced modulo N, so neighbours across the
 * wrap-around are addressed as at(-1), at(N) and so on.
 */
class DensityProfile {
public:
    explicit DensityProfile(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < 3) {
            throw InvalidInput("density profile needs at least 3 cells, got " +
                               std::to_string(values_.size()));
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            const double v = values_[i];
            if (!std::isfinite(v) || !(v > 0.0)) {
                throw InvalidInput("density must be positive and finite; cell " +
                                   std::to_string(i) + " holds " + std::to_string(v));
            }
        }
    }

    std::size_t n_cells() const noexcept { return values_.size(); }
    double cell_width() const noexcept { return 1.0 / static_cast<double>(values_.size()); }

    /// Node coordinate i/N, computed by a single correctly rounded division.
    double node(std::size_t i) const noexcept {
        return static_cast<double>(i) / static_cast<double>(values_.size());
    }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double at(std::int64_t i) const noexcept { return values_[wrap_index(i, values_.size())]; }

    std::span<const double> values() const noexcept { return values_; }

    /// Cyclic shift: result[i] = (*this)[i + offset].
    DensityProfile shifted(std::int64_t offset) const {
        std::vector<double> out(values_.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = at(static_cast<std::int64_t>(i) + offset);
        }
        return DensityProfile(std::move(out));
    }

    friend bool operator==(const DensityProfile&, const DensityProfile&) = default;

private:
    std::vector<double> values_;
};

struct ProfileStats {
    double min = 0.0;
    double max = 0.0;
    double mass = 0.0;  ///< h * sum(values), the midpoint approximation of the ring integral
    double mean = 0.0;  ///< equals mass on the unit ring
};

/// Samples `ic` at the nodes i/N.
template <typename Fn>
DensityProfile sample(Fn&& ic, std::size_t n_cells) {
    if (n_cells < 3) {
        throw InvalidInput("n_cells must be at least 3, got " + std::to_string(n_cells));
    }
    std::vector<double> values(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n_cells);
        values[i] = ic(x);
        if (!std::isfinite(values[i]) || !(values[i] > 0.0)) {
            throw InvalidInput("initial density must be positive at every node; ic(" +
                               std::to_string(x) + ") = " + std::to_string(values[i]));
        }
    }
    return DensityProfile(std::move(values));
}

/// Piecewise-linear, 1-periodic interpolant through the node values.
inline double interpolate(const DensityProfile& profile, double x) {
    const auto n = profile.n_cells();
    const double xr = x - std::floor(x);
    const double scaled = xr * static_cast<double>(n);
    // i / n * n can land a few ulps either side of i; snap so nodes are reproduced exactly.
    const double nearest = std::round(scaled);
    if (std::abs(scaled - nearest) <= 8.0 * std::numeric_limits<double>::epsilon() * (nearest + 1.0)) {
        return profile[static_cast<std::size_t>(nearest) % n];
    }
    auto cell = static_cast<std::size_t>(std::floor(scaled));
    if (cell >= n) cell = n - 1;
    const double frac = scaled - static_cast<double>(cell);
    const double left = profile[cell];
    const double right = profile[(cell + 1) % n];
    return left + (right - left) * frac;
}

inline ProfileStats stats(const DensityProfile& profile) {
    ProfileStats s;
    s.min = profile[0];
    s.max = profile[0];
    for (double v : profile.values()) {
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mass = compensated_sum(profile.values()) * profile.cell_width();
    s.mean = s.mass;
    return s;
}

/// Midpoint-rule L2(0,1) norm of (profile - ref_density).
inline double l2_deviation(const DensityProfile& profile, double ref_density) {
    if (!(ref_density > 0.0)) {
        throw InvalidInput("reference density must be positive");
    }
    std::vector<double> sq(profile.n_cells());
    for (std::size_t i = 0; i < sq.size(); ++i) {
        const double d = profile[i] - ref_density;
        sq[i] = d * d;
    }
    return std::sqrt(compensated_sum(sq) * profile.cell_width());
}

namespace ic {

/// Congestion belt on [0.5, 0.75] (both ends closed) over a 0.55 background.
inline double congestion_belt(double x) {
    const double xr = x - std::floor(x);
    return (xr >= 0.5 && xr <= 0.75) ? 2.35 : 0.55;
}

/// 1 + amplitude * sin(2 pi frequency x).
struct Sine {
    double base = 1.0;
    double amplitude = 0.2;
    double frequency = 10.0;

    double operator()(double x) const {
        return base + amplitude * std::sin(2.0 * M_PI * frequency * x);
    }
};

}  // namespace ic

}  // namespace ringflow
