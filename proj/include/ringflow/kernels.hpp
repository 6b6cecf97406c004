#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ringflow/error.hpp"
#include "ringflow/grid.hpp"
#include "ringflow/quadrature.hpp"

namespace ringflow {

enum class Direction { downstream, upstream };

inline const char* to_string(Direction d) {
    return d == Direction::downstream ? "downstream" : "upstream";
}

/**
 * A look-ahead (downstream) or look-behind (upstream) convolution kernel.
 *
 * The shape is non-negative and non-increasing on [0, support] and zero
 * beyond it. When an antiderivative is supplied (anchored so that
 * antiderivative(0) == 0) cell integrals are evaluated in closed form;
 * otherwise they fall back to Gauss-Legendre quadrature.
 */
class KernelSpec {
public:
    using Fn = std::function<double(double)>;

    /// Constant 1/eta on [0, eta]; unit mass.
    static KernelSpec uniform_downstream(double eta) {
        if (!(eta > 0.0 && eta <= 1.0)) {
            throw InvalidInput("uniform kernel needs eta in (0, 1], got " + std::to_string(eta));
        }
        return KernelSpec(Direction::downstream, eta, [eta](double) { return 1.0 / eta; },
                          [eta](double x) { return x / eta; }, "uniform");
    }

    /// 1 - x restricted to [0, zeta], zero beyond; not renormalized.
    static KernelSpec linear_upstream(double zeta) {
        if (!(zeta > 0.0 && zeta <= 1.0)) {
            throw InvalidInput("linear kernel needs zeta in (0, 1], got " + std::to_string(zeta));
        }
        return KernelSpec(Direction::upstream, zeta, [](double x) { return 1.0 - x; },
                          [](double x) { return x - 0.5 * x * x; }, "linear");
    }

    /// User kernel. Monotonicity and sign are validated on 10^4 samples.
    static KernelSpec custom(Direction direction, double support, Fn shape,
                             std::optional<Fn> antiderivative = std::nullopt,
                             std::string name = "custom") {
        if (!(support > 0.0 && support <= 1.0)) {
            throw InvalidInput("kernel support must lie in (0, 1], got " + std::to_string(support));
        }
        if (!shape) throw InvalidInput("kernel shape must be callable");
        constexpr int samples = 10000;
        double prev = shape(0.0);
        for (int k = 0; k <= samples; ++k) {
            const double x = support * static_cast<double>(k) / samples;
            const double v = shape(x);
            if (!std::isfinite(v) || v < 0.0) {
                throw InvalidInput("kernel shape must be finite and non-negative; shape(" +
                                   std::to_string(x) + ") = " + std::to_string(v));
            }
            if (v > prev + 1e-12) {
                throw InvalidInput("kernel shape must be non-increasing; it increases near x = " +
                                   std::to_string(x));
            }
            prev = v;
        }
        return KernelSpec(direction, support, std::move(shape),
                          antiderivative ? std::move(*antiderivative) : Fn{}, std::move(name));
    }

    Direction direction() const noexcept { return direction_; }
    double support() const noexcept { return support_; }
    const std::string& name() const noexcept { return name_; }
    bool has_antiderivative() const noexcept { return static_cast<bool>(antiderivative_); }

    /// Kernel value; zero outside [0, support].
    double operator()(double x) const {
        if (x < 0.0 || x > support_) return 0.0;
        return shape_(x);
    }

    /// Integral of the kernel over [a, b] (clipped to the support).
    double integral(double a, double b) const {
        const double lo = std::clamp(a, 0.0, support_);
        const double hi = std::clamp(b, 0.0, support_);
        if (!(hi > lo)) return 0.0;
        if (antiderivative_) return antiderivative_(hi) - antiderivative_(lo);
        return quad::gauss_legendre(shape_, lo, hi);
    }

    double total_mass() const { return integral(0.0, support_); }

    /// True for a downstream kernel of unit mass (within 1e-12).
    bool normalized() const {
        return direction_ == Direction::downstream && std::abs(total_mass() - 1.0) <= 1e-12;
    }

private:
    KernelSpec(Direction direction, double support, Fn shape, Fn antiderivative, std::string name)
        : direction_(direction),
          support_(support),
          shape_(std::move(shape)),
          antiderivative_(std::move(antiderivative)),
          name_(std::move(name)) {}

    Direction direction_;
    double support_;
    Fn shape_;
    Fn antiderivative_;
    std::string name_;
};

/// Total upstream kernel mass, the equilibrium nudging gain.
inline double sigma(const KernelSpec& kernel) {
    if (kernel.direction() != Direction::upstream) {
        throw InvalidInput("sigma is defined for upstream kernels only");
    }
    return kernel.total_mass();
}

/**
 * Per-cell quadrature weights of a kernel on an N-cell ring.
 *
 * Downstream: w[j] = integral of the kernel over [j h, (j+1) h], j = 0..N-1,
 * applied to the cell j positions ahead.
 * Upstream: w[j] = integral over [1 - j h, 1 - (j-1) h], j = 1..N-1, applied
 * to cell i + j, which on the ring is the cell N - j positions behind; w[0] = 0.
 */
class DiscreteWeights {
public:
    DiscreteWeights(Direction direction, std::vector<double> weights)
        : direction_(direction), weights_(std::move(weights)) {
        if (weights_.size() < 3) throw InvalidInput("weights need at least 3 cells");
        if (direction_ == Direction::upstream) weights_[0] = 0.0;
        first_ = weights_.size();
        last_ = 0;
        for (std::size_t j = 0; j < weights_.size(); ++j) {
            if (weights_[j] < 0.0) throw InvalidInput("kernel weights must be non-negative");
            if (weights_[j] != 0.0) {
                first_ = std::min(first_, j);
                last_ = j;
            }
        }
        // Leading run of identical weights, used by the prefix-sum path.
        run_ = 0;
        if (first_ == 0) {
            while (run_ < weights_.size() && weights_[run_] == weights_[0]) ++run_;
        }
    }

    Direction direction() const noexcept { return direction_; }
    std::size_t n_cells() const noexcept { return weights_.size(); }
    std::span<const double> weights() const noexcept { return weights_; }
    double operator[](std::size_t j) const noexcept { return weights_[j]; }
    double total() const { return compensated_sum(weights_); }

    /// Non-zero weights lie in [first_nonzero, last_nonzero]; empty if first > last.
    std::size_t first_nonzero() const noexcept { return first_; }
    std::size_t last_nonzero() const noexcept { return last_; }
    std::size_t leading_run() const noexcept { return run_; }

private:
    Direction direction_;
    std::vector<double> weights_;
    std::size_t first_ = 0;
    std::size_t last_ = 0;
    std::size_t run_ = 0;
};

inline DiscreteWeights discretize(const KernelSpec& kernel, std::size_t n_cells) {
    if (n_cells < 3) throw InvalidInput("n_cells must be at least 3");
    const double n = static_cast<double>(n_cells);
    std::vector<double> w(n_cells, 0.0);
    if (kernel.direction() == Direction::downstream) {
        for (std::size_t j = 0; j < n_cells; ++j) {
            w[j] = kernel.integral(static_cast<double>(j) / n, static_cast<double>(j + 1) / n);
        }
    } else {
        for (std::size_t j = 1; j < n_cells; ++j) {
            // [1 - j h, 1 - (j-1) h] = [m h, (m+1) h] with m = N - j.
            const auto m = static_cast<double>(n_cells - j);
            w[j] = kernel.integral(m / n, (m + 1.0) / n);
        }
    }
    return DiscreteWeights(kernel.direction(), std::move(w));
}

/// Quadrature functional at `base_cell`: sum_j w[j] * rho[base_cell + j] (cyclic).
inline double apply_weights(const DiscreteWeights& weights, std::span<const double> rho,
                            std::int64_t base_cell) {
    const auto n = weights.n_cells();
    if (rho.size() != n) {
        throw InvalidInput("weights cover " + std::to_string(n) + " cells but profile has " +
                           std::to_string(rho.size()));
    }
    double acc = 0.0;
    for (std::size_t j = weights.first_nonzero(); j <= weights.last_nonzero() && j < n; ++j) {
        acc += weights[j] * rho[wrap_index(base_cell + static_cast<std::int64_t>(j), n)];
    }
    return acc;
}

inline double apply_weights(const DiscreteWeights& weights, const DensityProfile& profile,
                            std::int64_t base_cell) {
    return apply_weights(weights, profile.values(), base_cell);
}

/**
 * apply_weights for every base cell at once. The profile is unrolled into a
 * doubled buffer so each cell is a contiguous dot product. With
 * `prefix_fast_path` the leading run of equal weights is summed through
 * prefix sums instead (agrees with the direct path to ~1e-14).
 */
inline std::vector<double> apply_weights_all(const DiscreteWeights& weights,
                                             std::span<const double> rho,
                                             bool prefix_fast_path = false) {
    const auto n = weights.n_cells();
    if (rho.size() != n) {
        throw InvalidInput("weights cover " + std::to_string(n) + " cells but profile has " +
                           std::to_string(rho.size()));
    }
    std::vector<double> out(n, 0.0);
    if (weights.first_nonzero() > weights.last_nonzero()) return out;

    std::vector<double> ext(2 * n);
    std::copy(rho.begin(), rho.end(), ext.begin());
    std::copy(rho.begin(), rho.end(), ext.begin() + static_cast<std::ptrdiff_t>(n));

    std::size_t j0 = weights.first_nonzero();
    const std::size_t j1 = weights.last_nonzero() + 1;
    const double* w = weights.weights().data();

    if (prefix_fast_path && weights.leading_run() >= 2) {
        const std::size_t run = std::min(weights.leading_run(), j1);
        std::vector<double> prefix(2 * n + 1, 0.0);
        for (std::size_t k = 0; k < 2 * n; ++k) prefix[k + 1] = prefix[k] + ext[k];
        for (std::size_t i = 0; i < n; ++i) out[i] = w[0] * (prefix[i + run] - prefix[i]);
        j0 = run;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = ext.data() + i;
        // Four partial sums so the loop pipelines; the order is fixed, so results are reproducible.
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        std::size_t j = j0;
        for (; j + 4 <= j1; j += 4) {
            a0 += w[j] * r[j];
            a1 += w[j + 1] * r[j + 1];
            a2 += w[j + 2] * r[j + 2];
            a3 += w[j + 3] * r[j + 3];
        }
        for (; j < j1; ++j) a0 += w[j] * r[j];
        out[i] += (a0 + a1) + (a2 + a3);
    }
    return out;
}

/**
 * Residuals |LHS - RHS| of the six exact shift identities satisfied by the
 * downstream functional B and the upstream functional Bu:
 *
 *   [0] B(rho1) - B(rho)                      (first difference, downstream)
 *   [1] Bu(rho1) - Bu(rho)                    (first difference, upstream)
 *   [2] 2 B(rho1) - B(rho) - B(rho2)          (second difference via y)
 *   [3] 2 Bu(rho1) - Bu(rho) - Bu(rho2)
 *   [4] 3 B(rho1) + B(rho3) - B(rho) - 3 B(rho2)   (third difference via phi)
 *   [5] the same for Bu
 *
 * where rhoK is the K-fold cyclic left shift, y = (rho1 - rho)/h and
 * phi = (rho2 - 2 rho1 + rho)/h^2. Left sides use shifted dot products;
 * right sides are the re-expressions through weight differences.
 */
inline std::array<double, 6> shift_identity_residuals(const DiscreteWeights& down,
                                                      const DiscreteWeights& up,
                                                      std::span<const double> rho) {
    const auto n = rho.size();
    if (n < 5) throw InvalidInput("shift identities need at least 5 cells");
    if (down.n_cells() != n || up.n_cells() != n) {
        throw InvalidInput("weights and vector disagree on the cell count");
    }
    if (down.direction() != Direction::downstream || up.direction() != Direction::upstream) {
        throw InvalidInput("expected a downstream and an upstream weight set");
    }
    const double h = 1.0 / static_cast<double>(n);
    auto at = [&](std::span<const double> v, std::size_t i) { return v[i % n]; };

    std::vector<double> y(n), phi(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = (at(rho, i + 1) - rho[i]) / h;
        phi[i] = (at(rho, i + 2) - 2.0 * at(rho, i + 1) + rho[i]) / (h * h);
    }

    const double b0 = apply_weights(down, rho, 0), b1 = apply_weights(down, rho, 1);
    const double b2 = apply_weights(down, rho, 2), b3 = apply_weights(down, rho, 3);
    const double u0 = apply_weights(up, rho, 0), u1 = apply_weights(up, rho, 1);
    const double u2 = apply_weights(up, rho, 2), u3 = apply_weights(up, rho, 3);

    // Downstream: D_i = W_{i-1} - W_i, E = W_0 - W_{N-1}.
    const double e_down = down[0] - down[n - 1];
    auto down_rhs = [&](std::span<const double> v) {
        double s = 0.0;
        for (std::size_t i = 1; i < n; ++i) s += v[i] * (down[i - 1] - down[i]);
        return s - v[0] * e_down;
    };
    // Upstream: U_{N-1} is the [h, 2h] mass, U_1 the [1-h, 1] mass,
    // and U_i - U_{i-1} the integral of (kernel(s) - kernel(s + h)) on cell i.
    auto up_rhs = [&](std::span<const double> v) {
        double s = v[0] * up[n - 1] - v[1] * up[1];
        for (std::size_t i = 2; i < n; ++i) s -= v[i] * (up[i] - up[i - 1]);
        return s;
    };

    std::array<double, 6> r{};
    r[0] = std::abs((b1 - b0) - down_rhs(rho));
    r[1] = std::abs((u1 - u0) - up_rhs(rho));
    r[2] = std::abs((2.0 * b1 - b0 - b2) - (-h * down_rhs(y)));
    r[3] = std::abs((2.0 * u1 - u0 - u2) - (-h * up_rhs(y)));
    r[4] = std::abs((3.0 * b1 + b3 - b0 - 3.0 * b2) - h * h * down_rhs(phi));
    r[5] = std::abs((3.0 * u1 + u3 - u0 - 3.0 * u2) - h * h * up_rhs(phi));
    return r;
}

}  // namespace ringflow
