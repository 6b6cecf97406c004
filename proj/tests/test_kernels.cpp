#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ringflow/kernels.hpp"

using namespace ringflow;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = 0.5,
                                  double hi = 2.5) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

std::vector<long double> widen(const std::vector<double>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(UniformKernel, ShapeAndMass) {
    const auto k = KernelSpec::uniform_downstream(0.1);
    EXPECT_DOUBLE_EQ(k(0.05), 10.0);
    EXPECT_EQ(k(0.2), 0.0);
    EXPECT_EQ(k(-0.01), 0.0);
    EXPECT_NEAR(k.integral(0.0, 0.1), 1.0, 1e-15);
    EXPECT_TRUE(k.normalized());
    EXPECT_EQ(k.direction(), Direction::downstream);
}

TEST(UniformKernel, FullWidth) {
    const auto k = KernelSpec::uniform_downstream(1.0);
    for (double x : {0.0, 0.3, 0.99, 1.0}) EXPECT_EQ(k(x), 1.0);
}

TEST(UniformKernel, RejectsBadWidth) {
    EXPECT_THROW(KernelSpec::uniform_downstream(0.0), InvalidInput);
    EXPECT_THROW(KernelSpec::uniform_downstream(1.5), InvalidInput);
}

TEST(LinearKernel, Shape) {
    const auto one = KernelSpec::linear_upstream(1.0);
    EXPECT_EQ(one(0.0), 1.0);
    EXPECT_EQ(one(1.0), 0.0);
    const auto short_ = KernelSpec::linear_upstream(0.154);
    EXPECT_EQ(short_(0.2), 0.0);
    EXPECT_NEAR(short_(0.1), 0.9, 1e-15);
    double prev = short_(0.0);
    for (int k = 1; k <= 1000; ++k) {
        const double v = short_(k / 1000.0);
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(LinearKernel, Sigma) {
    EXPECT_NEAR(sigma(KernelSpec::linear_upstream(1.0)), 0.5, 1e-15);
    for (double z : {0.154, 0.3, 0.77}) {
        EXPECT_NEAR(sigma(KernelSpec::linear_upstream(z)), z * (2.0 - z) / 2.0, 1e-15);
    }
    EXPECT_NEAR(sigma(KernelSpec::linear_upstream(0.154)), 0.142142, 1e-12);
}

TEST(Sigma, ZeroKernelAndDirectionGuard) {
    const auto zero = KernelSpec::custom(Direction::upstream, 1.0, [](double) { return 0.0; });
    EXPECT_EQ(sigma(zero), 0.0);
    EXPECT_THROW(sigma(KernelSpec::uniform_downstream(0.1)), InvalidInput);
}

TEST(CustomKernel, Validation) {
    EXPECT_THROW(KernelSpec::custom(Direction::downstream, 0.5, [](double x) { return x; }),
                 InvalidInput);
    EXPECT_THROW(KernelSpec::custom(Direction::downstream, 0.5, [](double) { return -1.0; }),
                 InvalidInput);
    EXPECT_THROW(KernelSpec::custom(Direction::downstream, 1.5, [](double) { return 1.0; }),
                 InvalidInput);
    EXPECT_THROW(KernelSpec::custom(Direction::downstream, 0.5, nullptr), InvalidInput);
}

TEST(CustomKernel, QuadratureMatchesClosedForm) {
    // Exponential kernel, no antiderivative supplied.
    const auto k = KernelSpec::custom(Direction::downstream, 0.3,
                                      [](double x) { return std::exp(-5.0 * x); });
    EXPECT_FALSE(k.has_antiderivative());
    const double exact = (1.0 - std::exp(-1.5)) / 5.0;
    EXPECT_NEAR(k.total_mass(), exact, 1e-15);
    EXPECT_NEAR(k.integral(0.1, 0.2), (std::exp(-0.5) - std::exp(-1.0)) / 5.0, 1e-15);
    EXPECT_EQ(k.integral(0.4, 0.9), 0.0);
}

TEST(Discretize, UniformWeights) {
    const auto w = discretize(KernelSpec::uniform_downstream(0.1), 500);
    for (std::size_t j = 0; j < 50; ++j) EXPECT_NEAR(w[j], 0.02, 1e-15) << j;
    for (std::size_t j = 50; j < 500; ++j) EXPECT_EQ(w[j], 0.0) << j;
    EXPECT_EQ(w.first_nonzero(), 0u);
    EXPECT_EQ(w.last_nonzero(), 49u);
    EXPECT_NEAR(w.total(), 1.0, 1e-14);
}

TEST(Discretize, LinearWeightsClosedForm) {
    for (std::size_t n : {5u, 16u, 100u, 500u}) {
        const auto w = discretize(KernelSpec::linear_upstream(1.0), n);
        const double h = 1.0 / static_cast<double>(n);
        EXPECT_EQ(w[0], 0.0);
        for (std::size_t j = 1; j < n; ++j) {
            EXPECT_NEAR(w[j], h * h * (static_cast<double>(j) - 0.5), 1e-15) << n << " " << j;
        }
        EXPECT_NEAR(w.total(), (1.0 - h) * (1.0 - h) / 2.0, 1e-14);
    }
}

TEST(Discretize, TruncatedLinearWeightsMatchOracle) {
    const std::size_t n = 500;
    const auto w = discretize(KernelSpec::linear_upstream(0.154), n);
    const auto A = oracle::linear_antiderivative(0.154L);
    for (std::size_t j = 1; j < n; ++j) {
        const long double lo = 1.0L - static_cast<long double>(j) / n;
        const long double hi = 1.0L - static_cast<long double>(j - 1) / n;
        EXPECT_NEAR(w[j], static_cast<double>(oracle::integral(A, lo, hi)), 1e-16) << j;
    }
    // Only the cells within 0.154 behind carry weight.
    EXPECT_EQ(w.first_nonzero(), n - 76);
    EXPECT_EQ(w.last_nonzero(), n - 1);
}

TEST(ApplyWeights, HandDotProductWithWrap) {
    const DiscreteWeights w(Direction::downstream, {0.5, 0.5, 0.0, 0.0});
    const DensityProfile rho({1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(apply_weights(w, rho, 2), 3.5);
    EXPECT_DOUBLE_EQ(apply_weights(w, rho, 3), 2.5);
}

TEST(ApplyWeights, UniformProfileGivesConstant) {
    const auto w = discretize(KernelSpec::uniform_downstream(0.1), 200);
    const auto rho = sample([](double) { return 1.7; }, 200);
    const auto all = apply_weights_all(w, rho.values());
    for (double v : all) EXPECT_NEAR(v, 1.7, 1e-14);
}

TEST(ApplyWeights, TravellingWaveAveragesToMean) {
    for (std::size_t n : {500u, 1000u}) {
        const auto w = discretize(KernelSpec::uniform_downstream(0.1), n);
        const auto rho = sample(ic::Sine{1.0, 0.2, 10.0}, n);
        const auto all = apply_weights_all(w, rho.values());
        for (double v : all) EXPECT_NEAR(v, 1.0, 1e-12);
    }
}

TEST(ApplyWeights, AllMatchesSingleAndFastPath) {
    std::mt19937_64 rng(3);
    for (std::size_t n : {7u, 64u, 333u}) {
        const auto rho = random_vector(rng, n);
        for (const auto& w : {discretize(KernelSpec::uniform_downstream(0.1), n),
                              discretize(KernelSpec::uniform_downstream(0.7), n),
                              discretize(KernelSpec::linear_upstream(0.3), n)}) {
            const auto all = apply_weights_all(w, rho);
            const auto fast = apply_weights_all(w, rho, true);
            for (std::size_t i = 0; i < n; ++i) {
                const double single = apply_weights(w, rho, static_cast<std::int64_t>(i));
                EXPECT_NEAR(all[i], single, 1e-14);
                EXPECT_NEAR(fast[i], single, 1e-13);
            }
        }
    }
}

TEST(ApplyWeights, SizeMismatchThrows) {
    const auto w = discretize(KernelSpec::uniform_downstream(0.1), 10);
    std::vector<double> rho(11, 1.0);
    EXPECT_THROW(apply_weights(w, rho, 0), InvalidInput);
    EXPECT_THROW(apply_weights_all(w, rho), InvalidInput);
}

TEST(ShiftIdentities, ConstantVectorGivesZeroResiduals) {
    const std::size_t n = 12;
    const auto down = discretize(KernelSpec::uniform_downstream(0.25), n);
    const auto up = discretize(KernelSpec::linear_upstream(1.0), n);
    std::vector<double> rho(n, 1.3);
    for (double r : shift_identity_residuals(down, up, rho)) EXPECT_LE(r, 1e-15);
}

TEST(ShiftIdentities, RandomVectorN8) {
    std::mt19937_64 rng(8);
    const auto rho = random_vector(rng, 8);
    const auto down = discretize(KernelSpec::uniform_downstream(0.1), 8);
    const auto up = discretize(KernelSpec::linear_upstream(1.0), 8);
    for (double r : shift_identity_residuals(down, up, rho)) EXPECT_LE(r, 1e-12);
}

// Property: for every N in 5..16 and 100 random vectors, the library residuals
// are at rounding level, and both sides agree with the direct evaluation.
TEST(ShiftIdentitiesProperty, AgreeWithBruteForce) {
    std::mt19937_64 rng(2024);
    const double etas[] = {0.1, 0.35, 1.0};
    const double zetas[] = {1.0, 0.154, 0.6};
    for (std::size_t n = 5; n <= 16; ++n) {
        for (int trial = 0; trial < 100; ++trial) {
            const double eta = etas[trial % 3];
            const double zeta = zetas[(trial / 3) % 3];
            const auto down = discretize(KernelSpec::uniform_downstream(eta), n);
            const auto up = discretize(KernelSpec::linear_upstream(zeta), n);
            const auto rho = random_vector(rng, n);
            const auto res = shift_identity_residuals(down, up, rho);
            const auto ref = oracle::identity_sides(oracle::uniform_antiderivative(eta),
                                                    oracle::linear_antiderivative(zeta), widen(rho));
            for (int k = 0; k < 6; ++k) {
                EXPECT_LE(res[k], 1e-12) << "n=" << n << " identity " << k;
                EXPECT_LE(std::abs(ref.lhs[k] - ref.rhs[k]), 1e-12L)
                    << "oracle n=" << n << " identity " << k;
            }
            // Library B and Bu agree with the oracle functionals.
            EXPECT_NEAR(apply_weights(down, rho, 0),
                        static_cast<double>(oracle::B(oracle::uniform_antiderivative(eta), widen(rho))),
                        1e-14);
            EXPECT_NEAR(apply_weights(up, rho, 0),
                        static_cast<double>(oracle::Bu(oracle::linear_antiderivative(zeta), widen(rho))),
                        1e-14);
        }
    }
}

TEST(ShiftIdentities, Preconditions) {
    const auto down = discretize(KernelSpec::uniform_downstream(0.5), 4);
    const auto up = discretize(KernelSpec::linear_upstream(1.0), 4);
    std::vector<double> rho(4, 1.0);
    EXPECT_THROW(shift_identity_residuals(down, up, rho), InvalidInput);
    const auto d5 = discretize(KernelSpec::uniform_downstream(0.5), 5);
    const auto u5 = discretize(KernelSpec::linear_upstream(1.0), 5);
    std::vector<double> r5(5, 1.0);
    EXPECT_THROW(shift_identity_residuals(u5, d5, r5), InvalidInput);
}

// Property: first-difference bounds from the sign and monotonicity of the kernels.
TEST(FirstDifferenceBounds, HoldOnRandomProfiles) {
    std::mt19937_64 rng(99);
    for (std::size_t n : {6u, 20u, 101u, 500u}) {
        const double h = 1.0 / static_cast<double>(n);
        for (double eta : {0.1, 0.5, 1.0}) {
            for (double zeta : {1.0, 0.154}) {
                const auto k_down = KernelSpec::uniform_downstream(eta);
                const auto k_up = KernelSpec::linear_upstream(zeta);
                const auto down = discretize(k_down, n);
                const auto up = discretize(k_up, n);
                for (int trial = 0; trial < 20; ++trial) {
                    const auto rho = random_vector(rng, n);
                    const double lo = *std::min_element(rho.begin(), rho.end());
                    const double hi = *std::max_element(rho.begin(), rho.end());
                    const double dB = apply_weights(down, rho, 1) - apply_weights(down, rho, 0);
                    const double dBu = apply_weights(up, rho, 1) - apply_weights(up, rho, 0);
                    const double edge = k_down.integral(0.0, h) - k_down.integral(1.0 - h, 1.0);
                    const double head = k_up.integral(h, 2.0 * h);
                    const double tol = 1e-13;
                    EXPECT_GE(dB, edge * (lo - rho[0]) - tol);
                    EXPECT_LE(dB, edge * (hi - rho[0]) + tol);
                    EXPECT_GE(dBu, (rho[0] - hi) * head - tol);
                    EXPECT_LE(dBu, (rho[0] - lo) * head + tol);
                    EXPECT_LE(std::abs(dB), h * k_down(0.0) * hi + tol);
                    EXPECT_LE(std::abs(dBu), h * k_up(0.0) * hi + tol);
                }
            }
        }
    }
}
