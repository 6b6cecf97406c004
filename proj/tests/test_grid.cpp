#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ringflow/grid.hpp"

using namespace ringflow;

TEST(Sample, ConstantFunction) {
    const auto p = sample([](double) { return 1.0; }, 4);
    EXPECT_EQ(p, DensityProfile({1.0, 1.0, 1.0, 1.0}));
}

TEST(Sample, CongestionBeltClosedOnBothEnds) {
    const auto p = sample(ic::congestion_belt, 500);
    for (std::size_t i = 0; i < 500; ++i) {
        const bool inside = i >= 250 && i <= 375;
        EXPECT_EQ(p[i], inside ? 2.35 : 0.55) << "i=" << i;
    }
}

TEST(Sample, SineAtSecondNode) {
    const auto p = sample(ic::Sine{1.0, 0.2, 10.0}, 8);
    EXPECT_NEAR(p[1], 1.2, 1e-15);
}

TEST(Sample, RejectsNonPositiveValues) {
    EXPECT_THROW(sample([](double x) { return x; }, 10), InvalidInput);
    EXPECT_THROW(sample([](double) { return std::nan(""); }, 10), InvalidInput);
    EXPECT_THROW(sample([](double) { return 1.0; }, 2), InvalidInput);
}

TEST(DensityProfile, RejectsBadConstruction) {
    EXPECT_THROW(DensityProfile({1.0, 1.0}), InvalidInput);
    EXPECT_THROW(DensityProfile({1.0, 0.0, 1.0}), InvalidInput);
    EXPECT_THROW(DensityProfile({1.0, -1.0, 1.0}), InvalidInput);
    EXPECT_THROW(DensityProfile({1.0, INFINITY, 1.0}), InvalidInput);
}

TEST(DensityProfile, CyclicAccessAndShift) {
    const DensityProfile p({1.0, 2.0, 3.0, 4.0});
    EXPECT_EQ(p.at(-1), 4.0);
    EXPECT_EQ(p.at(4), 1.0);
    EXPECT_EQ(p.at(-9), 4.0);
    EXPECT_EQ(p.shifted(1), DensityProfile({2.0, 3.0, 4.0, 1.0}));
    EXPECT_EQ(p.shifted(-1), DensityProfile({4.0, 1.0, 2.0, 3.0}));
    EXPECT_EQ(p.shifted(4), p);
}

TEST(WrapIndex, NegativeAndLarge) {
    EXPECT_EQ(wrap_index(-1, 5), 4u);
    EXPECT_EQ(wrap_index(-5, 5), 0u);
    EXPECT_EQ(wrap_index(12, 5), 2u);
}

TEST(Interpolate, MidpointOfSegment) {
    EXPECT_DOUBLE_EQ(interpolate(DensityProfile({1, 2, 1, 2}), 0.125), 1.5);
}

TEST(Interpolate, WrapCell) {
    EXPECT_DOUBLE_EQ(interpolate(DensityProfile({1, 2, 1, 3}), 0.9375), 1.5);
}

TEST(Interpolate, NegativeArgumentIsPeriodic) {
    const DensityProfile p({1, 2, 1, 3});
    EXPECT_DOUBLE_EQ(interpolate(p, -0.0625), interpolate(p, 0.9375));
    EXPECT_DOUBLE_EQ(interpolate(p, 1.125), interpolate(p, 0.125));
}

TEST(InterpolateProperty, ReproducesNodesForAnyN) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(0.5, 2.5);
    for (std::size_t n = 3; n <= 64; ++n) {
        std::vector<double> v(n);
        for (auto& x : v) x = dist(rng);
        const DensityProfile p(v);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_EQ(interpolate(p, p.node(i)), p[i]) << "n=" << n << " i=" << i;
        }
        // sample of the interpolant at the nodes reproduces the profile
        EXPECT_EQ(sample([&](double x) { return interpolate(p, x); }, n), p);
    }
}

TEST(InterpolateProperty, StaysWithinNeighbouringNodes) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0.5, 2.5), pos(-3.0, 3.0);
    std::vector<double> v(17);
    for (auto& x : v) x = dist(rng);
    const DensityProfile p(v);
    for (int k = 0; k < 2000; ++k) {
        const double x = pos(rng);
        const double xr = x - std::floor(x);
        const auto cell = static_cast<std::int64_t>(std::floor(xr * 17));
        const double a = p.at(cell), b = p.at(cell + 1);
        const double y = interpolate(p, x);
        EXPECT_GE(y, std::min(a, b) - 1e-15);
        EXPECT_LE(y, std::max(a, b) + 1e-15);
    }
}

TEST(Stats, Uniform) {
    const auto s = stats(DensityProfile({1, 1, 1, 1}));
    EXPECT_EQ(s.min, 1.0);
    EXPECT_EQ(s.max, 1.0);
    EXPECT_EQ(s.mass, 1.0);
    EXPECT_EQ(s.mean, 1.0);
}

TEST(Stats, CongestionBeltDiscreteMass) {
    const auto s = stats(sample(ic::congestion_belt, 500));
    EXPECT_NEAR(s.mass, (126 * 2.35 + 374 * 0.55) / 500.0, 1e-14);
    EXPECT_NEAR(s.mass, 1.0036, 1e-12);
    EXPECT_EQ(s.min, 0.55);
    EXPECT_EQ(s.max, 2.35);
}

TEST(Stats, CongestionBeltContinuumMassIsOne) {
    // Exact integral of the step: 0.25 * 2.35 + 0.75 * 0.55.
    EXPECT_DOUBLE_EQ(0.25 * 2.35 + 0.75 * 0.55, 1.0);
    // Point sampling at large N approaches it.
    const auto s = stats(sample(ic::congestion_belt, 100000));
    EXPECT_NEAR(s.mass, 1.0, 2e-5);
}

TEST(CompensatedSum, BeatsNaiveSummation) {
    std::vector<double> xs{1e16, 1.0, -1e16, 1.0};
    EXPECT_EQ(compensated_sum(xs), 2.0);
}

TEST(L2Deviation, UniformAtOwnMean) {
    EXPECT_EQ(l2_deviation(DensityProfile({1.3, 1.3, 1.3}), 1.3), 0.0);
}

TEST(L2Deviation, Sine) {
    const auto p = sample(ic::Sine{1.0, 0.2, 10.0}, 500);
    EXPECT_NEAR(l2_deviation(p, 1.0), 0.2 / std::sqrt(2.0), 1e-3);
}

TEST(L2Deviation, StepProfile) {
    const auto p = sample(ic::congestion_belt, 500);
    const double expected = std::sqrt((126 * 1.35 * 1.35 + 374 * 0.45 * 0.45) / 500.0);
    EXPECT_NEAR(l2_deviation(p, 1.0), expected, 1e-14);
    EXPECT_NEAR(l2_deviation(p, 1.0), 0.78150, 1e-5);
}

TEST(L2Deviation, RejectsNonPositiveReference) {
    EXPECT_THROW(l2_deviation(DensityProfile({1, 1, 1}), 0.0), InvalidInput);
}
