#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "eulerlab/fields.hpp"
#include "eulerlab/initdata.hpp"
#include "oracles.hpp"

using namespace eulerlab;

TEST(DimensionContext, BallAndSphere)
{
    const double pi = std::numbers::pi;
    DimensionContext c3(3), c4(4), c5(5);
    EXPECT_NEAR(c3.ball_volume(), 4.0 * pi / 3.0, 1e-12 * 4.0);
    EXPECT_NEAR(c3.sphere_area(), 2.0 * pi, 1e-12 * 6.0);
    EXPECT_NEAR(c4.ball_volume(), pi * pi / 2.0, 1e-12 * 5.0);
    EXPECT_NEAR(c4.sphere_area(), 4.0 * pi, 1e-12 * 12.0);
    EXPECT_NEAR(c5.ball_volume(), 8.0 * pi * pi / 15.0, 1e-12 * 5.0);
    EXPECT_NEAR(c5.sphere_area(), 2.0 * pi * pi, 1e-12 * 20.0);
    EXPECT_THROW(DimensionContext(2), UnsupportedDimension);
}

TEST(Fields, ReconstructVorticity)
{
    ParticleSystem sys;
    sys.particles.push_back({{0.5, 0.1}, {0.5, 0.1}, 2.0, 1.0, 0.1});
    sys.particles.push_back({{0.5, 0.2}, {0.7, 0.2}, 0.0, 1.0, 0.1});
    const auto w = reconstruct_vorticity(sys);
    EXPECT_DOUBLE_EQ(w[0], 1.0);
    EXPECT_EQ(w[1], 0.0);
}

TEST(Fields, IntegrateMeridianRectangle)
{
    // f = 1 on [1,2] x [0,1] at d = 3: 2 pi * 3/2
    ParticleSystem sys;
    const int n = 64;
    const double h = 1.0 / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const HalfPlanePoint p{1.0 + (i + 0.5) * h, (j + 0.5) * h};
            sys.particles.push_back({p, p, 1.0, p.r * h * h, h});
        }
    std::vector<double> one(sys.size(), 1.0), zero(sys.size(), 0.0);
    EXPECT_EQ(integrate_meridian(sys, zero), 0.0);
    EXPECT_NEAR(integrate_meridian(sys, one), 3.0 * std::numbers::pi, 0.005 * 3.0 * std::numbers::pi);
    EXPECT_THROW(integrate_meridian(sys, std::vector<double>(3, 1.0)), UsageError);
}

TEST(Fields, GriddedFieldAxes)
{
    EXPECT_THROW(GriddedField({0.0, 1.0, 3.0}, {0.0, 1.0}), ConfigError);
    EXPECT_THROW(GriddedField({1.0, 0.0}, {0.0, 1.0}), ConfigError);
    EXPECT_THROW(GriddedField({0.0, 1.0}, {0.0, 1.0}, {1.0, 2.0}), ConfigError);
    GriddedField g(uniform_axis(0.0, 1.0, 5), uniform_axis(-1.0, 1.0, 9));
    EXPECT_EQ(g.values().size(), 45u);
    EXPECT_DOUBLE_EQ(g.dr(), 0.25);
}

TEST(Bump, PlateauSupportAndTransition)
{
    EXPECT_EQ(bump_phi(0.0, 0.0), 1.0);
    EXPECT_EQ(bump_phi(0.2, 0.0), 0.0);
    const double v = bump_phi(0.06, 0.02);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
    // radial and monotone
    double prev = 1.0;
    for (int k = 0; k <= 200; ++k) {
        const double s = 0.15 * k / 200.0;
        const double a = bump_phi(s, 0.0);
        EXPECT_NEAR(a, bump_phi(s / std::sqrt(2.0), s / std::sqrt(2.0)), 1e-14);
        EXPECT_LE(a, prev);
        prev = a;
    }
}

TEST(Bump, FiniteDifferencesStayBounded)
{
    // fourth differences scaled by h^4 converge to phi''''; their size must not grow
    auto d4 = [](double h) {
        double m = 0.0;
        for (double s = 0.0; s < 0.13; s += h) {
            const double v = bump_phi(s - 2 * h, 0) - 4 * bump_phi(s - h, 0) + 6 * bump_phi(s, 0) -
                             4 * bump_phi(s + h, 0) + bump_phi(s + 2 * h, 0);
            m = std::max(m, std::abs(v) / std::pow(h, 4));
        }
        return m;
    };
    const double a = d4(1e-3), b = d4(5e-4);
    EXPECT_LT(b, 1.2 * a);
}

TEST(Bubble, CentreValuesAndOddness)
{
    EXPECT_DOUBLE_EQ(bubble_vorticity(1, {1.0, 0.125}), 1.0);
    EXPECT_DOUBLE_EQ(bubble_vorticity(1, {1.0, -0.125}), -1.0);
    EXPECT_EQ(bubble_vorticity(3, {pow8(-2), 0.0}), 0.0);
    EXPECT_THROW(bubble_vorticity(0, {1.0, 0.1}), UsageError);

    BubbleParams p;
    p.n0 = 1;
    p.m = 2;
    p.alpha = 0.6;
    EXPECT_DOUBLE_EQ(initial_vorticity(p, {1.0, 0.125}), 1.0);
    EXPECT_NEAR(initial_vorticity(p, {0.125, 1.0 / 64.0}), std::pow(2.0, -0.6), 1e-15);
    EXPECT_NEAR(std::pow(2.0, -0.6), 0.6598, 1e-4);
    EXPECT_EQ(initial_vorticity(p, {0.0, 0.3}), 0.0);
}

TEST(Bubble, DisjointOddAndInsideRegion)
{
    BubbleParams p;
    p.n0 = 1;
    p.m = 5;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 20000; ++k) {
        // log-uniform radius so every bubble is visited
        const double r = std::pow(8.0, -5.0 * U(rng) + 0.3);
        const double z = (2.0 * U(rng) - 1.0) * r * 0.4;
        int hits = 0;
        for (int n = 1; n <= 6; ++n)
            hits += bubble_vorticity(n, {r, z}) != 0.0;
        EXPECT_LE(hits, 1);
        const double w = initial_vorticity(p, {r, z});
        EXPECT_EQ(w, -initial_vorticity(p, {r, -z}));
        if (w != 0.0) {
            EXPECT_GE(r, 4.0 * std::abs(z));
        }
    }
}

TEST(Params, Validation)
{
    BubbleParams p;
    p.n0 = 2;
    p.m = 1;
    EXPECT_THROW(p.validate(), ConfigError);
    p.m = 3;
    p.alpha = 0.8;
    EXPECT_THROW(p.validate(), ConfigError);
    p.alpha = 0.2;
    EXPECT_NO_THROW(p.validate());
    EXPECT_THROW(seed_particles(p, 4, DimensionContext(3)), ConfigError);
}

TEST(Seed, CountsRangesAndMirror)
{
    BubbleParams p;
    p.n0 = 1;
    p.m = 1;
    const auto sys = seed_particles(p, 16, DimensionContext(3));
    EXPECT_EQ(sys.size(), 512u);
    ASSERT_EQ(sys.bubble_ranges.size(), 1u);
    EXPECT_EQ(sys.bubble_ranges[0].n, 1);
    EXPECT_EQ(sys.bubble_ranges[0].begin, 0u);
    EXPECT_EQ(sys.bubble_ranges[0].end, 512u);

    // the mirrored system is the same set of particles
    const auto mir = z_mirrored(sys);
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const auto& a = mir.particles[i];
        const auto& b = sys.particles[sys.mirror[i]];
        EXPECT_EQ(a.current, b.current);
        EXPECT_EQ(a.xi, b.xi);
        EXPECT_EQ(a.weight, b.weight);
    }
}

TEST(Seed, PointwiseAgreement)
{
    BubbleParams p;
    p.n0 = 1;
    p.m = 3;
    const auto sys = seed_particles(p, 24, DimensionContext(3));
    const auto w = reconstruct_vorticity(sys);
    for (std::size_t i = 0; i < sys.size(); ++i)
        EXPECT_NEAR(w[i], initial_vorticity(p, sys.particles[i].initial), 1e-14);
    for (const auto& pt : sys.particles)
        EXPECT_GT(pt.current.r, 0.0);
}

TEST(Seed, MassMatchesQuadrature)
{
    for (int n : {1, 2}) {
        BubbleParams p;
        p.n0 = p.m = n;
        p.alpha = 0.5;
        const auto sys = seed_particles(p, 64, DimensionContext(3));
        auto w = reconstruct_vorticity(sys);
        for (auto& v : w)
            v = std::abs(v);
        const double ref = std::pow(n, -0.5) * oracle::mass(n);
        EXPECT_NEAR(integrate_meridian(sys, w), ref, 0.01 * ref) << "n = " << n;
    }
}

TEST(Grid, SampleBubble)
{
    BubbleParams p;
    p.n0 = 1;
    p.m = 3;
    p.alpha = 0.6;
    const auto g = sample_bubble(p, 2, 64);
    EXPECT_EQ(g.nr(), 64u);
    EXPECT_NEAR(g.max_abs(), std::pow(2.0, -0.6), 1e-3);
    EXPECT_EQ(g.max_abs_near_boundary(2), 0.0);
}
