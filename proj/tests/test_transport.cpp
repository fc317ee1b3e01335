#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "eulerlab/initdata.hpp"
#include "eulerlab/transport.hpp"
#include "oracles.hpp"

using namespace eulerlab;

namespace {

ParticleSystem bubble(int n0, int m, int res, double alpha = 0.6)
{
    BubbleParams p;
    p.n0 = n0;
    p.m = m;
    p.alpha = alpha;
    return seed_particles(p, res, DimensionContext(3));
}

double max_distance(const ParticleSystem& a, const ParticleSystem& b)
{
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        e = std::max(e, std::hypot(a.particles[i].current.r - b.particles[i].current.r,
                                   a.particles[i].current.z - b.particles[i].current.z));
    return e;
}

} // namespace

TEST(Step, QuiescentSystemDoesNotMove)
{
    auto sys = scaled(bubble(1, 2, 8), 0.0);
    const auto before = sys;
    step_rk4(sys, 0.1);
    EXPECT_EQ(max_distance(sys, before), 0.0);
    EXPECT_DOUBLE_EQ(sys.time, 0.1);
    EXPECT_THROW(step_rk4(sys, 0.0), UsageError);
    EXPECT_THROW(default_time_step(sys), ConfigError);
}

TEST(Step, NonFinitePositionAborts)
{
    auto sys = bubble(1, 1, 8);
    sys.particles[5].current.r = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(step_rk4(sys, 0.1, {}, false), NumericalAbort);
}

TEST(Step, TimeReversal)
{
    const auto base = bubble(1, 1, 16);
    auto s = base;
    step_rk4(s, 1e-3);
    auto back = scaled(s, -1.0);
    step_rk4(back, 1e-3);
    EXPECT_LT(max_distance(back, base) / 1.2, 1e-8);
}

TEST(Step, FourthOrderSelfConvergence)
{
    const auto base = bubble(1, 1, 12);
    const double T = 8.0;
    auto run = [&](int steps) {
        auto s = base;
        for (int k = 0; k < steps; ++k)
            step_rk4(s, T / steps);
        return s;
    };
    const auto ref = run(64);
    const double e8 = max_distance(run(8), ref);
    const double e16 = max_distance(run(16), ref);
    EXPECT_GE(std::log2(e8 / e16), 3.5);
}

TEST(Step, MirrorShortcutMatchesFullSum)
{
    auto a = bubble(1, 2, 10);
    auto b = a;
    ASSERT_TRUE(mirror_consistent(a));
    for (int k = 0; k < 3; ++k) {
        step_rk4(a, 0.5, {}, true);
        step_rk4(b, 0.5, {}, false);
    }
    EXPECT_LT(max_distance(a, b), 1e-13);
    EXPECT_TRUE(mirror_consistent(a));
}

TEST(Step, MirroredNegatedSystemEvolvesToMirror)
{
    // a one-sided system, so the mirror is a different set
    auto a = bubble(1, 1, 10);
    a.particles.resize(100);
    a.mirror.clear();
    a.bubble_ranges[0].end = 100;
    auto b = z_mirrored(a);
    for (int k = 0; k < 4; ++k) {
        step_rk4(a, 0.5);
        step_rk4(b, 0.5);
    }
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        e = std::max(e, std::hypot(a.particles[i].current.r - b.particles[i].current.r,
                                   a.particles[i].current.z + b.particles[i].current.z));
    EXPECT_LT(e, 1e-13);
}

TEST(Evolve, ZeroHorizonGivesOneFrame)
{
    auto sys = bubble(1, 2, 8);
    EvolveConfig cfg;
    const auto frames = evolve(sys, cfg);
    ASSERT_EQ(frames.size(), 1u);
    EXPECT_EQ(frames[0].time, 0.0);
    for (std::size_t k = 0; k < frames[0].bubbles.size(); ++k) {
        EXPECT_EQ(frames[0].r_ratio_inf[k], 1.0);
        EXPECT_EQ(frames[0].r_ratio_sup[k], 1.0);
        EXPECT_EQ(frames[0].z_ratio_inf[k], 1.0);
    }
    EXPECT_TRUE(frames[0].ordering_ok);
    EXPECT_TRUE(frames[0].region_ok);
}

TEST(Evolve, CadenceFinalTimeAndInvariants)
{
    auto sys = bubble(1, 1, 12, 0.2);
    EvolveConfig cfg;
    cfg.t_end = 10.0;
    cfg.dt = 0.45;
    cfg.cadence = 5;
    int seen = 0;
    const auto frames = evolve(sys, cfg, [&](const DiagnosticsFrame&, const ParticleSystem&) { ++seen; });
    // 23 steps: frames at 0, 5, 10, 15, 20, 23
    ASSERT_EQ(frames.size(), 6u);
    EXPECT_EQ(seen, 6);
    EXPECT_EQ(frames.back().step, 23u);
    EXPECT_NEAR(frames.back().time, 10.0, 1e-12);
    for (const auto& f : frames) {
        EXPECT_EQ(f.xi_drift, 0.0);
        EXPECT_TRUE(f.region_ok);
        EXPECT_TRUE(f.ordering_ok);
        EXPECT_EQ(f.lorentz_31, frames[0].lorentz_31);
        for (std::size_t k = 0; k < f.bubbles.size(); ++k)
            EXPECT_LE(f.r_ratio_inf[k], f.r_ratio_sup[k]);
    }
}

TEST(Evolve, ShortThreeBubbleRunKeepsOrdering)
{
    auto sys = bubble(1, 3, 8, 0.2);
    EvolveConfig cfg;
    cfg.t_end = 20.0;
    cfg.cadence = 4;
    for (const auto& f : evolve(sys, cfg)) {
        EXPECT_TRUE(f.ordering_ok) << f.time;
        EXPECT_TRUE(f.region_ok) << f.time;
    }
}

TEST(In, MatchesQuadratureAndScales)
{
    EXPECT_EQ(compute_In(scaled(bubble(1, 1, 8), 0.0), 1), 0.0);
    EXPECT_THROW(compute_In(bubble(1, 1, 8), 2), UsageError);

    const double alpha = 0.6;
    const auto sys = bubble(1, 4, 48, alpha);
    const double ref = oracle::In0(1);
    EXPECT_NEAR(compute_In(sys, 1), ref, 0.01 * ref);
    const double c1 = compute_In(sys, 1);
    for (int n = 2; n <= 4; ++n)
        EXPECT_NEAR(compute_In(sys, n) * std::pow(n, alpha) / c1, 1.0, 0.05) << n;
}

TEST(Timescales, Schedule)
{
    BubbleParams p;
    p.n0 = 1;
    p.m = 6;
    p.alpha = 0.6;
    const auto t = bubble_timescales(p, 10.0, 1.0);
    EXPECT_DOUBLE_EQ(t[0], 0.4);
    for (std::size_t k = 1; k < t.size(); ++k)
        EXPECT_LT(t[k], t[k - 1]);
    for (double v : bubble_timescales(p, 1e-3, 1.0))
        EXPECT_EQ(v, 1e-3);
    EXPECT_THROW(bubble_timescales(p, 1.0, 0.0), ConfigError);
}

TEST(Timescales, StabilityCheck)
{
    auto sys = bubble(1, 2, 8);
    EvolveConfig cfg;
    const auto f0 = evolve(sys, cfg);
    for (bool ok : stability_check(f0, std::vector<double>{1.0, 1.0}))
        EXPECT_TRUE(ok);

    cfg.t_end = 5.0;
    auto single = bubble(1, 1, 10);
    const auto f1 = evolve(single, cfg);
    EXPECT_TRUE(stability_check(f1, std::vector<double>{5.0})[0]);

    auto bad = f1;
    bad.back().r_ratio_sup[0] = 2.5;
    EXPECT_FALSE(stability_check(bad, std::vector<double>{5.0})[0]);
    EXPECT_TRUE(stability_check(bad, std::vector<double>{1.0})[0]);
}

TEST(Fits, IntegratedInAndC2)
{
    std::vector<DiagnosticsFrame> frames(3);
    for (int k = 0; k < 3; ++k) {
        frames[k].time = k;
        frames[k].bubbles = {1, 2, 3};
        frames[k].In = {1.0, 2.0, 4.0};
        frames[k].z_ratio_inf = {1.0, 1.0, 1.0};
    }
    const auto cum = integrated_In(frames);
    EXPECT_DOUBLE_EQ(cum[2][0], 2.0);
    EXPECT_DOUBLE_EQ(cum[2][2], 8.0);
    // S_2 = 2, S_3 = 6
    const auto fit = fit_c2(frames);
    const double l2 = std::log(2.0), l3 = std::log(3.0);
    EXPECT_NEAR(fit.c2, (2 * l2 + 6 * l3) / (l2 * l2 + l3 * l3), 1e-14);
    const auto z = z_position_observable(frames, DimensionContext(3));
    EXPECT_EQ(z[0].predicted, 0.0);
    EXPECT_NEAR(z[2].predicted, -6.0 / DimensionContext(3).ball_volume(), 1e-14);
}
