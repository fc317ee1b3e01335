#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "eulerlab/biotsavart.hpp"
#include "eulerlab/errors.hpp"
#include "eulerlab/fields.hpp"
#include "eulerlab/initdata.hpp"
#include "eulerlab/norms.hpp"
#include "eulerlab/parallel.hpp"

namespace eulerlab {

// ---------------------------------------------------------------------------
// Time stepping
// ---------------------------------------------------------------------------

/// True when sys.mirror pairs every particle with its exact image under
/// (r, z, xi) -> (r, -z, -xi), so velocities need only be computed for one
/// member of each pair.
inline bool mirror_consistent(const ParticleSystem& sys)
{
    if (sys.mirror.size() != sys.size())
        return false;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const std::size_t j = sys.mirror[i];
        if (j >= sys.size() || sys.mirror[j] != i)
            return false;
        const auto& a = sys.particles[i];
        const auto& b = sys.particles[j];
        if (a.current.r != b.current.r || a.current.z != -b.current.z || a.xi != -b.xi || a.weight != b.weight ||
            a.spacing != b.spacing)
            return false;
    }
    return true;
}

namespace detail {

/// Velocity of every particle when the particles sit at `pos`. With `primaries`
/// non-empty only those are evaluated and the images are filled by reflection.
inline void particle_velocities(const ParticleSystem& sys, std::span<const HalfPlanePoint> pos,
                                const std::vector<std::size_t>& primaries, const KernelConfig& cfg,
                                std::vector<Velocity>& out)
{
    const SourceSet src = SourceSet::from(sys, cfg, pos);
    const RingKernel kernel(cfg);
    out.resize(pos.size());
    if (primaries.empty()) {
        parallel_for(pos.size(), cfg.threads, [&](std::size_t i) { out[i] = kernel.evaluate(src, pos[i]); });
        return;
    }
    parallel_for(primaries.size(), cfg.threads, [&](std::size_t k) {
        const std::size_t i = primaries[k];
        const auto v = kernel.evaluate(src, pos[i]);
        out[i] = v;
        out[sys.mirror[i]] = {v.ur, -v.ud};
    });
}

inline std::vector<std::size_t> primary_indices(const ParticleSystem& sys)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < sys.size(); ++i)
        if (i < sys.mirror[i])
            idx.push_back(i);
    return idx;
}

} // namespace detail

/// One classical RK4 step of dPhi/dt = u(Phi). xi and weights are untouched.
/// Throws NumericalAbort if any position becomes non-finite.
inline void step_rk4(ParticleSystem& sys, double dt, const KernelConfig& cfg = {}, bool use_mirror = true)
{
    require_d3(sys);
    cfg.validate();
    if (!(dt > 0.0))
        throw UsageError("step_rk4: dt must be > 0");
    const std::size_t n = sys.size();
    std::vector<std::size_t> primaries;
    if (use_mirror && mirror_consistent(sys))
        primaries = detail::primary_indices(sys);

    std::vector<HalfPlanePoint> y0(n), y(n);
    for (std::size_t i = 0; i < n; ++i)
        y0[i] = sys.particles[i].current;
    std::vector<Velocity> k1, k2, k3, k4;
    detail::particle_velocities(sys, y0, primaries, cfg, k1);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = {y0[i].r + 0.5 * dt * k1[i].ur, y0[i].z + 0.5 * dt * k1[i].ud};
    detail::particle_velocities(sys, y, primaries, cfg, k2);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = {y0[i].r + 0.5 * dt * k2[i].ur, y0[i].z + 0.5 * dt * k2[i].ud};
    detail::particle_velocities(sys, y, primaries, cfg, k3);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = {y0[i].r + dt * k3[i].ur, y0[i].z + dt * k3[i].ud};
    detail::particle_velocities(sys, y, primaries, cfg, k4);

    for (std::size_t i = 0; i < n; ++i) {
        const double r = y0[i].r + dt / 6.0 * (k1[i].ur + 2 * k2[i].ur + 2 * k3[i].ur + k4[i].ur);
        const double z = y0[i].z + dt / 6.0 * (k1[i].ud + 2 * k2[i].ud + 2 * k3[i].ud + k4[i].ud);
        if (!std::isfinite(r) || !std::isfinite(z))
            throw NumericalAbort("step_rk4: non-finite position for particle " + std::to_string(i) + " at t = " +
                                 std::to_string(sys.time));
        sys.particles[i].current = {r, z};
    }
    sys.time += dt;
}

/// Default step: the smaller of min_n 8^{-n} / (10 max |u| over bubble n) and
/// rotation_cfl / max |omega|, which keeps RK4 accurate on the core rotation.
inline double default_time_step(const ParticleSystem& sys, const KernelConfig& cfg = {}, double rotation_cfl = 0.5)
{
    require_d3(sys);
    std::vector<HalfPlanePoint> pos(sys.size());
    for (std::size_t i = 0; i < sys.size(); ++i)
        pos[i] = sys.particles[i].current;
    std::vector<std::size_t> primaries;
    if (mirror_consistent(sys))
        primaries = detail::primary_indices(sys);
    std::vector<Velocity> u;
    detail::particle_velocities(sys, pos, primaries, cfg, u);

    double dt = std::numeric_limits<double>::infinity();
    double wmax = 0.0;
    for (const auto& br : sys.bubble_ranges) {
        double umax = 0.0;
        for (std::size_t i = br.begin; i < br.end; ++i) {
            umax = std::max(umax, std::hypot(u[i].ur, u[i].ud));
            const auto& p = sys.particles[i];
            wmax = std::max(wmax, std::abs(p.xi * sys.ctx.radial_power(p.current.r)));
        }
        if (umax > 0.0)
            dt = std::min(dt, pow8(-br.n) / (10.0 * umax));
    }
    if (wmax > 0.0)
        dt = std::min(dt, rotation_cfl / wmax);
    if (!std::isfinite(dt))
        throw ConfigError("default_time_step: quiescent system, give dt explicitly");
    return dt;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// I_n(t) over the upper half of bubble n:
///   int |Phi^r|^{d-1} |Phi^d| |Phi|^{-(d+2)} |omega_0(y)| / |y_h|^{d-2} dy.
inline double compute_In(const ParticleSystem& sys, int n)
{
    const auto& br = sys.range_of(n);
    const int d = sys.ctx.d();
    double acc = 0.0;
    for (std::size_t i = br.begin; i < br.end; ++i) {
        const auto& p = sys.particles[i];
        if (p.xi == 0.0 || p.initial.z <= 0.0)
            continue;
        const double r = p.current.r, z = std::abs(p.current.z);
        acc += p.weight * std::pow(r, d - 1) * z * std::pow(r * r + z * z, -0.5 * (d + 2)) * std::abs(p.xi);
    }
    return sys.ctx.sphere_area() * acc;
}

struct DiagnosticsFrame {
    double time = 0.0;
    std::size_t step = 0;
    std::vector<int> bubbles;
    std::vector<double> In;
    std::vector<double> r_ratio_inf, r_ratio_sup; ///< Phi^r / r over Omega_n
    std::vector<double> z_ratio_inf, z_ratio_sup; ///< x_d / Phi^d over Omega_n
    std::vector<double> r_min, r_max;             ///< inf, sup of Phi^r over Omega_n
    double linf_omega = 0.0;
    double lorentz_31 = 0.0; ///< frozen-weight ||omega/r||_{L^{3,1}}
    double weighted_l2 = 0.0;
    double xi_drift = 0.0;           ///< max |xi - xi at the first frame|
    bool ordering_ok = true;
    bool region_ok = true;
    double region_margin = 0.0;      ///< min over particles of (Phi^r - |Phi^d|) / Phi^r
};

/// Snapshot diagnostics. `reference_xi` (may be empty) is compared bitwise.
inline DiagnosticsFrame diagnose(const ParticleSystem& sys, std::size_t step,
                                 std::span<const double> reference_xi = {}, double region_grace = 1e-6)
{
    DiagnosticsFrame f;
    f.time = sys.time;
    f.step = step;
    for (const auto& br : sys.bubble_ranges) {
        f.bubbles.push_back(br.n);
        f.In.push_back(compute_In(sys, br.n));
        double rlo = std::numeric_limits<double>::infinity(), rhi = 0.0;
        double zlo = std::numeric_limits<double>::infinity(), zhi = 0.0;
        double pmin = std::numeric_limits<double>::infinity(), pmax = 0.0;
        for (std::size_t i = br.begin; i < br.end; ++i) {
            const auto& p = sys.particles[i];
            if (p.xi == 0.0)
                continue;
            const double rr = p.current.r / p.initial.r;
            const double zr = p.initial.z / p.current.z;
            rlo = std::min(rlo, rr);
            rhi = std::max(rhi, rr);
            zlo = std::min(zlo, zr);
            zhi = std::max(zhi, zr);
            pmin = std::min(pmin, p.current.r);
            pmax = std::max(pmax, p.current.r);
        }
        if (pmax == 0.0)
            rlo = rhi = zlo = zhi = pmin = 1.0, pmax = 1.0;
        f.r_ratio_inf.push_back(rlo);
        f.r_ratio_sup.push_back(rhi);
        f.z_ratio_inf.push_back(zlo);
        f.z_ratio_sup.push_back(zhi);
        f.r_min.push_back(pmin);
        f.r_max.push_back(pmax);
    }
    // well-ordering: sup <= 4 inf within a bubble, 4 sup(n+1) <= inf(n)
    for (std::size_t k = 0; k < f.bubbles.size(); ++k) {
        if (f.r_max[k] > 4.0 * f.r_min[k])
            f.ordering_ok = false;
        if (k + 1 < f.bubbles.size() && f.bubbles[k + 1] == f.bubbles[k] + 1 && 4.0 * f.r_max[k + 1] > f.r_min[k])
            f.ordering_ok = false;
    }
    f.region_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const auto& p = sys.particles[i];
        if (p.xi == 0.0)
            continue;
        const double m = (p.current.r - std::abs(p.current.z)) / p.current.r;
        f.region_margin = std::min(f.region_margin, m);
        if (reference_xi.size() == sys.size())
            f.xi_drift = std::max(f.xi_drift, std::abs(p.xi - reference_xi[i]));
    }
    if (!std::isfinite(f.region_margin))
        f.region_margin = 1.0;
    f.region_ok = f.region_margin >= -region_grace;

    const auto lp = particle_lp_norms(sys);
    f.linf_omega = lp.linf;
    if (sys.ctx.d() == 3) {
        f.lorentz_31 = particle_lorentz_norm(sys, 1.0);
        f.weighted_l2 = weighted_l2(sys);
    }
    return f;
}

struct EvolveConfig {
    double t_end = 0.0;
    double dt = 0.0;         ///< <= 0 selects default_time_step
    std::size_t cadence = 10;
    KernelConfig kernel;
    bool use_mirror = true;
    double region_grace = 1e-6;
};

using FrameObserver = std::function<void(const DiagnosticsFrame&, const ParticleSystem&)>;

/// Integrates to t_end with a uniform step no larger than cfg.dt and records a
/// frame at step 0, every `cadence` steps and at the final step.
inline std::vector<DiagnosticsFrame> evolve(ParticleSystem& sys, const EvolveConfig& cfg,
                                            const FrameObserver& observer = {})
{
    if (cfg.t_end < 0.0)
        throw UsageError("evolve: t_end must be >= 0");
    if (cfg.cadence == 0)
        throw ConfigError("evolve: cadence must be >= 1");
    std::vector<double> xi0(sys.size());
    for (std::size_t i = 0; i < sys.size(); ++i)
        xi0[i] = sys.particles[i].xi;

    std::vector<DiagnosticsFrame> frames;
    auto emit = [&](std::size_t step) {
        frames.push_back(diagnose(sys, step, xi0, cfg.region_grace));
        if (observer)
            observer(frames.back(), sys);
    };
    emit(0);
    if (cfg.t_end == 0.0)
        return frames;

    const double dt_max = cfg.dt > 0.0 ? cfg.dt : default_time_step(sys, cfg.kernel);
    const auto steps = static_cast<std::size_t>(std::ceil(cfg.t_end / dt_max - 1e-9));
    const double dt = cfg.t_end / static_cast<double>(std::max<std::size_t>(steps, 1));
    const double t0 = sys.time;
    for (std::size_t s = 1; s <= steps; ++s) {
        step_rk4(sys, dt, cfg.kernel, cfg.use_mirror);
        sys.time = t0 + dt * static_cast<double>(s);
        if (s % cfg.cadence == 0 || s == steps)
            emit(s);
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Timescales and fits
// ---------------------------------------------------------------------------

/// T_n = min{T, c1 (1 - alpha) n^{-1 + alpha}} for n = n0..m.
inline std::vector<double> bubble_timescales(const BubbleParams& params, double T, double c1)
{
    if (!(c1 > 0.0))
        throw ConfigError("bubble_timescales: c1 must be > 0");
    std::vector<double> out;
    for (int n = params.n0; n <= params.m; ++n)
        out.push_back(std::min(T, c1 * (1.0 - params.alpha) * std::pow(static_cast<double>(n), -1.0 + params.alpha)));
    return out;
}

/// Per bubble: whether r/2 <= Phi^r <= 2r and x_d/2 <= Phi^d <= 2 x_d hold on
/// every frame with t <= T_n. The factor 2 is `tolerance_factor`.
inline std::vector<bool> stability_check(std::span<const DiagnosticsFrame> frames, std::span<const double> timescales,
                                         double tolerance_factor = 2.0)
{
    if (frames.empty())
        return {};
    const std::size_t nb = frames.front().bubbles.size();
    if (timescales.size() != nb)
        throw UsageError("stability_check: one timescale per bubble expected");
    std::vector<bool> ok(nb, true);
    const double lo = 1.0 / tolerance_factor, hi = tolerance_factor;
    for (const auto& f : frames)
        for (std::size_t k = 0; k < nb; ++k) {
            if (f.time > timescales[k] * (1.0 + 1e-12))
                continue;
            // x_d / Phi^d in [1/2, 2]  <=>  Phi^d / x_d in [1/2, 2]
            if (f.r_ratio_inf[k] < lo || f.r_ratio_sup[k] > hi || f.z_ratio_inf[k] < lo || f.z_ratio_sup[k] > hi)
                ok[k] = false;
        }
    return ok;
}

/// int_0^t I_k for every bubble at every frame (trapezoid over frame times).
inline std::vector<std::vector<double>> integrated_In(std::span<const DiagnosticsFrame> frames)
{
    std::vector<std::vector<double>> out(frames.size());
    if (frames.empty())
        return out;
    out[0].assign(frames[0].In.size(), 0.0);
    for (std::size_t f = 1; f < frames.size(); ++f) {
        const double h = frames[f].time - frames[f - 1].time;
        out[f] = out[f - 1];
        for (std::size_t k = 0; k < out[f].size(); ++k)
            out[f][k] += 0.5 * h * (frames[f].In[k] + frames[f - 1].In[k]);
    }
    return out;
}

struct C2Fit {
    double c2 = 0.0;         ///< slope of S_n against log n through the origin
    std::vector<int> n;
    std::vector<double> s;   ///< S_n = sum_{k<n} int_0^T I_k
};

/// Fits S_n ~ c2 log n over the bubbles that have an outer neighbour.
inline C2Fit fit_c2(std::span<const DiagnosticsFrame> frames)
{
    C2Fit fit;
    if (frames.empty())
        return fit;
    const auto cum = integrated_In(frames).back();
    const auto& bubbles = frames.front().bubbles;
    double sxy = 0.0, sxx = 0.0, running = 0.0;
    for (std::size_t k = 0; k < bubbles.size(); ++k) {
        if (k > 0 && bubbles[k] > 1) {
            const double x = std::log(static_cast<double>(bubbles[k]));
            fit.n.push_back(bubbles[k]);
            fit.s.push_back(running);
            sxy += x * running;
            sxx += x * x;
        }
        running += cum[k];
    }
    fit.c2 = sxx > 0.0 ? sxy / sxx : 0.0;
    return fit;
}

/// Bubble z-position observable: log(sup Phi^d / x_d) of bubble n against the
/// formal rate -(1/|B_d|) sum_{k<n} int_0^t I_k.
struct ZPositionSample {
    int n = 0;
    double log_z = 0.0;
    double predicted = 0.0;

    double ratio() const { return predicted != 0.0 ? log_z / predicted : 0.0; }
};

inline std::vector<ZPositionSample> z_position_observable(std::span<const DiagnosticsFrame> frames,
                                                          const DimensionContext& ctx)
{
    std::vector<ZPositionSample> out;
    if (frames.empty())
        return out;
    const auto cum = integrated_In(frames).back();
    const auto& last = frames.back();
    double running = 0.0;
    for (std::size_t k = 0; k < last.bubbles.size(); ++k) {
        out.push_back({last.bubbles[k], -std::log(last.z_ratio_inf[k]), -running / ctx.ball_volume()});
        running += cum[k];
    }
    return out;
}

} // namespace eulerlab
