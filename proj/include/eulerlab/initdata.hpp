#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

#include "eulerlab/errors.hpp"
#include "eulerlab/fields.hpp"

namespace eulerlab {

/// Parameters of the multi-bubble data family
///   omega_0 = sum_{n=n0}^{m} n^{-alpha} omega_loc^{(n)}.
struct BubbleParams {
    int n0 = 1;
    int m = 2;
    double alpha = 0.6;
    double inner_radius = 1.0 / 32.0;
    double outer_radius = 1.0 / 8.0;

    void validate() const
    {
        if (n0 < 1)
            throw ConfigError("BubbleParams: n0 must be >= 1");
        if (m < n0)
            throw ConfigError("BubbleParams: m must be >= n0");
        if (!(alpha > 0.0 && alpha < 0.75))
            throw ConfigError("BubbleParams: alpha must lie in (0, 3/4)");
        if (!(inner_radius > 0.0 && inner_radius < outer_radius))
            throw ConfigError("BubbleParams: need 0 < inner_radius < outer_radius");
    }

    int bubble_count() const { return m - n0 + 1; }
};

namespace detail {

inline double exp_ramp(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

/// C-infinity step: 0 for t <= 0, 1 for t >= 1.
inline double smooth_step(double t)
{
    if (t <= 0.0)
        return 0.0;
    if (t >= 1.0)
        return 1.0;
    const double a = exp_ramp(t);
    return a / (a + exp_ramp(1.0 - t));
}

} // namespace detail

/// 8^k as an exact power of two.
inline double pow8(int k) { return std::ldexp(1.0, 3 * k); }

/// Radial bump: 1 on |p| <= inner, 0 on |p| >= outer, smooth monotone between.
inline double bump_phi(double px, double pz, double inner = 1.0 / 32.0, double outer = 1.0 / 8.0)
{
    const double rho = std::hypot(px, pz);
    return detail::smooth_step((outer - rho) / (outer - inner));
}

inline double bump_phi(HalfPlanePoint p) { return bump_phi(p.r, p.z); }

/// Centre (8^{-n+1}, 8^{-n}) of the upper half of bubble n.
inline HalfPlanePoint bubble_centre(int n) { return {pow8(1 - n), pow8(-n)}; }

/// Radius 8^{-n}/8 of each half-bubble support disk.
inline double bubble_radius(int n) { return pow8(-n - 1); }

/// Unweighted n-th bubble pair: positive bump above z = 0, negative mirror below.
inline double bubble_vorticity(int n, HalfPlanePoint p)
{
    if (n < 1)
        throw UsageError("bubble_vorticity: n must be >= 1");
    const double s = pow8(n);
    const auto c = bubble_centre(n);
    const double dr = s * (p.r - c.r);
    return bump_phi(dr, s * (p.z - c.z)) - bump_phi(dr, s * (p.z + c.z));
}

/// Pointwise omega_0. Supports are disjoint, so only the bubble whose radial
/// band contains p can contribute.
inline double initial_vorticity(const BubbleParams& params, HalfPlanePoint p)
{
    if (!(p.r > 0.0))
        return 0.0;
    const int n = 1 - static_cast<int>(std::lround(std::log(p.r) / std::log(8.0)));
    if (n < params.n0 || n > params.m)
        return 0.0;
    const double w = bubble_vorticity(n, p);
    return w == 0.0 ? 0.0 : std::pow(static_cast<double>(n), -params.alpha) * w;
}

/// Transported density xi_0 = omega_0 / r^{d-2} as a callable.
inline std::function<double(HalfPlanePoint)> initial_density(const BubbleParams& params, const DimensionContext& ctx)
{
    return [params, ctx](HalfPlanePoint p) {
        const double w = initial_vorticity(params, p);
        return w == 0.0 ? 0.0 : w / ctx.radial_power(p.r);
    };
}

/// Particles at the cell centres of a resolution x resolution lattice over the
/// bounding square of each half-bubble. Per bubble the upper block is stored
/// first and the lower block holds the exact mirror images in the same order.
inline ParticleSystem seed_particles(const BubbleParams& params, int resolution, const DimensionContext& ctx)
{
    params.validate();
    if (resolution < 8)
        throw ConfigError("seed_particles: per-bubble resolution must be >= 8, got " + std::to_string(resolution));

    ParticleSystem sys;
    sys.ctx = ctx;
    const std::size_t per_half = static_cast<std::size_t>(resolution) * resolution;
    sys.particles.reserve(per_half * 2 * params.bubble_count());
    sys.mirror.resize(per_half * 2 * params.bubble_count());

    for (int n = params.n0; n <= params.m; ++n) {
        const auto c = bubble_centre(n);
        const double a = bubble_radius(n);
        const double h = 2.0 * a / resolution;
        const std::size_t begin = sys.particles.size();

        LatticePatch upper{n, +1, begin, resolution, resolution, c.r - a, c.z - a, h, h};
        LatticePatch lower{n, -1, begin + per_half, resolution, resolution, c.r - a, -(c.z - a), h, -h};

        std::vector<VortexParticle> below;
        below.reserve(per_half);
        for (int i = 0; i < resolution; ++i) {
            const double r0 = upper.r_lo + (i + 0.5) * h;
            const double w = ctx.radial_power(r0) * h * h;
            for (int j = 0; j < resolution; ++j) {
                const double z0 = upper.z_lo + (j + 0.5) * h;
                const double omega = initial_vorticity(params, {r0, z0});
                const double xi = omega == 0.0 ? 0.0 : omega / ctx.radial_power(r0);
                sys.particles.push_back({{r0, z0}, {r0, z0}, xi, w, h});
                below.push_back({{r0, -z0}, {r0, -z0}, -xi, w, h});
            }
        }
        sys.particles.insert(sys.particles.end(), below.begin(), below.end());
        for (std::size_t k = 0; k < per_half; ++k) {
            sys.mirror[begin + k] = begin + per_half + k;
            sys.mirror[begin + per_half + k] = begin + k;
        }
        sys.patches.push_back(upper);
        sys.patches.push_back(lower);
        sys.bubble_ranges.push_back({n, begin, sys.particles.size()});
    }
    return sys;
}

/// Axis-aligned box [r_lo, r_hi] x [z_lo, z_hi].
struct Box {
    double r_lo = 0.0;
    double r_hi = 0.0;
    double z_lo = 0.0;
    double z_hi = 0.0;
};

/// Bounding box of both halves of bubble n, enlarged by `margin` (relative to
/// the disk radius) on every side.
inline Box bubble_box(int n, double margin = 0.25)
{
    const auto c = bubble_centre(n);
    const double a = bubble_radius(n) * (1.0 + margin);
    return {c.r - a, c.r + a, -(c.z + a), c.z + a};
}

/// Samples `f` at every node of the grid spanned by the two axes.
template <class F>
GriddedField sample_grid(std::vector<double> r_axis, std::vector<double> z_axis, F&& f)
{
    GriddedField g(std::move(r_axis), std::move(z_axis));
    for (std::size_t i = 0; i < g.nr(); ++i)
        for (std::size_t j = 0; j < g.nz(); ++j)
            g.at(i, j) = f(HalfPlanePoint{g.r_axis()[i], g.z_axis()[j]});
    return g;
}

/// omega_0 restricted to bubble n (weight n^{-alpha} included) on an n x n
/// cell-centred grid over bubble_box(n).
inline GriddedField sample_bubble(const BubbleParams& params, int n, std::size_t cells, double margin = 0.25)
{
    const Box b = bubble_box(n, margin);
    const double wgt = std::pow(static_cast<double>(n), -params.alpha);
    const double zspan = b.z_hi - b.z_lo;
    const double rspan = b.r_hi - b.r_lo;
    const auto nz = static_cast<std::size_t>(std::lround(cells * zspan / rspan));
    return sample_grid(cell_centred_axis(b.r_lo, b.r_hi, cells), cell_centred_axis(b.z_lo, b.z_hi, nz),
                       [&](HalfPlanePoint p) { return wgt * bubble_vorticity(n, p); });
}

} // namespace eulerlab
