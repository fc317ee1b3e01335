#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "eulerlab/fields.hpp"
#include "eulerlab/initdata.hpp"
#include "eulerlab/norms.hpp"
#include "eulerlab/resample.hpp"

namespace eulerlab {

/// Norms of one vorticity state.
struct NormReport {
    double time = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    double sobolev_half_d = 0.0; ///< block-diagonal over bubbles
    double sobolev_dir_h = 0.0;
    double sobolev_dir_d = 0.0;
    std::vector<double> q;
    std::vector<double> lorentz; ///< ||omega/r^{d-2}||_{L^{d,q}} for each q
    double weighted = 0.0;       ///< d = 3 only
};

struct GridOptions {
    std::size_t cells = 128;   ///< grid cells across the r-extent of a bubble box
    double blob_ratio = 1.5;   ///< reconstruction width in particle spacings
    bool full = true;          ///< compute the Hankel-based norms as well
    int threads = 0;
};

/// Grid around the current support of bubble n, both halves, with uniform
/// spacing in r and z. The z-box is symmetric about 0.
inline GriddedField bubble_grid(const ParticleSystem& sys, int n, const GridOptions& opt)
{
    const auto& br = sys.range_of(n);
    double rlo = std::numeric_limits<double>::infinity(), rhi = 0.0, zhi = 0.0, reach = 0.0;
    for (std::size_t i = br.begin; i < br.end; ++i) {
        const auto& p = sys.particles[i];
        if (p.xi == 0.0)
            continue;
        rlo = std::min(rlo, p.current.r);
        rhi = std::max(rhi, p.current.r);
        zhi = std::max(zhi, std::abs(p.current.z));
        reach = std::max(reach, 5.0 * opt.blob_ratio * p.spacing);
    }
    if (!(rhi > 0.0))
        throw UsageError("bubble_grid: bubble carries no vorticity");
    const double span = (rhi - rlo) + 2.0 * reach;
    const double h = span / static_cast<double>(opt.cells - 4);
    const double r0 = std::max(0.0, rlo - reach - 2.0 * h);
    const double r1 = rhi + reach + 2.0 * h;
    const auto nr = static_cast<std::size_t>(std::ceil((r1 - r0) / h));
    const double z1 = zhi + reach + 2.0 * h;
    const auto nz = 2 * static_cast<std::size_t>(std::ceil(z1 / h));
    return GriddedField(cell_centred_axis(r0, r0 + h * nr, nr), cell_centred_axis(-0.5 * h * nz, 0.5 * h * nz, nz));
}

/// Blob reconstruction of bubble n alone on bubble_grid.
inline GriddedField bubble_field(const ParticleSystem& sys, int n, const GridOptions& opt)
{
    const auto& br = sys.range_of(n);
    ParticleSystem one;
    one.ctx = sys.ctx;
    one.particles.assign(sys.particles.begin() + static_cast<std::ptrdiff_t>(br.begin),
                         sys.particles.begin() + static_cast<std::ptrdiff_t>(br.end));
    one.bubble_ranges.push_back({n, 0, one.particles.size()});
    const auto g = bubble_grid(sys, n, opt);
    return blob_vorticity(one, g.r_axis(), g.z_axis(), opt.blob_ratio);
}

/// Per-bubble Sobolev norms (squared) summed over bubbles. Exact for the
/// directional norms when bubbles have disjoint r-supports, block-diagonal for
/// the full norm.
inline SobolevNorms family_sobolev(const ParticleSystem& sys, const GridOptions& opt)
{
    double f2 = 0.0, h2 = 0.0, v2 = 0.0;
    SobolevOptions so;
    so.d = sys.ctx.d();
    so.horizontal = opt.full;
    so.threads = opt.threads;
    for (const auto& br : sys.bubble_ranges) {
        bool any = false;
        for (std::size_t i = br.begin; i < br.end && !any; ++i)
            any = sys.particles[i].xi != 0.0;
        if (!any)
            continue;
        const auto s = sobolev_norms(bubble_field(sys, br.n, opt), so);
        f2 += s.full * s.full;
        h2 += s.horizontal * s.horizontal;
        v2 += s.vertical * s.vertical;
    }
    return {std::sqrt(f2), std::sqrt(h2), std::sqrt(v2)};
}

/// Same as family_sobolev but for the exact initial data sampled pointwise.
inline SobolevNorms initial_family_sobolev(const BubbleParams& params, int d, const GridOptions& opt)
{
    double f2 = 0.0, h2 = 0.0, v2 = 0.0;
    SobolevOptions so;
    so.d = d;
    so.horizontal = opt.full;
    so.threads = opt.threads;
    for (int n = params.n0; n <= params.m; ++n) {
        const auto s = sobolev_norms(sample_bubble(params, n, opt.cells), so);
        f2 += s.full * s.full;
        h2 += s.horizontal * s.horizontal;
        v2 += s.vertical * s.vertical;
    }
    return {std::sqrt(f2), std::sqrt(h2), std::sqrt(v2)};
}

/// Particle norms plus grid Sobolev norms. When `params` is given and the
/// system is at t = 0 the Sobolev part uses the exact data.
inline NormReport norm_report(const ParticleSystem& sys, std::span<const double> q_list, const GridOptions& opt,
                              const BubbleParams* params = nullptr)
{
    NormReport rep;
    rep.time = sys.time;
    const auto lp = particle_lp_norms(sys);
    rep.l1 = lp.l1;
    rep.l2 = lp.l2;
    rep.linf = lp.linf;
    const auto s = (params && sys.time == 0.0) ? initial_family_sobolev(*params, sys.ctx.d(), opt)
                                               : family_sobolev(sys, opt);
    rep.sobolev_half_d = s.full;
    rep.sobolev_dir_h = s.horizontal;
    rep.sobolev_dir_d = s.vertical;
    for (double q : q_list) {
        rep.q.push_back(q);
        rep.lorentz.push_back(particle_lorentz_norm(sys, q));
    }
    if (sys.ctx.d() == 3)
        rep.weighted = weighted_l2(sys);
    return rep;
}

} // namespace eulerlab
