#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "eulerlab/biotsavart.hpp"
#include "eulerlab/errors.hpp"
#include "eulerlab/fields.hpp"
#include "eulerlab/parallel.hpp"

namespace eulerlab {

namespace detail {

/// |y_h| y_d |y|^{-(d+2)} omega(y) times the R^d volume element of particle p.
inline double main_term_density(const DimensionContext& ctx, const VortexParticle& p)
{
    const double rho = p.current.r, zeta = p.current.z;
    const double omega = p.xi * ctx.radial_power(rho);
    const double y2 = rho * rho + zeta * zeta;
    return ctx.sphere_area() * p.weight * rho * zeta * omega * std::pow(y2, -0.5 * (ctx.d() + 2));
}

} // namespace detail

/// M(x) = int_{|y_h| >= cutoff * |x_h|} |y_h| y_d |y|^{-(d+2)} omega(y) dy as a
/// particle sum; cutoff = 4 is the far region Q(x). Any d >= 3.
inline double main_term(const ParticleSystem& sys, HalfPlanePoint target, double cutoff = 4.0)
{
    if (target.r < 0.0)
        throw UsageError("main_term: target.r must be >= 0");
    const double rmin = cutoff * target.r;
    double acc = 0.0;
    for (const auto& p : sys.particles)
        if (p.xi != 0.0 && p.current.r >= rmin)
            acc += detail::main_term_density(sys.ctx, p);
    return acc;
}

/// The main-term integrand summed separately over
///   Q = {|y_h| >= 4 r},  R = {|y_h| < 4 r, |y_d| >= 4 r},  S = {|y_h| < 4 r, |y_d| < 4 r}.
struct RegionSums {
    double q = 0.0;
    double r = 0.0;
    double s = 0.0;
};

inline RegionSums region_sums(const ParticleSystem& sys, HalfPlanePoint target)
{
    RegionSums out;
    const double c = 4.0 * target.r;
    for (const auto& p : sys.particles) {
        if (p.xi == 0.0)
            continue;
        const double v = detail::main_term_density(sys.ctx, p);
        if (p.current.r >= c)
            out.q += v;
        else if (std::abs(p.current.z) >= c)
            out.r += v;
        else
            out.s += v;
    }
    return out;
}

/// Global norms entering the remainder bounds.
struct RemainderNorms {
    double grad_ld = 0.0; ///< ||grad omega||_{L^d}
    double linf = 0.0;    ///< ||omega||_{L^inf}
};

struct RemainderBounds {
    double b1 = 0.0;
    double b2 = 0.0;
};

/// b1 = min{||grad w||_d, ||w||_inf},
/// b2 = min{(1 + log(r/x_d))^{(d-1)/d} ||grad w||_d, (1 + log(r/x_d)) ||w||_inf}.
inline RemainderBounds remainder_bounds(const RemainderNorms& nrm, int d, HalfPlanePoint target)
{
    if (!(target.z > 0.0) || target.r < target.z)
        throw PreconditionViolation("remainder_bounds: target must satisfy r >= x_d > 0");
    const double lg = 1.0 + std::log(target.r / target.z);
    RemainderBounds b;
    b.b1 = std::min(nrm.grad_ld, nrm.linf);
    b.b2 = std::min(std::pow(lg, (d - 1.0) / d) * nrm.grad_ld, lg * nrm.linf);
    return b;
}

struct KeyLemmaReport {
    HalfPlanePoint target;
    double main_term = 0.0;
    double ur_over_r = 0.0;
    double ud_over_xd = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double ratio_r = 0.0; ///< |u_r/r - M/((d-1)|B_d|)| / b1
    double ratio_d = 0.0; ///< |u_d/x_d + M/|B_d|| / b2
};

struct KeyLemmaSummary {
    std::vector<KeyLemmaReport> reports;
    double max_ratio_r = 0.0;
    double max_ratio_d = 0.0;
    bool degenerate = false; ///< all bounds vanish (zero data)
};

/// Evaluates both sides of the two far-field estimates at every wedge target.
inline KeyLemmaSummary verify_key_lemma(const ParticleSystem& sys, std::span<const HalfPlanePoint> targets,
                                        const RemainderNorms& nrm, const KernelConfig& cfg = {})
{
    for (const auto& t : targets)
        if (!(t.z > 0.0) || t.r < t.z)
            throw PreconditionViolation("verify_key_lemma: target outside the wedge r >= x_d > 0");
    const auto vel = velocity_field(sys, targets, cfg);
    const int d = sys.ctx.d();
    const double bd = sys.ctx.ball_volume();

    KeyLemmaSummary out;
    out.reports.resize(targets.size());
    parallel_for(targets.size(), cfg.threads, [&](std::size_t k) {
        auto& rep = out.reports[k];
        rep.target = targets[k];
        rep.main_term = main_term(sys, targets[k]);
        rep.ur_over_r = vel[k].ur / targets[k].r;
        rep.ud_over_xd = vel[k].ud / targets[k].z;
        const auto b = remainder_bounds(nrm, d, targets[k]);
        rep.b1 = b.b1;
        rep.b2 = b.b2;
        const double er = std::abs(rep.ur_over_r - rep.main_term / ((d - 1) * bd));
        const double ed = std::abs(rep.ud_over_xd + rep.main_term / bd);
        rep.ratio_r = b.b1 > 0.0 ? er / b.b1 : 0.0;
        rep.ratio_d = b.b2 > 0.0 ? ed / b.b2 : 0.0;
    });
    out.degenerate = true;
    for (const auto& rep : out.reports) {
        out.max_ratio_r = std::max(out.max_ratio_r, rep.ratio_r);
        out.max_ratio_d = std::max(out.max_ratio_d, rep.ratio_d);
        if (rep.b1 > 0.0 || rep.b2 > 0.0)
            out.degenerate = false;
    }
    return out;
}

struct OriginLimits {
    double dr_ur = 0.0; ///< d_r u_r at the origin
    double dd_ud = 0.0; ///< d_d u_d at the origin
    double m_full = 0.0; ///< main term over all of R^d
};

/// Derivatives of the velocity at the origin from u_r(h, 0)/h and u_d(0, h)/h
/// (both exact to O(h^2) by parity), Richardson-combined over {h, 2h}.
inline OriginLimits origin_limit_identities(const ParticleSystem& sys, double h, const KernelConfig& cfg = {})
{
    if (!(h > 0.0))
        throw UsageError("origin_limit_identities: h must be > 0");
    const std::vector<HalfPlanePoint> pts{{h, 0.0}, {2 * h, 0.0}, {0.0, h}, {0.0, 2 * h}};
    const auto v = velocity_field(sys, pts, cfg);
    OriginLimits out;
    out.dr_ur = (4.0 * v[0].ur / h - v[1].ur / (2 * h)) / 3.0;
    out.dd_ud = (4.0 * v[2].ud / h - v[3].ud / (2 * h)) / 3.0;
    out.m_full = main_term(sys, {0.0, 0.0});
    return out;
}

} // namespace eulerlab
