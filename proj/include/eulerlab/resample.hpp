#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "eulerlab/fields.hpp"

namespace eulerlab {

/// Initial transported density xi_0(r_0, z_0); empty means "interpolate the
/// particle values".
using DensityFn = std::function<double(HalfPlanePoint)>;

namespace detail {

struct Quad {
    HalfPlanePoint p00, p10, p11, p01;
};

inline HalfPlanePoint bilinear(const Quad& q, double s, double t)
{
    const double a = (1 - s) * (1 - t), b = s * (1 - t), c = s * t, d = (1 - s) * t;
    return {a * q.p00.r + b * q.p10.r + c * q.p11.r + d * q.p01.r,
            a * q.p00.z + b * q.p10.z + c * q.p11.z + d * q.p01.z};
}

/// Newton inversion of the bilinear map of `q`; false when p is not inside.
inline bool invert_bilinear(const Quad& q, HalfPlanePoint p, double& s, double& t)
{
    s = 0.5;
    t = 0.5;
    for (int it = 0; it < 30; ++it) {
        const auto x = bilinear(q, s, t);
        const double fr = x.r - p.r, fz = x.z - p.z;
        const double drs = (1 - t) * (q.p10.r - q.p00.r) + t * (q.p11.r - q.p01.r);
        const double dzs = (1 - t) * (q.p10.z - q.p00.z) + t * (q.p11.z - q.p01.z);
        const double drt = (1 - s) * (q.p01.r - q.p00.r) + s * (q.p11.r - q.p10.r);
        const double dzt = (1 - s) * (q.p01.z - q.p00.z) + s * (q.p11.z - q.p10.z);
        const double det = drs * dzt - drt * dzs;
        if (det == 0.0)
            return false;
        const double ds = (fr * dzt - fz * drt) / det;
        const double dt = (drs * fz - dzs * fr) / det;
        s -= ds;
        t -= dt;
        if (std::abs(ds) + std::abs(dt) < 1e-13)
            break;
    }
    constexpr double tol = 1e-10;
    return s >= -tol && s <= 1 + tol && t >= -tol && t <= 1 + tol;
}

inline std::size_t lower_index(const std::vector<double>& ax, double x)
{
    return static_cast<std::size_t>(std::lower_bound(ax.begin(), ax.end(), x) - ax.begin());
}

} // namespace detail

/// Samples omega(t) on the grid spanned by `r_axis` x `z_axis` by pulling each
/// grid point back through the deformed seeding lattice: omega(p) =
/// xi_0(Phi^{-1}(p)) * p.r^{d-2}. Points not covered by any lattice cell get 0.
inline GriddedField resample_vorticity(const ParticleSystem& sys, std::vector<double> r_axis,
                                       std::vector<double> z_axis, const DensityFn& density = {})
{
    GriddedField g(std::move(r_axis), std::move(z_axis));
    std::vector<char> filled(g.nr() * g.nz(), 0);
    const auto& ra = g.r_axis();
    const auto& za = g.z_axis();

    for (const auto& patch : sys.patches) {
        for (int i = 0; i + 1 < patch.nr; ++i) {
            for (int j = 0; j + 1 < patch.nz; ++j) {
                const std::size_t k00 = patch.index(i, j), k10 = patch.index(i + 1, j);
                const std::size_t k11 = patch.index(i + 1, j + 1), k01 = patch.index(i, j + 1);
                const auto& P = sys.particles;
                const bool all_zero = P[k00].xi == 0.0 && P[k10].xi == 0.0 && P[k11].xi == 0.0 && P[k01].xi == 0.0;
                if (all_zero && !density)
                    continue;
                const detail::Quad cur{P[k00].current, P[k10].current, P[k11].current, P[k01].current};
                const detail::Quad ini{P[k00].initial, P[k10].initial, P[k11].initial, P[k01].initial};

                const double rmin = std::min({cur.p00.r, cur.p10.r, cur.p11.r, cur.p01.r});
                const double rmax = std::max({cur.p00.r, cur.p10.r, cur.p11.r, cur.p01.r});
                const double zmin = std::min({cur.p00.z, cur.p10.z, cur.p11.z, cur.p01.z});
                const double zmax = std::max({cur.p00.z, cur.p10.z, cur.p11.z, cur.p01.z});
                const std::size_t i0 = detail::lower_index(ra, rmin);
                const std::size_t j0 = detail::lower_index(za, zmin);
                for (std::size_t gi = i0; gi < g.nr() && ra[gi] <= rmax; ++gi) {
                    for (std::size_t gj = j0; gj < g.nz() && za[gj] <= zmax; ++gj) {
                        const std::size_t idx = gi * g.nz() + gj;
                        if (filled[idx])
                            continue;
                        const HalfPlanePoint p{ra[gi], za[gj]};
                        double s = 0, t = 0;
                        if (!detail::invert_bilinear(cur, p, s, t))
                            continue;
                        double xi = 0.0;
                        if (density) {
                            xi = density(detail::bilinear(ini, s, t));
                        } else {
                            xi = (1 - s) * (1 - t) * P[k00].xi + s * (1 - t) * P[k10].xi + s * t * P[k11].xi +
                                 (1 - s) * t * P[k01].xi;
                        }
                        g.values()[idx] = xi == 0.0 ? 0.0 : xi * sys.ctx.radial_power(p.r);
                        filled[idx] = 1;
                    }
                }
            }
        }
    }
    return g;
}

/// Gaussian-blob reconstruction of omega(t) on a grid:
///   omega(p) = sum_i omega_i A_i exp(-|p - x_i|^2 / eps_i^2) / (pi eps_i^2),
/// with A_i = w_i / (Phi^r_i)^{d-2} the current meridian cell area and
/// eps_i = ratio * spacing_i. Needs no lattice connectivity, so it stays usable
/// after the seeding lattice has been sheared.
inline GriddedField blob_vorticity(const ParticleSystem& sys, std::vector<double> r_axis, std::vector<double> z_axis,
                                   double ratio = 1.5, double cutoff = 5.0)
{
    GriddedField g(std::move(r_axis), std::move(z_axis));
    const auto& ra = g.r_axis();
    const auto& za = g.z_axis();
    for (const auto& p : sys.particles) {
        if (p.xi == 0.0)
            continue;
        const double eps = ratio * p.spacing;
        // omega_i A_i = xi_i w_i
        const double gamma = p.xi * p.weight / (std::numbers::pi * eps * eps);
        const double reach = cutoff * eps;
        const std::size_t i0 = detail::lower_index(ra, p.current.r - reach);
        const std::size_t j0 = detail::lower_index(za, p.current.z - reach);
        for (std::size_t i = i0; i < g.nr() && ra[i] <= p.current.r + reach; ++i) {
            const double dr = ra[i] - p.current.r;
            for (std::size_t j = j0; j < g.nz() && za[j] <= p.current.z + reach; ++j) {
                const double dz = za[j] - p.current.z;
                g.at(i, j) += gamma * std::exp(-(dr * dr + dz * dz) / (eps * eps));
            }
        }
    }
    return g;
}

} // namespace eulerlab
