#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "eulerlab/errors.hpp"

namespace eulerlab {

/// A point (r, z) of the meridian half-plane; r = |x_h|, z = x_d.
struct HalfPlanePoint {
    double r = 0.0;
    double z = 0.0;

    friend bool operator==(const HalfPlanePoint&, const HalfPlanePoint&) = default;
};

/// Dimension d >= 3 together with |B_d| and the measure of the unit
/// (d-2)-sphere, the factor picked up when an axisymmetric integral over
/// R^d is reduced to the meridian half-plane.
class DimensionContext {
public:
    explicit DimensionContext(int d = 3) : d_(d)
    {
        if (d < 3)
            throw UnsupportedDimension("dimension must be >= 3, got " + std::to_string(d));
        const double pi = std::numbers::pi;
        ball_volume_ = std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
        sphere_area_ = 2.0 * std::pow(pi, 0.5 * (d - 1)) / std::tgamma(0.5 * (d - 1));
    }

    int d() const { return d_; }
    double ball_volume() const { return ball_volume_; }
    double sphere_area() const { return sphere_area_; }

    /// r^{d-2}
    double radial_power(double r) const { return std::pow(r, d_ - 2); }

private:
    int d_;
    double ball_volume_;
    double sphere_area_;
};

/// Lagrangian marker. `xi` = omega_0 / r_0^{d-2} is transported unchanged,
/// `weight` = r_0^{d-2} dr dz is the frozen meridian volume element.
struct VortexParticle {
    HalfPlanePoint initial;
    HalfPlanePoint current;
    double xi = 0.0;
    double weight = 0.0;
    double spacing = 0.0; // lattice spacing of the seeding patch
};

/// Index range [begin, end) of the particles sampled from bubble n.
struct BubbleRange {
    int n = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Structured seeding lattice of one half-bubble. Particle (i, j) lives at
/// index begin + i * nz + j and started at (r_lo + (i+1/2) dr, z_lo + (j+1/2) dz).
/// dz is negative for a patch that has been reflected through z = 0.
struct LatticePatch {
    int n = 0;
    int side = 1; // +1: seeded at z > 0, -1: seeded at z < 0
    std::size_t begin = 0;
    int nr = 0;
    int nz = 0;
    double r_lo = 0.0;
    double z_lo = 0.0;
    double dr = 0.0;
    double dz = 0.0;

    std::size_t index(int i, int j) const { return begin + static_cast<std::size_t>(i) * nz + j; }
    std::size_t count() const { return static_cast<std::size_t>(nr) * nz; }
};

struct ParticleSystem {
    DimensionContext ctx{3};
    std::vector<VortexParticle> particles;
    std::vector<BubbleRange> bubble_ranges;
    std::vector<LatticePatch> patches;
    /// mirror[i] is the particle seeded at (r_0, -z_0) with -xi; empty when the
    /// system is not known to be odd in z.
    std::vector<std::size_t> mirror;
    double time = 0.0;

    std::size_t size() const { return particles.size(); }

    const BubbleRange& range_of(int n) const
    {
        for (const auto& br : bubble_ranges)
            if (br.n == n)
                return br;
        throw UsageError("unknown bubble index " + std::to_string(n));
    }
};

/// Copy of `sys` with every xi multiplied by `factor` (factor = -1 flips the
/// sign of the flow, factor = 0 gives the quiescent system).
inline ParticleSystem scaled(ParticleSystem sys, double factor)
{
    for (auto& p : sys.particles)
        p.xi *= factor;
    return sys;
}

/// Copy of `sys` reflected through z = 0 with xi negated. For an odd system
/// this is the same set of particles.
inline ParticleSystem z_mirrored(ParticleSystem sys)
{
    for (auto& p : sys.particles) {
        p.initial.z = -p.initial.z;
        p.current.z = -p.current.z;
        p.xi = -p.xi;
    }
    for (auto& patch : sys.patches) {
        patch.side = -patch.side;
        patch.z_lo = -patch.z_lo;
        patch.dz = -patch.dz; // keeps z_lo + (j+1/2) dz equal to the seed position
    }
    return sys;
}

/// omega_i = xi_i * (current r_i)^{d-2}
inline std::vector<double> reconstruct_vorticity(const ParticleSystem& sys)
{
    std::vector<double> omega(sys.size());
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const auto& p = sys.particles[i];
        omega[i] = p.xi == 0.0 ? 0.0 : p.xi * sys.ctx.radial_power(p.current.r);
    }
    return omega;
}

/// Discrete integral over R^d of an axisymmetric per-particle field:
/// sigma_{d-2} * sum_i f_i w_i.
inline double integrate_meridian(const ParticleSystem& sys, std::span<const double> f)
{
    if (f.size() != sys.size())
        throw UsageError("integrate_meridian: expected " + std::to_string(sys.size()) +
                         " values, got " + std::to_string(f.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        acc += f[i] * sys.particles[i].weight;
    return sys.ctx.sphere_area() * acc;
}

/// n equally spaced samples covering [lo, hi] inclusive.
inline std::vector<double> uniform_axis(double lo, double hi, std::size_t n)
{
    if (n < 2 || !(hi > lo))
        throw ConfigError("uniform_axis needs n >= 2 and hi > lo");
    std::vector<double> ax(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        ax[i] = lo + h * static_cast<double>(i);
    ax.back() = hi;
    return ax;
}

/// n cell-centre samples of [lo, hi]: lo + (i + 1/2) h.
inline std::vector<double> cell_centred_axis(double lo, double hi, std::size_t n)
{
    if (n < 2 || !(hi > lo))
        throw ConfigError("cell_centred_axis needs n >= 2 and hi > lo");
    std::vector<double> ax(n);
    const double h = (hi - lo) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        ax[i] = lo + h * (static_cast<double>(i) + 0.5);
    return ax;
}

/// Scalar field sampled on a uniform rectangular (r, z) grid; values are
/// stored row-major with r as the slow index.
class GriddedField {
public:
    GriddedField() = default;

    GriddedField(std::vector<double> r_axis, std::vector<double> z_axis)
        : GriddedField(std::move(r_axis), std::move(z_axis), {})
    {
    }

    GriddedField(std::vector<double> r_axis, std::vector<double> z_axis, std::vector<double> values)
        : r_(std::move(r_axis)), z_(std::move(z_axis)), v_(std::move(values))
    {
        check_axis(r_, "r");
        check_axis(z_, "z");
        if (r_.front() < 0.0)
            throw ConfigError("GriddedField: r axis must be non-negative");
        if (v_.empty())
            v_.assign(r_.size() * z_.size(), 0.0);
        if (v_.size() != r_.size() * z_.size())
            throw ConfigError("GriddedField: values do not match axes");
    }

    std::size_t nr() const { return r_.size(); }
    std::size_t nz() const { return z_.size(); }
    double dr() const { return r_[1] - r_[0]; }
    double dz() const { return z_[1] - z_[0]; }
    const std::vector<double>& r_axis() const { return r_; }
    const std::vector<double>& z_axis() const { return z_; }
    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

    double& at(std::size_t i, std::size_t j) { return v_[i * z_.size() + j]; }
    double at(std::size_t i, std::size_t j) const { return v_[i * z_.size() + j]; }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : v_)
            m = std::max(m, std::abs(v));
        return m;
    }

    /// Largest |value| within `cells` rows/columns of the grid boundary.
    /// Rows at r = 0 are not a boundary of the embedded field and are skipped.
    double max_abs_near_boundary(std::size_t cells) const
    {
        double m = 0.0;
        for (std::size_t i = 0; i < nr(); ++i)
            for (std::size_t j = 0; j < nz(); ++j) {
                const bool near_r = (r_.front() > dr() && i < cells) || i + cells >= nr();
                const bool near_z = j < cells || j + cells >= nz();
                if (near_r || near_z)
                    m = std::max(m, std::abs(at(i, j)));
            }
        return m;
    }

private:
    static void check_axis(const std::vector<double>& ax, const char* name)
    {
        if (ax.size() < 2)
            throw ConfigError(std::string("GriddedField: ") + name + " axis needs >= 2 samples");
        const double h = ax[1] - ax[0];
        if (!(h > 0.0))
            throw ConfigError(std::string("GriddedField: ") + name + " axis not increasing");
        for (std::size_t i = 1; i < ax.size(); ++i) {
            const double hi = ax[i] - ax[i - 1];
            if (!(hi > 0.0) || std::abs(hi - h) > 1e-8 * h)
                throw ConfigError(std::string("GriddedField: ") + name + " axis not uniform");
        }
    }

    std::vector<double> r_;
    std::vector<double> z_;
    std::vector<double> v_;
};

} // namespace eulerlab
