#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eulerlab/errors.hpp"
#include "eulerlab/fields.hpp"
#include "eulerlab/parallel.hpp"
#include "eulerlab/resample.hpp"

namespace eulerlab {

/// How the azimuthal integral of the ring kernel is evaluated.
enum class AzimuthalRule {
    trapezoid, ///< n_theta-point periodic trapezoid rule
    elliptic,  ///< closed form in complete elliptic integrals (AGM)
};

struct KernelConfig {
    int n_theta = 256;
    /// Uniform desingularization length. When unset every source uses
    /// blob_ratio times the lattice spacing it was seeded with.
    std::optional<double> delta_reg;
    double blob_ratio = 1.0;
    AzimuthalRule rule = AzimuthalRule::elliptic;
    int threads = 0;

    void validate() const
    {
        if (n_theta < 16 || n_theta % 2 != 0)
            throw ConfigError("KernelConfig: n_theta must be even and >= 16");
        if (delta_reg && *delta_reg < 0.0)
            throw ConfigError("KernelConfig: delta_reg must be >= 0");
        if (blob_ratio < 0.0)
            throw ConfigError("KernelConfig: blob_ratio must be >= 0");
    }

    double delta_for(const VortexParticle& p) const { return delta_reg ? *delta_reg : blob_ratio * p.spacing; }
};

struct Velocity {
    double ur = 0.0;
    double ud = 0.0;

    friend bool operator==(const Velocity&, const Velocity&) = default;
};

/// I0 = int_0^{2pi} q^{-3/2} dtheta and I1 = int_0^{2pi} cos(theta) q^{-3/2} dtheta
/// with q = A - B cos(theta), A = gap + B.
struct AzimuthalMoments {
    double i0 = 0.0;
    double i1 = 0.0;
};

/// Complete elliptic integrals K(m), E(m) by the arithmetic-geometric mean,
/// given the complementary parameter m1 = 1 - m.
inline void elliptic_ke(double m1, double& K, double& E)
{
    double a = 1.0;
    double b = std::sqrt(m1);
    double sum = 0.5 * (1.0 - m1);
    double pow2 = 0.5;
    for (int it = 0; it < 40; ++it) {
        const double c = 0.5 * (a - b);
        if (c <= 1e-16 * a)
            break;
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
        pow2 *= 2.0;
        sum += pow2 * c * c;
    }
    K = std::numbers::pi / (2.0 * a);
    E = K * (1.0 - sum);
}

inline AzimuthalMoments azimuthal_elliptic(double gap, double B)
{
    constexpr double pi = std::numbers::pi;
    const double A = gap + B;
    if (B == 0.0)
        return {2.0 * pi / (A * std::sqrt(A)), 0.0};
    const double beta = B / A;
    if (beta < 1e-3) {
        // binomial series of (1 - beta cos)^{-3/2}; next omitted term is O(beta^6)
        const double a32 = 1.0 / (A * std::sqrt(A));
        const double b2 = beta * beta;
        const double i0 = pi * (2.0 + b2 * (15.0 / 8.0 + b2 * (3.0 / 4.0) * (315.0 / 128.0)));
        const double i1 = pi * beta * (1.5 + b2 * ((35.0 / 16.0) * 0.75 + b2 * (693.0 / 256.0) * 0.625));
        return {a32 * i0, a32 * i1};
    }
    double K = 0, E = 0;
    const double apb = A + B;
    elliptic_ke(gap / apb, K, E);
    const double sq = std::sqrt(apb);
    const double i0 = 4.0 * E / (gap * sq);
    const double j = 4.0 * K / sq;
    return {i0, (A * i0 - j) / B};
}

/// Node tables for the symmetric trapezoid rule on [0, 2pi).
class TrapezoidTable {
public:
    explicit TrapezoidTable(int n_theta)
    {
        const int half = n_theta / 2;
        cos_.resize(half + 1);
        hav_.resize(half + 1);
        w_.resize(half + 1);
        const double h = 2.0 * std::numbers::pi / n_theta;
        for (int j = 0; j <= half; ++j) {
            const double th = h * j;
            cos_[j] = std::cos(th);
            const double s = std::sin(0.5 * th);
            hav_[j] = 2.0 * s * s; // 1 - cos(theta) without cancellation
            w_[j] = (j == 0 || j == half) ? h : 2.0 * h;
        }
    }

    AzimuthalMoments operator()(double gap, double B) const
    {
        double i0 = 0.0, i1 = 0.0;
        for (std::size_t j = 0; j < cos_.size(); ++j) {
            const double q = gap + B * hav_[j];
            const double f = w_[j] / (q * std::sqrt(q));
            i0 += f;
            i1 += f * cos_[j];
        }
        return {i0, i1};
    }

private:
    std::vector<double> cos_, hav_, w_;
};

/// Structure-of-arrays view of the vorticity-carrying particles, in particle
/// order. strength = frozen weight * current omega.
struct SourceSet {
    std::vector<double> rho, zeta, strength, delta2;

    static SourceSet from(const ParticleSystem& sys, const KernelConfig& cfg)
    {
        SourceSet s;
        for (const auto& p : sys.particles)
            s.push(sys.ctx, p, p.current, cfg);
        return s;
    }

    /// Sources at `positions` (one per particle) instead of the stored current positions.
    static SourceSet from(const ParticleSystem& sys, const KernelConfig& cfg, std::span<const HalfPlanePoint> positions)
    {
        if (positions.size() != sys.size())
            throw UsageError("SourceSet: position count does not match particle count");
        SourceSet s;
        for (std::size_t i = 0; i < sys.size(); ++i)
            s.push(sys.ctx, sys.particles[i], positions[i], cfg);
        return s;
    }

    std::size_t size() const { return rho.size(); }

private:
    void push(const DimensionContext& ctx, const VortexParticle& p, HalfPlanePoint at, const KernelConfig& cfg)
    {
        if (p.xi == 0.0)
            return;
        const double delta = cfg.delta_for(p);
        rho.push_back(at.r);
        zeta.push_back(at.z);
        strength.push_back(p.weight * p.xi * ctx.radial_power(at.r));
        delta2.push_back(delta * delta);
    }
};

/// Sums the ring kernel of every source at `target` (d = 3).
class RingKernel {
public:
    explicit RingKernel(const KernelConfig& cfg) : rule_(cfg.rule), table_(cfg.n_theta) {}

    Velocity evaluate(const SourceSet& src, HalfPlanePoint x) const
    {
        double ur = 0.0, ud = 0.0;
        const double r = x.r;
        for (std::size_t k = 0; k < src.size(); ++k) {
            const double dz = x.z - src.zeta[k];
            const double dr = r - src.rho[k];
            const double gap = dr * dr + dz * dz + src.delta2[k];
            if (gap == 0.0)
                continue; // unregularized self-interaction
            const double B = 2.0 * r * src.rho[k];
            const auto mom = rule_ == AzimuthalRule::elliptic ? azimuthal_elliptic(gap, B) : table_(gap, B);
            const double s = src.strength[k];
            ur -= s * dz * mom.i1;
            ud += s * (r * mom.i1 - src.rho[k] * mom.i0);
        }
        constexpr double inv4pi = 0.25 / std::numbers::pi;
        if (r == 0.0)
            ur = 0.0;
        return {inv4pi * ur, inv4pi * ud};
    }

private:
    AzimuthalRule rule_;
    TrapezoidTable table_;
};

inline void require_d3(const ParticleSystem& sys)
{
    if (sys.ctx.d() != 3)
        throw UnsupportedDimension("Biot-Savart evaluation is implemented for d = 3 only (got d = " +
                                   std::to_string(sys.ctx.d()) + ")");
}

/// Axisymmetric Biot-Savart velocity (u_r, u_d) induced by the particles at `target`.
inline Velocity velocity_at(const ParticleSystem& sys, HalfPlanePoint target, const KernelConfig& cfg = {})
{
    require_d3(sys);
    cfg.validate();
    if (target.r < 0.0)
        throw UsageError("velocity_at: target.r must be >= 0");
    return RingKernel(cfg).evaluate(SourceSet::from(sys, cfg), target);
}

/// velocity_at over many targets, parallel over targets. Each target is summed
/// serially in particle order, so the output is independent of thread count.
inline std::vector<Velocity> velocity_field(const ParticleSystem& sys, std::span<const HalfPlanePoint> targets,
                                            const KernelConfig& cfg = {})
{
    require_d3(sys);
    cfg.validate();
    std::vector<Velocity> out(targets.size());
    if (targets.empty())
        return out;
    for (const auto& t : targets)
        if (t.r < 0.0)
            throw UsageError("velocity_field: target.r must be >= 0");
    const SourceSet src = SourceSet::from(sys, cfg);
    const RingKernel kernel(cfg);
    parallel_for(targets.size(), cfg.threads, [&](std::size_t i) { out[i] = kernel.evaluate(src, targets[i]); });
    return out;
}

struct CurlRoundtrip {
    GriddedField omega;    ///< d_r u_d - d_z u_r at the grid nodes (0 on the outer ring)
    double error = 0.0;    ///< relative L^2(R^3) error against the sampled vorticity
    double divergence = 0.0; ///< ||div u||_{L^2} / ||grad u||_{L^2}
};

/// Evaluates the velocity on the grid, rebuilds the vorticity and the
/// divergence by centred differences and compares with omega resampled from
/// the particles (through `density` when given). Norms are taken over interior
/// nodes with the R^3 volume element.
inline CurlRoundtrip curl_roundtrip(const ParticleSystem& sys, std::vector<double> r_axis, std::vector<double> z_axis,
                                    const KernelConfig& cfg = {}, const DensityFn& density = {})
{
    require_d3(sys);
    GriddedField ref = resample_vorticity(sys, std::move(r_axis), std::move(z_axis), density);
    const double peak = ref.max_abs();
    if (peak > 0.0 && ref.max_abs_near_boundary(2) > 1e-12 * peak)
        throw ConfigError("curl_roundtrip: vorticity reaches the outer two grid cells");
    const std::size_t nr = ref.nr(), nz = ref.nz();
    std::vector<HalfPlanePoint> targets;
    targets.reserve(nr * nz);
    for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nz; ++j)
            targets.push_back({ref.r_axis()[i], ref.z_axis()[j]});
    const auto u = velocity_field(sys, targets, cfg);

    CurlRoundtrip out;
    out.omega = GriddedField(ref.r_axis(), ref.z_axis());
    const double dr = ref.dr(), dz = ref.dz();
    double err2 = 0.0, ref2 = 0.0, div2 = 0.0, grad2 = 0.0;
    for (std::size_t i = 1; i + 1 < nr; ++i) {
        const double r = ref.r_axis()[i];
        for (std::size_t j = 1; j + 1 < nz; ++j) {
            const auto& e = u[(i + 1) * nz + j];
            const auto& w = u[(i - 1) * nz + j];
            const auto& n = u[i * nz + j + 1];
            const auto& s = u[i * nz + j - 1];
            const auto& c = u[i * nz + j];
            const double dur_dr = (e.ur - w.ur) / (2 * dr), dud_dr = (e.ud - w.ud) / (2 * dr);
            const double dur_dz = (n.ur - s.ur) / (2 * dz), dud_dz = (n.ud - s.ud) / (2 * dz);
            const double curl = dud_dr - dur_dz;
            const double div = dur_dr + c.ur / r + dud_dz;
            out.omega.at(i, j) = curl;
            const double diff = curl - ref.at(i, j);
            err2 += r * diff * diff;
            ref2 += r * ref.at(i, j) * ref.at(i, j);
            div2 += r * div * div;
            grad2 += r * (dur_dr * dur_dr + dur_dz * dur_dz + dud_dr * dud_dr + dud_dz * dud_dz + c.ur * c.ur / (r * r));
        }
    }
    out.error = ref2 > 0.0 ? std::sqrt(err2 / ref2) : std::sqrt(err2);
    out.divergence = grad2 > 0.0 ? std::sqrt(div2 / grad2) : 0.0;
    return out;
}

} // namespace eulerlab
