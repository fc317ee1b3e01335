#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <mutex>
#include <new>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "eulerlab/errors.hpp"
#include "eulerlab/fields.hpp"
#include "eulerlab/parallel.hpp"

namespace eulerlab {

// ---------------------------------------------------------------------------
// Lorentz norms
// ---------------------------------------------------------------------------

/// ||f||_{L^{p,q}} = ( int_0^inf (t^{1/p} f*(t))^q dt/t )^{1/q} of the step
/// function taking value values[i] on a set of measure measures[i]. The
/// decreasing rearrangement is piecewise constant, so the t-integral is done
/// exactly; q = infinity gives sup_t t^{1/p} f*(t).
inline double lorentz_norm(std::span<const double> values, std::span<const double> measures, double p, double q)
{
    if (values.size() != measures.size())
        throw UsageError("lorentz_norm: values and measures differ in length");
    if (!(p > 1.0) || std::isinf(p))
        throw UsageError("lorentz_norm: p must lie in (1, inf)");
    if (!(q >= 1.0))
        throw UsageError("lorentz_norm: q must be >= 1");
    for (double w : measures)
        if (!(w > 0.0))
            throw UsageError("lorentz_norm: measures must be positive");
    if (values.empty())
        return 0.0;

    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(values[a]) > std::abs(values[b]); });

    double t = 0.0;
    if (std::isinf(q)) {
        double sup = 0.0;
        for (std::size_t k : order) {
            t += measures[k];
            sup = std::max(sup, std::abs(values[k]) * std::pow(t, 1.0 / p));
        }
        return sup;
    }
    const double e = q / p;
    double acc = 0.0;
    double prev = 0.0; // t^{q/p} at the left end of the current step
    for (std::size_t k : order) {
        t += measures[k];
        const double next = std::pow(t, e);
        const double v = std::abs(values[k]);
        if (v > 0.0)
            acc += std::pow(v, q) * (next - prev);
        prev = next;
    }
    return std::pow(acc / e, 1.0 / q);
}

/// ||omega / r^{d-2}||_{L^{d,q}} of a particle system: the transported density
/// evaluated at the current positions with the frozen volume elements.
inline double particle_lorentz_norm(const ParticleSystem& sys, double q)
{
    std::vector<double> vals, meas;
    vals.reserve(sys.size());
    meas.reserve(sys.size());
    for (const auto& p : sys.particles) {
        if (p.xi == 0.0)
            continue;
        vals.push_back(p.xi); // omega / r^{d-2} at the current position
        meas.push_back(sys.ctx.sphere_area() * p.weight);
    }
    return lorentz_norm(vals, meas, static_cast<double>(sys.ctx.d()), q);
}

// ---------------------------------------------------------------------------
// Fractional Sobolev norms of axisymmetric fields
// ---------------------------------------------------------------------------

struct SobolevNorms {
    double full = 0.0;       ///< ||Lambda^s f||_{L^2}
    double horizontal = 0.0; ///< ||Lambda_h^s f||_{L^2}
    double vertical = 0.0;   ///< ||Lambda_d^s f||_{L^2}
};

struct SobolevOptions {
    int d = 3;
    double order = -1.0;         ///< s; negative means d/2
    bool horizontal = true;      ///< also compute the full and horizontal norms (Hankel step)
    int hankel_oversample = 4;   ///< k_h spacing = pi / (oversample * r_max)
    std::size_t margin_cells = 2;
    double margin_tol = 1e-10;   ///< allowed |f| near the boundary, relative to max |f|
    int threads = 0;
};

namespace detail {

inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

/// Row-wise real DFT along z; out[i][m] = sum_j f(i, j) exp(-2 pi i j m / nz).
inline std::vector<std::complex<double>> rowwise_rfft(const GriddedField& f)
{
    const int nr = static_cast<int>(f.nr());
    const int nz = static_cast<int>(f.nz());
    const int nk = nz / 2 + 1;
    const std::size_t n_in = static_cast<std::size_t>(nr) * nz;
    const std::size_t n_out = static_cast<std::size_t>(nr) * nk;
    // fftw_malloc keeps the alignment, and with it the chosen codelets, identical between runs
    auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * n_in));
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_out));
    if (!in || !buf) {
        fftw_free(in);
        fftw_free(buf);
        throw std::bad_alloc();
    }
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_many_dft_r2c(1, &nz, nr, in, nullptr, 1, nz, buf, nullptr, 1, nk, FFTW_ESTIMATE);
    }
    std::copy(f.values().begin(), f.values().end(), in);
    fftw_execute(plan);
    std::vector<std::complex<double>> out(n_out);
    for (std::size_t k = 0; k < n_out; ++k)
        out[k] = {buf[k][0], buf[k][1]};
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(buf);
    return out;
}

} // namespace detail

/// Plancherel norms of Lambda^s f, Lambda_h^s f and Lambda_d^s f for an
/// axisymmetric f(r, z) on R^d. The z-direction transform is a row-wise DFT
/// over the periodic z-box of the grid; the horizontal transform is the radial
/// (Hankel) Fourier transform on R^{d-1}, evaluated by midpoint quadrature in r.
/// The midpoint sum is only spectrally accurate when f vanishes to high order
/// at r = 0; a field with f(0, z) != 0 leaves an O(dr^2) error that does not
/// decay in k and spoils the full and horizontal norms.
inline SobolevNorms sobolev_norms(const GriddedField& f, const SobolevOptions& opt = {})
{
    const DimensionContext ctx(opt.d);
    const double s = opt.order < 0.0 ? 0.5 * opt.d : opt.order;
    const double fmax = f.max_abs();
    if (fmax == 0.0)
        return {};
    if (f.max_abs_near_boundary(opt.margin_cells) > opt.margin_tol * fmax)
        throw ConfigError("sobolev_norms: field support reaches the grid boundary");

    const std::size_t nr = f.nr();
    const std::size_t nz = f.nz();
    const std::size_t nk = nz / 2 + 1;
    const double dr = f.dr();
    const double dz = f.dz();
    const double L = dz * static_cast<double>(nz);
    const auto& ra = f.r_axis();

    const auto X = detail::rowwise_rfft(f);
    std::vector<double> kz(nk), cm(nk);
    for (std::size_t m = 0; m < nk; ++m) {
        kz[m] = 2.0 * std::numbers::pi * static_cast<double>(m) / L;
        cm[m] = (m == 0 || (nz % 2 == 0 && m == nz / 2)) ? 1.0 : 2.0;
    }

    // Lambda_d: sigma int r^{d-2} dr sum_m |k|^{2s} |F|^2 / L
    double vert = 0.0;
    for (std::size_t i = 0; i < nr; ++i) {
        double row = 0.0;
        for (std::size_t m = 1; m < nk; ++m)
            row += cm[m] * std::pow(kz[m], 2.0 * s) * std::norm(X[i * nk + m]);
        vert += ctx.radial_power(ra[i]) * row;
    }
    vert *= ctx.sphere_area() * dr * dz * dz / L;

    SobolevNorms out;
    out.vertical = std::sqrt(vert);
    if (!opt.horizontal)
        return out;

    // Radial Fourier transform on R^n, n = d - 1:
    //   H(k) = (2 pi)^{n/2} k^{-nu} int G(r) J_nu(k r) r^{nu+1} dr,  nu = n/2 - 1
    const int n = opt.d - 1;
    const double nu = 0.5 * n - 1.0;
    const double r_out = ra.back() + 0.5 * dr;
    const double kmax = std::numbers::pi / dr;
    const double dk = std::numbers::pi / (opt.hankel_oversample * r_out);
    const auto nkh = static_cast<std::size_t>(std::ceil(kmax / dk)) + 1;

    // bessel[j * nr + i] = (2 pi)^{n/2} k_j^{-nu} J_nu(k_j r_i) r_i^{nu+1} dr dz
    std::vector<double> bessel(nkh * nr);
    const double pref = std::pow(2.0 * std::numbers::pi, 0.5 * n) * dr * dz;
    parallel_for(nkh, opt.threads, [&](std::size_t j) {
        const double k = dk * static_cast<double>(j);
        for (std::size_t i = 0; i < nr; ++i) {
            const double r = ra[i];
            double kern;
            if (k == 0.0)
                kern = std::pow(0.5, nu) / std::tgamma(nu + 1.0) * std::pow(r, 2.0 * nu + 1.0);
            else
                kern = std::pow(k, -nu) * std::cyl_bessel_j(nu, k * r) * std::pow(r, nu + 1.0);
            bessel[j * nr + i] = pref * kern;
        }
    });

    // Only z-modes carrying energy need the Hankel step.
    std::vector<double> mode_energy(nk, 0.0);
    double total_energy = 0.0;
    for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t m = 0; m < nk; ++m) {
            const double e = cm[m] * std::norm(X[i * nk + m]) * ctx.radial_power(ra[i]);
            mode_energy[m] += e;
            total_energy += e;
        }
    std::size_t m_hi = nk;
    {
        double tail = 0.0;
        while (m_hi > 1 && tail + mode_energy[m_hi - 1] <= 1e-18 * total_energy) {
            tail += mode_energy[m_hi - 1];
            --m_hi;
        }
    }

    std::vector<double> full_k(nkh, 0.0), horiz_k(nkh, 0.0);
    parallel_for(nkh, opt.threads, [&](std::size_t j) {
        const double k = dk * static_cast<double>(j);
        const double* bj = &bessel[j * nr];
        double fk = 0.0, hk = 0.0;
        const double hweight = std::pow(k, 2.0 * s);
        for (std::size_t m = 0; m < m_hi; ++m) {
            std::complex<double> H = 0.0;
            for (std::size_t i = 0; i < nr; ++i)
                H += bj[i] * X[i * nk + m];
            const double e = cm[m] * std::norm(H);
            fk += e * std::pow(k * k + kz[m] * kz[m], s);
            hk += e * hweight;
        }
        const double radial = std::pow(k, n - 1);
        full_k[j] = fk * radial;
        horiz_k[j] = hk * radial;
    });

    double full = 0.0, horiz = 0.0;
    for (std::size_t j = 0; j < nkh; ++j) {
        const double w = (j == 0 || j + 1 == nkh) ? 0.5 : 1.0;
        full += w * full_k[j];
        horiz += w * horiz_k[j];
    }
    const double norm = ctx.sphere_area() * dk / (std::pow(2.0 * std::numbers::pi, n) * L);
    out.full = std::sqrt(full * norm);
    out.horizontal = std::sqrt(horiz * norm);
    return out;
}

// ---------------------------------------------------------------------------
// Grid norms
// ---------------------------------------------------------------------------

/// ( int_{R^d} |grad f|^d )^{1/d} from centred differences at interior nodes.
inline double grad_ld_norm(const GriddedField& f, int d)
{
    const DimensionContext ctx(d);
    double acc = 0.0;
    const double dr = f.dr(), dz = f.dz();
    for (std::size_t i = 1; i + 1 < f.nr(); ++i) {
        const double w = ctx.radial_power(f.r_axis()[i]);
        for (std::size_t j = 1; j + 1 < f.nz(); ++j) {
            const double fr = (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * dr);
            const double fz = (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * dz);
            acc += w * std::pow(fr * fr + fz * fz, 0.5 * d);
        }
    }
    return std::pow(ctx.sphere_area() * acc * dr * dz, 1.0 / d);
}

/// ( int_{R^d} |f|^p )^{1/p} by the midpoint rule.
inline double grid_lp_norm(const GriddedField& f, int d, double p)
{
    const DimensionContext ctx(d);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.nr(); ++i) {
        const double w = ctx.radial_power(f.r_axis()[i]);
        for (std::size_t j = 0; j < f.nz(); ++j)
            acc += w * std::pow(std::abs(f.at(i, j)), p);
    }
    return std::pow(ctx.sphere_area() * acc * f.dr() * f.dz(), 1.0 / p);
}

struct GnCheck {
    double grad_ld = 0.0;
    double lambda_half_d = 0.0;

    double ratio() const { return lambda_half_d > 0.0 ? grad_ld / lambda_half_d : 0.0; }
};

/// Both sides of ||grad f||_{L^d} <= C ||Lambda^{d/2} f||_{L^2} on one grid.
inline GnCheck gn_check(const GriddedField& f, int d, int threads = 0)
{
    SobolevOptions opt;
    opt.d = d;
    opt.threads = threads;
    return {grad_ld_norm(f, d), sobolev_norms(f, opt).full};
}

// ---------------------------------------------------------------------------
// Particle norms
// ---------------------------------------------------------------------------

/// ||z^{-1/2} r^{-1} omega||_{L^2(R^3)} from the particles: twice the sum over
/// the z > 0 half of sigma w |z|^{-1} r^{-2} omega^2.
inline double weighted_l2(const ParticleSystem& sys)
{
    if (sys.ctx.d() != 3)
        throw UnsupportedDimension("weighted_l2 is defined for d = 3");
    double acc = 0.0;
    for (const auto& p : sys.particles) {
        if (p.xi == 0.0)
            continue;
        if (p.current.z == 0.0)
            throw SymmetryViolation("weighted_l2: vorticity-carrying particle on z = 0");
        if (p.current.z < 0.0)
            continue;
        const double omega = p.xi * p.current.r;
        acc += p.weight * omega * omega / (p.current.z * p.current.r * p.current.r);
    }
    return std::sqrt(2.0 * sys.ctx.sphere_area() * acc);
}

struct ParticleLpNorms {
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
};

inline ParticleLpNorms particle_lp_norms(const ParticleSystem& sys)
{
    ParticleLpNorms out;
    double a1 = 0.0, a2 = 0.0;
    for (const auto& p : sys.particles) {
        if (p.xi == 0.0)
            continue;
        const double w = std::abs(p.xi * sys.ctx.radial_power(p.current.r));
        a1 += w * p.weight;
        a2 += w * w * p.weight;
        out.linf = std::max(out.linf, w);
    }
    out.l1 = sys.ctx.sphere_area() * a1;
    out.l2 = std::sqrt(sys.ctx.sphere_area() * a2);
    return out;
}

// ---------------------------------------------------------------------------
// One-dimensional Hardy inequality
// ---------------------------------------------------------------------------

struct HardyCheck {
    double lhs = 0.0; ///< ||x^{-1} f||_{L^p(0,1)}
    double rhs = 0.0; ///< ||f'||_{L^p(0,1)}

    double ratio() const { return rhs > 0.0 ? lhs / rhs : 0.0; }
};

/// Both sides of Hardy's inequality on (0, 1) from samples f(x_k) at strictly
/// increasing nodes with x_0 = 0, f(x_0) = 0, x_last = 1. Nodes may be graded
/// towards 0. The first cell uses the value at x_1 for both integrands;
/// derivatives are the three-point non-uniform formulas.
inline HardyCheck hardy_check(std::span<const double> x, std::span<const double> f, double p)
{
    if (!(p > 1.0))
        throw UsageError("hardy_check: p must be > 1");
    if (x.size() != f.size() || x.size() < 3)
        throw UsageError("hardy_check: need >= 3 matching samples");
    if (x.front() != 0.0 || f.front() != 0.0)
        throw UsageError("hardy_check: samples must start at x = 0 with f(0) = 0");
    const std::size_t n = x.size();
    for (std::size_t k = 1; k < n; ++k)
        if (!(x[k] > x[k - 1]))
            throw UsageError("hardy_check: nodes must increase");

    std::vector<double> df(n);
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double h0 = x[k] - x[k - 1], h1 = x[k + 1] - x[k];
        df[k] = (-h1 / (h0 * (h0 + h1))) * f[k - 1] + ((h1 - h0) / (h0 * h1)) * f[k] + (h0 / (h1 * (h0 + h1))) * f[k + 1];
    }
    {
        const double h0 = x[n - 1] - x[n - 2], h1 = x[n - 2] - x[n - 3];
        df[n - 1] = ((2 * h0 + h1) / (h0 * (h0 + h1))) * f[n - 1] - ((h0 + h1) / (h0 * h1)) * f[n - 2] +
                    (h0 / (h1 * (h0 + h1))) * f[n - 3];
    }

    double lhs = std::pow(std::abs(f[1] / x[1]), p) * x[1];
    double rhs = std::pow(std::abs(df[1]), p) * x[1];
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double h = x[k + 1] - x[k];
        lhs += 0.5 * h * (std::pow(std::abs(f[k] / x[k]), p) + std::pow(std::abs(f[k + 1] / x[k + 1]), p));
        rhs += 0.5 * h * (std::pow(std::abs(df[k]), p) + std::pow(std::abs(df[k + 1]), p));
    }
    return {std::pow(lhs, 1.0 / p), std::pow(rhs, 1.0 / p)};
}

// ---------------------------------------------------------------------------
// Lower-bound functional
// ---------------------------------------------------------------------------

/// sum_n (inf Phi^r/r)^{2(d-2)} (inf x_d/Phi^d)^d n^{-2 alpha} over the listed bubbles.
inline double lower_bound_functional(std::span<const int> bubbles, std::span<const double> r_ratio_inf,
                                     std::span<const double> z_ratio_inf, double alpha, int d)
{
    if (bubbles.size() != r_ratio_inf.size() || bubbles.size() != z_ratio_inf.size())
        throw UsageError("lower_bound_functional: per-bubble arrays differ in length");
    double acc = 0.0;
    for (std::size_t k = 0; k < bubbles.size(); ++k)
        acc += std::pow(r_ratio_inf[k], 2.0 * (d - 2)) * std::pow(z_ratio_inf[k], d) *
               std::pow(static_cast<double>(bubbles[k]), -2.0 * alpha);
    return acc;
}

} // namespace eulerlab
