#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eulerlab/biotsavart.hpp"
#include "eulerlab/expcli/config.hpp"
#include "eulerlab/expcli/report.hpp"
#include "eulerlab/initdata.hpp"
#include "eulerlab/keylemma.hpp"
#include "eulerlab/norms.hpp"
#include "eulerlab/snapshot.hpp"
#include "eulerlab/transport.hpp"

namespace eulerlab::expcli {

namespace fs = std::filesystem;

namespace detail {

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline ParticleSystem seed(const ExperimentConfig& cfg, int n0, int m)
{
    BubbleParams p = cfg.bubble;
    p.n0 = n0;
    p.m = m;
    return seed_particles(p, cfg.resolution, DimensionContext(cfg.d));
}

inline EvolveConfig evolve_config(const ExperimentConfig& cfg, double horizon)
{
    EvolveConfig ec;
    ec.t_end = horizon;
    ec.dt = cfg.dt.value_or(0.0);
    ec.cadence = cfg.cadence;
    ec.kernel = cfg.kernel;
    return ec;
}

inline GridOptions grid_options(const ExperimentConfig& cfg, bool full)
{
    GridOptions g;
    g.cells = cfg.grid;
    g.full = full;
    g.threads = cfg.kernel.threads;
    return g;
}

/// Uniform double in [0, 1) from the top 53 bits; independent of the standard
/// library's distribution implementation.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline nlohmann::json frame_checks(const std::vector<DiagnosticsFrame>& frames)
{
    double xi_drift = 0.0, margin = std::numeric_limits<double>::infinity();
    bool region = true, ordering = true;
    std::size_t linf_drops = 0;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        xi_drift = std::max(xi_drift, frames[k].xi_drift);
        margin = std::min(margin, frames[k].region_margin);
        region = region && frames[k].region_ok;
        ordering = ordering && frames[k].ordering_ok;
        if (k > 0 && !(frames[k].linf_omega > frames[k - 1].linf_omega))
            ++linf_drops;
    }
    const auto& a = frames.front();
    const auto& b = frames.back();
    nlohmann::json j;
    j["xi_drift_max"] = num(xi_drift);
    j["region_ok_all_frames"] = region;
    j["region_margin_min"] = num(margin);
    j["ordering_ok_all_frames"] = ordering;
    j["lorentz_31_drift"] = num(a.lorentz_31 > 0 ? std::abs(b.lorentz_31 / a.lorentz_31 - 1.0) : 0.0);
    j["linf_ratio"] = num(a.linf_omega > 0 ? b.linf_omega / a.linf_omega : 0.0);
    j["linf_non_increasing_steps"] = linf_drops;
    j["linf_strictly_increasing"] = linf_drops == 0 && frames.size() > 1;
    j["innermost_r_sup_final"] = num(b.r_ratio_sup.empty() ? 0.0 : b.r_ratio_sup.back());
    j["weighted_l2_ratio"] = num(a.weighted_l2 > 0 ? b.weighted_l2 / a.weighted_l2 : 0.0);
    return j;
}

/// Least-squares slope in time of the innermost bubble's sqrt(inf * sup) of
/// Phi^r / r over frames with t <= t_max. The geometric mean cancels most of
/// the core rotation, which moves inf and sup in opposite directions.
inline double innermost_r_trend(const std::vector<DiagnosticsFrame>& frames, double t_max)
{
    std::vector<double> t, y;
    for (const auto& f : frames)
        if (f.time <= t_max * (1.0 + 1e-12)) {
            t.push_back(f.time);
            y.push_back(std::sqrt(f.r_ratio_inf.back() * f.r_ratio_sup.back()));
        }
    return fit_line(t, y).slope;
}

inline double functional_of(const DiagnosticsFrame& f, double alpha, int d)
{
    return lower_bound_functional(f.bubbles, f.r_ratio_inf, f.z_ratio_inf, alpha, d);
}

} // namespace detail

// ---------------------------------------------------------------------------

inline nlohmann::json run_linf_inflation(const ExperimentConfig& cfg, const fs::path& out)
{
    std::vector<int> ms = cfg.m_sweep;
    if (std::find(ms.begin(), ms.end(), cfg.bubble.m) == ms.end())
        ms.push_back(cfg.bubble.m);
    std::sort(ms.begin(), ms.end());

    nlohmann::json summary;
    CsvWriter sweep(out / "sweep.csv", {"m", "horizon", "steps", "innermost_r_sup", "linf_ratio", "c2"});
    std::vector<double> log_m, log_stretch;
    nlohmann::json norms = nlohmann::json::array();
    const GridOptions gopt = detail::grid_options(cfg, false);

    for (int m : ms) {
        auto sys = detail::seed(cfg, cfg.bubble.n0, m);
        const double horizon = cfg.horizon(m);
        const bool main = m == cfg.bubble.m;
        if (main)
            norms.push_back(to_json(norm_report(sys, cfg.q_list, gopt)));
        const auto frames = evolve(sys, detail::evolve_config(cfg, horizon));
        const auto& last = frames.back();
        const double stretch = last.r_ratio_sup.back();
        const auto c2 = fit_c2(frames);
        sweep.row({m, horizon, last.step, stretch, last.linf_omega / frames.front().linf_omega, c2.c2});
        if (m > 1) {
            log_m.push_back(std::log(static_cast<double>(m)));
            log_stretch.push_back(std::log(stretch));
        }
        if (!main)
            continue;

        write_frames(out / "frames.csv", frames);
        norms.push_back(to_json(norm_report(sys, cfg.q_list, gopt)));
        summary["checks"] = detail::frame_checks(frames);
        summary["c2_fit"] = {{"c2", num(c2.c2)}, {"n", c2.n}, {"sums", c2.s}};
        if (cfg.c1) {
            BubbleParams p = cfg.bubble;
            p.m = m;
            const auto ts = bubble_timescales(p, horizon, *cfg.c1);
            const auto ok = stability_check(frames, ts);
            summary["stability"] = {{"timescales", ts}, {"ok", std::vector<bool>(ok.begin(), ok.end())}};
        }
        summary["horizon"] = num(horizon);
        summary["final_time"] = num(last.time);

        if (cfg.flip_t_end > 0.0) {
            auto flipped = scaled(detail::seed(cfg, cfg.bubble.n0, m), -1.0);
            const auto ff = evolve(flipped, detail::evolve_config(cfg, cfg.flip_t_end));
            write_frames(out / "frames_flipped.csv", ff);
            const double window = std::min(cfg.flip_t_end, horizon);
            summary["control"] = {
                {"t_end", num(cfg.flip_t_end)},
                {"r_trend", num(detail::innermost_r_trend(frames, window))},
                {"flipped_r_trend", num(detail::innermost_r_trend(ff, window))},
                {"flipped_innermost_r_sup_final", num(ff.back().r_ratio_sup.back())},
                {"flipped_innermost_r_inf_final", num(ff.back().r_ratio_inf.back())},
                {"flipped_weighted_l2_ratio", num(ff.back().weighted_l2 / ff.front().weighted_l2)},
            };
        }
    }
    if (log_m.size() >= 2)
        summary["growth_exponent"] = num(fit_line(log_m, log_stretch).slope);
    else
        summary["growth_exponent"] = nullptr;
    write_json(out / "norms.json", norms);
    return summary;
}

// ---------------------------------------------------------------------------

inline nlohmann::json run_sobolev_inflation(const ExperimentConfig& cfg, const fs::path& out)
{
    auto sys = detail::seed(cfg, cfg.bubble.n0, cfg.bubble.m);
    const GridOptions gopt = detail::grid_options(cfg, false);
    const int d = sys.ctx.d();
    nlohmann::json norms = nlohmann::json::array();
    norms.push_back(to_json(norm_report(sys, cfg.q_list, detail::grid_options(cfg, true), &cfg.bubble)));

    std::vector<double> functional, lambda_d, weighted, times;
    const auto frames = evolve(sys, detail::evolve_config(cfg, cfg.horizon(cfg.bubble.m)),
                               [&](const DiagnosticsFrame& f, const ParticleSystem& s) {
                                   times.push_back(f.time);
                                   functional.push_back(detail::functional_of(f, cfg.bubble.alpha, d));
                                   weighted.push_back(f.weighted_l2);
                                   lambda_d.push_back(family_sobolev(s, gopt).vertical);
                               });
    norms.push_back(to_json(norm_report(sys, cfg.q_list, gopt)));
    write_frames(out / "frames.csv", frames);
    write_json(out / "norms.json", norms);

    const auto cum = integrated_In(frames);
    std::vector<std::string> header{"time", "functional", "weighted_l2", "lambda_d"};
    for (int n : frames.front().bubbles) {
        header.push_back("log_z_" + std::to_string(n));
        header.push_back("formal_log_z_" + std::to_string(n));
    }
    CsvWriter csv(out / "sobolev.csv", header);
    for (std::size_t k = 0; k < frames.size(); ++k) {
        std::vector<CsvWriter::Cell> row{times[k], functional[k], weighted[k], lambda_d[k]};
        double running = 0.0;
        for (std::size_t b = 0; b < frames[k].bubbles.size(); ++b) {
            row.emplace_back(-std::log(frames[k].z_ratio_inf[b]));
            row.emplace_back(-running / sys.ctx.ball_volume());
            running += cum[k][b];
        }
        csv.row(row);
    }

    // frame-over-frame increments
    std::vector<double> dF, dL;
    std::size_t agree = 0, co_occur = 0, rises = 0;
    for (std::size_t k = 1; k < frames.size(); ++k) {
        dF.push_back(functional[k] - functional[k - 1]);
        dL.push_back(lambda_d[k] - lambda_d[k - 1]);
        if ((dF.back() > 0) == (dL.back() > 0))
            ++agree;
        if (dF.back() > 0) {
            ++rises;
            bool r_up = false, z_up = false;
            for (std::size_t b = 0; b < frames[k].bubbles.size(); ++b) {
                r_up = r_up || frames[k].r_ratio_inf[b] > frames[k - 1].r_ratio_inf[b];
                z_up = z_up || frames[k].z_ratio_inf[b] > frames[k - 1].z_ratio_inf[b];
            }
            if (r_up || z_up)
                ++co_occur;
        }
    }
    nlohmann::json summary;
    summary["checks"] = detail::frame_checks(frames);
    summary["functional_initial"] = num(functional.front());
    summary["functional_sum_n_minus_2alpha"] = num([&] {
        double s = 0;
        for (int n = cfg.bubble.n0; n <= cfg.bubble.m; ++n)
            s += std::pow(static_cast<double>(n), -2.0 * cfg.bubble.alpha);
        return s;
    }());
    summary["functional_ratio"] = num(functional.back() / functional.front());
    summary["weighted_l2_ratio"] = num(weighted.back() / weighted.front());
    summary["lambda_d_ratio"] = num(lambda_d.back() / lambda_d.front());
    summary["trend_pearson"] = num(pearson(times, functional) * pearson(times, lambda_d) > 0 ? 1.0 : -1.0);
    summary["increment_pearson"] = num(pearson(dF, dL));
    summary["increment_sign_agreement"] = num(dF.empty() ? 0.0 : static_cast<double>(agree) / dF.size());
    summary["functional_rise_with_ratio_rise"] = num(rises ? static_cast<double>(co_occur) / rises : 1.0);
    nlohmann::json zpos = nlohmann::json::array();
    for (const auto& zs : z_position_observable(frames, sys.ctx))
        zpos.push_back({{"n", zs.n}, {"log_z", num(zs.log_z)}, {"formal", num(zs.predicted)}, {"ratio", num(zs.ratio())}});
    summary["z_position"] = zpos;
    summary["final_time"] = num(frames.back().time);
    return summary;
}

// ---------------------------------------------------------------------------

/// Global norms for the remainder bounds from the exact data on per-bubble grids.
inline RemainderNorms initial_remainder_norms(const BubbleParams& params, int d, std::size_t cells)
{
    RemainderNorms nrm;
    double acc = 0.0;
    for (int n = params.n0; n <= params.m; ++n) {
        const double g = grad_ld_norm(sample_bubble(params, n, cells), d);
        acc += std::pow(g, d);
    }
    nrm.grad_ld = std::pow(acc, 1.0 / d);
    nrm.linf = std::pow(static_cast<double>(params.n0), -params.alpha);
    return nrm;
}

/// Wedge targets: r log-uniform over the bubble radii, x_d / r uniform in (0.05, 1].
inline std::vector<HalfPlanePoint> wedge_targets(const BubbleParams& params, int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const double lo = std::log(pow8(-params.m) * 0.5);
    const double hi = std::log(pow8(1 - params.n0) * 1.5);
    std::vector<HalfPlanePoint> t;
    for (int k = 0; k < count; ++k) {
        const double r = std::exp(lo + (hi - lo) * detail::unit(rng));
        const double s = 0.05 + 0.95 * (1.0 - detail::unit(rng));
        t.push_back({r, s * r});
    }
    return t;
}

inline nlohmann::json run_key_lemma(const ExperimentConfig& cfg, const fs::path& out)
{
    const auto targets = wedge_targets(cfg.bubble, cfg.keylemma_targets, cfg.seed);
    CsvWriter csv(out / "keylemma.csv", {"level", "resolution", "grid", "r", "x_d", "main_term", "ur_over_r",
                                         "ud_over_xd", "b1", "b2", "ratio_r", "ratio_d"});
    nlohmann::json levels = nlohmann::json::array();
    std::vector<double> max_r, max_d;
    nlohmann::json norms = nlohmann::json::array();
    for (int level = 0; level < 2; ++level) {
        const int res = cfg.resolution << level;
        const std::size_t cells = cfg.keylemma_grid << level;
        const auto sys = seed_particles(cfg.bubble, res, DimensionContext(cfg.d));
        const auto nrm = initial_remainder_norms(cfg.bubble, cfg.d, cells);
        const auto sm = verify_key_lemma(sys, targets, nrm, cfg.kernel);
        for (const auto& r : sm.reports)
            csv.row({level, res, cells, r.target.r, r.target.z, r.main_term, r.ur_over_r, r.ud_over_xd, r.b1, r.b2,
                     r.ratio_r, r.ratio_d});
        max_r.push_back(sm.max_ratio_r);
        max_d.push_back(sm.max_ratio_d);
        levels.push_back({{"resolution", res}, {"grid", cells}, {"grad_ld", num(nrm.grad_ld)},
                          {"linf", num(nrm.linf)}, {"max_ratio_r", num(sm.max_ratio_r)},
                          {"max_ratio_d", num(sm.max_ratio_d)}, {"degenerate", sm.degenerate}});
        if (level == 0)
            norms.push_back(to_json(norm_report(sys, cfg.q_list, detail::grid_options(cfg, false))));
    }
    write_json(out / "norms.json", norms);

    KernelConfig kc = cfg.kernel;
    kc.n_theta = std::max(kc.n_theta, 512);
    const auto sys = seed_particles(cfg.bubble, cfg.resolution, DimensionContext(cfg.d));
    const double h = pow8(-cfg.bubble.m - 2);
    const auto lim = origin_limit_identities(sys, h, kc);
    const int d = cfg.d;
    const double bd = sys.ctx.ball_volume();
    nlohmann::json summary;
    summary["levels"] = levels;
    auto rel = [](double a, double b) { return b != 0.0 ? std::abs(a / b - 1.0) : 0.0; };
    summary["ratio_r_change"] = num(rel(max_r[1], max_r[0]));
    summary["ratio_d_change"] = num(rel(max_d[1], max_d[0]));
    summary["origin"] = {
        {"h", num(h)},
        {"dr_ur", num(lim.dr_ur)},
        {"dd_ud", num(lim.dd_ud)},
        {"main_term", num(lim.m_full)},
        {"identity_r", num(lim.m_full != 0 ? lim.dr_ur * (d - 1) * bd / lim.m_full : 0.0)},
        {"identity_d", num(lim.m_full != 0 ? -lim.dd_ud * bd / lim.m_full : 0.0)},
        {"dd_over_dr", num(lim.dr_ur != 0 ? lim.dd_ud / lim.dr_ur : 0.0)},
    };
    return summary;
}

// ---------------------------------------------------------------------------

/// Sum_{n > M} n^{-s} by Euler-Maclaurin (s > 1).
inline double zeta_tail(double s, int M)
{
    const double x = M + 0.5;
    // midpoint form: sum_{n>M} f(n) ~ int_{M+1/2}^inf f - f'(M+1/2)/24
    return std::pow(x, 1.0 - s) / (s - 1.0) - s * std::pow(x, -s - 1.0) / 24.0;
}

inline nlohmann::json run_norms_baseline(const ExperimentConfig& cfg, const fs::path& out)
{
    std::vector<int> n0s = cfg.n0_sweep;
    if (n0s.empty())
        for (int n = 1; n <= std::min(6, cfg.bubble.m); ++n)
            n0s.push_back(n);
    const int first = *std::min_element(n0s.begin(), n0s.end());
    const int M = cfg.bubble.m;
    const double a = cfg.bubble.alpha;
    const DimensionContext ctx(cfg.d);

    // per-bubble quantities
    std::vector<double> lam_d2(M + 1), lam_h2(M + 1), full2(M + 1), in0(M + 1);
    std::vector<std::vector<double>> lor_q(M + 1);
    SobolevOptions so;
    so.d = cfg.d;
    so.threads = cfg.kernel.threads;
    CsvWriter bcsv(out / "bubbles.csv", [&] {
        std::vector<std::string> h{"n", "lambda_d_sq", "lambda_h_sq", "lambda_sq", "In0"};
        for (double q : cfg.q_list)
            h.push_back("lorentz_pow_q_" + format_number(q));
        return h;
    }());
    for (int n = first; n <= M; ++n) {
        BubbleParams one = cfg.bubble;
        one.n0 = one.m = n;
        // the full norm is scale invariant; computing it for the first two bubbles is enough to show it
        so.horizontal = n < first + 2;
        const auto s = sobolev_norms(sample_bubble(one, n, cfg.grid), so);
        lam_d2[n] = s.vertical * s.vertical;
        lam_h2[n] = s.horizontal * s.horizontal;
        full2[n] = s.full * s.full;
        const auto sys = seed_particles(one, cfg.resolution, ctx);
        in0[n] = compute_In(sys, n);
        std::vector<CsvWriter::Cell> row{n, lam_d2[n], lam_h2[n], full2[n], in0[n]};
        for (double q : cfg.q_list) {
            const double v = particle_lorentz_norm(sys, q);
            lor_q[n].push_back(std::isinf(q) ? v : std::pow(v, q));
            row.emplace_back(lor_q[n].back());
        }
        bcsv.row(row);
    }

    // tail beyond M from the scale invariance of the last bubble
    const double c_tail = lam_d2[M] * std::pow(static_cast<double>(M), 2.0 * a);
    const double tail = 2.0 * a > 1.0 ? c_tail * zeta_tail(2.0 * a, M) : std::numeric_limits<double>::infinity();

    CsvWriter csv(out / "baseline.csv", [&] {
        std::vector<std::string> h{"n0", "linf", "lambda_d_sq_truncated", "lambda_d_sq"};
        for (double q : cfg.q_list)
            h.push_back("lorentz_q_" + format_number(q));
        return h;
    }());
    std::vector<double> lx, ly, lyt;
    nlohmann::json rows = nlohmann::json::array();
    for (int n0 : n0s) {
        BubbleParams p = cfg.bubble;
        p.n0 = n0;
        const auto sys = seed_particles(p, cfg.resolution, ctx);
        double trunc = 0.0;
        for (int n = n0; n <= M; ++n)
            trunc += lam_d2[n];
        const double total = trunc + tail;
        std::vector<CsvWriter::Cell> row{n0, particle_lp_norms(sys).linf, trunc, total};
        for (double q : cfg.q_list)
            row.emplace_back(particle_lorentz_norm(sys, q));
        csv.row(row);
        lx.push_back(std::log(static_cast<double>(n0)));
        ly.push_back(std::log(total));
        lyt.push_back(std::log(trunc));
        rows.push_back({{"n0", n0}, {"linf", num(particle_lp_norms(sys).linf)}, {"expected_linf", num(std::pow(n0, -a))},
                        {"lambda_d_sq", num(total)}});
    }

    // per-bubble exponents
    std::vector<double> bx, by_in;
    std::vector<std::vector<double>> by_q(cfg.q_list.size());
    for (int n = first; n <= M; ++n) {
        bx.push_back(std::log(static_cast<double>(n)));
        by_in.push_back(std::log(in0[n]));
        for (std::size_t k = 0; k < cfg.q_list.size(); ++k)
            by_q[k].push_back(std::log(lor_q[n][k]));
    }
    nlohmann::json lq = nlohmann::json::array();
    for (std::size_t k = 0; k < cfg.q_list.size(); ++k) {
        const double q = cfg.q_list[k];
        lq.push_back({{"q", num(q)},
                      {"exponent", num(fit_line(bx, by_q[k]).slope)},
                      {"expected", num(std::isinf(q) ? -a : -a * q)}});
    }
    // I_n(0) n^alpha should be one constant: largest relative deviation from the mean
    double cmean = 0.0, in0_dev = 0.0;
    for (int n = first; n <= M; ++n)
        cmean += in0[n] * std::pow(static_cast<double>(n), a) / (M - first + 1);
    for (int n = first; n <= M; ++n)
        in0_dev = std::max(in0_dev, std::abs(in0[n] * std::pow(static_cast<double>(n), a) / cmean - 1.0));

    NormReport rep = norm_report(seed_particles(cfg.bubble, cfg.resolution, ctx), cfg.q_list,
                                 detail::grid_options(cfg, false), nullptr);
    {
        double f2 = 0, h2 = 0, v2 = 0;
        for (int n = cfg.bubble.n0; n <= M; ++n) {
            v2 += lam_d2[n];
            // the full and horizontal norms share the scale invariance of the vertical one
            const double scale = std::pow(static_cast<double>(n) / first, -2.0 * a);
            h2 += lam_h2[first] * scale;
            f2 += full2[first] * scale;
        }
        rep.sobolev_dir_d = std::sqrt(v2);
        rep.sobolev_dir_h = std::sqrt(h2);
        rep.sobolev_half_d = std::sqrt(f2);
    }
    write_json(out / "norms.json", nlohmann::json::array({to_json(rep)}));

    nlohmann::json summary;
    summary["rows"] = rows;
    summary["lambda_d_tail"] = num(tail);
    summary["lambda_d_exponent"] = num(fit_line(lx, ly).slope);
    summary["lambda_d_exponent_truncated"] = num(fit_line(lx, lyt).slope);
    summary["lambda_d_expected"] = num(1.0 - 2.0 * a);
    summary["lorentz"] = lq;
    summary["In0_exponent"] = num(fit_line(bx, by_in).slope);
    summary["In0_max_deviation"] = num(in0_dev);
    summary["split_ratio"] = num(full2[first] / (lam_h2[first] + lam_d2[first]));
    return summary;
}

// ---------------------------------------------------------------------------

struct CurlLevel {
    int resolution = 0;
    std::size_t cells = 0;
    double error = 0.0;
    double divergence = 0.0;
};

/// Curl round trip for the single bubble n0 on a grid around its upper half.
inline CurlLevel curl_level(const ExperimentConfig& cfg, int resolution, std::size_t cells)
{
    BubbleParams one = cfg.bubble;
    one.m = one.n0;
    const DimensionContext ctx(cfg.d);
    const auto sys = seed_particles(one, resolution, ctx);
    const auto c = bubble_centre(one.n0);
    const double a = bubble_radius(one.n0) * 1.1;
    const auto rt = curl_roundtrip(sys, cell_centred_axis(c.r - a, c.r + a, cells),
                                   cell_centred_axis(c.z - a, c.z + a, cells), cfg.kernel, initial_density(one, ctx));
    return {resolution, cells, rt.error, rt.divergence};
}

inline double max_position_error(const ParticleSystem& a, const ParticleSystem& b)
{
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        e = std::max(e, std::hypot(a.particles[i].current.r - b.particles[i].current.r,
                                   a.particles[i].current.z - b.particles[i].current.z));
    return e;
}

inline nlohmann::json run_convergence(const ExperimentConfig& cfg, const fs::path& out)
{
    CsvWriter csv(out / "convergence.csv", {"study", "level", "parameter", "value", "ratio_to_previous"});
    nlohmann::json summary;

    // curl and divergence
    std::vector<CurlLevel> curl;
    for (int l = 0; l < cfg.levels; ++l) {
        curl.push_back(curl_level(cfg, cfg.resolution << l, cfg.grid << l));
        const auto& c = curl.back();
        const double re = l ? curl[l - 1].error / c.error : 0.0;
        const double rd = l ? curl[l - 1].divergence / c.divergence : 0.0;
        csv.row({"curl_error", l, static_cast<double>(c.resolution), c.error, re});
        csv.row({"divergence", l, static_cast<double>(c.cells), c.divergence, rd});
    }
    summary["curl_error"] = num(curl.front().error);
    summary["curl_ratio"] = num(curl[0].error / curl[1].error);
    summary["divergence"] = num(curl.front().divergence);
    summary["divergence_ratio"] = num(curl[0].divergence / curl[1].divergence);

    // RK4 self-convergence on the single bubble n0
    BubbleParams one = cfg.bubble;
    one.m = one.n0;
    const DimensionContext ctx(cfg.d);
    const auto base = seed_particles(one, std::max(8, cfg.resolution / 4), ctx);
    const double T = 8.0 * std::pow(static_cast<double>(one.n0), one.alpha);
    auto run = [&](int steps) {
        auto s = base;
        for (int k = 0; k < steps; ++k)
            step_rk4(s, T / steps, cfg.kernel);
        return s;
    };
    const auto ref = run(64);
    std::vector<double> errs;
    for (int steps : {8, 16, 32}) {
        errs.push_back(max_position_error(run(steps), ref));
        const double ratio = errs.size() > 1 ? errs[errs.size() - 2] / errs.back() : 0.0;
        csv.row({"rk4_position_error", static_cast<int>(errs.size() - 1), T / steps, errs.back(), ratio});
    }
    summary["rk4_ratios"] = {num(errs[0] / errs[1]), num(errs[1] / errs[2])};
    summary["rk4_order"] = num(std::log2(errs[1] / errs[2]));

    // time reversal: +dt, then +dt with omega -> -omega
    {
        auto s = base;
        step_rk4(s, 1e-3, cfg.kernel);
        auto back = scaled(s, -1.0);
        step_rk4(back, 1e-3, cfg.kernel);
        double e = 0.0, size = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            e = std::max(e, std::hypot(back.particles[i].current.r - base.particles[i].current.r,
                                       back.particles[i].current.z - base.particles[i].current.z));
            size = std::max(size, std::hypot(base.particles[i].current.r, base.particles[i].current.z));
        }
        csv.row({"time_reversal", 0, 1e-3, e / size, 0.0});
        summary["time_reversal_error"] = num(e / size);
    }

    // frozen-weight Lorentz norm over a short run
    {
        auto s = base;
        const double l0 = particle_lorentz_norm(s, 1.0);
        for (int k = 0; k < 10; ++k)
            step_rk4(s, T / 16, cfg.kernel);
        const double drift = std::abs(particle_lorentz_norm(s, 1.0) / l0 - 1.0);
        csv.row({"lorentz_31_drift", 0, 10.0, drift, 0.0});
        summary["lorentz_31_drift"] = num(drift);
    }
    return summary;
}

// ---------------------------------------------------------------------------

/// Runs the configured scenario, writes its files and summary.json into
/// `out` and returns the summary.
inline nlohmann::json run_scenario(const ExperimentConfig& cfg, const fs::path& out)
{
    fs::create_directories(out);
    detail::Stopwatch clock;
    nlohmann::json summary;
    switch (cfg.scenario) {
    case Scenario::linf_inflation:
        summary = run_linf_inflation(cfg, out);
        break;
    case Scenario::sobolev_inflation:
        summary = run_sobolev_inflation(cfg, out);
        break;
    case Scenario::key_lemma:
        summary = run_key_lemma(cfg, out);
        break;
    case Scenario::norms_baseline:
        summary = run_norms_baseline(cfg, out);
        break;
    case Scenario::convergence:
        summary = run_convergence(cfg, out);
        break;
    }
    summary["scenario"] = to_string(cfg.scenario);
    summary["version"] = version;
    summary["config"] = cfg.to_json();
    summary["wall_seconds"] = clock.seconds();
    write_json(out / "summary.json", summary);
    return summary;
}

} // namespace eulerlab::expcli
