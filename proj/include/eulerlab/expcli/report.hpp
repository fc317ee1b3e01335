#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eulerlab/errors.hpp"
#include "eulerlab/snapshot.hpp"
#include "eulerlab/transport.hpp"

namespace eulerlab::expcli {

inline constexpr const char* version = "0.1.0";

/// 17 significant digits, scientific notation.
inline std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path), columns_(header.size())
    {
        if (!out_)
            throw ConfigError("cannot write '" + path.string() + "'");
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }

    /// Numbers are written with format_number, strings verbatim.
    struct Cell {
        Cell(double v) : text(format_number(v)) {}
        Cell(int v) : text(std::to_string(v)) {}
        Cell(std::size_t v) : text(std::to_string(v)) {}
        Cell(bool v) : text(v ? "1" : "0") {}
        Cell(const char* s) : text(s) {}
        Cell(std::string s) : text(std::move(s)) {}
        std::string text;
    };

    void row(const std::vector<Cell>& cells)
    {
        if (cells.size() != columns_)
            throw UsageError("CsvWriter: row has " + std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(columns_));
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i].text;
        out_ << '\n';
    }

private:
    std::ofstream out_;
    std::size_t columns_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

/// JSON number, or a string for non-finite values.
inline nlohmann::json num(double v)
{
    if (std::isfinite(v))
        return v;
    return format_number(v);
}

inline nlohmann::json to_json(const NormReport& r)
{
    nlohmann::json j;
    j["time"] = num(r.time);
    j["l1"] = num(r.l1);
    j["l2"] = num(r.l2);
    j["linf"] = num(r.linf);
    j["sobolev_half_d"] = num(r.sobolev_half_d);
    j["sobolev_dir_h"] = num(r.sobolev_dir_h);
    j["sobolev_dir_d"] = num(r.sobolev_dir_d);
    nlohmann::json lz = nlohmann::json::array();
    for (std::size_t k = 0; k < r.q.size(); ++k)
        lz.push_back({{"q", num(r.q[k])}, {"value", num(r.lorentz[k])}});
    j["lorentz"] = lz;
    j["weighted"] = num(r.weighted);
    return j;
}

/// frames.csv: one row per frame with per-bubble column groups.
inline void write_frames(const std::filesystem::path& path, const std::vector<DiagnosticsFrame>& frames)
{
    std::vector<std::string> header{"time", "step"};
    const auto& bubbles = frames.front().bubbles;
    for (int n : bubbles)
        for (const char* c : {"In", "r_inf", "r_sup", "z_inf", "z_sup"})
            header.push_back(std::string(c) + "_" + std::to_string(n));
    for (const char* c : {"linf_omega", "lorentz_31", "weighted_l2", "xi_drift", "region_margin", "ordering_ok",
                          "region_ok"})
        header.emplace_back(c);
    CsvWriter csv(path, header);
    for (const auto& f : frames) {
        std::vector<CsvWriter::Cell> row{f.time, f.step};
        for (std::size_t k = 0; k < bubbles.size(); ++k) {
            row.emplace_back(f.In[k]);
            row.emplace_back(f.r_ratio_inf[k]);
            row.emplace_back(f.r_ratio_sup[k]);
            row.emplace_back(f.z_ratio_inf[k]);
            row.emplace_back(f.z_ratio_sup[k]);
        }
        row.emplace_back(f.linf_omega);
        row.emplace_back(f.lorentz_31);
        row.emplace_back(f.weighted_l2);
        row.emplace_back(f.xi_drift);
        row.emplace_back(f.region_margin);
        row.emplace_back(f.ordering_ok);
        row.emplace_back(f.region_ok);
        csv.row(row);
    }
}

/// Least-squares slope and intercept of y against x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n)
        return {};
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double b = sxx > 0 ? sxy / sxx : 0.0;
    return {b, my - b * mx};
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n)
        return 0.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return (sxx > 0 && syy > 0) ? sxy / std::sqrt(sxx * syy) : 0.0;
}

} // namespace eulerlab::expcli
