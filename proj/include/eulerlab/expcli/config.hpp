#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eulerlab/biotsavart.hpp"
#include "eulerlab/errors.hpp"
#include "eulerlab/initdata.hpp"

namespace eulerlab::expcli {

enum class Scenario { linf_inflation, sobolev_inflation, key_lemma, norms_baseline, convergence };

inline const std::vector<std::pair<std::string, Scenario>>& scenario_names()
{
    static const std::vector<std::pair<std::string, Scenario>> names{
        {"linf-inflation", Scenario::linf_inflation},
        {"sobolev-inflation", Scenario::sobolev_inflation},
        {"key-lemma", Scenario::key_lemma},
        {"norms-baseline", Scenario::norms_baseline},
        {"convergence", Scenario::convergence},
    };
    return names;
}

inline Scenario parse_scenario(const std::string& s)
{
    for (const auto& [name, sc] : scenario_names())
        if (name == s)
            return sc;
    throw ConfigError("unknown scenario '" + s + "'");
}

inline std::string to_string(Scenario sc)
{
    for (const auto& [name, s] : scenario_names())
        if (s == sc)
            return name;
    return "?";
}

// ---------------------------------------------------------------------------
// Flat key = value files (a TOML subset: numbers, booleans, quoted strings,
// one-line arrays of numbers, # comments)
// ---------------------------------------------------------------------------

class KeyValueFile {
public:
    static KeyValueFile parse(const std::string& text, const std::string& origin = "<config>")
    {
        KeyValueFile kv;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string body = trim(strip_comment(line));
            if (body.empty())
                continue;
            if (body.front() == '[' && body.back() == ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": tables are not supported");
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(body.substr(0, eq));
            const std::string val = trim(body.substr(eq + 1));
            if (key.empty() || val.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
            if (kv.values_.count(key))
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
            kv.values_[key] = val;
        }
        return kv;
    }

    static KeyValueFile load(const std::string& path)
    {
        std::ifstream f(path);
        if (!f)
            throw ConfigError("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    double number(const std::string& key) const { return to_number(key, raw(key)); }

    int integer(const std::string& key) const
    {
        const double v = number(key);
        if (v != std::floor(v) || std::abs(v) > 1e9)
            throw ConfigError("config key '" + key + "' must be an integer");
        return static_cast<int>(v);
    }

    bool boolean(const std::string& key) const
    {
        const std::string& v = raw(key);
        if (v == "true")
            return true;
        if (v == "false")
            return false;
        throw ConfigError("config key '" + key + "' must be true or false");
    }

    std::string string(const std::string& key) const
    {
        const std::string& v = raw(key);
        if (v.size() < 2 || v.front() != '"' || v.back() != '"')
            throw ConfigError("config key '" + key + "' must be a quoted string");
        return v.substr(1, v.size() - 2);
    }

    std::vector<double> numbers(const std::string& key) const
    {
        const std::string& v = raw(key);
        if (v.size() < 2 || v.front() != '[' || v.back() != ']')
            throw ConfigError("config key '" + key + "' must be an array");
        std::vector<double> out;
        std::stringstream ss(v.substr(1, v.size() - 2));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty())
                out.push_back(to_number(key, item));
        }
        return out;
    }

    std::vector<std::string> keys() const
    {
        std::vector<std::string> k;
        for (const auto& [key, _] : values_)
            k.push_back(key);
        return k;
    }

private:
    std::map<std::string, std::string> values_;

    const std::string& raw(const std::string& key) const
    {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw ConfigError("missing required config key '" + key + "'");
        return it->second;
    }

    static double to_number(const std::string& key, const std::string& v)
    {
        if (v == "inf" || v == "+inf")
            return std::numeric_limits<double>::infinity();
        std::string s = v;
        s.erase(std::remove(s.begin(), s.end(), '_'), s.end());
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(s, &used);
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
        }
        if (used != s.size())
            throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
        return x;
    }

    static std::string strip_comment(const std::string& line)
    {
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"')
                quoted = !quoted;
            else if (line[i] == '#' && !quoted)
                return line.substr(0, i);
        }
        return line;
    }

    static std::string trim(const std::string& s)
    {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
            ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
            --b;
        return s.substr(a, b - a);
    }
};

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    Scenario scenario = Scenario::linf_inflation;
    BubbleParams bubble;
    int d = 3;
    int resolution = 16;
    KernelConfig kernel;
    double t_end = 0.0;
    std::optional<double> dt;       ///< unset: default step rule
    std::optional<double> c1;       ///< when set, horizons follow T(m)
    std::size_t cadence = 10;
    std::size_t grid = 128;         ///< cells across a bubble box (r direction) for grid norms
    std::size_t keylemma_grid = 512;
    int keylemma_targets = 50;
    std::uint64_t seed = 0;
    std::vector<int> m_sweep;       ///< linf-inflation: m values for the growth fit
    std::vector<int> n0_sweep;      ///< norms-baseline: n0 values for the tail fit
    std::vector<double> q_list{1.0, 2.0, 3.0, std::numeric_limits<double>::infinity()};
    int levels = 2;                 ///< convergence: refinement levels
    double flip_t_end = 0.0;        ///< linf-inflation: horizon of the omega -> -omega control, 0 = off
    std::string output_dir = "out";

    void validate() const
    {
        bubble.validate();
        kernel.validate();
        if (d < 3)
            throw ConfigError("d must be >= 3");
        if (resolution < 8)
            throw ConfigError("resolution must be >= 8");
        if (!(t_end >= 0.0))
            throw ConfigError("t_end must be >= 0");
        if (dt && !(*dt > 0.0))
            throw ConfigError("dt must be > 0");
        if (c1 && !(*c1 > 0.0))
            throw ConfigError("c1 must be > 0");
        if (cadence == 0)
            throw ConfigError("cadence must be >= 1");
        if (grid < 16 || keylemma_grid < 16)
            throw ConfigError("grid sizes must be >= 16");
        if (keylemma_targets < 1)
            throw ConfigError("keylemma_targets must be >= 1");
        if (!(flip_t_end >= 0.0))
            throw ConfigError("flip_t_end must be >= 0");
        if (levels < 2)
            throw ConfigError("levels must be >= 2");
        for (int m : m_sweep)
            if (m < bubble.n0)
                throw ConfigError("m_sweep entries must be >= n0");
        for (int n0 : n0_sweep)
            if (n0 < 1 || n0 > bubble.m)
                throw ConfigError("n0_sweep entries must lie in [1, m]");
        for (double q : q_list)
            if (!(q >= 1.0))
                throw ConfigError("q_list entries must be >= 1");
        if (scenario == Scenario::sobolev_inflation && !(bubble.alpha > 0.5 && bubble.alpha < 0.75))
            throw ConfigError("sobolev-inflation needs 1/2 < alpha < 3/4");
    }

    /// Horizon for a run with last bubble m: T(m) when c1 is set, else t_end.
    double horizon(int m) const
    {
        if (!c1)
            return t_end;
        const double a = bubble.alpha;
        const double mm = scenario == Scenario::sobolev_inflation ? 0.5 * m : static_cast<double>(m);
        return *c1 * (1.0 - a) * std::pow(mm, 0.5 * (-1.0 + a));
    }

    static ExperimentConfig from(const KeyValueFile& kv, Scenario scenario)
    {
        static const std::vector<std::string> known{
            "scenario", "n0", "m", "alpha", "d", "resolution", "t_end", "seed", "dt", "c1", "cadence",
            "grid", "keylemma_grid", "keylemma_targets", "n_theta", "rule", "delta_reg", "blob_ratio",
            "m_sweep", "n0_sweep", "q_list", "levels", "output_dir", "threads", "flip_t_end"};
        for (const auto& k : kv.keys())
            if (std::find(known.begin(), known.end(), k) == known.end())
                throw ConfigError("unknown config key '" + k + "'");
        if (kv.has("scenario") && parse_scenario(kv.string("scenario")) != scenario)
            throw ConfigError("config scenario '" + kv.string("scenario") + "' does not match the command line");

        ExperimentConfig c;
        c.scenario = scenario;
        c.bubble.n0 = kv.integer("n0");
        c.bubble.m = kv.integer("m");
        c.bubble.alpha = kv.has("alpha") ? kv.number("alpha") : (scenario == Scenario::linf_inflation ? 0.2 : 0.6);
        c.resolution = kv.integer("resolution");
        c.t_end = kv.number("t_end");
        const double seed = kv.number("seed");
        if (seed < 0.0 || seed != std::floor(seed))
            throw ConfigError("seed must be a non-negative integer");
        c.seed = static_cast<std::uint64_t>(seed);
        if (kv.has("d"))
            c.d = kv.integer("d");
        if (kv.has("dt"))
            c.dt = kv.number("dt");
        if (kv.has("c1"))
            c.c1 = kv.number("c1");
        if (kv.has("cadence")) {
            const int cad = kv.integer("cadence");
            if (cad < 1)
                throw ConfigError("cadence must be >= 1");
            c.cadence = static_cast<std::size_t>(cad);
        }
        auto count = [&](const char* key, std::size_t& dst) {
            if (!kv.has(key))
                return;
            const int v = kv.integer(key);
            if (v < 16)
                throw ConfigError(std::string(key) + " must be >= 16");
            dst = static_cast<std::size_t>(v);
        };
        count("grid", c.grid);
        count("keylemma_grid", c.keylemma_grid);
        if (kv.has("keylemma_targets"))
            c.keylemma_targets = kv.integer("keylemma_targets");
        if (kv.has("n_theta"))
            c.kernel.n_theta = kv.integer("n_theta");
        c.kernel.rule = AzimuthalRule::elliptic;
        if (kv.has("rule")) {
            const auto r = kv.string("rule");
            if (r == "trapezoid")
                c.kernel.rule = AzimuthalRule::trapezoid;
            else if (r != "elliptic")
                throw ConfigError("rule must be \"trapezoid\" or \"elliptic\"");
        }
        c.kernel.blob_ratio = 1.0;
        if (kv.has("blob_ratio"))
            c.kernel.blob_ratio = kv.number("blob_ratio");
        if (kv.has("delta_reg"))
            c.kernel.delta_reg = kv.number("delta_reg");
        if (kv.has("threads"))
            c.kernel.threads = kv.integer("threads");
        auto ints = [&](const char* key) {
            std::vector<int> out;
            for (double v : kv.numbers(key)) {
                if (v != std::floor(v))
                    throw ConfigError(std::string(key) + " entries must be integers");
                out.push_back(static_cast<int>(v));
            }
            return out;
        };
        if (kv.has("m_sweep"))
            c.m_sweep = ints("m_sweep");
        if (kv.has("n0_sweep"))
            c.n0_sweep = ints("n0_sweep");
        if (kv.has("q_list"))
            c.q_list = kv.numbers("q_list");
        if (kv.has("levels"))
            c.levels = kv.integer("levels");
        if (kv.has("flip_t_end"))
            c.flip_t_end = kv.number("flip_t_end");
        if (kv.has("output_dir"))
            c.output_dir = kv.string("output_dir");
        c.validate();
        return c;
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["scenario"] = to_string(scenario);
        j["n0"] = bubble.n0;
        j["m"] = bubble.m;
        j["alpha"] = bubble.alpha;
        j["d"] = d;
        j["resolution"] = resolution;
        j["t_end"] = t_end;
        j["seed"] = seed;
        j["dt"] = dt ? nlohmann::json(*dt) : nlohmann::json(nullptr);
        j["c1"] = c1 ? nlohmann::json(*c1) : nlohmann::json(nullptr);
        j["cadence"] = cadence;
        j["grid"] = grid;
        j["keylemma_grid"] = keylemma_grid;
        j["keylemma_targets"] = keylemma_targets;
        j["n_theta"] = kernel.n_theta;
        j["rule"] = kernel.rule == AzimuthalRule::elliptic ? "elliptic" : "trapezoid";
        j["blob_ratio"] = kernel.blob_ratio;
        j["delta_reg"] = kernel.delta_reg ? nlohmann::json(*kernel.delta_reg) : nlohmann::json(nullptr);
        j["m_sweep"] = m_sweep;
        j["n0_sweep"] = n0_sweep;
        nlohmann::json q = nlohmann::json::array();
        for (double v : q_list)
            q.push_back(std::isinf(v) ? nlohmann::json("inf") : nlohmann::json(v));
        j["q_list"] = q;
        j["levels"] = levels;
        j["flip_t_end"] = flip_t_end;
        j["output_dir"] = output_dir;
        return j;
    }
};

} // namespace eulerlab::expcli
