// Run configuration for the command-line front end: JSON loading, flag
// overrides and validation into problem specs.
#ifndef COVBOUND_TOOLS_RUN_CONFIG_HPP
#define COVBOUND_TOOLS_RUN_CONFIG_HPP

#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "covbound/covbound.hpp"

namespace covbound::cli
{

using nlohmann::json;

/// Raised for anything the user got wrong; maps to exit code 2.
struct ConfigError : std::runtime_error
{
    ConfigError(std::string code, const std::string& what) : std::runtime_error(what), code(std::move(code))
    {
    }
    std::string code;
};

struct RunConfig
{
    std::vector<Interval> band;
    int n = 0;
    double sigma2 = 1.0;
    std::optional<double> tau;
    std::optional<std::pair<double, double>> tau_range;
    std::size_t points = 141;
    double step = default_grid_step;
    std::size_t phases = 360;
    double tol = 1e-8;
    std::size_t max_iter = 200;
    bool exact = false;
    std::string format = "json";
    std::string output;
    std::size_t jobs = 0; // 0: all available processors
};

inline Interval parse_interval(const std::string& text)
{
    const auto colon = text.find(':');
    if (colon == std::string::npos)
    {
        throw ConfigError("MalformedInterval", "interval '" + text + "' must have the form lo:hi");
    }
    try
    {
        std::size_t used_lo = 0;
        std::size_t used_hi = 0;
        const std::string lo = text.substr(0, colon);
        const std::string hi = text.substr(colon + 1);
        Interval iv{std::stod(lo, &used_lo), std::stod(hi, &used_hi)};
        if (used_lo != lo.size() || used_hi != hi.size())
        {
            throw std::invalid_argument("trailing characters");
        }
        return iv;
    }
    catch (const std::logic_error&)
    {
        throw ConfigError("MalformedInterval", "interval '" + text + "' has non-numeric endpoints");
    }
}

inline std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline RunConfig load_config(const json& j)
{
    RunConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key))
        {
            j.at(key).get_to(field);
        }
    };
    try
    {
        if (!j.is_object())
        {
            throw ConfigError("InvalidConfig", "config file must hold a JSON object");
        }
        if (j.contains("band"))
        {
            for (const auto& iv : j.at("band"))
            {
                if (iv.is_string())
                {
                    c.band.push_back(parse_interval(iv.get<std::string>()));
                }
                else
                {
                    c.band.push_back(Interval{iv.at(0).get<double>(), iv.at(1).get<double>()});
                }
            }
        }
        get("n", c.n);
        get("sigma2", c.sigma2);
        if (j.contains("tau") && !j.at("tau").is_null())
        {
            c.tau = j.at("tau").get<double>();
        }
        if (j.contains("tau_range") && !j.at("tau_range").is_null())
        {
            const auto& r = j.at("tau_range");
            c.tau_range = std::make_pair(r.at(0).get<double>(), r.at(1).get<double>());
        }
        get("points", c.points);
        get("step", c.step);
        get("phases", c.phases);
        get("tol", c.tol);
        get("max_iter", c.max_iter);
        get("exact", c.exact);
        get("format", c.format);
        get("output", c.output);
        get("jobs", c.jobs);
    }
    catch (const json::exception& e)
    {
        throw ConfigError("InvalidConfig", std::string("config file: ") + e.what());
    }
    return c;
}

/// The config as it was resolved, embedded in every output.
inline json to_json(const RunConfig& c)
{
    json j;
    j["band"] = json::array();
    for (const auto& iv : c.band)
    {
        j["band"].push_back({iv.lo, iv.hi});
    }
    j["n"] = c.n;
    j["sigma2"] = c.sigma2;
    j["tau"] = c.tau ? json(*c.tau) : json(nullptr);
    j["tau_range"] = c.tau_range ? json{c.tau_range->first, c.tau_range->second} : json(nullptr);
    j["points"] = c.points;
    j["step"] = c.step;
    j["phases"] = c.phases;
    j["tol"] = c.tol;
    j["max_iter"] = c.max_iter;
    j["exact"] = c.exact;
    j["format"] = c.format;
    j["jobs"] = c.jobs;
    return j;
}

inline FrequencyBand resolve_band(const RunConfig& c)
{
    if (c.band.empty())
    {
        throw ConfigError("EmptyBand", "at least one --band lo:hi is required");
    }
    return make_band(c.band);
}

inline void check_common(const RunConfig& c)
{
    if (c.format != "json" && c.format != "csv")
    {
        throw ConfigError("InvalidConfig", "format must be json or csv");
    }
    if (!(c.tol > 0.0) || c.max_iter == 0)
    {
        throw ConfigError("InvalidConfig", "tol must be positive and max_iter at least 1");
    }
    if (c.phases == 0)
    {
        throw ConfigError("InvalidConfig", "phases must be at least 1");
    }
}

/// Spec for single-lag commands; validates the grid step as well.
inline ProblemSpec single_spec(const RunConfig& c)
{
    check_common(c);
    if (!c.tau)
    {
        throw ConfigError("InvalidSpec", "--tau is required");
    }
    if (c.format != "json")
    {
        throw ConfigError("InvalidConfig", "only sweep supports csv output");
    }
    ProblemSpec spec{resolve_band(c), c.n, *c.tau, c.sigma2};
    spec.validate();
    discretize(spec.band, c.step);
    return spec;
}

inline SolverConfig solver_of(const RunConfig& c)
{
    return SolverConfig{c.tol, static_cast<int>(c.max_iter)};
}

inline AnalysisConfig analysis_of(const RunConfig& c)
{
    AnalysisConfig a;
    a.grid_step = c.step;
    a.bound.solver = solver_of(c);
    a.exact.solver = solver_of(c);
    a.exact.num_phases = c.phases;
    a.exact.jobs = c.jobs;
    a.jobs = c.jobs;
    return a;
}

} // namespace covbound::cli

#endif /* COVBOUND_TOOLS_RUN_CONFIG_HPP */
