// covbound: bounds on covariance uncertainty from the command line.
//
//   covbound bound    --band -0.3:0.3 --n 3 --tau 1.5
//   covbound exact    --band -0.3:0.3 --n 3 --tau 1.5 --phases 360
//   covbound gap      --band -0.3:-0.1 --band 0.05:0.3 --n 3 --tau 7
//   covbound sweep    --band -0.3:0.3 --n 3 --tau-range 0:7 --points 141 --exact --format csv
//   covbound diagnose --band -0.3:0.3 --n 5 --tau 4.7
//   covbound refine   --band -0.3:0.3 --n 3 --tau 4.3
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure. Errors are
// reported as a JSON object {"error": {"kind", "code", "message"}} on stdout.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "run_config.hpp"

using namespace covbound;
using namespace covbound::cli;

namespace
{

constexpr int exit_config = 2;
constexpr int exit_solver = 3;

struct SolverFailure : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

json complex_json(Complex z)
{
    return json{z.real(), z.imag()};
}

json diag_json(const SolveDiagnostics& d)
{
    return json{{"status", to_string(d.status)},
                {"iterations", d.iterations},
                {"primal_residual", d.primal_residual},
                {"dual_residual", d.dual_residual},
                {"rel_gap", d.rel_gap}};
}

json band_json(const RunConfig& c, const FrequencyBand& band)
{
    json merged = json::array();
    for (const auto& iv : band.intervals())
    {
        merged.push_back({iv.lo, iv.hi});
    }
    bool changed = band.intervals().size() != c.band.size();
    std::string note = changed ? "overlapping or touching intervals were merged" : "";
    return json{{"merged", merged}, {"intervals_merged", changed}, {"note", note}};
}

void require_optimal(const SolveDiagnostics& d, const std::string& what)
{
    if (!d.optimal())
    {
        throw SolverFailure(what + " ended with status " + to_string(d.status));
    }
}

json header(const std::string& command, const RunConfig& c, const FrequencyBand& band)
{
    return json{{"command", command}, {"config", to_json(c)}, {"band", band_json(c, band)}};
}

json cmd_bound(const RunConfig& c)
{
    const ProblemSpec spec = single_spec(c);
    const FrequencyGrid grid = discretize(spec.band, c.step);
    BoundConfig bcfg;
    bcfg.solver = solver_of(c);
    const BoundReport rep = upper_bound(spec, grid, bcfg);
    require_optimal(rep.diag, "bound solver");

    json out = header("bound", c, spec.band);
    out["bound"] = rep.bound;
    out["t_star"] = rep.t_star;
    json coeffs = json::array();
    for (int k = -spec.n; k <= spec.n; ++k)
    {
        coeffs.push_back(complex_json(rep.q0.coeff(k)));
    }
    out["coefficients"] = coeffs;
    out["q0"] = json{{"degree", spec.n}, {"lags", json::array()}, {"coefficients", coeffs}};
    for (int k = -spec.n; k <= spec.n; ++k)
    {
        out["q0"]["lags"].push_back(k);
    }
    out["real_coefficients"] = rep.real_coefficients;
    out["omega"] = json{{"degenerate", rep.omega.degenerate}, {"points", rep.omega.points}};
    out["psi0"] = json{{"tv_norm", rep.psi0.tv_norm()}, {"max_moment", rep.psi0.max_moment(spec.n)}};
    out["duality_gap"] = rep.duality_gap;
    out["dual_value"] = rep.dual_value;
    out["grid_points"] = grid.size();
    out["diagnostics"] = json{{"primal", diag_json(rep.diag)}, {"dual", diag_json(rep.dual_diag)}};
    return out;
}

json pair_json(const DiscreteMeasurePair& pair)
{
    json pts = json::array();
    json mu = json::array();
    json nu = json::array();
    const auto& grid = pair.grid();
    const double cutoff = 1e-12 * pair.total_mass();
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        if (pair.mu()[j] > cutoff || pair.nu()[j] > cutoff)
        {
            pts.push_back(grid[j]);
            mu.push_back(pair.mu()[j]);
            nu.push_back(pair.nu()[j]);
        }
    }
    return json{{"points", pts}, {"mu", mu}, {"nu", nu}};
}

json witness_json(const ProblemSpec& spec, const DiscreteMeasurePair& pair)
{
    double mismatch = 0.0;
    for (int k = 0; k <= spec.n; ++k)
    {
        mismatch = std::max(mismatch, std::abs(covariance_at(pair, static_cast<double>(k))));
    }
    return json{{"max_moment_mismatch", mismatch}, {"total_mass", pair.total_mass()}};
}

json cmd_exact(const RunConfig& c)
{
    const ProblemSpec spec = single_spec(c);
    const FrequencyGrid grid = discretize(spec.band, c.step);
    const ExactConfig ecfg = analysis_of(c).exact;
    const PhaseSweepResult sw = phase_sweep(spec, grid, ecfg);
    require_optimal(sw.diag, "phase sweep");

    json out = header("exact", c, spec.band);
    out["exact"] = sw.value;
    out["phi0"] = complex_json(sw.phi0);
    out["pair0"] = pair_json(sw.pair0);
    out["witness"] = witness_json(spec, sw.pair0);
    json per = json::array();
    for (const auto& [phi, v] : sw.per_phase_values)
    {
        per.push_back(json{{"phi", complex_json(phi)}, {"value", v}});
    }
    out["per_phase"] = per;
    out["diagnostics"] = diag_json(sw.diag);
    return out;
}

json cmd_gap(const RunConfig& c)
{
    const ProblemSpec spec = single_spec(c);
    const FrequencyGrid grid = discretize(spec.band, c.step);
    const GapResult g = gap(spec, grid, analysis_of(c).exact);
    require_optimal(g.diag, "gap computation");

    json out = header("gap", c, spec.band);
    out["gap"] = g.gap;
    out["bound"] = g.bound;
    out["exact"] = g.exact;
    out["sharpness_tolerance"] = sharpness_tolerance(spec, solver_of(c));
    out["diagnostics"] = diag_json(g.diag);
    return out;
}

json check_json(const DiagnosticCheck& ch)
{
    return json{{"name", ch.name},
                {"status", to_string(ch.status)},
                {"measured", ch.measured},
                {"threshold", ch.threshold},
                {"note", ch.note}};
}

json cmd_diagnose(const RunConfig& c)
{
    const ProblemSpec spec = single_spec(c);
    const FrequencyGrid grid = discretize(spec.band, c.step);
    const DiagnosticsReport rep = diagnostics_battery(spec, grid, analysis_of(c));

    json out = header("diagnose", c, spec.band);
    out["bound"] = rep.bound;
    out["all_passed"] = rep.all_passed();
    out["checks"] = json::array();
    for (const auto& ch : rep.checks)
    {
        out["checks"].push_back(check_json(ch));
    }
    return out;
}

json cmd_refine(const RunConfig& c)
{
    const ProblemSpec spec = single_spec(c);
    const RefinementReport rep = refinement_study(spec, analysis_of(c), c.exact);

    json out = header("refine", c, spec.band);
    out["steps"] = rep.steps;
    out["bounds"] = rep.bounds;
    out["bound_deltas"] = rep.bound_deltas;
    if (rep.has_exact)
    {
        out["exact"] = rep.exact;
        out["exact_deltas"] = rep.exact_deltas;
        out["exact_doubled_phases"] = rep.exact_doubled_phases;
        out["phase_delta"] = rep.phase_delta;
    }
    out["stable"] = rep.stable();
    out["flags"] = rep.flags;
    return out;
}

std::string csv_value(const std::optional<double>& v)
{
    return v ? format_number(*v) : "nan";
}

std::string sweep_csv(const RunConfig& c, const FrequencyBand& band, const SweepCurve& curve)
{
    std::ostringstream os;
    os << "# covbound sweep\n";
    os << "# config: " << to_json(c).dump() << "\n";
    os << "# band_merged: " << band_json(c, band)["merged"].dump() << "\n";
    for (const auto& f : curve.failures)
    {
        os << "# failure: " << f << "\n";
    }
    os << (curve.has_exact ? "tau,bound,exact,gap\n" : "tau,bound\n");
    for (std::size_t i = 0; i < curve.tau_values.size(); ++i)
    {
        os << format_number(curve.tau_values[i]) << ',' << csv_value(curve.bound_values[i]);
        if (curve.has_exact)
        {
            os << ',' << csv_value(curve.exact_values[i]) << ',' << csv_value(curve.gap_values[i]);
        }
        os << '\n';
    }
    return os.str();
}

json sweep_json(const RunConfig& c, const FrequencyBand& band, const SweepCurve& curve)
{
    json out = header("sweep", c, band);
    out["tau"] = curve.tau_values;
    auto column = [](const std::vector<std::optional<double>>& v) {
        json a = json::array();
        for (const auto& x : v)
        {
            a.push_back(x ? json(*x) : json(nullptr));
        }
        return a;
    };
    out["bound"] = column(curve.bound_values);
    if (curve.has_exact)
    {
        out["exact"] = column(curve.exact_values);
        out["gap"] = column(curve.gap_values);
    }
    out["failures"] = curve.failures;
    return out;
}

void emit(const RunConfig& c, const std::string& text)
{
    if (c.output.empty())
    {
        std::cout << text;
        return;
    }
    std::ofstream f(c.output, std::ios::binary);
    if (!f)
    {
        throw ConfigError("OutputError", "cannot open output file " + c.output);
    }
    f << text;
}

int error_exit(int code, const std::string& kind, const std::string& error_code, const std::string& message)
{
    json err{{"error", {{"kind", kind}, {"code", error_code}, {"message", message}, {"exit_code", code}}}};
    std::cout << err.dump(2) << std::endl;
    return code;
}

int run_sweep(const RunConfig& c)
{
    check_common(c);
    if (!c.tau_range)
    {
        throw ConfigError("InvalidSpec", "--tau-range lo:hi is required");
    }
    if (c.points < 2 || !(c.tau_range->first <= c.tau_range->second))
    {
        throw ConfigError("InvalidSpec", "sweep needs lo <= hi and at least two points");
    }
    const FrequencyBand band = resolve_band(c);
    ProblemSpec{band, c.n, c.tau_range->first, c.sigma2}.validate();
    ProblemSpec{band, c.n, c.tau_range->second, c.sigma2}.validate();
    discretize(band, c.step);

    const SweepCurve curve =
        sweep_tau(band, c.n, c.sigma2, c.tau_range->first, c.tau_range->second, c.points, c.exact, analysis_of(c));
    emit(c, c.format == "csv" ? sweep_csv(c, band, curve) : sweep_json(c, band, curve).dump(2) + "\n");
    if (!curve.failures.empty())
    {
        return error_exit(exit_solver, "solver", "SweepFailures",
                          std::to_string(curve.failures.size()) + " lag values failed; first: " + curve.failures[0]);
    }
    return 0;
}

/// A value starting with '-' (a negative endpoint) would read as a flag;
/// rewrite "--band -0.3:0.3" as "--band=-0.3:0.3".
std::vector<std::string> glue_negative_values(int argc, char** argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
    {
        std::string a = argv[i];
        const bool takes_value = a == "--band" || a == "--tau-range" || a == "--tau";
        if (takes_value && i + 1 < argc)
        {
            const std::string next = argv[i + 1];
            if (next.size() > 1 && next[0] == '-' && (std::isdigit(static_cast<unsigned char>(next[1])) || next[1] == '.'))
            {
                args.push_back(a + "=" + next);
                ++i;
                continue;
            }
        }
        args.push_back(std::move(a));
    }
    std::reverse(args.begin(), args.end());
    return args;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bounds on covariance uncertainty at non-integer lags"};
    app.require_subcommand(1);

    std::vector<std::string> bands;
    std::string tau_range;
    std::string config_path;
    RunConfig flags;
    double tau = 0.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--band", bands, "frequency interval lo:hi (repeatable)");
        sub->add_option("--n", flags.n, "largest specified lag");
        sub->add_option("--sigma2", flags.sigma2, "signal power");
        sub->add_option("--step", flags.step, "frequency grid step");
        sub->add_option("--phases", flags.phases, "phases in the sweep over the half circle");
        sub->add_option("--tol", flags.tol, "solver tolerance");
        sub->add_option("--max-iter", flags.max_iter, "solver iteration limit");
        sub->add_option("--format", flags.format, "json or csv");
        sub->add_option("--output", flags.output, "output file (default stdout)");
        sub->add_option("--jobs", flags.jobs, "worker threads, 0 for all processors");
        sub->add_option("--config", config_path, "JSON config file; flags override it");
    };

    std::vector<CLI::App*> subs;
    for (const char* name : {"bound", "exact", "gap", "diagnose", "refine"})
    {
        auto* sub = app.add_subcommand(name);
        add_common(sub);
        sub->add_option("--tau", tau, "query lag");
        if (std::string(name) == "refine")
        {
            sub->add_flag("--exact", flags.exact, "include phase sweeps");
        }
        subs.push_back(sub);
    }
    auto* sweep = app.add_subcommand("sweep");
    add_common(sweep);
    sweep->add_option("--tau-range", tau_range, "lag range lo:hi");
    sweep->add_option("--points", flags.points, "number of lags");
    sweep->add_flag("--exact", flags.exact, "add phase-sweep and gap columns");
    subs.push_back(sweep);
    app.get_subcommand("bound")->description("upper bound with certificate");
    app.get_subcommand("exact")->description("phase-sweep lower bound with witness pair");
    app.get_subcommand("gap")->description("bound minus phase-sweep value");
    app.get_subcommand("diagnose")->description("certificate and invariance checks");
    app.get_subcommand("refine")->description("grid and phase refinement study");
    sweep->description("bound curve over a lag range");

    try
    {
        app.parse(glue_negative_values(argc, argv));
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        return error_exit(exit_config, "config", "ParseError", e.what());
    }

    CLI::App* active = app.get_subcommands().front();
    const std::string command = active->get_name();
    try
    {
        RunConfig c;
        if (!config_path.empty())
        {
            std::ifstream f(config_path);
            if (!f)
            {
                throw ConfigError("InvalidConfig", "cannot read config file " + config_path);
            }
            json j;
            try
            {
                f >> j;
            }
            catch (const json::exception& e)
            {
                throw ConfigError("InvalidConfig", std::string("config file is not valid JSON: ") + e.what());
            }
            c = load_config(j);
        }
        auto given = [&](const char* opt) { return active->count(opt) > 0; };
        if (given("--band"))
        {
            c.band.clear();
            for (const auto& b : bands)
            {
                c.band.push_back(parse_interval(b));
            }
        }
        if (given("--n")) c.n = flags.n;
        if (given("--sigma2")) c.sigma2 = flags.sigma2;
        if (given("--step")) c.step = flags.step;
        if (given("--phases")) c.phases = flags.phases;
        if (given("--tol")) c.tol = flags.tol;
        if (given("--max-iter")) c.max_iter = flags.max_iter;
        if (given("--format")) c.format = flags.format;
        if (given("--output")) c.output = flags.output;
        if (given("--jobs")) c.jobs = flags.jobs;
        if (command != "sweep" && given("--tau")) c.tau = tau;
        if (command == "sweep")
        {
            if (given("--tau-range"))
            {
                const Interval r = parse_interval(tau_range);
                c.tau_range = std::make_pair(r.lo, r.hi);
            }
            if (given("--points")) c.points = flags.points;
        }
        if ((command == "sweep" || command == "refine") && given("--exact")) c.exact = flags.exact;

        if (command == "sweep")
        {
            return run_sweep(c);
        }
        json out;
        if (command == "bound") out = cmd_bound(c);
        else if (command == "exact") out = cmd_exact(c);
        else if (command == "gap") out = cmd_gap(c);
        else if (command == "diagnose") out = cmd_diagnose(c);
        else out = cmd_refine(c);
        emit(c, out.dump(2) + "\n");
        return 0;
    }
    catch (const ConfigError& e)
    {
        return error_exit(exit_config, "config", e.code, e.what());
    }
    catch (const Error& e)
    {
        const bool config = e.code() != ErrorCode::MalformedProblem;
        return error_exit(config ? exit_config : exit_solver, config ? "config" : "solver", to_string(e.code()),
                          e.what());
    }
    catch (const SolverFailure& e)
    {
        return error_exit(exit_solver, "solver", "SolverFailure", e.what());
    }
    catch (const std::exception& e)
    {
        return error_exit(exit_solver, "solver", "Internal", e.what());
    }
}
