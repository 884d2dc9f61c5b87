///
/// \file analysis.hpp
///
/// Experiment drivers: lag sweeps of the bound and gap curves, a battery of
/// structural checks on a single solve, and grid/phase refinement studies.
///
#ifndef COVBOUND_ANALYSIS_HPP
#define COVBOUND_ANALYSIS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "covbound/bound.hpp"
#include "covbound/core.hpp"
#include "covbound/exact.hpp"
#include "covbound/parallel.hpp"

namespace covbound
{

struct AnalysisConfig
{
    double grid_step = default_grid_step;
    BoundConfig bound;
    ExactConfig exact;
    /// Worker threads for independent lag points; 0 = hardware concurrency.
    std::size_t jobs = 1;
    /// Largest acceptable change of the bound when the grid step is halved.
    double refinement_tol = 1e-4;
    /// Largest acceptable change of the sweep value when phases are doubled.
    double phase_refinement_tol = 1e-5;
};

//------------------------------------------------------------------------------
// Lag sweeps
//------------------------------------------------------------------------------

struct SweepCurve
{
    FrequencyBand band;
    int n = 0;
    double sigma2 = 1.0;
    std::vector<double> tau_values;
    std::vector<std::optional<double>> bound_values;
    bool has_exact = false;
    std::vector<std::optional<double>> exact_values;
    std::vector<std::optional<double>> gap_values;
    // metadata
    double grid_step = default_grid_step;
    std::size_t num_phases = 0;
    SolverConfig solver;
    std::vector<std::string> failures;
};

inline std::vector<double> uniform_taus(double lo, double hi, std::size_t count)
{
    std::vector<double> taus(count);
    for (std::size_t i = 0; i < count; ++i)
    {
        taus[i] = i + 1 == count ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return taus;
}

///
/// Bound (and optionally phase-sweep value and gap) on a uniform lag grid
/// including both endpoints. Failed points stay empty and are listed in
/// `failures`.
///
inline SweepCurve sweep_tau(const FrequencyBand& band, int n, double sigma2, double tau_lo, double tau_hi,
                            std::size_t num_tau, bool include_exact, const AnalysisConfig& cfg = {})
{
    if (!(tau_lo <= tau_hi) || num_tau < 2)
    {
        throw Error(ErrorCode::InvalidSpec, "sweep needs tau_lo <= tau_hi and at least two points");
    }
    ProblemSpec{band, n, tau_lo, sigma2}.validate();
    ProblemSpec{band, n, tau_hi, sigma2}.validate();

    SweepCurve curve{band, n, sigma2};
    curve.tau_values = uniform_taus(tau_lo, tau_hi, num_tau);
    curve.bound_values.assign(num_tau, std::nullopt);
    curve.has_exact = include_exact;
    if (include_exact)
    {
        curve.exact_values.assign(num_tau, std::nullopt);
        curve.gap_values.assign(num_tau, std::nullopt);
    }
    curve.grid_step = cfg.grid_step;
    curve.num_phases = include_exact ? cfg.exact.num_phases : 0;
    curve.solver = cfg.bound.solver;

    const FrequencyGrid grid = discretize(band, cfg.grid_step);
    BoundConfig bcfg = cfg.bound;
    bcfg.cross_check_dual = false;
    ExactConfig ecfg = cfg.exact;
    ecfg.jobs = 1;

    std::vector<std::string> errors(num_tau);
    parallel_for(num_tau, cfg.jobs, [&](std::size_t i) {
        const ProblemSpec spec{band, n, curve.tau_values[i], sigma2};
        try
        {
            const BoundReport rep = upper_bound(spec, grid, bcfg);
            if (!rep.diag.optimal())
            {
                errors[i] = std::string("bound solver status ") + to_string(rep.diag.status);
                return;
            }
            curve.bound_values[i] = rep.bound;
            if (include_exact)
            {
                const PhaseSweepResult sw = phase_sweep(spec, grid, ecfg);
                if (!sw.diag.optimal())
                {
                    errors[i] = std::string("phase sweep status ") + to_string(sw.diag.status);
                    return;
                }
                curve.exact_values[i] = sw.value;
                curve.gap_values[i] = rep.bound - sw.value;
            }
        }
        catch (const std::exception& e)
        {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < num_tau; ++i)
    {
        if (!errors[i].empty())
        {
            curve.failures.push_back("tau=" + std::to_string(curve.tau_values[i]) + ": " + errors[i]);
        }
    }
    return curve;
}

//------------------------------------------------------------------------------
// Diagnostics battery
//------------------------------------------------------------------------------

enum class CheckStatus
{
    Pass,
    Fail,
    NotApplicable,
};

inline const char* to_string(CheckStatus s)
{
    switch (s)
    {
        case CheckStatus::Pass:
            return "Pass";
        case CheckStatus::Fail:
            return "Fail";
        case CheckStatus::NotApplicable:
            return "NotApplicable";
    }
    return "Unknown";
}

struct DiagnosticCheck
{
    std::string name;
    CheckStatus status = CheckStatus::NotApplicable;
    double measured = 0.0;
    double threshold = 0.0;
    std::string note;
};

struct DiagnosticsReport
{
    ProblemSpec spec;
    double bound = 0.0;
    std::vector<DiagnosticCheck> checks;

    bool all_passed() const
    {
        return std::none_of(checks.begin(), checks.end(),
                            [](const DiagnosticCheck& c) { return c.status == CheckStatus::Fail; });
    }

    const DiagnosticCheck* find(const std::string& name) const
    {
        for (const auto& c : checks)
        {
            if (c.name == name)
            {
                return &c;
            }
        }
        return nullptr;
    }
};

inline constexpr std::array<double, 3> shift_probes{0.05, 0.1, 0.2};

namespace detail
{

/// measured <= threshold passes
inline DiagnosticCheck upper_check(std::string name, double measured, double threshold, std::string note = {})
{
    return DiagnosticCheck{std::move(name), measured <= threshold ? CheckStatus::Pass : CheckStatus::Fail, measured,
                           threshold, std::move(note)};
}

inline DiagnosticCheck skipped(std::string name, std::string note)
{
    return DiagnosticCheck{std::move(name), CheckStatus::NotApplicable, 0.0, 0.0, std::move(note)};
}

/// Largest distance from a point of `omega` to the reflection of its nearest partner.
inline double omega_asymmetry(const std::vector<double>& omega)
{
    double worst = 0.0;
    for (double w : omega)
    {
        double best = std::numeric_limits<double>::infinity();
        for (double v : omega)
        {
            best = std::min(best, std::abs(v + w));
        }
        worst = std::max(worst, best);
    }
    return worst;
}

/// Fraction of TV mass of psi farther than `radius` from every point of omega.
inline double mass_outside(const ComplexMeasure& psi, const std::vector<double>& omega, double radius)
{
    const double tv = psi.tv_norm();
    if (tv == 0.0)
    {
        return 0.0;
    }
    double outside = 0.0;
    const auto& grid = psi.grid();
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        const bool near = std::any_of(omega.begin(), omega.end(),
                                      [&](double w) { return std::abs(grid[j] - w) <= radius; });
        if (!near)
        {
            outside += std::abs(psi.weights()[j]);
        }
    }
    return outside / tv;
}

/// Grid points whose residual is within omega_tol (relative) of the maximum,
/// before clustering.
inline std::vector<double> qualifying_points(const BoundReport& rep, const FrequencyGrid& grid, double omega_tol)
{
    const std::vector<double> res = residual_moduli(rep.q0, rep.spec.tau, grid);
    const double t = *std::max_element(res.begin(), res.end());
    std::vector<double> out;
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        if (res[j] >= (1.0 - omega_tol) * t)
        {
            out.push_back(grid[j]);
        }
    }
    return out;
}

} // namespace detail

///
/// Runs the structural checks on one solve: real coefficients and extremal
/// set symmetry (symmetric bands only), certificate membership in the dual
/// feasible set, symmetrization of the dual measure, alignment with the
/// residual, invariance under band shifts, and the primal/dual gap.
///
inline DiagnosticsReport diagnostics_battery(const ProblemSpec& spec, const FrequencyGrid& grid,
                                             const AnalysisConfig& cfg = {})
{
    BoundConfig bcfg = cfg.bound;
    bcfg.cross_check_dual = true;
    const BoundReport rep = upper_bound(spec, grid, bcfg);
    const DualBoundResult dual = dual_bound(spec, grid, bcfg);
    const double tol = bcfg.solver.tol;
    const bool symmetric = spec.band.is_symmetric() && grid.is_symmetric();
    const bool degenerate = rep.omega.degenerate;
    const double step = grid.max_spacing();

    DiagnosticsReport out{spec, rep.bound, {}};
    auto& checks = out.checks;

    checks.push_back(detail::upper_check("solver_status", rep.diag.optimal() && rep.dual_diag.optimal() ? 0.0 : 1.0,
                                         0.0, std::string(to_string(rep.diag.status)) + "/" +
                                                  to_string(rep.dual_diag.status)));

    if (symmetric)
    {
        checks.push_back(detail::upper_check("real_coefficients", rep.q0.max_abs_imag(),
                                             real_coefficient_rel_tol * (1.0 + rep.q0.max_abs_coeff())));
        BoundConfig complex_cfg = bcfg;
        complex_cfg.auto_real_coefficients = false;
        complex_cfg.cross_check_dual = false;
        const BoundReport unrestricted = upper_bound(spec, grid, complex_cfg);
        checks.push_back(detail::upper_check("real_restriction_lossless", std::abs(unrestricted.t_star - rep.t_star),
                                             2.0 * tol * (1.0 + rep.t_star)));
    }
    else
    {
        checks.push_back(detail::skipped("real_coefficients", "band not symmetric about zero"));
        checks.push_back(detail::skipped("real_restriction_lossless", "band not symmetric about zero"));
    }

    if (degenerate)
    {
        for (const char* name : {"omega_symmetry", "psi0_annihilator", "psi0_tv_norm", "psi0_symmetrization",
                                 "alignment", "psi0_concentration"})
        {
            checks.push_back(detail::skipped(name, "residual identically zero; no certificate"));
        }
    }
    else
    {
        if (symmetric)
        {
            checks.push_back(detail::upper_check("omega_symmetry", detail::omega_asymmetry(rep.omega.points),
                                                 step * (1.0 + 1e-9),
                                                 std::to_string(rep.omega.points.size()) + " extremal points"));
        }
        else
        {
            checks.push_back(detail::skipped("omega_symmetry", "band not symmetric about zero"));
        }
        checks.push_back(detail::upper_check("psi0_annihilator", rep.psi0.max_moment(spec.n), 1e-6));
        checks.push_back(detail::upper_check("psi0_tv_norm", rep.psi0.tv_norm() - 1.0, 1e-6));
        if (symmetric)
        {
            const SymmetrySplit split = symmetry_split(dual.psi, spec.tau);
            checks.push_back(detail::upper_check("psi0_symmetrization", split.residual, 1e-4,
                                                 "raw asymmetry " + std::to_string(split.asymmetry)));
        }
        else
        {
            checks.push_back(detail::skipped("psi0_symmetrization", "band not symmetric about zero"));
        }
        const double aligned = rep.psi0.integrate([&](double theta) { return eval_kernel(spec.tau, theta); }).real();
        checks.push_back(detail::upper_check("alignment", rep.t_star - aligned, 1e-6));
        checks.push_back(detail::upper_check("psi0_concentration",
                                             detail::mass_outside(rep.psi0, detail::qualifying_points(rep, grid, cfg.bound.omega_tol),
                                                                  2.0 * step * (1 + 1e-9)),
                                             1e-4));
    }

    for (double shift : shift_probes)
    {
        const ProblemSpec shifted{spec.band.shifted(shift), spec.n, spec.tau, spec.sigma2};
        BoundConfig scfg = bcfg;
        scfg.cross_check_dual = false;
        const BoundReport srep = upper_bound(shifted, discretize(shifted.band, grid.step()), scfg);
        char name[48];
        std::snprintf(name, sizeof name, "shift_invariance_%.2f", shift);
        checks.push_back(detail::upper_check(name, std::abs(srep.bound - rep.bound), 2e-6 * spec.sigma2));
    }

    checks.push_back(detail::upper_check("duality_gap", std::abs(rep.duality_gap), 1e-6));
    return out;
}

//------------------------------------------------------------------------------
// Refinement study
//------------------------------------------------------------------------------

struct RefinementReport
{
    ProblemSpec spec;
    std::array<double, 3> steps{};
    std::array<double, 3> bounds{};
    bool has_exact = false;
    std::array<double, 3> exact{};     // at each step with the base phase count
    double exact_doubled_phases = 0.0; // base step, twice the phases
    std::size_t num_phases = 0;
    std::array<double, 2> bound_deltas{};
    std::array<double, 2> exact_deltas{};
    double phase_delta = 0.0;
    std::vector<std::string> flags;

    bool stable() const
    {
        return flags.empty();
    }
};

///
/// Bound at grid steps s, s/2, s/4 and, when requested, the phase-sweep value
/// at each step plus at step s with doubled phase count. Flags any bound delta
/// above refinement_tol and any phase-doubling change outside
/// [-cross_tol, phase_refinement_tol].
///
inline RefinementReport refinement_study(const ProblemSpec& spec, const AnalysisConfig& cfg = {},
                                         bool include_exact = true)
{
    spec.validate();
    RefinementReport rep{spec};
    rep.has_exact = include_exact;
    rep.num_phases = cfg.exact.num_phases;
    BoundConfig bcfg = cfg.bound;
    bcfg.cross_check_dual = false;

    for (std::size_t i = 0; i < 3; ++i)
    {
        rep.steps[i] = cfg.grid_step / static_cast<double>(1u << i);
        const FrequencyGrid grid = discretize(spec.band, rep.steps[i]);
        rep.bounds[i] = upper_bound(spec, grid, bcfg).bound;
        if (include_exact)
        {
            rep.exact[i] = phase_sweep(spec, grid, cfg.exact).value;
            if (i == 0)
            {
                ExactConfig doubled = cfg.exact;
                doubled.num_phases *= 2;
                rep.exact_doubled_phases = phase_sweep(spec, grid, doubled).value;
            }
        }
    }
    for (std::size_t i = 0; i < 2; ++i)
    {
        rep.bound_deltas[i] = rep.bounds[i + 1] - rep.bounds[i];
        if (std::abs(rep.bound_deltas[i]) > cfg.refinement_tol)
        {
            rep.flags.push_back("bound changed by " + std::to_string(rep.bound_deltas[i]) + " at step " +
                                std::to_string(rep.steps[i + 1]));
        }
        if (include_exact)
        {
            rep.exact_deltas[i] = rep.exact[i + 1] - rep.exact[i];
        }
    }
    if (include_exact)
    {
        rep.phase_delta = rep.exact_doubled_phases - rep.exact[0];
        if (rep.phase_delta < -cross_tolerance(spec) || rep.phase_delta > cfg.phase_refinement_tol)
        {
            rep.flags.push_back("phase doubling changed the sweep value by " + std::to_string(rep.phase_delta));
        }
    }
    return rep;
}

} // namespace covbound

#endif /* COVBOUND_ANALYSIS_HPP */
