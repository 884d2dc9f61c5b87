///
/// \file exact.hpp
///
/// Lower bound on covariance uncertainty by phase sweep. For a fixed
/// unimodular phi the worst-case discrepancy problem
///
///   maximize Re(phi sum_j g(theta_j) (mu_j - nu_j))
///   s.t.     sum_j exp(i 2 pi theta_j k) (mu_j - nu_j) = 0,  k = 0..n
///            sum_j (mu_j + nu_j) = 2 sigma^2,  mu, nu >= 0
///
/// is a linear program; maximizing over a grid of phases approximates the
/// true uncertainty from below, and each optimal pair is an explicit witness.
///
#ifndef COVBOUND_EXACT_HPP
#define COVBOUND_EXACT_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "covbound/bound.hpp"
#include "covbound/conic_solver.hpp"
#include "covbound/core.hpp"
#include "covbound/parallel.hpp"

namespace covbound
{

struct ExactConfig
{
    SolverConfig solver;
    std::size_t num_phases = 360;
    /// Worker threads for the phase sweep; 0 means hardware concurrency.
    std::size_t jobs = 1;
};

struct FixedPhaseResult
{
    double value = 0.0;
    DiscreteMeasurePair pair;
    SolveDiagnostics diag;
};

struct PhaseSweepResult
{
    ProblemSpec spec;
    double value = 0.0;
    Complex phi0{1.0, 0.0};
    DiscreteMeasurePair pair0;
    std::vector<std::pair<Complex, double>> per_phase_values;
    SolveDiagnostics diag;
};

/// Threshold for declaring bound and sweep equal up to solver noise.
inline double sharpness_tolerance(const ProblemSpec& spec, const SolverConfig& solver = {})
{
    return std::max(1e-5, 10.0 * solver.tol) * 2.0 * spec.sigma2;
}

/// Tolerance for comparisons between the bound and the sweep.
inline double cross_tolerance(const ProblemSpec& spec)
{
    return 1e-6 * 2.0 * spec.sigma2;
}

/// The i-th phase of an m-point sweep over the upper half circle.
inline Complex sweep_phase(std::size_t i, std::size_t m)
{
    return std::polar(1.0, std::numbers::pi * static_cast<double>(i) / static_cast<double>(m));
}

namespace detail
{

/// Constraint rows shared by every phase: k = 0 (real), k = 1..n (real and
/// imaginary parts), then total mass.
inline LinearProgram fixed_phase_constraints(const ProblemSpec& spec, const FrequencyGrid& grid)
{
    const auto m = static_cast<Eigen::Index>(grid.size());
    const int n = spec.n;
    const Eigen::Index rows = 2 + 2 * n;
    LinearProgram lp;
    lp.A = Eigen::MatrixXd::Zero(rows, 2 * m);
    lp.b = Eigen::VectorXd::Zero(rows);
    lp.objective = Eigen::VectorXd::Zero(2 * m);
    for (Eigen::Index j = 0; j < m; ++j)
    {
        const double theta = grid[static_cast<std::size_t>(j)];
        lp.A(0, j) = 1.0;
        lp.A(0, m + j) = -1.0;
        for (int k = 1; k <= n; ++k)
        {
            const Complex e = eval_kernel(static_cast<double>(k), theta);
            lp.A(2 * k - 1, j) = e.real();
            lp.A(2 * k - 1, m + j) = -e.real();
            lp.A(2 * k, j) = e.imag();
            lp.A(2 * k, m + j) = -e.imag();
        }
        lp.A(rows - 1, j) = 1.0;
        lp.A(rows - 1, m + j) = 1.0;
    }
    // Solved at unit power; weights are rescaled by sigma^2 afterwards.
    lp.b[rows - 1] = 2.0;
    return lp;
}

inline void set_phase_objective(LinearProgram& lp, const ProblemSpec& spec, const FrequencyGrid& grid, Complex phi)
{
    const auto m = static_cast<Eigen::Index>(grid.size());
    for (Eigen::Index j = 0; j < m; ++j)
    {
        const double w = (phi * eval_kernel(spec.tau, grid[static_cast<std::size_t>(j)])).real();
        lp.objective[j] = w;
        lp.objective[m + j] = -w;
    }
}

inline FixedPhaseResult solve_phase(LinearProgram lp, const ProblemSpec& spec, const FrequencyGrid& grid,
                                    Complex phi, const SolverConfig& solver)
{
    set_phase_objective(lp, spec, grid, phi);
    const LpResult res = solve_lp(lp, solver);
    const auto m = grid.size();
    std::vector<double> mu(m), nu(m);
    for (std::size_t j = 0; j < m; ++j)
    {
        mu[j] = spec.sigma2 * res.x[static_cast<Eigen::Index>(j)];
        nu[j] = spec.sigma2 * res.x[static_cast<Eigen::Index>(m + j)];
    }
    DiscreteMeasurePair pair(grid, std::move(mu), std::move(nu));
    const double value = (phi * covariance_at(pair, spec.tau)).real();
    return FixedPhaseResult{value, std::move(pair), res.diag};
}

} // namespace detail

inline FixedPhaseResult solve_fixed_phase(const ProblemSpec& spec, const FrequencyGrid& grid, Complex phi,
                                          const SolverConfig& solver = {})
{
    detail::check_grid(spec, grid);
    if (std::abs(std::abs(phi) - 1.0) > 1e-9)
    {
        throw Error(ErrorCode::InvalidPhase, "phase must be unimodular");
    }
    return detail::solve_phase(detail::fixed_phase_constraints(spec, grid), spec, grid, phi, solver);
}

///
/// Solves the fixed-phase problem at phi_i = exp(i pi i / P), i = 0..P-1. The
/// upper half circle suffices: negating phi while swapping mu and nu leaves
/// the value unchanged. Ties resolve to the lowest phase index.
///
inline PhaseSweepResult phase_sweep(const ProblemSpec& spec, const FrequencyGrid& grid, const ExactConfig& cfg = {})
{
    detail::check_grid(spec, grid);
    if (cfg.num_phases < 1)
    {
        throw Error(ErrorCode::InvalidSpec, "phase sweep needs at least one phase");
    }
    const LinearProgram base = detail::fixed_phase_constraints(spec, grid);
    std::vector<std::optional<FixedPhaseResult>> results(cfg.num_phases);
    parallel_for(cfg.num_phases, cfg.jobs, [&](std::size_t i) {
        results[i] = detail::solve_phase(base, spec, grid, sweep_phase(i, cfg.num_phases), cfg.solver);
    });

    std::size_t best = 0;
    PhaseSweepResult out{spec, results[0]->value, sweep_phase(0, cfg.num_phases), results[0]->pair, {}, {}};
    out.per_phase_values.reserve(cfg.num_phases);
    out.diag = results[0]->diag;
    for (std::size_t i = 0; i < cfg.num_phases; ++i)
    {
        const auto& r = *results[i];
        out.per_phase_values.emplace_back(sweep_phase(i, cfg.num_phases), r.value);
        if (i > 0)
        {
            out.diag = merge(out.diag, r.diag);
        }
        if (r.value > results[best]->value)
        {
            best = i;
        }
    }
    out.value = results[best]->value;
    out.phi0 = sweep_phase(best, cfg.num_phases);
    out.pair0 = results[best]->pair;
    return out;
}

struct GapResult
{
    double gap = 0.0;
    double bound = 0.0;
    double exact = 0.0;
    SolveDiagnostics diag;
};

/// Bound minus phase-sweep value on the same grid.
inline GapResult gap(const ProblemSpec& spec, const FrequencyGrid& grid, const ExactConfig& cfg = {},
                     BoundConfig bound_cfg = {})
{
    bound_cfg.solver = cfg.solver;
    bound_cfg.cross_check_dual = false;
    const BoundReport ub = upper_bound(spec, grid, bound_cfg);
    const PhaseSweepResult sweep = phase_sweep(spec, grid, cfg);
    return GapResult{ub.bound - sweep.value, ub.bound, sweep.value, merge(ub.diag, sweep.diag)};
}

} // namespace covbound

#endif /* COVBOUND_EXACT_HPP */
