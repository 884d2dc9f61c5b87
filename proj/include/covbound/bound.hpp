///
/// \file bound.hpp
///
/// Upper bound on covariance uncertainty by sup-norm approximation of the
/// lag kernel with trigonometric polynomials, together with its dual
/// certificate and the extremal frequency set.
///
/// For a query lag tau and specified lags -n..n, the bound is
///
///   2 sigma^2 min_{Q in Lambda_n} sup_{theta in band} |exp(i 2 pi theta tau) - Q(theta)|,
///
/// evaluated on a frequency grid. The dual problem maximizes
/// Re sum_j g(theta_j) psi_j over complex grid measures psi with total
/// variation <= 1 whose moments of order -n..n vanish.
///
#ifndef COVBOUND_BOUND_HPP
#define COVBOUND_BOUND_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "covbound/conic.hpp"
#include "covbound/conic_solver.hpp"
#include "covbound/core.hpp"

namespace covbound
{

struct BoundConfig
{
    SolverConfig solver;
    /// Relative threshold below the maximal residual for membership in Omega.
    double omega_tol = 1e-4;
    /// Qualifying grid points at most this many indices apart form one cluster.
    std::size_t cluster_window = 2;
    /// Below this minimax value the residual counts as identically zero.
    double degenerate_tol = 1e-7;
    /// Solve the dual problem independently and record the gap.
    bool cross_check_dual = true;
    /// Use real coefficients when band and grid are symmetric about zero.
    bool auto_real_coefficients = true;
};

/// Extremal frequencies of the residual; `degenerate` marks an identically
/// zero residual, for which no extremal set is defined.
struct SupportSet
{
    bool degenerate = false;
    std::vector<double> points;
};

struct BoundReport
{
    ProblemSpec spec;
    double bound = 0.0;  // 2 sigma^2 t_star
    double t_star = 0.0; // normalized minimax value
    TrigPolynomial q0;
    ComplexMeasure psi0;
    SupportSet omega;
    bool real_coefficients = false;
    /// t_star minus the independently solved dual value (NaN if not run).
    double duality_gap = std::numeric_limits<double>::quiet_NaN();
    double dual_value = std::numeric_limits<double>::quiet_NaN();
    SolveDiagnostics diag;
    SolveDiagnostics dual_diag;
};

struct DualBoundResult
{
    double value = 0.0;
    ComplexMeasure psi;
    SolveDiagnostics diag;
};

namespace detail
{

inline void check_grid(const ProblemSpec& spec, const FrequencyGrid& grid)
{
    spec.validate();
    if (!(grid.band() == spec.band))
    {
        throw Error(ErrorCode::GridMismatch, "grid was built for a different band");
    }
    if (grid.size() == 0)
    {
        throw Error(ErrorCode::GridMismatch, "grid is empty");
    }
}

inline MinimaxProblem kernel_fit_problem(const ProblemSpec& spec, const FrequencyGrid& grid, bool real_only)
{
    MinimaxProblem p;
    p.real_coefficients_only = real_only;
    p.targets.reserve(grid.size());
    p.basis.resize(static_cast<Eigen::Index>(grid.size()), 2 * spec.n + 1);
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        p.targets.push_back(eval_kernel(spec.tau, grid[j]));
        for (int k = -spec.n; k <= spec.n; ++k)
        {
            p.basis(static_cast<Eigen::Index>(j), k + spec.n) = eval_kernel(static_cast<double>(k), grid[j]);
        }
    }
    return p;
}

inline std::vector<double> residual_moduli(const TrigPolynomial& q, double tau, const FrequencyGrid& grid)
{
    std::vector<double> res(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        res[j] = std::abs(eval_kernel(tau, grid[j]) - q(grid[j]));
    }
    return res;
}

} // namespace detail

///
/// Points of the residual |g_tau - q0| within omega_tol (relative) of its grid
/// maximum. Runs of qualifying points no more than `window` indices apart
/// collapse to their maximizer; near-exact ties are all kept so that the set
/// of a symmetric problem stays symmetric.
///
inline SupportSet extract_support(const TrigPolynomial& q0, const ProblemSpec& spec, const FrequencyGrid& grid,
                                  double omega_tol = 1e-4, std::size_t window = 2, double degenerate_tol = 1e-7)
{
    const std::vector<double> res = detail::residual_moduli(q0, spec.tau, grid);
    const double t = *std::max_element(res.begin(), res.end());
    SupportSet out;
    if (t <= degenerate_tol)
    {
        out.degenerate = true;
        return out;
    }
    const double threshold = (1.0 - omega_tol) * t;
    const double tie = 1e-10 * t;

    std::vector<std::size_t> cluster;
    auto flush = [&] {
        if (cluster.empty())
        {
            return;
        }
        double best = 0.0;
        for (auto j : cluster)
        {
            best = std::max(best, res[j]);
        }
        for (auto j : cluster)
        {
            if (res[j] >= best - tie)
            {
                out.points.push_back(grid[j]);
            }
        }
        cluster.clear();
    };

    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        if (res[j] < threshold)
        {
            continue;
        }
        if (!cluster.empty() && (j - cluster.back() > window || grid.interval_of(j) != grid.interval_of(cluster.back())))
        {
            flush();
        }
        cluster.push_back(j);
    }
    flush();
    return out;
}

/// Dual problem solved directly: maximize Re sum_j g(theta_j) psi_j over the
/// discrete total-variation ball intersected with the annihilator of Lambda_n.
inline DualBoundResult dual_bound(const ProblemSpec& spec, const FrequencyGrid& grid, const BoundConfig& cfg = {})
{
    detail::check_grid(spec, grid);
    const auto m = static_cast<Eigen::Index>(grid.size());
    const int n = spec.n;
    const Eigen::Index rows = 1 + 2 * (2 * n + 1);

    // Variables: one slack for the TV row, then (u_j, Re psi_j, Im psi_j) in Q^3.
    ConicProblem cp;
    cp.cones.nonneg = 1;
    cp.cones.soc.assign(static_cast<std::size_t>(m), 3);
    cp.A = Eigen::MatrixXd::Zero(rows, 1 + 3 * m);
    cp.b = Eigen::VectorXd::Zero(rows);
    cp.c = Eigen::VectorXd::Zero(1 + 3 * m);
    cp.A(0, 0) = 1.0;
    cp.b[0] = 1.0;
    for (Eigen::Index j = 0; j < m; ++j)
    {
        const double theta = grid[static_cast<std::size_t>(j)];
        const Eigen::Index u = 1 + 3 * j;
        cp.A(0, u) = 1.0;
        const Complex g = eval_kernel(spec.tau, theta);
        cp.c[u + 1] = -g.real();
        cp.c[u + 2] = g.imag();
        for (int k = -n; k <= n; ++k)
        {
            const Complex e = eval_kernel(static_cast<double>(k), theta);
            const Eigen::Index row = 1 + 2 * (k + n);
            // Re(e psi) and Im(e psi)
            cp.A(row, u + 1) = e.real();
            cp.A(row, u + 2) = -e.imag();
            cp.A(row + 1, u + 1) = e.imag();
            cp.A(row + 1, u + 2) = e.real();
        }
    }

    const ConicSolution sol = solve_conic(cp, cfg.solver);
    std::vector<Complex> weights(grid.size());
    for (Eigen::Index j = 0; j < m; ++j)
    {
        weights[static_cast<std::size_t>(j)] = Complex(sol.x[2 + 3 * j], sol.x[3 + 3 * j]);
    }
    DualBoundResult out{0.0, ComplexMeasure(grid, std::move(weights)), sol.diag};
    out.value = out.psi.integrate([&](double theta) { return eval_kernel(spec.tau, theta); }).real();
    return out;
}

///
/// Evaluates the bound on `grid`. Coefficients are restricted to be real when
/// the band and grid are symmetric about zero, in which case the reported dual
/// measure is the conjugate-reflection symmetrization of the solver multipliers
/// (which annihilate only real parts of the moments before symmetrization).
///
inline BoundReport upper_bound(const ProblemSpec& spec, const FrequencyGrid& grid, const BoundConfig& cfg = {})
{
    detail::check_grid(spec, grid);
    const bool real_only = cfg.auto_real_coefficients && spec.band.is_symmetric() && grid.is_symmetric();

    const MinimaxResult fit = solve_minimax(detail::kernel_fit_problem(spec, grid, real_only), cfg.solver);

    BoundReport rep{spec, 0.0, fit.t_star, TrigPolynomial(spec.n, fit.coeffs), ComplexMeasure(grid), {}, real_only};
    rep.bound = 2.0 * spec.sigma2 * fit.t_star;
    rep.diag = fit.diag;

    if (fit.t_star <= cfg.degenerate_tol)
    {
        rep.omega.degenerate = true;
    }
    else
    {
        ComplexMeasure psi(grid, fit.dual_weights);
        rep.psi0 = real_only ? psi.symmetrized() : std::move(psi);
        rep.omega = extract_support(rep.q0, spec, grid, cfg.omega_tol, cfg.cluster_window, cfg.degenerate_tol);
    }

    if (cfg.cross_check_dual)
    {
        const DualBoundResult dual = dual_bound(spec, grid, cfg);
        rep.dual_value = dual.value;
        rep.duality_gap = fit.t_star - dual.value;
        rep.dual_diag = dual.diag;
    }
    return rep;
}

//------------------------------------------------------------------------------
// Structure of the dual measure on symmetric grids
//------------------------------------------------------------------------------

///
/// psi~ = (psi + psi*)/2 split as even real part plus i times odd imaginary
/// part. `asymmetry` is TV(psi - psi*) / (2 TV(psi)) for the input measure;
/// `residual` collects what should vanish for the symmetrized measure:
/// its own asymmetry, any objective change, and any TV increase, each relative
/// to TV(psi).
///
struct SymmetrySplit
{
    ComplexMeasure symmetrized;
    std::vector<double> even_real;
    std::vector<double> odd_imag;
    double asymmetry = 0.0;
    double residual = 0.0;
};

inline SymmetrySplit symmetry_split(const ComplexMeasure& psi, double tau)
{
    const auto& grid = psi.grid();
    SymmetrySplit out{psi.symmetrized(), {}, {}, 0.0, 0.0};
    const double tv = psi.tv_norm();
    const double scale = tv > 0.0 ? tv : 1.0;

    const ComplexMeasure refl = psi.conj_reflect();
    double diff = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        diff += std::abs(psi.weights()[j] - refl.weights()[j]);
    }
    out.asymmetry = diff / (2.0 * scale);

    out.even_real.resize(grid.size());
    out.odd_imag.resize(grid.size());
    double parity = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        out.even_real[j] = out.symmetrized.weights()[j].real();
        out.odd_imag[j] = out.symmetrized.weights()[j].imag();
    }
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        const auto r = grid.reflection_of(j);
        parity += std::abs(out.even_real[j] - out.even_real[r]) + std::abs(out.odd_imag[j] + out.odd_imag[r]);
    }

    auto objective = [&](const ComplexMeasure& m) {
        return m.integrate([&](double theta) { return eval_kernel(tau, theta); }).real();
    };
    const double objective_change = std::abs(objective(out.symmetrized) - objective(psi));
    const double tv_increase = std::max(0.0, out.symmetrized.tv_norm() - tv);
    out.residual = (parity + objective_change + tv_increase) / scale;
    return out;
}

} // namespace covbound

#endif /* COVBOUND_BOUND_HPP */
