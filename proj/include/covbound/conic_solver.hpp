///
/// \file conic_solver.hpp
///
/// Problem-level solvers built on the interior-point core: complex
/// sup-norm (minimax) fitting over a finite grid, and linear programs with
/// nonnegative variables.
///
#ifndef COVBOUND_CONIC_SOLVER_HPP
#define COVBOUND_CONIC_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "covbound/conic.hpp"
#include "covbound/core.hpp"

namespace covbound
{

///
/// min over coefficients c of max_j |targets_j - (basis c)_j|.
///
/// With real_coefficients_only the coefficient vector is restricted to R^K.
///
struct MinimaxProblem
{
    std::vector<Complex> targets;
    Eigen::MatrixXcd basis; // rows: grid points, columns: basis functions
    bool real_coefficients_only = false;

    void check() const
    {
        if (targets.empty() || basis.rows() != static_cast<Eigen::Index>(targets.size()) || basis.cols() < 1)
        {
            throw Error(ErrorCode::MalformedProblem, "minimax problem needs one basis row per target");
        }
    }
};

struct MinimaxResult
{
    double t_star = 0.0;
    std::vector<Complex> coeffs;
    /// Grid dual weights psi_j. They annihilate the basis columns (only the real
    /// part of each moment when coefficients are restricted to be real), have
    /// total variation <= 1, and Re sum_j targets_j psi_j matches t_star.
    std::vector<Complex> dual_weights;
    SolveDiagnostics diag;
};

///
/// Epigraph form: minimize t subject to (t, Re r_j, Im r_j) in Q^3 for every
/// grid point, where r_j is the residual at point j. The free variables
/// (t, coefficients) are the dual variables y of the conic core, so the cone
/// multipliers x are the grid dual weights.
///
inline MinimaxResult solve_minimax(const MinimaxProblem& p, const SolverConfig& cfg = {})
{
    p.check();
    const auto m = static_cast<Eigen::Index>(p.targets.size());
    const auto K = p.basis.cols();
    const bool real_only = p.real_coefficients_only;
    const Eigen::Index per = real_only ? 1 : 2;
    const Eigen::Index rows = 1 + per * K;

    ConicProblem cp;
    cp.cones.soc.assign(static_cast<std::size_t>(m), 3);
    cp.A = Eigen::MatrixXd::Zero(rows, 3 * m);
    cp.b = Eigen::VectorXd::Zero(rows);
    cp.c = Eigen::VectorXd::Zero(3 * m);
    cp.b[0] = -1.0;
    for (Eigen::Index j = 0; j < m; ++j)
    {
        const Eigen::Index col = 3 * j;
        cp.A(0, col) = -1.0;
        cp.c[col + 1] = p.targets[static_cast<std::size_t>(j)].real();
        cp.c[col + 2] = p.targets[static_cast<std::size_t>(j)].imag();
        for (Eigen::Index k = 0; k < K; ++k)
        {
            const Complex e = p.basis(j, k);
            // Real part of coefficient k.
            const Eigen::Index ra = 1 + per * k;
            cp.A(ra, col + 1) = e.real();
            cp.A(ra, col + 2) = e.imag();
            if (!real_only)
            {
                cp.A(ra + 1, col + 1) = -e.imag();
                cp.A(ra + 1, col + 2) = e.real();
            }
        }
    }

    const ConicSolution sol = solve_conic(cp, cfg);

    MinimaxResult out;
    out.diag = sol.diag;
    out.coeffs.resize(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k)
    {
        const double re = sol.y[1 + per * k];
        const double im = real_only ? 0.0 : sol.y[2 + per * k];
        out.coeffs[static_cast<std::size_t>(k)] = Complex(re, im);
    }

    const Eigen::VectorXcd coeffs = Eigen::Map<const Eigen::VectorXcd>(out.coeffs.data(), K);
    const Eigen::VectorXcd fitted = p.basis * coeffs;
    double t = 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
    {
        t = std::max(t, std::abs(p.targets[static_cast<std::size_t>(j)] - fitted[j]));
    }
    out.t_star = t;

    out.dual_weights.resize(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j)
    {
        out.dual_weights[static_cast<std::size_t>(j)] = Complex(-sol.x[3 * j + 1], sol.x[3 * j + 2]);
    }
    return out;
}

///
/// maximize c'x subject to A x = b, x >= 0
///
struct LinearProgram
{
    Eigen::VectorXd objective;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;

    void check() const
    {
        if (A.cols() != objective.size() || A.rows() != b.size() || objective.size() == 0)
        {
            throw Error(ErrorCode::MalformedProblem, "linear program dimensions are inconsistent");
        }
        if (!b.allFinite())
        {
            throw Error(ErrorCode::MalformedProblem, "linear program right-hand side must be finite");
        }
    }
};

struct LpResult
{
    double value = 0.0;
    Eigen::VectorXd x;
    SolveDiagnostics diag;
};

namespace detail
{

///
/// Guesses the optimal basis from the interior point (the m columns with the
/// largest x_j / s_j), solves for that vertex and accepts it only if it is
/// primal and dual feasible. Recovers the exact vertex value that the
/// interior iterate approaches only to within the solver tolerance.
///
inline bool polish_vertex(const LinearProgram& p, const ConicSolution& sol, Eigen::VectorXd& x)
{
    const auto m = p.A.rows();
    const auto nv = p.A.cols();
    if (m == 0 || m > nv)
    {
        return false;
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(nv));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    auto ratio = [&](Eigen::Index j) {
        return sol.s[j] > 0.0 ? sol.x[j] / sol.s[j] : std::numeric_limits<double>::infinity();
    };
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return ratio(a) > ratio(b); });

    Eigen::MatrixXd B(m, m);
    Eigen::VectorXd cb(m);
    for (Eigen::Index k = 0; k < m; ++k)
    {
        B.col(k) = p.A.col(order[static_cast<std::size_t>(k)]);
        cb[k] = p.objective[order[static_cast<std::size_t>(k)]];
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (lu.rank() < m)
    {
        return false;
    }
    const Eigen::VectorXd xb = lu.solve(p.b);
    const double xscale = 1.0 + xb.cwiseAbs().maxCoeff();
    if (!xb.allFinite() || xb.minCoeff() < -1e-9 * xscale || (B * xb - p.b).norm() > 1e-9 * (1.0 + p.b.norm()))
    {
        return false;
    }
    const Eigen::VectorXd y = lu.transpose().solve(cb);
    const Eigen::VectorXd reduced = p.objective - p.A.transpose() * y;
    if (!y.allFinite() || reduced.maxCoeff() > 1e-9 * (1.0 + p.objective.cwiseAbs().maxCoeff()))
    {
        return false;
    }
    x = Eigen::VectorXd::Zero(nv);
    for (Eigen::Index k = 0; k < m; ++k)
    {
        x[order[static_cast<std::size_t>(k)]] = std::max(0.0, xb[k]);
    }
    return true;
}

} // namespace detail

inline LpResult solve_lp(const LinearProgram& p, const SolverConfig& cfg = {})
{
    p.check();
    ConicProblem cp;
    cp.cones.nonneg = static_cast<std::size_t>(p.objective.size());
    cp.A = p.A;
    cp.b = p.b;
    cp.c = -p.objective;

    const ConicSolution sol = solve_conic(cp, cfg);
    LpResult out;
    out.diag = sol.diag;
    out.x = sol.x.cwiseMax(0.0);
    if (sol.diag.optimal())
    {
        Eigen::VectorXd vertex;
        // Primal and dual feasibility certify the vertex as optimal.
        if (detail::polish_vertex(p, sol, vertex))
        {
            out.x = std::move(vertex);
        }
    }
    out.value = p.objective.dot(out.x);
    return out;
}

} // namespace covbound

#endif /* COVBOUND_CONIC_SOLVER_HPP */
