///
/// \file conic.hpp
///
/// Dense primal-dual interior-point method for small conic programs over
/// products of the nonnegative orthant and second-order cones.
///
/// Problem form:
///
///   primal:  minimize c'x  subject to  A x = b,  x in K
///   dual:    maximize b'y  subject to  A'y + s = c,  s in K
///
/// K = R_+^l x Q^{q_1} x ... x Q^{q_r}, where Q^q = {(u0, u1) : u0 >= |u1|}.
/// The variable vector stores the l orthant entries first, then each
/// second-order block contiguously.
///
/// The solver runs on the homogeneous self-dual embedding, so infeasible and
/// unbounded instances are detected from certificates instead of stalling.
/// Search directions use Nesterov-Todd scaling and a Mehrotra
/// predictor-corrector; each Newton system is reduced to the p x p normal
/// matrix A W^2 A', which is formed densely and factored by Cholesky.
///
#ifndef COVBOUND_CONIC_HPP
#define COVBOUND_CONIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "covbound/core.hpp"

namespace covbound
{

enum class SolveStatus
{
    Optimal,
    MaxIter,
    Infeasible,
    Unbounded,
};

inline const char* to_string(SolveStatus status)
{
    switch (status)
    {
        case SolveStatus::Optimal:
            return "Optimal";
        case SolveStatus::MaxIter:
            return "MaxIter";
        case SolveStatus::Infeasible:
            return "Infeasible";
        case SolveStatus::Unbounded:
            return "Unbounded";
    }
    return "Unknown";
}

struct SolverConfig
{
    double tol = 1e-8;
    int max_iter = 200;
};

struct SolveDiagnostics
{
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double rel_gap = 0.0;
    SolveStatus status = SolveStatus::MaxIter;

    bool optimal() const noexcept
    {
        return status == SolveStatus::Optimal;
    }
};

/// Worst-of merge used when several solves feed one result.
inline SolveDiagnostics merge(const SolveDiagnostics& a, const SolveDiagnostics& b)
{
    SolveDiagnostics out;
    out.iterations = a.iterations + b.iterations;
    out.primal_residual = std::max(a.primal_residual, b.primal_residual);
    out.dual_residual = std::max(a.dual_residual, b.dual_residual);
    out.rel_gap = std::max(a.rel_gap, b.rel_gap);
    out.status = a.optimal() ? b.status : a.status;
    return out;
}

struct ConeDims
{
    std::size_t nonneg = 0;
    std::vector<std::size_t> soc;

    std::size_t total() const noexcept
    {
        std::size_t t = nonneg;
        for (auto q : soc)
        {
            t += q;
        }
        return t;
    }

    /// Barrier degree: one per orthant entry and one per second-order block.
    std::size_t degree() const noexcept
    {
        return nonneg + soc.size();
    }
};

struct ConicProblem
{
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    ConeDims cones;

    void check() const
    {
        const auto n = static_cast<Eigen::Index>(cones.total());
        if (A.cols() != n || c.size() != n || A.rows() != b.size())
        {
            throw Error(ErrorCode::MalformedProblem, "conic problem dimensions are inconsistent");
        }
        for (auto q : cones.soc)
        {
            if (q < 2)
            {
                throw Error(ErrorCode::MalformedProblem, "second-order blocks need dimension >= 2");
            }
        }
        if (!A.allFinite() || !b.allFinite() || !c.allFinite())
        {
            throw Error(ErrorCode::MalformedProblem, "conic problem data must be finite");
        }
    }
};

struct ConicSolution
{
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd s;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    SolveDiagnostics diag;
};

namespace detail
{

using Vec = Eigen::VectorXd;

/// Nesterov-Todd scaling W (symmetric, block diagonal) with W s = W^{-1} x.
/// Orthant entries: W = sqrt(x/s). Second-order blocks: W = beta H(w), where
/// H(w) = [w0 w1'; w1 I + w1 w1'/(1+w0)] is the hyperbolic rotation with
/// det(w) = w0^2 - |w1|^2 = 1, and H(w)^{-1} = H(Jw).
class NtScaling
{
public:
    NtScaling(const ConeDims& cones, const Vec& x, const Vec& s) : m_cones(&cones)
    {
        m_d.resize(static_cast<Eigen::Index>(cones.nonneg));
        for (std::size_t i = 0; i < cones.nonneg; ++i)
        {
            const auto k = static_cast<Eigen::Index>(i);
            m_d[k] = std::sqrt(x[k] / s[k]);
        }
        auto offset = static_cast<Eigen::Index>(cones.nonneg);
        m_beta.reserve(cones.soc.size());
        m_w.reserve(cones.soc.size());
        for (auto q : cones.soc)
        {
            const auto dim = static_cast<Eigen::Index>(q);
            const Vec xb = x.segment(offset, dim);
            const Vec sb = s.segment(offset, dim);
            const double detx = soc_det(xb);
            const double dets = soc_det(sb);
            const double gx = std::sqrt(detx);
            const double gs = std::sqrt(dets);
            const Vec xn = xb / gx;
            const Vec sn = sb / gs;
            const double gamma = std::sqrt(0.5 * (1.0 + xn.dot(sn)));
            Vec w(dim);
            w[0] = (xn[0] + sn[0]) / (2.0 * gamma);
            w.tail(dim - 1) = (xn.tail(dim - 1) - sn.tail(dim - 1)) / (2.0 * gamma);
            // Restore det(w) = 1 lost to rounding.
            w[0] = std::sqrt(1.0 + w.tail(dim - 1).squaredNorm());
            m_beta.push_back(std::sqrt(gx / gs));
            m_w.push_back(std::move(w));
            offset += dim;
        }
    }

    /// out = W v (inverse = false) or W^{-1} v (inverse = true)
    Vec apply(const Vec& v, bool inverse = false) const
    {
        Vec out(v.size());
        const auto l = static_cast<Eigen::Index>(m_cones->nonneg);
        if (inverse)
        {
            out.head(l) = v.head(l).cwiseQuotient(m_d);
        }
        else
        {
            out.head(l) = v.head(l).cwiseProduct(m_d);
        }
        auto offset = l;
        for (std::size_t i = 0; i < m_w.size(); ++i)
        {
            const auto dim = m_w[i].size();
            const double scale = inverse ? 1.0 / m_beta[i] : m_beta[i];
            apply_hyperbolic(m_w[i], inverse, v.segment(offset, dim), out.segment(offset, dim));
            out.segment(offset, dim) *= scale;
            offset += dim;
        }
        return out;
    }

    /// Right-multiply the column blocks of A by W (W is symmetric).
    Eigen::MatrixXd scale_columns(const Eigen::MatrixXd& A) const
    {
        Eigen::MatrixXd out(A.rows(), A.cols());
        const auto l = static_cast<Eigen::Index>(m_cones->nonneg);
        out.leftCols(l) = A.leftCols(l) * m_d.asDiagonal();
        auto offset = l;
        for (std::size_t i = 0; i < m_w.size(); ++i)
        {
            const auto dim = m_w[i].size();
            const auto& w = m_w[i];
            const auto blk = A.middleCols(offset, dim);
            auto dst = out.middleCols(offset, dim);
            // rows of A times H(w): [a0, a1] -> [a0 w0 + a1.w1, a0 w1 + a1 + (a1.w1)/(1+w0) w1]
            const Eigen::VectorXd a1w1 = blk.rightCols(dim - 1) * w.tail(dim - 1);
            dst.col(0) = m_beta[i] * (blk.col(0) * w[0] + a1w1);
            const Eigen::VectorXd coef = blk.col(0) + a1w1 / (1.0 + w[0]);
            dst.rightCols(dim - 1) =
                m_beta[i] * (blk.rightCols(dim - 1) + coef * w.tail(dim - 1).transpose());
            offset += dim;
        }
        return out;
    }

    static double soc_det(const Vec& u)
    {
        return (u[0] - u.tail(u.size() - 1).norm()) * (u[0] + u.tail(u.size() - 1).norm());
    }

private:
    template <typename In, typename Out>
    static void apply_hyperbolic(const Vec& w, bool reflect, const In& v, Out&& out)
    {
        const auto dim = w.size();
        const double sign = reflect ? -1.0 : 1.0;
        const double w0 = w[0];
        const double dot = sign * w.tail(dim - 1).dot(v.tail(dim - 1));
        out[0] = w0 * v[0] + dot;
        out.tail(dim - 1) = v.tail(dim - 1) + (sign * (v[0] + dot / (1.0 + w0))) * w.tail(dim - 1);
    }

    const ConeDims* m_cones;
    Vec m_d;
    std::vector<double> m_beta;
    std::vector<Vec> m_w;
};

template <typename F>
void for_each_block(const ConeDims& cones, F&& f)
{
    auto offset = static_cast<Eigen::Index>(cones.nonneg);
    for (auto q : cones.soc)
    {
        f(offset, static_cast<Eigen::Index>(q));
        offset += static_cast<Eigen::Index>(q);
    }
}

inline Vec identity_element(const ConeDims& cones)
{
    Vec e = Vec::Zero(static_cast<Eigen::Index>(cones.total()));
    e.head(static_cast<Eigen::Index>(cones.nonneg)).setOnes();
    for_each_block(cones, [&](Eigen::Index off, Eigen::Index) { e[off] = 1.0; });
    return e;
}

/// Jordan product u o v.
inline Vec jordan(const ConeDims& cones, const Vec& u, const Vec& v)
{
    Vec out(u.size());
    const auto l = static_cast<Eigen::Index>(cones.nonneg);
    out.head(l) = u.head(l).cwiseProduct(v.head(l));
    for_each_block(cones, [&](Eigen::Index off, Eigen::Index dim) {
        out[off] = u.segment(off, dim).dot(v.segment(off, dim));
        out.segment(off + 1, dim - 1) = u[off] * v.segment(off + 1, dim - 1) + v[off] * u.segment(off + 1, dim - 1);
    });
    return out;
}

/// Solve lambda o q = r for q.
inline Vec jordan_solve(const ConeDims& cones, const Vec& lambda, const Vec& r)
{
    Vec q(r.size());
    const auto l = static_cast<Eigen::Index>(cones.nonneg);
    q.head(l) = r.head(l).cwiseQuotient(lambda.head(l));
    for_each_block(cones, [&](Eigen::Index off, Eigen::Index dim) {
        const double l0 = lambda[off];
        const auto l1 = lambda.segment(off + 1, dim - 1);
        const double r0 = r[off];
        const auto r1 = r.segment(off + 1, dim - 1);
        const double det = NtScaling::soc_det(lambda.segment(off, dim));
        const double q0 = (l0 * r0 - l1.dot(r1)) / det;
        q[off] = q0;
        q.segment(off + 1, dim - 1) = (r1 - q0 * l1) / l0;
    });
    return q;
}

/// Largest alpha with u + alpha du in K (capped at `cap`).
inline double max_step(const ConeDims& cones, const Vec& u, const Vec& du, double cap)
{
    double alpha = cap;
    const auto l = static_cast<Eigen::Index>(cones.nonneg);
    for (Eigen::Index i = 0; i < l; ++i)
    {
        if (du[i] < 0.0)
        {
            alpha = std::min(alpha, -u[i] / du[i]);
        }
    }
    for_each_block(cones, [&](Eigen::Index off, Eigen::Index dim) {
        // det(u + a du) = qa a^2 + 2 qb a + qc, with qc = det(u) > 0.
        const auto ub = u.segment(off, dim);
        const auto db = du.segment(off, dim);
        const double qa = db[0] * db[0] - db.tail(dim - 1).squaredNorm();
        const double qb = ub[0] * db[0] - ub.tail(dim - 1).dot(db.tail(dim - 1));
        const double qc = NtScaling::soc_det(ub);
        double root = std::numeric_limits<double>::infinity();
        // The cone lies in u0 >= 0; this also catches lines through the apex,
        // where the double root of det is lost to rounding.
        if (db[0] < 0.0)
        {
            root = -ub[0] / db[0];
        }
        const double scale = std::max({std::abs(qa), std::abs(qb), qc});
        if (std::abs(qa) <= 1e-14 * scale)
        {
            if (qb < 0.0)
            {
                root = std::min(root, -qc / (2.0 * qb));
            }
        }
        else
        {
            const double disc = qb * qb - qa * qc;
            if (disc >= 0.0)
            {
                const double sq = std::sqrt(disc);
                const double qq = -(qb + std::copysign(sq, qb));
                // Roots qq/qa and qc/qq; keep the smallest positive one.
                for (double r : {qq / qa, qq != 0.0 ? qc / qq : std::numeric_limits<double>::infinity()})
                {
                    if (r > 0.0)
                    {
                        root = std::min(root, r);
                    }
                }
            }
        }
        alpha = std::min(alpha, root);
    });
    return alpha;
}

} // namespace detail

///
/// Solve a conic program with the homogeneous self-dual interior-point method.
///
/// On Optimal, (x, y, s) are the recovered primal-dual solution. On
/// Infeasible, y holds a Farkas certificate (A'y in -K, b'y = 1); on
/// Unbounded, x holds a recession direction (Ax = 0, x in K, c'x = -1).
///
inline ConicSolution solve_conic(const ConicProblem& prob, const SolverConfig& cfg = {})
{
    using detail::Vec;
    prob.check();
    if (!(cfg.tol > 0.0))
    {
        throw Error(ErrorCode::MalformedProblem, "solver tolerance must be positive");
    }

    const auto& A = prob.A;
    const auto& b = prob.b;
    const auto& c = prob.c;
    const auto& cones = prob.cones;
    const auto nvar = A.cols();
    const double nu = static_cast<double>(cones.degree()) + 1.0;
    const double bnorm = 1.0 + b.norm();
    const double cnorm = 1.0 + c.norm();

    const Vec e = detail::identity_element(cones);
    Vec x = e;
    Vec s = e;
    Vec y = Vec::Zero(A.rows());
    double tau = 1.0;
    double kappa = 1.0;

    ConicSolution sol;
    SolveDiagnostics& diag = sol.diag;
    diag.status = SolveStatus::MaxIter;

    auto finish_optimal = [&] {
        sol.x = x / tau;
        sol.y = y / tau;
        sol.s = s / tau;
        sol.primal_objective = c.dot(sol.x);
        sol.dual_objective = b.dot(sol.y);
    };

    for (int iter = 0;; ++iter)
    {
        const Vec rp = tau * b - A * x;
        const Vec rd = tau * c - A.transpose() * y - s;
        const double cx = c.dot(x);
        const double by = b.dot(y);
        const double rg = kappa + cx - by;
        const double mu = (x.dot(s) + tau * kappa) / nu;

        const double pcost = cx / tau;
        const double dcost = by / tau;
        diag.iterations = iter;
        diag.primal_residual = rp.norm() / tau / bnorm;
        diag.dual_residual = rd.norm() / tau / cnorm;
        const double gap = std::max(x.dot(s) / (tau * tau), std::abs(pcost - dcost));
        diag.rel_gap = gap / (1.0 + std::min(std::abs(pcost), std::abs(dcost)));

        if (diag.primal_residual <= cfg.tol && diag.dual_residual <= cfg.tol && diag.rel_gap <= cfg.tol)
        {
            diag.status = SolveStatus::Optimal;
            finish_optimal();
            return sol;
        }
        if (kappa > tau)
        {
            const Vec ats = A.transpose() * y + s;
            if (by > 0.0 && ats.norm() / by <= cfg.tol * cnorm)
            {
                diag.status = SolveStatus::Infeasible;
                sol.x = Vec::Zero(nvar);
                sol.y = y / by;
                sol.s = s / by;
                return sol;
            }
            const Vec ax = A * x;
            if (cx < 0.0 && ax.norm() / -cx <= cfg.tol * bnorm)
            {
                diag.status = SolveStatus::Unbounded;
                sol.x = x / -cx;
                sol.y = Vec::Zero(A.rows());
                sol.s = Vec::Zero(nvar);
                return sol;
            }
        }
        if (iter >= cfg.max_iter)
        {
            finish_optimal();
            return sol;
        }

        const detail::NtScaling W(cones, x, s);
        const Vec lambda = W.apply(s);
        const Eigen::MatrixXd AW = W.scale_columns(A);
        Eigen::MatrixXd M = AW * AW.transpose();

        Eigen::LLT<Eigen::MatrixXd> llt(M);
        double ridge = 0.0;
        const double diag_scale = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
        while (llt.info() != Eigen::Success || !llt.matrixL().toDenseMatrix().diagonal().allFinite())
        {
            ridge = ridge == 0.0 ? 1e-14 * diag_scale : ridge * 100.0;
            if (ridge > 1e-2 * diag_scale)
            {
                break;
            }
            llt.compute(M + ridge * Eigen::MatrixXd::Identity(M.rows(), M.cols()));
        }

        // Applies W^2 to a vector.
        auto w2 = [&](const Vec& v) { return W.apply(W.apply(v)); };

        const Vec dy2 = llt.solve(b + A * w2(c));
        const Vec ds2 = c - A.transpose() * dy2;
        const Vec dx2 = -w2(ds2);
        const double tau_coef = c.dot(dx2) - b.dot(dy2) - kappa / tau;

        struct Direction
        {
            Vec dx, dy, ds;
            double dtau, dkappa;
        };

        auto solve_direction = [&](double eta, const Vec& rc, double rtau) {
            const Vec q = detail::jordan_solve(cones, lambda, rc);
            const Vec wq = W.apply(q);
            const Vec rhs = eta * rp + A * (eta * w2(rd) - wq);
            const Vec dy1 = llt.solve(rhs);
            const Vec ds1 = eta * rd - A.transpose() * dy1;
            const Vec dx1 = wq - w2(ds1);
            Direction d;
            d.dtau = (-eta * rg - rtau / tau - c.dot(dx1) + b.dot(dy1)) / tau_coef;
            d.dx = dx1 + d.dtau * dx2;
            d.dy = dy1 + d.dtau * dy2;
            d.ds = ds1 + d.dtau * ds2;
            d.dkappa = (rtau - kappa * d.dtau) / tau;
            return d;
        };

        auto step_length = [&](const Direction& d, double cap) {
            double alpha = cap;
            alpha = detail::max_step(cones, x, d.dx, alpha);
            alpha = detail::max_step(cones, s, d.ds, alpha);
            if (d.dtau < 0.0)
            {
                alpha = std::min(alpha, -tau / d.dtau);
            }
            if (d.dkappa < 0.0)
            {
                alpha = std::min(alpha, -kappa / d.dkappa);
            }
            return alpha;
        };

        // Predictor.
        const Vec lambda_sq = detail::jordan(cones, lambda, lambda);
        const Direction aff = solve_direction(1.0, -lambda_sq, -tau * kappa);
        const double alpha_aff = step_length(aff, 1.0);
        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

        // Corrector with second-order term.
        const Vec corr = detail::jordan(cones, W.apply(aff.dx, true), W.apply(aff.ds));
        const Vec rc = sigma * mu * e - lambda_sq - corr;
        const double rtau = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
        const Direction dir = solve_direction(1.0 - sigma, rc, rtau);
        const double alpha = std::min(1.0, 0.99 * step_length(dir, std::numeric_limits<double>::infinity()));

#ifdef COVBOUND_IPM_TRACE
        std::fprintf(stderr, "it %d mu %.3e tau %.3e kappa %.3e a_aff %.3e alpha %.3e ridge %.1e pres %.2e dres %.2e gap %.2e\n", iter, mu, tau,
                     kappa, alpha_aff, alpha, ridge, diag.primal_residual, diag.dual_residual, diag.rel_gap);
#endif
        if (!(alpha > 1e-12) || !dir.dx.allFinite() || !dir.dy.allFinite())
        {
            finish_optimal();
            return sol;
        }

        x += alpha * dir.dx;
        y += alpha * dir.dy;
        s += alpha * dir.ds;
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
    }
}

} // namespace covbound

#endif /* COVBOUND_CONIC_HPP */
