// Independent reference computations used by the tests. Nothing here calls
// the solvers under test.
#ifndef COVBOUND_TESTS_ORACLES_HPP
#define COVBOUND_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace oracle
{

using Complex = std::complex<double>;

inline Complex kernel(double tau, double theta)
{
    const double a = 2.0 * std::numbers::pi * theta * tau;
    return {std::cos(a), std::sin(a)};
}

/// max_j |targets_j - c|
inline double sup_distance(const std::vector<Complex>& targets, Complex c)
{
    double worst = 0.0;
    for (const auto& t : targets)
    {
        worst = std::max(worst, std::abs(t - c));
    }
    return worst;
}

/// Best constant fit in the sup norm by coarse-to-fine search over a square
/// of candidate constants. Each round scans a 201x201 lattice and then shrinks
/// the window around the best candidate.
inline double constant_fit(const std::vector<Complex>& targets, double half_width = 2.0, int rounds = 5)
{
    Complex center{0.0, 0.0};
    double best = std::numeric_limits<double>::infinity();
    double w = half_width;
    for (int r = 0; r < rounds; ++r)
    {
        const int cells = 200;
        const double h = 2.0 * w / cells;
        Complex best_c = center;
        for (int a = 0; a <= cells; ++a)
        {
            for (int b = 0; b <= cells; ++b)
            {
                const Complex c = center + Complex(-w + a * h, -w + b * h);
                const double d = sup_distance(targets, c);
                if (d < best)
                {
                    best = d;
                    best_c = c;
                }
            }
        }
        center = best_c;
        w = 10.0 * h;
    }
    return best;
}

/// maximize c'x s.t. Ax = b, x >= 0 by enumerating every basis.
inline std::optional<double> lp_by_vertices(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                            const Eigen::VectorXd& c)
{
    const int m = static_cast<int>(A.rows());
    const int nv = static_cast<int>(A.cols());
    std::optional<double> best;
    std::vector<int> pick(nv, 0);
    std::fill(pick.begin(), pick.begin() + m, 1);
    std::sort(pick.begin(), pick.end());
    do
    {
        std::vector<int> cols;
        for (int j = 0; j < nv; ++j)
        {
            if (pick[j])
            {
                cols.push_back(j);
            }
        }
        Eigen::MatrixXd B(m, m);
        for (int k = 0; k < m; ++k)
        {
            B.col(k) = A.col(cols[k]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
        if (lu.rank() < m)
        {
            continue;
        }
        const Eigen::VectorXd xb = lu.solve(b);
        if (xb.minCoeff() < -1e-12)
        {
            continue;
        }
        double v = 0.0;
        for (int k = 0; k < m; ++k)
        {
            v += c[cols[k]] * xb[k];
        }
        if (!best || v > *best)
        {
            best = v;
        }
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

/// sum_j w_j exp(i 2 pi theta_j tau) computed term by term.
inline Complex transform(const std::vector<double>& theta, const std::vector<double>& w, double tau)
{
    Complex s{0.0, 0.0};
    for (std::size_t j = 0; j < theta.size(); ++j)
    {
        s += w[j] * kernel(tau, theta[j]);
    }
    return s;
}

inline Complex transform(const std::vector<double>& theta, const std::vector<Complex>& w, double tau)
{
    Complex s{0.0, 0.0};
    for (std::size_t j = 0; j < theta.size(); ++j)
    {
        s += w[j] * kernel(tau, theta[j]);
    }
    return s;
}

/// Sup of |g_tau - q| over a uniform sampling of each interval; q given by
/// coefficients for lags -n..n.
inline double residual_sup(const std::vector<Complex>& coeffs, double tau,
                           const std::vector<std::pair<double, double>>& intervals, double step)
{
    const int n = static_cast<int>(coeffs.size() / 2);
    double worst = 0.0;
    for (const auto& [lo, hi] : intervals)
    {
        const auto count = static_cast<long>(std::ceil((hi - lo) / step));
        for (long i = 0; i <= count; ++i)
        {
            const double theta = std::min(hi, lo + static_cast<double>(i) * step);
            Complex q{0.0, 0.0};
            for (int k = -n; k <= n; ++k)
            {
                q += coeffs[static_cast<std::size_t>(k + n)] * kernel(k, theta);
            }
            worst = std::max(worst, std::abs(kernel(tau, theta) - q));
        }
    }
    return worst;
}

} // namespace oracle

#endif /* COVBOUND_TESTS_ORACLES_HPP */
