#include <random>

#include <catch_amalgamated.hpp>

#include "covbound/conic_solver.hpp"
#include "oracles.hpp"

using namespace covbound;
using Catch::Matchers::WithinAbs;

namespace
{

MinimaxProblem kernel_targets(double tau, int n, const FrequencyGrid& grid, bool real_only = false)
{
    MinimaxProblem p;
    p.real_coefficients_only = real_only;
    p.basis.resize(static_cast<Eigen::Index>(grid.size()), 2 * n + 1);
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        p.targets.push_back(oracle::kernel(tau, grid[j]));
        for (int k = -n; k <= n; ++k)
        {
            p.basis(static_cast<Eigen::Index>(j), k + n) = oracle::kernel(k, grid[j]);
        }
    }
    return p;
}

double max_residual(const MinimaxProblem& p, const std::vector<Complex>& coeffs)
{
    double worst = 0.0;
    for (Eigen::Index j = 0; j < p.basis.rows(); ++j)
    {
        Complex fit{0.0, 0.0};
        for (Eigen::Index k = 0; k < p.basis.cols(); ++k)
        {
            fit += p.basis(j, k) * coeffs[static_cast<std::size_t>(k)];
        }
        worst = std::max(worst, std::abs(p.targets[static_cast<std::size_t>(j)] - fit));
    }
    return worst;
}

} // namespace

TEST_CASE("minimax: single point interpolation", "[conic][minimax]")
{
    MinimaxProblem p;
    p.targets = {Complex(1.0, 0.0)};
    p.basis = Eigen::MatrixXcd::Ones(1, 1);
    const auto r = solve_minimax(p);
    REQUIRE(r.diag.optimal());
    CHECK(r.t_star < 1e-7);
    CHECK(std::abs(r.coeffs[0] - 1.0) < 1e-7);
}

TEST_CASE("minimax: kernels at specified lags are fitted exactly", "[conic][minimax]")
{
    const auto grid = discretize(make_band({{-0.3, 0.3}}), 0.005);
    for (int n : {1, 3})
    {
        for (int k = -n; k <= n; ++k)
        {
            const auto r = solve_minimax(kernel_targets(k, n, grid));
            REQUIRE(r.diag.optimal());
            CHECK(r.t_star < 1e-7);
        }
    }
}

TEST_CASE("minimax: constant fit matches brute force", "[conic][minimax][oracle]")
{
    const auto grid = discretize(make_band({{-0.25, 0.25}}), 1e-3);
    const auto p = kernel_targets(1.0, 0, grid);
    const auto r = solve_minimax(p);
    REQUIRE(r.diag.optimal());
    const double brute = oracle::constant_fit(p.targets);
    CHECK_THAT(r.t_star, WithinAbs(brute, 1e-3));
    CHECK_THAT(r.t_star, WithinAbs(1.0, 1e-6));
}

TEST_CASE("minimax: random constant fits match brute force", "[conic][minimax][oracle]")
{
    std::mt19937 rng(17);
    std::normal_distribution<double> g(0.0, 0.6);
    for (int trial = 0; trial < 5; ++trial)
    {
        MinimaxProblem p;
        const int m = 12;
        p.basis = Eigen::MatrixXcd::Ones(m, 1);
        for (int j = 0; j < m; ++j)
        {
            p.targets.emplace_back(g(rng), g(rng));
        }
        const auto r = solve_minimax(p);
        REQUIRE(r.diag.optimal());
        CHECK_THAT(r.t_star, WithinAbs(oracle::constant_fit(p.targets), 1e-5));
    }
}

TEST_CASE("minimax: weak duality and certificate structure", "[conic][minimax][property]")
{
    const auto grid = discretize(make_band({{-0.3, -0.1}, {0.05, 0.3}}), 0.002);
    for (double tau : {0.5, 2.7, 4.3, 6.9})
    {
        const auto p = kernel_targets(tau, 3, grid);
        const auto r = solve_minimax(p);
        REQUIRE(r.diag.optimal());
        CHECK_THAT(r.t_star, WithinAbs(max_residual(p, r.coeffs), 1e-12));

        double tv = 0.0;
        Complex value{0.0, 0.0};
        Eigen::VectorXcd moments = Eigen::VectorXcd::Zero(p.basis.cols());
        for (std::size_t j = 0; j < grid.size(); ++j)
        {
            const Complex w = r.dual_weights[j];
            tv += std::abs(w);
            value += p.targets[j] * w;
            moments += p.basis.row(static_cast<Eigen::Index>(j)).transpose() * w;
        }
        CHECK(tv <= 1.0 + 1e-6);
        CHECK(moments.cwiseAbs().maxCoeff() < 1e-6);
        // Any feasible dual value is a lower bound; the optimum closes the gap.
        CHECK(value.real() <= r.t_star + 1e-8);
        CHECK(r.t_star - value.real() < 1e-6);
    }
}

TEST_CASE("minimax: real restriction is lossless on conjugate-symmetric data", "[conic][minimax][property]")
{
    const auto grid = discretize(make_band({{-0.3, 0.3}}), 0.002);
    for (double tau : {0.7, 3.4, 5.5})
    {
        const auto full = solve_minimax(kernel_targets(tau, 3, grid, false));
        const auto real = solve_minimax(kernel_targets(tau, 3, grid, true));
        REQUIRE(full.diag.optimal());
        REQUIRE(real.diag.optimal());
        CHECK(std::abs(full.t_star - real.t_star) <= 2e-8 * (1.0 + full.t_star));
        for (const auto& c : real.coeffs)
        {
            CHECK(c.imag() == 0.0);
        }
    }
}

TEST_CASE("minimax: unimodular rotation of targets", "[conic][minimax][property]")
{
    const auto grid = discretize(make_band({{-0.3, -0.1}, {0.05, 0.3}}), 0.004);
    auto p = kernel_targets(3.3, 2, grid);
    const auto base = solve_minimax(p);
    const Complex rot = std::polar(1.0, 0.77);
    for (auto& t : p.targets)
    {
        t *= rot;
    }
    const auto turned = solve_minimax(p);
    REQUIRE(turned.diag.optimal());
    CHECK(std::abs(turned.t_star - base.t_star) < 1e-7);
    std::vector<Complex> rotated(base.coeffs);
    for (auto& c : rotated)
    {
        c *= rot;
    }
    CHECK(std::abs(max_residual(p, rotated) - base.t_star) < 1e-10);
}

TEST_CASE("minimax: identical inputs give identical outputs", "[conic][minimax][property]")
{
    const auto grid = discretize(make_band({{-0.3, 0.3}}), 0.004);
    const auto p = kernel_targets(4.6, 3, grid);
    const auto a = solve_minimax(p);
    const auto b = solve_minimax(p);
    CHECK(a.t_star == b.t_star);
    CHECK(a.coeffs == b.coeffs);
    CHECK(a.dual_weights == b.dual_weights);
}

TEST_CASE("minimax: malformed problems are rejected", "[conic][minimax]")
{
    MinimaxProblem p;
    CHECK_THROWS_AS(solve_minimax(p), Error);
    p.targets = {Complex(1.0, 0.0), Complex(0.0, 1.0)};
    p.basis = Eigen::MatrixXcd::Ones(3, 1);
    CHECK_THROWS_AS(solve_minimax(p), Error);
}

TEST_CASE("lp examples", "[conic][lp]")
{
    LinearProgram lp;
    lp.objective = Eigen::Vector2d(1.0, 0.0);
    lp.A = Eigen::RowVector2d(1.0, 1.0);
    lp.b = Eigen::VectorXd::Ones(1);
    const auto r = solve_lp(lp);
    REQUIRE(r.diag.optimal());
    CHECK_THAT(r.value, WithinAbs(1.0, 1e-8));
    CHECK_THAT(r.x[0], WithinAbs(1.0, 1e-7));
    CHECK_THAT(r.x[1], WithinAbs(0.0, 1e-7));

    LinearProgram bad;
    bad.objective = Eigen::VectorXd::Ones(1);
    bad.A = Eigen::MatrixXd::Ones(1, 1);
    bad.b = -Eigen::VectorXd::Ones(1);
    CHECK(solve_lp(bad).diag.status == SolveStatus::Infeasible);

    LinearProgram open;
    open.objective = Eigen::Vector2d(1.0, 0.0);
    open.A = Eigen::RowVector2d(1.0, -1.0);
    open.b = Eigen::VectorXd::Zero(1);
    CHECK(solve_lp(open).diag.status == SolveStatus::Unbounded);
}

TEST_CASE("lp matches vertex enumeration", "[conic][lp][oracle]")
{
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> pos(0.1, 1.0);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 25; ++trial)
    {
        LinearProgram lp;
        lp.A.resize(3, 5);
        for (Eigen::Index i = 0; i < 3; ++i)
        {
            for (Eigen::Index j = 0; j < 5; ++j)
            {
                lp.A(i, j) = pos(rng);
            }
        }
        Eigen::VectorXd x0(5);
        for (Eigen::Index j = 0; j < 5; ++j)
        {
            x0[j] = pos(rng);
        }
        lp.b = lp.A * x0;
        lp.objective.resize(5);
        for (Eigen::Index j = 0; j < 5; ++j)
        {
            lp.objective[j] = g(rng);
        }
        const auto r = solve_lp(lp);
        const auto best = oracle::lp_by_vertices(lp.A, lp.b, lp.objective);
        REQUIRE(best.has_value());
        REQUIRE(r.diag.optimal());
        CHECK_THAT(r.value, WithinAbs(*best, 1e-8));
        CHECK((lp.A * r.x - lp.b).norm() < 1e-7);
    }
}

TEST_CASE("lp rejects inconsistent dimensions", "[conic][lp]")
{
    LinearProgram lp;
    lp.objective = Eigen::VectorXd::Ones(3);
    lp.A = Eigen::MatrixXd::Ones(1, 2);
    lp.b = Eigen::VectorXd::Ones(1);
    CHECK_THROWS_AS(solve_lp(lp), Error);
}

TEST_CASE("conic core: second-order cone problem", "[conic][core]")
{
    // min x0 s.t. x1 = 3, x2 = 4, (x0, x1, x2) in Q^3  ->  x0 = 5
    ConicProblem cp;
    cp.cones.soc = {3};
    cp.A = Eigen::MatrixXd::Zero(2, 3);
    cp.A(0, 1) = 1.0;
    cp.A(1, 2) = 1.0;
    cp.b = Eigen::Vector2d(3.0, 4.0);
    cp.c = Eigen::Vector3d(1.0, 0.0, 0.0);
    const auto sol = solve_conic(cp);
    REQUIRE(sol.diag.optimal());
    CHECK_THAT(sol.primal_objective, WithinAbs(5.0, 1e-7));
    CHECK_THAT(sol.dual_objective, WithinAbs(5.0, 1e-7));
    CHECK(sol.diag.rel_gap <= 1e-8);
    CHECK(sol.diag.primal_residual <= 1e-8);
    CHECK(sol.diag.dual_residual <= 1e-8);
}

TEST_CASE("Nesterov-Todd scaling maps s to x", "[conic][core][property]")
{
    std::mt19937 rng(8);
    std::normal_distribution<double> g;
    ConeDims cones;
    cones.nonneg = 3;
    cones.soc = {3, 4};
    const auto n = static_cast<Eigen::Index>(cones.total());
    for (int trial = 0; trial < 20; ++trial)
    {
        Eigen::VectorXd x(n), s(n);
        for (Eigen::Index i = 0; i < 3; ++i)
        {
            x[i] = std::exp(g(rng));
            s[i] = std::exp(g(rng));
        }
        for (auto [off, dim] : {std::pair<Eigen::Index, Eigen::Index>{3, 3}, {6, 4}})
        {
            for (Eigen::Index i = 1; i < dim; ++i)
            {
                x[off + i] = g(rng);
                s[off + i] = g(rng);
            }
            x[off] = x.segment(off + 1, dim - 1).norm() + std::exp(g(rng));
            s[off] = s.segment(off + 1, dim - 1).norm() + std::exp(g(rng));
        }
        const detail::NtScaling W(cones, x, s);
        const Eigen::VectorXd ws = W.apply(s);
        const Eigen::VectorXd wix = W.apply(x, true);
        REQUIRE((ws - wix).norm() <= 1e-10 * (1.0 + ws.norm()));
        REQUIRE((W.apply(ws) - x).norm() <= 1e-10 * (1.0 + x.norm()));
    }
}
