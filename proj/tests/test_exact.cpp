#include <catch_amalgamated.hpp>

#include "covbound/exact.hpp"
#include "oracles.hpp"

using namespace covbound;
using Catch::Matchers::WithinAbs;

namespace
{

const FrequencyBand interval_band = make_band({{-0.3, 0.3}});
const FrequencyBand split_band = make_band({{-0.3, -0.1}, {0.05, 0.3}});

ExactConfig phases(std::size_t p, std::size_t jobs = 0)
{
    ExactConfig c;
    c.num_phases = p;
    c.jobs = jobs;
    return c;
}

/// Witness check done by direct summation over the returned weights.
void check_witness(const ProblemSpec& spec, const PhaseSweepResult& sw)
{
    const auto& pair = sw.pair0;
    const auto& pts = pair.grid().points();
    for (int k = 0; k <= spec.n; ++k)
    {
        const Complex d = oracle::transform(pts, pair.mu(), k) - oracle::transform(pts, pair.nu(), k);
        CHECK(std::abs(d) <= 1e-6);
    }
    const Complex at_tau = oracle::transform(pts, pair.mu(), spec.tau) - oracle::transform(pts, pair.nu(), spec.tau);
    CHECK(std::abs(at_tau) >= sw.value - 1e-6);
    CHECK_THAT(pair.total_mass(), WithinAbs(2.0 * spec.sigma2, 1e-6));
    CHECK_THAT(pair.mu_mass(), WithinAbs(spec.sigma2, 1e-6));
    CHECK_THAT(pair.nu_mass(), WithinAbs(spec.sigma2, 1e-6));
}

} // namespace

TEST_CASE("fixed phase: specified lag gives zero", "[exact][phase]")
{
    const auto grid = discretize(interval_band, 0.002);
    for (double arg : {0.0, 0.9, 2.2})
    {
        const auto r = solve_fixed_phase(ProblemSpec{interval_band, 1, 1.0, 1.0}, grid, std::polar(1.0, arg));
        REQUIRE(r.diag.optimal());
        CHECK(std::abs(r.value) < 1e-7);
    }
}

TEST_CASE("fixed phase: constants only on a quarter arc", "[exact][phase][oracle]")
{
    // For phi = 1 the best is mu at theta = 0 (Re g = 1) and nu at an endpoint
    // (Re g = 0), each carrying sigma^2.
    const auto band = make_band({{-0.25, 0.25}});
    const auto r = solve_fixed_phase(ProblemSpec{band, 0, 1.0, 1.0}, discretize(band, 0.005), Complex(1.0, 0.0));
    REQUIRE(r.diag.optimal());
    CHECK_THAT(r.value, WithinAbs(1.0, 1e-7));
}

TEST_CASE("fixed phase: value never exceeds total power", "[exact][phase][property]")
{
    const auto grid = discretize(split_band, 0.002);
    for (double s2 : {1.0, 3.5})
    {
        for (double arg : {0.3, 1.7, 2.9})
        {
            for (double tau : {2.4, 6.6})
            {
                const auto r = solve_fixed_phase(ProblemSpec{split_band, 2, tau, s2}, grid, std::polar(1.0, arg));
                CHECK(r.value <= 2.0 * s2 + 1e-7);
            }
        }
    }
}

TEST_CASE("fixed phase: phase must be unimodular", "[exact][phase]")
{
    const auto grid = discretize(interval_band, 0.01);
    try
    {
        solve_fixed_phase(ProblemSpec{interval_band, 1, 1.5, 1.0}, grid, Complex(0.5, 0.0));
        FAIL("expected InvalidPhase");
    }
    catch (const Error& e)
    {
        CHECK(e.code() == ErrorCode::InvalidPhase);
    }
}

TEST_CASE("phase sweep: zero at specified lags", "[exact][sweep]")
{
    const auto grid = discretize(split_band, 0.002);
    const auto sw = phase_sweep(ProblemSpec{split_band, 3, 2.0, 1.0}, grid, phases(24));
    for (const auto& [phi, v] : sw.per_phase_values)
    {
        CHECK(std::abs(v) < 1e-7);
    }
}

TEST_CASE("phase sweep: invariants and witness", "[exact][sweep][property]")
{
    for (const auto& band : {interval_band, split_band})
    {
        const auto grid = discretize(band, 0.001);
        for (double tau : {1.5, 4.3, 7.0})
        {
            const ProblemSpec spec{band, 3, tau, 1.7};
            const auto sw = phase_sweep(spec, grid, phases(90));
            REQUIRE(sw.diag.optimal());
            CHECK(std::abs(std::abs(sw.phi0) - 1.0) <= 1e-12);
            double best = -1.0;
            for (const auto& [phi, v] : sw.per_phase_values)
            {
                best = std::max(best, v);
            }
            CHECK(sw.value == best);
            check_witness(spec, sw);
        }
    }
}

TEST_CASE("phase sweep stays below the bound", "[exact][sweep][property]")
{
    for (const auto& band : {interval_band, split_band})
    {
        const auto grid = discretize(band, 0.001);
        for (int n : {2, 3})
        {
            for (double tau : {0.5, 3.3, 5.2, 7.0})
            {
                const ProblemSpec spec{band, n, tau, 1.0};
                BoundConfig bc;
                bc.cross_check_dual = false;
                const double ub = upper_bound(spec, grid, bc).bound;
                const double lb = phase_sweep(spec, grid, phases(60)).value;
                CHECK(lb <= ub + cross_tolerance(spec));
            }
        }
    }
}

TEST_CASE("phase sweep on the interval band meets the bound", "[exact][sweep]")
{
    const ProblemSpec spec{interval_band, 3, 1.5, 1.0};
    const auto grid = discretize(interval_band);
    const auto g = gap(spec, grid);
    REQUIRE(g.diag.optimal());
    CHECK(g.gap >= -cross_tolerance(spec));
    CHECK(g.gap <= sharpness_tolerance(spec));
}

TEST_CASE("phase sweep: conjugate phases give equal values on symmetric bands", "[exact][sweep][property]")
{
    const auto grid = discretize(interval_band, 0.002);
    const std::size_t P = 36;
    const auto sw = phase_sweep(ProblemSpec{interval_band, 3, 4.3, 1.0}, grid, phases(P));
    // conj(phi_i) = -phi_{P-i}, and negating phi swaps mu and nu.
    for (std::size_t i = 1; i < P; ++i)
    {
        CHECK(std::abs(sw.per_phase_values[i].second - sw.per_phase_values[P - i].second) <= 1e-7);
    }
}

TEST_CASE("phase sweep: doubling the phase count never lowers the value", "[exact][sweep][property]")
{
    const auto grid = discretize(split_band, 0.002);
    for (double tau : {2.6, 6.3})
    {
        const ProblemSpec spec{split_band, 3, tau, 1.0};
        double prev = -1.0;
        for (std::size_t p : {15, 30, 60, 120})
        {
            const double v = phase_sweep(spec, grid, phases(p)).value;
            CHECK(v >= prev - 1e-8);
            prev = v;
        }
    }
}

TEST_CASE("phase sweep: more constraints never raise the value", "[exact][sweep][property]")
{
    const auto grid = discretize(split_band, 0.002);
    for (double tau : {3.7, 6.9})
    {
        double prev = 3.0;
        for (int n = 0; n <= 4; ++n)
        {
            const double v = phase_sweep(ProblemSpec{split_band, n, tau, 1.0}, grid, phases(45)).value;
            CHECK(v <= prev + 1e-7);
            prev = v;
        }
    }
}

TEST_CASE("phase sweep: result does not depend on thread count", "[exact][sweep][property]")
{
    const auto grid = discretize(split_band, 0.002);
    const ProblemSpec spec{split_band, 3, 5.1, 1.0};
    const auto a = phase_sweep(spec, grid, phases(40, 1));
    const auto b = phase_sweep(spec, grid, phases(40, 4));
    CHECK(a.value == b.value);
    CHECK(a.phi0 == b.phi0);
    CHECK(a.pair0.mu() == b.pair0.mu());
    CHECK(a.per_phase_values == b.per_phase_values);
}

TEST_CASE("gap vanishes at specified lags", "[exact][gap]")
{
    const auto grid = discretize(split_band, 0.002);
    for (int k : {0, 1, 3})
    {
        const ProblemSpec spec{split_band, 3, double(k), 1.0};
        const auto g = gap(spec, grid, phases(12));
        CHECK(std::abs(g.gap) <= cross_tolerance(spec));
    }
}
