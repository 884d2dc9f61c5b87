///
/// \file core.hpp
///
/// Domain types for the covariance uncertainty problem: frequency bands and
/// their discretizations, trigonometric polynomials, and discrete measures.
///
/// Conventions: frequencies are dimensionless (cycles/sample) and lags are in
/// samples, so the complex exponential kernel is exp(i 2 pi theta tau).
///
#ifndef COVBOUND_CORE_HPP
#define COVBOUND_CORE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace covbound
{

using Complex = std::complex<double>;

enum class ErrorCode
{
    EmptyBand,
    MalformedInterval,
    BadStep,
    InvalidSpec,
    GridMismatch,
    InvalidPhase,
    MalformedProblem,
};

inline const char* to_string(ErrorCode code)
{
    switch (code)
    {
        case ErrorCode::EmptyBand:
            return "EmptyBand";
        case ErrorCode::MalformedInterval:
            return "MalformedInterval";
        case ErrorCode::BadStep:
            return "BadStep";
        case ErrorCode::InvalidSpec:
            return "InvalidSpec";
        case ErrorCode::GridMismatch:
            return "GridMismatch";
        case ErrorCode::InvalidPhase:
            return "InvalidPhase";
        case ErrorCode::MalformedProblem:
            return "MalformedProblem";
    }
    return "Unknown";
}

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), m_code(code)
    {
    }

    ErrorCode code() const noexcept
    {
        return m_code;
    }

private:
    ErrorCode m_code;
};

//------------------------------------------------------------------------------
// Bands
//------------------------------------------------------------------------------

struct Interval
{
    double lo;
    double hi;

    double length() const noexcept
    {
        return hi - lo;
    }

    friend bool operator==(const Interval&, const Interval&) = default;
};

///
/// A finite union of closed frequency intervals, stored sorted and disjoint.
/// Overlapping or touching inputs are merged; zero-length intervals are kept.
///
class FrequencyBand
{
public:
    static FrequencyBand make(std::vector<Interval> intervals)
    {
        if (intervals.empty())
        {
            throw Error(ErrorCode::EmptyBand, "frequency band needs at least one interval");
        }
        for (const auto& iv : intervals)
        {
            if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi))
            {
                throw Error(ErrorCode::MalformedInterval, "interval endpoints must be finite");
            }
            if (iv.lo > iv.hi)
            {
                throw Error(ErrorCode::MalformedInterval,
                            "interval has lo > hi: [" + std::to_string(iv.lo) + ", " +
                                std::to_string(iv.hi) + "]");
            }
        }
        std::sort(intervals.begin(), intervals.end(),
                  [](const Interval& a, const Interval& b) {
                      return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
                  });
        std::vector<Interval> merged;
        merged.reserve(intervals.size());
        for (const auto& iv : intervals)
        {
            if (!merged.empty() && iv.lo <= merged.back().hi)
            {
                merged.back().hi = std::max(merged.back().hi, iv.hi);
            }
            else
            {
                merged.push_back(iv);
            }
        }
        return FrequencyBand(std::move(merged));
    }

    const std::vector<Interval>& intervals() const noexcept
    {
        return m_intervals;
    }

    double total_length() const noexcept
    {
        double len = 0.0;
        for (const auto& iv : m_intervals)
        {
            len += iv.length();
        }
        return len;
    }

    bool contains(double theta) const noexcept
    {
        return std::any_of(m_intervals.begin(), m_intervals.end(),
                           [&](const Interval& iv) { return iv.lo <= theta && theta <= iv.hi; });
    }

    /// True iff the interval set is invariant under theta -> -theta.
    bool is_symmetric() const noexcept
    {
        const auto count = m_intervals.size();
        for (std::size_t i = 0; i < count; ++i)
        {
            const auto& a = m_intervals[i];
            const auto& b = m_intervals[count - 1 - i];
            if (a.lo != -b.hi || a.hi != -b.lo)
            {
                return false;
            }
        }
        return true;
    }

    /// The band translated by `offset` along the frequency axis.
    FrequencyBand shifted(double offset) const
    {
        std::vector<Interval> out = m_intervals;
        for (auto& iv : out)
        {
            iv.lo += offset;
            iv.hi += offset;
        }
        return make(std::move(out));
    }

    friend bool operator==(const FrequencyBand&, const FrequencyBand&) = default;

private:
    explicit FrequencyBand(std::vector<Interval> intervals) : m_intervals(std::move(intervals))
    {
    }

    std::vector<Interval> m_intervals;
};

inline FrequencyBand make_band(std::vector<Interval> intervals)
{
    return FrequencyBand::make(std::move(intervals));
}

//------------------------------------------------------------------------------
// Grids
//------------------------------------------------------------------------------

inline constexpr double default_grid_step = 1.0 / 2000.0;

///
/// Sampling of a band. Each interval [lo, hi] is split into N equal pieces,
/// N = ceil(length / step), endpoints included. Points are generated from
/// whichever endpoint is nearer, so that the grid of a symmetric band is
/// exactly symmetric in floating point.
///
class FrequencyGrid
{
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    FrequencyGrid(const FrequencyBand& band, double step) : m_band(band), m_step(step)
    {
        if (!(step > 0.0) || !std::isfinite(step))
        {
            throw Error(ErrorCode::BadStep, "grid step must be positive and finite");
        }
        for (std::size_t iv_index = 0; iv_index < band.intervals().size(); ++iv_index)
        {
            const auto& iv = band.intervals()[iv_index];
            const double width = iv.length();
            if (width == 0.0)
            {
                push(iv.lo, iv_index, 0.0);
                continue;
            }
            const double ratio = width / step;
            const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9 * ratio)));
            const double spacing = width / static_cast<double>(pieces);
            for (std::size_t j = 0; j <= pieces; ++j)
            {
                double theta;
                if (j == 0)
                {
                    theta = iv.lo;
                }
                else if (j == pieces)
                {
                    theta = iv.hi;
                }
                else if (2 * j <= pieces)
                {
                    theta = iv.lo + width * static_cast<double>(j) / static_cast<double>(pieces);
                }
                else
                {
                    theta = iv.hi - width * static_cast<double>(pieces - j) / static_cast<double>(pieces);
                }
                push(theta, iv_index, spacing);
            }
        }
        build_reflection();
    }

    const FrequencyBand& band() const noexcept
    {
        return m_band;
    }
    double step() const noexcept
    {
        return m_step;
    }
    std::size_t size() const noexcept
    {
        return m_points.size();
    }
    const std::vector<double>& points() const noexcept
    {
        return m_points;
    }
    double operator[](std::size_t j) const noexcept
    {
        return m_points[j];
    }
    /// Index of the band interval that point j belongs to.
    std::size_t interval_of(std::size_t j) const noexcept
    {
        return m_interval[j];
    }
    /// Actual spacing of the interval containing point j (0 for degenerate intervals).
    double spacing_at(std::size_t j) const noexcept
    {
        return m_spacing[j];
    }
    double max_spacing() const noexcept
    {
        double s = 0.0;
        for (double v : m_spacing)
        {
            s = std::max(s, v);
        }
        return s;
    }

    /// Index of the point at -theta_j, or npos if the grid has no such point.
    std::size_t reflection_of(std::size_t j) const noexcept
    {
        return m_reflection[j];
    }

    bool is_symmetric() const noexcept
    {
        return std::none_of(m_reflection.begin(), m_reflection.end(),
                            [](std::size_t r) { return r == npos; });
    }

private:
    void push(double theta, std::size_t iv_index, double spacing)
    {
        if (!m_points.empty() && theta <= m_points.back())
        {
            return;
        }
        m_points.push_back(theta);
        m_interval.push_back(iv_index);
        m_spacing.push_back(spacing);
    }

    void build_reflection()
    {
        const std::size_t count = m_points.size();
        m_reflection.assign(count, npos);
        // Points are sorted, so -theta_j is searched from the back.
        for (std::size_t j = 0; j < count; ++j)
        {
            const double target = -m_points[j];
            auto it = std::lower_bound(m_points.begin(), m_points.end(), target - 1e-13);
            if (it != m_points.end() && std::abs(*it - target) <= 1e-13)
            {
                m_reflection[j] = static_cast<std::size_t>(it - m_points.begin());
            }
        }
    }

    FrequencyBand m_band;
    double m_step;
    std::vector<double> m_points;
    std::vector<std::size_t> m_interval;
    std::vector<double> m_spacing;
    std::vector<std::size_t> m_reflection;
};

inline FrequencyGrid discretize(const FrequencyBand& band, double step = default_grid_step)
{
    return FrequencyGrid(band, step);
}

//------------------------------------------------------------------------------
// Problem specification
//------------------------------------------------------------------------------

/// One uncertainty query: band, largest specified lag n, query lag tau, total power.
struct ProblemSpec
{
    FrequencyBand band;
    int n = 0;
    double tau = 0.0;
    double sigma2 = 1.0;

    void validate() const
    {
        if (n < 0)
        {
            throw Error(ErrorCode::InvalidSpec, "n must be nonnegative");
        }
        if (!std::isfinite(tau))
        {
            throw Error(ErrorCode::InvalidSpec, "tau must be finite");
        }
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        {
            throw Error(ErrorCode::InvalidSpec, "sigma2 must be positive and finite");
        }
    }

    /// True when tau is one of the specified lags -n..n.
    bool tau_is_specified_lag() const noexcept
    {
        return tau == std::round(tau) && std::abs(tau) <= static_cast<double>(n);
    }
};

//------------------------------------------------------------------------------
// Kernel and trigonometric polynomials
//------------------------------------------------------------------------------

/// exp(i 2 pi theta tau)
inline Complex eval_kernel(double tau, double theta)
{
    return std::polar(1.0, 2.0 * std::numbers::pi * theta * tau);
}

inline constexpr double real_coefficient_rel_tol = 1e-6;

///
/// Q(theta) = sum_{k=-n}^{n} lambda_k exp(i 2 pi theta k), coefficients stored
/// at index k + n.
///
class TrigPolynomial
{
public:
    TrigPolynomial() = default;

    explicit TrigPolynomial(int degree)
        : m_degree(degree), m_coeffs(static_cast<std::size_t>(2 * degree + 1), Complex{})
    {
        if (degree < 0)
        {
            throw Error(ErrorCode::InvalidSpec, "polynomial degree must be nonnegative");
        }
    }

    TrigPolynomial(int degree, std::vector<Complex> coeffs) : m_degree(degree), m_coeffs(std::move(coeffs))
    {
        if (degree < 0 || m_coeffs.size() != static_cast<std::size_t>(2 * degree + 1))
        {
            throw Error(ErrorCode::InvalidSpec, "polynomial of degree n needs 2n+1 coefficients");
        }
    }

    /// The kernel g_k for an integer lag |k| <= degree, as a polynomial.
    static TrigPolynomial monomial(int degree, int k)
    {
        TrigPolynomial q(degree);
        q.coeff(k) = 1.0;
        return q;
    }

    int degree() const noexcept
    {
        return m_degree;
    }
    const std::vector<Complex>& coeffs() const noexcept
    {
        return m_coeffs;
    }
    Complex coeff(int k) const
    {
        return m_coeffs.at(static_cast<std::size_t>(k + m_degree));
    }
    Complex& coeff(int k)
    {
        return m_coeffs.at(static_cast<std::size_t>(k + m_degree));
    }

    Complex operator()(double theta) const
    {
        Complex sum{};
        for (int k = -m_degree; k <= m_degree; ++k)
        {
            sum += m_coeffs[static_cast<std::size_t>(k + m_degree)] * eval_kernel(static_cast<double>(k), theta);
        }
        return sum;
    }

    double max_abs_coeff() const noexcept
    {
        double m = 0.0;
        for (const auto& c : m_coeffs)
        {
            m = std::max(m, std::abs(c));
        }
        return m;
    }

    double max_abs_imag() const noexcept
    {
        double m = 0.0;
        for (const auto& c : m_coeffs)
        {
            m = std::max(m, std::abs(c.imag()));
        }
        return m;
    }

    bool is_real_coefficient(double rel_tol = real_coefficient_rel_tol) const noexcept
    {
        return max_abs_imag() <= rel_tol * (1.0 + max_abs_coeff());
    }

    /// Q*(theta) = conj(Q(-theta)); maps lambda_k to conj(lambda_k).
    TrigPolynomial conj_reflect() const
    {
        TrigPolynomial out = *this;
        for (auto& c : out.m_coeffs)
        {
            c = std::conj(c);
        }
        return out;
    }

private:
    int m_degree = 0;
    std::vector<Complex> m_coeffs{Complex{}};
};

inline Complex eval_poly(const TrigPolynomial& q, double theta)
{
    return q(theta);
}

//------------------------------------------------------------------------------
// Measures
//------------------------------------------------------------------------------

/// Nonnegative weight pair (mu, nu) on a common grid.
class DiscreteMeasurePair
{
public:
    DiscreteMeasurePair(FrequencyGrid grid, std::vector<double> mu, std::vector<double> nu)
        : m_grid(std::move(grid)), m_mu(std::move(mu)), m_nu(std::move(nu))
    {
        if (m_mu.size() != m_grid.size() || m_nu.size() != m_grid.size())
        {
            throw Error(ErrorCode::MalformedProblem, "measure weights must match grid size");
        }
        for (std::size_t j = 0; j < m_mu.size(); ++j)
        {
            if (!(m_mu[j] >= 0.0) || !(m_nu[j] >= 0.0))
            {
                throw Error(ErrorCode::MalformedProblem, "measure weights must be nonnegative");
            }
        }
    }

    const FrequencyGrid& grid() const noexcept
    {
        return m_grid;
    }
    const std::vector<double>& mu() const noexcept
    {
        return m_mu;
    }
    const std::vector<double>& nu() const noexcept
    {
        return m_nu;
    }

    double mu_mass() const noexcept
    {
        double s = 0.0;
        for (double w : m_mu)
        {
            s += w;
        }
        return s;
    }
    double nu_mass() const noexcept
    {
        double s = 0.0;
        for (double w : m_nu)
        {
            s += w;
        }
        return s;
    }
    double total_mass() const noexcept
    {
        return mu_mass() + nu_mass();
    }

private:
    FrequencyGrid m_grid;
    std::vector<double> m_mu;
    std::vector<double> m_nu;
};

/// r(tau) = sum_j exp(i 2 pi theta_j tau) w_j for a single weight vector.
inline Complex covariance_of(const FrequencyGrid& grid, const std::vector<double>& weights, double tau)
{
    Complex sum{};
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        sum += weights[j] * eval_kernel(tau, grid[j]);
    }
    return sum;
}

/// r_mu(tau) - r_nu(tau)
inline Complex covariance_at(const DiscreteMeasurePair& pair, double tau)
{
    Complex sum{};
    const auto& grid = pair.grid();
    for (std::size_t j = 0; j < grid.size(); ++j)
    {
        sum += (pair.mu()[j] - pair.nu()[j]) * eval_kernel(tau, grid[j]);
    }
    return sum;
}

/// Complex weights on a grid; the discrete stand-in for a complex measure.
class ComplexMeasure
{
public:
    explicit ComplexMeasure(FrequencyGrid grid)
        : m_grid(std::move(grid)), m_weights(m_grid.size(), Complex{})
    {
    }

    ComplexMeasure(FrequencyGrid grid, std::vector<Complex> weights)
        : m_grid(std::move(grid)), m_weights(std::move(weights))
    {
        if (m_weights.size() != m_grid.size())
        {
            throw Error(ErrorCode::MalformedProblem, "measure weights must match grid size");
        }
    }

    const FrequencyGrid& grid() const noexcept
    {
        return m_grid;
    }
    const std::vector<Complex>& weights() const noexcept
    {
        return m_weights;
    }

    double tv_norm() const noexcept
    {
        double s = 0.0;
        for (const auto& w : m_weights)
        {
            s += std::abs(w);
        }
        return s;
    }

    Complex moment(int k) const
    {
        return integrate([k](double theta) { return eval_kernel(static_cast<double>(k), theta); });
    }

    /// sum_j f(theta_j) w_j
    template <typename F>
    Complex integrate(F&& f) const
    {
        Complex sum{};
        for (std::size_t j = 0; j < m_grid.size(); ++j)
        {
            sum += f(m_grid[j]) * m_weights[j];
        }
        return sum;
    }

    /// Largest |moment(k)| over k = -n..n.
    double max_moment(int n) const
    {
        double m = 0.0;
        for (int k = -n; k <= n; ++k)
        {
            m = std::max(m, std::abs(moment(k)));
        }
        return m;
    }

    /// psi*(theta) = conj(psi(-theta)); requires a symmetric grid.
    ComplexMeasure conj_reflect() const
    {
        if (!m_grid.is_symmetric())
        {
            throw Error(ErrorCode::GridMismatch, "reflection needs a symmetric grid");
        }
        std::vector<Complex> out(m_weights.size());
        for (std::size_t j = 0; j < m_weights.size(); ++j)
        {
            out[j] = std::conj(m_weights[m_grid.reflection_of(j)]);
        }
        return ComplexMeasure(m_grid, std::move(out));
    }

    /// (psi + psi*) / 2
    ComplexMeasure symmetrized() const
    {
        const ComplexMeasure refl = conj_reflect();
        std::vector<Complex> out(m_weights.size());
        for (std::size_t j = 0; j < m_weights.size(); ++j)
        {
            out[j] = 0.5 * (m_weights[j] + refl.m_weights[j]);
        }
        return ComplexMeasure(m_grid, std::move(out));
    }

private:
    FrequencyGrid m_grid;
    std::vector<Complex> m_weights;
};

} // namespace covbound

#endif /* COVBOUND_CORE_HPP */
