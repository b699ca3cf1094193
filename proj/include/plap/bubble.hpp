#pragma once

/**
 * @file bubble.hpp
 * @brief Aubin–Talenti bubbles, cutoff test functions and the bubble PDE residual.
 *
 *     δ_{a,λ}(x) = ( λ^{p-1} / (1 + λ^p |x-a|^{p/(p-1)}) )^{(n-p)/p}
 *
 * All derivatives are analytic. The radial helpers take ρ = |x - a| and are
 * what the quadratures call in their inner loops.
 */

#include "plap/special_constants.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace plap {

struct BubbleParams {
    ProblemParams params;
    std::vector<double> center; ///< concentration point a ∈ ℝⁿ
    double lambda = 1.0;

    BubbleParams() = default;
    BubbleParams(ProblemParams pp, std::vector<double> a, double lam)
        : params(pp), center(std::move(a)), lambda(lam)
    {
        validate();
    }

    void validate() const
    {
        params.validate();
        if (!(lambda > 0.0)) throw std::invalid_argument("BubbleParams: lambda must be > 0");
        if (static_cast<int>(center.size()) != params.n)
            throw std::invalid_argument("BubbleParams: center dimension must equal n");
    }

    /// Length scale λ^{-(p-1)} of the concentration.
    [[nodiscard]] double length_scale() const { return std::pow(lambda, -(params.p - 1.0)); }
};

/// Radial profile δ(ρ).
inline double delta_radial(double rho, const BubbleParams& b)
{
    const double p = b.params.p;
    const int n = b.params.n;
    const double t = std::pow(b.lambda, p) * std::pow(rho, p / (p - 1.0));
    return std::pow(b.lambda, (p - 1.0) * (n - p) / p) * std::pow(1.0 + t, -(n - p) / p);
}

/// dδ/dρ (≤ 0).
inline double delta_prime_radial(double rho, const BubbleParams& b)
{
    const double p = b.params.p;
    const int n = b.params.n;
    const double k = (n - p) / (p - 1.0);
    const double lp = std::pow(b.lambda, p);
    const double t = lp * std::pow(rho, p / (p - 1.0));
    return -k * std::pow(b.lambda, (p - 1.0) * (n - p) / p) * lp * std::pow(rho, 1.0 / (p - 1.0)) *
           std::pow(1.0 + t, -double(n) / p);
}

/// |∇δ|^p at radius ρ in closed form.
inline double grad_delta_pnorm_radial(double rho, const BubbleParams& b)
{
    const double p = b.params.p;
    const int n = b.params.n;
    const double k = (n - p) / (p - 1.0);
    const double q = p / (p - 1.0);
    const double rq = std::pow(rho, q);
    const double t = std::pow(b.lambda, p) * rq;
    return std::pow(k, p) * std::pow(b.lambda, n * (p - 1.0) + p) * rq * std::pow(1.0 + t, -n);
}

namespace detail {
inline double distance(std::span<const double> x, std::span<const double> a)
{
    if (x.size() != a.size()) throw std::invalid_argument("point dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - a[i]) * (x[i] - a[i]);
    return std::sqrt(s);
}
} // namespace detail

inline double delta(std::span<const double> x, const BubbleParams& b)
{
    return delta_radial(detail::distance(x, b.center), b);
}

inline double grad_delta_pnorm(std::span<const double> x, const BubbleParams& b)
{
    return grad_delta_pnorm_radial(detail::distance(x, b.center), b);
}

/// ∇δ at x; zero at the center.
inline std::vector<double> grad_delta(std::span<const double> x, const BubbleParams& b)
{
    const double rho = detail::distance(x, b.center);
    std::vector<double> g(x.size(), 0.0);
    if (rho == 0.0) return g;
    const double d = delta_prime_radial(rho, b) / rho;
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = d * (x[i] - b.center[i]);
    return g;
}

// ----------------------------------------------------------------------------
// Cutoff
// ----------------------------------------------------------------------------

/// ψ = 1 on ρ < r/2, ψ = 0 on ρ > r, polynomial smoothstep in between.
struct CutoffSpec {
    double radius = 0.9;
    int order = 2; ///< continuous derivatives at the junctions: 1 (cubic) or 2 (quintic)

    void validate() const
    {
        if (!(radius > 0.0)) throw std::invalid_argument("CutoffSpec: radius must be > 0");
        if (order != 1 && order != 2) throw std::invalid_argument("CutoffSpec: order must be 1 or 2");
    }

    [[nodiscard]] double value(double rho) const
    {
        const double t = (rho - 0.5 * radius) / (0.5 * radius);
        if (t <= 0.0) return 1.0;
        if (t >= 1.0) return 0.0;
        const double s = order == 1 ? t * t * (3.0 - 2.0 * t)
                                    : t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
        return std::clamp(1.0 - s, 0.0, 1.0);
    }

    [[nodiscard]] double derivative(double rho) const
    {
        const double t = (rho - 0.5 * radius) / (0.5 * radius);
        if (t <= 0.0 || t >= 1.0) return 0.0;
        const double ds = order == 1 ? 6.0 * t * (1.0 - t) : 30.0 * t * t * (1.0 - t) * (1.0 - t);
        return -ds / (0.5 * radius);
    }
};

struct TestFunctionValue {
    double value = 0.0;
    std::vector<double> gradient;
};

/// U = ψδ and ∇U = ψ∇δ + δ∇ψ, cutoff centered at the bubble center.
inline TestFunctionValue test_function(std::span<const double> x, const BubbleParams& b,
                                       const CutoffSpec& cut)
{
    const double rho = detail::distance(x, b.center);
    TestFunctionValue out;
    out.gradient.assign(x.size(), 0.0);
    const double psi = cut.value(rho);
    if (psi == 0.0 && cut.derivative(rho) == 0.0) return out;
    const double d = delta_radial(rho, b);
    out.value = psi * d;
    if (rho == 0.0) return out;
    const double radial = psi * delta_prime_radial(rho, b) + d * cut.derivative(rho);
    for (std::size_t i = 0; i < x.size(); ++i) out.gradient[i] = radial * (x[i] - b.center[i]) / rho;
    return out;
}

/// Radial U(ρ) and |∇U|(ρ) for a bubble-centered cutoff.
struct RadialTestFunction {
    double value;
    double grad_norm;
};

inline RadialTestFunction test_function_radial(double rho, const BubbleParams& b, const CutoffSpec& cut)
{
    const double psi = cut.value(rho);
    const double dpsi = cut.derivative(rho);
    if (psi == 0.0 && dpsi == 0.0) return {0.0, 0.0};
    const double d = delta_radial(rho, b);
    return {psi * d, std::abs(psi * delta_prime_radial(rho, b) + d * dpsi)};
}

// ----------------------------------------------------------------------------
// PDE residual
// ----------------------------------------------------------------------------

struct ResidualSample {
    double radius;
    double residual; ///< -Δ_p δ - n k^{p-1} δ^{p*-1}
    double relative; ///< residual / (n k^{p-1} δ^{p*-1})
};

/// Residual of −Δ_p δ = n((n−p)/(p−1))^{p−1} δ^{p*−1} along radii, with the
/// flux |δ'|^{p-2}δ' analytic and its outer derivative by central differences
/// of step h. Radii must exceed 10^{-3} λ^{-(p-1)} and 2h.
inline std::vector<ResidualSample> pde_residual(std::span<const double> radii, const BubbleParams& b,
                                                double h = 1e-4)
{
    b.validate();
    if (!(h > 0.0)) throw std::invalid_argument("pde_residual: step must be > 0");
    const int n = b.params.n;
    const double p = b.params.p;
    const double k = b.params.k();
    const double ps = b.params.p_star();
    const double rmin = 1e-3 * b.length_scale();
    auto flux = [&](double r) {
        const double d = delta_prime_radial(r, b);
        return std::pow(std::abs(d), p - 2.0) * d;
    };
    std::vector<ResidualSample> out;
    out.reserve(radii.size());
    for (double r : radii) {
        if (!(r > 0.0)) throw std::invalid_argument("pde_residual: radius must be > 0");
        if (r < rmin) throw std::invalid_argument("pde_residual: radius below 1e-3 * lambda^{-(p-1)}");
        if (r <= 2.0 * h) throw std::invalid_argument("pde_residual: radius must exceed 2h");
        const double dflux = (flux(r + h) - flux(r - h)) / (2.0 * h);
        const double lhs = -dflux - (n - 1.0) / r * flux(r);
        const double rhs = n * std::pow(k, p - 1.0) * std::pow(delta_radial(r, b), ps - 1.0);
        out.push_back({r, lhs - rhs, (lhs - rhs) / rhs});
    }
    return out;
}

} // namespace plap
