#pragma once

/**
 * @file special_constants.hpp
 * @brief Universal constants of the critical mixed-boundary p-Laplacian problem.
 *
 * Every constant reduces to a radial improper integral
 *
 *     R(s, q, m) = ∫₀^∞ r^{s-1} (1 + r^q)^{-m} dr,
 *
 * which converges iff s > 0 and q·m > s, and diverges logarithmically when
 * q·m = s. Classification is done from the exponents, never numerically.
 * Throughout, q = p/(p-1) and k = (n-p)/(p-1).
 */

#include "plap/errors.hpp"
#include "plap/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

namespace plap {

/// Dimension n and exponent p of the problem; p* = np/(n-p).
struct ProblemParams {
    int n = 3;
    double p = 1.5;

    ProblemParams() = default;
    ProblemParams(int n_, double p_) : n(n_), p(p_) { validate(); }

    void validate() const
    {
        if (n < 2) throw std::invalid_argument("ProblemParams: n must be >= 2");
        if (!(p > 1.0 && p < n)) {
            std::ostringstream os;
            os << "ProblemParams: need 1 < p < n, got n=" << n << " p=" << p;
            throw std::invalid_argument(os.str());
        }
    }

    [[nodiscard]] double p_star() const { return n * p / (n - p); }
    [[nodiscard]] double q() const { return p / (p - 1.0); }   ///< bubble profile exponent
    [[nodiscard]] double k() const { return (n - p) / (p - 1.0); }
    /// Marginal exponent (n+1)/2 where c₁ turns log-divergent.
    [[nodiscard]] double p_marginal() const { return 0.5 * (n + 1); }
};

struct RadialIntegralSpec {
    double s = 1.0;
    double q = 1.0;
    double m = 1.0;
};

enum class Convergence { convergent, log_divergent, divergent };

inline const char* to_string(Convergence c)
{
    switch (c) {
    case Convergence::convergent: return "convergent";
    case Convergence::log_divergent: return "log-divergent";
    case Convergence::divergent: return "divergent";
    }
    return "?";
}

/// Exponent-arithmetic classification of R(s, q, m).
inline Convergence classify(const RadialIntegralSpec& spec)
{
    if (!(spec.s > 0.0) || !(spec.q > 0.0)) return Convergence::divergent;
    const double qm = spec.q * spec.m;
    const double scale = std::max({std::abs(qm), std::abs(spec.s), 1.0});
    if (std::abs(qm - spec.s) <= 64.0 * std::numeric_limits<double>::epsilon() * scale)
        return Convergence::log_divergent;
    return qm > spec.s ? Convergence::convergent : Convergence::divergent;
}

/// Surface measure of the unit sphere in ℝ^d: 2π^{d/2}/Γ(d/2). For d = 1 this is 2.
inline double sphere_area(int d)
{
    if (d <= 0) throw std::invalid_argument("sphere_area: dimension must be >= 1");
    return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

inline QuadResult radial_integral_result(const RadialIntegralSpec& spec, const QuadratureConfig& cfg)
{
    switch (classify(spec)) {
    case Convergence::log_divergent: {
        std::ostringstream os;
        os << "radial integral log-divergent: q*m = s = " << spec.s;
        throw LogDivergent(os.str());
    }
    case Convergence::divergent: {
        std::ostringstream os;
        os << "radial integral divergent: s=" << spec.s << " q*m=" << spec.q * spec.m;
        throw DivergentIntegral(os.str());
    }
    case Convergence::convergent: break;
    }
    const double s = spec.s, q = spec.q, m = spec.m;
    auto f = [s, q, m](double r) {
        if (r <= 0.0) return 0.0;
        return std::exp((s - 1.0) * std::log(r) - m * std::log1p(std::pow(r, q)));
    };
    return integrate_half_line(f, s, q * m - s, cfg.abs_tol, cfg.rel_tol, cfg.max_intervals);
}

/// ∫₀^∞ r^{s-1}(1 + r^q)^{-m} dr. Throws DivergentIntegral / LogDivergent.
inline double radial_integral(const RadialIntegralSpec& spec, const QuadratureConfig& cfg = {})
{
    return radial_integral_result(spec, cfg).value;
}

/// Closed form B(s/q, m - s/q)/q of a convergent radial integral.
inline double radial_integral_closed_form(const RadialIntegralSpec& spec)
{
    if (classify(spec) != Convergence::convergent) throw DivergentIntegral("closed form needs a convergent integral");
    return std::beta(spec.s / spec.q, spec.m - spec.s / spec.q) / spec.q;
}

// ----------------------------------------------------------------------------
// Named constants
// ----------------------------------------------------------------------------

/// Σ over the half-space ℝⁿ₊ of |z|^q (1+|z|^q)^{-n}.
inline double sigma(const ProblemParams& pp, const QuadratureConfig& cfg = {})
{
    pp.validate();
    const double q = pp.q();
    return 0.5 * sphere_area(pp.n) * radial_integral({pp.n + q, q, double(pp.n)}, cfg);
}

/// Same integrand over the whole of ℝⁿ (= 2Σ).
inline double sigma_full_space(const ProblemParams& pp, const QuadratureConfig& cfg = {})
{
    pp.validate();
    const double q = pp.q();
    return sphere_area(pp.n) * radial_integral({pp.n + q, q, double(pp.n)}, cfg);
}

inline RadialIntegralSpec c1_spec(const ProblemParams& pp)
{
    return {pp.n + 1.0, pp.q(), pp.n - 1.0};
}

/// c₁ = ∫_{ℝ^{n-1}} |z|² (1+|z|^q)^{-(n-1)} dz; finite iff p < (n+1)/2.
inline double c1(const ProblemParams& pp, const QuadratureConfig& cfg = {})
{
    pp.validate();
    const auto spec = c1_spec(pp);
    switch (classify(spec)) {
    case Convergence::log_divergent:
        throw LogDivergent("c1: p = (n+1)/2, integral diverges logarithmically");
    case Convergence::divergent:
        throw DivergentIntegral("c1: p > (n+1)/2, integral diverges");
    case Convergence::convergent: break;
    }
    return sphere_area(pp.n - 1) * radial_integral(spec, cfg);
}

/// c₂ = ∫_{ℝ^{n-1}} |z|² (1+|z|^q)^{-n} dz; finite for all 1 < p < n.
inline double c2(const ProblemParams& pp, const QuadratureConfig& cfg = {})
{
    pp.validate();
    return sphere_area(pp.n - 1) * radial_integral({pp.n + 1.0, pp.q(), double(pp.n)}, cfg);
}

inline RadialIntegralSpec c_tilde_spec(const ProblemParams& pp)
{
    return {pp.n - 1.0, pp.q(), pp.n - pp.p};
}

/// True iff the boundary-trace constant c̃ converges, i.e. (p-1)² < n - p.
inline bool c_tilde_converges(const ProblemParams& pp)
{
    return classify(c_tilde_spec(pp)) == Convergence::convergent;
}

/// c̃ = ∫_{ℝ^{n-1}} (1+|z|^q)^{-(n-p)} dz, the leading coefficient of ∫_{Γ₁} δ^p dσ.
inline double c_tilde(const ProblemParams& pp, const QuadratureConfig& cfg = {})
{
    pp.validate();
    const auto spec = c_tilde_spec(pp);
    switch (classify(spec)) {
    case Convergence::log_divergent:
        throw LogDivergent("c_tilde: (p-1)^2 = n-p, boundary trace integral diverges logarithmically");
    case Convergence::divergent:
        throw DivergentIntegral("c_tilde: (p-1)^2 > n-p, boundary trace integral diverges");
    case Convergence::convergent: break;
    }
    return sphere_area(pp.n - 1) * radial_integral(spec, cfg);
}

struct C1MinusPC2 {
    double difference;      ///< c₁ - p·c₂ from the two constants
    double single_integral; ///< ∫ |z|²(|z|^q - (p-1))/(1+|z|^q)^n dz evaluated directly
};

/// c₁ − p·c₂ computed two ways. Requires p < (n+1)/2.
inline C1MinusPC2 c1_minus_p_c2(const ProblemParams& pp, const QuadratureConfig& cfg = {})
{
    const double a = c1(pp, cfg);
    const double b = c2(pp, cfg);
    const int n = pp.n;
    const double p = pp.p, q = pp.q();
    auto f = [n, p, q](double r) {
        if (r <= 0.0) return 0.0;
        const double rq = std::pow(r, q);
        return std::pow(r, n) * (rq - (p - 1.0)) * std::exp(-n * std::log1p(rq));
    };
    const double tail_exp = q * n - (n + 1.0 + q);
    const QuadResult direct =
        integrate_half_line(f, n + 1.0, tail_exp, cfg.abs_tol, cfg.rel_tol, cfg.max_intervals);
    return {a - p * b, sphere_area(n - 1) * direct.value};
}

struct SobolevConstant {
    double S = 0.0;
    /// |Σ - n^{(p-n)/p} k^{-(n(p-1)/p+1)} S^{n/p}/2| / Σ
    double sigma_identity_residual = 0.0;
    /// Same residual for the prefactor n^{(p-n)/n}; nonzero unless p = n.
    double sigma_identity_residual_printed = 0.0;
    /// |∫δ^{p*} - (1/n)k^{1-p}∫|∇δ|^p| / ∫δ^{p*} over ℝⁿ (λ-independent).
    double mass_gradient_identity_residual = 0.0;
};

/// S as the full-space Rayleigh quotient of the bubble, with identity residuals.
inline SobolevConstant sobolev_constant(const ProblemParams& pp, const QuadratureConfig& cfg = {})
{
    pp.validate();
    const int n = pp.n;
    const double p = pp.p, q = pp.q(), k = pp.k();
    const double sig = sigma(pp, cfg);
    const double grad_full = std::pow(k, p) * 2.0 * sig;
    const double mass_full = sphere_area(n) * radial_integral({double(n), q, double(n)}, cfg);
    SobolevConstant out;
    out.S = grad_full / std::pow(mass_full, p / pp.p_star());

    const double pref = std::pow((p - 1.0) / (n - p), n * (p - 1.0) / p + 1.0) *
                        std::pow(out.S, n / p) / 2.0;
    out.sigma_identity_residual = std::abs(sig - std::pow(double(n), (p - n) / p) * pref) / sig;
    out.sigma_identity_residual_printed =
        std::abs(sig - std::pow(double(n), (p - n) / n) * pref) / sig;
    const double mass_from_grad = std::pow(k, 1.0 - p) * grad_full / n;
    out.mass_gradient_identity_residual = std::abs(mass_full - mass_from_grad) / mass_full;
    return out;
}

/// The compactness level S / 2^{p/n}.
inline double threshold_level(const ProblemParams& pp, const QuadratureConfig& cfg = {})
{
    return sobolev_constant(pp, cfg).S / std::pow(2.0, pp.p / pp.n);
}

/// ((n-p)/(p-1))^p Σ / ((Σ/n)(n-p)/(p-1))^{(n-p)/n}: leading J of a half bubble.
inline double half_bubble_level(const ProblemParams& pp, double sig)
{
    const double k = pp.k();
    return std::pow(k, pp.p) * sig / std::pow(sig / pp.n * k, (pp.n - pp.p) / double(pp.n));
}

struct ConstantsBundle {
    ProblemParams params;
    double sigma = 0.0;
    std::optional<double> c1;       ///< empty when p >= (n+1)/2
    double c2 = 0.0;
    std::optional<double> c_tilde;  ///< empty when (p-1)^2 >= n-p
    std::optional<double> c_hat;    ///< only ever filled from a log-model fit
    double S = 0.0;
    double threshold = 0.0;         ///< S / 2^{p/n}
    double sigma_identity_residual = 0.0;
    Convergence c1_status = Convergence::convergent;
    Convergence c_tilde_status = Convergence::convergent;
};

inline ConstantsBundle compute_constants(const ProblemParams& pp, const QuadratureConfig& cfg = {})
{
    pp.validate();
    ConstantsBundle b;
    b.params = pp;
    b.sigma = sigma(pp, cfg);
    b.c2 = c2(pp, cfg);
    b.c1_status = classify(c1_spec(pp));
    if (b.c1_status == Convergence::convergent) b.c1 = c1(pp, cfg);
    b.c_tilde_status = classify(c_tilde_spec(pp));
    if (b.c_tilde_status == Convergence::convergent) b.c_tilde = c_tilde(pp, cfg);
    const auto sc = sobolev_constant(pp, cfg);
    b.S = sc.S;
    b.threshold = sc.S / std::pow(2.0, pp.p / pp.n);
    b.sigma_identity_residual = sc.sigma_identity_residual;
    return b;
}

/// Σ, c₁, c₂, c̃ from the Beta identity alone; entries are empty where the
/// integral diverges.
struct ClosedFormConstants {
    double sigma = 0.0;
    std::optional<double> c1;
    double c2 = 0.0;
    std::optional<double> c_tilde;
};

inline ClosedFormConstants closed_form_constants(const ProblemParams& pp)
{
    pp.validate();
    const double q = pp.q();
    ClosedFormConstants c;
    c.sigma = 0.5 * sphere_area(pp.n) * radial_integral_closed_form({pp.n + q, q, double(pp.n)});
    c.c2 = sphere_area(pp.n - 1) * radial_integral_closed_form({pp.n + 1.0, q, double(pp.n)});
    if (classify(c1_spec(pp)) == Convergence::convergent)
        c.c1 = sphere_area(pp.n - 1) * radial_integral_closed_form(c1_spec(pp));
    if (c_tilde_converges(pp)) c.c_tilde = sphere_area(pp.n - 1) * radial_integral_closed_form(c_tilde_spec(pp));
    return c;
}

} // namespace plap
