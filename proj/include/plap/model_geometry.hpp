#pragma once

/**
 * @file model_geometry.hpp
 * @brief Curved half-ball model domains and their volume / boundary quadratures.
 *
 *     Ω  = { x = (x', x_n) : |x| < r_out, x_n > φ(x') },   φ(x') = Σ γ_i x_i² (+ cubic),
 *     Γ₁ = { x_n = φ(x') } ∩ B(0, r_out),                   Γ₀ = spherical cap.
 *
 * Volume integrals are taken in graph-fitted coordinates: an outer integral
 * over x' (polar: radius × directions on S^{n-2}) and an inner fibre along x_n.
 * The fibre over x' is split as [0, top] minus the signed sliver [0, φ(x')],
 * so a volume integral is reported as a half-space part and a graph defect:
 *
 *     ∫_Ω f = ∫_{Ω ∩ {x_n > 0}-like half ball} f − ∫_{x'} ∫_0^{φ(x')} f.
 *
 * The half-space part does not depend on γ, which makes flat-baseline
 * differencing exact up to rounding.
 */

#include "plap/quadrature.hpp"
#include "plap/special_constants.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plap {

// ----------------------------------------------------------------------------
// Potentials
// ----------------------------------------------------------------------------

struct Monomial {
    double coef = 0.0;
    std::vector<int> powers; ///< exponent per coordinate; missing entries are 0
};

/// Polynomial in the ambient coordinates; a single power-free monomial is a constant.
struct Polynomial {
    std::vector<Monomial> terms;

    static Polynomial constant(double c) { return Polynomial{{Monomial{c, {}}}}; }

    [[nodiscard]] double operator()(std::span<const double> x) const
    {
        double s = 0.0;
        for (const auto& t : terms) {
            double v = t.coef;
            for (std::size_t i = 0; i < t.powers.size(); ++i) {
                if (t.powers[i] == 0) continue;
                if (i >= x.size()) throw std::invalid_argument("Polynomial: coordinate out of range");
                v *= std::pow(x[i], t.powers[i]);
            }
            s += v;
        }
        return s;
    }

    [[nodiscard]] bool is_constant() const
    {
        for (const auto& t : terms)
            for (int e : t.powers)
                if (e != 0) return false;
        return true;
    }

    [[nodiscard]] bool is_zero() const
    {
        for (const auto& t : terms)
            if (t.coef != 0.0) return false;
        return true;
    }

    /// Crude sup bound on |x| ≤ radius: Σ|c|·radius^{degree}.
    [[nodiscard]] double sup_bound(double radius) const
    {
        double s = 0.0;
        for (const auto& t : terms) {
            int deg = 0;
            for (int e : t.powers) {
                if (e < 0) throw std::invalid_argument("Polynomial: negative exponent");
                deg += e;
            }
            s += std::abs(t.coef) * std::pow(radius, deg);
        }
        return s;
    }
};

/// α on Ω and β on Γ₁. Polynomials are bounded on the bounded model domain.
struct PotentialSpec {
    Polynomial alpha = Polynomial::constant(0.0);
    Polynomial beta = Polynomial::constant(0.0);

    /// β at the normal-form base point 0.
    [[nodiscard]] double beta_at_origin(int n) const
    {
        const std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
        return beta(zero);
    }
};

// ----------------------------------------------------------------------------
// ModelDomain
// ----------------------------------------------------------------------------

class ModelDomain {
public:
    ModelDomain() = default;

    ModelDomain(int n, double r_out, std::vector<double> gamma, double cubic_bound = 0.0,
                std::uint64_t cubic_seed = 0x9e3779b97f4a7c15ULL)
        : n_(n), r_out_(r_out), gamma_(std::move(gamma)), cubic_bound_(cubic_bound), seed_(cubic_seed)
    {
        if (n_ < 2) throw std::invalid_argument("ModelDomain: n must be >= 2");
        if (!(r_out_ > 0.0)) throw std::invalid_argument("ModelDomain: r_out must be > 0");
        if (gamma_.empty()) gamma_.assign(static_cast<std::size_t>(n_ - 1), 0.0);
        if (static_cast<int>(gamma_.size()) != n_ - 1)
            throw std::invalid_argument("ModelDomain: gamma must have n-1 entries");
        if (cubic_bound_ < 0.0) throw std::invalid_argument("ModelDomain: cubic_bound must be >= 0");
        if (cubic_bound_ > 0.0) build_cubic();
    }

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] double r_out() const { return r_out_; }
    [[nodiscard]] const std::vector<double>& gamma() const { return gamma_; }
    [[nodiscard]] double cubic_bound() const { return cubic_bound_; }
    [[nodiscard]] std::uint64_t cubic_seed() const { return seed_; }

    /// Same domain with all curvature removed.
    [[nodiscard]] ModelDomain flattened() const { return ModelDomain(n_, r_out_, {}, 0.0, seed_); }

    /// Same domain with γ scaled by `factor` (cubic term kept).
    [[nodiscard]] ModelDomain scaled(double factor) const
    {
        auto g = gamma_;
        for (double& v : g) v *= factor;
        return ModelDomain(n_, r_out_, g, cubic_bound_, seed_);
    }

    /// φ depends on |x'| only.
    [[nodiscard]] bool is_axisymmetric() const
    {
        if (cubic_bound_ > 0.0) return false;
        for (double g : gamma_)
            if (g != gamma_.front()) return false;
        return true;
    }

    [[nodiscard]] double phi(std::span<const double> xp) const
    {
        check_dim(xp);
        double s = 0.0;
        for (int i = 0; i < n_ - 1; ++i) s += gamma_[i] * xp[i] * xp[i];
        if (cubic_bound_ > 0.0) s += cubic(xp);
        return s;
    }

    /// ∇φ(x') written into `g` (size n-1).
    void grad_phi(std::span<const double> xp, std::span<double> g) const
    {
        check_dim(xp);
        for (int i = 0; i < n_ - 1; ++i) g[i] = 2.0 * gamma_[i] * xp[i];
        if (cubic_bound_ > 0.0) {
            std::size_t t = 0;
            const int d = n_ - 1;
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j)
                    for (int k = j; k < d; ++k, ++t) {
                        const double c = cubic_coef_[t];
                        g[i] += c * xp[j] * xp[k];
                        g[j] += c * xp[i] * xp[k];
                        g[k] += c * xp[i] * xp[j];
                    }
        }
    }

    /// H(0) = 2/(n-1) Σ γ_i.
    [[nodiscard]] double mean_curvature() const
    {
        double s = 0.0;
        for (double g : gamma_) s += g;
        return 2.0 / (n_ - 1) * s;
    }

    /// Spherical-cap height sqrt(r_out² - |x'|²).
    [[nodiscard]] double cap(double rho) const { return std::sqrt(std::max(0.0, r_out_ * r_out_ - rho * rho)); }

private:
    void check_dim(std::span<const double> xp) const
    {
        if (static_cast<int>(xp.size()) != n_ - 1)
            throw std::invalid_argument("ModelDomain: x' must have n-1 coordinates");
    }

    void build_cubic()
    {
        const int d = n_ - 1;
        std::mt19937_64 rng(seed_);
        double l1 = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j)
                for (int k = j; k < d; ++k) {
                    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                    cubic_coef_.push_back(2.0 * u - 1.0);
                    l1 += std::abs(cubic_coef_.back());
                }
        // Σ|c| = cubic_bound guarantees |C(x')| ≤ cubic_bound·|x'|³
        for (double& c : cubic_coef_) c *= cubic_bound_ / l1;
    }

    [[nodiscard]] double cubic(std::span<const double> xp) const
    {
        const int d = n_ - 1;
        double s = 0.0;
        std::size_t t = 0;
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j)
                for (int k = j; k < d; ++k, ++t) s += cubic_coef_[t] * xp[i] * xp[j] * xp[k];
        return s;
    }

    int n_ = 2;
    double r_out_ = 1.0;
    std::vector<double> gamma_;
    double cubic_bound_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<double> cubic_coef_;
};

/// H = 2/(n-1) Σγ_i.
inline double mean_curvature(const ModelDomain& dom) { return dom.mean_curvature(); }

// ----------------------------------------------------------------------------
// Quadratures
// ----------------------------------------------------------------------------

/// What the caller knows about the integrand; every field is optional.
struct QuadratureHints {
    double peak_length = 0.0;          ///< concentration length at the origin (0: none)
    bool peak_rescale = false;         ///< anchor panels at peak_length instead of the domain scale
    std::vector<double> sphere_breaks; ///< radii |x| where the integrand has kinks
    double support_radius = 0.0;       ///< integrand vanishes for |x| > support_radius (0: none)
    bool axisymmetric = false;         ///< integrand depends on (|x'|, x_n) only
};

template <std::size_t K>
struct VolumeResult {
    std::array<double, K> value{};        ///< ∫_Ω f
    std::array<double, K> error{};        ///< |fine − coarse| estimate
    std::array<double, K> half_space{};   ///< γ-independent part
    std::array<double, K> graph_defect{}; ///< ∫_{x'}∫_0^{φ} f (signed), value = half_space − graph_defect
    std::array<double, K> defect_error{};
    bool converged = true;
    std::string warning;
};

template <std::size_t K>
struct SurfaceResult {
    std::array<double, K> value{};
    std::array<double, K> error{};
    bool converged = true;
    std::string warning;
};

namespace detail {

inline double left_fine(const QuadratureHints& h, double scale, int levels)
{
    if (h.peak_rescale && h.peak_length > 0.0) return h.peak_length * std::ldexp(1.0, -8);
    return scale * std::ldexp(1.0, -levels);
}

struct Nodes {
    int radial, angular, normal;
};

/// Largest ρ along direction θ with |(ρθ, φ(ρθ))| ≤ R (bisection; φ is continuous).
inline double graph_radius(const ModelDomain& dom, std::span<const double> th, double R,
                           std::vector<double>& scratch)
{
    const int d = dom.n() - 1;
    auto excess = [&](double rho) {
        for (int i = 0; i < d; ++i) scratch[i] = rho * th[i];
        const double ph = dom.phi(std::span<const double>(scratch.data(), d));
        return rho * rho + ph * ph - R * R;
    };
    if (excess(R) <= 0.0) return R;
    double lo = 0.0, hi = R;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * R; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

template <std::size_t K, class F>
void volume_pass(F& f, const ModelDomain& dom, const QuadratureConfig& cfg, const QuadratureHints& hints,
                 Nodes nodes, std::array<double, K>& half, std::array<double, K>& defect)
{
    const int n = dom.n();
    const int d = n - 1;
    half.fill(0.0);
    defect.fill(0.0);

    SphereRule dirs;
    if (hints.axisymmetric && dom.is_axisymmetric()) {
        dirs.dim = d;
        dirs.dirs.assign(static_cast<std::size_t>(d), 0.0);
        dirs.dirs[0] = 1.0;
        dirs.w = {sphere_area(d)};
    } else {
        dirs = sphere_rule(d, nodes.angular);
    }

    const double support = hints.support_radius > 0.0 ? std::min(hints.support_radius, dom.r_out()) : dom.r_out();
    const bool open_support = hints.support_radius > 0.0 && hints.support_radius < dom.r_out();
    const double fine = left_fine(hints, support, cfg.grading_levels);

    Grading rg;
    rg.left_fine = fine;
    rg.right_levels = open_support ? 0 : cfg.grading_levels;
    const GaussRule& gr = gauss_legendre(nodes.radial);
    const GaussRule& gn = gauss_legendre(nodes.normal);

    std::vector<double> x(static_cast<std::size_t>(n)), scratch(static_cast<std::size_t>(d));
    std::array<double, K> vals{};
    std::array<double, K> fib_half{}, fib_def{};
    Grading fg;
    fg.left_fine = fine;

    for (std::size_t j = 0; j < dirs.size(); ++j) {
        const auto th = dirs.dir(j);
        const double wth = dirs.w[j];
        rg.breaks = hints.sphere_breaks;
        for (double R : hints.sphere_breaks) rg.breaks.push_back(graph_radius(dom, th, R, scratch));
        rg.breaks.push_back(graph_radius(dom, th, support, scratch));
        const auto redges = graded_edges(0.0, support, rg);
        for_each_node(redges, gr, [&](double rho, double wr) {
            for (int i = 0; i < d; ++i) x[i] = rho * th[i];
            const double top = std::sqrt(std::max(0.0, support * support - rho * rho));
            fg.breaks.clear();
            for (double R : hints.sphere_breaks)
                if (R > rho) fg.breaks.push_back(std::sqrt(R * R - rho * rho));

            fib_half.fill(0.0);
            const auto fedges = graded_edges(0.0, top, fg);
            for_each_node(fedges, gn, [&](double t, double wt) {
                x[d] = t;
                f(std::span<const double>(x), vals);
                for (std::size_t k = 0; k < K; ++k) fib_half[k] += wt * vals[k];
            });

            fib_def.fill(0.0);
            const double ph = std::clamp(dom.phi(std::span<const double>(x.data(), d)), -top, top);
            if (ph != 0.0) {
                const double len = std::abs(ph);
                const double sgn = ph > 0.0 ? 1.0 : -1.0;
                Grading sg = fg;
                const auto sedges = graded_edges(0.0, len, sg);
                for_each_node(sedges, gn, [&](double t, double wt) {
                    x[d] = sgn * t;
                    f(std::span<const double>(x), vals);
                    for (std::size_t k = 0; k < K; ++k) fib_def[k] += sgn * wt * vals[k];
                });
            }

            const double w = wth * wr * std::pow(rho, d - 1);
            for (std::size_t k = 0; k < K; ++k) {
                half[k] += w * fib_half[k];
                defect[k] += w * fib_def[k];
            }
        });
    }
}

template <std::size_t K, class G>
void surface_pass(G& g, const ModelDomain& dom, const QuadratureConfig& cfg, const QuadratureHints& hints,
                  Nodes nodes, std::array<double, K>& acc)
{
    const int n = dom.n();
    const int d = n - 1;
    acc.fill(0.0);
    SphereRule dirs;
    if (hints.axisymmetric && dom.is_axisymmetric()) {
        dirs.dim = d;
        dirs.dirs.assign(static_cast<std::size_t>(d), 0.0);
        dirs.dirs[0] = 1.0;
        dirs.w = {sphere_area(d)};
    } else {
        dirs = sphere_rule(d, nodes.angular);
    }
    const double support = hints.support_radius > 0.0 ? std::min(hints.support_radius, dom.r_out()) : dom.r_out();
    const double fine = left_fine(hints, support, cfg.grading_levels);
    const GaussRule& gr = gauss_legendre(nodes.radial);

    std::vector<double> x(static_cast<std::size_t>(n)), scratch(static_cast<std::size_t>(d)),
        grad(static_cast<std::size_t>(d));
    std::array<double, K> vals{};
    for (std::size_t j = 0; j < dirs.size(); ++j) {
        const auto th = dirs.dir(j);
        const double rmax = graph_radius(dom, th, support, scratch);
        Grading rg;
        rg.left_fine = fine;
        for (double R : hints.sphere_breaks)
            if (R < support) rg.breaks.push_back(graph_radius(dom, th, R, scratch));
        const auto edges = graded_edges(0.0, rmax, rg);
        for_each_node(edges, gr, [&](double rho, double wr) {
            for (int i = 0; i < d; ++i) x[i] = rho * th[i];
            const std::span<const double> xp(x.data(), d);
            x[d] = dom.phi(xp);
            dom.grad_phi(xp, grad);
            double g2 = 0.0;
            for (double v : grad) g2 += v * v;
            g(std::span<const double>(x), vals);
            const double w = dirs.w[j] * wr * std::pow(rho, d - 1) * std::sqrt(1.0 + g2);
            for (std::size_t k = 0; k < K; ++k) acc[k] += w * vals[k];
        });
    }
}

inline Nodes coarse(const QuadratureConfig& cfg)
{
    return {std::max(2, cfg.nodes_radial / 2), std::max(2, cfg.nodes_angular / 2),
            std::max(2, cfg.nodes_normal / 2)};
}

} // namespace detail

/// K integrands at once over Ω; f(x, out) fills out[0..K).
template <std::size_t K, class F>
VolumeResult<K> volume_quadrature_multi(F&& f, const ModelDomain& dom, const QuadratureConfig& cfg,
                                        const QuadratureHints& hints = {})
{
    cfg.validate();
    VolumeResult<K> out;
    std::array<double, K> half_c{}, def_c{};
    detail::volume_pass<K>(f, dom, cfg, hints, {cfg.nodes_radial, cfg.nodes_angular, cfg.nodes_normal},
                           out.half_space, out.graph_defect);
    detail::volume_pass<K>(f, dom, cfg, hints, detail::coarse(cfg), half_c, def_c);
    for (std::size_t k = 0; k < K; ++k) {
        out.value[k] = out.half_space[k] - out.graph_defect[k];
        out.error[k] = std::abs(out.value[k] - (half_c[k] - def_c[k]));
        out.defect_error[k] = std::abs(out.graph_defect[k] - def_c[k]);
        if (out.error[k] > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(out.value[k]))) {
            out.converged = false;
            out.warning = "volume quadrature: tolerance not reached, estimated error " + std::to_string(out.error[k]);
        }
    }
    return out;
}

/// ∫_Ω f dx for a scalar integrand f(x).
template <class F>
QuadResult volume_quadrature(F&& f, const ModelDomain& dom, const QuadratureConfig& cfg,
                             const QuadratureHints& hints = {})
{
    auto wrap = [&f](std::span<const double> x, std::array<double, 1>& out) { out[0] = f(x); };
    const auto r = volume_quadrature_multi<1>(wrap, dom, cfg, hints);
    return {r.value[0], r.error[0], r.converged, 0};
}

/// K integrands over Γ₁ with area element sqrt(1 + |∇φ|²); g receives points on Γ₁.
template <std::size_t K, class G>
SurfaceResult<K> gamma1_surface_quadrature_multi(G&& g, const ModelDomain& dom, const QuadratureConfig& cfg,
                                                 const QuadratureHints& hints = {})
{
    cfg.validate();
    SurfaceResult<K> out;
    std::array<double, K> coarse{};
    detail::surface_pass<K>(g, dom, cfg, hints, {cfg.nodes_radial, cfg.nodes_angular, cfg.nodes_normal}, out.value);
    detail::surface_pass<K>(g, dom, cfg, hints, detail::coarse(cfg), coarse);
    for (std::size_t k = 0; k < K; ++k) {
        out.error[k] = std::abs(out.value[k] - coarse[k]);
        if (out.error[k] > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(out.value[k]))) {
            out.converged = false;
            out.warning = "surface quadrature: tolerance not reached, estimated error " + std::to_string(out.error[k]);
        }
    }
    return out;
}

template <class G>
QuadResult gamma1_surface_quadrature(G&& g, const ModelDomain& dom, const QuadratureConfig& cfg,
                                     const QuadratureHints& hints = {})
{
    auto wrap = [&g](std::span<const double> x, std::array<double, 1>& out) { out[0] = g(x); };
    const auto r = gamma1_surface_quadrature_multi<1>(wrap, dom, cfg, hints);
    return {r.value[0], r.error[0], r.converged, 0};
}

} // namespace plap
