#pragma once

/**
 * @file quadrature.hpp
 * @brief One-dimensional quadrature building blocks.
 *
 * Three tools live here:
 *   - Gauss–Legendre rules of arbitrary order (Newton on P_m, cached),
 *   - a globally adaptive Gauss–Kronrod (G7/K15) integrator for smooth or
 *     mildly singular integrands on a finite interval, with a half-line
 *     wrapper that regularises algebraic endpoint behaviour by substitution,
 *   - composite graded panel rules, used by the nested volume/surface
 *     quadratures where the integrand has a sharp peak at one end and
 *     known kinks at interior breakpoints.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plap {

/// Settings shared by every quadrature in the library.
struct QuadratureConfig {
    int nodes_radial = 8;   ///< Gauss nodes per radial panel
    int nodes_angular = 8;  ///< Gauss nodes per polar angle (2x for the periodic angle)
    int nodes_normal = 8;   ///< Gauss nodes per panel along the normal fibre
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    /// Integrate in z = λ^{p-1}(x - a) coordinates. Unset means "on when λ > 20".
    std::optional<bool> peak_rescale;
    int grading_levels = 24;  ///< geometric refinement depth toward singular ends
    int max_intervals = 4000; ///< adaptive Gauss–Kronrod subdivision cap

    void validate() const
    {
        if (nodes_radial < 4 || nodes_angular < 4 || nodes_normal < 4)
            throw std::invalid_argument("QuadratureConfig: node counts must be >= 4");
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw std::invalid_argument("QuadratureConfig: tolerances must be > 0");
        if (grading_levels < 1)
            throw std::invalid_argument("QuadratureConfig: grading_levels must be >= 1");
    }

    [[nodiscard]] bool use_peak_rescale(double lambda) const
    {
        return peak_rescale.value_or(lambda > 20.0);
    }
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = true;
    long evaluations = 0;
};

// ----------------------------------------------------------------------------
// Gauss–Legendre
// ----------------------------------------------------------------------------

struct GaussRule {
    std::vector<double> x; ///< nodes on [-1, 1]
    std::vector<double> w;
};

namespace detail {

inline GaussRule compute_gauss_legendre(int m)
{
    GaussRule g;
    g.x.resize(m);
    g.w.resize(m);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= m; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = m * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = 0.0;
        for (int j = 1; j <= m; ++j) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
        }
        dp = m * (z * p0 - p1) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        g.x[i] = -z;
        g.x[m - 1 - i] = z;
        g.w[i] = w;
        g.w[m - 1 - i] = w;
    }
    if (m % 2 == 1) g.x[m / 2] = 0.0;
    return g;
}

} // namespace detail

/// m-point Gauss–Legendre rule on [-1, 1]; computed once per m and cached.
inline const GaussRule& gauss_legendre(int m)
{
    if (m < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    static std::mutex mtx;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(m);
    if (it == cache.end()) it = cache.emplace(m, detail::compute_gauss_legendre(m)).first;
    return it->second;
}

// ----------------------------------------------------------------------------
// Adaptive Gauss–Kronrod
// ----------------------------------------------------------------------------

namespace detail {

// QUADPACK qk15 abscissae and weights.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GkSegment {
    double a, b, value, error;
    bool operator<(const GkSegment& o) const { return error < o.error; }
};

template <class F>
GkSegment gk15(F& f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kron = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double fsum = f(c - dx) + f(c + dx);
        kron += kWgk[j] * fsum;
        if (j % 2 == 1) gauss += kWg[j / 2] * fsum;
    }
    return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

} // namespace detail

/// Globally adaptive G7/K15 on [a, b]. The interval with the largest error
/// estimate is bisected until the summed estimate meets max(abs_tol, rel_tol·|I|).
template <class F>
QuadResult gauss_kronrod(F&& f, double a, double b, double abs_tol, double rel_tol,
                         int max_intervals = 4000)
{
    QuadResult out;
    if (a == b) return out;
    std::priority_queue<detail::GkSegment> heap;
    heap.push(detail::gk15(f, a, b));
    out.evaluations = 15;
    double total = heap.top().value;
    double err = heap.top().error;
    int intervals = 1;
    while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (intervals >= max_intervals) {
            out.converged = false;
            break;
        }
        const detail::GkSegment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) { // interval exhausted at machine precision
            heap.push(worst);
            out.converged = false;
            break;
        }
        const auto left = detail::gk15(f, worst.a, mid);
        const auto right = detail::gk15(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++intervals;
    }
    // resum in a fixed order to suppress drift from the incremental updates
    double sum = 0.0, esum = 0.0;
    std::vector<detail::GkSegment> segs;
    segs.reserve(heap.size());
    while (!heap.empty()) {
        segs.push_back(heap.top());
        heap.pop();
    }
    std::sort(segs.begin(), segs.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
    for (const auto& s : segs) {
        sum += s.value;
        esum += s.error;
    }
    out.value = sum;
    out.error = esum;
    return out;
}

/// ∫₀^∞ f(r) dr for f ~ r^{head_exp-1} at 0 and f ~ r^{-tail_exp-1} at ∞
/// (both exponents > 0). Split at r = 1, the tail mapped by r → 1/r, and
/// each endpoint power regularised by u = t^{exp} when the exponent is small.
template <class F>
QuadResult integrate_half_line(F&& f, double head_exp, double tail_exp, double abs_tol,
                               double rel_tol, int max_intervals = 4000)
{
    if (!(head_exp > 0.0) || !(tail_exp > 0.0))
        throw std::invalid_argument("integrate_half_line: endpoint exponents must be > 0");

    // head: t = u^{1/e}, dt = t^{1-e}/e du; tail: r = u^{-1/e}, dr = r^{1+e}/e du.
    // Both Jacobian-weighted integrands tend to constants at u = 0, so the
    // substituted variable is clamped once it leaves the double range.
    auto head_reg = [&f, e = head_exp](double u) {
        if (e >= 1.5) return f(u);
        const double t = std::max(std::exp(std::log(u) / e), 1e-200);
        return f(t) * std::pow(t, 1.0 - e) / e;
    };
    auto tail_reg = [&f, e = tail_exp](double u) {
        if (e >= 1.5) return f(1.0 / u) / (u * u);
        const double r = std::min(std::exp(-std::log(u) / e), 1e30);
        return f(r) * std::pow(r, 1.0 + e) / e;
    };
    const QuadResult h = gauss_kronrod(head_reg, 0.0, 1.0, 0.5 * abs_tol, rel_tol, max_intervals);
    const QuadResult t = gauss_kronrod(tail_reg, 0.0, 1.0, 0.5 * abs_tol, rel_tol, max_intervals);
    QuadResult out;
    out.value = h.value + t.value;
    out.error = h.error + t.error;
    out.converged = h.converged && t.converged;
    out.evaluations = h.evaluations + t.evaluations;
    return out;
}

// ----------------------------------------------------------------------------
// Composite graded panel rules
// ----------------------------------------------------------------------------

/// Panel layout for one coordinate direction.
struct Grading {
    double left_fine = 0.0;             ///< smallest panel at the left end (0: no grading)
    std::vector<double> breaks;         ///< interior kinks of the integrand
    int break_levels = 6;               ///< halvings toward each break, both sides
    int right_levels = 0;               ///< halvings toward the right end (sqrt-type ends)
};

/// Sorted panel edges on [a, b] realising `g`.
inline std::vector<double> graded_edges(double a, double b, const Grading& g)
{
    std::vector<double> e{a, b};
    const double len = b - a;
    if (!(len > 0.0)) return {a, b};
    if (g.left_fine > 0.0) {
        for (double h = g.left_fine; a + h < b; h *= 2.0) e.push_back(a + h);
    }
    for (double c : g.breaks) {
        if (!(c > a && c < b)) continue;
        e.push_back(c);
        const double w = 0.25 * std::min(c - a, b - c);
        double step = w;
        for (int k = 0; k < g.break_levels; ++k, step *= 0.5) {
            e.push_back(c - step);
            e.push_back(c + step);
        }
    }
    for (int k = 1; k <= g.right_levels; ++k) e.push_back(b - len * std::ldexp(1.0, -k));
    std::sort(e.begin(), e.end());
    std::vector<double> out;
    out.reserve(e.size());
    const double eps = 1e-15 * std::max(std::abs(a), std::abs(b));
    for (double v : e) {
        if (v < a || v > b) continue;
        if (out.empty() || v - out.back() > eps) out.push_back(v);
    }
    if (out.back() != b) out.back() = b;
    return out;
}

/// Visit every (node, weight) of the composite m-point Gauss rule on `edges`.
template <class Visit>
void for_each_node(std::span<const double> edges, const GaussRule& rule, Visit&& visit)
{
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double c = 0.5 * (edges[i] + edges[i + 1]);
        const double h = 0.5 * (edges[i + 1] - edges[i]);
        for (std::size_t j = 0; j < rule.x.size(); ++j) visit(c + h * rule.x[j], h * rule.w[j]);
    }
}

/// Quadrature on the unit sphere S^{d-1} ⊂ ℝ^d (d ≥ 1); for d = 1 the two points ±1.
struct SphereRule {
    int dim = 0;
    std::vector<double> dirs; ///< row-major, dim entries per node
    std::vector<double> w;
    [[nodiscard]] std::size_t size() const { return w.size(); }
    [[nodiscard]] std::span<const double> dir(std::size_t i) const
    {
        return {dirs.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
};

inline SphereRule sphere_rule(int d, int m)
{
    if (d < 1) throw std::invalid_argument("sphere_rule: dimension must be >= 1");
    SphereRule s;
    s.dim = d;
    if (d == 1) {
        s.dirs = {1.0, -1.0};
        s.w = {1.0, 1.0};
        return s;
    }
    if (d == 2) {
        const int k = 2 * m;
        for (int i = 0; i < k; ++i) {
            const double t = 2.0 * std::numbers::pi * (i + 0.5) / k;
            s.dirs.push_back(std::cos(t));
            s.dirs.push_back(std::sin(t));
            s.w.push_back(2.0 * std::numbers::pi / k);
        }
        return s;
    }
    // x = (cos θ, sin θ · ω), ω ∈ S^{d-2}, measure sin^{d-2}θ dθ dω
    const SphereRule inner = sphere_rule(d - 1, m);
    const GaussRule& g = gauss_legendre(m);
    for (int i = 0; i < m; ++i) {
        const double th = 0.5 * std::numbers::pi * (g.x[i] + 1.0);
        const double wt = 0.5 * std::numbers::pi * g.w[i] * std::pow(std::sin(th), d - 2);
        for (std::size_t j = 0; j < inner.size(); ++j) {
            s.dirs.push_back(std::cos(th));
            for (double c : inner.dir(j)) s.dirs.push_back(std::sin(th) * c);
            s.w.push_back(wt * inner.w[j]);
        }
    }
    return s;
}

} // namespace plap
