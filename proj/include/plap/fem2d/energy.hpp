#pragma once

#include "plap/fem2d/mesh.hpp"
#include "plap/model_geometry.hpp"
#include "plap/parallel.hpp"
#include "plap/quadrature.hpp"

#include <span>

namespace plap::fem {

/// Energy ‖u‖^p split into its three parts, the mass ∫|u|^q, and the
/// nodal gradients of both.
struct EnergyAssembly {
    double E = 0.0;
    double M = 0.0;
    double gradient_part = 0.0;
    double alpha_part = 0.0;
    double beta_part = 0.0;
    std::vector<double> dE;
    std::vector<double> dM;
};

struct AssemblyOptions {
    int edge_points = 4;
    int workers = 1;
};

namespace detail {

// Degree-5 seven-point rule on the reference triangle (barycentric, weights sum to 1).
struct TriangleRule {
    std::array<std::array<double, 3>, 7> bary;
    std::array<double, 7> w;
};

inline const TriangleRule& triangle_rule()
{
    static const TriangleRule r = [] {
        const double a1 = 0.059715871789769820, b1 = 0.470142064105115090, w1 = 0.132394152788506181;
        const double a2 = 0.797426985353087322, b2 = 0.101286507323456339, w2 = 0.125939180544827153;
        TriangleRule t{};
        t.bary = {{{1.0 / 3, 1.0 / 3, 1.0 / 3},
                   {a1, b1, b1},
                   {b1, a1, b1},
                   {b1, b1, a1},
                   {a2, b2, b2},
                   {b2, a2, b2},
                   {b2, b2, a2}}};
        t.w = {0.225, w1, w1, w1, w2, w2, w2};
        return t;
    }();
    return r;
}

inline double signed_pow(double u, double e) { return std::copysign(std::pow(std::abs(u), e), u); }

struct ElementContribution {
    double grad = 0.0, alpha = 0.0, mass = 0.0;
    std::array<double, 3> dE{}, dM{};
};

} // namespace detail

/// P1 assembly of
///   E = ∫ ((|∇u|² + ε²)^{p/2} − ε^p) + ∫ α|u|^p + ∫_{Γ₁} β|u|^p,   M = ∫ |u|^q.
/// The ε^p shift keeps E(0) = 0; with ε = 0 the gradient term is exact.
inline EnergyAssembly assemble_energy(const Mesh& mesh, std::span<const double> u, double p, const PotentialSpec& pot,
                                      double q, double eps_reg, const AssemblyOptions& opt = {})
{
    if (u.size() != mesh.vertices.size()) throw std::invalid_argument("assemble_energy: one value per vertex");
    if (!(p > 1.0) || !(q >= 1.0)) throw std::invalid_argument("assemble_energy: need p > 1 and q >= 1");
    if (!(eps_reg >= 0.0)) throw std::invalid_argument("assemble_energy: eps_reg must be non-negative");

    const auto& rule = detail::triangle_rule();
    const bool alpha_const = pot.alpha.is_constant();
    const double alpha0 = alpha_const ? pot.alpha(std::array<double, 2>{0.0, 0.0}) : 0.0;
    const bool alpha_zero = pot.alpha.is_zero();
    const double eps2 = eps_reg * eps_reg;
    const double shift = std::pow(eps_reg, p);

    std::vector<detail::ElementContribution> local(mesh.triangles.size());
    parallel_for(mesh.triangles.size(), opt.workers, [&](std::size_t t) {
        const auto& tri = mesh.triangles[t];
        const Point& A = mesh.vertices[tri[0]];
        const Point& B = mesh.vertices[tri[1]];
        const Point& C = mesh.vertices[tri[2]];
        const double area = mesh.signed_area(t);
        // ∇φ_i = rot(opposite edge) / (2·area)
        const std::array<std::array<double, 2>, 3> gphi{{{B[1] - C[1], C[0] - B[0]},
                                                         {C[1] - A[1], A[0] - C[0]},
                                                         {A[1] - B[1], B[0] - A[0]}}};
        const double inv = 1.0 / (2.0 * area);
        double gx = 0.0, gy = 0.0;
        for (int i = 0; i < 3; ++i) {
            gx += u[tri[i]] * gphi[i][0] * inv;
            gy += u[tri[i]] * gphi[i][1] * inv;
        }
        auto& c = local[t];
        const double s = gx * gx + gy * gy + eps2;
        c.grad = area * (std::pow(s, 0.5 * p) - shift);
        const double coef = area * p * std::pow(s, 0.5 * p - 1.0);
        for (int i = 0; i < 3; ++i) c.dE[i] = coef * (gx * gphi[i][0] + gy * gphi[i][1]) * inv;

        for (std::size_t k = 0; k < rule.w.size(); ++k) {
            const auto& l = rule.bary[k];
            const double uk = l[0] * u[tri[0]] + l[1] * u[tri[1]] + l[2] * u[tri[2]];
            const double wk = rule.w[k] * area;
            const double au = std::abs(uk);
            c.mass += wk * std::pow(au, q);
            const double dm = wk * q * detail::signed_pow(uk, q - 1.0);
            for (int i = 0; i < 3; ++i) c.dM[i] += dm * l[i];
            if (alpha_zero) continue;
            double a = alpha0;
            if (!alpha_const) {
                const std::array<double, 2> x{l[0] * A[0] + l[1] * B[0] + l[2] * C[0],
                                              l[0] * A[1] + l[1] * B[1] + l[2] * C[1]};
                a = pot.alpha(x);
            }
            c.alpha += wk * a * std::pow(au, p);
            const double da = wk * a * p * detail::signed_pow(uk, p - 1.0);
            for (int i = 0; i < 3; ++i) c.dE[i] += da * l[i];
        }
    });

    EnergyAssembly r;
    r.dE.assign(u.size(), 0.0);
    r.dM.assign(u.size(), 0.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& c = local[t];
        r.gradient_part += c.grad;
        r.alpha_part += c.alpha;
        r.M += c.mass;
        for (int i = 0; i < 3; ++i) {
            r.dE[mesh.triangles[t][i]] += c.dE[i];
            r.dM[mesh.triangles[t][i]] += c.dM[i];
        }
    }

    if (!pot.beta.is_zero()) {
        const auto& g = gauss_legendre(opt.edge_points);
        for (const auto& e : mesh.boundary_edges) {
            if (e.label != BoundaryLabel::gamma1) continue;
            const Point& a = mesh.vertices[e.a];
            const Point& b = mesh.vertices[e.b];
            const double half_len = 0.5 * mesh.edge_length(e.a, e.b);
            for (std::size_t k = 0; k < g.x.size(); ++k) {
                const double s = 0.5 * (1.0 + g.x[k]);
                const std::array<double, 2> x{a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])};
                const double uk = (1.0 - s) * u[e.a] + s * u[e.b];
                const double beta = pot.beta(x);
                const double wk = g.w[k] * half_len;
                r.beta_part += wk * beta * std::pow(std::abs(uk), p);
                const double d = wk * beta * p * detail::signed_pow(uk, p - 1.0);
                r.dE[e.a] += d * (1.0 - s);
                r.dE[e.b] += d * s;
            }
        }
    }
    r.E = r.gradient_part + r.alpha_part + r.beta_part;
    return r;
}

/// J = E / M^{p/q}; zero-homogeneous in u when ε = 0.
inline double quotient_value(const EnergyAssembly& a, double p, double q) { return a.E / std::pow(a.M, p / q); }

/// ∇J = (∇E − (p/q)(E/M)∇M) / M^{p/q}.
inline std::vector<double> quotient_gradient(const EnergyAssembly& a, double p, double q)
{
    const double scale = std::pow(a.M, -p / q);
    const double c = (p / q) * a.E / a.M;
    std::vector<double> g(a.dE.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * (a.dE[i] - c * a.dM[i]);
    return g;
}

} // namespace plap::fem
