#include "plap/bubble.hpp"
#include "plap/model_geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace plap;

TEST(ModelDomain, PhiAndCurvature)
{
    const ModelDomain dom(4, 1.0, {0.1, 0.1, 0.1});
    const std::vector<double> e1{1.0, 0.0, 0.0}, zero{0.0, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(dom.phi(zero), 0.0);
    EXPECT_NEAR(dom.phi(e1), 0.1, 1e-15);
    std::vector<double> g(3);
    dom.grad_phi(zero, g);
    for (double v : g) EXPECT_EQ(v, 0.0);
    EXPECT_NEAR(dom.mean_curvature(), 0.2, 1e-15);
    EXPECT_EQ(ModelDomain(3, 1.0, {0.0, 0.0}).mean_curvature(), 0.0);
    EXPECT_NEAR(ModelDomain(3, 1.0, {0.05, 0.15}).mean_curvature(), 0.2, 1e-15);
}

TEST(ModelDomain, CubicPerturbationBoundedAndGradientConsistent)
{
    const ModelDomain dom(4, 1.0, {0.1, 0.0, 0.2}, 0.05, 42);
    const ModelDomain quad(4, 1.0, {0.1, 0.0, 0.2});
    const std::vector<double> x{0.3, -0.2, 0.4};
    const double r = std::sqrt(0.09 + 0.04 + 0.16);
    EXPECT_LE(std::abs(dom.phi(x) - quad.phi(x)), 0.05 * r * r * r + 1e-15);
    std::vector<double> g(3);
    dom.grad_phi(x, g);
    for (int i = 0; i < 3; ++i) {
        auto xp = x, xm = x;
        xp[i] += 1e-6;
        xm[i] -= 1e-6;
        EXPECT_NEAR(g[i], (dom.phi(xp) - dom.phi(xm)) / 2e-6, 1e-8);
    }
    EXPECT_THROW(ModelDomain(4, 1.0, {0.1, 0.1}), std::invalid_argument);
}

TEST(VolumeQuadrature, HalfBallVolumes)
{
    QuadratureConfig cfg;
    auto one = [](std::span<const double>) { return 1.0; };
    EXPECT_NEAR(volume_quadrature(one, ModelDomain(2, 1.0, {0.0}), cfg).value, std::numbers::pi / 2, 1e-10);
    EXPECT_NEAR(volume_quadrature(one, ModelDomain(3, 1.0, {0.0, 0.0}), cfg).value, 2.0 * std::numbers::pi / 3,
                1e-10);
    EXPECT_NEAR(volume_quadrature(one, ModelDomain(4, 1.0, {0.0, 0.0, 0.0}), cfg).value,
                std::numbers::pi * std::numbers::pi / 4, 1e-10);
}

TEST(VolumeQuadrature, ShrinksWithCurvature)
{
    QuadratureConfig cfg;
    auto one = [](std::span<const double>) { return 1.0; };
    double prev = volume_quadrature(one, ModelDomain(3, 1.0, {0.0, 0.0}), cfg).value;
    for (double g : {0.05, 0.1, 0.2}) {
        const double v = volume_quadrature(one, ModelDomain(3, 1.0, {g, g}), cfg).value;
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(VolumeQuadrature, CurvedVolumeMatchesDirectIntegration)
{
    // For φ = γ|x'|², n = 2: area = ∫_{-ρ*}^{ρ*} (sqrt(1-x²) - γx²) dx with ρ* where both meet
    const double g = 0.3;
    const double rs = std::sqrt((-1.0 + std::sqrt(1.0 + 4.0 * g * g)) / (2.0 * g * g));
    const double exact = (std::asin(rs) + rs * std::sqrt(1 - rs * rs)) - 2.0 * g * rs * rs * rs / 3.0;
    QuadratureConfig cfg;
    auto one = [](std::span<const double>) { return 1.0; };
    EXPECT_NEAR(volume_quadrature(one, ModelDomain(2, 1.0, {g}), cfg).value, exact, 1e-9);
}

TEST(VolumeQuadrature, BubbleMassApproachesHalfFullSpace)
{
    const ProblemParams pp(3, 1.5);
    const double full = sphere_area(3) * radial_integral({3.0, pp.q(), 3.0});
    const ModelDomain dom(3, 1.0, {0.0, 0.0});
    double prev_err = 1e300;
    for (double lam : {10.0, 100.0, 1000.0}) {
        BubbleParams b(pp, {0.0, 0.0, 0.0}, lam);
        QuadratureConfig cfg;
        QuadratureHints hints;
        hints.peak_length = b.length_scale();
        hints.peak_rescale = true;
        hints.axisymmetric = true;
        auto f = [&](std::span<const double> x) { return std::pow(delta(x, b), pp.p_star()); };
        const double err = std::abs(volume_quadrature(f, dom, cfg, hints).value - 0.5 * full);
        EXPECT_LT(err, prev_err);
        prev_err = err;
    }
    EXPECT_LT(prev_err / (0.5 * full), 1e-2);
}

TEST(VolumeQuadrature, PeakRescaleOnOffAgree)
{
    const ProblemParams pp(3, 1.5);
    const ModelDomain dom(3, 1.0, {0.1, 0.05});
    for (double lam : {10.0, 100.0}) {
        BubbleParams b(pp, {0.0, 0.0, 0.0}, lam);
        QuadratureConfig cfg;
        auto f = [&](std::span<const double> x) { return std::pow(delta(x, b), pp.p_star()); };
        QuadratureHints on, off;
        on.peak_length = off.peak_length = b.length_scale();
        on.peak_rescale = true;
        const auto a = volume_quadrature(f, dom, cfg, on);
        const auto c = volume_quadrature(f, dom, cfg, off);
        EXPECT_NEAR(a.value, c.value, std::max(1e-8 * a.value, a.error + c.error));
    }
}

TEST(VolumeQuadrature, DoublingNodesWithinErrorEstimate)
{
    const ProblemParams pp(4, 2.2);
    const ModelDomain dom(4, 1.0, {0.1, 0.1, 0.1});
    BubbleParams b(pp, {0.0, 0.0, 0.0, 0.0}, 25.0);
    QuadratureHints h;
    h.peak_length = b.length_scale();
    h.peak_rescale = true;
    h.axisymmetric = true;
    auto f = [&](std::span<const double> x) { return grad_delta_pnorm(x, b); };
    QuadratureConfig c8, c16;
    c16.nodes_radial = c16.nodes_normal = c16.nodes_angular = 16;
    const auto a = volume_quadrature(f, dom, c8, h);
    const auto d = volume_quadrature(f, dom, c16, h);
    EXPECT_LE(std::abs(a.value - d.value), a.error + 1e-12 * std::abs(a.value));
}

TEST(VolumeQuadrature, AxisymmetricShortcutMatchesFullAngularRule)
{
    const ProblemParams pp(4, 2.2);
    const ModelDomain dom(4, 1.0, {0.1, 0.1, 0.1});
    BubbleParams b(pp, {0.0, 0.0, 0.0, 0.0}, 25.0);
    auto f = [&](std::span<const double> x) { return grad_delta_pnorm(x, b); };
    QuadratureHints h;
    h.peak_length = b.length_scale();
    h.peak_rescale = true;
    QuadratureConfig cfg;
    const double full = volume_quadrature(f, dom, cfg, h).value;
    h.axisymmetric = true;
    EXPECT_NEAR(volume_quadrature(f, dom, cfg, h).value, full, 1e-10 * full);
}

TEST(VolumeQuadrature, DecompositionIsConsistent)
{
    const ModelDomain dom(3, 1.0, {0.2, -0.1});
    auto f = [](std::span<const double> x, std::array<double, 2>& out) {
        out[0] = 1.0;
        out[1] = x[2] * x[2];
    };
    const auto r = volume_quadrature_multi<2>(f, dom, QuadratureConfig{});
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(r.value[k], r.half_space[k] - r.graph_defect[k], 1e-15);
    EXPECT_NEAR(r.half_space[0], 2.0 * std::numbers::pi / 3, 1e-10);
}

TEST(SurfaceQuadrature, FlatAndCurvedAreas)
{
    QuadratureConfig cfg;
    auto one = [](std::span<const double>) { return 1.0; };
    EXPECT_NEAR(gamma1_surface_quadrature(one, ModelDomain(3, 1.0, {0.0, 0.0}), cfg).value, std::numbers::pi,
                1e-10);
    EXPECT_NEAR(gamma1_surface_quadrature(one, ModelDomain(2, 1.0, {0.0}), cfg).value, 2.0, 1e-12);
    // parameter radius 0.5 through the support hint: curved area exceeds the flat disk
    QuadratureHints h;
    h.support_radius = 0.5;
    const double flat = gamma1_surface_quadrature(one, ModelDomain(3, 1.0, {0.0, 0.0}), cfg, h).value;
    EXPECT_NEAR(flat, std::numbers::pi * 0.25, 1e-10);
    // graph over |x'| < ρ₀ with ρ₀ fixed: compare against the exact surface of revolution
    const double g = 0.2;
    const ModelDomain dom(3, 1.0, {g, g});
    const double area = gamma1_surface_quadrature(one, dom, cfg).value;
    const double rs = std::sqrt((-1.0 + std::sqrt(1.0 + 4.0 * g * g)) / (2.0 * g * g));
    const double exact = std::numbers::pi / (6.0 * g * g) * (std::pow(1.0 + 4 * g * g * rs * rs, 1.5) - 1.0);
    EXPECT_NEAR(area, exact, 1e-9);
    EXPECT_GT(area, std::numbers::pi * rs * rs);
}

TEST(SurfaceQuadrature, BubbleTraceLeadingBehaviour)
{
    const ProblemParams pp(4, 2.0);
    const double ct = c_tilde(pp);
    const ModelDomain dom(4, 1.0, {0.0, 0.0, 0.0});
    double prev = 1e300;
    for (double lam : {100.0, 1000.0, 10000.0}) {
        BubbleParams b(pp, {0.0, 0.0, 0.0, 0.0}, lam);
        QuadratureHints h;
        h.peak_length = b.length_scale();
        h.peak_rescale = true;
        h.axisymmetric = true;
        auto g = [&](std::span<const double> x) { return std::pow(delta(x, b), pp.p); };
        const double v = gamma1_surface_quadrature(g, dom, QuadratureConfig{}, h).value;
        const double ratio = v * std::pow(lam, (pp.p - 1) * (pp.p - 1)) / ct;
        EXPECT_LT(std::abs(ratio - 1.0), prev);
        prev = std::abs(ratio - 1.0);
    }
    EXPECT_LT(prev, 0.02);
}
