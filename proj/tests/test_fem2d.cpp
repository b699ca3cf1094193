#include "plap/fem2d.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <sstream>

using namespace plap;
using namespace plap::fem;

namespace {

constexpr auto G0 = BoundaryLabel::gamma0;
constexpr auto G1 = BoundaryLabel::gamma1;

PotentialSpec potential(double alpha, double beta)
{
    PotentialSpec pot;
    pot.alpha = Polynomial::constant(alpha);
    pot.beta = Polynomial::constant(beta);
    return pot;
}

std::vector<double> random_field(const Mesh& m, std::uint64_t seed, bool zero_on_g0, double lo = -0.5)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, 1.5);
    std::vector<double> u(m.vertices.size());
    for (double& v : u) v = d(rng);
    if (zero_on_g0) {
        const auto mask = m.dirichlet_mask();
        for (std::size_t i = 0; i < u.size(); ++i)
            if (mask[i]) u[i] = 0.0;
    }
    return u;
}

const Mesh& desk_mesh()
{
    static const Mesh m = triangulate(half_disk_outline(64), 0.1);
    return m;
}

} // namespace

TEST(Mesh, HalfDiskSatisfiesInvariants)
{
    const auto& m = desk_mesh();
    EXPECT_NO_THROW(m.validate());
    EXPECT_LE(m.max_edge_length(), 0.15);
    EXPECT_NEAR(m.boundary_length(G1), 2.0, 1e-12);
    EXPECT_NEAR(m.area(), 32.0 * std::sin(std::numbers::pi / 64.0), 1e-12);
}

TEST(Mesh, HalvingHAtLeastTriplesTriangles)
{
    const auto a = triangulate(half_disk_outline(64), 0.1);
    const auto b = triangulate(half_disk_outline(64), 0.05);
    EXPECT_GE(b.triangles.size(), 3 * a.triangles.size());
}

TEST(Mesh, LabelsFollowOutline)
{
    const auto m = triangulate(rectangle_outline(0, 0, 1, 1, {G1, G1, G1, G0}), 0.2);
    double g0 = 0.0;
    for (const auto& e : m.boundary_edges)
        if (e.label == G0) {
            EXPECT_EQ(m.vertices[e.a][0], 0.0);
            EXPECT_EQ(m.vertices[e.b][0], 0.0);
            g0 += m.edge_length(e.a, e.b);
        } else {
            EXPECT_FALSE(m.vertices[e.a][0] == 0.0 && m.vertices[e.b][0] == 0.0);
        }
    EXPECT_NEAR(g0, 1.0, 1e-12);
}

TEST(Mesh, ClockwiseOutlineKeepsLabels)
{
    LabeledPolygon cw{{{0, 0}, {0, 1}, {1, 1}, {1, 0}}, {G0, G1, G1, G1}};
    const auto m = triangulate(cw, 0.25);
    EXPECT_NEAR(m.boundary_length(G0), 1.0, 1e-12);
    for (const auto& e : m.boundary_edges)
        if (e.label == G0) EXPECT_EQ(m.vertices[e.a][0], 0.0);
}

TEST(Mesh, NonConvexOutline)
{
    LabeledPolygon l{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, {G1, G1, G1, G1, G1, G0}};
    const auto m = triangulate(l, 0.2);
    EXPECT_NEAR(m.area(), 3.0, 1e-12);
    EXPECT_NEAR(m.boundary_length(G1) + m.boundary_length(G0), 8.0, 1e-12);
}

TEST(Mesh, SelfIntersectingOutlineRejected)
{
    LabeledPolygon bow{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}, {G1, G1, G1, G0}};
    EXPECT_THROW(triangulate(bow, 0.1), InvalidGeometry);
}

TEST(Mesh, TextRoundTrip)
{
    const auto& m = desk_mesh();
    std::stringstream ss;
    write_mesh(ss, m);
    const auto r = read_mesh(ss);
    EXPECT_EQ(r.vertices, m.vertices);
    EXPECT_EQ(r.triangles, m.triangles);
    ASSERT_EQ(r.boundary_edges.size(), m.boundary_edges.size());
    for (std::size_t i = 0; i < r.boundary_edges.size(); ++i) EXPECT_EQ(r.boundary_edges[i].label, m.boundary_edges[i].label);
}

TEST(Mesh, ReaderReportsLine)
{
    std::stringstream ss("v 0 0\nv 1 0\nv 0 1\nt 0 1 2\ne 0 1 G2\n");
    try {
        read_mesh(ss);
        FAIL();
    } catch (const InvalidGeometry& e) {
        EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos);
    }
}

TEST(Mesh, ReaderRejectsUnlabelledBoundary)
{
    std::stringstream ss("v 0 0\nv 1 0\nv 0 1\nt 0 1 2\ne 0 1 G1\ne 1 2 G1\n");
    EXPECT_THROW(read_mesh(ss), InvalidGeometry);
}

TEST(Mesh, RefinementIsNested)
{
    const auto& m = desk_mesh();
    const auto r = refine(m);
    EXPECT_EQ(r.mesh.triangles.size(), 4 * m.triangles.size());
    EXPECT_NO_THROW(r.mesh.validate());
    EXPECT_NEAR(r.mesh.area(), m.area(), 1e-12);
    const auto u = random_field(m, 3, false);
    const auto a = assemble_energy(m, u, 1.4, potential(0, 0), 1.4, 0.0);
    const auto b = assemble_energy(r.mesh, r.prolong(u), 1.4, potential(0, 0), 1.4, 0.0);
    EXPECT_NEAR(a.gradient_part, b.gradient_part, 1e-12 * a.gradient_part);
}

TEST(Energy, ZeroField)
{
    const auto& m = desk_mesh();
    const std::vector<double> u(m.vertices.size(), 0.0);
    const auto a = assemble_energy(m, u, 1.4, potential(1, -1), 4.0, 1e-2);
    EXPECT_EQ(a.E, 0.0);
    EXPECT_EQ(a.M, 0.0);
}

TEST(Energy, ConstantFieldClosedForm)
{
    const auto m = triangulate(rectangle_outline(0, 0, 2, 1, {G1, G1, G1, G1}), 0.2);
    const std::vector<double> u(m.vertices.size(), 1.0);
    const auto a = assemble_energy(m, u, 1.5, potential(0.7, -0.3), 3.0, 1e-3);
    EXPECT_NEAR(a.E, 0.7 * 2.0 + -0.3 * 6.0, 1e-12);
    EXPECT_NEAR(a.M, 2.0, 1e-12);
}

TEST(Energy, GradientMatchesCentralDifferences)
{
    const auto& m = desk_mesh();
    PotentialSpec pot = potential(1.0, -1.0);
    pot.alpha.terms.push_back({0.5, {1, 1}});
    const double p = 1.4, q = 3.9, eps = 1e-2;
    // strictly positive so that |u|^p is smooth along every direction
    const auto u = random_field(m, 7, false, 0.5);
    const auto a = assemble_energy(m, u, p, pot, q, eps);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int dir = 0; dir < 20; ++dir) {
        std::vector<double> d(u.size());
        for (double& v : d) v = nd(rng);
        double gE = 0.0, gM = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) gE += a.dE[i] * d[i], gM += a.dM[i] * d[i];
        auto fd = [&](double h) {
            std::vector<double> up(u), um(u);
            for (std::size_t i = 0; i < u.size(); ++i) up[i] += h * d[i], um[i] -= h * d[i];
            const auto A = assemble_energy(m, up, p, pot, q, eps);
            const auto B = assemble_energy(m, um, p, pot, q, eps);
            return std::pair{(A.E - B.E) / (2 * h), (A.M - B.M) / (2 * h)};
        };
        const auto [e1, m1] = fd(2e-4);
        const auto [e2, m2] = fd(1e-4);
        EXPECT_LT(std::abs(e2 - gE), 1e-5 * std::abs(gE)) << dir;
        EXPECT_LT(std::abs(m2 - gM), 1e-5 * std::abs(gM)) << dir;
        // second order: halving the step quarters the error
        const double rE = std::abs(e1 - gE) / std::abs(e2 - gE);
        const double rM = std::abs(m1 - gM) / std::abs(m2 - gM);
        EXPECT_GT(rE, 3.0) << dir;
        EXPECT_LT(rE, 5.0) << dir;
        EXPECT_GT(rM, 3.0) << dir;
        EXPECT_LT(rM, 5.0) << dir;
    }
}

TEST(Energy, QuotientIsZeroHomogeneous)
{
    const auto& m = desk_mesh();
    const auto pot = potential(1.0, -1.0);
    const double p = 1.4, q = 4.6;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto u = random_field(m, seed, true);
        const double J = quotient_value(assemble_energy(m, u, p, pot, q, 0.0), p, q);
        for (double c : {0.1, 3.0, 100.0}) {
            std::vector<double> v(u);
            for (double& x : v) x *= c;
            EXPECT_NEAR(quotient_value(assemble_energy(m, v, p, pot, q, 0.0), p, q), J, 1e-12 * std::abs(J));
        }
    }
}

TEST(Energy, NormalizedQuotientGradient)
{
    const auto& m = desk_mesh();
    const auto pot = potential(1.0, -1.0);
    const auto u = random_field(m, 5, true);
    const auto r = normalized_quotient(m, u, 1.4, pot, 4.0, 1e-3);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    std::vector<double> d(u.size());
    for (double& v : d) v = nd(rng);
    double g = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) g += r.gradient[i] * d[i];
    const double h = 1e-5;
    std::vector<double> up(u), um(u);
    for (std::size_t i = 0; i < u.size(); ++i) up[i] += h * d[i], um[i] -= h * d[i];
    const double fd = (normalized_quotient(m, up, 1.4, pot, 4.0, 1e-3).value -
                       normalized_quotient(m, um, 1.4, pot, 4.0, 1e-3).value) /
                      (2 * h);
    EXPECT_NEAR(fd, g, 1e-6 * std::abs(g));
    std::vector<double> v(u);
    for (double& x : v) x *= 7.0;
    EXPECT_NEAR(normalized_quotient(m, v, 1.4, pot, 4.0, 1e-3).value, r.value, 1e-12 * std::abs(r.value));
}

TEST(Coercivity, AlphaOneGivesAtLeastOne)
{
    const auto m = triangulate(rectangle_outline(0, 0, 1, 1, {G1, G1, G1, G1}), 0.2);
    EXPECT_GE(coercivity_estimate(m, 1.4, potential(1.0, 0.0)), 1.0 - 1e-6);
}

TEST(Coercivity, PoincareWithDirichletPart)
{
    EXPECT_GT(coercivity_estimate(desk_mesh(), 1.4, potential(0.0, 0.0)), 0.0);
}

TEST(Coercivity, StrongNegativeBetaOnTinyDomain)
{
    const auto m = triangulate(rectangle_outline(0, 0, 0.1, 0.1, {G1, G1, G1, G1}), 0.025);
    const auto pot = potential(0.0, -50.0);
    EXPECT_LT(coercivity_estimate(m, 1.4, pot), 0.0);
    EXPECT_THROW(minimize_quotient(m, 1.4, pot), NonCoercive);
}

TEST(Minimize, ConstantFieldAtEqualExponents)
{
    const auto m = triangulate(half_disk_outline(32, G1, G1), 0.15);
    ContinuationSchedule s;
    s.fixed_q = 1.4;
    const auto r = minimize_quotient(m, 1.4, potential(1.0, 0.0), s);
    // J(1) = α|Ω|^{1-p/q} = 1
    EXPECT_NEAR(r.Q_estimate, 1.0, 1e-6);
}

TEST(Minimize, DeskConfigurationInvariants)
{
    const auto& m = desk_mesh();
    const auto pot = potential(1.0, -1.0);
    const auto r = minimize_quotient(m, 1.4, pot);
    EXPECT_TRUE(r.converged) << r.diagnostics;
    EXPECT_NEAR(r.q_used, 2 * 1.4 / 0.6 - 0.05, 1e-12);
    const auto mask = m.dirichlet_mask();
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) EXPECT_EQ(r.coefficients[i], 0.0);
    EXPECT_EQ(normalized_quotient(m, r.coefficients, 1.4, pot, r.q_used, r.eps_used).value, r.J_value);
    for (std::size_t k = 1; k < r.history.size(); ++k)
        if (r.history[k].stage == r.history[k - 1].stage) EXPECT_LT(r.history[k].J, r.history[k - 1].J);
    EXPECT_LT(r.Q_estimate, threshold_level(ProblemParams(2, 1.4)));
}

TEST(Minimize, RandomStartsAgree)
{
    const auto m = triangulate(half_disk_outline(32), 0.15);
    const auto pot = potential(1.0, -1.0);
    ContinuationSchedule s;
    s.q_margin = 0.5;
    s.check_coercivity = false;
    std::vector<double> Q;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        s.seed = seed;
        Q.push_back(minimize_quotient(m, 1.4, pot, s).Q_estimate);
    }
    const auto [lo, hi] = std::minmax_element(Q.begin(), Q.end());
    EXPECT_LT((*hi - *lo) / *lo, 1e-2);
}

TEST(Refinement, MonotoneAndBelowThreshold)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = quotient_vs_threshold(desk_mesh(), 2, 1.4, potential(1.0, -1.0));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ASSERT_EQ(rep.rows.size(), 3u);
    EXPECT_TRUE(rep.monotone);
    EXPECT_LE(rep.max_increase, 1e-3);
    EXPECT_TRUE(rep.final_below());
    EXPECT_LT(secs, 300.0);
}

TEST(Refinement, PositiveBetaIsObservational)
{
    const auto m = triangulate(half_disk_outline(32), 0.15);
    const auto rep = quotient_vs_threshold(m, 1, 1.4, potential(0.0, 1.0));
    EXPECT_EQ(rep.rows.size(), 2u);
    EXPECT_GT(rep.rows.back().Q_estimate, 0.0);
}
