#include "plap/special_constants.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace plap;

namespace {

double beta_oracle(double s, double q, double m) { return std::beta(s / q, m - s / q) / q; }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

const std::vector<std::pair<int, double>> kParams = {{2, 1.4}, {3, 1.5}, {4, 2.0}, {4, 2.2}, {5, 2.5}};

} // namespace

TEST(SphereArea, KnownValues)
{
    EXPECT_DOUBLE_EQ(sphere_area(1), 2.0);
    EXPECT_NEAR(sphere_area(2), 2.0 * std::numbers::pi, 1e-14);
    EXPECT_NEAR(sphere_area(3), 4.0 * std::numbers::pi, 1e-14);
    EXPECT_THROW(sphere_area(0), std::invalid_argument);
}

TEST(ProblemParams, Validation)
{
    EXPECT_THROW(ProblemParams(3, 1.0), std::invalid_argument);
    EXPECT_THROW(ProblemParams(3, 3.0), std::invalid_argument);
    EXPECT_THROW(ProblemParams(1, 0.5), std::invalid_argument);
    const ProblemParams pp(4, 2.0);
    EXPECT_DOUBLE_EQ(pp.p_star(), 4.0);
    EXPECT_GT(pp.p_star(), pp.p);
}

TEST(RadialIntegral, ClosedForms)
{
    EXPECT_NEAR(radial_integral({1, 1, 2}), 1.0, 1e-12);
    EXPECT_NEAR(radial_integral({2, 2, 2}), 0.5, 1e-12);
    EXPECT_NEAR(radial_integral({3, 2, 3}), std::numbers::pi / 16.0, 1e-12);
}

TEST(RadialIntegral, DivergenceIsAnalytic)
{
    EXPECT_THROW(radial_integral({2, 1, 2}), LogDivergent);
    EXPECT_THROW(radial_integral({3, 1, 2}), DivergentIntegral);
    try {
        radial_integral({3, 1, 2});
        FAIL();
    } catch (const LogDivergent&) {
        FAIL() << "power divergence reported as log divergence";
    } catch (const DivergentIntegral&) {
    }
}

TEST(RadialIntegral, RandomSpecsMatchBetaAndClassification)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> us(0.3, 6.0), uq(1.1, 4.0), um(0.2, 7.0);
    int convergent = 0;
    for (int i = 0; i < 100; ++i) {
        const RadialIntegralSpec spec{us(rng), uq(rng), um(rng)};
        const bool expect_conv = spec.q * spec.m > spec.s;
        EXPECT_EQ(classify(spec) == Convergence::convergent, expect_conv);
        if (!expect_conv) {
            EXPECT_THROW(radial_integral(spec), DivergentIntegral);
            continue;
        }
        if (spec.q * spec.m - spec.s < 0.05) continue;
        ++convergent;
        EXPECT_LT(rel(radial_integral(spec), beta_oracle(spec.s, spec.q, spec.m)), 1e-8)
            << spec.s << " " << spec.q << " " << spec.m;
    }
    EXPECT_GT(convergent, 20);
}

TEST(Constants, BetaOracle)
{
    for (auto [n, p] : kParams) {
        const ProblemParams pp(n, p);
        const double q = pp.q();
        EXPECT_LT(rel(sigma(pp), 0.5 * sphere_area(n) * beta_oracle(n + q, q, n)), 1e-8);
        EXPECT_LT(rel(c2(pp), sphere_area(n - 1) * beta_oracle(n + 1, q, n)), 1e-8);
        if (p < 0.5 * (n + 1))
            EXPECT_LT(rel(c1(pp), sphere_area(n - 1) * beta_oracle(n + 1, q, n - 1)), 1e-8);
        if (c_tilde_converges(pp))
            EXPECT_LT(rel(c_tilde(pp), sphere_area(n - 1) * beta_oracle(n - 1, q, n - p)), 1e-8);
    }
}

TEST(Constants, SigmaIsHalfFullSpace)
{
    for (auto [n, p] : kParams) {
        const ProblemParams pp(n, p);
        EXPECT_LT(rel(2.0 * sigma(pp), sigma_full_space(pp)), 1e-12);
    }
}

TEST(Constants, C2BelowC1)
{
    const ProblemParams pp(4, 2.2);
    EXPECT_LT(c2(pp), c1(pp));
    EXPECT_GT(c2(ProblemParams(3, 2.0)), 0.0);
}

TEST(Constants, C1DivergenceBoundary)
{
    for (int n : {3, 4, 5}) {
        const double pm = 0.5 * (n + 1);
        EXPECT_THROW(c1(ProblemParams(n, pm)), LogDivergent);
        EXPECT_GT(c1(ProblemParams(n, pm - 0.01)), 0.0);
        if (pm + 0.1 < n) {
            try {
                c1(ProblemParams(n, pm + 0.1));
                FAIL();
            } catch (const LogDivergent&) {
                FAIL();
            } catch (const DivergentIntegral&) {
            }
        }
    }
}

TEST(Constants, CTildeConvergenceRule)
{
    EXPECT_TRUE(c_tilde_converges(ProblemParams(4, 2.0)));
    EXPECT_TRUE(c_tilde_converges(ProblemParams(3, 1.5)));
    EXPECT_FALSE(c_tilde_converges(ProblemParams(3, 2.0)));
    EXPECT_THROW(c_tilde(ProblemParams(3, 2.0)), LogDivergent);
    EXPECT_TRUE(c_tilde_converges(ProblemParams(2, 1.5)));
    EXPECT_FALSE(c_tilde_converges(ProblemParams(2, 1.7)));
}

TEST(Constants, C1MinusPC2Positive)
{
    // for n = 3 the range 2 < p < (n+1)/2 is empty
    for (int n : {4, 5, 6}) {
        const double hi = 0.5 * (n + 1);
        for (int i = 1; i <= 20; ++i) {
            const double p = 2.0 + (hi - 2.0) * i / 21.0;
            const auto r = c1_minus_p_c2(ProblemParams(n, p));
            EXPECT_GT(r.difference, 0.0);
            EXPECT_GT(r.single_integral, 0.0);
            EXPECT_LT(std::abs(r.difference - r.single_integral), 1e-8 * std::abs(r.difference));
        }
    }
}

TEST(Sobolev, IdentitiesAndScaleInvariance)
{
    for (auto [n, p] : kParams) {
        const ProblemParams pp(n, p);
        const auto sc = sobolev_constant(pp);
        EXPECT_GT(sc.S, 0.0);
        EXPECT_LT(sc.sigma_identity_residual, 1e-6);
        EXPECT_LT(sc.mass_gradient_identity_residual, 1e-10);
        EXPECT_LT(rel(half_bubble_level(pp, sigma(pp)), threshold_level(pp)), 1e-6);
    }
}

TEST(Sobolev, PrintedIdentityPrefactorDiffers)
{
    const auto sc = sobolev_constant(ProblemParams(4, 2.2));
    EXPECT_GT(sc.sigma_identity_residual_printed, 1e-2);
}

TEST(Sobolev, MatchesDirectFullSpaceQuotient)
{
    const ProblemParams pp(4, 2.0);
    const double k = pp.k();
    const double q = pp.q();
    // λ = 3 bubble, integrands written out explicitly in r
    const double lam = 3.0;
    const double p = pp.p;
    const int n = pp.n;
    auto grad = [&](double r) {
        const double t = std::pow(lam, p) * std::pow(r, q);
        return std::pow(r, n - 1) * std::pow(k, p) * std::pow(lam, n * (p - 1) + p) * std::pow(r, q) *
               std::pow(1 + t, -double(n));
    };
    auto mass = [&](double r) {
        const double t = std::pow(lam, p) * std::pow(r, q);
        const double d = std::pow(lam, (p - 1) * (n - p) / p) * std::pow(1 + t, -(n - p) / p);
        return std::pow(r, n - 1) * std::pow(d, pp.p_star());
    };
    const auto g = integrate_half_line(grad, n + q, q * n - n - q, 1e-15, 1e-12, 4000);
    const auto m = integrate_half_line(mass, double(n), q * n - n, 1e-15, 1e-12, 4000);
    const double w = sphere_area(n);
    const double S = w * g.value / std::pow(w * m.value, p / pp.p_star());
    EXPECT_LT(rel(S, sobolev_constant(pp).S), 1e-8);
}

TEST(Constants, Bundle)
{
    const auto b = compute_constants(ProblemParams(3, 2.0));
    EXPECT_FALSE(b.c1.has_value());
    EXPECT_EQ(b.c1_status, Convergence::log_divergent);
    EXPECT_FALSE(b.c_hat.has_value());
    const auto b2 = compute_constants(ProblemParams(4, 2.2));
    ASSERT_TRUE(b2.c1.has_value());
    EXPECT_NEAR(*b2.c1, 17.896520929406712, 1e-8);
    EXPECT_NEAR(b2.S, 9.081095583415404, 1e-8);
    EXPECT_NEAR(b2.threshold, 6.202571071189993, 1e-8);
}
