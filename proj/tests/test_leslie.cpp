#include <gtest/gtest.h>

#include <random>

#include "nlq/leslie.hpp"
#include "oracles.hpp"

using namespace nlq;

namespace {

MaterialParams worked()
{
    MaterialParams p;
    p.a = p.b = p.c = 1.0;
    p.L1 = 1.0;
    p.Gamma = 1.0;
    p.eta = 1.0;
    p.xi = 0.1;
    return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST(Leslie, WorkedInstance)
{
    const LeslieCoefficients lc = derive_coefficients(worked());
    EXPECT_DOUBLE_EQ(lc.splus, 1.5);
    EXPECT_NEAR(lc.gamma1, 4.5, 1e-15);
    EXPECT_NEAR(lc.gamma2, -0.35, 1e-15);
    EXPECT_NEAR(lc.alpha2, -2.425, 1e-15);
    EXPECT_NEAR(lc.alpha3, 2.075, 1e-15);
    EXPECT_NEAR(lc.alpha5 + lc.alpha6, 0.025, 1e-15);
    EXPECT_NEAR(lc.beta3, -0.02 / 9.0, 1e-15);
    EXPECT_NEAR(lc.alpha1, 0.0, 1e-15);
    EXPECT_NEAR(lc.k1, 4.5, 1e-15);
    EXPECT_NEAR(lc.alpha4, 1.0 + 0.01 / 9.0, 1e-15);
}

TEST(Leslie, NoTumblingLimit)
{
    MaterialParams p = worked();
    p.xi = 0.0;
    const LeslieCoefficients lc = derive_coefficients(p);
    EXPECT_EQ(lc.gamma2, 0.0);
    EXPECT_EQ(lc.alpha1, 0.0);
    EXPECT_EQ(lc.alpha5, 0.0);
    EXPECT_EQ(lc.alpha6, 0.0);
    EXPECT_EQ(lc.alpha4, p.eta);
    EXPECT_EQ(lc.alpha2, -2.25);
    EXPECT_EQ(lc.alpha3, 2.25);
}

TEST(Leslie, RelationsHoldForRandomParameters)
{
    std::mt19937_64 rng(71);
    for (int k = 0; k < 1000; ++k) {
        const MaterialParams p = oracle::random_params(rng);
        const LeslieCoefficients lc = derive_coefficients(p);
        const double s = lc.splus;
        EXPECT_LE(rel(lc.alpha2 + lc.alpha3, lc.alpha6 - lc.alpha5), 1e-12);
        EXPECT_LE(rel(lc.gamma1, lc.alpha3 - lc.alpha2), 1e-12);
        EXPECT_LE(rel(lc.gamma2, lc.alpha6 - lc.alpha5), 1e-12);
        EXPECT_LE(rel(lc.beta3, -8.0 * p.Gamma * p.xi * p.xi * (1 - s) * (1 - s) / 9.0), 1e-12);
        EXPECT_LE(rel(lc.k1, 2 * p.L1 * s * s), 1e-12);
        EXPECT_EQ(lc.k1, lc.k2);
        EXPECT_EQ(lc.k2, lc.k3);
        EXPECT_EQ(lc.k4, 0.0);
        EXPECT_GT(lc.gamma1, 0.0);
        EXPECT_EQ(lc.beta2, lc.alpha4);
    }
}

TEST(Leslie, AlphaOneVanishesAtRootsOnly)
{
    MaterialParams p = worked();
    p.xi = 0.4;
    EXPECT_EQ(derive_coefficients(p).alpha1, 0.0);
    p.a = 2.0;  // s+ = 2
    EXPECT_NE(derive_coefficients(p).alpha1, 0.0);
}

// The Q-tensor stress at Q* = s+(dd - I/3) with H* = Gamma[s+(N d + d N) - S_Q*(D)]
// differs from the Leslie stress by a pressure only.
TEST(Leslie, StressMatchesQTensorStressModuloPressure)
{
    std::mt19937_64 rng(73);
    for (int k = 0; k < 500; ++k) {
        const MaterialParams p = oracle::random_params(rng);
        const LeslieCoefficients lc = derive_coefficients(p);
        const double s = lc.splus;
        const Vec3 d = random_unit_vector(rng);
        const Vec3 w = random_unit_vector(rng);
        const Vec3 N = w - dot(w, d) * d;
        const Mat3 D = random_unit_qtensor(rng).to_mat();
        const QTensor Qs = QTensor::uniaxial(s, d);
        const Mat3 Q = Qs.to_mat();
        const Mat3 H = p.Gamma * (s * (Mat3::outer(N, d) + Mat3::outer(d, N)) - s_q_operator(Qs, D, p.xi));
        const Mat3 sbe = p.eta * D - s_q_operator(Qs, H, p.xi) + Q * H - H * Q;

        const Mat3 dd = Mat3::outer(d, d);
        const Mat3 sl = lc.alpha1 * ddot(dd, D) * dd + lc.alpha2 * Mat3::outer(N, d) + lc.alpha3 * Mat3::outer(d, N)
            + lc.alpha4 * D + lc.alpha5 * (D * dd) + lc.alpha6 * (dd * D);
        const Mat3 diff = sbe - sl;
        const double pr = diff.trace() / 3.0;
        const Mat3 dev = diff - pr * Mat3::identity();
        double scale = 0.0, err = 0.0;
        for (int i = 0; i < 9; ++i) {
            scale = std::max(scale, std::abs(sl.m[i]));
            err = std::max(err, std::abs(dev.m[i]));
        }
        EXPECT_LE(err, 1e-12 * std::max(1.0, scale));
    }
}

// Tangential part of the Q-equation at Q* reproduces the director balance:
// (S_Q*(D) d) projected off d equals -(gamma2 / (2 Gamma s+)) (D d) projected off d.
TEST(Leslie, RotationalViscositiesFromTangentialBalance)
{
    std::mt19937_64 rng(79);
    for (int k = 0; k < 500; ++k) {
        const MaterialParams p = oracle::random_params(rng);
        const LeslieCoefficients lc = derive_coefficients(p);
        const double s = lc.splus;
        const Vec3 d = random_unit_vector(rng);
        const Mat3 D = random_unit_qtensor(rng).to_mat();
        const Vec3 sd = s_q_operator(QTensor::uniaxial(s, d), D, p.xi).apply(d);
        const Vec3 Dd = D.apply(d);
        const Vec3 lhs = sd - dot(sd, d) * d;
        const Vec3 rhs = (-lc.gamma2 / (2.0 * p.Gamma * s)) * (Dd - dot(Dd, d) * d);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-12 * (1 + norm(rhs)));
        EXPECT_NEAR(lc.gamma1, 2.0 * p.Gamma * s * s, 1e-12 * lc.gamma1);
    }
}

TEST(DissipationReport, NoTumblingIsPositive)
{
    MaterialParams p = worked();
    p.xi = 0.0;
    const LeslieCoefficients lc = derive_coefficients(p);
    const DissipationSignReport r = dissipation_sign_report(lc, p, 1.0, 10);
    EXPECT_EQ(r.sign_beta3, 0);
    EXPECT_TRUE(r.psd);
}

TEST(DissipationReport, WorkedInstancePositive)
{
    const MaterialParams p = worked();
    const LeslieCoefficients lc = derive_coefficients(p);
    const DissipationSignReport r = dissipation_sign_report(lc, p, 2.0, 20);
    EXPECT_EQ(r.sign_beta3, -1);
    EXPECT_EQ(r.sign_beta2, 1);
    EXPECT_TRUE(r.psd);
    // The form equals eta|D|^2 plus a square, so its minimum per unit |D|^2 is eta.
    EXPECT_NEAR(r.min_eigenvalue, p.eta, 1e-9);
    EXPECT_FALSE(r.threshold_bounded);
    EXPECT_EQ(r.xi_threshold, 2.0);
}

TEST(DissipationReport, BetaThreeVanishesAtUnitOrder)
{
    MaterialParams p = worked();
    p.a = 1.0 / 3.0;  // s+ = 1
    const LeslieCoefficients lc = derive_coefficients(p);
    EXPECT_NEAR(lc.splus, 1.0, 1e-15);
    EXPECT_NEAR(lc.beta3, 0.0, 1e-15);
}

TEST(DissipationReport, FormAgainstDirectSampling)
{
    std::mt19937_64 rng(83);
    for (int k = 0; k < 20; ++k) {
        const MaterialParams p = oracle::random_params(rng);
        const LeslieCoefficients lc = derive_coefficients(p);
        const double m = dissipation_form_min(lc);
        EXPECT_GE(m, p.eta * (1 - 1e-9));
        EXPECT_LE(m, lc.alpha4 * (1 + 1e-9));
    }
}
