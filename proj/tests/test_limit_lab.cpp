#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "nlq/errors.hpp"
#include "nlq/leslie.hpp"
#include "nlq/limit_lab.hpp"
#include "oracles.hpp"

using namespace nlq;

namespace {

constexpr double pi = std::numbers::pi;

Grid2D grid(int n) { return Grid2D(n, 2.0 * pi); }

VectorField3 planar_director(const Grid2D& g, const std::function<double(double, double)>& phi)
{
    VectorField3 d(g);
    for (std::size_t p = 0; p < g.npts(); ++p) {
        const double f = phi(g.x1(p), g.x2(p));
        vec_set(d, p, {std::cos(f), std::sin(f), 0.0});
    }
    return d;
}

Eigen::Matrix3d rot_z(double t)
{
    Eigen::Matrix3d r;
    r << std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1;
    return r;
}
Eigen::Matrix3d rot_z_dt(double t)
{
    Eigen::Matrix3d r;
    r << -std::sin(t), -std::cos(t), 0, std::cos(t), -std::sin(t), 0, 0, 0, 0;
    return r;
}
Eigen::Matrix3d rot_x(double t)
{
    Eigen::Matrix3d r;
    r << 1, 0, 0, 0, std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t);
    return r;
}
Eigen::Matrix3d rot_x_dt(double t)
{
    Eigen::Matrix3d r;
    r << 0, 0, 0, 0, -std::sin(t), -std::cos(t), 0, std::cos(t), -std::sin(t);
    return r;
}

// Q = R diag(l) R^T with R = Rz(theta) Rx(psi); everything differentiated by hand.
struct Manufactured {
    Eigen::Matrix3d R, Q;
    std::array<Eigen::Matrix3d, 2> dR, dQ;
    Eigen::Vector3d l;
    std::array<Eigen::Vector3d, 2> dl;
};

Manufactured manufactured(double x1, double x2)
{
    const double th = 0.7 * std::sin(x1) + 0.3 * std::cos(x2);
    const std::array<double, 2> dth{0.7 * std::cos(x1), -0.3 * std::sin(x2)};
    const double ps = 0.5 * std::cos(x1 + x2);
    const std::array<double, 2> dps{-0.5 * std::sin(x1 + x2), -0.5 * std::sin(x1 + x2)};
    Manufactured m;
    const double l1 = -0.3 - 0.05 * std::sin(x1), l2 = 0.05 + 0.05 * std::cos(x2);
    m.l << l1, l2, -l1 - l2;
    m.dl[0] << -0.05 * std::cos(x1), 0.0, 0.05 * std::cos(x1);
    m.dl[1] << 0.0, -0.05 * std::sin(x2), 0.05 * std::sin(x2);
    m.R = rot_z(th) * rot_x(ps);
    const Eigen::Matrix3d L = m.l.asDiagonal();
    m.Q = m.R * L * m.R.transpose();
    for (int k = 0; k < 2; ++k) {
        m.dR[k] = dth[k] * rot_z_dt(th) * rot_x(ps) + dps[k] * rot_z(th) * rot_x_dt(ps);
        const Eigen::Matrix3d dL = m.dl[k].asDiagonal();
        m.dQ[k] = m.dR[k] * L * m.R.transpose() + m.R * dL * m.R.transpose() + m.R * L * m.dR[k].transpose();
    }
    return m;
}

QTensor to_q(const Eigen::Matrix3d& m) { return {m(0, 0), m(0, 1), m(0, 2), m(1, 1), m(1, 2)}; }

QField manufactured_field(const Grid2D& g)
{
    QField Q(g);
    for (std::size_t p = 0; p < g.npts(); ++p) q_set(Q, p, to_q(manufactured(g.x1(p), g.x2(p)).Q));
    return Q;
}

ScalarField gaussian_density(const Grid2D& g, double mass, double sigma, double c1, double c2)
{
    ScalarField f(g);
    for (std::size_t p = 0; p < g.npts(); ++p) {
        double dx = g.x1(p) - c1, dy = g.x2(p) - c2;
        dx -= g.L * std::round(dx / g.L);
        dy -= g.L * std::round(dy / g.L);
        f(0, p) += mass / (pi * sigma * sigma) * std::exp(-(dx * dx + dy * dy) / (sigma * sigma));
    }
    return f;
}

}  // namespace

// ---------------------------------------------------------------- initial data

TEST(WellPrepared, ConstantDirectorIsOnManifoldWithZeroEnergy)
{
    const Grid2D g = grid(16);
    MaterialParams p;
    VectorField3 d(g), v(g);
    const Vec3 n = normalized({1.0, 2.0, 2.0});
    for (std::size_t k = 0; k < g.npts(); ++k) vec_set(d, k, n);
    const WellPrepared w = well_prepared_init(d, v, p);
    const EnergyBreakdown e = energy_breakdown(w.be.v, w.be.Q, p);
    EXPECT_EQ(e.elastic, 0.0);
    EXPECT_LE(std::abs(e.bulk), 1e-14);
    const Eigen::Matrix3d ref = oracle::uniaxial(s_plus(p), Eigen::Vector3d(n[0], n[1], n[2]));
    EXPECT_LE((oracle::mat(q_at(w.be.Q, 5)) - ref).norm(), 1e-15);
}

TEST(WellPrepared, WindingDirectorElasticEnergyMatchesPhaseGradient)
{
    const Grid2D g = grid(32);
    MaterialParams p;
    p.L1 = 0.7;
    for (double eps : {0.1, 0.01}) {
        p.eps = eps;
        const VectorField3 d = planar_director(g, [](double x1, double) { return 0.5 * std::sin(x1); });
        const WellPrepared w = well_prepared_init(d, VectorField3(g), p);
        const EnergyBreakdown e = energy_breakdown(w.be.v, w.be.Q, p);
        // int |grad phi|^2 = 0.25 int cos^2 x1 = 0.25 * pi * 2 pi
        const double sp = s_plus(p);
        EXPECT_NEAR(e.elastic, sp * sp * p.L1 * 0.5 * pi * pi, 1e-10);
        EXPECT_LE(std::abs(e.bulk), 1e-13);
    }
}

TEST(WellPrepared, SeededDirectorIsUnitAndOnManifold)
{
    const Grid2D g = grid(16);
    MaterialParams p;
    const VectorField3 d = winding_director(g, 1.2, 42);
    const WellPrepared w = well_prepared_init(d, VectorField3(g), p);
    for (std::size_t k = 0; k < g.npts(); ++k) {
        EXPECT_NEAR(norm(vec_at(d, k)), 1.0, 1e-15);
        EXPECT_LE(oracle::brute_force_dist(oracle::mat(q_at(w.be.Q, k)), s_plus(p)), 1e-10);
        EXPECT_LE(dist_to_manifold(q_at(w.be.Q, k), p), 1e-14);
    }
    for (std::size_t k = 0; k < w.el.d.data().size(); ++k) EXPECT_EQ(w.el.d.data()[k], d.data()[k]);
}

TEST(WellPrepared, NonUnitDirectorRejected)
{
    const Grid2D g = grid(8);
    VectorField3 d = winding_director(g, 0.5);
    d(0, 3) *= 1.01;
    EXPECT_THROW(well_prepared_init(d, VectorField3(g), MaterialParams{}), DomainError);
}

TEST(InitialData, GeneratorsAreDeterministicAndDivergenceFree)
{
    const Grid2D g = grid(32);
    const VectorField3 a = winding_director(g, 1.0, 9), b = winding_director(g, 1.0, 9), c = winding_director(g, 1.0, 10);
    EXPECT_EQ(a.data(), b.data());
    EXPECT_NE(a.data(), c.data());
    const VectorField3 v = velocity_modes(g, {{1, 2, 0.4, 0.3}, {3, -1, 0.2, 1.0}});
    EXPECT_LE(max_abs_divergence(v), 1e-12);
    // single mode amplitude: |v| = A |sin|
    const VectorField3 u = velocity_modes(g, {{0, 1, 0.5, 0.0}});
    for (std::size_t k = 0; k < g.npts(); ++k) {
        EXPECT_NEAR(u(0, k), 0.5 * std::sin(g.x2(k)), 1e-15);
        EXPECT_EQ(u(1, k), 0.0);
    }
    EXPECT_THROW(velocity_modes(g, {{0, 0, 1.0, 0.0}}), DomainError);
}

// ---------------------------------------------------------------- concentration

TEST(Concentration, UniformDensityBelowThresholdIsEmpty)
{
    const Grid2D g = grid(32);
    ScalarField f(g);
    for (auto& x : f.data()) x = 1e-3;
    const ConcentrationReport r = concentration_scan(f, 0.1, {0.5, 1.0});
    EXPECT_EQ(r.max_count(), 0);
    EXPECT_NEAR(r.total_energy, 1e-3 * 4 * pi * pi, 1e-12);
    EXPECT_EQ(r.count_bound, static_cast<int>(std::floor(1e-3 * 4 * pi * pi / 0.1)) + 1);
}

TEST(Concentration, SingleBumpDetectedAtCenter)
{
    const Grid2D g = grid(64);
    const double delta0 = 0.3, c1 = 2.03, c2 = 4.41;
    const ScalarField f = gaussian_density(g, 2.0 * delta0, 0.15, c1, c2);
    const ConcentrationReport r = concentration_scan(f, delta0, {0.25, 0.5, 1.0});
    ASSERT_EQ(r.levels.size(), 3u);
    for (const auto& l : r.levels) {
        ASSERT_EQ(l.entries.size(), 1u) << "radius " << l.radius;
        EXPECT_LE(std::abs(l.entries[0].center[0] - c1), g.h());
        EXPECT_LE(std::abs(l.entries[0].center[1] - c2), g.h());
        EXPECT_GE(l.entries[0].energy, delta0);
    }
    EXPECT_EQ(r.count_bound, 3);
    EXPECT_TRUE(r.within_bound());
}

TEST(Concentration, SeparatedBumpsAndDefaultThreshold)
{
    const Grid2D g = grid(64);
    ScalarField f = gaussian_density(g, 1.0, 0.15, 1.5, 1.5);
    const ScalarField f2 = gaussian_density(g, 0.8, 0.15, 4.5, 4.0);
    for (std::size_t k = 0; k < f.npts(); ++k) f(0, k) += f2(0, k);
    const ConcentrationReport r = concentration_scan(f, -1.0, {0.5});
    EXPECT_NEAR(r.delta0, 0.018, 1e-9);
    ASSERT_EQ(r.levels[0].entries.size(), 2u);
    EXPECT_GT(r.levels[0].entries[0].energy, r.levels[0].entries[1].energy);
}

TEST(Concentration, CountBoundAndSeparationOnRandomDensities)
{
    const Grid2D g = grid(64);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 2.0 * pi), m(0.05, 1.0), s(0.1, 0.6);
    for (int trial = 0; trial < 6; ++trial) {
        ScalarField f(g);
        for (int b = 0; b < 12; ++b) {
            const ScalarField add = gaussian_density(g, m(rng), s(rng), u(rng), u(rng));
            for (std::size_t k = 0; k < f.npts(); ++k) f(0, k) += add(0, k);
        }
        for (double delta0 : {0.05, 0.2, 0.5}) {
            const ConcentrationReport r = concentration_scan(f, delta0, {0.2, 0.5, 1.0});
            EXPECT_LE(r.max_count(), static_cast<int>(std::floor(r.total_energy / delta0)) + 1);
            for (const auto& l : r.levels) {
                for (std::size_t i = 0; i < l.entries.size(); ++i) {
                    for (std::size_t j = i + 1; j < l.entries.size(); ++j) {
                        double dx = l.entries[i].center[0] - l.entries[j].center[0];
                        double dy = l.entries[i].center[1] - l.entries[j].center[1];
                        dx -= g.L * std::round(dx / g.L);
                        dy -= g.L * std::round(dy / g.L);
                        EXPECT_GT(std::hypot(dx, dy), 2.0 * l.radius);
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------- sweep

TEST(Sweep, StationaryStateGivesZeroErrors)
{
    const Grid2D g = grid(16);
    VectorField3 d(g);
    for (std::size_t k = 0; k < g.npts(); ++k) vec_set(d, k, {0.0, 0.6, 0.8});
    MaterialParams p;
    p.xi = 0.1;
    SweepOptions o;
    o.run.dt = 1e-3;
    o.run.t_end = 0.02;
    o.run.output_interval = 0.01;
    const SweepReport r = run_sweep(d, VectorField3(g), {0.1, 0.05}, p, o);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_FALSE(r.el_diverged);
    for (const auto& x : r.records) {
        EXPECT_FALSE(x.diverged);
        EXPECT_LE(x.director_error, 1e-12);
        EXPECT_LE(x.velocity_error, 1e-12);
        EXPECT_LE(x.sup_bulk_over_eps, 1e-12);
        EXPECT_LE(x.sup_dist_L2, 1e-12);
        EXPECT_EQ(x.series.size(), 3u);
    }
}

TEST(Sweep, RejectsBadEpsilonLists)
{
    const Grid2D g = grid(8);
    const VectorField3 d = winding_director(g, 0.3);
    SweepOptions o;
    o.run.dt = 1e-3;
    o.run.t_end = 0.01;
    EXPECT_THROW(run_sweep(d, VectorField3(g), {0.05, 0.1}, MaterialParams{}, o), ParameterError);
    EXPECT_THROW(run_sweep(d, VectorField3(g), {0.1, 0.1}, MaterialParams{}, o), ParameterError);
    EXPECT_THROW(run_sweep(d, VectorField3(g), {}, MaterialParams{}, o), ParameterError);
}

TEST(Sweep, DivergedMemberIsRecorded)
{
    const Grid2D g = grid(16);
    const VectorField3 d = winding_director(g, 0.8);
    MaterialParams p;
    SweepOptions o;
    o.run.dt = 0.02;  // above the eps cap for the small eps, below it for eps = 1
    o.run.t_end = 0.04;
    const SweepReport r = run_sweep(d, VectorField3(g), {1.0, 0.001}, p, o);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_FALSE(r.records[0].diverged);
    EXPECT_TRUE(r.records[1].diverged);
    EXPECT_FALSE(r.records[1].error.empty());
    EXPECT_FALSE(r.bulk_monotone());
    EXPECT_FALSE(r.counts_within_bound());
}

TEST(Sweep, WindingDataMetricsAndDeterminism)
{
    const Grid2D g = grid(16);
    const VectorField3 d = winding_director(g, 1.0, 3);
    const VectorField3 v = velocity_modes(g, {{1, 1, 0.2, 0.0}});
    MaterialParams p;
    p.xi = 0.1;
    SweepOptions o;
    o.run.dt = 5e-4;
    o.run.t_end = 0.05;
    o.run.output_interval = 0.025;
    const SweepReport a = run_sweep(d, v, {0.2, 0.1, 0.05}, p, o);
    o.concurrent = false;
    const SweepReport b = run_sweep(d, v, {0.2, 0.1, 0.05}, p, o);
    ASSERT_EQ(a.records.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& x = a.records[i];
        EXPECT_FALSE(x.diverged);
        EXPECT_TRUE(std::isfinite(x.director_error) && std::isfinite(x.velocity_error));
        EXPECT_GT(x.sup_bulk_over_eps, 0.0);
        EXPECT_LE(x.concentration_count, x.count_bound);
        EXPECT_LE(x.d3_bound_ratio, 1.0);
        EXPECT_EQ(x.director_error, b.records[i].director_error);
        EXPECT_EQ(x.series.back().total, b.records[i].series.back().total);
        if (i > 0) {
            EXPECT_LT(x.eps, a.records[i - 1].eps);
        }
    }
    EXPECT_TRUE(a.counts_within_bound());
}

TEST(Sweep, DirectorErrorIsSignInvariant)
{
    const Grid2D g = grid(8);
    const VectorField3 d = winding_director(g, 1.0, 4);
    VectorField3 m = d;
    for (std::size_t k = 0; k < g.npts(); k += 3)
        for (int c = 0; c < 3; ++c) m(c, k) = -m(c, k);
    EXPECT_EQ(director_error_mod_sign(d, m), 0.0);
    VectorField3 e(g);
    for (std::size_t k = 0; k < g.npts(); ++k) vec_set(e, k, {0.0, 0.0, 1.0});
    VectorField3 f(g);
    for (std::size_t k = 0; k < g.npts(); ++k) vec_set(f, k, {1.0, 0.0, 0.0});
    // |e - f|^2 = 2 everywhere
    EXPECT_NEAR(director_error_mod_sign(e, f), std::sqrt(2.0) * 2.0 * pi, 1e-12);
}

// ---------------------------------------------------------------- eigenframe identities

TEST(Eigenframe, ManufacturedFieldMatchesAnalyticTerms)
{
    const Grid2D g = grid(64);
    const QField Q = manufactured_field(g);
    const QField d1 = partial(Q, 0), d2 = partial(Q, 1);
    double worst = 0.0;
    for (std::size_t p = 0; p < g.npts(); p += 7) {
        const Manufactured m = manufactured(g.x1(p), g.x2(p));
        EigenframePoint e;
        ASSERT_TRUE(eigenframe_point(q_at(Q, p), q_at(d1, p), q_at(d2, p), e));
        std::array<double, 3> gl{};
        double D[3][3] = {};
        for (int k = 0; k < 2; ++k) {
            for (int i = 0; i < 3; ++i) gl[i] += m.dl[k](i) * m.dl[k](i);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double c = m.R.col(i).dot(m.dR[k].col(j));
                    D[i][j] += c * c;
                }
        }
        for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(e.grad_lambda_sq[i] - gl[i]));
        worst = std::max({worst, std::abs(e.D12 - D[0][1]), std::abs(e.D13 - D[0][2]), std::abs(e.D23 - D[1][2])});

        // Both identities from the analytic frame alone.
        const double gq = m.dQ[0].squaredNorm() + m.dQ[1].squaredNorm();
        const Eigen::Vector3d l = m.l;
        const double E1 = 6 * l(2) * (l(1) - l(0)) * D[0][2] + 2 * (l(1) - l(0)) * (l(1) - l(0)) * D[0][1];
        const double gd3 = D[0][2] + D[1][2];
        EXPECT_NEAR(gq, gl[0] + gl[1] + gl[2] + 2 * (l(2) - l(1)) * (l(2) - l(1)) * gd3 + E1, 1e-12);
        double g2 = 0.0;
        for (int k = 0; k < 2; ++k) g2 += ((m.dQ[k] * m.Q + m.Q * m.dQ[k]).array() * m.dQ[k].array()).sum();
        const double E2 = 2 * (l(0) + l(1)) * (l(0) - l(1)) * (l(0) - l(1)) * D[0][1]
            + 2 * (l(0) - l(1)) * (l(0) * l(0) + l(1) * l(1) + l(0) * l(1)) * D[0][2];
        const double rhs2 = 2 * (l(0) * gl[0] + l(1) * gl[1] + l(2) * gl[2])
            - 2 * l(0) * (l(2) - l(1)) * (l(2) - l(1)) * gd3 + E2;
        EXPECT_NEAR(g2, rhs2, 1e-12);
        worst = std::max({worst, std::abs(e.grad_Q_sq - gq), std::abs(e.grad_Q2_dot - g2)});
    }
    EXPECT_LE(worst, 1e-8);

    const EigenframeReport r = eigenframe_identity_check(Q);
    EXPECT_EQ(r.skipped, 0);
    EXPECT_EQ(r.evaluated, static_cast<int>(g.npts()));
    EXPECT_LE(r.residual_grad, 1e-8);
    EXPECT_LE(r.residual_square, 1e-8);
    EXPECT_GE(r.min_E1, 0.0);
}

TEST(Eigenframe, ConstantEigenvaluesHaveNoEigenvalueGradient)
{
    const Grid2D g = grid(32);
    QField Q(g);
    for (std::size_t p = 0; p < g.npts(); ++p) {
        const Eigen::Matrix3d R = rot_z(std::sin(g.x1(p))) * rot_x(0.4 * std::cos(g.x2(p)));
        const Eigen::Vector3d l(-0.4, 0.1, 0.3);
        q_set(Q, p, to_q(R * l.asDiagonal() * R.transpose()));
    }
    const QField d1 = partial(Q, 0), d2 = partial(Q, 1);
    for (std::size_t p = 0; p < g.npts(); p += 5) {
        EigenframePoint e;
        ASSERT_TRUE(eigenframe_point(q_at(Q, p), q_at(d1, p), q_at(d2, p), e));
        for (double x : e.grad_lambda_sq) EXPECT_LE(x, 1e-18);
        const double g32 = (e.lambda[2] - e.lambda[1]) * (e.lambda[2] - e.lambda[1]);
        EXPECT_NEAR(e.grad_Q_sq, 2 * g32 * e.grad_d3_sq() + e.E1, 1e-10);
    }
    const EigenframeReport r = eigenframe_identity_check(Q);
    EXPECT_LE(r.residual_grad, 1e-12);
    EXPECT_LE(r.residual_square, 1e-12);
}

TEST(Eigenframe, DegenerateSpectrumIsSkipped)
{
    const Grid2D g = grid(8);
    const VectorField3 d = winding_director(g, 1.0);
    const WellPrepared w = well_prepared_init(d, VectorField3(g), MaterialParams{});
    const EigenframeReport r = eigenframe_identity_check(w.be.Q);
    EXPECT_EQ(r.evaluated, 0);
    EXPECT_EQ(r.skipped, static_cast<int>(g.npts()));
    EXPECT_EQ(r.skipped_points.size(), g.npts());
}

TEST(J1, VanishesOnManifoldAndMatchesRadialFormula)
{
    const Grid2D g = grid(32);
    MaterialParams p;
    p.a = 0.8;
    p.b = 1.3;
    p.c = 1.1;
    const double sp = s_plus(p);
    const VectorField3 d = winding_director(g, 1.0, 2);
    const WellPrepared w = well_prepared_init(d, VectorField3(g), p);
    const ScalarField j = j1_field(w.be.Q, p);
    for (std::size_t k = 0; k < g.npts(); ++k) EXPECT_LE(std::abs(j(0, k)), 1e-9);

    // s(x) (e e - I/3), fixed e: J1 = (s/9)(8 c s - 2 b)|grad s|^2
    QField Q(g);
    const Vec3 e = normalized({1.0, 1.0, 0.5});
    for (std::size_t k = 0; k < g.npts(); ++k)
        q_set(Q, k, QTensor::uniaxial(sp + 0.1 * std::sin(g.x1(k)), e));
    const ScalarField js = j1_field(Q, p);
    for (std::size_t k = 0; k < g.npts(); ++k) {
        const double s = sp + 0.1 * std::sin(g.x1(k)), gs = 0.1 * std::cos(g.x1(k));
        EXPECT_NEAR(js(0, k), s / 9.0 * (8.0 * p.c * s - 2.0 * p.b) * gs * gs, 1e-10);
    }
}

TEST(J1, NonnegativeNearManifold)
{
    const Grid2D g = grid(32);
    std::mt19937_64 rng(11);
    for (auto [a, b, c] : {std::array<double, 3>{1.0, 1.0, 1.0}, {0.5, 2.0, 1.0}, {-0.02, 1.0, 1.5}}) {
        MaterialParams p;
        p.a = a;
        p.b = b;
        p.c = c;
        const double sp = s_plus(p);
        for (int trial = 0; trial < 4; ++trial) {
            const VectorField3 d = winding_director(g, 1.5, 100 + trial);
            const WellPrepared w = well_prepared_init(d, VectorField3(g), p);
            QField Q = w.be.Q;
            std::uniform_real_distribution<double> ph(0.0, 2.0 * pi);
            std::array<double, 5> phase{};
            for (auto& x : phase) x = ph(rng);
            // Off-manifold perturbation of size 0.005 s+ with its own gradients.
            for (std::size_t k = 0; k < g.npts(); ++k) {
                QTensor q = q_at(Q, k);
                for (int cc = 0; cc < 5; ++cc)
                    q.comp(cc) += 0.002 * sp * std::sin((cc + 1) * g.x1(k) + (2 - cc % 3) * g.x2(k) + phase[cc]);
                q_set(Q, k, q);
            }
            const J1Report r = j1_check(Q, p, 0.01 * sp);
            EXPECT_EQ(r.evaluated, static_cast<int>(g.npts()));
            EXPECT_GE(r.min_j1, -1e-10);
        }
    }
}

TEST(D3Bound, HoldsWhereGapIsLarge)
{
    const Grid2D g = grid(32);
    MaterialParams p;
    const QField Q = manufactured_field(g);
    const D3BoundReport none = d3_gradient_bound(Q, p);
    EXPECT_EQ(none.evaluated, 0);  // gap < s+/2 everywhere
    const VectorField3 d = winding_director(g, 1.0, 7);
    WellPrepared w = well_prepared_init(d, VectorField3(g), p);
    for (std::size_t k = 0; k < g.npts(); ++k) {
        QTensor q = q_at(w.be.Q, k);
        q.q11 += 0.05 * std::sin(g.x2(k));
        q_set(w.be.Q, k, q);
    }
    const D3BoundReport r = d3_gradient_bound(w.be.Q, p);
    EXPECT_EQ(r.evaluated, static_cast<int>(g.npts()));
    EXPECT_LE(r.max_ratio, 1.0);
    EXPECT_GT(r.max_ratio, 0.1);
}

// ---------------------------------------------------------------- Pohozaev

TEST(Pohozaev, ConstantFieldGivesZeroTerms)
{
    const Grid2D g = grid(32);
    MaterialParams p;
    QField Q(g);
    for (std::size_t k = 0; k < g.npts(); ++k) q_set(Q, k, QTensor::uniaxial(0.7, {0.0, 0.0, 1.0}));
    const QField H = molecular_field(Q, p);
    const PohozaevReport r = pohozaev_identity_check(Q, H, p, {pi, pi}, 0.5, 1.5);
    EXPECT_LE(std::abs(r.I1_volume) + std::abs(r.I1_by_parts()) + std::abs(r.I3), 1e-12);
    // F_b is constant: the bulk boundary terms cancel the interior term.
    EXPECT_LE(std::abs(r.I2_by_parts()), 1e-10 * r.scale);
    EXPECT_LE(std::abs(r.I2_volume), 1e-12);
}

TEST(Pohozaev, RadialFieldBoundaryFluxesMatchClosedForm)
{
    const Grid2D g = grid(64);
    MaterialParams p;
    p.L1 = 0.8;
    p.eps = 0.05;
    const double sp = s_plus(p), A = 0.3, sig = 0.6;
    const std::array<double, 2> c{pi, pi};
    const QTensor base = QTensor::uniaxial(sp, {0.0, 0.0, 1.0});
    const QTensor E = QTensor::uniaxial(1.0, {1.0, 0.0, 0.0});
    auto f = [&](double r) { return A * std::exp(-r * r / (sig * sig)); };
    auto fp = [&](double r) { return -2.0 * r / (sig * sig) * f(r); };
    QField Q(g);
    for (std::size_t k = 0; k < g.npts(); ++k) {
        const double r = std::hypot(g.x1(k) - c[0], g.x2(k) - c[1]);
        q_set(Q, k, base + f(r) * E);
    }
    const QField H = molecular_field(Q, p);
    const double r1 = 0.4, r2 = 1.1;
    const PohozaevReport r = pohozaev_identity_check(Q, H, p, c, r1, r2);
    const double e2 = oracle::mat(E).squaredNorm();
    auto fhat = [&](double rr) {
        const Eigen::Matrix3d q = oracle::mat(base) + f(rr) * oracle::mat(E);
        return oracle::landau(q, p.a, p.b, p.c) - oracle::landau(oracle::mat(base), p.a, p.b, p.c);
    };
    EXPECT_NEAR(r.I1_outer, p.L1 * pi * r2 * fp(r2) * fp(r2) * e2, 1e-6 * r.scale);
    EXPECT_NEAR(r.I1_inner, -p.L1 * pi * r1 * fp(r1) * fp(r1) * e2, 1e-6 * r.scale);
    EXPECT_NEAR(r.I2_outer, -2.0 * pi * r2 * fhat(r2) / p.eps, 1e-6 * r.scale);
    EXPECT_NEAR(r.I2_inner, 2.0 * pi * r1 * fhat(r1) / p.eps, 1e-6 * r.scale);
    EXPECT_LE(r.closure_residual, 1e-6);
    EXPECT_LE(r.i1_route_residual, 1e-6);
    EXPECT_LE(r.i2_route_residual, 1e-6);
}

TEST(Pohozaev, RandomSmoothFieldCloses)
{
    const Grid2D g = grid(64);
    MaterialParams p;
    p.xi = 0.2;
    std::mt19937_64 rng(21);
    std::normal_distribution<double> nd(0.0, 0.15);
    QField Q(g);
    for (int c = 0; c < 5; ++c) {
        for (int m1 = -2; m1 <= 2; ++m1)
            for (int m2 = -2; m2 <= 2; ++m2) {
                const double a = nd(rng), ph = nd(rng) * 10.0;
                for (std::size_t k = 0; k < g.npts(); ++k) Q(c, k) += a * std::cos(m1 * g.x1(k) + m2 * g.x2(k) + ph);
            }
    }
    const QField H = molecular_field(Q, p);
    const PohozaevReport r = pohozaev_identity_check(Q, H, p, {3.0, 3.3}, 0.3, 2.0);
    EXPECT_GT(r.scale, 1e-3);
    EXPECT_LE(r.closure_residual, 1e-6);
    EXPECT_LE(r.i1_route_residual, 1e-6);
    EXPECT_LE(r.i2_route_residual, 1e-6);
    // Volume forms close identically when H is the molecular field.
    EXPECT_LE(std::abs(r.I1_volume + r.I2_volume + r.I3), 1e-9 * r.scale);
}

TEST(Pohozaev, AnnulusTouchingSeamRejected)
{
    const Grid2D g = grid(16);
    const QField Q(g);
    EXPECT_THROW(pohozaev_identity_check(Q, Q, MaterialParams{}, {1.0, pi}, 0.2, 1.2), DomainError);
    EXPECT_THROW(pohozaev_identity_check(Q, Q, MaterialParams{}, {pi, pi}, 1.0, 0.5), DomainError);
}

// ---------------------------------------------------------------- H* identity

TEST(HStar, RestStateReducesToHarmonicMapTension)
{
    const Grid2D g = grid(64);
    MaterialParams p;
    p.xi = 0.1;
    p.L1 = 0.6;
    p.Gamma = 1.3;
    const double sp = s_plus(p);
    const VectorField3 d = planar_director(g, [](double x1, double) { return std::sin(x1); });
    const HStarFields f = h_star_fields(d, VectorField3(g), p);
    for (std::size_t k = 0; k < g.npts(); k += 3) {
        // tau = phi'' (-sin phi, cos phi, 0)
        const double phi2 = -std::sin(g.x1(k));
        const double ref = 2.0 * p.L1 * p.L1 * sp * sp * phi2 * phi2;
        EXPECT_NEAR(f.rhs(0, k), ref, 1e-9);
        EXPECT_NEAR(f.lhs(0, k), ref, 1e-9);
    }
    const HStarReport r = h_star_identity_check(d, VectorField3(g), p);
    EXPECT_LE(r.residual, 1e-6);
    EXPECT_LE(r.frame_residual, 1e-6);
}

TEST(HStar, ConstantDirectorShearReducesToStrainTerms)
{
    const Grid2D g = grid(32);
    MaterialParams p;
    p.xi = 0.3;
    p.Gamma = 0.9;
    const double sp = s_plus(p), G = p.Gamma, xi = p.xi;
    const Vec3 n = normalized({0.3, -0.5, 0.8});
    VectorField3 d(g);
    for (std::size_t k = 0; k < g.npts(); ++k) vec_set(d, k, n);
    const VectorField3 v = velocity_modes(g, {{1, 2, 0.7, 0.4}});
    const HStarFields f = h_star_fields(d, v, p);
    const HStarReport r = h_star_identity_check(d, v, p);
    EXPECT_LE(r.residual, 1e-6);
    EXPECT_LE(r.frame_residual, 1e-6);

    // b3^2 + b4^2 + b5^2 in an explicit frame.
    const Eigen::Vector3d dd(n[0], n[1], n[2]);
    const Eigen::Vector3d e1 = dd.unitOrthogonal(), e2 = dd.cross(e1);
    const double k0 = 1.0, km = std::sqrt(5.0);
    for (std::size_t k = 0; k < g.npts(); k += 11) {
        const double cth = 0.7 * k0 * std::cos(g.x1(k) + 2 * g.x2(k) + 0.4);
        // v = A (2, -1)/sqrt5 sin(theta): grad v_ij = d_j v_i
        Eigen::Matrix3d gv = Eigen::Matrix3d::Zero();
        gv(0, 0) = 2 / km * cth;
        gv(0, 1) = 2 / km * 2 * cth;
        gv(1, 0) = -1 / km * cth;
        gv(1, 1) = -1 / km * 2 * cth;
        const Eigen::Matrix3d D = 0.5 * (gv + gv.transpose());
        const double b3 = -2 * std::sqrt(2.0) * G * xi * (sp - 1) / 3 * e2.dot(D * e1);
        const double b4 = -std::sqrt(2.0) * G * xi * (sp - 1) / 3 * (e1.dot(D * e1) - e2.dot(D * e2));
        const double b5 = std::sqrt(6.0) * G * xi * (2 * sp * sp - sp - 1) / 3 * dd.dot(D * dd);
        const double ref = b3 * b3 + b4 * b4 + b5 * b5;
        EXPECT_NEAR(f.rhs(0, k), ref, 1e-10);
        EXPECT_NEAR(f.lhs(0, k), ref, 1e-10);
    }
}

TEST(HStar, FullFieldBothRoutesAgree)
{
    const Grid2D g = grid(64);
    for (double xi : {0.0, 0.1, 0.7}) {
        MaterialParams p;
        p.xi = xi;
        p.L1 = 0.9;
        const VectorField3 d = planar_director(g, [](double x1, double) { return std::sin(x1); });
        const VectorField3 v = velocity_modes(g, {{1, 1, 0.5, 0.2}, {0, 2, 0.3, 1.1}});
        const HStarReport r = h_star_identity_check(d, v, p);
        EXPECT_LE(r.residual, 1e-6) << "xi " << xi;
        EXPECT_LE(r.frame_residual, 1e-6) << "xi " << xi;
        EXPECT_GT(r.rhs_max, 0.1);
        const HStarReport r3 = h_star_identity_check(winding_director(g, 0.8, 5), v, p);
        EXPECT_LE(r3.residual, 1e-6) << "xi " << xi;
        EXPECT_LE(r3.frame_residual, 1e-6) << "xi " << xi;
    }
}

TEST(HStar, NonUnitDirectorRejected)
{
    const Grid2D g = grid(8);
    VectorField3 d = winding_director(g, 0.5);
    d(2, 0) += 0.1;
    EXPECT_THROW(h_star_identity_check(d, VectorField3(g), MaterialParams{}), DomainError);
}

TEST(Astar, GradientProductIdentity)
{
    const Grid2D g = grid(64);
    EXPECT_LE(astar_residual(winding_director(g, 1.0, 3), 1.5), 1e-9);
    EXPECT_LE(astar_residual(planar_director(g, [](double x1, double x2) { return std::sin(x1) * std::cos(x2); }), 0.8),
              1e-9);
}

TEST(Refinement, IdentityResidualsDropWithGridSpacing)
{
    const RefinementStudy a = refinement_study({8, 16, 32, 64}, [](int n) {
        return astar_residual(planar_director(grid(n), [](double x1, double) { return 1.5 * std::sin(x1); }), 1.5);
    });
    EXPECT_TRUE(a.converges());
    EXPECT_GT(a.residuals[0], 1e-6);
    MaterialParams p;
    p.xi = 0.1;
    const RefinementStudy h = refinement_study({8, 16, 32, 64}, [&](int n) {
        const Grid2D g = grid(n);
        return h_star_identity_check(planar_director(g, [](double x1, double) { return 1.5 * std::sin(x1); }),
                                     velocity_modes(g, {{1, 1, 0.5, 0.2}}), p)
            .residual;
    });
    EXPECT_TRUE(h.converges());
    EXPECT_GT(h.residuals[0], 1e-6);

    RefinementStudy stalled;
    stalled.residuals = {1e-2, 5e-3, 1e-3};
    EXPECT_FALSE(stalled.converges());
}

// ---------------------------------------------------------------- bulk gradient

TEST(GradientCheck, BulkDensityGradientMatchesFiniteDifferences)
{
    for (double xi : {0.0, 0.5}) {
        MaterialParams p;
        p.xi = xi;
        const GradientCheckReport r = gradient_check_bulk(p);
        EXPECT_EQ(r.checks, 2000);
        EXPECT_TRUE(r.pass()) << r.max_error;
    }
    MaterialParams p;
    p.a = -0.01;
    p.b = 2.0;
    p.c = 0.5;
    EXPECT_TRUE(gradient_check_bulk(p, 99).pass());
}

TEST(GradientCheck, ZeroTensorAndZeroDirection)
{
    MaterialParams p;
    const QTensor zero{};
    const QTensor J = bulk_gradient(zero, p);
    EXPECT_EQ(J.norm2(), 0.0);
    const double h = 1e-5;
    std::mt19937_64 rng(1);
    const QTensor T = random_unit_qtensor(rng);
    const Eigen::Matrix3d t = oracle::mat(T);
    const double fd = (oracle::landau(h * t, p.a, p.b, p.c) - oracle::landau(-h * t, p.a, p.b, p.c)) / (2 * h);
    EXPECT_NEAR(fd, 0.0, 1e-9);
    EXPECT_NEAR(fd, ddot(J, T), 1e-9);
}
