#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nlq/beris_edwards.hpp"
#include "nlq/ericksen_leslie.hpp"

namespace nlq {

// ---------------------------------------------------------------- initial data

struct WellPrepared {
    BEState be;
    ELState el;
};

// Q0 = s+(d0 d0 - I/3); both states share v0. Throws DomainError on a non-unit d0.
WellPrepared well_prepared_init(const VectorField3& d0, const VectorField3& v0, const MaterialParams& p);

// d = (cos psi cos phi, cos psi sin phi, sin psi) with
// phi = A sin(k0 x1) + seeded low modes, psi = seeded low modes (both zero for seed 0).
VectorField3 winding_director(const Grid2D& g, double amplitude, std::uint64_t seed = 0);

struct VelocityMode {
    int m1 = 1, m2 = 0;  // integer wavenumbers in units of 2 pi / L
    double amplitude = 0.0;
    double phase = 0.0;
};

// Sum of A (m2, -m1)/|m| sin(k0 m.x + phase); divergence-free by construction.
VectorField3 velocity_modes(const Grid2D& g, const std::vector<VelocityMode>& modes);

// ---------------------------------------------------------------- concentration

struct ConcentrationEntry {
    std::array<double, 2> center{};
    double radius = 0.0;
    double energy = 0.0;
};

struct ConcentrationLevel {
    double radius = 0.0;
    std::vector<ConcentrationEntry> entries;  // descending energy
};

struct ConcentrationReport {
    double t = 0.0;
    double delta0 = 0.0;
    double total_energy = 0.0;  // E0 = integral of the density
    int count_bound = 0;        // floor(E0 / delta0) + 1
    std::vector<ConcentrationLevel> levels;

    int max_count() const;
    bool within_bound() const { return max_count() <= count_bound; }
};

// Local maxima of the ball energy at grid centers, kept greedily in descending
// order when farther than 2r from every kept center. delta0 <= 0 selects 1% of E0.
ConcentrationReport concentration_scan(const ScalarField& density, double delta0, const std::vector<double>& radii,
                                       double t = 0.0);

// ---------------------------------------------------------------- sweep

struct SweepOptions {
    RunOptions run;  // dt, t_end, output interval; the stepper applies to both models
    std::vector<double> radii{0.5, 1.0};
    double delta0 = -1.0;  // <= 0: 1% of the initial energy of each run
    bool concurrent = true;
};

struct SweepRecord {
    double eps = 0.0;
    bool diverged = false;
    std::string error;
    double sup_bulk_over_eps = 0.0;
    double sup_dist_L2 = 0.0;
    double director_error = 0.0;
    double velocity_error = 0.0;
    int concentration_count = 0;
    int count_bound = 0;
    double d3_bound_ratio = 0.0;  // max s+^2 |grad d3|^2 / (2 |grad Q|^2) where the gap exceeds s+/2
    std::vector<EnergyRecord> series;
};

struct SweepReport {
    MaterialParams params;      // eps field holds the first member
    double t_end = 0.0;
    double dt = 0.0;
    std::vector<SweepRecord> records;  // decreasing eps
    bool el_diverged = false;
    std::string el_error;
    std::vector<EnergyRecord> el_series;

    // metric[i+1] <= (1 + band) metric[i] over consecutive finite members.
    bool bulk_monotone(double band = 0.1) const;
    bool director_monotone(double band = 0.1) const;
    // Largest-eps director error over smallest-eps director error.
    double director_ratio() const;
    bool counts_within_bound() const;
};

// Requires a strictly decreasing eps list. Diverged members are recorded.
SweepReport run_sweep(const VectorField3& d0, const VectorField3& v0, const std::vector<double>& epsilons,
                      const MaterialParams& p, const SweepOptions& opt);

// L2 norm of min(|a - b|, |a + b|).
double director_error_mod_sign(const VectorField3& a, const VectorField3& b);
// Top eigenvector of Q at every point.
VectorField3 top_eigenvector_field(const QField& Q);

// ---------------------------------------------------------------- eigenframe identities

struct EigenframePoint {
    std::array<double, 3> lambda{};
    std::array<double, 3> grad_lambda_sq{};
    double D12 = 0.0, D13 = 0.0, D23 = 0.0;
    double grad_Q_sq = 0.0;      // |grad Q|^2
    double grad_Q2_dot = 0.0;    // d_k(Q^2) : d_k Q
    double grad_normsq_sq = 0.0; // |grad |Q|^2|^2
    double E1 = 0.0, E2 = 0.0;
    double grad_d3_sq() const { return D13 + D23; }
};

// Eigen-gradients by first-order perturbation of the spectral derivatives of Q.
// Returns false at points whose smallest gap is below gap_tol.
bool eigenframe_point(const QTensor& q, const QTensor& d1q, const QTensor& d2q, EigenframePoint& out,
                      double gap_tol = 1e-6);

struct EigenframeReport {
    double residual_grad = 0.0;     // |grad Q|^2 identity, max relative
    double residual_square = 0.0;   // d(Q^2):dQ identity, max relative
    int evaluated = 0;
    int skipped = 0;
    std::vector<std::size_t> skipped_points;
    double min_E1 = 0.0;
    double max_E2 = 0.0;
};

EigenframeReport eigenframe_identity_check(const QField& Q, double gap_tol = 1e-6);

// J1 = -b lambda1 |grad Q|^2 - b d(Q^2):dQ + (c/2)|grad |Q|^2|^2, pointwise.
ScalarField j1_field(const QField& Q, const MaterialParams& p);

struct J1Report {
    double min_j1 = 0.0;
    double min_j1_scaled = 0.0;  // J1 / (1 + |grad Q|^2)
    int evaluated = 0;           // points with dist(Q, N) <= dist_tol
};
J1Report j1_check(const QField& Q, const MaterialParams& p, double dist_tol);

struct D3BoundReport {
    double max_ratio = 0.0;  // max s+^2 |grad d3|^2 / (2 |grad Q|^2)
    int evaluated = 0;
};
// Over points with lambda3 - lambda2 >= s+/2.
D3BoundReport d3_gradient_bound(const QField& Q, const MaterialParams& p);

// ---------------------------------------------------------------- Pohozaev

struct PohozaevOptions {
    int n_theta = 128;  // trapezoid in theta; the radial rule is 40-point Gauss-Legendre
};

struct PohozaevReport {
    // I1 = int L1 Lap Q : dr Q; I2 = -int J/eps : dr Q; I3 = -int H : dr Q.
    double I1_volume = 0.0, I1_interior = 0.0, I1_outer = 0.0, I1_inner = 0.0;
    double I2_volume = 0.0, I2_interior = 0.0, I2_outer = 0.0, I2_inner = 0.0;
    double I3 = 0.0;
    double I1_by_parts() const { return I1_interior + I1_outer + I1_inner; }
    double I2_by_parts() const { return I2_interior + I2_outer + I2_inner; }
    double scale = 0.0;             // sum of term magnitudes
    double closure_residual = 0.0;  // |I1 + I2 + I3| / scale with the by-parts forms
    double i1_route_residual = 0.0; // |I1_volume - I1_by_parts| / scale
    double i2_route_residual = 0.0;
};

// Annulus r1 < |x - center| < r2 fully inside the open square; DomainError otherwise.
PohozaevReport pohozaev_identity_check(const QField& Q, const QField& H, const MaterialParams& p,
                                       const std::array<double, 2>& center, double r1, double r2,
                                       const PohozaevOptions& opt = {});

// ---------------------------------------------------------------- limit identities

struct HStarFields {
    Field<6> H_evolution;  // Gamma[Q*_t + v.grad Q* + Q* Lambda - Lambda Q* - S(D)], components 11,12,13,22,23,33
    Field<6> H_frame;      // L1 Lap Q* - (a3 e3 + a4 e4 + a5 e5)
    ScalarField lhs;       // |H_evolution|^2
    ScalarField rhs;       // right-hand side of the dissipation identity
    ScalarField frame_lhs; // |H_frame|^2
};

HStarFields h_star_fields(const VectorField3& d, const VectorField3& v, const MaterialParams& p);

struct HStarReport {
    double residual = 0.0;        // max ||H*|^2 - RHS| / max RHS
    double frame_residual = 0.0;  // max |H_evolution - H_frame| / max |H_evolution|
    double rhs_max = 0.0;
};

// Throws DomainError when |d| deviates from 1 by more than 1e-10.
HStarReport h_star_identity_check(const VectorField3& d, const VectorField3& v, const MaterialParams& p);

// max |grad Q*(.)grad Q* - 2 s+^2 grad d(.)grad d| / max |2 s+^2 grad d(.)grad d|, Q* = s+(dd - I/3).
double astar_residual(const VectorField3& d, double splus);

// ---------------------------------------------------------------- bulk gradient

struct GradientCheckReport {
    int checks = 0;
    double max_error = 0.0;  // max |FD - J:T| / (1 + |J:T|)
    double tolerance = 1e-6;
    bool pass() const { return max_error <= tolerance; }
};

GradientCheckReport gradient_check_bulk(const MaterialParams& p, std::uint64_t seed = 7, int n_points = 100,
                                        int n_dirs = 20, double step = 1e-5, double tol = 1e-6);

// ---------------------------------------------------------------- refinement

struct RefinementStudy {
    std::vector<int> grids;
    std::vector<double> residuals;
    // Each halving of h gains >= min_ratio or lands below floor.
    bool converges(double min_ratio = 4.0, double floor = 1e-11) const;
};

RefinementStudy refinement_study(const std::vector<int>& grids, const std::function<double(int)>& residual_on);

}  // namespace nlq
