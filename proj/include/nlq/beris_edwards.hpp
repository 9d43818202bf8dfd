#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "nlq/spectral.hpp"

namespace nlq {

struct BEState {
    VectorField3 v;
    QField Q;
    double t = 0.0;

    BEState() = default;
    explicit BEState(const Grid2D& g) : v(g), Q(g) {}
    const Grid2D& grid() const { return Q.grid(); }
};

// Velocity gradient (grad v)_ij = d_j v_i of a planar flow (d_3 = 0).
Mat3 velocity_gradient(const VectorField3& d1v, const VectorField3& d2v, std::size_t p);
Mat3 strain_rate(const Mat3& gradv);
Mat3 vorticity(const Mat3& gradv);

QField molecular_field(const QField& Q, const MaterialParams& p);

// Full 3x3 tensors per point, row-major in the component index.
using TensorField = Field<9>;

struct Stresses {
    TensorField symmetric;      // eta D - S_Q(H)
    TensorField antisymmetric;  // Q H - H Q
    TensorField distortion;     // -L1 grad Q (.) grad Q, in-plane block only
};

Stresses assemble_stresses(const BEState& s, const QField& H, const MaterialParams& p);

// -v.grad Q + H/Gamma + S_Q(D) + Lambda Q - Q Lambda
QField q_rhs(const BEState& s, const QField& H, const MaterialParams& p);

// Momentum tendency before projection: -v.grad v + div(sigma_s + sigma_a + sigma_d).
VectorField3 momentum_rhs(const BEState& s, const QField& H, const MaterialParams& p);

struct DissipationRates {
    double viscous = 0.0;     // integral of eta |D|^2
    double rotational = 0.0;  // integral of |H|^2 / Gamma
};

DissipationRates be_dissipation_rates(const BEState& s, const MaterialParams& p);

struct StepperOptions {
    enum class Scheme { imex_euler, imex_bdf2 };
    Scheme scheme = Scheme::imex_euler;
    bool dealias = true;
    // Adds kappa Q/(Gamma eps) implicitly and explicitly; the eps cap is then
    // reported but not enforced.
    bool stabilized = false;
    double kappa = -1.0;  // < 0: use |a| + 2bM + 3cM^2 of the initial state
    double cap_factor = 0.5;
};

double stability_cap(const QField& Q, const MaterialParams& p, double cap_factor = 0.5);

class BerisEdwardsSolver {
public:
    BerisEdwardsSolver(const Grid2D& g, const MaterialParams& p, StepperOptions opt = {});

    // Advances s by dt. Throws StepRejected above the eps cap, DivergenceError on
    // non-finite output.
    void step(BEState& s, double dt);
    void reset_history() { history_.reset(); }

    const MaterialParams& params() const { return p_; }
    const StepperOptions& options() const { return opt_; }

private:
    struct Tendency {
        std::array<Spectrum, 5> q_hat, nq_hat;
        std::array<Spectrum, 3> v_hat, nv_hat;
    };
    Tendency explicit_tendency(const BEState& s, double kappa) const;

    Grid2D g_;
    MaterialParams p_;
    StepperOptions opt_;
    SpectralOps ops_;
    double kappa_ = 0.0;
    struct History {
        Tendency prev;
        double dt = 0.0;
    };
    std::optional<History> history_;
};

struct EnergyRecord {
    double t = 0.0;
    double kinetic = 0.0;
    double elastic = 0.0;
    double bulk_over_eps = 0.0;
    double total = 0.0;
    double viscous_dissip_cum = 0.0;
    double rotational_dissip_cum = 0.0;
    double div_residual = 0.0;
    double min_eig_gap = 0.0;
    double dist_to_N_L2 = 0.0;
};

struct RunOptions {
    double dt = 1e-3;
    double t_end = 0.0;
    double output_interval = 0.0;  // <= 0: every step
    StepperOptions stepper;
};

// Called after every accepted step with the new state and its running record
// (dissipation integrals filled; geometric diagnostics only at output times).
using BEMonitor = std::function<void(const BEState&, const EnergyRecord&)>;

struct BERunResult {
    BEState final_state;
    std::vector<EnergyRecord> series;
    int steps = 0;
};

EnergyRecord be_diagnostics(const BEState& s, const MaterialParams& p);
BERunResult run_be(BEState initial, const MaterialParams& p, const RunOptions& opt, const BEMonitor& monitor = {});

}  // namespace nlq
