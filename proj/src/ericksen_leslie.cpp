#include "nlq/ericksen_leslie.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlq/errors.hpp"

namespace nlq {

namespace {

struct ELDerivs {
    std::array<Spectrum, 3> d_hat, v_hat;
    VectorField3 d1d, d2d, lapd, d1v, d2v;
};

ELDerivs derivatives(const SpectralOps& ops, const ELState& s)
{
    const Grid2D& g = ops.grid();
    ELDerivs r{{}, {}, VectorField3(g), VectorField3(g), VectorField3(g), VectorField3(g), VectorField3(g)};
    for (int c = 0; c < 3; ++c) {
        r.d_hat[c] = ops.forward(s.d.comp(c));
        Spectrum t = r.d_hat[c];
        ops.deriv_inplace(t, 0);
        ops.backward(t, r.d1d.comp(c));
        t = r.d_hat[c];
        ops.deriv_inplace(t, 1);
        ops.backward(t, r.d2d.comp(c));
        t = r.d_hat[c];
        ops.laplacian_inplace(t);
        ops.backward(t, r.lapd.comp(c));

        r.v_hat[c] = ops.forward(s.v.comp(c));
        t = r.v_hat[c];
        ops.deriv_inplace(t, 0);
        ops.backward(t, r.d1v.comp(c));
        t = r.v_hat[c];
        ops.deriv_inplace(t, 1);
        ops.backward(t, r.d2v.comp(c));
    }
    return r;
}

void check_gamma1(const LeslieCoefficients& lc)
{
    if (!(lc.gamma1 > 0.0)) throw ParameterError("gamma1 must be positive");
}

struct PointKinematics {
    Vec3 d, v, d1d, d2d, lapd;
    Mat3 D, W;
};

PointKinematics kinematics(const ELState& s, const ELDerivs& r, std::size_t k)
{
    PointKinematics pk;
    pk.d = vec_at(s.d, k);
    pk.v = vec_at(s.v, k);
    pk.d1d = vec_at(r.d1d, k);
    pk.d2d = vec_at(r.d2d, k);
    pk.lapd = vec_at(r.lapd, k);
    const Mat3 gv = velocity_gradient(r.d1v, r.d2v, k);
    pk.D = strain_rate(gv);
    pk.W = vorticity(gv);
    return pk;
}

Vec3 orientational_field(const PointKinematics& pk, const LeslieCoefficients& lc)
{
    const double g2 = dot(pk.d1d, pk.d1d) + dot(pk.d2d, pk.d2d);
    return lc.k1 * (pk.lapd + g2 * pk.d);
}

Vec3 strain_drive(const PointKinematics& pk)
{
    const Vec3 Dd = pk.D.apply(pk.d);
    return Dd - dot(pk.d, Dd) * pk.d;
}

// Full d_t at one point.
Vec3 director_rate(const PointKinematics& pk, const LeslieCoefficients& lc)
{
    const Vec3 adv = pk.v[0] * pk.d1d + pk.v[1] * pk.d2d;
    return pk.W.apply(pk.d) - adv + (1.0 / lc.gamma1) * (orientational_field(pk, lc) - lc.gamma2 * strain_drive(pk));
}

Mat3 stress_at(const Vec3& d, const Vec3& N, const Mat3& D, const LeslieCoefficients& lc, bool with_alpha4)
{
    const Mat3 dd = Mat3::outer(d, d);
    Mat3 s = (lc.alpha1 * ddot(D, dd)) * dd + lc.alpha2 * Mat3::outer(N, d) + lc.alpha3 * Mat3::outer(d, N)
        + lc.alpha5 * (D * dd) + lc.alpha6 * (dd * D);
    if (with_alpha4) s = s + lc.alpha4 * D;
    return s;
}

// Spectral momentum tendency; full includes the alpha4 viscous divergence (alpha4/2) Lap v.
std::array<Spectrum, 3> momentum_tendency(const SpectralOps& ops, const ELState& s, const ELDerivs& r,
                                          const LeslieCoefficients& lc, bool full)
{
    const Grid2D& g = ops.grid();
    Field<6> A(g);
    VectorField3 conv(g);
    for (std::size_t k = 0; k < g.npts(); ++k) {
        const PointKinematics pk = kinematics(s, r, k);
        const Vec3 dt = director_rate(pk, lc);
        const Vec3 N = dt + (pk.v[0] * pk.d1d + pk.v[1] * pk.d2d) - pk.W.apply(pk.d);
        const Mat3 sig = stress_at(pk.d, N, pk.D, lc, false);
        const Vec3 gd[2] = {pk.d1d, pk.d2d};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 2; ++j) {
                double val = sig(i, j);
                if (i < 2) val -= lc.k1 * dot(gd[i], gd[j]);
                A(2 * i + j, k) = val;
            }
            conv(i, k) = -(pk.v[0] * r.d1v(i, k) + pk.v[1] * r.d2v(i, k));
        }
    }
    std::array<Spectrum, 3> hat;
    for (int i = 0; i < 3; ++i) {
        hat[i] = ops.forward(conv.comp(i));
        Spectrum c0 = ops.forward(A.comp(2 * i));
        Spectrum c1 = ops.forward(A.comp(2 * i + 1));
        ops.deriv_inplace(c0, 0);
        ops.deriv_inplace(c1, 1);
        for (std::size_t m = 0; m < hat[i].size(); ++m) hat[i][m] += c0[m] + c1[m];
        if (full) {
            Spectrum lv = r.v_hat[i];
            ops.laplacian_inplace(lv);
            for (std::size_t m = 0; m < hat[i].size(); ++m) hat[i][m] += 0.5 * lc.alpha4 * lv[m];
        }
    }
    return hat;
}

double max_abs(const VectorField3& f)
{
    double m = 0.0;
    for (double x : f.data()) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

VectorField3 director_rhs(const ELState& s, const LeslieCoefficients& lc)
{
    check_gamma1(lc);
    const SpectralOps ops(s.grid());
    const ELDerivs r = derivatives(ops, s);
    VectorField3 out(s.grid());
    for (std::size_t k = 0; k < s.grid().npts(); ++k) vec_set(out, k, director_rate(kinematics(s, r, k), lc));
    return out;
}

TensorField leslie_stress(const ELState& s, const VectorField3& d_t, const LeslieCoefficients& lc)
{
    const SpectralOps ops(s.grid());
    const ELDerivs r = derivatives(ops, s);
    TensorField out(s.grid());
    for (std::size_t k = 0; k < s.grid().npts(); ++k) {
        const PointKinematics pk = kinematics(s, r, k);
        const Vec3 N = vec_at(d_t, k) + (pk.v[0] * pk.d1d + pk.v[1] * pk.d2d) - pk.W.apply(pk.d);
        const Mat3 sig = stress_at(pk.d, N, pk.D, lc, true);
        for (int c = 0; c < 9; ++c) out(c, k) = sig.m[c];
    }
    return out;
}

VectorField3 el_momentum_rhs(const ELState& s, const LeslieCoefficients& lc)
{
    check_gamma1(lc);
    const SpectralOps ops(s.grid());
    const ELDerivs r = derivatives(ops, s);
    const auto hat = momentum_tendency(ops, s, r, lc, true);
    VectorField3 out(s.grid());
    for (int c = 0; c < 3; ++c) ops.backward(hat[c], out.comp(c));
    return out;
}

ELEnergy el_energy_breakdown(const ELState& s, const VectorField3&, const LeslieCoefficients& lc)
{
    check_gamma1(lc);
    const Grid2D& g = s.grid();
    const SpectralOps ops(g);
    const ELDerivs r = derivatives(ops, s);
    const double g2g1 = lc.gamma2 * lc.gamma2 / lc.gamma1;
    ELEnergy e;
    for (std::size_t k = 0; k < g.npts(); ++k) {
        const PointKinematics pk = kinematics(s, r, k);
        e.kinetic += 0.5 * dot(pk.v, pk.v);
        e.elastic += 0.5 * lc.k1 * (dot(pk.d1d, pk.d1d) + dot(pk.d2d, pk.d2d));
        const Vec3 Dd = pk.D.apply(pk.d);
        const double Ddd = dot(pk.d, Dd);
        e.viscous += lc.alpha4 * ddot(pk.D, pk.D);
        e.beta1_term += (lc.alpha1 + g2g1) * Ddd * Ddd;
        e.beta3_term += (lc.alpha5 + lc.alpha6 - g2g1) * dot(Dd, Dd);
        const Vec3 h = orientational_field(pk, lc);
        const Vec3 dxh = cross(pk.d, h);
        e.director_term += dot(dxh, dxh) / lc.gamma1;
    }
    const double w = g.h() * g.h();
    e.kinetic *= w;
    e.elastic *= w;
    e.viscous *= w;
    e.beta1_term *= w;
    e.beta3_term *= w;
    e.director_term *= w;
    return e;
}

double el_stability_cap(const ELState& s, const LeslieCoefficients& lc, double cap_factor)
{
    check_gamma1(lc);
    const Grid2D& g = s.grid();
    // Largest retained wavenumber magnitude after 2/3 dealiasing.
    const double k0 = 2.0 * 3.14159265358979323846 / g.L;
    const double km = k0 * (g.n / 3);
    const double kk = 2.0 * km * km;
    const double damp = std::min(lc.k1 / lc.gamma1, 0.5 * lc.alpha4);
    // Director-flow exchange through alpha2, alpha3: growth rate^2 ~ C |k|^4 per explicit step.
    const double C = 0.5 * (std::abs(lc.alpha2) + std::abs(lc.alpha3)) * lc.k1 / lc.gamma1;
    double cap = C > 0.0 ? 2.0 * damp / (C * kk) : 1e300;
    const double g2g1 = lc.gamma2 * lc.gamma2 / lc.gamma1;
    const double visc = std::abs(lc.alpha1) + std::abs(lc.alpha5) + std::abs(lc.alpha6) + 2.0 * g2g1
        + std::abs(lc.alpha2 * lc.gamma2 / lc.gamma1) + std::abs(lc.alpha3 * lc.gamma2 / lc.gamma1);
    if (visc > 0.0) cap = std::min(cap, 1.0 / (visc * kk));
    const double vmax = max_abs(s.v);
    if (vmax > 0.0) cap = std::min(cap, g.h() / vmax);
    return cap_factor * cap;
}

EricksenLeslieSolver::EricksenLeslieSolver(const Grid2D& g, const LeslieCoefficients& lc, ELStepperOptions opt)
    : g_(g), lc_(lc), opt_(opt), ops_(g)
{
    check_gamma1(lc_);
}

EricksenLeslieSolver::Tendency EricksenLeslieSolver::tendency(const ELState& s) const
{
    const ELDerivs r = derivatives(ops_, s);
    VectorField3 nd(g_);
    const double diff = lc_.k1 / lc_.gamma1;
    for (std::size_t k = 0; k < g_.npts(); ++k) {
        const PointKinematics pk = kinematics(s, r, k);
        // Explicit part of d_t: everything except (k1/gamma1) Lap d.
        vec_set(nd, k, director_rate(pk, lc_) - diff * pk.lapd);
    }
    Tendency t;
    t.d_hat = r.d_hat;
    t.v_hat = r.v_hat;
    if (opt_.freeze_flow)
        for (auto& x : t.nv_hat) x.assign(ops_.nspec(), 0.0);
    else
        t.nv_hat = momentum_tendency(ops_, s, r, lc_, false);
    for (int c = 0; c < 3; ++c) {
        t.nd_hat[c] = ops_.forward(nd.comp(c));
        if (opt_.dealias) {
            ops_.dealias_inplace(t.nd_hat[c]);
            ops_.dealias_inplace(t.nv_hat[c]);
        }
    }
    return t;
}

void EricksenLeslieSolver::advance(ELState& s, const Tendency& cur, const Tendency* prev, double dt) const
{
    const double diff = lc_.k1 / lc_.gamma1;
    const double visc = opt_.freeze_flow ? 0.0 : 0.5 * lc_.alpha4;
    const int m = ops_.nc();
    std::array<Spectrum, 3> dn = cur.d_hat, vn = cur.v_hat;
    for (int i = 0; i < g_.n; ++i) {
        const double a = ops_.k1(i);
        for (int j = 0; j < m; ++j) {
            const double b = ops_.k2(j);
            const double kk = a * a + b * b;
            const std::size_t idx = static_cast<std::size_t>(i) * m + j;
            if (prev) {
                const double dd = 3.0 + 2.0 * dt * diff * kk;
                const double dv = 3.0 + 2.0 * dt * visc * kk;
                for (int c = 0; c < 3; ++c) {
                    dn[c][idx] = (4.0 * cur.d_hat[c][idx] - prev->d_hat[c][idx]
                                  + 2.0 * dt * (2.0 * cur.nd_hat[c][idx] - prev->nd_hat[c][idx])) / dd;
                    vn[c][idx] = (4.0 * cur.v_hat[c][idx] - prev->v_hat[c][idx]
                                  + 2.0 * dt * (2.0 * cur.nv_hat[c][idx] - prev->nv_hat[c][idx])) / dv;
                }
            } else {
                const double dd = 1.0 + dt * diff * kk;
                const double dv = 1.0 + dt * visc * kk;
                for (int c = 0; c < 3; ++c) {
                    dn[c][idx] = (cur.d_hat[c][idx] + dt * cur.nd_hat[c][idx]) / dd;
                    vn[c][idx] = (cur.v_hat[c][idx] + dt * cur.nv_hat[c][idx]) / dv;
                }
            }
        }
    }
    leray_project_spectral(ops_, vn[0], vn[1]);
    for (int c = 0; c < 3; ++c) {
        ops_.backward(dn[c], s.d.comp(c));
        ops_.backward(vn[c], s.v.comp(c));
    }
    s.t += dt;
    renormalize(s, dt);
}

void EricksenLeslieSolver::renormalize(ELState& s, double dt) const
{
    for (std::size_t k = 0; k < g_.npts(); ++k) {
        const Vec3 d = vec_at(s.d, k);
        const double n = norm(d);
        if (!std::isfinite(n) || n < 1e-8) {
            std::ostringstream os;
            os << "director lost unit length (|d| = " << n << ") at t = " << s.t << ", dt = " << dt;
            throw DivergenceError(os.str());
        }
        vec_set(s.d, k, (1.0 / n) * d);
    }
    if (!std::all_of(s.v.data().begin(), s.v.data().end(), [](double x) { return std::isfinite(x); })) {
        std::ostringstream os;
        os << "non-finite velocity after step to t = " << s.t << " (dt = " << dt << ")";
        throw DivergenceError(os.str());
    }
}

void EricksenLeslieSolver::step(ELState& s, double dt)
{
    if (!(dt > 0.0)) throw StepRejected("dt must be positive");
    const double cap = el_stability_cap(s, lc_, opt_.cap_factor);
    if (dt > cap * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "dt = " << dt << " exceeds the director-flow stability cap " << cap << " at t = " << s.t;
        throw StepRejected(os.str());
    }
    Tendency cur = tendency(s);
    if (opt_.scheme != StepperOptions::Scheme::imex_bdf2) {
        advance(s, cur, nullptr, dt);
        return;
    }
    if (history_ && history_->dt == dt) {
        advance(s, cur, &history_->prev, dt);
    } else {
        // Second-order start: Richardson extrapolation of one full and two half Euler steps.
        ELState full = s, half = s;
        advance(full, cur, nullptr, dt);
        advance(half, cur, nullptr, 0.5 * dt);
        advance(half, tendency(half), nullptr, 0.5 * dt);
        for (std::size_t i = 0; i < s.d.data().size(); ++i) {
            s.d.data()[i] = 2.0 * half.d.data()[i] - full.d.data()[i];
            s.v.data()[i] = 2.0 * half.v.data()[i] - full.v.data()[i];
        }
        s.t = half.t;
        renormalize(s, dt);
    }
    history_ = History{std::move(cur), dt};
}

EnergyRecord el_diagnostics(const ELState& s, const LeslieCoefficients& lc)
{
    const ELEnergy e = el_energy_breakdown(s, s.d, lc);
    EnergyRecord r;
    r.t = s.t;
    r.kinetic = e.kinetic;
    r.elastic = e.elastic;
    r.bulk_over_eps = 0.0;
    r.total = e.total();
    r.div_residual = max_abs_divergence(s.v);
    r.min_eig_gap = lc.splus;
    r.dist_to_N_L2 = 0.0;
    return r;
}

ELRunResult run_el(ELState initial, const LeslieCoefficients& lc, const RunOptions& opt, const ELMonitor& monitor)
{
    ELStepperOptions so;
    so.dealias = opt.stepper.dealias;
    so.scheme = opt.stepper.scheme;
    EricksenLeslieSolver solver(initial.grid(), lc, so);
    ELRunResult res;
    ELState& s = initial;
    EnergyRecord rec = el_diagnostics(s, lc);
    res.series.push_back(rec);
    double next_out = s.t + opt.output_interval;
    const double tol = 1e-12 * std::max(1.0, std::abs(opt.t_end));
    while (s.t < opt.t_end - tol) {
        const double dt = std::min(opt.dt, opt.t_end - s.t);
        if (dt < opt.dt * (1.0 - 1e-9)) solver.reset_history();
        solver.step(s, dt);
        ++res.steps;
        const ELEnergy e = el_energy_breakdown(s, s.d, lc);
        rec.viscous_dissip_cum += dt * (e.viscous + e.beta1_term + e.beta3_term);
        rec.rotational_dissip_cum += dt * e.director_term;
        rec.t = s.t;
        rec.kinetic = e.kinetic;
        rec.elastic = e.elastic;
        rec.total = e.total();
        const bool last = !(s.t < opt.t_end - tol);
        if (opt.output_interval <= 0.0 || s.t >= next_out - tol || last) {
            rec.div_residual = max_abs_divergence(s.v);
            res.series.push_back(rec);
            if (opt.output_interval > 0.0)
                while (next_out <= s.t + tol) next_out += opt.output_interval;
        }
        if (monitor) monitor(s, rec);
    }
    res.final_state = std::move(s);
    return res;
}

}  // namespace nlq
