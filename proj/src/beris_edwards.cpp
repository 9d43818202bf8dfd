#include "nlq/beris_edwards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nlq/errors.hpp"

namespace nlq {

Mat3 velocity_gradient(const VectorField3& d1v, const VectorField3& d2v, std::size_t p)
{
    Mat3 g;
    for (int i = 0; i < 3; ++i) {
        g(i, 0) = d1v(i, p);
        g(i, 1) = d2v(i, p);
    }
    return g;
}

Mat3 strain_rate(const Mat3& gradv) { return 0.5 * (gradv + gradv.transpose()); }
Mat3 vorticity(const Mat3& gradv) { return 0.5 * (gradv - gradv.transpose()); }

namespace {

struct Derivs {
    std::array<Spectrum, 5> q_hat;
    std::array<Spectrum, 3> v_hat;
    QField d1Q, d2Q, lapQ;
    VectorField3 d1v, d2v;
};

Derivs derivatives(const SpectralOps& ops, const BEState& s)
{
    const Grid2D& g = ops.grid();
    Derivs d{{}, {}, QField(g), QField(g), QField(g), VectorField3(g), VectorField3(g)};
    for (int c = 0; c < 5; ++c) {
        d.q_hat[c] = ops.forward(s.Q.comp(c));
        Spectrum t = d.q_hat[c];
        ops.deriv_inplace(t, 0);
        ops.backward(t, d.d1Q.comp(c));
        t = d.q_hat[c];
        ops.deriv_inplace(t, 1);
        ops.backward(t, d.d2Q.comp(c));
        t = d.q_hat[c];
        ops.laplacian_inplace(t);
        ops.backward(t, d.lapQ.comp(c));
    }
    for (int c = 0; c < 3; ++c) {
        d.v_hat[c] = ops.forward(s.v.comp(c));
        Spectrum t = d.v_hat[c];
        ops.deriv_inplace(t, 0);
        ops.backward(t, d.d1v.comp(c));
        t = d.v_hat[c];
        ops.deriv_inplace(t, 1);
        ops.backward(t, d.d2v.comp(c));
    }
    return d;
}

QField molecular_field_from(const Derivs& d, const QField& Q, const MaterialParams& p)
{
    QField H(Q.grid());
    for (std::size_t k = 0; k < Q.npts(); ++k)
        q_set(H, k, p.L1 * q_at(d.lapQ, k) - (1.0 / p.eps) * bulk_gradient(q_at(Q, k), p));
    return H;
}

// Spectral Q tendency. full: -v.grad Q + H/Gamma + S(D) + [Lambda, Q];
// otherwise the explicit part with (L1/Gamma) Lap Q removed, plus kappa Q/(Gamma eps).
std::array<Spectrum, 5> q_tendency(const SpectralOps& ops, const BEState& s, const Derivs& d, const QField* H,
                                   const MaterialParams& p, bool full, double kappa)
{
    const Grid2D& g = ops.grid();
    QField out(g);
    for (std::size_t k = 0; k < g.npts(); ++k) {
        const QTensor q = q_at(s.Q, k);
        const Mat3 gv = velocity_gradient(d.d1v, d.d2v, k);
        const Mat3 D = strain_rate(gv);
        const Mat3 W = vorticity(gv);
        const Mat3 qm = q.to_mat();
        QTensor r = (-s.v(0, k)) * q_at(d.d1Q, k) + (-s.v(1, k)) * q_at(d.d2Q, k);
        r += QTensor::from_mat(s_q_operator(q, D, p.xi) + W * qm - qm * W);
        if (full)
            r += (1.0 / p.Gamma) * q_at(*H, k);
        else
            r += (-1.0 / (p.Gamma * p.eps)) * bulk_gradient(q, p) + (kappa / (p.Gamma * p.eps)) * q;
        q_set(out, k, r);
    }
    std::array<Spectrum, 5> hat;
    for (int c = 0; c < 5; ++c) hat[c] = ops.forward(out.comp(c));
    return hat;
}

// Spectral momentum tendency. full adds the viscous term (eta/2) Lap v.
std::array<Spectrum, 3> v_tendency(const SpectralOps& ops, const BEState& s, const Derivs& d, const QField& H,
                                   const MaterialParams& p, bool full)
{
    const Grid2D& g = ops.grid();
    // A_i0, A_i1: stress columns entering d_j sigma_ij; conv_i: -v.grad v_i.
    Field<6> A(g);
    VectorField3 conv(g);
    for (std::size_t k = 0; k < g.npts(); ++k) {
        const QTensor q = q_at(s.Q, k);
        const QTensor h = q_at(H, k);
        const Mat3 qm = q.to_mat(), hm = h.to_mat();
        const Mat3 tau = qm * hm - hm * qm - s_q_operator(q, hm, p.xi);
        const QTensor a1 = q_at(d.d1Q, k), a2 = q_at(d.d2Q, k);
        const double G00 = a1.norm2(), G01 = ddot(a1, a2), G11 = a2.norm2();
        const double G[2][2] = {{G00, G01}, {G01, G11}};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 2; ++j) {
                double val = tau(i, j);
                if (i < 2) val -= p.L1 * G[i][j];
                A(2 * i + j, k) = val;
            }
            conv(i, k) = -(s.v(0, k) * d.d1v(i, k) + s.v(1, k) * d.d2v(i, k));
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
            Spectrum lv = d.v_hat[i];
            ops.laplacian_inplace(lv);
            for (std::size_t m = 0; m < hat[i].size(); ++m) hat[i][m] += 0.5 * p.eta * lv[m];
        }
    }
    return hat;
}

double max_q_norm(const QField& Q)
{
    double m = 0.0;
    for (std::size_t k = 0; k < Q.npts(); ++k) m = std::max(m, q_at(Q, k).norm());
    return m;
}

double lipschitz_bound(const QField& Q, const MaterialParams& p)
{
    const double M = max_q_norm(Q);
    return std::abs(p.a) + 2.0 * p.b * M + 3.0 * p.c * M * M;
}

}  // namespace

QField molecular_field(const QField& Q, const MaterialParams& p)
{
    const SpectralOps ops(Q.grid());
    BEState s(Q.grid());
    s.Q = Q;
    return molecular_field_from(derivatives(ops, s), Q, p);
}

Stresses assemble_stresses(const BEState& s, const QField& H, const MaterialParams& p)
{
    const Grid2D& g = s.grid();
    const SpectralOps ops(g);
    const Derivs d = derivatives(ops, s);
    Stresses out{TensorField(g), TensorField(g), TensorField(g)};
    for (std::size_t k = 0; k < g.npts(); ++k) {
        const QTensor q = q_at(s.Q, k);
        const Mat3 qm = q.to_mat(), hm = q_at(H, k).to_mat();
        const Mat3 D = strain_rate(velocity_gradient(d.d1v, d.d2v, k));
        const Mat3 sym = p.eta * D - s_q_operator(q, hm, p.xi);
        const Mat3 anti = qm * hm - hm * qm;
        const QTensor a[2] = {q_at(d.d1Q, k), q_at(d.d2Q, k)};
        Mat3 dist;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) dist(i, j) = -p.L1 * ddot(a[i], a[j]);
        for (int c = 0; c < 9; ++c) {
            out.symmetric(c, k) = sym.m[c];
            out.antisymmetric(c, k) = anti.m[c];
            out.distortion(c, k) = dist.m[c];
        }
    }
    return out;
}

QField q_rhs(const BEState& s, const QField& H, const MaterialParams& p)
{
    const SpectralOps ops(s.grid());
    const Derivs d = derivatives(ops, s);
    const auto hat = q_tendency(ops, s, d, &H, p, true, 0.0);
    QField out(s.grid());
    for (int c = 0; c < 5; ++c) ops.backward(hat[c], out.comp(c));
    return out;
}

VectorField3 momentum_rhs(const BEState& s, const QField& H, const MaterialParams& p)
{
    const SpectralOps ops(s.grid());
    const Derivs d = derivatives(ops, s);
    const auto hat = v_tendency(ops, s, d, H, p, true);
    VectorField3 out(s.grid());
    for (int c = 0; c < 3; ++c) ops.backward(hat[c], out.comp(c));
    return out;
}

DissipationRates be_dissipation_rates(const BEState& s, const MaterialParams& p)
{
    const Grid2D& g = s.grid();
    const SpectralOps ops(g);
    const Derivs d = derivatives(ops, s);
    const QField H = molecular_field_from(d, s.Q, p);
    double visc = 0.0, rot = 0.0;
    for (std::size_t k = 0; k < g.npts(); ++k) {
        const Mat3 D = strain_rate(velocity_gradient(d.d1v, d.d2v, k));
        visc += p.eta * ddot(D, D);
        rot += q_at(H, k).norm2() / p.Gamma;
    }
    const double w = g.h() * g.h();
    return {visc * w, rot * w};
}

double stability_cap(const QField& Q, const MaterialParams& p, double cap_factor)
{
    return cap_factor * p.Gamma * p.eps / lipschitz_bound(Q, p);
}

BerisEdwardsSolver::BerisEdwardsSolver(const Grid2D& g, const MaterialParams& p, StepperOptions opt)
    : g_(g), p_(p), opt_(opt), ops_(g)
{
    p_.validate();
}

BerisEdwardsSolver::Tendency BerisEdwardsSolver::explicit_tendency(const BEState& s, double kappa) const
{
    const Derivs d = derivatives(ops_, s);
    const QField H = molecular_field_from(d, s.Q, p_);
    Tendency t;
    t.q_hat = d.q_hat;
    t.v_hat = d.v_hat;
    t.nq_hat = q_tendency(ops_, s, d, nullptr, p_, false, kappa);
    t.nv_hat = v_tendency(ops_, s, d, H, p_, false);
    if (opt_.dealias) {
        for (auto& x : t.nq_hat) ops_.dealias_inplace(x);
        for (auto& x : t.nv_hat) ops_.dealias_inplace(x);
    }
    return t;
}

void BerisEdwardsSolver::step(BEState& s, double dt)
{
    if (!(dt > 0.0)) throw StepRejected("dt must be positive");
    if (opt_.stabilized) {
        if (kappa_ == 0.0) kappa_ = opt_.kappa >= 0.0 ? opt_.kappa : lipschitz_bound(s.Q, p_);
    } else {
        const double cap = stability_cap(s.Q, p_, opt_.cap_factor);
        if (dt > cap * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "dt = " << dt << " exceeds the bulk stability cap " << cap << " at t = " << s.t;
            throw StepRejected(os.str());
        }
    }
    const double kappa = opt_.stabilized ? kappa_ : 0.0;
    const double relax = kappa / (p_.Gamma * p_.eps);

    Tendency cur = explicit_tendency(s, kappa);
    const bool bdf2 = opt_.scheme == StepperOptions::Scheme::imex_bdf2 && history_ && history_->dt == dt;

    const int n = g_.n, m = ops_.nc();
    const double nuq = p_.L1 / p_.Gamma;
    const double nuv = 0.5 * p_.eta;
    std::array<Spectrum, 5> qn;
    std::array<Spectrum, 3> vn;
    for (int c = 0; c < 5; ++c) qn[c].resize(ops_.nspec());
    for (int c = 0; c < 3; ++c) vn[c].resize(ops_.nspec());

    for (int i = 0; i < n; ++i) {
        const double a = ops_.k1(i);
        for (int j = 0; j < m; ++j) {
            const double b = ops_.k2(j);
            const double kk = a * a + b * b;
            const std::size_t idx = static_cast<std::size_t>(i) * m + j;
            if (bdf2) {
                const Tendency& pr = history_->prev;
                const double dq = 3.0 + 2.0 * dt * (nuq * kk + relax);
                const double dv = 3.0 + 2.0 * dt * nuv * kk;
                for (int c = 0; c < 5; ++c)
                    qn[c][idx] = (4.0 * cur.q_hat[c][idx] - pr.q_hat[c][idx]
                                  + 2.0 * dt * (2.0 * cur.nq_hat[c][idx] - pr.nq_hat[c][idx])) / dq;
                for (int c = 0; c < 3; ++c)
                    vn[c][idx] = (4.0 * cur.v_hat[c][idx] - pr.v_hat[c][idx]
                                  + 2.0 * dt * (2.0 * cur.nv_hat[c][idx] - pr.nv_hat[c][idx])) / dv;
            } else {
                const double dq = 1.0 + dt * (nuq * kk + relax);
                const double dv = 1.0 + dt * nuv * kk;
                for (int c = 0; c < 5; ++c) qn[c][idx] = (cur.q_hat[c][idx] + dt * cur.nq_hat[c][idx]) / dq;
                for (int c = 0; c < 3; ++c) vn[c][idx] = (cur.v_hat[c][idx] + dt * cur.nv_hat[c][idx]) / dv;
            }
        }
    }
    leray_project_spectral(ops_, vn[0], vn[1]);
    for (int c = 0; c < 5; ++c) ops_.backward(qn[c], s.Q.comp(c));
    for (int c = 0; c < 3; ++c) ops_.backward(vn[c], s.v.comp(c));
    s.t += dt;

    if (opt_.scheme == StepperOptions::Scheme::imex_bdf2) history_ = History{std::move(cur), dt};

    const auto finite = [](const std::vector<double>& x) {
        return std::all_of(x.begin(), x.end(), [](double y) { return std::isfinite(y); });
    };
    if (!finite(s.Q.data()) || !finite(s.v.data())) {
        std::ostringstream os;
        os << "non-finite state after step to t = " << s.t << " (dt = " << dt << ", eps = " << p_.eps << ")";
        throw DivergenceError(os.str());
    }
}

EnergyRecord be_diagnostics(const BEState& s, const MaterialParams& p)
{
    const EnergyBreakdown e = energy_breakdown(s.v, s.Q, p);
    EnergyRecord r;
    r.t = s.t;
    r.kinetic = e.kinetic;
    r.elastic = e.elastic;
    r.bulk_over_eps = e.bulk;
    r.total = e.total();
    r.div_residual = max_abs_divergence(s.v);
    const double sp = s_plus(p);
    double gap = std::numeric_limits<double>::infinity(), d2 = 0.0;
    for (std::size_t k = 0; k < s.Q.npts(); ++k) {
        const EigenFrame f = eigen_decompose(q_at(s.Q, k));
        gap = std::min(gap, f.lambda[2] - f.lambda[1]);
        const double d = dist_to_manifold(f, sp);
        d2 += d * d;
    }
    r.min_eig_gap = gap;
    r.dist_to_N_L2 = std::sqrt(d2 * s.grid().h() * s.grid().h());
    return r;
}

BERunResult run_be(BEState initial, const MaterialParams& p, const RunOptions& opt, const BEMonitor& monitor)
{
    BerisEdwardsSolver solver(initial.grid(), p, opt.stepper);
    BERunResult res;
    BEState& s = initial;
    const double t0 = s.t;
    EnergyRecord rec = be_diagnostics(s, p);
    res.series.push_back(rec);
    double next_out = t0 + opt.output_interval;
    const double tol = 1e-12 * std::max(1.0, std::abs(opt.t_end));
    while (s.t < opt.t_end - tol) {
        const double dt = std::min(opt.dt, opt.t_end - s.t);
        if (dt < opt.dt * (1.0 - 1e-9)) solver.reset_history();
        solver.step(s, dt);
        ++res.steps;
        const DissipationRates cur = be_dissipation_rates(s, p);
        rec.viscous_dissip_cum += dt * cur.viscous;
        rec.rotational_dissip_cum += dt * cur.rotational;
        const bool last = !(s.t < opt.t_end - tol);
        if (opt.output_interval <= 0.0 || s.t >= next_out - tol || last) {
            EnergyRecord d = be_diagnostics(s, p);
            d.viscous_dissip_cum = rec.viscous_dissip_cum;
            d.rotational_dissip_cum = rec.rotational_dissip_cum;
            rec = d;
            res.series.push_back(rec);
            if (opt.output_interval > 0.0)
                while (next_out <= s.t + tol) next_out += opt.output_interval;
        } else {
            const EnergyBreakdown e = energy_breakdown(s.v, s.Q, p);
            rec.t = s.t;
            rec.kinetic = e.kinetic;
            rec.elastic = e.elastic;
            rec.bulk_over_eps = e.bulk;
            rec.total = e.total();
        }
        if (monitor) monitor(s, rec);
    }
    res.final_state = std::move(s);
    return res;
}

}  // namespace nlq
