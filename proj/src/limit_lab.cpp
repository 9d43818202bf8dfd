#include "nlq/limit_lab.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "nlq/errors.hpp"
#include "nlq/leslie.hpp"

namespace nlq {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

Mat3 mat_at(const QField& q, std::size_t p) { return q_at(q, p).to_mat(); }

double frob2(const Mat3& a) { return ddot(a, a); }

// Unit vectors completing d to a right-handed orthonormal frame.
std::array<Vec3, 2> complete_frame(const Vec3& d)
{
    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(d[i]) < std::abs(d[k])) k = i;
    Vec3 e{};
    e[k] = 1.0;
    const Vec3 d1 = normalized(e - dot(e, d) * d);
    return {d1, cross(d, d1)};
}

void check_unit(const VectorField3& d, const char* who)
{
    for (std::size_t k = 0; k < d.npts(); ++k) {
        const double n = norm(vec_at(d, k));
        if (!(std::abs(n - 1.0) <= 1e-10))
            throw DomainError(std::string(who) + ": director not unit at point " + std::to_string(k));
    }
}

bool monotone(const std::vector<SweepRecord>& r, double band, double SweepRecord::*m)
{
    if (r.empty()) return false;
    for (const auto& x : r)
        if (x.diverged || !std::isfinite(x.*m)) return false;
    for (std::size_t i = 1; i < r.size(); ++i)
        if (r[i].*m > (1.0 + band) * r[i - 1].*m) return false;
    return true;
}

}  // namespace

// ---------------------------------------------------------------- initial data

WellPrepared well_prepared_init(const VectorField3& d0, const VectorField3& v0, const MaterialParams& p)
{
    if (!(d0.grid() == v0.grid())) throw DomainError("well_prepared_init: grid mismatch");
    check_unit(d0, "well_prepared_init");
    const double sp = s_plus(p);
    WellPrepared w{BEState(d0.grid()), ELState(d0.grid())};
    for (std::size_t k = 0; k < d0.npts(); ++k) q_set(w.be.Q, k, QTensor::uniaxial(sp, vec_at(d0, k)));
    w.be.v = v0;
    w.el.v = v0;
    w.el.d = d0;
    return w;
}

VectorField3 winding_director(const Grid2D& g, double amplitude, std::uint64_t seed)
{
    const double k0 = 2.0 * std::numbers::pi / g.L;
    struct Mode {
        int m1, m2;
        double c, ph;
    };
    std::vector<Mode> phi_modes, psi_modes;
    if (seed != 0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd(0.0, 1.0);
        std::uniform_real_distribution<double> ud(0.0, 2.0 * std::numbers::pi);
        for (int m1 = 0; m1 <= 2; ++m1) {
            for (int m2 = 0; m2 <= 2; ++m2) {
                if (m1 == 0 && m2 == 0) continue;
                const double w = 0.25 * amplitude / (m1 * m1 + m2 * m2);
                phi_modes.push_back({m1, m2, w * nd(rng), ud(rng)});
                psi_modes.push_back({m1, m2, w * nd(rng), ud(rng)});
            }
        }
    }
    VectorField3 d(g);
    for (std::size_t p = 0; p < g.npts(); ++p) {
        const double x1 = g.x1(p), x2 = g.x2(p);
        double phi = amplitude * std::sin(k0 * x1), psi = 0.0;
        for (const auto& m : phi_modes) phi += m.c * std::sin(k0 * (m.m1 * x1 + m.m2 * x2) + m.ph);
        for (const auto& m : psi_modes) psi += m.c * std::sin(k0 * (m.m1 * x1 + m.m2 * x2) + m.ph);
        vec_set(d, p, {std::cos(psi) * std::cos(phi), std::cos(psi) * std::sin(phi), std::sin(psi)});
    }
    return d;
}

VectorField3 velocity_modes(const Grid2D& g, const std::vector<VelocityMode>& modes)
{
    const double k0 = 2.0 * std::numbers::pi / g.L;
    VectorField3 v(g);
    for (const auto& m : modes) {
        if (m.m1 == 0 && m.m2 == 0) throw DomainError("velocity_modes: zero wavenumber");
        const double km = std::hypot(static_cast<double>(m.m1), static_cast<double>(m.m2));
        for (std::size_t p = 0; p < g.npts(); ++p) {
            const double s = m.amplitude * std::sin(k0 * (m.m1 * g.x1(p) + m.m2 * g.x2(p)) + m.phase);
            v(0, p) += s * m.m2 / km;
            v(1, p) -= s * m.m1 / km;
        }
    }
    return v;
}

// ---------------------------------------------------------------- concentration

int ConcentrationReport::max_count() const
{
    std::size_t c = 0;
    for (const auto& l : levels) c = std::max(c, l.entries.size());
    return static_cast<int>(c);
}

ConcentrationReport concentration_scan(const ScalarField& density, double delta0, const std::vector<double>& radii,
                                       double t)
{
    const Grid2D& g = density.grid();
    const int n = g.n;
    ConcentrationReport rep;
    rep.t = t;
    rep.total_energy = integrate(g, density.comp(0));
    rep.delta0 = delta0 > 0.0 ? delta0 : std::max(0.01 * rep.total_energy, std::numeric_limits<double>::min());
    const double q = std::floor(rep.total_energy / rep.delta0);
    rep.count_bound = q >= static_cast<double>(INT_MAX - 1) ? INT_MAX : static_cast<int>(q) + 1;

    for (double r : radii) {
        ConcentrationLevel lvl;
        lvl.radius = r;
        std::vector<double> ball(g.npts());
        for (std::size_t p = 0; p < g.npts(); ++p) ball[p] = local_energy_ball(density, {g.x1(p), g.x2(p)}, r);

        std::vector<std::size_t> cand;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const std::size_t p = static_cast<std::size_t>(i) * n + j;
                if (!(ball[p] >= rep.delta0)) continue;
                bool is_max = true;
                for (int di = -1; di <= 1 && is_max; ++di)
                    for (int dj = -1; dj <= 1; ++dj) {
                        const std::size_t o = static_cast<std::size_t>((i + di + n) % n) * n + (j + dj + n) % n;
                        if (ball[o] > ball[p]) {
                            is_max = false;
                            break;
                        }
                    }
                if (is_max) cand.push_back(p);
            }
        }
        std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return ball[a] > ball[b]; });

        for (std::size_t p : cand) {
            const std::array<double, 2> c{g.x1(p), g.x2(p)};
            bool far = true;
            for (const auto& e : lvl.entries) {
                double dx = c[0] - e.center[0], dy = c[1] - e.center[1];
                dx -= g.L * std::round(dx / g.L);
                dy -= g.L * std::round(dy / g.L);
                if (std::hypot(dx, dy) <= 2.0 * r) {
                    far = false;
                    break;
                }
            }
            if (far) lvl.entries.push_back({c, r, ball[p]});
        }
        rep.levels.push_back(std::move(lvl));
    }
    return rep;
}

// ---------------------------------------------------------------- sweep

bool SweepReport::bulk_monotone(double band) const
{
    return monotone(records, band, &SweepRecord::sup_bulk_over_eps);
}

bool SweepReport::director_monotone(double band) const
{
    return !el_diverged && monotone(records, band, &SweepRecord::director_error);
}

double SweepReport::director_ratio() const
{
    if (records.size() < 2 || el_diverged) return nan_v;
    return records.front().director_error / records.back().director_error;
}

bool SweepReport::counts_within_bound() const
{
    for (const auto& r : records)
        if (r.diverged || r.concentration_count > r.count_bound) return false;
    return true;
}

VectorField3 top_eigenvector_field(const QField& Q)
{
    VectorField3 d(Q.grid());
    for (std::size_t k = 0; k < Q.npts(); ++k) vec_set(d, k, eigen_decompose(q_at(Q, k)).d[2]);
    return d;
}

double director_error_mod_sign(const VectorField3& a, const VectorField3& b)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.npts(); ++k) {
        const Vec3 x = vec_at(a, k), y = vec_at(b, k);
        s += std::min(dot(x - y, x - y), dot(x + y, x + y));
    }
    const double h = a.grid().h();
    return std::sqrt(s * h * h);
}

namespace {

struct BEJob {
    BERunResult run;
    bool diverged = false;
    std::string error;
    int max_count = 0;
    int min_bound = INT_MAX;
};

BEJob be_job(const VectorField3& d0, const VectorField3& v0, const MaterialParams& pe, const SweepOptions& opt)
{
    BEJob job;
    try {
        WellPrepared w = well_prepared_init(d0, v0, pe);
        double delta0 = opt.delta0;
        if (!(delta0 > 0.0)) delta0 = 0.01 * integrate(d0.grid(), concentration_density(w.be.Q, pe).comp(0));
        auto scan = [&](const BEState& s) {
            const ConcentrationReport c = concentration_scan(concentration_density(s.Q, pe), delta0, opt.radii, s.t);
            job.max_count = std::max(job.max_count, c.max_count());
            job.min_bound = std::min(job.min_bound, c.count_bound);
        };
        scan(w.be);
        const double tol = 1e-12 * std::max(1.0, opt.run.t_end);
        double next = opt.run.output_interval;
        auto monitor = [&](const BEState& s, const EnergyRecord&) {
            const bool last = !(s.t < opt.run.t_end - tol);
            if (opt.run.output_interval <= 0.0 || s.t >= next - tol || last) {
                scan(s);
                if (opt.run.output_interval > 0.0)
                    while (next <= s.t + tol) next += opt.run.output_interval;
            }
        };
        job.run = run_be(std::move(w.be), pe, opt.run, monitor);
    } catch (const DivergenceError& e) {
        job.diverged = true;
        job.error = e.what();
    } catch (const StepRejected& e) {
        job.diverged = true;
        job.error = e.what();
    }
    return job;
}

}  // namespace

SweepReport run_sweep(const VectorField3& d0, const VectorField3& v0, const std::vector<double>& epsilons,
                      const MaterialParams& p, const SweepOptions& opt)
{
    if (epsilons.empty()) throw ParameterError("sweep: empty eps list");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0)) throw ParameterError("sweep: eps > 0 required");
        if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw ParameterError("sweep: eps list must be strictly decreasing");
    }
    if (!(opt.run.dt > 0.0)) throw ParameterError("sweep: dt > 0 required");
    check_unit(d0, "run_sweep");

    const auto policy = opt.concurrent ? std::launch::async : std::launch::deferred;
    std::vector<MaterialParams> pes;
    std::vector<std::future<BEJob>> be_futures;
    for (double e : epsilons) {
        MaterialParams pe = p;
        pe.eps = e;
        pe.validate();
        pes.push_back(pe);
    }
    for (const auto& pe : pes)
        be_futures.push_back(std::async(policy, [&d0, &v0, pe, &opt] { return be_job(d0, v0, pe, opt); }));

    const LeslieCoefficients lc = derive_coefficients(p);
    auto el_future = std::async(policy, [&]() -> std::pair<ELRunResult, std::string> {
        try {
            WellPrepared w = well_prepared_init(d0, v0, p);
            return {run_el(std::move(w.el), lc, opt.run), {}};
        } catch (const DivergenceError& e) {
            return {ELRunResult{}, e.what()};
        } catch (const StepRejected& e) {
            return {ELRunResult{}, e.what()};
        }
    });

    SweepReport rep;
    rep.params = pes.front();
    rep.t_end = opt.run.t_end;
    rep.dt = opt.run.dt;
    auto [el, el_err] = el_future.get();
    rep.el_diverged = !el_err.empty();
    rep.el_error = el_err;
    rep.el_series = el.series;

    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        BEJob job = be_futures[i].get();
        SweepRecord r;
        r.eps = epsilons[i];
        r.diverged = job.diverged;
        r.error = job.error;
        r.series = job.run.series;
        r.concentration_count = job.max_count;
        r.count_bound = job.min_bound;
        if (job.diverged) {
            r.sup_bulk_over_eps = r.sup_dist_L2 = r.director_error = r.velocity_error = r.d3_bound_ratio = nan_v;
            rep.records.push_back(std::move(r));
            continue;
        }
        for (const auto& e : r.series) {
            r.sup_bulk_over_eps = std::max(r.sup_bulk_over_eps, e.bulk_over_eps);
            r.sup_dist_L2 = std::max(r.sup_dist_L2, e.dist_to_N_L2);
        }
        const BEState& fs = job.run.final_state;
        r.d3_bound_ratio = d3_gradient_bound(fs.Q, pes[i]).max_ratio;
        if (rep.el_diverged) {
            r.director_error = r.velocity_error = nan_v;
        } else {
            r.director_error = director_error_mod_sign(top_eigenvector_field(fs.Q), el.final_state.d);
            double s = 0.0;
            for (std::size_t k = 0; k < fs.v.npts(); ++k) {
                const Vec3 dv = vec_at(fs.v, k) - vec_at(el.final_state.v, k);
                s += dot(dv, dv);
            }
            const double h = fs.grid().h();
            r.velocity_error = std::sqrt(s * h * h);
        }
        rep.records.push_back(std::move(r));
    }
    return rep;
}

// ---------------------------------------------------------------- eigenframe identities

bool eigenframe_point(const QTensor& q, const QTensor& d1q, const QTensor& d2q, EigenframePoint& out, double gap_tol)
{
    const EigenFrame f = eigen_decompose(q);
    const auto& l = f.lambda;
    if (!(l[1] - l[0] >= gap_tol && l[2] - l[1] >= gap_tol)) return false;
    const Mat3 M = q.to_mat();
    const std::array<Mat3, 2> A{d1q.to_mat(), d2q.to_mat()};
    EigenframePoint e;
    e.lambda = l;
    for (const Mat3& a : A) {
        for (int i = 0; i < 3; ++i) {
            const double dl = dot(f.d[i], a.apply(f.d[i]));
            e.grad_lambda_sq[i] += dl * dl;
        }
        auto coupling = [&](int i, int j) {
            const double c = dot(f.d[i], a.apply(f.d[j])) / (l[j] - l[i]);
            return c * c;
        };
        e.D12 += coupling(0, 1);
        e.D13 += coupling(0, 2);
        e.D23 += coupling(1, 2);
        e.grad_Q_sq += frob2(a);
        e.grad_Q2_dot += ddot(a * M + M * a, a);
        const double g = 2.0 * ddot(M, a);
        e.grad_normsq_sq += g * g;
    }
    e.E1 = 6.0 * l[2] * (l[1] - l[0]) * e.D13 + 2.0 * (l[1] - l[0]) * (l[1] - l[0]) * e.D12;
    e.E2 = 2.0 * (l[0] + l[1]) * (l[0] - l[1]) * (l[0] - l[1]) * e.D12
        + 2.0 * (l[0] - l[1]) * (l[0] * l[0] + l[1] * l[1] + l[0] * l[1]) * e.D13;
    out = e;
    return true;
}

EigenframeReport eigenframe_identity_check(const QField& Q, double gap_tol)
{
    const QField d1 = partial(Q, 0), d2 = partial(Q, 1);
    EigenframeReport rep;
    rep.min_E1 = std::numeric_limits<double>::infinity();
    rep.max_E2 = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < Q.npts(); ++k) {
        EigenframePoint e;
        if (!eigenframe_point(q_at(Q, k), q_at(d1, k), q_at(d2, k), e, gap_tol)) {
            ++rep.skipped;
            rep.skipped_points.push_back(k);
            continue;
        }
        ++rep.evaluated;
        const auto& l = e.lambda;
        const double g32 = (l[2] - l[1]) * (l[2] - l[1]);
        const double sl = e.grad_lambda_sq[0] + e.grad_lambda_sq[1] + e.grad_lambda_sq[2];
        const double rhs1 = sl + 2.0 * g32 * e.grad_d3_sq() + e.E1;
        const double sc1 = e.grad_Q_sq + sl + 2.0 * g32 * e.grad_d3_sq() + std::abs(e.E1);
        double wl = 0.0, wla = 0.0;
        for (int i = 0; i < 3; ++i) {
            wl += l[i] * e.grad_lambda_sq[i];
            wla += std::abs(l[i]) * e.grad_lambda_sq[i];
        }
        const double rhs2 = 2.0 * wl - 2.0 * l[0] * g32 * e.grad_d3_sq() + e.E2;
        const double sc2 = std::abs(e.grad_Q2_dot) + 2.0 * wla + 2.0 * std::abs(l[0]) * g32 * e.grad_d3_sq()
            + std::abs(e.E2);
        if (sc1 > 0.0) rep.residual_grad = std::max(rep.residual_grad, std::abs(e.grad_Q_sq - rhs1) / sc1);
        if (sc2 > 0.0) rep.residual_square = std::max(rep.residual_square, std::abs(e.grad_Q2_dot - rhs2) / sc2);
        rep.min_E1 = std::min(rep.min_E1, e.E1);
        rep.max_E2 = std::max(rep.max_E2, e.E2);
    }
    if (rep.evaluated == 0) rep.min_E1 = rep.max_E2 = 0.0;
    return rep;
}

namespace {

double j1_at(const QTensor& q, const QTensor& d1q, const QTensor& d2q, const MaterialParams& p)
{
    const Mat3 M = q.to_mat();
    const double l1 = eigen_decompose(q).lambda[0];
    double gq = 0.0, g2 = 0.0, gn = 0.0;
    for (const Mat3& a : {d1q.to_mat(), d2q.to_mat()}) {
        gq += frob2(a);
        g2 += ddot(a * M + M * a, a);
        const double g = 2.0 * ddot(M, a);
        gn += g * g;
    }
    return -p.b * l1 * gq - p.b * g2 + 0.5 * p.c * gn;
}

}  // namespace

ScalarField j1_field(const QField& Q, const MaterialParams& p)
{
    const QField d1 = partial(Q, 0), d2 = partial(Q, 1);
    ScalarField out(Q.grid());
    for (std::size_t k = 0; k < Q.npts(); ++k) out(0, k) = j1_at(q_at(Q, k), q_at(d1, k), q_at(d2, k), p);
    return out;
}

J1Report j1_check(const QField& Q, const MaterialParams& p, double dist_tol)
{
    const QField d1 = partial(Q, 0), d2 = partial(Q, 1);
    J1Report rep;
    rep.min_j1 = rep.min_j1_scaled = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < Q.npts(); ++k) {
        const QTensor q = q_at(Q, k);
        if (!(dist_to_manifold(q, p) <= dist_tol)) continue;
        ++rep.evaluated;
        const double j = j1_at(q, q_at(d1, k), q_at(d2, k), p);
        const double g = q_at(d1, k).norm2() + q_at(d2, k).norm2();
        rep.min_j1 = std::min(rep.min_j1, j);
        rep.min_j1_scaled = std::min(rep.min_j1_scaled, j / (1.0 + g));
    }
    if (rep.evaluated == 0) rep.min_j1 = rep.min_j1_scaled = 0.0;
    return rep;
}

D3BoundReport d3_gradient_bound(const QField& Q, const MaterialParams& p)
{
    const double sp = s_plus(p);
    const QField d1 = partial(Q, 0), d2 = partial(Q, 1);
    D3BoundReport rep;
    for (std::size_t k = 0; k < Q.npts(); ++k) {
        const EigenFrame f = eigen_decompose(q_at(Q, k));
        if (!(f.lambda[2] - f.lambda[1] >= 0.5 * sp)) continue;
        double gd3 = 0.0, gq = 0.0;
        for (const Mat3& a : {mat_at(d1, k), mat_at(d2, k)}) {
            gq += frob2(a);
            for (int i = 0; i < 2; ++i) {
                const double c = dot(f.d[i], a.apply(f.d[2])) / (f.lambda[2] - f.lambda[i]);
                gd3 += c * c;
            }
        }
        ++rep.evaluated;
        if (gq > 0.0) rep.max_ratio = std::max(rep.max_ratio, sp * sp * gd3 / (2.0 * gq));
    }
    return rep;
}

// ---------------------------------------------------------------- Pohozaev

PohozaevReport pohozaev_identity_check(const QField& Q, const QField& H, const MaterialParams& p,
                                       const std::array<double, 2>& center, double r1, double r2,
                                       const PohozaevOptions& opt)
{
    const Grid2D& g = Q.grid();
    if (!(r1 > 0.0 && r2 > r1)) throw DomainError("pohozaev: need 0 < r1 < r2");
    for (double c : center)
        if (!(c - r2 > 0.0 && c + r2 < g.L)) throw DomainError("pohozaev: annulus touches the periodic seam");
    if (opt.n_theta < 8) throw DomainError("pohozaev: n_theta too small");

    std::vector<SpectralInterpolant> qi, hi;
    for (int c = 0; c < 5; ++c) {
        qi.emplace_back(g, Q.comp(c));
        hi.emplace_back(g, H.comp(c));
    }
    const double fmin = fb_uniaxial(s_plus(p), p);

    struct Sample {
        QTensor q, dq1, dq2, lap, h;
    };
    auto sample = [&](double x1, double x2, bool with_h) {
        Sample s;
        for (int c = 0; c < 5; ++c) {
            const auto e = qi[c].eval(x1, x2);
            s.q.comp(c) = e[0];
            s.dq1.comp(c) = e[1];
            s.dq2.comp(c) = e[2];
            s.lap.comp(c) = e[3];
            if (with_h) s.h.comp(c) = hi[c].value(x1, x2);
        }
        return s;
    };

    using GL = boost::math::quadrature::gauss<double, 40>;
    std::vector<double> xr, wr;
    const auto& ab = GL::abscissa();
    const auto& wt = GL::weights();
    for (std::size_t i = 0; i < ab.size(); ++i) {
        for (double sgn : {-1.0, 1.0}) {
            if (ab[i] == 0.0 && sgn > 0.0) continue;
            xr.push_back(0.5 * (r1 + r2) + 0.5 * (r2 - r1) * sgn * ab[i]);
            wr.push_back(0.5 * (r2 - r1) * wt[i]);
        }
    }
    const int nt = opt.n_theta;
    const double dth = 2.0 * std::numbers::pi / nt;

    PohozaevReport rep;
    for (int it = 0; it < nt; ++it) {
        const double th = it * dth, ct = std::cos(th), st = std::sin(th);
        for (std::size_t ir = 0; ir < xr.size(); ++ir) {
            const double r = xr[ir];
            const Sample s = sample(center[0] + r * ct, center[1] + r * st, true);
            const QTensor dr = ct * s.dq1 + st * s.dq2;
            const double gq = s.dq1.norm2() + s.dq2.norm2();
            const double dA = wr[ir] * r * dth;
            const double f = bulk_energy(s.q, p, fmin) / p.eps;
            rep.I1_volume += p.L1 * ddot(s.lap, dr) * dA;
            rep.I1_interior += -p.L1 * (0.5 * gq - dr.norm2()) / r * dA;
            rep.I2_volume += -ddot(bulk_gradient(s.q, p), dr) / p.eps * dA;
            rep.I2_interior += f / r * dA;
            rep.I3 += -ddot(s.h, dr) * dA;
        }
        for (int side = 0; side < 2; ++side) {
            const double r = side == 0 ? r2 : r1, sgn = side == 0 ? 1.0 : -1.0;
            const Sample s = sample(center[0] + r * ct, center[1] + r * st, false);
            const QTensor dr = ct * s.dq1 + st * s.dq2;
            const double gq = s.dq1.norm2() + s.dq2.norm2();
            const double b1 = sgn * p.L1 * (dr.norm2() - 0.5 * gq) * r * dth;
            const double b2 = -sgn * bulk_energy(s.q, p, fmin) / p.eps * r * dth;
            (side == 0 ? rep.I1_outer : rep.I1_inner) += b1;
            (side == 0 ? rep.I2_outer : rep.I2_inner) += b2;
        }
    }
    rep.scale = std::abs(rep.I1_volume) + std::abs(rep.I1_interior) + std::abs(rep.I1_outer) + std::abs(rep.I1_inner)
        + std::abs(rep.I2_volume) + std::abs(rep.I2_interior) + std::abs(rep.I2_outer) + std::abs(rep.I2_inner)
        + std::abs(rep.I3);
    if (rep.scale > 0.0) {
        rep.closure_residual = std::abs(rep.I1_by_parts() + rep.I2_by_parts() + rep.I3) / rep.scale;
        rep.i1_route_residual = std::abs(rep.I1_volume - rep.I1_by_parts()) / rep.scale;
        rep.i2_route_residual = std::abs(rep.I2_volume - rep.I2_by_parts()) / rep.scale;
    }
    return rep;
}

// ---------------------------------------------------------------- limit identities

namespace {

void set6(Field<6>& f, std::size_t p, const Mat3& m)
{
    f(0, p) = m(0, 0);
    f(1, p) = m(0, 1);
    f(2, p) = m(0, 2);
    f(3, p) = m(1, 1);
    f(4, p) = m(1, 2);
    f(5, p) = m(2, 2);
}

}  // namespace

HStarFields h_star_fields(const VectorField3& d, const VectorField3& v, const MaterialParams& p)
{
    const Grid2D& g = d.grid();
    const LeslieCoefficients lc = derive_coefficients(p);
    const double s = lc.splus, G = p.Gamma, xi = p.xi, L1 = p.L1;
    const double sq2 = std::numbers::sqrt2, sq6 = std::sqrt(6.0);

    ELState st(g);
    st.d = d;
    st.v = v;
    const VectorField3 d_t = director_rhs(st, lc);
    const VectorField3 d1d = partial(d, 0), d2d = partial(d, 1), lapd = laplacian(d);
    const VectorField3 d1v = partial(v, 0), d2v = partial(v, 1);
    QField qs(g);
    for (std::size_t k = 0; k < g.npts(); ++k) q_set(qs, k, QTensor::uniaxial(s, vec_at(d, k)));
    const QField lapq = laplacian(qs);

    const double g2g1 = lc.gamma2 * lc.gamma2 / lc.gamma1;
    const double c_b1 = G * (lc.alpha1 + g2g1);
    const double c_b3 = G * (lc.alpha5 + lc.alpha6 - g2g1);
    const double c_d = 4.0 * G * G * xi * xi * (1.0 - s) * (1.0 - s) / 9.0;

    HStarFields out{Field<6>(g), Field<6>(g), ScalarField(g), ScalarField(g), ScalarField(g)};
    for (std::size_t k = 0; k < g.npts(); ++k) {
        const Vec3 dd = vec_at(d, k), n = vec_at(d_t, k);
        const std::array<Vec3, 2> gd{vec_at(d1d, k), vec_at(d2d, k)};
        const Mat3 Gv = velocity_gradient(d1v, d2v, k);
        const Mat3 D = strain_rate(Gv), W = vorticity(Gv);
        const QTensor qk = q_at(qs, k);
        const Mat3 Qm = qk.to_mat();

        Mat3 qt = s * (Mat3::outer(n, dd) + Mat3::outer(dd, n));
        for (int c = 0; c < 2; ++c)
            qt = qt + v(c, k) * s * (Mat3::outer(gd[c], dd) + Mat3::outer(dd, gd[c]));
        const Mat3 hev = G * (qt + Qm * W - W * Qm - s_q_operator(qk, D, xi));

        const double gdd = dot(gd[0], gd[0]) + dot(gd[1], gd[1]);
        const Vec3 tau = vec_at(lapd, k) + gdd * dd;
        const Vec3 Dd = D.apply(dd);
        const double Ddd = dot(dd, Dd);
        const double rhs = c_b1 * Ddd * Ddd + c_b3 * dot(Dd, Dd) + c_d * ddot(D, D)
            + 2.0 * L1 * L1 * s * s * dot(tau, tau);

        const auto [e1, e2] = complete_frame(dd);
        double g12 = 0.0, g11m22 = 0.0;
        for (const Vec3& a : gd) {
            g12 += dot(a, e1) * dot(a, e2);
            g11m22 += dot(a, e1) * dot(a, e1) - dot(a, e2) * dot(a, e2);
        }
        const double a3 = 2.0 * sq2 * L1 * s * g12 - 2.0 * sq2 * G * xi * ((s - 1.0) / 3.0) * dot(e2, D.apply(e1));
        const double a4 = sq2 * L1 * s * g11m22
            - sq2 * G * xi * ((s - 1.0) / 3.0) * (dot(e1, D.apply(e1)) - dot(e2, D.apply(e2)));
        const double a5 = sq6 * L1 * s * gdd + sq6 * G * xi * (2.0 * s * s - s - 1.0) / 3.0 * Ddd;
        const Mat3 E3 = (1.0 / sq2) * (Mat3::outer(e1, e2) + Mat3::outer(e2, e1));
        const Mat3 E4 = (1.0 / sq2) * (Mat3::outer(e1, e1) - Mat3::outer(e2, e2));
        const Mat3 E5 = (1.0 / sq6) * (Mat3::outer(e1, e1) + Mat3::outer(e2, e2) - 2.0 * Mat3::outer(dd, dd));
        const Mat3 jstar = a3 * E3 + a4 * E4 + a5 * E5;
        const Mat3 hfr = L1 * mat_at(lapq, k) - jstar;

        set6(out.H_evolution, k, hev);
        set6(out.H_frame, k, hfr);
        out.lhs(0, k) = frob2(hev);
        out.rhs(0, k) = rhs;
        out.frame_lhs(0, k) = frob2(hfr);
    }
    return out;
}

HStarReport h_star_identity_check(const VectorField3& d, const VectorField3& v, const MaterialParams& p)
{
    check_unit(d, "h_star_identity_check");
    const HStarFields f = h_star_fields(d, v, p);
    HStarReport rep;
    double diff = 0.0, fdiff = 0.0, hmax = 0.0;
    for (std::size_t k = 0; k < d.npts(); ++k) {
        rep.rhs_max = std::max(rep.rhs_max, f.rhs(0, k));
        diff = std::max(diff, std::abs(f.lhs(0, k) - f.rhs(0, k)));
        hmax = std::max(hmax, std::sqrt(f.lhs(0, k)));
        double e = 0.0;
        for (int c = 0; c < 6; ++c) {
            const double x = f.H_evolution(c, k) - f.H_frame(c, k);
            e += (c == 1 || c == 2 || c == 4 ? 2.0 : 1.0) * x * x;
        }
        fdiff = std::max(fdiff, std::sqrt(e));
    }
    rep.residual = diff / (rep.rhs_max > 0.0 ? rep.rhs_max : 1.0);
    rep.frame_residual = fdiff / (hmax > 0.0 ? hmax : 1.0);
    return rep;
}

double astar_residual(const VectorField3& d, double splus)
{
    const Grid2D& g = d.grid();
    QField qs(g);
    for (std::size_t k = 0; k < g.npts(); ++k) q_set(qs, k, QTensor::uniaxial(splus, vec_at(d, k)));
    const std::array<QField, 2> dq{partial(qs, 0), partial(qs, 1)};
    const std::array<VectorField3, 2> dd{partial(d, 0), partial(d, 1)};
    double diff = 0.0, ref = 0.0;
    for (std::size_t k = 0; k < g.npts(); ++k) {
        for (int a = 0; a < 2; ++a) {
            for (int b = a; b < 2; ++b) {
                const double lhs = ddot(q_at(dq[a], k), q_at(dq[b], k));
                const double rhs = 2.0 * splus * splus * dot(vec_at(dd[a], k), vec_at(dd[b], k));
                diff = std::max(diff, std::abs(lhs - rhs));
                ref = std::max(ref, std::abs(rhs));
            }
        }
    }
    return diff / (ref > 0.0 ? ref : 1.0);
}

// ---------------------------------------------------------------- bulk gradient

GradientCheckReport gradient_check_bulk(const MaterialParams& p, std::uint64_t seed, int n_points, int n_dirs,
                                        double step, double tol)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(0.0, 2.0 * s_plus(p));
    const double fmin = fb_uniaxial(s_plus(p), p);
    GradientCheckReport rep;
    rep.tolerance = tol;
    for (int i = 0; i < n_points; ++i) {
        const QTensor q = amp(rng) * random_unit_qtensor(rng);
        const QTensor J = bulk_gradient(q, p);
        for (int j = 0; j < n_dirs; ++j) {
            const QTensor T = random_unit_qtensor(rng);
            const double fd = (bulk_energy(q + step * T, p, fmin) - bulk_energy(q - step * T, p, fmin)) / (2.0 * step);
            const double an = ddot(J, T);
            rep.max_error = std::max(rep.max_error, std::abs(fd - an) / (1.0 + std::abs(an)));
            ++rep.checks;
        }
    }
    return rep;
}

// ---------------------------------------------------------------- refinement

bool RefinementStudy::converges(double min_ratio, double floor) const
{
    if (residuals.size() < 2) return false;
    for (std::size_t i = 1; i < residuals.size(); ++i) {
        if (residuals[i] <= floor) continue;
        if (!(residuals[i - 1] >= min_ratio * residuals[i])) return false;
    }
    return true;
}

RefinementStudy refinement_study(const std::vector<int>& grids, const std::function<double(int)>& residual_on)
{
    RefinementStudy s;
    s.grids = grids;
    for (int n : grids) s.residuals.push_back(residual_on(n));
    return s;
}

}  // namespace nlq
