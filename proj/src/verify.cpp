#include "nlq/verify.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "nlq/leslie.hpp"

namespace nlq {

namespace {

constexpr double pi = std::numbers::pi;

CheckResult check_le(std::string name, double value, double tol, std::string detail = {})
{
    return {std::move(name), value <= tol, value, tol, std::move(detail)};
}

CheckResult check_ge(std::string name, double value, double bound, std::string detail = {})
{
    return {std::move(name), value >= bound, value, bound, std::move(detail), true};
}

std::string fmt(const char* f, double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

MaterialParams random_params(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(0.0, 1.0);
    MaterialParams p;
    p.b = 0.2 + 2.8 * U(rng);
    p.c = 0.2 + 2.8 * U(rng);
    const double amin = -0.8 * p.b * p.b / (24.0 * p.c);
    p.a = amin + (3.0 - amin) * U(rng);
    p.L1 = 0.1 + 4.9 * U(rng);
    p.Gamma = 0.1 + 4.9 * U(rng);
    p.xi = -2.0 + 4.0 * U(rng);
    p.eta = 0.1 + 4.9 * U(rng);
    return p;
}

Mat3 rot_z(double t)
{
    Mat3 r;
    r(0, 0) = std::cos(t), r(0, 1) = -std::sin(t), r(1, 0) = std::sin(t), r(1, 1) = std::cos(t), r(2, 2) = 1.0;
    return r;
}

Mat3 rot_x(double t)
{
    Mat3 r;
    r(0, 0) = 1.0, r(1, 1) = std::cos(t), r(1, 2) = -std::sin(t), r(2, 1) = std::sin(t), r(2, 2) = std::cos(t);
    return r;
}

}  // namespace

QField manufactured_biaxial_field(const Grid2D& g)
{
    QField Q(g);
    const double k0 = 2.0 * pi / g.L;
    for (std::size_t p = 0; p < g.npts(); ++p) {
        const double x1 = k0 * g.x1(p), x2 = k0 * g.x2(p);
        const double th = 0.7 * std::sin(x1) + 0.3 * std::cos(x2);
        const double ps = 0.5 * std::cos(x1 + x2);
        const double l1 = -0.3 - 0.05 * std::sin(x1), l2 = 0.05 + 0.05 * std::cos(x2);
        Mat3 L;
        L(0, 0) = l1, L(1, 1) = l2, L(2, 2) = -l1 - l2;
        const Mat3 R = rot_z(th) * rot_x(ps);
        q_set(Q, p, QTensor::from_mat(R * L * R.transpose()));
    }
    return Q;
}

std::vector<CheckResult> verify_algebra(const RunConfig& cfg)
{
    std::vector<CheckResult> out;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(0.0, 1.0);

    double j_on_n = 0.0, fb_on_n = 0.0, fb_min = 0.0, tangent = 0.0;
    for (int k = 0; k < 500; ++k) {
        const MaterialParams p = k == 0 ? cfg.material : random_params(rng);
        const double s = s_plus(p);
        const double scale = std::abs(p.a) * s + std::abs(p.b) * s * s + p.c * s * s * s;
        const QTensor P = QTensor::uniaxial(s, random_unit_vector(rng));
        j_on_n = std::max(j_on_n, bulk_gradient(P, p).norm() / scale);
        fb_on_n = std::max(fb_on_n, std::abs(bulk_energy(P, p, fb_uniaxial(s, p))) / (scale * s));
        for (int m = 0; m < 20; ++m) {
            const QTensor q = (3.0 * s * U(rng)) * random_unit_qtensor(rng);
            fb_min = std::min(fb_min, bulk_energy(q, p) / (scale * s));
            const QTensor qn = P + (0.2 * s * U(rng)) * random_unit_qtensor(rng);
            const ManifoldProjection pr = project_to_manifold(qn, s);
            if (pr.degenerate) continue;
            const FrameBasis fb = tangent_normal_basis(pr.projection, p);
            const QTensor J = bulk_gradient(qn, p);
            for (int t = 0; t < 2; ++t) tangent = std::max(tangent, std::abs(ddot(J, fb.e[t])) / scale);
        }
    }
    out.push_back(check_le("bulk gradient vanishes on N", j_on_n, 1e-12, "500 parameter draws"));
    out.push_back(check_le("shifted bulk energy vanishes on N", fb_on_n, 1e-12));
    out.push_back(check_ge("shifted bulk energy nonnegative", fb_min, -1e-12, "10^4 random tensors"));

    const double s = s_plus(cfg.material);
    const EquivalenceReport eq = sample_equivalence(cfg.material, 0.1 * s, 5000, 17);
    const bool two_sided = eq.fb_over_dist2_min > 0.0 && std::isfinite(eq.fb_over_dist2_max) && std::isfinite(eq.C) &&
                           eq.j2_over_fb_min > 0.0;
    out.push_back({"energy equivalent to squared distance near N", two_sided, eq.fb_over_dist2_min, 0.0,
                   "min Fb/dist^2 > 0, Fb/dist^2 in [" + fmt("%.4g", eq.fb_over_dist2_min) + ", " + fmt("%.4g", eq.fb_over_dist2_max) +
                       "], C = " + fmt("%.4g", eq.C), true});
    out.push_back(check_le("bulk gradient orthogonal to tangent space", tangent, 1e-12, "at the projection"));

    const GradientCheckReport gc = gradient_check_bulk(cfg.material);
    out.push_back(check_le("bulk gradient vs finite differences", gc.max_error, gc.tolerance,
                           std::to_string(gc.checks) + " directional checks"));
    return out;
}

std::vector<CheckResult> verify_coefficients(const RunConfig& cfg)
{
    std::vector<CheckResult> out;
    std::mt19937_64 rng(99);
    double formula_err = 0.0, parodi_err = 0.0, gamma_err = 0.0, beta3_err = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const MaterialParams p = k == 0 ? cfg.material : random_params(rng);
        const LeslieCoefficients lc = derive_coefficients(p);
        const double s = s_plus(p), G = p.Gamma, x = p.xi;
        const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
        const double ref[] = {
            2.0 * p.L1 * s2,
            2.0 * G * s2,
            -(2.0 / 3.0) * G * x * (s2 + 2.0 * s),
            -(2.0 / 3.0) * G * x * x * (3.0 * s2 + 4.0 * s3 - 4.0 * s4),
            -G * s2 - G * x * (2.0 * s + s2) / 3.0,
            G * s2 - G * x * (2.0 * s + s2) / 3.0,
            p.eta + (4.0 / 9.0) * G * x * x * (1.0 - 2.0 * s + s2),
            G * x * x * (4.0 * s - s2) / 3.0 + G * x * (2.0 * s + s2) / 3.0,
            G * x * x * (4.0 * s - s2) / 3.0 - G * x * (2.0 * s + s2) / 3.0,
        };
        const double got[] = {lc.k1, lc.gamma1, lc.gamma2, lc.alpha1, lc.alpha2, lc.alpha3, lc.alpha4, lc.alpha5,
                              lc.alpha6};
        double scale = 1.0;
        for (double r : ref) scale = std::max(scale, std::abs(r));
        for (int i = 0; i < 9; ++i) formula_err = std::max(formula_err, std::abs(got[i] - ref[i]) / scale);
        formula_err = std::max({formula_err, std::abs(lc.k2 - ref[0]) / scale, std::abs(lc.k3 - ref[0]) / scale,
                         std::abs(lc.k4) / scale});
        parodi_err = std::max(parodi_err, std::abs(lc.alpha2 + lc.alpha3 - (lc.alpha6 - lc.alpha5)) / scale);
        gamma_err = std::max({gamma_err, std::abs(lc.gamma1 - (lc.alpha3 - lc.alpha2)) / scale,
                         std::abs(lc.gamma2 - (lc.alpha6 - lc.alpha5)) / scale});
        const double lhs = lc.alpha5 + lc.alpha6 - lc.gamma2 * lc.gamma2 / lc.gamma1;
        beta3_err = std::max(beta3_err, std::abs(lhs + 8.0 * G * x * x * (1.0 - s) * (1.0 - s) / 9.0) / scale);
    }
    out.push_back(check_le("coefficient formulas", formula_err, 1e-12, "10^3 parameter draws"));
    out.push_back(check_le("Parodi relation", parodi_err, 1e-12));
    out.push_back(check_le("gamma relations", gamma_err, 1e-12));
    out.push_back(check_le("beta3 closed form", beta3_err, 1e-12));

    MaterialParams w;
    w.xi = 0.1;
    const LeslieCoefficients lc = derive_coefficients(w);
    const double dev = std::max({std::abs(lc.splus - 1.5), std::abs(lc.gamma1 - 4.5), std::abs(lc.gamma2 + 0.35),
                                 std::abs(lc.beta3 + 0.0022222)});
    out.push_back(check_le("worked instance", dev, 1e-7,
                           "gamma1 " + fmt("%.10g", lc.gamma1) + " gamma2 " + fmt("%.10g", lc.gamma2) + " beta3 " +
                               fmt("%.10g", lc.beta3)));
    return out;
}

std::vector<CheckResult> verify_identities(const RunConfig& cfg)
{
    std::vector<CheckResult> out;
    const Grid2D& g = cfg.grid;
    const MaterialParams& p = cfg.material;
    const double s = s_plus(p);

    const EigenframeReport ef = eigenframe_identity_check(manufactured_biaxial_field(g));
    out.push_back(check_le("eigenframe gradient identity", ef.residual_grad, 1e-8,
                           std::to_string(ef.evaluated) + " points"));
    out.push_back(check_le("eigenframe square identity", ef.residual_square, 1e-8));

    double j1 = std::numeric_limits<double>::infinity();
    int evaluated = 0;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * pi);
    const double k0 = 2.0 * pi / g.L;
    for (int trial = 0; trial < 4; ++trial) {
        QField Q = well_prepared_init(winding_director(g, 1.5, 100 + trial), VectorField3(g), p).be.Q;
        std::array<double, 5> phase{};
        for (auto& x : phase) x = ph(rng);
        for (std::size_t k = 0; k < g.npts(); ++k)
            for (int c = 0; c < 5; ++c)
                Q(c, k) += 0.002 * s * std::sin(k0 * ((c + 1) * g.x1(k) + (2 - c % 3) * g.x2(k)) + phase[c]);
        const J1Report r = j1_check(Q, p, 0.01 * s);
        j1 = std::min(j1, r.min_j1);
        evaluated += r.evaluated;
    }
    out.push_back(check_ge("J1 nonnegative near N", j1, -1e-10, std::to_string(evaluated) + " points"));

    {
        std::mt19937_64 r2(21);
        std::normal_distribution<double> nd(0.0, 0.15);
        QField Q(g);
        for (int c = 0; c < 5; ++c)
            for (int m1 = -2; m1 <= 2; ++m1)
                for (int m2 = -2; m2 <= 2; ++m2) {
                    const double a = nd(r2), phs = nd(r2) * 10.0;
                    for (std::size_t k = 0; k < g.npts(); ++k)
                        Q(c, k) += a * std::cos(k0 * (m1 * g.x1(k) + m2 * g.x2(k)) + phs);
                }
        const PohozaevReport pr =
            pohozaev_identity_check(Q, molecular_field(Q, p), p, {0.48 * g.L, 0.52 * g.L}, 0.05 * g.L, 0.32 * g.L);
        out.push_back(check_le("Pohozaev closure", pr.closure_residual, cfg.identity_tol,
                               "route residuals " + fmt("%.3g", pr.i1_route_residual) + ", " +
                                   fmt("%.3g", pr.i2_route_residual)));
    }

    const VectorField3 d = winding_director(g, 0.8, 5);
    const VectorField3 v = velocity_modes(g, {{1, 1, 0.5, 0.2}, {0, 2, 0.3, 1.1}});
    const HStarReport hs = h_star_identity_check(d, v, p);
    out.push_back(check_le("limit molecular field identity", hs.residual, cfg.identity_tol));
    out.push_back(check_le("limit molecular field frame route", hs.frame_residual, cfg.identity_tol));
    out.push_back(check_le("gradient product identity", astar_residual(d, s), 1e-8));
    return out;
}

std::vector<CheckResult> verify_suite(const std::string& suite, const RunConfig& c)
{
    if (suite == "algebra") return verify_algebra(c);
    if (suite == "coefficients") return verify_coefficients(c);
    if (suite == "identities") return verify_identities(c);
    if (suite == "all") {
        auto r = verify_algebra(c);
        for (auto& x : verify_coefficients(c)) r.push_back(std::move(x));
        for (auto& x : verify_identities(c)) r.push_back(std::move(x));
        return r;
    }
    throw ConfigError("unknown suite '" + suite + "'", 0);
}

std::string format_check(const CheckResult& r)
{
    std::string s = std::string(r.pass ? "PASS " : "FAIL ") + r.name + " " + fmt("%.3e", r.value) + (r.lower_bound ? " >= " : " <= ") +
                    fmt("%.1e", r.tolerance);
    if (!r.detail.empty()) s += " (" + r.detail + ")";
    return s;
}

}  // namespace nlq
