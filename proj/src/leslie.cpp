#include "nlq/leslie.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "nlq/errors.hpp"

namespace nlq {

LeslieCoefficients derive_coefficients(const MaterialParams& p)
{
    const double s = s_plus(p);
    const double G = p.Gamma;
    const double xi = p.xi;
    const double s2 = s * s;
    const double rot = G * xi * s * (2.0 + s) / 3.0;
    const double str = G * xi * xi * s * (4.0 - s) / 3.0;

    LeslieCoefficients lc;
    lc.splus = s;
    lc.k1 = lc.k2 = lc.k3 = 2.0 * p.L1 * s2;
    lc.k4 = 0.0;
    lc.gamma1 = 2.0 * G * s2;
    lc.gamma2 = -2.0 * G * xi * s * (s + 2.0) / 3.0;
    lc.alpha1 = -2.0 * G * xi * xi * s2 * (3.0 - 2.0 * s) * (1.0 + 2.0 * s) / 3.0;
    lc.alpha2 = -G * s2 - rot;
    lc.alpha3 = G * s2 - rot;
    lc.alpha4 = p.eta + 4.0 * G * xi * xi * (1.0 - s) * (1.0 - s) / 9.0;
    lc.alpha5 = str + rot;
    lc.alpha6 = str - rot;
    if (!(lc.gamma1 > 0.0)) throw ParameterError("gamma1 > 0 required");
    const double g2g1 = lc.gamma2 * lc.gamma2 / lc.gamma1;
    lc.beta1 = lc.alpha1 + g2g1;
    lc.beta2 = lc.alpha4;
    lc.beta3 = lc.alpha5 + lc.alpha6 - g2g1;
    return lc;
}

namespace {

int sign_of(double x, double tol)
{
    if (x > tol) return 1;
    if (x < -tol) return -1;
    return 0;
}

double min_eig_sym(std::vector<double> a, int n)
{
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double th = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (th >= 0 ? 1.0 : -1.0) / (std::abs(th) + std::sqrt(th * th + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    double m = a[0];
    for (int i = 1; i < n; ++i) m = std::min(m, a[i * n + i]);
    return m;
}

// Orthonormal basis of the strain rates reachable by a planar flow
// v(x1, x2) with three components: D33 = 0 and D11 = -D22.
std::array<Mat3, 4> planar_strain_basis()
{
    std::array<Mat3, 4> e{};
    const double r2 = 1.0 / std::sqrt(2.0);
    e[0](0, 0) = r2;
    e[0](1, 1) = -r2;
    e[1](0, 1) = e[1](1, 0) = r2;
    e[2](0, 2) = e[2](2, 0) = r2;
    e[3](1, 2) = e[3](2, 1) = r2;
    return e;
}

double form_value(const LeslieCoefficients& lc, const Mat3& D, const Vec3& d)
{
    const Mat3 dd = Mat3::outer(d, d);
    const double Ddd = ddot(D, dd);
    const Vec3 Dd = D.apply(d);
    return lc.alpha4 * ddot(D, D) + lc.beta1 * Ddd * Ddd + lc.beta3 * dot(Dd, Dd);
}

}  // namespace

double dissipation_form_min(const LeslieCoefficients& lc)
{
    const auto basis = planar_strain_basis();
    const int nd = 600;
    double best = std::numeric_limits<double>::infinity();
    std::vector<Vec3> dirs = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1},
                              normalized(Vec3{1, 1, 0}), normalized(Vec3{1, 0, 1}), normalized(Vec3{1, 1, 1})};
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < nd; ++k) {
        const double z = 1.0 - (k + 0.5) * 2.0 / nd;
        const double r = std::sqrt(1.0 - z * z);
        dirs.push_back({r * std::cos(golden * k), r * std::sin(golden * k), z});
    }
    for (const Vec3& d : dirs) {
        std::vector<double> m(16);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                // Polarization of the quadratic form.
                const double qp = form_value(lc, basis[i] + basis[j], d);
                const double qm = form_value(lc, basis[i] - basis[j], d);
                m[i * 4 + j] = 0.25 * (qp - qm);
            }
        }
        best = std::min(best, min_eig_sym(m, 4));
    }
    return best;
}

DissipationSignReport dissipation_sign_report(const LeslieCoefficients& lc, const MaterialParams& p,
                                              double xi_scan_max, int xi_scan_steps)
{
    DissipationSignReport r;
    const double tol = 1e-14 * std::max(1.0, std::abs(lc.alpha4));
    r.sign_beta1 = sign_of(lc.beta1, tol);
    r.sign_beta2 = sign_of(lc.beta2, tol);
    r.sign_beta3 = sign_of(lc.beta3, tol);
    r.min_eigenvalue = dissipation_form_min(lc);
    r.psd = r.min_eigenvalue >= -1e-12 * std::abs(lc.alpha4);

    r.xi_scan_max = xi_scan_max;
    r.xi_threshold = 0.0;
    r.threshold_bounded = false;
    MaterialParams q = p;
    for (int k = 0; k <= xi_scan_steps; ++k) {
        q.xi = xi_scan_max * k / xi_scan_steps;
        const LeslieCoefficients c = derive_coefficients(q);
        if (dissipation_form_min(c) < -1e-12 * std::abs(c.alpha4)) {
            r.threshold_bounded = true;
            break;
        }
        r.xi_threshold = q.xi;
    }
    return r;
}

}  // namespace nlq
