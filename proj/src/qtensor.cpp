#include "nlq/qtensor.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "nlq/errors.hpp"

namespace nlq {

Mat3 Mat3::identity()
{
    Mat3 r;
    r(0, 0) = r(1, 1) = r(2, 2) = 1.0;
    return r;
}

Mat3 Mat3::outer(const Vec3& a, const Vec3& b)
{
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r(i, j) = a[i] * b[j];
    return r;
}

Mat3 Mat3::transpose() const
{
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r(i, j) = (*this)(j, i);
    return r;
}

Vec3 Mat3::apply(const Vec3& x) const
{
    Vec3 r{};
    for (int i = 0; i < 3; ++i)
        r[i] = (*this)(i, 0) * x[0] + (*this)(i, 1) * x[1] + (*this)(i, 2) * x[2];
    return r;
}

Mat3 operator+(const Mat3& a, const Mat3& b)
{
    Mat3 r;
    for (int k = 0; k < 9; ++k) r.m[k] = a.m[k] + b.m[k];
    return r;
}

Mat3 operator-(const Mat3& a, const Mat3& b)
{
    Mat3 r;
    for (int k = 0; k < 9; ++k) r.m[k] = a.m[k] - b.m[k];
    return r;
}

Mat3 operator*(double s, const Mat3& a)
{
    Mat3 r;
    for (int k = 0; k < 9; ++k) r.m[k] = s * a.m[k];
    return r;
}

Mat3 operator*(const Mat3& a, const Mat3& b)
{
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j) + a(i, 2) * b(2, j);
    return r;
}

double ddot(const Mat3& a, const Mat3& b)
{
    double s = 0.0;
    for (int k = 0; k < 9; ++k) s += a.m[k] * b.m[k];
    return s;
}

double QTensor::operator()(int i, int j) const
{
    if (i > j) std::swap(i, j);
    switch (3 * i + j) {
    case 0: return q11;
    case 1: return q12;
    case 2: return q13;
    case 4: return q22;
    case 5: return q23;
    default: return q33();
    }
}

double QTensor::comp(int k) const
{
    switch (k) {
    case 0: return q11;
    case 1: return q12;
    case 2: return q13;
    case 3: return q22;
    default: return q23;
    }
}

double& QTensor::comp(int k)
{
    switch (k) {
    case 0: return q11;
    case 1: return q12;
    case 2: return q13;
    case 3: return q22;
    default: return q23;
    }
}

Mat3 QTensor::to_mat() const
{
    Mat3 r;
    r.m = {q11, q12, q13, q12, q22, q23, q13, q23, q33()};
    return r;
}

QTensor QTensor::from_mat(const Mat3& a)
{
    const double tr3 = a.trace() / 3.0;
    QTensor q;
    q.q11 = a(0, 0) - tr3;
    q.q22 = a(1, 1) - tr3;
    q.q12 = 0.5 * (a(0, 1) + a(1, 0));
    q.q13 = 0.5 * (a(0, 2) + a(2, 0));
    q.q23 = 0.5 * (a(1, 2) + a(2, 1));
    return q;
}

QTensor QTensor::uniaxial(double s, const Vec3& d)
{
    QTensor q;
    q.q11 = s * (d[0] * d[0] - 1.0 / 3.0);
    q.q22 = s * (d[1] * d[1] - 1.0 / 3.0);
    q.q12 = s * d[0] * d[1];
    q.q13 = s * d[0] * d[2];
    q.q23 = s * d[1] * d[2];
    return q;
}

double QTensor::norm2() const
{
    const double q33v = q33();
    return q11 * q11 + q22 * q22 + q33v * q33v + 2.0 * (q12 * q12 + q13 * q13 + q23 * q23);
}

QTensor operator+(const QTensor& a, const QTensor& b)
{
    return {a.q11 + b.q11, a.q12 + b.q12, a.q13 + b.q13, a.q22 + b.q22, a.q23 + b.q23};
}

QTensor operator-(const QTensor& a, const QTensor& b)
{
    return {a.q11 - b.q11, a.q12 - b.q12, a.q13 - b.q13, a.q22 - b.q22, a.q23 - b.q23};
}

QTensor operator*(double s, const QTensor& a)
{
    return {s * a.q11, s * a.q12, s * a.q13, s * a.q22, s * a.q23};
}

QTensor& operator+=(QTensor& a, const QTensor& b)
{
    a = a + b;
    return a;
}

double ddot(const QTensor& a, const QTensor& b)
{
    return a.q11 * b.q11 + a.q22 * b.q22 + a.q33() * b.q33()
        + 2.0 * (a.q12 * b.q12 + a.q13 * b.q13 + a.q23 * b.q23);
}

double ddot(const QTensor& a, const Mat3& b) { return ddot(a.to_mat(), b); }

QTensor square_traceless(const QTensor& q)
{
    const Mat3 m = q.to_mat();
    return QTensor::from_mat(m * m);
}

double trace_cube(const QTensor& q)
{
    const Mat3 m = q.to_mat();
    return ddot(m * m, m);
}

void MaterialParams::validate() const
{
    auto check = [](bool ok, const char* what) {
        if (!ok) throw ParameterError(what);
    };
    check(std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(L1)
              && std::isfinite(Gamma) && std::isfinite(xi) && std::isfinite(eta) && std::isfinite(eps),
          "material parameters must be finite");
    check(c > 0.0, "c > 0 required");
    check(eta > 0.0, "eta > 0 required");
    check(Gamma > 0.0, "Gamma > 0 required");
    check(eps > 0.0, "eps > 0 required");
    check(L1 > 0.0, "L1 > 0 required");
    check(b > 0.0, "b > 0 required");
    check(b * b + 27.0 * a * c > 0.0, "b^2 + 27ac > 0 required");
}

namespace {

double discriminant(const MaterialParams& p)
{
    if (!(p.c > 0.0)) throw ParameterError("c > 0 required");
    const double disc = p.b * p.b + 24.0 * p.a * p.c;
    if (!(disc > 0.0)) throw ParameterError("b^2 + 24ac > 0 required for real s+");
    return disc;
}

}  // namespace

double s_plus(const MaterialParams& p) { return (p.b + std::sqrt(discriminant(p))) / (4.0 * p.c); }
double s_minus(const MaterialParams& p) { return (p.b - std::sqrt(discriminant(p))) / (4.0 * p.c); }

double fb_uniaxial(double s, const MaterialParams& p)
{
    const double s2 = s * s;
    return -(p.a / 3.0) * s2 - (2.0 * p.b / 27.0) * s2 * s + (p.c / 9.0) * s2 * s2;
}

double bulk_energy_raw(const QTensor& q, const MaterialParams& p)
{
    const double n2 = q.norm2();
    return -0.5 * p.a * n2 - (p.b / 3.0) * trace_cube(q) + 0.25 * p.c * n2 * n2;
}

double bulk_energy(const QTensor& q, const MaterialParams& p, double fb_min)
{
    return bulk_energy_raw(q, p) - fb_min;
}

double bulk_energy(const QTensor& q, const MaterialParams& p)
{
    return bulk_energy(q, p, fb_uniaxial(s_plus(p), p));
}

QTensor bulk_gradient(const QTensor& q, const MaterialParams& p)
{
    const double n2 = q.norm2();
    return (-p.a + p.c * n2) * q - p.b * square_traceless(q);
}

Mat3 EigenFrame::reconstruct() const
{
    Mat3 r;
    for (int k = 0; k < 3; ++k) r = r + lambda[k] * Mat3::outer(d[k], d[k]);
    return r;
}

namespace {

void fix_sign(Vec3& v)
{
    for (double x : v) {
        if (std::abs(x) > 1e-12) {
            if (x < 0.0) v = -1.0 * v;
            return;
        }
    }
}

Vec3 least_aligned_axis(const Vec3& d)
{
    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(d[i]) < std::abs(d[k])) k = i;
    Vec3 e{};
    e[k] = 1.0;
    return e;
}

Vec3 kernel_vector(const Mat3& m)
{
    const Vec3 r0{m(0, 0), m(0, 1), m(0, 2)};
    const Vec3 r1{m(1, 0), m(1, 1), m(1, 2)};
    const Vec3 r2{m(2, 0), m(2, 1), m(2, 2)};
    const Vec3 c[3] = {cross(r0, r1), cross(r0, r2), cross(r1, r2)};
    int best = 0;
    for (int k = 1; k < 3; ++k)
        if (dot(c[k], c[k]) > dot(c[best], c[best])) best = k;
    return normalized(c[best]);
}

void sort_frame(EigenFrame& f)
{
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return f.lambda[i] < f.lambda[j]; });
    EigenFrame s = f;
    for (int k = 0; k < 3; ++k) {
        s.lambda[k] = f.lambda[idx[k]];
        s.d[k] = f.d[idx[k]];
        fix_sign(s.d[k]);
    }
    f = s;
}

}  // namespace

EigenFrame eigen_decompose_jacobi(const QTensor& q)
{
    Mat3 a = q.to_mat();
    Mat3 v = Mat3::identity();
    const double scale = std::max(q.norm(), std::numeric_limits<double>::min());
    for (int sweep = 0; sweep < 50; ++sweep) {
        const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
        if (off <= 1e-40 * scale * scale) break;
        for (int p = 0; p < 2; ++p) {
            for (int r = p + 1; r < 3; ++r) {
                const double apr = a(p, r);
                if (apr == 0.0) continue;
                const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                Mat3 g = Mat3::identity();
                g(p, p) = cs;
                g(r, r) = cs;
                g(p, r) = sn;
                g(r, p) = -sn;
                a = g.transpose() * a * g;
                a(p, r) = a(r, p) = 0.0;
                v = v * g;
            }
        }
    }
    EigenFrame f;
    f.used_fallback = true;
    for (int k = 0; k < 3; ++k) {
        f.lambda[k] = a(k, k);
        f.d[k] = {v(0, k), v(1, k), v(2, k)};
    }
    sort_frame(f);
    return f;
}

EigenFrame eigen_decompose(const QTensor& q)
{
    const double n2 = q.norm2();
    if (n2 == 0.0) {
        EigenFrame f;
        f.d = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
        return f;
    }
    const Mat3 m = q.to_mat();
    const double qq = std::sqrt(n2 / 6.0);
    const double det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
        - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    const double r = std::clamp(det / (2.0 * qq * qq * qq), -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    double l3 = 2.0 * qq * std::cos(phi);
    double l1 = 2.0 * qq * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    double l2 = -l1 - l3;
    if (l2 < l1) std::swap(l1, l2);
    if (l3 < l2) std::swap(l2, l3);

    const double scale = std::max(std::abs(l1), std::abs(l3));
    const double gap = std::min(l2 - l1, l3 - l2) / scale;
    if (gap < 1e-8) return eigen_decompose_jacobi(q);

    // Isolated eigenvector from the wider gap, the other two from an exact 2x2 rotation.
    const bool top_isolated = (l3 - l2) >= (l2 - l1);
    const double liso = top_isolated ? l3 : l1;
    const Vec3 di = kernel_vector(m - liso * Mat3::identity());
    const Vec3 u = normalized(least_aligned_axis(di) - dot(least_aligned_axis(di), di) * di);
    const Vec3 w = cross(di, u);
    const double auu = dot(u, m.apply(u));
    const double aww = dot(w, m.apply(w));
    const double auw = dot(u, m.apply(w));
    const double th = 0.5 * std::atan2(2.0 * auw, auu - aww);
    const Vec3 p1 = std::cos(th) * u + std::sin(th) * w;
    const Vec3 p2 = -std::sin(th) * u + std::cos(th) * w;

    EigenFrame f;
    f.d = {di, p1, p2};
    for (int k = 0; k < 3; ++k) f.lambda[k] = dot(f.d[k], m.apply(f.d[k]));
    sort_frame(f);
    return f;
}

double dist_to_manifold(const EigenFrame& f, double splus)
{
    const double a = f.lambda[0] + splus / 3.0;
    const double b = f.lambda[1] + splus / 3.0;
    const double c = f.lambda[2] - 2.0 * splus / 3.0;
    return std::sqrt(a * a + b * b + c * c);
}

ManifoldProjection project_to_manifold(const QTensor& q, double splus)
{
    const EigenFrame f = eigen_decompose(q);
    ManifoldProjection r;
    const double scale = std::max(std::abs(f.lambda[0]), std::abs(f.lambda[2]));
    if (scale == 0.0 || (f.lambda[2] - f.lambda[1]) / scale < 1e-8) {
        r.degenerate = true;
        // Top eigenspace: span(d2, d3), or all of R^3 at Q = 0.
        const bool full = scale == 0.0 || (f.lambda[2] - f.lambda[0]) / scale < 1e-8;
        Vec3 best{};
        for (int k = 0; k < 3 && norm(best) < 1e-6; ++k) {
            Vec3 e{};
            e[k] = 1.0;
            best = full ? e : dot(e, f.d[1]) * f.d[1] + dot(e, f.d[2]) * f.d[2];
        }
        r.director = normalized(best);
    } else {
        r.director = f.d[2];
    }
    r.projection = QTensor::uniaxial(splus, r.director);
    r.distance = dist_to_manifold(f, splus);
    return r;
}

ManifoldProjection project_to_manifold(const QTensor& q, const MaterialParams& p)
{
    return project_to_manifold(q, s_plus(p));
}

double dist_to_manifold(const QTensor& q, const MaterialParams& p)
{
    return dist_to_manifold(eigen_decompose(q), s_plus(p));
}

FrameBasis frame_basis_from_director(const Vec3& d3in, double splus)
{
    FrameBasis fb;
    const Vec3 d3 = normalized(d3in);
    const Vec3 ax = least_aligned_axis(d3);
    const Vec3 d1 = normalized(ax - dot(ax, d3) * d3);
    const Vec3 d2 = cross(d3, d1);
    fb.d = {d1, d2, d3};
    fb.base = QTensor::uniaxial(splus, d3);
    const double r2 = 1.0 / std::sqrt(2.0);
    auto sym = [&](const Vec3& x, const Vec3& y) {
        return QTensor::from_mat(r2 * (Mat3::outer(x, y) + Mat3::outer(y, x)));
    };
    fb.e[0] = sym(d3, d2);
    fb.e[1] = sym(d3, d1);
    fb.e[2] = sym(d2, d1);
    fb.e[3] = QTensor::from_mat(r2 * (Mat3::outer(d1, d1) - Mat3::outer(d2, d2)));
    fb.e[4] = QTensor::from_mat(std::sqrt(6.0)
                                * (0.5 * Mat3::outer(d1, d1) + 0.5 * Mat3::outer(d2, d2)
                                   - (1.0 / 3.0) * Mat3::identity()));
    return fb;
}

FrameBasis tangent_normal_basis(const QTensor& P, const MaterialParams& p, double tol)
{
    const double sp = s_plus(p);
    const ManifoldProjection pr = project_to_manifold(P, sp);
    if (pr.distance > tol * std::max(1.0, sp))
        throw DomainError("tangent_normal_basis: base point is not on the manifold (dist = "
                          + std::to_string(pr.distance) + ")");
    return frame_basis_from_director(pr.director, sp);
}

double g_function(const EigenFrame& f, const QTensor& q, const MaterialParams& p)
{
    return -p.a + p.b * f.lambda[0] + p.c * q.norm2();
}

std::string to_string(MinimizerClassification::Argmin a)
{
    switch (a) {
    case MinimizerClassification::Argmin::s_plus: return "s_plus";
    case MinimizerClassification::Argmin::s_minus: return "s_minus";
    default: return "s0";
    }
}

MinimizerClassification classify_minimizers(const MaterialParams& p)
{
    if (!(p.b > 0.0) || !(p.c > 0.0)) throw ParameterError("classify_minimizers requires b > 0 and c > 0");
    MinimizerClassification r;
    r.f0 = 0.0;
    double best = 0.0;
    if (p.b * p.b + 24.0 * p.a * p.c > 0.0) {
        r.splus = s_plus(p);
        r.sminus = s_minus(p);
        r.fplus = fb_uniaxial(*r.splus, p);
        r.fminus = fb_uniaxial(*r.sminus, p);
        if (*r.fplus < best) {
            best = *r.fplus;
            r.argmin = MinimizerClassification::Argmin::s_plus;
        }
        if (*r.fminus < best) r.argmin = MinimizerClassification::Argmin::s_minus;
    }
    return r;
}

namespace {

double std_normal(std::mt19937_64& rng)
{
    // Box-Muller on the raw engine, so draws do not depend on the library's distributions.
    const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

QTensor random_unit_qtensor(std::mt19937_64& rng)
{
    Mat3 a;
    for (double& x : a.m) x = std_normal(rng);
    QTensor q = QTensor::from_mat(a);
    return (1.0 / q.norm()) * q;
}

Vec3 random_unit_vector(std::mt19937_64& rng)
{
    Vec3 v{std_normal(rng), std_normal(rng), std_normal(rng)};
    return normalized(v);
}

EquivalenceReport sample_equivalence(const MaterialParams& p, double delta, int samples, std::uint64_t seed)
{
    const double sp = s_plus(p);
    const double fmin = fb_uniaxial(sp, p);
    std::mt19937_64 rng(seed);
    EquivalenceReport r;
    r.delta = delta;
    r.fb_over_dist2_min = r.j2_over_fb_min = std::numeric_limits<double>::infinity();
    r.fb_over_dist2_max = r.j2_over_fb_max = 0.0;
    int kept = 0;
    while (kept < samples) {
        const QTensor P = QTensor::uniaxial(sp, random_unit_vector(rng));
        const double rad = delta * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
        const QTensor q = P + rad * random_unit_qtensor(rng);
        const EigenFrame f = eigen_decompose(q);
        const double dist = dist_to_manifold(f, sp);
        if (!(dist < delta) || dist < 1e-3 * delta) continue;
        const double fb = bulk_energy(q, p, fmin);
        const QTensor J = bulk_gradient(q, p);
        const double j2 = J.norm2();
        const double r1 = fb / (dist * dist);
        const double r2 = j2 / fb;
        r.fb_over_dist2_min = std::min(r.fb_over_dist2_min, r1);
        r.fb_over_dist2_max = std::max(r.fb_over_dist2_max, r1);
        r.j2_over_fb_min = std::min(r.j2_over_fb_min, r2);
        r.j2_over_fb_max = std::max(r.j2_over_fb_max, r2);
        r.g_over_j_max = std::max(r.g_over_j_max, std::abs(g_function(f, q, p)) / std::sqrt(j2));
        ++kept;
    }
    r.samples = kept;
    r.C = std::max({r.fb_over_dist2_max, 1.0 / r.fb_over_dist2_min, r.j2_over_fb_max, 1.0 / r.j2_over_fb_min});
    return r;
}

Mat3 s_q_operator(const QTensor& q, const Mat3& a, double xi)
{
    const Mat3 qp = q.to_mat() + (1.0 / 3.0) * Mat3::identity();
    const double qa = ddot(q.to_mat(), a);
    return xi * (a * qp + qp * a - (2.0 * qa) * qp);
}

QTensor s_q_operator(const QTensor& q, const QTensor& a, double xi)
{
    return QTensor::from_mat(s_q_operator(q, a.to_mat(), xi));
}

}  // namespace nlq
