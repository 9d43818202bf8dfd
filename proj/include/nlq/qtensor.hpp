#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

namespace nlq {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec3 normalized(const Vec3& a) { return (1.0 / norm(a)) * a; }

// Dense 3x3, row-major.
struct Mat3 {
    std::array<double, 9> m{};

    double& operator()(int i, int j) { return m[3 * i + j]; }
    double operator()(int i, int j) const { return m[3 * i + j]; }

    static Mat3 identity();
    static Mat3 outer(const Vec3& a, const Vec3& b);

    Mat3 transpose() const;
    double trace() const { return m[0] + m[4] + m[8]; }
    Vec3 apply(const Vec3& x) const;
};

Mat3 operator+(const Mat3& a, const Mat3& b);
Mat3 operator-(const Mat3& a, const Mat3& b);
Mat3 operator*(double s, const Mat3& a);
Mat3 operator*(const Mat3& a, const Mat3& b);
double ddot(const Mat3& a, const Mat3& b);

// Symmetric traceless tensor, stored as (q11, q12, q13, q22, q23); q33 = -q11 - q22.
struct QTensor {
    double q11 = 0, q12 = 0, q13 = 0, q22 = 0, q23 = 0;

    static constexpr int ncomp = 5;

    double q33() const { return -q11 - q22; }
    double operator()(int i, int j) const;
    double comp(int k) const;
    double& comp(int k);

    Mat3 to_mat() const;
    // Symmetric traceless part of a general matrix.
    static QTensor from_mat(const Mat3& a);
    // s (d x d - I/3)
    static QTensor uniaxial(double s, const Vec3& d);

    double norm2() const;
    double norm() const { return std::sqrt(norm2()); }
};

QTensor operator+(const QTensor& a, const QTensor& b);
QTensor operator-(const QTensor& a, const QTensor& b);
QTensor operator*(double s, const QTensor& a);
QTensor& operator+=(QTensor& a, const QTensor& b);
double ddot(const QTensor& a, const QTensor& b);
double ddot(const QTensor& a, const Mat3& b);
QTensor square_traceless(const QTensor& q);  // Q^2 - |Q|^2 I / 3
double trace_cube(const QTensor& q);

struct MaterialParams {
    double a = 1.0;
    double b = 1.0;
    double c = 1.0;
    double L1 = 1.0;
    double Gamma = 1.0;
    double xi = 0.0;
    double eta = 1.0;
    double eps = 0.1;

    // Throws ParameterError naming the first violated condition.
    void validate() const;
};

double s_plus(const MaterialParams& p);
double s_minus(const MaterialParams& p);

// f_b(s) = F_b(s(dd - I/3)) = -(a/3)s^2 - (2b/27)s^3 + (c/9)s^4
double fb_uniaxial(double s, const MaterialParams& p);
double bulk_energy_raw(const QTensor& q, const MaterialParams& p);
// Shifted density, zero on the manifold. Pass s_plus when calling in a loop.
double bulk_energy(const QTensor& q, const MaterialParams& p);
double bulk_energy(const QTensor& q, const MaterialParams& p, double fb_min);
QTensor bulk_gradient(const QTensor& q, const MaterialParams& p);

struct EigenFrame {
    std::array<double, 3> lambda{};  // ascending
    std::array<Vec3, 3> d{};
    bool used_fallback = false;

    Mat3 reconstruct() const;
};

EigenFrame eigen_decompose(const QTensor& q);
EigenFrame eigen_decompose_jacobi(const QTensor& q);

struct ManifoldProjection {
    QTensor projection;
    Vec3 director{};
    double distance = 0.0;
    bool degenerate = false;
};

ManifoldProjection project_to_manifold(const QTensor& q, double splus);
ManifoldProjection project_to_manifold(const QTensor& q, const MaterialParams& p);
double dist_to_manifold(const QTensor& q, const MaterialParams& p);
double dist_to_manifold(const EigenFrame& f, double splus);

struct FrameBasis {
    QTensor base;
    std::array<Vec3, 3> d{};
    std::array<QTensor, 5> e{};  // e[0], e[1] tangent; e[2..4] normal
};

FrameBasis frame_basis_from_director(const Vec3& d3, double splus);
FrameBasis tangent_normal_basis(const QTensor& P, const MaterialParams& p, double tol = 1e-8);

double g_function(const EigenFrame& f, const QTensor& q, const MaterialParams& p);

struct MinimizerClassification {
    enum class Argmin { s0, s_plus, s_minus };
    Argmin argmin = Argmin::s0;
    double f0 = 0.0;
    std::optional<double> splus, sminus;
    std::optional<double> fplus, fminus;
};

std::string to_string(MinimizerClassification::Argmin a);
MinimizerClassification classify_minimizers(const MaterialParams& p);

// Sampled two-sided bounds of the bulk-energy equivalences near the manifold:
// F_b ~ dist^2 and |J|^2 ~ F_b on dist(Q, N) < delta.
struct EquivalenceReport {
    double delta = 0.0;
    int samples = 0;
    double fb_over_dist2_min = 0.0, fb_over_dist2_max = 0.0;
    double j2_over_fb_min = 0.0, j2_over_fb_max = 0.0;
    double g_over_j_max = 0.0;
    double C = 0.0;
};

QTensor random_unit_qtensor(std::mt19937_64& rng);
Vec3 random_unit_vector(std::mt19937_64& rng);
EquivalenceReport sample_equivalence(const MaterialParams& p, double delta, int samples, std::uint64_t seed);

Mat3 s_q_operator(const QTensor& q, const Mat3& a, double xi);
QTensor s_q_operator(const QTensor& q, const QTensor& a, double xi);

}  // namespace nlq
