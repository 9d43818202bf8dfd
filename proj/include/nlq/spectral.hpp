#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nlq/qtensor.hpp"

namespace nlq {

// Periodic square [0, L)^2 sampled on n x n points. Point (i, j) sits at
// x1 = i h, x2 = j h and has flat index i * n + j (x1 is the slow index).
struct Grid2D {
    int n = 64;
    double L = 2.0 * 3.14159265358979323846;

    Grid2D() = default;
    Grid2D(int n_, double L_);

    double h() const { return L / n; }
    std::size_t npts() const { return static_cast<std::size_t>(n) * n; }
    double x1(std::size_t p) const { return static_cast<double>(p / n) * h(); }
    double x2(std::size_t p) const { return static_cast<double>(p % n) * h(); }
    bool operator==(const Grid2D& o) const { return n == o.n && L == o.L; }
};

// Component-major storage: component c occupies [c * npts, (c + 1) * npts).
template <int NC>
class Field {
public:
    static constexpr int ncomp = NC;

    Field() = default;
    explicit Field(const Grid2D& g) : grid_(g), data_(static_cast<std::size_t>(NC) * g.npts(), 0.0) {}

    const Grid2D& grid() const { return grid_; }
    std::size_t npts() const { return grid_.npts(); }

    std::span<double> comp(int c) { return {data_.data() + c * npts(), npts()}; }
    std::span<const double> comp(int c) const { return {data_.data() + c * npts(), npts()}; }

    double& operator()(int c, std::size_t p) { return data_[c * npts() + p]; }
    double operator()(int c, std::size_t p) const { return data_[c * npts() + p]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    Grid2D grid_;
    std::vector<double> data_;
};

using ScalarField = Field<1>;
using VectorField2 = Field<2>;
using VectorField3 = Field<3>;
using QField = Field<5>;

inline QTensor q_at(const QField& q, std::size_t p)
{
    return {q(0, p), q(1, p), q(2, p), q(3, p), q(4, p)};
}
inline void q_set(QField& q, std::size_t p, const QTensor& t)
{
    for (int c = 0; c < 5; ++c) q(c, p) = t.comp(c);
}
inline Vec3 vec_at(const VectorField3& v, std::size_t p) { return {v(0, p), v(1, p), v(2, p)}; }
inline void vec_set(VectorField3& v, std::size_t p, const Vec3& x)
{
    for (int c = 0; c < 3; ++c) v(c, p) = x[c];
}

using Spectrum = std::vector<std::complex<double>>;

// FFTW-backed transforms and Fourier symbols for one grid. Cheap to copy;
// plans are shared and execution is thread-safe.
class SpectralOps {
public:
    explicit SpectralOps(const Grid2D& g);

    const Grid2D& grid() const { return grid_; }
    int nc() const { return grid_.n / 2 + 1; }
    std::size_t nspec() const { return static_cast<std::size_t>(grid_.n) * nc(); }

    Spectrum forward(std::span<const double> f) const;
    void backward(const Spectrum& s, std::span<double> out) const;

    // Wavenumbers of spectral index (i, j); the derivative symbol drops the
    // Nyquist mode so odd derivatives of real fields stay real.
    double k1(int i) const;
    double k2(int j) const;
    double k1_deriv(int i) const;
    double k2_deriv(int j) const;

    void deriv_inplace(Spectrum& s, int dir) const;
    void laplacian_inplace(Spectrum& s) const;
    void dealias_inplace(Spectrum& s) const;
    bool keep_mode(int i, int j) const;

    std::vector<double> deriv(std::span<const double> f, int dir) const;
    std::vector<double> laplacian(std::span<const double> f) const;

private:
    Grid2D grid_;
    struct Plans;
    std::shared_ptr<Plans> plans_;
};

VectorField2 grad(const ScalarField& f);
ScalarField laplacian(const ScalarField& f);
ScalarField divergence(const VectorField3& v);
template <int NC>
Field<NC> partial(const Field<NC>& f, int dir);
template <int NC>
Field<NC> laplacian(const Field<NC>& f);

VectorField3 leray_project(const VectorField3& v);
void leray_project_spectral(const SpectralOps& ops, Spectrum& v1, Spectrum& v2);
double max_abs_divergence(const VectorField3& v);

double integrate(const Grid2D& g, std::span<const double> f);
double l2_norm(const Grid2D& g, std::span<const double> f);
// Parseval: integral of |grad f|^2 from the spectrum.
double spectral_dirichlet(const ScalarField& f);

struct EnergyBreakdown {
    double kinetic = 0.0;
    double elastic = 0.0;
    double bulk = 0.0;
    double viscous_dissip = 0.0;
    double rotational_dissip = 0.0;

    double total() const { return kinetic + elastic + bulk; }
};

EnergyBreakdown energy_breakdown(const VectorField3& v, const QField& q, const MaterialParams& p);
// |grad Q|^2 + F_b/eps, pointwise.
ScalarField concentration_density(const QField& q, const MaterialParams& p);
double local_energy_ball(const ScalarField& density, const std::array<double, 2>& center, double r);
double local_energy_ball(const QField& q, const MaterialParams& p, const std::array<double, 2>& center,
                         double r);

struct HopfDifferential {
    ScalarField real;  // (|d1 Q|^2 - |d2 Q|^2) / 2
    ScalarField imag;  // d1 Q : d2 Q
};
HopfDifferential hopf_differential(const QField& q);

// Trigonometric interpolant of a periodic grid function; exact at grid points.
class SpectralInterpolant {
public:
    SpectralInterpolant(const Grid2D& g, std::span<const double> f);
    double value(double x1, double x2) const;
    // value, d1, d2, laplacian
    std::array<double, 4> eval(double x1, double x2) const;

private:
    Grid2D grid_;
    std::vector<std::complex<double>> coef_;  // full n x n spectrum, Nyquist split symmetrically
};

struct Snapshot {
    Grid2D grid;
    double t = 0.0;
    int ncomp = 0;
    std::vector<double> data;
};

void write_snapshot(const std::string& path, const Grid2D& g, double t, int ncomp, std::span<const double> data);
Snapshot read_snapshot(const std::string& path);

}  // namespace nlq
