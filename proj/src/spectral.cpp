#include "nlq/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

#include "nlq/errors.hpp"

namespace nlq {

Grid2D::Grid2D(int n_, double L_) : n(n_), L(L_)
{
    if (n < 8 || (n & (n - 1)) != 0) throw ParameterError("grid n must be a power of two >= 8");
    if (!(L > 0.0) || !std::isfinite(L)) throw ParameterError("grid L must be positive");
}

namespace {

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

}  // namespace

struct SpectralOps::Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;

    ~Plans()
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (r2c) fftw_destroy_plan(r2c);
        if (c2r) fftw_destroy_plan(c2r);
    }
};

SpectralOps::SpectralOps(const Grid2D& g) : grid_(g), plans_(std::make_shared<Plans>())
{
    const int n = g.n;
    std::lock_guard<std::mutex> lock(planner_mutex());
    double* in = fftw_alloc_real(g.npts());
    fftw_complex* out = fftw_alloc_complex(nspec());
    plans_->r2c = fftw_plan_dft_r2c_2d(n, n, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_->c2r = fftw_plan_dft_c2r_2d(n, n, out, in, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
}

Spectrum SpectralOps::forward(std::span<const double> f) const
{
    Spectrum s(nspec());
    std::vector<double> tmp(f.begin(), f.end());
    fftw_execute_dft_r2c(plans_->r2c, tmp.data(), reinterpret_cast<fftw_complex*>(s.data()));
    return s;
}

void SpectralOps::backward(const Spectrum& s, std::span<double> out) const
{
    Spectrum tmp = s;
    fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(tmp.data()), out.data());
    const double scale = 1.0 / static_cast<double>(grid_.npts());
    for (double& x : out) x *= scale;
}

double SpectralOps::k1(int i) const
{
    const int n = grid_.n;
    const int m = i <= n / 2 ? i : i - n;
    return 2.0 * std::numbers::pi / grid_.L * m;
}

double SpectralOps::k2(int j) const { return 2.0 * std::numbers::pi / grid_.L * j; }

double SpectralOps::k1_deriv(int i) const { return i == grid_.n / 2 ? 0.0 : k1(i); }
double SpectralOps::k2_deriv(int j) const { return j == grid_.n / 2 ? 0.0 : k2(j); }

void SpectralOps::deriv_inplace(Spectrum& s, int dir) const
{
    const int n = grid_.n, m = nc();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const double k = dir == 0 ? k1_deriv(i) : k2_deriv(j);
            s[i * m + j] *= std::complex<double>(0.0, k);
        }
    }
}

void SpectralOps::laplacian_inplace(Spectrum& s) const
{
    const int n = grid_.n, m = nc();
    for (int i = 0; i < n; ++i) {
        const double a = k1(i);
        for (int j = 0; j < m; ++j) {
            const double b = k2(j);
            s[i * m + j] *= -(a * a + b * b);
        }
    }
}

bool SpectralOps::keep_mode(int i, int j) const
{
    const int n = grid_.n;
    const int m1 = i <= n / 2 ? i : n - i;
    return 3 * m1 < n && 3 * j < n;
}

void SpectralOps::dealias_inplace(Spectrum& s) const
{
    const int n = grid_.n, m = nc();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            if (!keep_mode(i, j)) s[i * m + j] = 0.0;
}

std::vector<double> SpectralOps::deriv(std::span<const double> f, int dir) const
{
    Spectrum s = forward(f);
    deriv_inplace(s, dir);
    std::vector<double> out(grid_.npts());
    backward(s, out);
    return out;
}

std::vector<double> SpectralOps::laplacian(std::span<const double> f) const
{
    Spectrum s = forward(f);
    laplacian_inplace(s);
    std::vector<double> out(grid_.npts());
    backward(s, out);
    return out;
}

template <int NC>
Field<NC> partial(const Field<NC>& f, int dir)
{
    const SpectralOps ops(f.grid());
    Field<NC> out(f.grid());
    for (int c = 0; c < NC; ++c) {
        const auto d = ops.deriv(f.comp(c), dir);
        std::copy(d.begin(), d.end(), out.comp(c).begin());
    }
    return out;
}

template <int NC>
Field<NC> laplacian(const Field<NC>& f)
{
    const SpectralOps ops(f.grid());
    Field<NC> out(f.grid());
    for (int c = 0; c < NC; ++c) {
        const auto d = ops.laplacian(f.comp(c));
        std::copy(d.begin(), d.end(), out.comp(c).begin());
    }
    return out;
}

template Field<1> partial(const Field<1>&, int);
template Field<2> partial(const Field<2>&, int);
template Field<3> partial(const Field<3>&, int);
template Field<5> partial(const Field<5>&, int);
template Field<1> laplacian(const Field<1>&);
template Field<2> laplacian(const Field<2>&);
template Field<3> laplacian(const Field<3>&);
template Field<5> laplacian(const Field<5>&);

VectorField2 grad(const ScalarField& f)
{
    const SpectralOps ops(f.grid());
    VectorField2 out(f.grid());
    for (int dir = 0; dir < 2; ++dir) {
        const auto d = ops.deriv(f.comp(0), dir);
        std::copy(d.begin(), d.end(), out.comp(dir).begin());
    }
    return out;
}

ScalarField laplacian(const ScalarField& f) { return laplacian<1>(f); }

ScalarField divergence(const VectorField3& v)
{
    const SpectralOps ops(v.grid());
    Spectrum a = ops.forward(v.comp(0));
    Spectrum b = ops.forward(v.comp(1));
    ops.deriv_inplace(a, 0);
    ops.deriv_inplace(b, 1);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
    ScalarField out(v.grid());
    ops.backward(a, out.comp(0));
    return out;
}

void leray_project_spectral(const SpectralOps& ops, Spectrum& v1, Spectrum& v2)
{
    const int n = ops.grid().n, m = ops.nc();
    for (int i = 0; i < n; ++i) {
        const double a = ops.k1_deriv(i);
        for (int j = 0; j < m; ++j) {
            const double b = ops.k2_deriv(j);
            const double kk = a * a + b * b;
            const std::size_t idx = static_cast<std::size_t>(i) * m + j;
            if (kk == 0.0) continue;
            const std::complex<double> kv = a * v1[idx] + b * v2[idx];
            v1[idx] -= a * kv / kk;
            v2[idx] -= b * kv / kk;
        }
    }
}

VectorField3 leray_project(const VectorField3& v)
{
    const SpectralOps ops(v.grid());
    Spectrum a = ops.forward(v.comp(0));
    Spectrum b = ops.forward(v.comp(1));
    leray_project_spectral(ops, a, b);
    VectorField3 out = v;
    ops.backward(a, out.comp(0));
    ops.backward(b, out.comp(1));
    return out;
}

double max_abs_divergence(const VectorField3& v)
{
    const ScalarField d = divergence(v);
    double m = 0.0;
    for (double x : d.comp(0)) m = std::max(m, std::abs(x));
    return m;
}

double integrate(const Grid2D& g, std::span<const double> f)
{
    double s = 0.0;
    for (double x : f) s += x;
    return s * g.h() * g.h();
}

double l2_norm(const Grid2D& g, std::span<const double> f)
{
    double s = 0.0;
    for (double x : f) s += x * x;
    return std::sqrt(s * g.h() * g.h());
}

double spectral_dirichlet(const ScalarField& f)
{
    const SpectralOps ops(f.grid());
    const Spectrum s = ops.forward(f.comp(0));
    const int n = f.grid().n, m = ops.nc();
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = ops.k1_deriv(i);
        for (int j = 0; j < m; ++j) {
            const double b = ops.k2_deriv(j);
            // Interior half-plane columns stand for two conjugate modes.
            const double w = (j == 0 || 2 * j == n) ? 1.0 : 2.0;
            sum += w * (a * a + b * b) * std::norm(s[i * m + j]);
        }
    }
    const double h = f.grid().h();
    return sum * h * h / static_cast<double>(f.grid().npts());
}

namespace {

double grad_q_sq(const QField& d1, const QField& d2, std::size_t p)
{
    const QTensor a = q_at(d1, p), b = q_at(d2, p);
    return a.norm2() + b.norm2();
}

}  // namespace

EnergyBreakdown energy_breakdown(const VectorField3& v, const QField& q, const MaterialParams& p)
{
    const Grid2D& g = q.grid();
    const QField d1 = partial(q, 0), d2 = partial(q, 1);
    const double fmin = fb_uniaxial(s_plus(p), p);
    double kin = 0.0, el = 0.0, bulk = 0.0;
    for (std::size_t k = 0; k < g.npts(); ++k) {
        kin += 0.5 * (v(0, k) * v(0, k) + v(1, k) * v(1, k) + v(2, k) * v(2, k));
        el += 0.5 * p.L1 * grad_q_sq(d1, d2, k);
        bulk += bulk_energy(q_at(q, k), p, fmin) / p.eps;
    }
    const double w = g.h() * g.h();
    EnergyBreakdown e;
    e.kinetic = kin * w;
    e.elastic = el * w;
    e.bulk = bulk * w;
    return e;
}

ScalarField concentration_density(const QField& q, const MaterialParams& p)
{
    const QField d1 = partial(q, 0), d2 = partial(q, 1);
    const double fmin = fb_uniaxial(s_plus(p), p);
    ScalarField out(q.grid());
    for (std::size_t k = 0; k < q.npts(); ++k)
        out(0, k) = grad_q_sq(d1, d2, k) + bulk_energy(q_at(q, k), p, fmin) / p.eps;
    return out;
}

double local_energy_ball(const ScalarField& density, const std::array<double, 2>& center, double r)
{
    const Grid2D& g = density.grid();
    const double h = g.h();
    if (!(r >= h)) throw DomainError("local_energy_ball: radius below grid spacing");
    const int n = g.n;
    const int span = static_cast<int>(std::ceil(r / h)) + 1;
    const int ci = static_cast<int>(std::lround(center[0] / h));
    const int cj = static_cast<int>(std::lround(center[1] / h));
    // Window offsets; the whole torus once the ball wraps around.
    const int lo = 2 * span + 1 >= n ? 0 : -span;
    const int hi = 2 * span + 1 >= n ? n - 1 : span;
    double s = 0.0;
    for (int di = lo; di <= hi; ++di) {
        for (int dj = lo; dj <= hi; ++dj) {
            const int i = ((lo == 0 ? di : ci + di) % n + n) % n;
            const int j = ((lo == 0 ? dj : cj + dj) % n + n) % n;
            double dx = i * h - center[0];
            double dy = j * h - center[1];
            dx -= g.L * std::round(dx / g.L);
            dy -= g.L * std::round(dy / g.L);
            if (dx * dx + dy * dy <= r * r) s += density(0, static_cast<std::size_t>(i) * n + j);
        }
    }
    return s * h * h;
}

double local_energy_ball(const QField& q, const MaterialParams& p, const std::array<double, 2>& center, double r)
{
    return local_energy_ball(concentration_density(q, p), center, r);
}

HopfDifferential hopf_differential(const QField& q)
{
    const QField d1 = partial(q, 0), d2 = partial(q, 1);
    HopfDifferential h{ScalarField(q.grid()), ScalarField(q.grid())};
    for (std::size_t k = 0; k < q.npts(); ++k) {
        const QTensor a = q_at(d1, k), b = q_at(d2, k);
        h.real(0, k) = 0.5 * (a.norm2() - b.norm2());
        h.imag(0, k) = ddot(a, b);
    }
    return h;
}

SpectralInterpolant::SpectralInterpolant(const Grid2D& g, std::span<const double> f) : grid_(g)
{
    const SpectralOps ops(g);
    const Spectrum s = ops.forward(f);
    const int n = g.n, m = ops.nc();
    const int side = n + 1;
    coef_.assign(static_cast<std::size_t>(side) * side, 0.0);
    const double norm = 1.0 / static_cast<double>(g.npts());
    // Index (a, b) holds the mode m1 = a - n/2, m2 = b - n/2; Nyquist rows and
    // columns are split in half between +-n/2.
    for (int a = 0; a < side; ++a) {
        const int m1 = a - n / 2;
        const int i = (m1 % n + n) % n;
        const double w1 = (std::abs(m1) == n / 2) ? 0.5 : 1.0;
        for (int b = 0; b < side; ++b) {
            const int m2 = b - n / 2;
            const double w2 = (std::abs(m2) == n / 2) ? 0.5 : 1.0;
            std::complex<double> c;
            if (m2 >= 0) {
                c = s[static_cast<std::size_t>(i) * m + m2];
            } else {
                const int ic = (n - i) % n;
                c = std::conj(s[static_cast<std::size_t>(ic) * m + (-m2)]);
            }
            coef_[static_cast<std::size_t>(a) * side + b] = w1 * w2 * norm * c;
        }
    }
}

std::array<double, 4> SpectralInterpolant::eval(double x1, double x2) const
{
    const int n = grid_.n, side = n + 1;
    const double k0 = 2.0 * std::numbers::pi / grid_.L;
    std::vector<std::complex<double>> e1(side), e2(side);
    for (int a = 0; a < side; ++a) {
        const double m = a - n / 2;
        e1[a] = std::polar(1.0, k0 * m * x1);
        e2[a] = std::polar(1.0, k0 * m * x2);
    }
    std::complex<double> v = 0.0, d1 = 0.0, d2 = 0.0, lap = 0.0;
    for (int a = 0; a < side; ++a) {
        const double ka = k0 * (a - n / 2);
        std::complex<double> row = 0.0, row2 = 0.0, row22 = 0.0;
        for (int b = 0; b < side; ++b) {
            const double kb = k0 * (b - n / 2);
            const std::complex<double> t = coef_[static_cast<std::size_t>(a) * side + b] * e2[b];
            row += t;
            row2 += kb * t;
            row22 += kb * kb * t;
        }
        v += e1[a] * row;
        d1 += e1[a] * ka * row;
        d2 += e1[a] * row2;
        lap -= e1[a] * (ka * ka * row + row22);
    }
    const std::complex<double> I(0.0, 1.0);
    return {v.real(), (I * d1).real(), (I * d2).real(), lap.real()};
}

double SpectralInterpolant::value(double x1, double x2) const { return eval(x1, x2)[0]; }

void write_snapshot(const std::string& path, const Grid2D& g, double t, int ncomp, std::span<const double> data)
{
    if (data.size() != static_cast<std::size_t>(ncomp) * g.npts())
        throw DomainError("write_snapshot: data size does not match grid and component count");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DomainError("cannot open snapshot for writing: " + path);
    char header[256];
    std::snprintf(header, sizeof header, "NLQ %d %.17g %.17g %d\n", g.n, g.L, t, ncomp);
    os << header;
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    } else {
        for (double x : data) {
            unsigned char b[8];
            std::memcpy(b, &x, 8);
            std::reverse(b, b + 8);
            os.write(reinterpret_cast<const char*>(b), 8);
        }
    }
    if (!os) throw DomainError("failed writing snapshot: " + path);
}

Snapshot read_snapshot(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DomainError("cannot open snapshot: " + path);
    std::string line;
    std::getline(is, line);
    std::istringstream hs(line);
    std::string magic;
    int n = 0, nc = 0;
    double L = 0.0, t = 0.0;
    hs >> magic >> n >> L >> t >> nc;
    if (!hs || magic != "NLQ" || nc <= 0) throw DomainError("bad snapshot header in " + path);
    Snapshot s;
    s.grid = Grid2D(n, L);
    s.t = t;
    s.ncomp = nc;
    s.data.resize(static_cast<std::size_t>(nc) * s.grid.npts());
    is.read(reinterpret_cast<char*>(s.data.data()), static_cast<std::streamsize>(s.data.size() * sizeof(double)));
    if (!is) throw DomainError("truncated snapshot: " + path);
    if constexpr (std::endian::native != std::endian::little) {
        for (double& x : s.data) {
            unsigned char b[8];
            std::memcpy(b, &x, 8);
            std::reverse(b, b + 8);
            std::memcpy(&x, b, 8);
        }
    }
    return s;
}

}  // namespace nlq
