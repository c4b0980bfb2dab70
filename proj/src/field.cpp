#include "cherenkov/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>

namespace cherenkov {

using std::numbers::pi;

void GridSpec::validate(double potential_width) const {
    if (points < 16 || (points & (points - 1)) != 0)
        throw InvalidSpec("grid: N must be a power of two >= 16");
    if (!(box_length > 0.0)) throw InvalidSpec("grid: L must be positive");
    if (spacing() > potential_width / 2.0 + 1e-12)
        throw InvalidSpec("grid: spacing must resolve the potential (L/N <= width/2)");
    if (sponge_width < 0.0 || sponge_strength < 0.0) throw InvalidSpec("grid: negative sponge parameters");
    if (sponge_width > box_length / 4.0 + 1e-12) throw InvalidSpec("grid: sponge width must be <= L/4");
}

Fft::Fft(int n) : n_(n) {
    rbuf_ = fftw_alloc_real(real_size());
    auto* c = fftw_alloc_complex(modes());
    cbuf_ = c;
    fwd_ = fftw_plan_dft_r2c_3d(n, n, n, rbuf_, c, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_3d(n, n, n, c, rbuf_, FFTW_ESTIMATE);
}

Fft::~Fft() {
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
    fftw_free(rbuf_);
    fftw_free(cbuf_);
}

void Fft::forward(const double* in, cplx* out) {
    std::memcpy(rbuf_, in, real_size() * sizeof(double));
    fftw_execute(static_cast<fftw_plan>(fwd_));
    std::memcpy(static_cast<void*>(out), cbuf_, modes() * sizeof(cplx));
}

void Fft::backward(const cplx* in, double* out) {
    std::memcpy(cbuf_, static_cast<const void*>(in), modes() * sizeof(cplx));
    fftw_execute(static_cast<fftw_plan>(bwd_));
    std::memcpy(out, rbuf_, real_size() * sizeof(double));
}

namespace {
std::mutex fft_mu;
std::map<int, std::shared_ptr<Fft>>& fft_cache() {
    static std::map<int, std::shared_ptr<Fft>> c;
    return c;
}
} // namespace

std::shared_ptr<Fft> fft_for(int n) {
    std::lock_guard<std::mutex> lock(fft_mu);
    auto& c = fft_cache();
    auto it = c.find(n);
    if (it != c.end()) return it->second;
    auto f = std::make_shared<Fft>(n);
    c[n] = f;
    return f;
}

void set_fft_threads(int n) {
    std::lock_guard<std::mutex> lock(fft_mu);
    static bool init = false;
    if (!init) {
        fftw_init_threads();
        init = true;
    }
    fftw_plan_with_nthreads(std::max(1, n));
    fft_cache().clear();
}

Lattice::Lattice(const GridSpec& g) : N(g.points), L(g.box_length), k1d(N), k1d_odd(N) {
    for (int i = 0; i < N; ++i) {
        int m = i < N / 2 ? i : i - N;
        k1d[i] = 2.0 * pi / L * m;
        k1d_odd[i] = (i == N / 2) ? 0.0 : k1d[i];
    }
}

FieldState FieldState::zeros(const GridSpec& g) {
    FieldState s;
    s.grid = g;
    size_t m = static_cast<size_t>(g.points) * g.points * (g.points / 2 + 1);
    s.u_hat.assign(m, cplx(0.0));
    s.v_hat.assign(m, cplx(0.0));
    return s;
}

FieldState FieldState::from_real(const GridSpec& g, const std::vector<double>& u, const std::vector<double>& v) {
    FieldState s = zeros(g);
    auto f = fft_for(g.points);
    if (u.size() != f->real_size() || v.size() != f->real_size())
        throw std::invalid_argument("from_real: size mismatch");
    f->forward(u.data(), s.u_hat.data());
    f->forward(v.data(), s.v_hat.data());
    return s;
}

void FieldState::to_real(std::vector<double>& u, std::vector<double>& v) const {
    auto f = fft_for(grid.points);
    u.resize(f->real_size());
    v.resize(f->real_size());
    f->backward(u_hat.data(), u.data());
    f->backward(v_hat.data(), v.data());
    const double inv = 1.0 / static_cast<double>(f->real_size());
    for (auto& x : u) x *= inv;
    for (auto& x : v) x *= inv;
}

bool FieldState::finite() const {
    for (size_t i = 0; i < u_hat.size(); ++i)
        if (!std::isfinite(u_hat[i].real()) || !std::isfinite(u_hat[i].imag()) || !std::isfinite(v_hat[i].real()) ||
            !std::isfinite(v_hat[i].imag()))
            return false;
    return true;
}

std::vector<cplx> w_coefficients(const GridSpec& g, const PotentialSpec& spec, const Vec3& Xg) {
    Lattice lat(g);
    const int N = lat.N;
    const size_t nz = lat.nz();
    std::vector<cplx> w(static_cast<size_t>(N) * N * nz, cplx(0.0));
    // continuum Fourier coefficient (1/L^3)(2pi)^{3/2} What(k), times N^3 for the unnormalized DFT
    const double scale = std::pow(N / g.box_length, 3) * std::pow(2.0 * pi, 1.5);
    std::vector<cplx> ex(N), ey(N), ez(N);
    for (int i = 0; i < N; ++i) {
        ex[i] = std::polar(1.0, -lat.k1d[i] * Xg[0]);
        ey[i] = std::polar(1.0, -lat.k1d[i] * Xg[1]);
        ez[i] = std::polar(1.0, -lat.k1d[i] * Xg[2]);
    }
    // radial table is cheaper than per-mode pow/exp
    std::map<long, double> cache;
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (size_t iz = 0; iz < nz; ++iz) {
                if (lat.nyquist(ix, iy, static_cast<int>(iz))) continue;
                int mx = ix < N / 2 ? ix : ix - N, my = iy < N / 2 ? iy : iy - N;
                long key = static_cast<long>(mx) * mx + static_cast<long>(my) * my + static_cast<long>(iz * iz);
                auto it = cache.find(key);
                double wr;
                if (it == cache.end()) {
                    wr = scale * w_hat(spec, 2.0 * pi / g.box_length * std::sqrt(static_cast<double>(key)));
                    cache.emplace(key, wr);
                } else {
                    wr = it->second;
                }
                w[(static_cast<size_t>(ix) * N + iy) * nz + iz] = wr * ex[ix] * ey[iy] * ez[iz];
            }
    return w;
}

ModeSymbol mode_symbol(const Vec3& k, const PhysicalParams& params_in) {
    PhysicalParams params = params_in.normalized();
    ModeSymbol m;
    m.k = k;
    const double K = params.dispersion() * dot3(k, k);
    m.h12 = K;
    m.h21 = -(K + params.lambda);
    m.L_k = std::sqrt(K * (K + params.lambda));
    const double s1 = std::sqrt(K), s2 = std::sqrt(K + params.lambda);
    m.a11 = s1;
    m.a12 = s1;
    m.a21 = cplx(0.0, s2);
    m.a22 = cplx(0.0, -s2);
    return m;
}

namespace {

inline cplx phi1(cplx z) {
    // (e^z - 1)/z
    if (std::abs(z) < 1e-4) return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
    return (std::exp(z) - 1.0) / z;
}

} // namespace

void propagate_linear(FieldState& s, double dt, const Vec3& drift, const PhysicalParams& params_in) {
    if (!s.finite()) throw std::runtime_error("propagate_linear: non-finite field");
    PhysicalParams params = params_in.normalized();
    Lattice lat(s.grid);
    const int N = lat.N;
    const size_t nz = lat.nz();
    const double a = params.dispersion(), lam = params.lambda;
    std::vector<cplx> px(N), py(N), pz(N);
    for (int i = 0; i < N; ++i) {
        px[i] = std::polar(1.0, dt * drift[0] * lat.k1d_odd[i]);
        py[i] = std::polar(1.0, dt * drift[1] * lat.k1d_odd[i]);
        pz[i] = std::polar(1.0, dt * drift[2] * lat.k1d_odd[i]);
    }
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (size_t iz = 0; iz < nz; ++iz) {
                size_t idx = (static_cast<size_t>(ix) * N + iy) * nz + iz;
                double k2 = lat.k1d[ix] * lat.k1d[ix] + lat.k1d[iy] * lat.k1d[iy] + lat.k1d[iz] * lat.k1d[iz];
                double K = a * k2;
                cplx u = s.u_hat[idx], v = s.v_hat[idx];
                cplx ph = px[ix] * py[iy] * pz[iz];
                cplx nu, nv;
                if (k2 == 0.0) {
                    nu = u;
                    nv = v - lam * dt * u;
                } else {
                    double L = std::sqrt(K * (K + lam));
                    double c = std::cos(L * dt), sn = std::sin(L * dt) / L;
                    nu = c * u + sn * K * v;
                    nv = c * v - sn * (K + lam) * u;
                }
                s.u_hat[idx] = ph * nu;
                s.v_hat[idx] = ph * nv;
            }
    s.time += dt;
}

void apply_forcing(FieldState& s, const Vec3& X, double dt, const PhysicalParams& params,
                   const PotentialSpec& spec) {
    if (params.rho0 == 0.0) return;
    auto w = w_coefficients(s.grid, spec, grid_position(s, X));
    const double c = -dt * std::sqrt(params.rho0);
    for (size_t i = 0; i < w.size(); ++i) s.v_hat[i] += c * w[i];
}

Vec3 force_on_particle(const FieldState& s, const Vec3& X, const PhysicalParams& params, const PotentialSpec& spec) {
    Vec3 F{0, 0, 0};
    if (params.rho0 == 0.0) return F;
    auto w = w_coefficients(s.grid, spec, grid_position(s, X));
    Lattice lat(s.grid);
    const int N = lat.N;
    const size_t nz = lat.nz();
    double acc[3] = {0, 0, 0};
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (size_t iz = 0; iz < nz; ++iz) {
                size_t idx = (static_cast<size_t>(ix) * N + iy) * nz + iz;
                // Re[(-i k_j) conj(w) u], times the half-spectrum weight
                cplx z = std::conj(w[idx]) * s.u_hat[idx] * lat.weight(static_cast<int>(iz));
                acc[0] += lat.k1d_odd[ix] * z.imag();
                acc[1] += lat.k1d_odd[iy] * z.imag();
                acc[2] += lat.k1d_odd[iz] * z.imag();
            }
    const double N3 = std::pow(static_cast<double>(N), 3);
    const double c = std::sqrt(params.rho0) * std::pow(s.grid.box_length, 3) / (N3 * N3);
    for (int j = 0; j < 3; ++j) F[j] = c * acc[j];
    return F;
}

double hamiltonian(const FieldState& s, const Vec3& X, const Vec3& P, const PhysicalParams& params_in,
                   const PotentialSpec& spec) {
    PhysicalParams params = params_in.normalized();
    Lattice lat(s.grid);
    const int N = lat.N;
    const size_t nz = lat.nz();
    const double a = params.dispersion(), lam = params.lambda;
    std::vector<cplx> w;
    if (params.rho0 != 0.0) w = w_coefficients(s.grid, spec, grid_position(s, X));
    double grad = 0.0, pot = 0.0, cpl = 0.0;
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (size_t iz = 0; iz < nz; ++iz) {
                size_t idx = (static_cast<size_t>(ix) * N + iy) * nz + iz;
                double wt = lat.weight(static_cast<int>(iz));
                double k2 = lat.k1d[ix] * lat.k1d[ix] + lat.k1d[iy] * lat.k1d[iy] + lat.k1d[iz] * lat.k1d[iz];
                double nu = std::norm(s.u_hat[idx]), nv = std::norm(s.v_hat[idx]);
                grad += wt * k2 * (nu + nv);
                pot += wt * nu;
                if (!w.empty()) cpl += wt * (std::conj(w[idx]) * s.u_hat[idx]).real();
            }
    const double N3 = std::pow(static_cast<double>(N), 3);
    const double c = std::pow(s.grid.box_length, 3) / (N3 * N3);
    const double field = 0.5 * c * (a * grad + lam * pot + 2.0 * std::sqrt(params.rho0) * cpl);
    return dot3(P, P) / (2.0 * params.mass_particle) + field;
}

std::vector<double> sponge_profile(const GridSpec& g) {
    const int N = g.points;
    std::vector<double> gam(static_cast<size_t>(N) * N * N, 0.0);
    if (g.sponge_strength == 0.0 || g.sponge_width == 0.0) return gam;
    const double h = g.spacing(), w = g.sponge_width, L = g.box_length;
    std::vector<double> r(N);
    for (int i = 0; i < N; ++i) {
        double x = i * h;
        double d = std::min(x, L - x);
        r[i] = d >= w ? 0.0 : std::pow(std::sin(0.5 * pi * (w - d) / w), 2);
    }
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (int iz = 0; iz < N; ++iz)
                gam[(static_cast<size_t>(ix) * N + iy) * N + iz] =
                    g.sponge_strength * (1.0 - (1.0 - r[ix]) * (1.0 - r[iy]) * (1.0 - r[iz]));
    return gam;
}

void apply_sponge(FieldState& s, double dt, const GridSpec& grid) {
    if (grid.sponge_strength == 0.0 || grid.sponge_width == 0.0) return;
    auto gam = sponge_profile(grid);
    std::vector<double> u, v;
    s.to_real(u, v);
    for (size_t i = 0; i < u.size(); ++i) {
        double f = std::exp(-dt * gam[i]);
        u[i] *= f;
        v[i] *= f;
    }
    auto fft = fft_for(grid.points);
    fft->forward(u.data(), s.u_hat.data());
    fft->forward(v.data(), s.v_hat.data());
}

void translate(FieldState& s, const Vec3& a) {
    Lattice lat(s.grid);
    const int N = lat.N;
    const size_t nz = lat.nz();
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (size_t iz = 0; iz < nz; ++iz) {
                size_t idx = (static_cast<size_t>(ix) * N + iy) * nz + iz;
                double ph = -(lat.k1d_odd[ix] * a[0] + lat.k1d_odd[iy] * a[1] + lat.k1d_odd[iz] * a[2]);
                cplx e = std::polar(1.0, ph);
                s.u_hat[idx] *= e;
                s.v_hat[idx] *= e;
            }
}

double field_l2(const FieldState& s) {
    Lattice lat(s.grid);
    const size_t nz = lat.nz();
    double acc = 0.0;
    for (size_t i = 0; i < s.u_hat.size(); ++i) {
        int iz = static_cast<int>(i % nz);
        acc += lat.weight(iz) * (std::norm(s.u_hat[i]) + std::norm(s.v_hat[i]));
    }
    const double N3 = std::pow(static_cast<double>(lat.N), 3);
    return std::sqrt(acc * std::pow(s.grid.box_length, 3) / (N3 * N3));
}

double interior_l2(const FieldState& s) {
    std::vector<double> u, v;
    s.to_real(u, v);
    auto gam = sponge_profile(s.grid);
    double acc = 0.0;
    for (size_t i = 0; i < u.size(); ++i)
        if (gam[i] == 0.0) acc += u[i] * u[i] + v[i] * v[i];
    return std::sqrt(acc * std::pow(s.grid.spacing(), 3));
}

double weighted_h3_norm(const FieldState& s, const Vec3& center, double eps0) {
    std::vector<double> u, v;
    s.to_real(u, v);
    const int N = s.grid.points;
    const double h = s.grid.spacing(), L = s.grid.box_length;
    auto mi = [L](double d) { return d - L * std::round(d / L); };
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (int iz = 0; iz < N; ++iz) {
                double dx = mi(ix * h - center[0]), dy = mi(iy * h - center[1]), dz = mi(iz * h - center[2]);
                double wgt = std::exp(eps0 * std::sqrt(dx * dx + dy * dy + dz * dz));
                size_t i = (static_cast<size_t>(ix) * N + iy) * N + iz;
                u[i] *= wgt;
                v[i] *= wgt;
            }
    FieldState t = FieldState::from_real(s.grid, u, v);
    Lattice lat(s.grid);
    const size_t nz = lat.nz();
    double acc = 0.0;
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (size_t iz = 0; iz < nz; ++iz) {
                size_t idx = (static_cast<size_t>(ix) * N + iy) * nz + iz;
                double k2 = lat.k1d[ix] * lat.k1d[ix] + lat.k1d[iy] * lat.k1d[iy] + lat.k1d[iz] * lat.k1d[iz];
                acc += lat.weight(static_cast<int>(iz)) * std::pow(1.0 + k2, 3) *
                       (std::norm(t.u_hat[idx]) + std::norm(t.v_hat[idx]));
            }
    const double N3 = std::pow(static_cast<double>(N), 3);
    return std::sqrt(acc * std::pow(L, 3) / (N3 * N3));
}

HypothesisReport check_hypothesis_a(const FieldState& s, const Vec3& center, double eps0, double rho0) {
    HypothesisReport r;
    r.value = weighted_h3_norm(s, center, eps0);
    r.bound = std::sqrt(rho0);
    r.pass = r.value <= r.bound;
    if (!r.pass)
        r.message = "hypothesis (A): weighted norm " + std::to_string(r.value) + " exceeds sqrt(rho0) = " +
                    std::to_string(r.bound);
    return r;
}

Vec3 grid_position(const FieldState& s, const Vec3& X) {
    Vec3 g;
    const double L = s.grid.box_length;
    for (int j = 0; j < 3; ++j) {
        double y = X[j] - s.frame_offset[j];
        g[j] = y - L * std::floor(y / L);
    }
    return g;
}

namespace {
void put(std::ofstream& o, double x) { o.write(reinterpret_cast<const char*>(&x), sizeof(double)); }
double get(std::ifstream& i) {
    double x;
    i.read(reinterpret_cast<char*>(&x), sizeof(double));
    return x;
}
} // namespace

void write_snapshot(const std::string& path, const FieldState& s) {
    static_assert(sizeof(double) == 8);
    std::ofstream o(path, std::ios::binary);
    if (!o) throw std::runtime_error("cannot write " + path);
    std::vector<double> u, v;
    s.to_real(u, v);
    put(o, s.grid.points);
    put(o, s.grid.box_length);
    put(o, s.time);
    put(o, s.comoving ? 1.0 : 0.0);
    for (double x : s.frame_offset) put(o, x);
    o.write(reinterpret_cast<const char*>(u.data()), u.size() * sizeof(double));
    o.write(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

FieldState read_snapshot(const std::string& path) {
    std::ifstream i(path, std::ios::binary);
    if (!i) throw std::runtime_error("cannot read " + path);
    GridSpec g;
    g.points = static_cast<int>(get(i));
    g.box_length = get(i);
    double t = get(i);
    bool com = get(i) != 0.0;
    Vec3 off;
    for (auto& x : off) x = get(i);
    size_t n = static_cast<size_t>(g.points) * g.points * g.points;
    std::vector<double> u(n), v(n);
    i.read(reinterpret_cast<char*>(u.data()), n * sizeof(double));
    i.read(reinterpret_cast<char*>(v.data()), n * sizeof(double));
    if (!i) throw std::runtime_error("truncated snapshot " + path);
    FieldState s = FieldState::from_real(g, u, v);
    s.time = t;
    s.comoving = com;
    s.frame_offset = off;
    return s;
}

void write_slice_csv(const std::string& path, const FieldState& s) {
    std::ofstream o(path);
    if (!o) throw std::runtime_error("cannot write " + path);
    std::vector<double> u, v;
    s.to_real(u, v);
    const int N = s.grid.points;
    const double h = s.grid.spacing();
    o << "x,y,u,v\n";
    o.precision(12);
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy) {
            size_t i = (static_cast<size_t>(ix) * N + iy) * N;
            o << ix * h << ',' << iy * h << ',' << u[i] << ',' << v[i] << '\n';
        }
}

} // namespace cherenkov
