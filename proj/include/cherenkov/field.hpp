#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "cherenkov/model.hpp"
#include "cherenkov/numerics.hpp"

namespace cherenkov {

// Periodic box [0, L)^3 with N points per axis, x_j = j L / N.
// Fourier data is the unnormalized r2c DFT in FFTW order: index (ix*N + iy)*(N/2+1) + iz,
// wavenumber 2 pi / L * (i < N/2 ? i : i - N); the inverse carries 1/N^3.
// Nyquist planes enter |k|^2 but not odd symbols (gradients, drift phases, translations),
// and the potential W is band-limited to exclude them.
struct GridSpec {
    double box_length = 32.0;
    int points = 64;
    double sponge_width = 0.0;
    double sponge_strength = 0.0;

    void validate(double potential_width) const;
    double spacing() const { return box_length / points; }
    Vec3 center() const { return {box_length / 2, box_length / 2, box_length / 2}; }
};

class Fft {
public:
    explicit Fft(int n);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;
    void forward(const double* in, cplx* out);
    void backward(const cplx* in, double* out); // unnormalized
    int n() const { return n_; }
    size_t real_size() const { return static_cast<size_t>(n_) * n_ * n_; }
    size_t modes() const { return static_cast<size_t>(n_) * n_ * (n_ / 2 + 1); }

private:
    int n_;
    double* rbuf_;
    void* cbuf_;
    void* fwd_;
    void* bwd_;
};

std::shared_ptr<Fft> fft_for(int n);
void set_fft_threads(int n);

struct FieldState {
    GridSpec grid;
    std::vector<cplx> u_hat, v_hat; // Re beta, Im beta
    bool comoving = true;
    Vec3 frame_offset{0, 0, 0}; // lab position of grid point y is y + frame_offset
    double time = 0.0;

    static FieldState zeros(const GridSpec& g);
    static FieldState from_real(const GridSpec& g, const std::vector<double>& u, const std::vector<double>& v);
    void to_real(std::vector<double>& u, std::vector<double>& v) const;
    size_t modes() const { return u_hat.size(); }
    bool finite() const;
};

// per-grid wavenumber tables
struct Lattice {
    int N;
    double L;
    std::vector<double> k1d;     // wavenumber per index, full value
    std::vector<double> k1d_odd; // same with Nyquist set to 0
    explicit Lattice(const GridSpec& g);
    size_t nz() const { return N / 2 + 1; }
    bool nyquist(int ix, int iy, int iz) const { return ix == N / 2 || iy == N / 2 || iz == N / 2; }
    // weight of a half-spectrum mode in a full-spectrum sum
    double weight(int iz) const { return (iz == 0 || iz == N / 2) ? 1.0 : 2.0; }
};

// DFT coefficients of W(x - Xg) sampled on the grid (unnormalized, like Fft::forward)
std::vector<cplx> w_coefficients(const GridSpec& g, const PotentialSpec& spec, const Vec3& Xg);

// per-mode symbol of H0 in general units: [[0, aK], [-(aK+lambda), 0]], a = 1/(2m)
struct ModeSymbol {
    Vec3 k;
    double L_k;
    double h12, h21; // off-diagonal entries of the H0 symbol
    // diagonalizer columns: eigenvectors of +iL and -iL
    cplx a11, a12, a21, a22;
};
ModeSymbol mode_symbol(const Vec3& k, const PhysicalParams& params);

void propagate_linear(FieldState& s, double dt, const Vec3& drift, const PhysicalParams& params);
// h += dt * (0, -sqrt(rho0) W^X)
void apply_forcing(FieldState& s, const Vec3& X, double dt, const PhysicalParams& params, const PotentialSpec& spec);
Vec3 force_on_particle(const FieldState& s, const Vec3& X, const PhysicalParams& params, const PotentialSpec& spec);
double hamiltonian(const FieldState& s, const Vec3& X, const Vec3& P, const PhysicalParams& params,
                   const PotentialSpec& spec);
void apply_sponge(FieldState& s, double dt, const GridSpec& grid);

// damping rate gamma(y) on the grid, row-major real layout
std::vector<double> sponge_profile(const GridSpec& grid);

// shift the field by a (new(y) = old(y - a))
void translate(FieldState& s, const Vec3& a);

double field_l2(const FieldState& s);
// interior L2 norm of (u, v): points where the sponge rate vanishes
double interior_l2(const FieldState& s);

// weighted H^3-type norm of exp(eps0 |y - center|) beta, distances by minimum image
double weighted_h3_norm(const FieldState& s, const Vec3& center, double eps0);
HypothesisReport check_hypothesis_a(const FieldState& s, const Vec3& center, double eps0, double rho0);

// flat little-endian f64: N, L, time, frame flag, offset xyz, then u and v in real space
void write_snapshot(const std::string& path, const FieldState& s);
FieldState read_snapshot(const std::string& path);
void write_slice_csv(const std::string& path, const FieldState& s);

// grid coordinates of the particle
Vec3 grid_position(const FieldState& s, const Vec3& X);

} // namespace cherenkov
