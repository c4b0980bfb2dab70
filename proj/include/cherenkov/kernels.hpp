#pragma once

#include <array>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cherenkov/model.hpp"
#include "cherenkov/numerics.hpp"

namespace cherenkov {

using CVec3 = std::array<cplx, 3>;

constexpr double kPi = 3.14159265358979323846;

// Kernels are written in rescaled units and need V-hat analytic in a strip, so only the
// gaussian profile is accepted (amplitude 0 is allowed and gives identically zero kernels).
cplx v_hat_analytic(const PotentialSpec& spec, cplx k);

// psi(z) = sqrt(1+z^2) + z^2/sqrt(1+z^2), the group velocity of L at |k| = z
double psi_speed(double z);
double psi_speed_derivative(double z);
// root z >= 0 of psi(z) = q for q >= 1 (0 for q <= 1)
double solve_psi(double q);

enum class Zeta0Reading { q1_components, q2_norm };

struct CriticalPointData {
    double sigma = 0.0;
    bool present = false; // sigma > 1
    double zeta = 0.0;
    double zeta0 = 0.0;
    double eta = 0.0;
    double R = 0.0;
};

// zeta from sigma, zeta0 from q_norm (the right-hand side chosen by the caller)
CriticalPointData critical_points(double sigma, double q_norm);

// Q2 along e1 with sigma = |Q2|, Q1 = (a, b, 0) with b >= 0
struct CanonicalFrame {
    double sigma = 0.0, a = 0.0, b = 0.0;
};
CanonicalFrame canonical_frame(const Vec3& Q1, const Vec3& Q2);
CriticalPointData critical_points(const CanonicalFrame& f, Zeta0Reading reading = Zeta0Reading::q1_components);

enum class KernelMethod { automatic, contour, regularized };
const char* kernel_method_name(KernelMethod m);

struct KernelQuery {
    Vec3 Q1{2, 0, 0};
    Vec3 Q2{2, 0, 0};
    double tau = 0.0;
    double n_exponent = 0.75;
    KernelMethod method = KernelMethod::automatic;
    double gamma = kPi / 12;
    std::vector<double> eps_ladder{4e-3, 2e-3, 1e-3, 5e-4};
    PotentialSpec spec = PotentialSpec::gaussian(1.0);
    double tol = 1e-9; // relative to the scale of the integrand
};

struct KernelResult {
    cplx value{};
    KernelMethod method = KernelMethod::contour;
    double err_est = 0.0;
    bool converged = false;
    double cross_check = -1.0; // relative difference between methods in the overlap band, -1 if not run
    bool regime_warning = false;
};

// |Q2| below this uses the contour, above it the regularized real-axis evaluation
double sonic_threshold(double tau);

KernelResult kernel_F(const KernelQuery& q);
KernelResult kernel_F_contour(const CanonicalFrame& f, const KernelQuery& q);
KernelResult kernel_F_regularized(const CanonicalFrame& f, const KernelQuery& q);
// one rung of the regularized evaluation at fixed eps
cplx kernel_F_at_eps(const CanonicalFrame& f, const KernelQuery& q, double eps, double* err = nullptr,
                     bool* converged = nullptr);

// scale used to turn relative tolerances into absolute ones
double kernel_scale(double n, const PotentialSpec& spec);

using QFamily = std::function<std::pair<Vec3, Vec3>(double tau)>;

struct DecayReport {
    DecayFit fit;
    std::vector<double> tau;
    std::vector<cplx> values;
    std::vector<KernelMethod> methods;
    std::vector<double> errs;
    std::vector<bool> converged;
    std::vector<std::pair<Vec3, Vec3>> q;
};

DecayReport decay_fit_F(const QFamily& family, const std::vector<double>& tau_grid, const KernelQuery& base,
                        int threads = 1);

struct DemoResult {
    double p = 0.0;
    double n = 0.0;
    std::vector<double> eta;
    std::vector<cplx> f, f_tilde;
    DecayFit fit_f, fit_f_tilde;
    double rho_star = -1.0;          // stationary point of rho (sqrt(1+rho^2) - p), -1 if none
    double phase_second_derivative = 0.0;
};

// f~_p(eta) = int rho^{4n+4} e^{-i eta rho (sqrt(1+rho^2) - p)} H(rho) drho, H = Vhat^2 / sqrt(1+rho^2)
cplx demo_f_tilde(double p, double eta, double n, const PotentialSpec& spec);
// f_p(eta) = 2 int rho^{4n+5} e^{-i eta rho sqrt(1+rho^2)} j0(p eta rho) H(rho) drho
cplx demo_f(double p, double eta, double n, const PotentialSpec& spec);
DemoResult demo_f_p(double p, const std::vector<double>& eta_grid, double n, const PotentialSpec& spec);

// <(grad W, 0), U(t, s) (0, W)> for the free flow with constant drift Q
CVec3 propagator_pairing(double t, double s, const Vec3& Q, const PotentialSpec& spec, double n);
// the radial integral behind it: 4 pi int rho^{4n+5} Vhat^2 sin(tau L)/L j1(tau q rho) drho
double pairing_radial(double tau, double q, const PotentialSpec& spec, double n);

// Psi_2(t) with f = 1 in the angular weight; |P_inf| must be 1
cplx psi2_kernel(double t, const Vec3& mu, const Vec3& P_inf, const PotentialSpec& spec);

struct GBoundReport {
    double a = 0.0, b = 0.0, zeta0 = 0.0, R = 0.0;
    int samples = 0;
    double max_scaled = 0.0;       // max |G^-2| zeta0^4 over the sampled box
    double corner_minus_g = 0.0;   // min over alpha of -G(6 zeta0/5, R, alpha)
    double corner_lower_bound = 0.0; // zeta0^2 / (2 sqrt(1 + zeta0^2))
    bool pass = false;
};

// G = sqrt(1+rho^2) - a cos(theta) - b sin(theta) cos(alpha) on [0, 6 zeta0/5] x [0, R] x [0, 2 pi]
GBoundReport g_bound_spot_check(double a, double b, double zeta0, int samples);

// -Im tau Y_sigma on the rotated ray rho = tau^{-1/3} r e^{-i gamma}, theta = tau^{-1/3} beta
double contour_phase_margin(double tau, double sigma, double gamma, double r, double beta);

struct PhaseSample {
    double tau, sigma, gamma, r, beta;
};
std::vector<PhaseSample> sample_phase_points(std::mt19937_64& rng, int count);

struct PhaseBoundFit {
    double c0 = 0.0, c1 = 0.0;
    int samples = 0;
    bool ok = false;
};
PhaseBoundFit fit_phase_bound(const std::vector<PhaseSample>& pts);
// number of samples violating -Im tau Y >= c0 (min(r^2, r^3) + r beta^2) - c1 r
int phase_bound_violations(const PhaseBoundFit& fit, const std::vector<PhaseSample>& pts);

} // namespace cherenkov
