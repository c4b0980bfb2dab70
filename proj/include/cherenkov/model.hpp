#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cherenkov {

using Vec3 = std::array<double, 3>;

struct InvalidSpec : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PhysicalParams {
    double mass_gas = 0.5;      // m
    double mass_particle = 1.0; // M
    double lambda = 1.0;
    double rho0 = 0.01;
    double n_exponent = 0.75;
    bool rescaled = true;

    // throws InvalidSpec on out-of-range values; rescaled forces 2m = M = lambda = 1
    void validate() const;
    PhysicalParams normalized() const;
    double speed_of_sound() const;
    // 1/(2m), the coefficient of -Laplacian in the field symbol
    double dispersion() const { return 1.0 / (2.0 * mass_gas); }
};

enum class Profile { gaussian, custom };

struct PotentialSpec {
    Profile profile = Profile::gaussian;
    double width = 1.0;
    double n_exponent = 0.75;
    double decay_rate = 0.5; // eps0 in the weighted norm of hypothesis (A)
    bool rescaled = true;    // |Vhat(0)| = 1
    double amplitude = 1.0;  // multiplies Vhat; 0 switches the coupling off entirely
    // custom: samples of Vhat(k) on increasing k, monotone (Steffen) cubic, zero past the last node
    std::vector<double> k_samples;
    std::vector<double> vhat_samples;

    static PotentialSpec gaussian(double w, double n = 0.75);
    static PotentialSpec custom(std::vector<double> k, std::vector<double> v, double n = 0.75);
};

double v_hat(const PotentialSpec& spec, double k);
double w_hat(const PotentialSpec& spec, double k);

// real-space V(r) for the gaussian profile, consistent with v_hat under the unitary transform
double v_real(const PotentialSpec& spec, double r);

struct FgrReport {
    bool pass = true;
    int zero_count = 0;        // isolated zeros (sign changes or touch points)
    int sign_changes = 0;
    double longest_zero_run = 0.0;
    double tail_start = -1.0; // where |Vhat| stays below tolerance up to k_max, -1 if never
    std::vector<std::pair<double, double>> zero_intervals;
};

FgrReport check_fgr_condition(const PotentialSpec& spec, double k_max, int samples);

struct HypothesisReport {
    bool pass = false;
    double value = 0.0;
    double bound = 0.0;
    std::string message;
};

// (B): 1.1 v_s <= |P0|/M <= 10 v_s, both ends inclusive
HypothesisReport check_hypothesis_b(const Vec3& P0, const PhysicalParams& params);

inline double norm3(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }
inline double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

} // namespace cherenkov
