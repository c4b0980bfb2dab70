#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "cherenkov/model.hpp"
#include "cherenkov/numerics.hpp"

namespace cherenkov {

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class FrictionMethod { delta_surface, epsilon_regularized };
const char* method_name(FrictionMethod m);

struct FrictionSample {
    double p = 0.0;
    double d1_tilde = 0.0;
    double lambda_factor = 0.0;
    FrictionMethod method = FrictionMethod::delta_surface;
    double abs_err_est = 0.0;
};

struct LimitResult {
    double value = 0.0;
    double err_est = 0.0;
    std::vector<double> ladder_values;
};

const std::vector<double>& default_eps_ladder();

// Im int_0^inf f(r) / (r - 1 + i eps) dr, extrapolated eps -> 0
LimitResult fgr_identity_check(const std::function<double(double)>& f, const std::vector<double>& eps_ladder,
                               double rho_max = 12.0, double tol = 1e-6);

FrictionSample d1_tilde(double p, const PhysicalParams& params, const PotentialSpec& spec,
                        FrictionMethod method = FrictionMethod::delta_surface);

// the eps-regularized double integral at a single eps (no extrapolation)
double d1_tilde_eps(double p, double eps, const PotentialSpec& spec);

Vec3 d1_vector(const Vec3& P, const PhysicalParams& params, const PotentialSpec& spec);

DecayFit threshold_exponent(const PhysicalParams& params, const PotentialSpec& spec,
                            const std::vector<double>& p_grid);

// tabulated Lambda(p) on a log grid of p - 1, spline in (log(p-1), log Lambda)
class LambdaTable {
public:
    LambdaTable(const PotentialSpec& spec, double q_min, double q_max, int points = 64);
    ~LambdaTable();
    LambdaTable(const LambdaTable&) = delete;
    LambdaTable& operator=(const LambdaTable&) = delete;
    double operator()(double p) const;
    double min_value() const;
    double max_value() const;
    const std::vector<double>& log_q() const { return lq_; }
    const std::vector<double>& log_lambda() const { return ll_; }

private:
    std::vector<double> lq_, ll_;
    void* spline_ = nullptr;
    double lam0_ = 0.0; // limit p -> 1+
};

struct EffectiveSample {
    double t;
    Vec3 P;
    double speed() const { return norm3(P); }
};

struct EffectiveTrajectory {
    std::vector<EffectiveSample> samples;
    double n_exponent = 0.75;
    double rho0 = 0.0;
    bool threshold_reached = false;
    double lambda_min = 0.0, lambda_max = 0.0; // over the traversed speed range
};

// dP/dt = d1_vector(P); output at `samples` log-spaced times in [t_first, horizon] plus t = 0
EffectiveTrajectory integrate_effective(const Vec3& P0, double rho0, double n, double horizon,
                                        const PotentialSpec& spec = PotentialSpec::gaussian(1.0),
                                        int samples = 400, double t_first = 1e-2);

struct SandwichReport {
    double c0 = 0.0;          // fitted lower constant for Lambda
    double c0_lo = 0.0, c0_hi = 0.0; // admissible interval for c0
    double psi = 0.0;
    int violations = 0;
    int checked = 0;
    bool pass = false;
};

// checks [(q0)^{-(1+2n)} + c rho0 Psi t]^{-1/(1+2n)} with c = 3 (below) and c = 1 (above)
SandwichReport check_sandwich(const EffectiveTrajectory& tr);

struct TrajectoryRecord;

struct PdeFgrReport {
    bool defined = false;
    double median = 0.0;
    double max = 0.0;
    int count = 0;
    std::vector<double> t, ratio;
};

PdeFgrReport compare_pde_to_fgr(const std::vector<TrajectoryRecord>& run, const PhysicalParams& params,
                                const PotentialSpec& spec, double t_transient = 5.0);

} // namespace cherenkov
