#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cherenkov/field.hpp"
#include "cherenkov/model.hpp"

namespace cherenkov {

struct IntegrationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParticleState {
    Vec3 X{0, 0, 0};
    Vec3 P{0, 0, 0};
    double t = 0.0;
};

struct TrajectoryRecord {
    double t = 0.0;
    Vec3 X{}, P{};
    double speed = 0.0;
    double energy = 0.0;
    Vec3 F{}; // dP/dt by centered differences of the recorded P
    bool force_valid = false;
    double field_l2 = 0.0;
};

struct InitialConditions {
    enum class Beta0 { vacuum, gaussian_packet } beta0 = Beta0::vacuum;
    double amplitude = 0.0;
    double width = 1.0;
    Vec3 center{0, 0, 0}; // lab coordinates
    Vec3 P0{1.5, 0, 0};
    Vec3 X0{0, 0, 0};
};

// Symmetric second-order integrator in the frame that moves with the particle; the particle
// sits at the grid center and the frame offset carries its lab position. Each step freezes the
// velocity at the midpoint momentum, moves field and particle exactly, and kicks P by the exact
// impulse of that flow, so the discrete energy is conserved up to the midpoint solve.
class Integrator {
public:
    Integrator(const PhysicalParams& params, const PotentialSpec& spec, const GridSpec& grid, bool sponge = true);

    // field and particle consistent with the comoving layout
    void initialize(const InitialConditions& ic, ParticleState& particle, FieldState& field) const;

    Vec3 force(const FieldState& field) const;
    double energy(const FieldState& field, const Vec3& P) const;
    // exact flow of h' = (H0 + drift . grad) h - sqrt(rho0) (0, W) over dt
    void advance_field(FieldState& field, double dt, const Vec3& drift);
    // time integral of the force over that same flow
    Vec3 impulse(const FieldState& field, double dt, const Vec3& drift);
    void sponge(FieldState& field, double dt);
    void step(ParticleState& particle, FieldState& field, double dt);

    const PhysicalParams& params() const { return params_; }
    const PotentialSpec& spec() const { return spec_; }
    const GridSpec& grid() const { return grid_; }
    const std::vector<cplx>& w() const { return w_; }
    Vec3 particle_grid_position() const { return grid_.center(); }

private:
    PhysicalParams params_;
    PotentialSpec spec_;
    GridSpec grid_;
    bool use_sponge_;
    Lattice lat_;
    std::vector<double> K_, L_;
    std::vector<cplx> w_;
    double cached_dt_ = 0.0;
    std::vector<double> cos_, sinc_;
    std::vector<cplx> eL_;
    double sponge_dt_ = 0.0;
    std::vector<double> damp_;
    void prepare(double dt);
};

void step(ParticleState& particle, FieldState& field, double dt, Integrator& integ);

struct RunOptions {
    double horizon = 50.0;
    double dt = 0.01;
    int stride = 10;
    bool sponge = true;
    bool supersonic = false;  // enforce hypothesis (B)
    bool force = false;       // skip hypothesis checks
    double eps0 = 0.5;
    // called after every stored record with the particle and field at that time
    std::function<void(const TrajectoryRecord&, const ParticleState&, const FieldState&)> observer;
};

struct RunResult {
    std::vector<TrajectoryRecord> records;
    ParticleState particle;
    FieldState field;
    bool sponge_warning = false;
    double max_direction_dev = 0.0;
};

struct HypothesisRejected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

RunResult run(const InitialConditions& ic, const PhysicalParams& params, const PotentialSpec& spec,
              const GridSpec& grid, const RunOptions& opt);

// fills F by centered differences of P
void measure_forces(std::vector<TrajectoryRecord>& recs);

struct TravelingWave {
    FieldState beta_inf; // comoving layout, particle at the grid center
    Vec3 P_inf{1, 0, 0};
    int regularized_modes = 0;
};

TravelingWave traveling_wave(const Vec3& P_inf, const PhysicalParams& params, const PotentialSpec& spec,
                             const GridSpec& grid);

// sup over the sponge-free interior of |beta - beta_inf(. - X_t)|
double compare_to_traveling_wave(const FieldState& field, const ParticleState& particle, const TravelingWave& wave);

// interior L2 change per unit time after one exact comoving step of length dt
double stationary_residual(const TravelingWave& wave, const PhysicalParams& params, const PotentialSpec& spec,
                           double dt);

} // namespace cherenkov
