#include "cherenkov/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cherenkov {

Integrator::Integrator(const PhysicalParams& params, const PotentialSpec& spec, const GridSpec& grid, bool sponge)
    : params_(params.normalized()), spec_(spec), grid_(grid), use_sponge_(sponge), lat_(grid) {
    const int N = lat_.N;
    const size_t nz = lat_.nz();
    const size_t m = static_cast<size_t>(N) * N * nz;
    K_.resize(m);
    L_.resize(m);
    const double a = params_.dispersion(), lam = params_.lambda;
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (size_t iz = 0; iz < nz; ++iz) {
                size_t i = (static_cast<size_t>(ix) * N + iy) * nz + iz;
                double k2 = lat_.k1d[ix] * lat_.k1d[ix] + lat_.k1d[iy] * lat_.k1d[iy] + lat_.k1d[iz] * lat_.k1d[iz];
                K_[i] = a * k2;
                L_[i] = std::sqrt(K_[i] * (K_[i] + lam));
            }
    w_ = w_coefficients(grid_, spec_, grid_.center());
}

void Integrator::initialize(const InitialConditions& ic, ParticleState& particle, FieldState& field) const {
    particle.X = ic.X0;
    particle.P = ic.P0;
    particle.t = 0.0;
    field = FieldState::zeros(grid_);
    Vec3 c = grid_.center();
    for (int j = 0; j < 3; ++j) field.frame_offset[j] = ic.X0[j] - c[j];
    if (ic.beta0 == InitialConditions::Beta0::gaussian_packet && ic.amplitude != 0.0) {
        const int N = grid_.points;
        const double h = grid_.spacing(), L = grid_.box_length;
        std::vector<double> u(static_cast<size_t>(N) * N * N), v(u.size(), 0.0);
        auto mi = [L](double d) { return d - L * std::round(d / L); };
        for (int ix = 0; ix < N; ++ix)
            for (int iy = 0; iy < N; ++iy)
                for (int iz = 0; iz < N; ++iz) {
                    double dx = mi(ix * h + field.frame_offset[0] - ic.center[0]);
                    double dy = mi(iy * h + field.frame_offset[1] - ic.center[1]);
                    double dz = mi(iz * h + field.frame_offset[2] - ic.center[2]);
                    u[(static_cast<size_t>(ix) * N + iy) * N + iz] =
                        ic.amplitude * std::exp(-(dx * dx + dy * dy + dz * dz) / (ic.width * ic.width));
                }
        FieldState f = FieldState::from_real(grid_, u, v);
        field.u_hat = std::move(f.u_hat);
        field.v_hat = std::move(f.v_hat);
    }
}

Vec3 Integrator::force(const FieldState& field) const {
    Vec3 F{0, 0, 0};
    if (params_.rho0 == 0.0) return F;
    const int N = lat_.N;
    const size_t nz = lat_.nz();
    double acc[3] = {0, 0, 0};
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy) {
            size_t base = (static_cast<size_t>(ix) * N + iy) * nz;
            double sx = 0, sz = 0;
            for (size_t iz = 0; iz < nz; ++iz) {
                double z = (std::conj(w_[base + iz]) * field.u_hat[base + iz]).imag() * lat_.weight(static_cast<int>(iz));
                sx += z;
                sz += lat_.k1d_odd[iz] * z;
            }
            acc[0] += lat_.k1d_odd[ix] * sx;
            acc[1] += lat_.k1d_odd[iy] * sx;
            acc[2] += sz;
        }
    const double N3 = std::pow(static_cast<double>(N), 3);
    const double c = std::sqrt(params_.rho0) * std::pow(grid_.box_length, 3) / (N3 * N3);
    for (int j = 0; j < 3; ++j) F[j] = c * acc[j];
    return F;
}

double Integrator::energy(const FieldState& s, const Vec3& P) const {
    const size_t nz = lat_.nz();
    double grad = 0.0, pot = 0.0, cpl = 0.0;
    for (size_t i = 0; i < K_.size(); ++i) {
        double wt = lat_.weight(static_cast<int>(i % nz));
        double nu = std::norm(s.u_hat[i]), nv = std::norm(s.v_hat[i]);
        grad += wt * K_[i] * (nu + nv);
        pot += wt * nu;
        cpl += wt * (std::conj(w_[i]) * s.u_hat[i]).real();
    }
    const double N3 = std::pow(static_cast<double>(lat_.N), 3);
    const double c = std::pow(grid_.box_length, 3) / (N3 * N3);
    const double field = 0.5 * c * (grad + params_.lambda * pot + 2.0 * std::sqrt(params_.rho0) * cpl);
    return dot3(P, P) / (2.0 * params_.mass_particle) + field;
}

void Integrator::prepare(double dt) {
    if (dt == cached_dt_ && !cos_.empty()) return;
    cached_dt_ = dt;
    cos_.resize(K_.size());
    sinc_.resize(K_.size());
    eL_.resize(K_.size());
    for (size_t i = 0; i < K_.size(); ++i) {
        double L = L_[i];
        cos_[i] = std::cos(L * dt);
        sinc_[i] = L > 0.0 ? std::sin(L * dt) / L : dt;
        eL_[i] = std::polar(1.0, L * dt);
    }
}

namespace {
inline cplx phi1_i(double theta, cplx e) {
    // (e^{i theta} - 1)/(i theta) with e = e^{i theta}
    if (std::abs(theta) < 1e-2) {
        cplx z(0.0, theta);
        return 1.0 + z * (0.5 + z * (1.0 / 6 + z * (1.0 / 24 + z * (1.0 / 120 + z * (1.0 / 720 + z / 5040.0)))));
    }
    return {e.imag() / theta, (1.0 - e.real()) / theta};
}

inline cplx phi2_i(double theta, cplx e) {
    // (e^{i theta} - 1 - i theta)/(i theta)^2
    if (std::abs(theta) < 1e-2) {
        cplx z(0.0, theta);
        return 0.5 + z * (1.0 / 6 + z * (1.0 / 24 + z * (1.0 / 120 + z * (1.0 / 720 + z / 5040.0))));
    }
    const double t2 = theta * theta;
    return {(1.0 - e.real()) / t2, (theta - e.imag()) / t2};
}
} // namespace

void Integrator::advance_field(FieldState& f, double dt, const Vec3& drift) {
    prepare(dt);
    const int N = lat_.N;
    const size_t nz = lat_.nz();
    const double lam = params_.lambda;
    const double sr = std::sqrt(params_.rho0);
    std::vector<cplx> px(N), py(N), pz(N);
    for (int i = 0; i < N; ++i) {
        px[i] = std::polar(1.0, dt * drift[0] * lat_.k1d_odd[i]);
        py[i] = std::polar(1.0, dt * drift[1] * lat_.k1d_odd[i]);
        pz[i] = std::polar(1.0, dt * drift[2] * lat_.k1d_odd[i]);
    }
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy) {
            size_t base = (static_cast<size_t>(ix) * N + iy) * nz;
            cplx pxy = px[ix] * py[iy];
            double dkxy = drift[0] * lat_.k1d_odd[ix] + drift[1] * lat_.k1d_odd[iy];
            for (size_t iz = 0; iz < nz; ++iz) {
                size_t i = base + iz;
                cplx ph = pxy * pz[iz];
                cplx u = f.u_hat[i], v = f.v_hat[i];
                double K = K_[i];
                cplx nu = ph * (cos_[i] * u + sinc_[i] * K * v);
                cplx nv = ph * (cos_[i] * v - sinc_[i] * (K + lam) * u);
                if (K == 0.0) {
                    // [[0,0],[-lambda,0]] is nilpotent, and W has no k = 0 component
                    nu = u;
                    nv = v - lam * dt * u;
                } else if (sr != 0.0 && w_[i] != 0.0) {
                    const double L = L_[i];
                    const double dk = dkxy + drift[2] * lat_.k1d_odd[iz];
                    cplx s = -sr * w_[i];
                    cplx ep = ph * eL_[i], em = ph * std::conj(eL_[i]);
                    cplx fp = phi1_i(dt * (dk + L), ep), fm = phi1_i(dt * (dk - L), em);
                    nu += dt * cplx(0.0, -K / (2.0 * L)) * s * (fp - fm);
                    nv += dt * 0.5 * s * (fp + fm);
                }
                f.u_hat[i] = nu;
                f.v_hat[i] = nv;
            }
        }
    f.time += dt;
}

Vec3 Integrator::impulse(const FieldState& f, double dt, const Vec3& drift) {
    Vec3 out{0, 0, 0};
    if (params_.rho0 == 0.0) return out;
    prepare(dt);
    const int N = lat_.N;
    const size_t nz = lat_.nz();
    const double sr = std::sqrt(params_.rho0);
    std::vector<cplx> px(N), py(N), pz(N);
    for (int i = 0; i < N; ++i) {
        px[i] = std::polar(1.0, dt * drift[0] * lat_.k1d_odd[i]);
        py[i] = std::polar(1.0, dt * drift[1] * lat_.k1d_odd[i]);
        pz[i] = std::polar(1.0, dt * drift[2] * lat_.k1d_odd[i]);
    }
    // integral of u over the step per mode, paired with the force weights as in force()
    double acc[3] = {0, 0, 0};
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy) {
            size_t base = (static_cast<size_t>(ix) * N + iy) * nz;
            cplx pxy = px[ix] * py[iy];
            double dkxy = drift[0] * lat_.k1d_odd[ix] + drift[1] * lat_.k1d_odd[iy];
            double sx = 0, sz = 0;
            for (size_t iz = 0; iz < nz; ++iz) {
                size_t i = base + iz;
                if (w_[i] == 0.0 || K_[i] == 0.0) continue;
                const double K = K_[i], L = L_[i];
                const double dk = dkxy + drift[2] * lat_.k1d_odd[iz];
                cplx ph = pxy * pz[iz];
                cplx ep = ph * eL_[i], em = ph * std::conj(eL_[i]);
                const double tp = dt * (dk + L), tm = dt * (dk - L);
                cplx a = cplx(0.0, -K / L) * f.v_hat[i];
                cplx U = 0.5 * dt * ((f.u_hat[i] + a) * phi1_i(tp, ep) + (f.u_hat[i] - a) * phi1_i(tm, em));
                U += dt * dt * cplx(0.0, -K / (2.0 * L)) * (-sr * w_[i]) * (phi2_i(tp, ep) - phi2_i(tm, em));
                double z = (std::conj(w_[i]) * U).imag() * lat_.weight(static_cast<int>(iz));
                sx += z;
                sz += lat_.k1d_odd[iz] * z;
            }
            acc[0] += lat_.k1d_odd[ix] * sx;
            acc[1] += lat_.k1d_odd[iy] * sx;
            acc[2] += sz;
        }
    const double N3 = std::pow(static_cast<double>(N), 3);
    const double c = sr * std::pow(grid_.box_length, 3) / (N3 * N3);
    for (int j = 0; j < 3; ++j) out[j] = c * acc[j];
    return out;
}

void Integrator::sponge(FieldState& f, double dt) {
    if (!use_sponge_ || grid_.sponge_strength == 0.0 || grid_.sponge_width == 0.0) return;
    if (damp_.empty() || sponge_dt_ != dt) {
        auto g = sponge_profile(grid_);
        damp_.resize(g.size());
        for (size_t i = 0; i < g.size(); ++i) damp_[i] = std::exp(-dt * g[i]);
        sponge_dt_ = dt;
    }
    std::vector<double> u, v;
    f.to_real(u, v);
    for (size_t i = 0; i < u.size(); ++i) {
        u[i] *= damp_[i];
        v[i] *= damp_[i];
    }
    auto fft = fft_for(grid_.points);
    fft->forward(u.data(), f.u_hat.data());
    fft->forward(v.data(), f.v_hat.data());
}

void Integrator::step(ParticleState& p, FieldState& f, double dt) {
    const double M = params_.mass_particle;
    // implicit midpoint in P: Pm = P + I(Pm/M)/2 with I the exact impulse over the step at frozen velocity.
    // Kinetic gain Pm.I/M then cancels the field work -d.I, and the update is symmetric in dt.
    Vec3 F = force(f);
    Vec3 Pm{p.P[0] + 0.5 * dt * F[0], p.P[1] + 0.5 * dt * F[1], p.P[2] + 0.5 * dt * F[2]};
    Vec3 I{0, 0, 0};
    double last = INFINITY;
    for (int it = 0; it < 30 && params_.rho0 != 0.0; ++it) {
        I = impulse(f, dt, {Pm[0] / M, Pm[1] / M, Pm[2] / M});
        Vec3 next{p.P[0] + 0.5 * I[0], p.P[1] + 0.5 * I[1], p.P[2] + 0.5 * I[2]};
        double change = std::abs(next[0] - Pm[0]) + std::abs(next[1] - Pm[1]) + std::abs(next[2] - Pm[2]);
        Pm = next;
        if (change <= 1e-14 * norm3(Pm) || change >= last) break;
        last = change;
    }
    if (params_.rho0 == 0.0) Pm = p.P;
    Vec3 d{Pm[0] / M, Pm[1] / M, Pm[2] / M};
    advance_field(f, dt, d);
    for (int j = 0; j < 3; ++j) {
        p.X[j] += dt * d[j];
        f.frame_offset[j] += dt * d[j];
        p.P[j] = Pm[j] + 0.5 * I[j];
    }
    p.t += dt;
    sponge(f, dt);
    if (!std::isfinite(p.P[0] + p.P[1] + p.P[2] + p.X[0] + p.X[1] + p.X[2]))
        throw IntegrationFailure("step: non-finite particle state at t = " + std::to_string(p.t));
}

void step(ParticleState& particle, FieldState& field, double dt, Integrator& integ) {
    integ.step(particle, field, dt);
}

void measure_forces(std::vector<TrajectoryRecord>& r) {
    for (size_t i = 0; i < r.size(); ++i) {
        if (i == 0 || i + 1 == r.size()) {
            r[i].force_valid = false;
            r[i].F = {0, 0, 0};
            continue;
        }
        double h = r[i + 1].t - r[i - 1].t;
        for (int j = 0; j < 3; ++j) r[i].F[j] = (r[i + 1].P[j] - r[i - 1].P[j]) / h;
        r[i].force_valid = true;
    }
}

namespace {

double boundary_fraction(const FieldState& f) {
    auto g = sponge_profile(f.grid);
    std::vector<double> u, v;
    f.to_real(u, v);
    double in = 0.0, out = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        double e = u[i] * u[i] + v[i] * v[i];
        (g[i] == 0.0 ? in : out) += e;
    }
    return in > 0.0 ? out / in : 0.0;
}

} // namespace

RunResult run(const InitialConditions& ic, const PhysicalParams& params_in, const PotentialSpec& spec,
              const GridSpec& grid, const RunOptions& opt) {
    PhysicalParams params = params_in.normalized();
    params.validate();
    grid.validate(spec.width);
    if (!(opt.dt > 0.0)) throw std::invalid_argument("run: dt must be positive");
    Integrator integ(params, spec, grid, opt.sponge);
    RunResult res;
    integ.initialize(ic, res.particle, res.field);

    if (!opt.force) {
        auto a = check_hypothesis_a(res.field, grid.center(), opt.eps0, params.rho0);
        if (!a.pass) throw HypothesisRejected(a.message);
        if (opt.supersonic) {
            auto b = check_hypothesis_b(ic.P0, params);
            if (!b.pass) throw HypothesisRejected(b.message);
        }
    }
    // phase per step bound for the splitting
    double kmax = std::sqrt(3.0) * std::numbers::pi * grid.points / grid.box_length;
    if (opt.dt * kmax * (1.0 + kmax) > 2.0 * std::numbers::pi * 4.0)
        throw std::invalid_argument("run: dt too large for the grid");

    const long nsteps = std::lround(opt.horizon / opt.dt);
    const double p0n = norm3(ic.P0);
    auto record = [&](const ParticleState& p, const FieldState& f) {
        TrajectoryRecord r;
        r.t = p.t;
        r.X = p.X;
        r.P = p.P;
        r.speed = norm3(p.P) / params.mass_particle;
        r.energy = integ.energy(f, p.P);
        r.field_l2 = field_l2(f);
        res.records.push_back(r);
        if (opt.observer) opt.observer(r, p, f);
        double pn = norm3(p.P);
        if (p0n > 0.0 && pn > 0.0) {
            Vec3 d{p.P[0] / pn - ic.P0[0] / p0n, p.P[1] / pn - ic.P0[1] / p0n, p.P[2] / pn - ic.P0[2] / p0n};
            res.max_direction_dev = std::max(res.max_direction_dev, norm3(d));
        }
    };
    record(res.particle, res.field);
    const long check_every = std::max<long>(1, nsteps / 10);
    for (long s = 1; s <= nsteps; ++s) {
        integ.step(res.particle, res.field, opt.dt);
        if (s % opt.stride == 0 || s == nsteps) {
            if (!res.field.finite()) throw IntegrationFailure("run: non-finite field at t = " + std::to_string(res.particle.t));
            record(res.particle, res.field);
        }
        if (opt.sponge && grid.sponge_strength > 0.0 && s % check_every == 0 && !res.sponge_warning)
            res.sponge_warning = boundary_fraction(res.field) > 0.01;
    }
    measure_forces(res.records);
    return res;
}

TravelingWave traveling_wave(const Vec3& P_inf, const PhysicalParams& params_in, const PotentialSpec& spec,
                             const GridSpec& grid) {
    PhysicalParams params = params_in.normalized();
    const double vs = params.speed_of_sound();
    const double v = norm3(P_inf) / params.mass_particle;
    if (std::abs(v - vs) > 1e-12 * vs) throw std::domain_error("traveling_wave: |P_inf|/M must equal the speed of sound");
    TravelingWave tw;
    tw.P_inf = P_inf;
    tw.beta_inf = FieldState::zeros(grid);
    if (params.rho0 == 0.0) return tw;
    Lattice lat(grid);
    auto w = w_coefficients(grid, spec, grid.center());
    const int N = lat.N;
    const size_t nz = lat.nz();
    const double a = params.dispersion(), lam = params.lambda, sr = std::sqrt(params.rho0);
    const Vec3 d{P_inf[0] / params.mass_particle, P_inf[1] / params.mass_particle, P_inf[2] / params.mass_particle};
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (size_t iz = 0; iz < nz; ++iz) {
                size_t i = (static_cast<size_t>(ix) * N + iy) * nz + iz;
                double k2 = lat.k1d[ix] * lat.k1d[ix] + lat.k1d[iy] * lat.k1d[iy] + lat.k1d[iz] * lat.k1d[iz];
                double K = a * k2;
                double dk = d[0] * lat.k1d_odd[ix] + d[1] * lat.k1d_odd[iy] + d[2] * lat.k1d_odd[iz];
                // [[i dk, K], [-(K+lambda), i dk]] h = sqrt(rho0) (0, w)
                double det = K * (K + lam) - dk * dk;
                cplx r = sr * w[i];
                double inv;
                if (std::abs(det) < 1e-8 * (1.0 + k2 * k2)) {
                    // principal value: Re 1/(det + i delta)
                    const double delta = 1e-8;
                    inv = det / (det * det + delta * delta);
                    ++tw.regularized_modes;
                } else {
                    inv = 1.0 / det;
                }
                tw.beta_inf.u_hat[i] = -K * r * inv;
                tw.beta_inf.v_hat[i] = cplx(0.0, dk) * r * inv;
            }
    return tw;
}

double compare_to_traveling_wave(const FieldState& field, const ParticleState& particle, const TravelingWave& wave) {
    FieldState w = wave.beta_inf;
    Vec3 xf = grid_position(field, particle.X);
    Vec3 c = wave.beta_inf.grid.center();
    translate(w, {xf[0] - c[0], xf[1] - c[1], xf[2] - c[2]});
    std::vector<double> u, v, wu, wv;
    field.to_real(u, v);
    w.to_real(wu, wv);
    auto g = sponge_profile(field.grid);
    double m = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        if (g[i] != 0.0) continue;
        double du = u[i] - wu[i], dv = v[i] - wv[i];
        m = std::max(m, std::sqrt(du * du + dv * dv));
    }
    return m;
}

double stationary_residual(const TravelingWave& wave, const PhysicalParams& params, const PotentialSpec& spec,
                           double dt) {
    Integrator integ(params, spec, wave.beta_inf.grid, false);
    FieldState f = wave.beta_inf;
    PhysicalParams pn = params.normalized();
    Vec3 d{wave.P_inf[0] / pn.mass_particle, wave.P_inf[1] / pn.mass_particle, wave.P_inf[2] / pn.mass_particle};
    integ.advance_field(f, dt, d);
    for (size_t i = 0; i < f.u_hat.size(); ++i) {
        f.u_hat[i] -= wave.beta_inf.u_hat[i];
        f.v_hat[i] -= wave.beta_inf.v_hat[i];
    }
    return interior_l2(f) / dt;
}

} // namespace cherenkov
