#include "cherenkov/friction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_odeiv2.h>
#include <gsl/gsl_spline.h>

#include "cherenkov/dynamics.hpp"

namespace cherenkov {

using std::numbers::pi;

const char* method_name(FrictionMethod m) {
    return m == FrictionMethod::delta_surface ? "delta_surface" : "epsilon_regularized";
}

const std::vector<double>& default_eps_ladder() {
    static const std::vector<double> e{1e-2, 5e-3, 2.5e-3, 1.25e-3};
    return e;
}

LimitResult fgr_identity_check(const std::function<double(double)>& f, const std::vector<double>& eps_ladder,
                               double rho_max, double tol) {
    if (eps_ladder.size() < 4) throw std::invalid_argument("fgr_identity_check: need at least 4 rungs");
    LimitResult out;
    for (double eps : eps_ladder) {
        // r = 1 + eps tan(phi) turns the Lorentzian weight into d(phi)
        auto g = [&](double phi) { return -f(1.0 + eps * std::tan(phi)); };
        double a = std::atan(-1.0 / eps), b = std::atan((rho_max - 1.0) / eps);
        out.ladder_values.push_back(gk_real(g, a, b, 1e-13));
    }
    auto [lim, err] = richardson(eps_ladder, out.ladder_values);
    out.value = lim;
    out.err_est = err;
    if (!(err <= tol * std::max(1.0, std::abs(lim))))
        throw NumericalFailure("fgr_identity_check: extrapolation residual " + std::to_string(err));
    return out;
}

namespace {

double vhat2(const PotentialSpec& spec, double r) {
    double v = v_hat(spec, r);
    return v * v;
}

// D1~(p) = -(2 pi^2 / p^2) int_0^{sqrt(p^2-1)} rho^{3+4n} Vhat(rho)^2 d rho.
// From the polar resonance integral: Im[g - p + i0]^{-1} = -pi delta(g - p) with
// g = sqrt(1+rho^2)/cos(theta); in c = cos(theta) the root is c* = sqrt(1+rho^2)/p and
// |dg/dc| = sqrt(1+rho^2)/c*^2, so the theta integral leaves sqrt(1+rho^2)/p^2, which
// cancels the 1/sqrt(1+rho^2) of the measure. c* <= 1 bounds rho by sqrt(p^2-1).
FrictionSample delta_surface(double p, const PotentialSpec& spec) {
    FrictionSample s;
    s.p = p;
    s.method = FrictionMethod::delta_surface;
    if (p <= 1.0) return s;
    const double q = p - 1.0;
    const double rmax = std::sqrt(q * (2.0 + q));
    const double a = 3.0 + 4.0 * spec.n_exponent;
    double err = 0.0, integral;
    if (q < 1e-3) {
        // rho = rmax * s keeps the integrand O(1) near threshold
        auto g = [&](double x) { return std::pow(x, a) * vhat2(spec, rmax * x); };
        integral = std::pow(rmax, a + 1.0) * gk_real(g, 0.0, 1.0, 1e-12, &err);
        err *= std::pow(rmax, a + 1.0);
    } else {
        auto g = [&](double r) { return std::pow(r, a) * vhat2(spec, r); };
        integral = gk_real(g, 0.0, rmax, 1e-12, &err);
    }
    const double pref = 2.0 * pi * pi / (p * p);
    s.d1_tilde = -pref * integral;
    s.abs_err_est = pref * std::abs(err) * std::max(1.0, std::abs(integral));
    s.lambda_factor = std::abs(s.d1_tilde) / std::pow(q, 2.0 + 2.0 * spec.n_exponent);
    return s;
}

} // namespace

double d1_tilde_eps(double p, double eps, const PotentialSpec& spec) {
    const double a = 3.0 + 4.0 * spec.n_exponent;
    // inner theta integral: with y = sqrt(1+rho^2)/cos(theta), sin(theta) d(theta) = s/y^2 dy,
    // and y = p + eps tan(phi) flattens the Lorentzian
    auto inner = [&](double rho) {
        const double s = std::sqrt(1.0 + rho * rho);
        auto h = [&](double phi) {
            double y = p + eps * std::tan(phi);
            return -s / (y * y);
        };
        double lo = std::atan((s - p) / eps);
        // the integrand turns over within eps/p of pi/2
        double knee = 0.5 * pi - std::min(0.5, 4.0 * eps / p);
        return qag(h, lo, 0.5 * pi, 0.0, 1e-13, 200, {knee}).value.real();
    };
    auto outer = [&](double rho) {
        const double s = std::sqrt(1.0 + rho * rho);
        return std::pow(rho, a) * vhat2(spec, rho) / s * inner(rho);
    };
    const double cut = 14.0 / std::max(spec.width, 1e-3);
    std::vector<double> br;
    if (p > 1.0) {
        double rm = std::sqrt((p - 1.0) * (p + 1.0));
        double d = std::min(0.5 * rm, 30.0 * eps * p / rm);
        br = {rm - d, rm, rm + d};
    }
    double scale = 0.0;
    for (double r : logspace(1e-2, cut, 200)) scale = std::max(scale, std::abs(outer(r)));
    double total = qag(outer, 0.0, cut, 1e-13 * scale, 1e-11, 2000, br).value.real();
    return 2.0 * pi * total;
}

FrictionSample d1_tilde(double p, const PhysicalParams& params, const PotentialSpec& spec, FrictionMethod method) {
    (void)params;
    if (!(p > 0.0)) throw std::invalid_argument("d1_tilde: p must be positive");
    if (method == FrictionMethod::delta_surface) return delta_surface(p, spec);

    FrictionSample s;
    s.p = p;
    s.method = FrictionMethod::epsilon_regularized;
    const auto& ladder = default_eps_ladder();
    std::vector<double> vals;
    for (double e : ladder) vals.push_back(d1_tilde_eps(p, e, spec));
    auto [lim, err] = richardson(ladder, vals);
    s.d1_tilde = lim;
    s.abs_err_est = err;
    if (p > 1.0) s.lambda_factor = std::abs(lim) / std::pow(p - 1.0, 2.0 + 2.0 * spec.n_exponent);
    return s;
}

Vec3 d1_vector(const Vec3& P, const PhysicalParams& params, const PotentialSpec& spec) {
    const double p = norm3(P);
    if (p == 0.0) throw std::domain_error("d1_vector: |P| = 0");
    const double d = params.rho0 * d1_tilde(p, params, spec).d1_tilde / p;
    return {d * P[0], d * P[1], d * P[2]};
}

DecayFit threshold_exponent(const PhysicalParams& params, const PotentialSpec& spec,
                            const std::vector<double>& p_grid) {
    std::vector<double> x, y;
    for (double p : p_grid) {
        if (p <= 1.0) continue;
        auto s = d1_tilde(p, params, spec);
        if (s.d1_tilde != 0.0 && std::isfinite(s.d1_tilde)) {
            x.push_back(p - 1.0);
            y.push_back(s.d1_tilde);
        }
    }
    DecayFit f = fit_loglog(x, y);
    if (f.points < 4) {
        f.ok = false;
        f.note = "degenerate fit: fewer than 4 usable points";
    }
    return f;
}

LambdaTable::LambdaTable(const PotentialSpec& spec, double q_min, double q_max, int points) {
    PhysicalParams dummy;
    for (double q : logspace(q_min, q_max, points)) {
        auto s = d1_tilde(1.0 + q, dummy, spec);
        lq_.push_back(std::log(q));
        ll_.push_back(std::log(s.lambda_factor));
    }
    auto* sp = gsl_spline_alloc(gsl_interp_cspline, lq_.size());
    gsl_spline_init(sp, lq_.data(), ll_.data(), lq_.size());
    spline_ = sp;
    lam0_ = std::exp(ll_.front());
}

LambdaTable::~LambdaTable() { gsl_spline_free(static_cast<gsl_spline*>(spline_)); }

double LambdaTable::operator()(double p) const {
    if (p <= 1.0) return 0.0;
    double lq = std::log(p - 1.0);
    if (lq <= lq_.front()) return lam0_;
    lq = std::min(lq, lq_.back());
    return std::exp(gsl_spline_eval(static_cast<gsl_spline*>(spline_), lq, nullptr));
}

double LambdaTable::min_value() const { return std::exp(*std::min_element(ll_.begin(), ll_.end())); }
double LambdaTable::max_value() const { return std::exp(*std::max_element(ll_.begin(), ll_.end())); }

namespace {

struct OdeCtx {
    const LambdaTable* table;
    double rho0;
    double expo;
};

int effective_rhs(double, const double y[], double dydt[], void* params) {
    auto* c = static_cast<OdeCtx*>(params);
    double p = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
    double f = 0.0;
    if (p > 1.0) f = -c->rho0 * (*c->table)(p) * std::pow(p - 1.0, c->expo) / p;
    for (int i = 0; i < 3; ++i) dydt[i] = f * y[i];
    return GSL_SUCCESS;
}

} // namespace

EffectiveTrajectory integrate_effective(const Vec3& P0, double rho0, double n, double horizon,
                                        const PotentialSpec& spec_in, int samples, double t_first) {
    EffectiveTrajectory tr;
    tr.n_exponent = n;
    tr.rho0 = rho0;
    const double p0 = norm3(P0);
    tr.samples.push_back({0.0, P0});
    if (p0 <= 1.0 || rho0 == 0.0) {
        for (double t : logspace(t_first, horizon, samples)) tr.samples.push_back({t, P0});
        tr.threshold_reached = p0 <= 1.0;
        return tr;
    }
    PotentialSpec spec = spec_in;
    spec.n_exponent = n;
    // padded past p0 - 1: the natural spline end condition costs accuracy near the last node
    LambdaTable table(spec, 1e-8, 4.0 * std::max(p0 - 1.0, 2e-7), 400);

    OdeCtx ctx{&table, rho0, 2.0 + 2.0 * n};
    gsl_odeiv2_system sys{effective_rhs, nullptr, 3, &ctx};
    gsl_odeiv2_driver* d = gsl_odeiv2_driver_alloc_y_new(&sys, gsl_odeiv2_step_rkck, 1e-4, 1e-14, 1e-9);
    gsl_odeiv2_driver_set_hmin(d, 1e-14);
    double y[3] = {P0[0], P0[1], P0[2]};
    double t = 0.0;
    double pmin = p0, pmax = p0;
    for (double te : logspace(t_first, horizon, samples)) {
        int st = gsl_odeiv2_driver_apply(d, &t, te, y);
        if (st != GSL_SUCCESS) {
            tr.threshold_reached = true;
            break;
        }
        Vec3 P{y[0], y[1], y[2]};
        tr.samples.push_back({t, P});
        double p = norm3(P);
        pmin = std::min(pmin, p);
        pmax = std::max(pmax, p);
        if (p <= 1.0) {
            tr.threshold_reached = true;
            break;
        }
    }
    gsl_odeiv2_driver_free(d);
    // Lambda extremes over the traversed speed range, from the same delta-surface quadrature
    double lo = 1e300, hi = 0.0;
    for (double q : logspace(std::max(pmin - 1.0, 1e-7), pmax - 1.0, 64)) {
        double l = table(1.0 + q);
        lo = std::min(lo, l);
        hi = std::max(hi, l);
    }
    tr.lambda_min = lo;
    tr.lambda_max = hi;
    return tr;
}

SandwichReport check_sandwich(const EffectiveTrajectory& tr) {
    SandwichReport r;
    const double n = tr.n_exponent;
    const double k = 1.0 + 2.0 * n;
    // q^{-k} = q0^{-k} + k rho0 int Lambda dt, so the c = 1 bound needs (k/2) C0 <= k Lambda_min
    // and the c = 3 bound needs 3 (k/2) C0 >= k Lambda_max
    r.c0_lo = 2.0 * tr.lambda_max / 3.0;
    r.c0_hi = 2.0 * tr.lambda_min;
    r.c0 = std::sqrt(r.c0_lo * r.c0_hi);
    r.psi = k * r.c0 / 2.0;
    if (tr.samples.empty()) return r;
    const double q0 = tr.samples.front().speed() - 1.0;
    for (const auto& s : tr.samples) {
        double q = s.speed() - 1.0;
        double base = std::pow(q0, -k);
        double lower = std::pow(base + 3.0 * tr.rho0 * r.psi * s.t, -1.0 / k);
        double upper = std::pow(base + 1.0 * tr.rho0 * r.psi * s.t, -1.0 / k);
        ++r.checked;
        double slack = 1e-9 * q0;
        if (q < lower - slack || q > upper + slack) ++r.violations;
    }
    r.pass = r.c0_lo <= r.c0_hi && r.violations == 0 && r.checked > 0;
    return r;
}

PdeFgrReport compare_pde_to_fgr(const std::vector<TrajectoryRecord>& run, const PhysicalParams& params,
                                const PotentialSpec& spec, double t_transient) {
    PdeFgrReport rep;
    for (const auto& rec : run) {
        if (rec.t < t_transient) continue;
        if (!rec.force_valid) continue;
        if (norm3(rec.P) == 0.0) continue;
        Vec3 d = d1_vector(rec.P, params, spec);
        double dn = norm3(d);
        if (dn < 1e-14) continue;
        Vec3 diff{rec.F[0] - d[0], rec.F[1] - d[1], rec.F[2] - d[2]};
        rep.t.push_back(rec.t);
        rep.ratio.push_back(norm3(diff) / dn);
    }
    rep.count = static_cast<int>(rep.ratio.size());
    if (rep.count == 0) return rep;
    rep.defined = true;
    std::vector<double> r = rep.ratio;
    std::sort(r.begin(), r.end());
    rep.median = (r.size() % 2) ? r[r.size() / 2] : 0.5 * (r[r.size() / 2 - 1] + r[r.size() / 2]);
    rep.max = r.back();
    return rep;
}

} // namespace cherenkov
