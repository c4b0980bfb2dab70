#include "cherenkov/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include <boost/math/tools/roots.hpp>

#include "cherenkov/friction.hpp"

namespace cherenkov {

namespace {

constexpr cplx I{0.0, 1.0};

void require_analytic(const PotentialSpec& spec, const char* who) {
    if (spec.amplitude != 0.0 && spec.profile != Profile::gaussian)
        throw InvalidSpec(std::string(who) + ": needs a potential whose transform is analytic (gaussian profile)");
}

double vhat_norm(const PotentialSpec& spec) {
    const double w = spec.width;
    return spec.amplitude * (spec.rescaled ? 1.0 : std::pow(w * w / 2.0, 1.5));
}

// Deformed radial path rho(x) = x + dir * i y(x): real on [0, zeta], then bends off the axis
// with initial angle pi/6 and saturates at depth y0.
struct BentPath {
    double zeta = 0.0;
    double y0 = 0.4;
    double ell = 0.4 / std::tan(kPi / 6);
    double dir = -1.0;
    std::pair<cplx, cplx> operator()(double x) const {
        if (x <= zeta) return {cplx(x, 0.0), cplx(1.0, 0.0)};
        const double t = std::tanh((x - zeta) / ell);
        const double y = y0 * t, dy = y0 / ell * (1.0 - t * t);
        return {cplx(x, dir * y), cplx(1.0, dir * dy)};
    }
};

double unit_gaussian_cutoff(const PotentialSpec& spec, double base) { return base / spec.width; }

} // namespace

cplx v_hat_analytic(const PotentialSpec& spec, cplx k) {
    require_analytic(spec, "v_hat_analytic");
    if (spec.amplitude == 0.0) return 0.0;
    const double w = spec.width;
    return vhat_norm(spec) * std::exp(-w * w * k * k / 4.0);
}

double psi_speed(double z) { return (1.0 + 2.0 * z * z) / std::sqrt(1.0 + z * z); }

double psi_speed_derivative(double z) { return z * (3.0 + 2.0 * z * z) / std::pow(1.0 + z * z, 1.5); }

double solve_psi(double q) {
    if (q <= 1.0) return 0.0;
    // with u = sqrt(1+z^2): 2u^2 - q u - 1 = 0; u - 1 written to avoid cancellation near q = 1
    const double d = q - 1.0;
    const double root = std::sqrt(q * q + 8.0);
    const double um1 = (d + (2.0 * d + d * d) / (root + 3.0)) / 4.0;
    const double u = 1.0 + um1;
    double z = std::sqrt(um1 * (u + 1.0));
    auto f = [q](double x) { return std::make_tuple(psi_speed(x) - q, psi_speed_derivative(x)); };
    std::uintmax_t it = 20;
    z = boost::math::tools::newton_raphson_iterate(f, z, 0.0, std::max(2.0 * z, q), 52, it);
    return z;
}

CriticalPointData critical_points(double sigma, double q_norm) {
    if (!(sigma > 0.0)) throw std::invalid_argument("critical_points: sigma must be positive");
    CriticalPointData c;
    c.sigma = sigma;
    c.present = sigma > 1.0;
    if (c.present) {
        c.zeta = solve_psi(sigma);
        c.eta = std::acos(1.0 / sigma);
    }
    c.zeta0 = q_norm > 1.0 ? solve_psi(q_norm) : 0.0;
    c.R = c.zeta0 / (5.0 * std::sqrt(1.0 + c.zeta0 * c.zeta0));
    return c;
}

CanonicalFrame canonical_frame(const Vec3& Q1, const Vec3& Q2) {
    CanonicalFrame f;
    f.sigma = norm3(Q2);
    Vec3 e{1, 0, 0};
    const double q1 = norm3(Q1);
    if (f.sigma > 0.0)
        e = {Q2[0] / f.sigma, Q2[1] / f.sigma, Q2[2] / f.sigma};
    else if (q1 > 0.0)
        e = {Q1[0] / q1, Q1[1] / q1, Q1[2] / q1};
    f.a = dot3(Q1, e);
    Vec3 perp{Q1[0] - f.a * e[0], Q1[1] - f.a * e[1], Q1[2] - f.a * e[2]};
    f.b = norm3(perp);
    return f;
}

CriticalPointData critical_points(const CanonicalFrame& f, Zeta0Reading reading) {
    const double q = reading == Zeta0Reading::q1_components ? std::hypot(f.a, f.b) : f.sigma;
    return critical_points(f.sigma, q);
}

const char* kernel_method_name(KernelMethod m) {
    switch (m) {
    case KernelMethod::automatic: return "automatic";
    case KernelMethod::contour: return "contour";
    case KernelMethod::regularized: return "regularized";
    }
    return "?";
}

double sonic_threshold(double tau) {
    if (!(tau > 0.0)) return std::numeric_limits<double>::infinity();
    return 1.0 + 10.0 * std::pow(tau, -2.0 / 3.0);
}

double kernel_scale(double n, const PotentialSpec& spec) {
    if (spec.amplitude == 0.0) return 0.0;
    const double c = vhat_norm(spec), w = spec.width;
    auto g = [&](double r) { return std::pow(r, 4 * n + 3) * c * c * std::exp(-w * w * r * r / 2) / std::sqrt(1 + r * r); };
    return 4.0 * kPi * composite_gl(g, 0.0, unit_gaussian_cutoff(spec, 14.0), 32);
}

namespace {

// integrand of F after the analytic alpha integration, at complex rho
struct FIntegrand {
    double sigma, a, b, tau, power, eps, w;
    double c2; // squared normalization of Vhat
    cplx operator()(cplx rho, double ct, double st) const {
        if (rho == cplx(0.0)) return 0.0;
        const cplx sq = std::sqrt(1.0 + rho * rho);
        const cplx Y = rho * sq - sigma * rho * ct;
        const cplx A = sq - a * ct - I * eps;
        cplx g2;
        if (b == 0.0) {
            g2 = 1.0 / (A * A);
        } else {
            const double B = b * st;
            const cplx s = std::sqrt(A - B) * std::sqrt(A + B);
            g2 = A / (s * s * s);
        }
        const cplx ex = std::exp(-w * w * rho * rho / 2.0 - I * tau * Y);
        return 2.0 * kPi * st * std::pow(rho, power) / sq * c2 * ex * g2;
    }
};

std::vector<double> theta_breaks(const CanonicalFrame& f, double tau) {
    std::vector<double> br;
    if (f.sigma > 1.0) br.push_back(std::acos(1.0 / f.sigma));
    if (f.a > 1.0) br.push_back(std::acos(1.0 / f.a));
    if (tau > 1.0) {
        br.push_back(std::min(1.0, std::pow(tau, -1.0 / 3.0)));
        br.push_back(std::min(1.0, std::pow(tau, -0.5)));
    }
    return br;
}

} // namespace

namespace {

// one adaptive pass along the rotated ray with absolute tolerance q.tol * S
KernelResult contour_pass(const CanonicalFrame& f, const KernelQuery& q, double S) {
    KernelResult res;
    res.method = KernelMethod::contour;
    const double c = vhat_norm(q.spec);
    FIntegrand F{f.sigma, f.a, f.b, q.tau, 4 * q.n_exponent + 3, 0.0, q.spec.width, c * c};
    const double rmax = unit_gaussian_cutoff(q.spec, 15.0);
    const cplx dir = std::exp(-I * q.gamma);
    bool ok = true;
    double inner_err = 0.0;
    std::vector<double> rbreaks;
    if (q.tau > 1.0) rbreaks = {std::pow(q.tau, -1.0 / 3.0), 4.0 * std::pow(q.tau, -1.0 / 3.0)};
    auto outer = [&](double th) {
        const double ct = std::cos(th), st = std::sin(th);
        auto inner = [&](double r) { return F(r * dir, ct, st) * dir; };
        QagResult r = qag(inner, 0.0, rmax, q.tol * S / (4 * kPi), q.tol, 600, rbreaks);
        ok = ok && r.converged;
        inner_err = std::max(inner_err, r.err);
        return r.value;
    };
    QagResult o = qag(outer, 0.0, kPi, q.tol * S, q.tol, 600, theta_breaks(f, q.tau));
    res.value = o.value;
    res.err_est = o.err + kPi * inner_err;
    res.converged = ok && o.converged;
    return res;
}

cplx eps_pass(const CanonicalFrame& f, const KernelQuery& q, double eps, double S, double& err, bool& converged) {
    const double c = vhat_norm(q.spec);
    FIntegrand F{f.sigma, f.a, f.b, q.tau, 4 * q.n_exponent + 3, eps, q.spec.width, c * c};
    bool ok = true;
    double inner_err = 0.0;
    auto outer = [&](double th) {
        const double ct = std::cos(th), st = std::sin(th);
        BentPath path;
        path.zeta = f.sigma * ct > 1.0 ? solve_psi(f.sigma * ct) : 0.0;
        const double xmax = std::max(unit_gaussian_cutoff(q.spec, 14.0), path.zeta + 4.0);
        auto inner = [&](double x) {
            auto [rho, d] = path(x);
            return F(rho, ct, st) * d;
        };
        std::vector<double> br{path.zeta, path.zeta + path.ell};
        QagResult r = qag(inner, 0.0, xmax, q.tol * S / (4 * kPi), q.tol, 600, br);
        ok = ok && r.converged;
        inner_err = std::max(inner_err, r.err);
        return r.value;
    };
    QagResult o = qag(outer, 0.0, kPi, q.tol * S, q.tol, 600, theta_breaks(f, q.tau));
    err = o.err + kPi * inner_err;
    converged = ok && o.converged;
    return o.value;
}

// F can be many orders below the integrand scale at large tau; tighten the absolute
// tolerance to the current estimate until the error is small relative to |F|
constexpr int kRefinePasses = 3;

bool needs_refinement(cplx value, double err, double tol) {
    return std::abs(value) > 0 && err > 1e3 * tol * std::abs(value);
}

} // namespace

KernelResult kernel_F_contour(const CanonicalFrame& f, const KernelQuery& q) {
    require_analytic(q.spec, "kernel_F");
    if (!(q.gamma > 0.0 && q.gamma <= kPi / 6 + 1e-15))
        throw InvalidSpec("kernel_F: contour angle must lie in (0, pi/6]");
    if (q.spec.amplitude == 0.0) {
        KernelResult res;
        res.converged = true;
        return res;
    }
    double S = kernel_scale(q.n_exponent, q.spec);
    KernelResult res = contour_pass(f, q, S);
    for (int k = 0; k < kRefinePasses && needs_refinement(res.value, res.err_est, q.tol); ++k) {
        S = std::abs(res.value);
        res = contour_pass(f, q, S);
    }
    return res;
}

cplx kernel_F_at_eps(const CanonicalFrame& f, const KernelQuery& q, double eps, double* err, bool* converged) {
    require_analytic(q.spec, "kernel_F");
    if (q.spec.amplitude == 0.0) {
        if (err) *err = 0.0;
        if (converged) *converged = true;
        return 0.0;
    }
    double S = kernel_scale(q.n_exponent, q.spec);
    double e = 0.0;
    bool ok = false;
    cplx v = eps_pass(f, q, eps, S, e, ok);
    for (int k = 0; k < kRefinePasses && needs_refinement(v, e, q.tol); ++k) {
        S = std::abs(v);
        v = eps_pass(f, q, eps, S, e, ok);
    }
    if (err) *err = e;
    if (converged) *converged = ok;
    return v;
}

KernelResult kernel_F_regularized(const CanonicalFrame& f, const KernelQuery& q) {
    KernelResult res;
    res.method = KernelMethod::regularized;
    if (q.eps_ladder.size() < 2) throw InvalidSpec("kernel_F: epsilon ladder needs at least two rungs");
    std::vector<cplx> vals;
    double qerr = 0.0;
    bool ok = true;
    for (double e : q.eps_ladder) {
        double er = 0.0;
        bool c = false;
        vals.push_back(kernel_F_at_eps(f, q, e, &er, &c));
        qerr = std::max(qerr, er);
        ok = ok && c;
    }
    auto [lim, rerr] = richardson(q.eps_ladder, vals);
    res.value = lim;
    res.err_est = rerr + qerr;
    res.converged = ok;
    return res;
}

KernelResult kernel_F(const KernelQuery& q) {
    require_analytic(q.spec, "kernel_F");
    if (!(q.tau >= 0.0)) throw InvalidSpec("kernel_F: tau must be nonnegative");
    const CanonicalFrame f = canonical_frame(q.Q1, q.Q2);
    KernelMethod m = q.method;
    const double thr = sonic_threshold(q.tau);
    if (m == KernelMethod::automatic) m = f.sigma <= thr ? KernelMethod::contour : KernelMethod::regularized;
    KernelResult res = m == KernelMethod::contour ? kernel_F_contour(f, q) : kernel_F_regularized(f, q);
    // overlap band around the regime switch: run the other method too
    if (q.method == KernelMethod::automatic && std::isfinite(thr) && f.sigma > 1.0 && q.spec.amplitude != 0.0) {
        const double rel = (f.sigma - 1.0) / (thr - 1.0);
        if (rel >= 0.9 && rel <= 1.1) {
            KernelResult other = m == KernelMethod::contour ? kernel_F_regularized(f, q) : kernel_F_contour(f, q);
            const double scale = std::max(std::abs(res.value), std::abs(other.value));
            res.cross_check = scale > 0 ? std::abs(res.value - other.value) / scale : 0.0;
            res.regime_warning = res.cross_check > 0.02;
        }
    }
    return res;
}

DecayReport decay_fit_F(const QFamily& family, const std::vector<double>& tau_grid, const KernelQuery& base,
                        int threads) {
    DecayReport rep;
    const size_t m = tau_grid.size();
    rep.tau = tau_grid;
    rep.values.assign(m, 0.0);
    rep.methods.assign(m, KernelMethod::automatic);
    rep.errs.assign(m, 0.0);
    rep.converged.assign(m, false);
    rep.q.resize(m);
    std::vector<bool> conv(m, false);
    parallel_for(m, threads, [&](size_t i) {
        KernelQuery q = base;
        q.tau = tau_grid[i];
        std::tie(q.Q1, q.Q2) = family(q.tau);
        rep.q[i] = {q.Q1, q.Q2};
        try {
            KernelResult r = kernel_F(q);
            rep.values[i] = r.value;
            rep.methods[i] = r.method;
            rep.errs[i] = r.err_est;
            conv[i] = r.converged && std::isfinite(std::abs(r.value));
        } catch (const std::exception&) {
            conv[i] = false;
        }
    });
    std::vector<double> x, y;
    for (size_t i = 0; i < m; ++i) {
        rep.converged[i] = conv[i];
        if (conv[i] && std::abs(rep.values[i]) > 0) {
            x.push_back(tau_grid[i]);
            y.push_back(std::abs(rep.values[i]));
        }
    }
    if (base.spec.amplitude == 0.0 || x.empty()) {
        rep.fit.note = "no signal";
        return rep;
    }
    if (x.size() < 8) {
        rep.fit.points = static_cast<int>(x.size());
        rep.fit.note = "fewer than 8 converged evaluations";
        return rep;
    }
    rep.fit = fit_loglog(x, y);
    return rep;
}

namespace {

// int over a path of rho^power Vhat(rho)^2 / sqrt(1+rho^2) e^{-i eta rho (sqrt(1+rho^2) - p)}
cplx radial_phase_integral(double p, double eta, double power, const PotentialSpec& spec) {
    const double c = vhat_norm(spec), w = spec.width;
    auto g = [&](cplx rho) -> cplx {
        if (rho == cplx(0.0)) return 0.0;
        const cplx sq = std::sqrt(1.0 + rho * rho);
        return std::pow(rho, power) * c * c / sq * std::exp(-w * w * rho * rho / 2.0 - I * eta * rho * (sq - p));
    };
    const double tol = 1e-11;
    QagResult r;
    if (p <= 1.0) {
        // the phase is increasing on the whole half line: rotate the ray downward
        const cplx dir = std::exp(-I * kPi / 6.0);
        r = qag([&](double s) { return g(s * dir) * dir; }, 0.0, unit_gaussian_cutoff(spec, 20.0), 0.0, tol, 2000,
                {0.1, 1.0});
    } else {
        // above the stationary point go down, below it go up; both legs cross it at -pi/4
        const double rs = solve_psi(p);
        auto up = [&](double x) {
            const cplx rho(x, x * (rs - x) / rs);
            const cplx d(1.0, (rs - 2 * x) / rs);
            return g(rho) * d;
        };
        const double y0 = 0.5;
        auto down = [&](double x) {
            const double t = std::tanh((x - rs) / y0);
            return g(cplx(x, -y0 * t)) * cplx(1.0, -(1.0 - t * t));
        };
        QagResult a = qag(up, 0.0, rs, 0.0, tol, 2000);
        QagResult b = qag(down, rs, rs + unit_gaussian_cutoff(spec, 20.0), 0.0, tol, 2000, {rs + 0.1, rs + 1.0});
        r.value = a.value + b.value;
        r.err = a.err + b.err;
        r.converged = a.converged && b.converged;
    }
    if (!r.converged) throw NumericalFailure("demo integral did not converge");
    return r.value;
}

} // namespace

cplx demo_f_tilde(double p, double eta, double n, const PotentialSpec& spec) {
    require_analytic(spec, "demo_f_tilde");
    if (spec.amplitude == 0.0) return 0.0;
    return radial_phase_integral(p, eta, 4 * n + 4, spec);
}

cplx demo_f(double p, double eta, double n, const PotentialSpec& spec) {
    require_analytic(spec, "demo_f");
    if (spec.amplitude == 0.0) return 0.0;
    if (p == 0.0 || eta == 0.0) return 2.0 * radial_phase_integral(0.0, eta, 4 * n + 5, spec);
    // j0(x) = (e^{ix} - e^{-ix}) / (2ix) splits f_p into two f~ integrals
    return (demo_f_tilde(p, eta, n, spec) - demo_f_tilde(-p, eta, n, spec)) / (I * p * eta);
}

DemoResult demo_f_p(double p, const std::vector<double>& eta_grid, double n, const PotentialSpec& spec) {
    DemoResult d;
    d.p = p;
    d.n = n;
    d.eta = eta_grid;
    if (p > 1.0) {
        d.rho_star = solve_psi(p);
        d.phase_second_derivative = psi_speed_derivative(d.rho_star);
    }
    std::vector<double> af, aft;
    for (double e : eta_grid) {
        d.f_tilde.push_back(demo_f_tilde(p, e, n, spec));
        d.f.push_back(demo_f(p, e, n, spec));
        aft.push_back(std::abs(d.f_tilde.back()));
        af.push_back(std::abs(d.f.back()));
    }
    d.fit_f = fit_loglog(eta_grid, af);
    d.fit_f_tilde = fit_loglog(eta_grid, aft);
    return d;
}

double pairing_radial(double tau, double q, const PotentialSpec& spec, double n) {
    if (spec.amplitude == 0.0 || tau == 0.0 || q == 0.0) return 0.0;
    const double c = vhat_norm(spec), w = spec.width;
    const double rmax = unit_gaussian_cutoff(spec, 14.0);
    auto base = [&](double r) { return std::pow(r, 4 * n + 5) * c * c * std::exp(-w * w * r * r / 2); };
    auto f = [&](double r) -> cplx {
        if (r == 0.0) return 0.0;
        const double L = r * std::sqrt(1 + r * r);
        return base(r) * std::sin(tau * L) / L * std::sph_bessel(1, tau * q * r);
    };
    auto bound = [&](double r) {
        if (r == 0.0) return 0.0;
        const double L = r * std::sqrt(1 + r * r);
        return base(r) * std::min(tau, 1.0 / L) * std::min(0.5, tau * q * r / 3.0);
    };
    const double scale = composite_gl(bound, 0.0, rmax, 64);
    QagResult r = qag(f, 0.0, rmax, 1e-12 * scale, 1e-10, 8000);
    if (!r.converged) throw NumericalFailure("propagator pairing quadrature did not converge");
    return 4.0 * kPi * r.value.real();
}

CVec3 propagator_pairing(double t, double s, const Vec3& Q, const PotentialSpec& spec, double n) {
    if (t < s) throw std::invalid_argument("propagator_pairing: need t >= s");
    require_analytic(spec, "propagator_pairing");
    const double q = norm3(Q);
    CVec3 out{0.0, 0.0, 0.0};
    if (q == 0.0) return out;
    const double v = pairing_radial(t - s, q, spec, n);
    for (int j = 0; j < 3; ++j) out[j] = v * Q[j] / q;
    return out;
}

cplx psi2_kernel(double t, const Vec3& mu, const Vec3& P_inf, const PotentialSpec& spec) {
    if (std::abs(norm3(P_inf) - 1.0) > 1e-9) throw std::domain_error("psi2_kernel: |P_inf| must be 1");
    require_analytic(spec, "psi2_kernel");
    if (spec.amplitude == 0.0) return 0.0;
    const double sigma = norm3(mu);
    Vec3 e = sigma > 0 ? Vec3{mu[0] / sigma, mu[1] / sigma, mu[2] / sigma} : P_inf;
    const double p1 = dot3(P_inf, e);
    const double p2 = norm3(Vec3{P_inf[0] - p1 * e[0], P_inf[1] - p1 * e[1], P_inf[2] - p1 * e[2]});
    const double power = 2 * spec.n_exponent + 1;
    const double c = vhat_norm(spec), w = spec.width;
    auto F = [&](cplx rho, double ct, double st) -> cplx {
        if (rho == cplx(0.0)) return 0.0;
        const cplx sq = std::sqrt(1.0 + rho * rho);
        const cplx A = sq - p1 * ct;
        const double B = p2 * st;
        const cplx s = std::sqrt(A - B) * std::sqrt(A + B);
        const cplx ex = std::exp(-w * w * rho * rho / 4.0 + I * t * rho * (sq - sigma * ct));
        return 2.0 * kPi * st * std::pow(rho, power) * c * ex / s;
    };
    auto scale_f = [&](double r) { return r > 0 ? std::pow(r, power - 2) * c * std::exp(-w * w * r * r / 4) : 0.0; };
    const double S = 4.0 * kPi * composite_gl(scale_f, 0.0, unit_gaussian_cutoff(spec, 16.0), 32);
    const double tol = 1e-10;
    bool ok = true;
    auto outer = [&](double th) {
        const double ct = std::cos(th), st = std::sin(th);
        BentPath path;
        path.dir = 1.0;
        path.zeta = sigma * ct > 1.0 ? solve_psi(sigma * ct) : 0.0;
        const double xmax = std::max(unit_gaussian_cutoff(spec, 16.0), path.zeta + 4.0);
        auto inner = [&](double x) {
            auto [rho, d] = path(x);
            return F(rho, ct, st) * d;
        };
        QagResult r = qag(inner, 0.0, xmax, 1e-3 * tol * S, tol, 800, {path.zeta, path.zeta + path.ell, 0.05});
        ok = ok && r.converged;
        return r.value;
    };
    std::vector<double> br{std::atan2(p2, p1)};
    if (sigma > 1.0) br.push_back(std::acos(1.0 / sigma));
    QagResult o = qag(outer, 0.0, kPi, 1e-3 * tol * S, tol, 800, br);
    if (!(ok && o.converged)) throw NumericalFailure("psi2 quadrature did not converge");
    return o.value;
}

GBoundReport g_bound_spot_check(double a, double b, double zeta0, int samples) {
    const double q = std::hypot(a, b);
    if (!(a > 1.0) || std::abs(b) > 0.1 * (q - 1.0))
        throw std::invalid_argument("g_bound_spot_check: need a > 1 and |b| <= (sqrt(a^2+b^2) - 1)/10");
    if (!(zeta0 > 0.0) || samples < 2) throw std::invalid_argument("g_bound_spot_check: bad zeta0 or samples");
    GBoundReport rep;
    rep.a = a;
    rep.b = b;
    rep.zeta0 = zeta0;
    rep.samples = samples;
    rep.R = zeta0 / (5.0 * std::sqrt(1.0 + zeta0 * zeta0));
    const double rmax = 1.2 * zeta0;
    auto G = [&](double r, double th, double al) {
        return std::sqrt(1 + r * r) - a * std::cos(th) - b * std::sin(th) * std::cos(al);
    };
    double mx = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double r = rmax * i / (samples - 1);
        for (int j = 0; j < samples; ++j) {
            const double th = rep.R * j / (samples - 1);
            for (int k = 0; k < samples; ++k) {
                const double g = G(r, th, 2 * kPi * k / samples);
                mx = std::max(mx, 1.0 / (g * g));
            }
        }
    }
    rep.max_scaled = mx * std::pow(zeta0, 4);
    double cmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) cmin = std::min(cmin, -G(rmax, rep.R, 2 * kPi * k / samples));
    rep.corner_minus_g = cmin;
    rep.corner_lower_bound = zeta0 * zeta0 / (2.0 * std::sqrt(1 + zeta0 * zeta0));
    rep.pass = std::isfinite(rep.max_scaled) && rep.max_scaled < 100.0;
    return rep;
}

double contour_phase_margin(double tau, double sigma, double gamma, double r, double beta) {
    const double s = std::pow(tau, -1.0 / 3.0);
    const cplx rho = s * r * std::exp(-I * gamma);
    const double th = s * beta;
    const cplx Y = rho * std::sqrt(1.0 + rho * rho) - sigma * rho * std::cos(th);
    return -tau * Y.imag();
}

std::vector<PhaseSample> sample_phase_points(std::mt19937_64& rng, int count) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<PhaseSample> v;
    v.reserve(count);
    for (int i = 0; i < count; ++i) {
        PhaseSample p;
        p.tau = std::pow(10.0, 4.0 * u(rng));
        p.gamma = kPi / 24 + (kPi / 6 - kPi / 24) * u(rng);
        p.sigma = 0.5 + (sonic_threshold(p.tau) - 0.5) * u(rng);
        const double c = std::cbrt(p.tau);
        p.r = std::pow(10.0, -3.0 + (std::log10(15.0 * c) + 3.0) * u(rng));
        p.beta = kPi * c * u(rng);
        v.push_back(p);
    }
    return v;
}

namespace {
double phase_shape(const PhaseSample& p) {
    return std::min(p.r * p.r, p.r * p.r * p.r) + p.r * p.beta * p.beta;
}
} // namespace

PhaseBoundFit fit_phase_bound(const std::vector<PhaseSample>& pts) {
    PhaseBoundFit f;
    f.samples = static_cast<int>(pts.size());
    if (pts.empty()) return f;
    std::vector<double> margin(pts.size());
    for (size_t i = 0; i < pts.size(); ++i)
        margin[i] = contour_phase_margin(pts[i].tau, pts[i].sigma, pts[i].gamma, pts[i].r, pts[i].beta);
    // largest c0 on a log grid whose required c1 stays O(10), the size of the regime constant
    for (double c0 : logspace(1.0, 1e-4, 81)) {
        double need = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < pts.size(); ++i)
            need = std::max(need, (c0 * phase_shape(pts[i]) - margin[i]) / pts[i].r);
        if (need <= 10.0) {
            f.c0 = c0;
            f.c1 = std::max(need, 0.0) * 1.25 + 0.1;
            f.ok = true;
            break;
        }
    }
    return f;
}

int phase_bound_violations(const PhaseBoundFit& fit, const std::vector<PhaseSample>& pts) {
    int bad = 0;
    for (const auto& p : pts) {
        const double m = contour_phase_margin(p.tau, p.sigma, p.gamma, p.r, p.beta);
        if (m < fit.c0 * phase_shape(p) - fit.c1 * p.r) ++bad;
    }
    return bad;
}

} // namespace cherenkov
