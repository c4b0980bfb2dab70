#include <doctest.h>

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "cherenkov/dynamics.hpp"
#include "cherenkov/friction.hpp"

using namespace cherenkov;

namespace {

// gaussian, rescaled: Vhat^2 = exp(-rho^2/2), so the resonance integral is an incomplete gamma
double d1_closed(double p, double n) {
    if (p <= 1) return 0;
    const double a = 3 + 4 * n, x = (p * p - 1) / 2;
    const double I = std::pow(2.0, (a - 1) / 2) * boost::math::tgamma_lower((a + 1) / 2, x);
    return -2 * M_PI * M_PI / (p * p) * I;
}

double smooth_cut(double r) {
    // 1 on [0, 8], C-infinity step down to 0 at 10
    if (r <= 8) return 1;
    if (r >= 10) return 0;
    auto bump = [](double x) { return x > 0 ? std::exp(-1 / x) : 0.0; };
    double s = (r - 8) / 2;
    return bump(1 - s) / (bump(1 - s) + bump(s));
}

} // namespace

TEST_CASE("FGR identity") {
    const auto& ladder = default_eps_ladder();
    auto one = fgr_identity_check(smooth_cut, ladder);
    CHECK(one.value == doctest::Approx(-M_PI).epsilon(1e-6));
    auto zero = fgr_identity_check([](double r) { return (r - 1) * std::exp(-r); }, ladder);
    CHECK(std::abs(zero.value) < 1e-6);
    auto g = fgr_identity_check([](double r) { return std::exp(-r * r); }, ladder);
    CHECK(g.value == doctest::Approx(-M_PI * std::exp(-1.0)).epsilon(1e-4));
    // the ladder itself at a 10x tighter tolerance and finer rungs
    auto tight = fgr_identity_check([](double r) { return std::exp(-r * r); }, {5e-3, 2.5e-3, 1.25e-3, 6.25e-4, 3.125e-4},
                                    12.0, 1e-7);
    CHECK(g.value == doctest::Approx(tight.value).epsilon(1e-5));
    CHECK(g.ladder_values.size() == 4);
    CHECK_THROWS_AS(fgr_identity_check(smooth_cut, {1e-2, 5e-3, 2.5e-3}), std::invalid_argument);
    CHECK_THROWS_AS(fgr_identity_check([](double r) { return std::sqrt(std::abs(r - 1)); }, ladder), NumericalFailure);
}

TEST_CASE("d1_tilde against the incomplete gamma form") {
    PhysicalParams pp;
    for (double n : {0.75, 1.0, 1.5}) {
        auto spec = PotentialSpec::gaussian(1.0, n);
        for (double p : {1.0005, 1.01, 1.1, 1.5, 2.0, 5.0, 10.0}) {
            auto s = d1_tilde(p, pp, spec);
            CHECK(s.d1_tilde == doctest::Approx(d1_closed(p, n)).epsilon(1e-10));
            CHECK(s.lambda_factor == doctest::Approx(-s.d1_tilde / std::pow(p - 1, 2 + 2 * n)).epsilon(1e-12));
            CHECK(s.method == FrictionMethod::delta_surface);
        }
    }
}

TEST_CASE("d1_tilde vanishes at and below threshold") {
    PhysicalParams pp;
    auto spec = PotentialSpec::gaussian(1.0);
    for (double p : {0.1, 0.5, 0.9, 1.0}) {
        CHECK(d1_tilde(p, pp, spec).d1_tilde == 0.0);
        CHECK(d1_tilde(p, pp, spec).lambda_factor == 0.0);
    }
    for (double p : {0.5, 0.9, 1.0}) {
        auto e = d1_tilde(p, pp, spec, FrictionMethod::epsilon_regularized);
        MESSAGE("eps method at p = " << p << ": " << e.d1_tilde << " +- " << e.abs_err_est);
        CHECK(std::abs(e.d1_tilde) <= std::max(1e-10, 10 * e.abs_err_est));
    }
    for (double p : {1.001, 1.1, 1.5, 2.0, 5.0, 10.0}) CHECK(d1_tilde(p, pp, spec).d1_tilde < 0);
    CHECK_THROWS_AS(d1_tilde(0.0, pp, spec), std::invalid_argument);
}

TEST_CASE("threshold limit of Lambda") {
    PhysicalParams pp;
    for (double n : {0.75, 1.0}) {
        auto spec = PotentialSpec::gaussian(1.0, n);
        double lam0 = 2 * M_PI * M_PI * std::pow(2.0, 2 + 2 * n) / (4 + 4 * n);
        CHECK(d1_tilde(1 + 1e-6, pp, spec).lambda_factor == doctest::Approx(lam0).epsilon(1e-5));
    }
}

TEST_CASE("delta surface and eps regularized agree") {
    PhysicalParams pp;
    auto spec = PotentialSpec::gaussian(1.0);
    for (double p : {1.1, 1.5, 2.0, 5.0}) {
        auto a = d1_tilde(p, pp, spec);
        auto b = d1_tilde(p, pp, spec, FrictionMethod::epsilon_regularized);
        CHECK(b.method == FrictionMethod::epsilon_regularized);
        CHECK(std::abs(a.d1_tilde / b.d1_tilde - 1) < 5e-3);
    }
    // single rungs approach the limit at first order
    double lim = d1_closed(1.5, 0.75);
    double e1 = std::abs(d1_tilde_eps(1.5, 1e-2, spec) - lim), e2 = std::abs(d1_tilde_eps(1.5, 5e-3, spec) - lim);
    CHECK(e2 < e1);
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("d1_vector") {
    PhysicalParams pp;
    pp.rho0 = 0.01;
    auto spec = PotentialSpec::gaussian(1.0);
    Vec3 z = d1_vector({0.5, 0, 0}, pp, spec);
    CHECK(norm3(z) == 0.0);
    Vec3 d = d1_vector({1.5, 0, 0}, pp, spec);
    CHECK(d[0] == doctest::Approx(0.01 * d1_closed(1.5, 0.75)).epsilon(1e-10));
    CHECK(d[1] == 0.0);
    CHECK(d[2] == 0.0);
    Vec3 P{0.6, -0.9, 1.1};
    Vec3 v = d1_vector(P, pp, spec);
    CHECK(dot3(v, P) < 0);
    CHECK(norm3(v) == doctest::Approx(0.01 * std::abs(d1_closed(norm3(P), 0.75))).epsilon(1e-10));
    CHECK_THROWS_AS(d1_vector({0, 0, 0}, pp, spec), std::domain_error);
}

TEST_CASE("threshold exponent") {
    PhysicalParams pp;
    std::vector<double> grid;
    for (double q : logspace(1e-3, 1e-1, 9)) grid.push_back(1 + q);
    for (double n : {0.75, 1.0}) {
        auto spec = PotentialSpec::gaussian(1.0, n);
        auto f = threshold_exponent(pp, spec, grid);
        CHECK(f.ok);
        CHECK(std::abs(f.slope - (2 + 2 * n)) < 0.15);
        // doubling Vhat^2
        auto s2 = spec;
        s2.amplitude = std::sqrt(2.0);
        auto g = threshold_exponent(pp, s2, grid);
        CHECK(g.slope == doctest::Approx(f.slope).epsilon(1e-9));
        CHECK(g.intercept - f.intercept == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    }
    auto bad = threshold_exponent(pp, PotentialSpec::gaussian(1.0), {0.9, 1.0, 1.01, 1.02});
    CHECK_FALSE(bad.ok);
}

TEST_CASE("Lambda table interpolates the quadrature") {
    auto spec = PotentialSpec::gaussian(1.0);
    LambdaTable t(spec, 1e-5, 4.0, 400);
    PhysicalParams pp;
    for (double p : {1.0003, 1.01, 1.234, 1.77})
        CHECK(t(p) == doctest::Approx(d1_tilde(p, pp, spec).lambda_factor).epsilon(1e-6));
    CHECK(t(0.9) == 0.0);
    CHECK(t.min_value() > 0);
    CHECK(t.max_value() >= t.min_value());
}

TEST_CASE("effective ODE") {
    auto spec = PotentialSpec::gaussian(1.0);
    SUBCASE("at threshold nothing moves") {
        auto tr = integrate_effective({0, 1, 0}, 0.01, 0.75, 1e3, spec, 20);
        CHECK(tr.threshold_reached);
        for (auto& s : tr.samples) CHECK(s.P == Vec3{0, 1, 0});
    }
    SUBCASE("matches a fixed-step RK4 of the scalar law") {
        const double rho0 = 0.01, H = 50;
        auto tr = integrate_effective({0.9, 1.2, 0}, rho0, 0.75, H, spec, 30);
        double p = 1.5, h = 0.01;
        auto f = [&](double x) { return rho0 * d1_closed(x, 0.75); };
        for (int i = 0; i < std::lround(H / h); ++i) {
            double k1 = f(p), k2 = f(p + 0.5 * h * k1), k3 = f(p + 0.5 * h * k2), k4 = f(p + h * k3);
            p += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        auto& last = tr.samples.back();
        CHECK(last.t == doctest::Approx(H));
        CHECK(last.speed() == doctest::Approx(p).epsilon(1e-8));
        double prev = 2;
        for (auto& s : tr.samples) {
            CHECK(s.speed() < prev);
            prev = s.speed();
            CHECK(std::abs(s.P[0] / s.speed() - 0.6) < 1e-9);
            CHECK(std::abs(s.P[2]) == 0.0);
        }
    }
    SUBCASE("sandwich with fitted constants") {
        auto tr = integrate_effective({1.5, 0, 0}, 0.01, 0.75, 1e5, spec, 200);
        auto sw = check_sandwich(tr);
        CHECK(sw.pass);
        CHECK(sw.checked == static_cast<int>(tr.samples.size()));
        CHECK(sw.c0 >= sw.c0_lo);
        CHECK(sw.c0 <= sw.c0_hi);
    }
}

TEST_CASE("PDE against FGR on synthetic records") {
    PhysicalParams pp;
    pp.rho0 = 0.02;
    auto spec = PotentialSpec::gaussian(1.0);
    std::vector<TrajectoryRecord> recs(10);
    for (int i = 0; i < 10; ++i) {
        recs[i].t = i;
        recs[i].P = {1.4, 0.1 * i, 0};
        recs[i].force_valid = true;
        Vec3 d = d1_vector(recs[i].P, pp, spec);
        recs[i].F = {2 * d[0], 2 * d[1], 2 * d[2]};
    }
    auto r = compare_pde_to_fgr(recs, pp, spec);
    CHECK(r.defined);
    CHECK(r.count == 5);
    CHECK(r.median == doctest::Approx(1.0));
    CHECK(r.max == doctest::Approx(1.0));

    for (auto& x : recs) x.P = {0.5, 0, 0};
    CHECK_FALSE(compare_pde_to_fgr(recs, pp, spec).defined);
    pp.rho0 = 0;
    for (auto& x : recs) x.P = {1.5, 0, 0};
    CHECK_FALSE(compare_pde_to_fgr(recs, pp, spec).defined);
}
