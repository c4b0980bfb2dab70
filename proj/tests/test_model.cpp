#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "cherenkov/model.hpp"

using namespace cherenkov;

namespace {

// unitary 3D transform of a radial function: (2 pi)^{-3/2} 4 pi int r^2 V(r) sin(kr)/(kr) dr
double radial_transform(const PotentialSpec& spec, double k) {
    boost::math::quadrature::exp_sinh<double> q;
    auto f = [&](double r) { return r * r * v_real(spec, r) * std::sin(k * r) / (k * r); };
    return std::pow(2 * M_PI, -1.5) * 4 * M_PI * q.integrate(f);
}

int sign_changes(const PotentialSpec& spec, double k_max, int samples) {
    int c = 0;
    double prev = v_hat(spec, 0);
    for (int i = 1; i <= samples; ++i) {
        double v = v_hat(spec, k_max * i / samples);
        if (v == 0.0) continue;
        if (prev != 0.0 && (v > 0) != (prev > 0)) ++c;
        prev = v;
    }
    return c;
}

} // namespace

TEST_CASE("v_hat gaussian normalization and decay") {
    auto s = PotentialSpec::gaussian(1.0);
    CHECK(v_hat(s, 0.0) == 1.0);
    CHECK(v_hat(s, 20.0) < 1e-40);
    CHECK(v_hat(s, 20.0) * std::pow(20.0, 20) < 1e-15);
    CHECK_THROWS_AS(v_hat(s, -1.0), InvalidSpec);
}

TEST_CASE("v_hat matches a radial Fourier-Bessel integral") {
    for (double w : {1.0, 0.7}) {
        auto s = PotentialSpec::gaussian(w);
        for (double k : {0.5, 2.0, 3.5}) CHECK(v_hat(s, k) == doctest::Approx(radial_transform(s, k)).epsilon(1e-10));
        s.rescaled = false;
        CHECK(v_hat(s, 2.0) == doctest::Approx(radial_transform(s, 2.0)).epsilon(1e-10));
    }
}

TEST_CASE("w_hat multiplier") {
    auto s = PotentialSpec::gaussian(1.0, 0.75);
    CHECK(w_hat(s, 0.0) == 0.0);
    CHECK(w_hat(s, 1.0) == doctest::Approx(v_hat(s, 1.0)).epsilon(1e-15));
    CHECK(w_hat(s, 4.0) == doctest::Approx(8.0 * v_hat(s, 4.0)).epsilon(1e-14));
    for (double n : {0.75, 1.0, 2.0})
        for (double k : {0.1, 0.9, 3.0}) {
            s.n_exponent = n;
            CHECK(w_hat(s, k) / v_hat(s, k) == doctest::Approx(std::pow(k, 2 * n)).epsilon(1e-12));
        }
}

TEST_CASE("custom profile needs four samples") {
    auto s = PotentialSpec::custom({0, 1, 2}, {1, 0.5, 0.1});
    CHECK_THROWS_AS(v_hat(s, 0.5), InvalidSpec);
}

TEST_CASE("FGR condition scan") {
    auto g = check_fgr_condition(PotentialSpec::gaussian(1.0), 8.0, 2000);
    CHECK(g.pass);
    CHECK(g.zero_count == 0);

    // flat zero between k = 2 and k = 4
    std::vector<double> k, v;
    for (int i = 0; i <= 40; ++i) {
        double x = 0.25 * i;
        k.push_back(x);
        v.push_back(x >= 2.0 && x <= 4.0 ? 0.0 : std::exp(-x * x / 40));
    }
    auto flat = check_fgr_condition(PotentialSpec::custom(k, v), 10.0, 4000);
    CHECK_FALSE(flat.pass);
    CHECK(flat.longest_zero_run > 1.0);

    // simple zero at k = 2
    v.clear();
    for (double x : k) v.push_back((2.0 - x) * std::exp(-x * x / 8));
    auto spec = PotentialSpec::custom(k, v);
    auto simple = check_fgr_condition(spec, 12.0, 1200);
    CHECK(simple.pass);
    CHECK(simple.zero_count == 1);
    CHECK(simple.zero_count == sign_changes(spec, 12.0, 12000));
    CHECK(simple.tail_start >= 10.0);
    CHECK_THROWS_AS(check_fgr_condition(spec, 12.0, 50), InvalidSpec);
}

TEST_CASE("speed of sound and normalization") {
    PhysicalParams p;
    CHECK(p.speed_of_sound() == 1.0);
    p.mass_gas = 3;
    p.lambda = 7;
    CHECK(p.speed_of_sound() == 1.0);
    p.rescaled = false;
    CHECK(p.speed_of_sound() == doctest::Approx(std::sqrt(7.0 / 6.0)));
    CHECK(p.normalized().mass_gas == 3);
    p.rescaled = true;
    CHECK(p.normalized().mass_gas == 0.5);
    CHECK(p.normalized().dispersion() == 1.0);
}

TEST_CASE("parameter validation") {
    PhysicalParams p;
    CHECK_NOTHROW(p.validate());
    p.rho0 = 0;
    CHECK_NOTHROW(p.validate());
    p.rho0 = -1e-3;
    CHECK_THROWS_AS(p.validate(), InvalidSpec);
    p.rho0 = 0.01;
    p.n_exponent = 0.5;
    CHECK_THROWS_AS(p.validate(), InvalidSpec);
}

TEST_CASE("hypothesis B boundaries") {
    PhysicalParams p;
    CHECK(check_hypothesis_b({1.1, 0, 0}, p).pass);
    CHECK(check_hypothesis_b({0, 0, 10.0}, p).pass);
    CHECK_FALSE(check_hypothesis_b({1.09, 0, 0}, p).pass);
    CHECK_FALSE(check_hypothesis_b({10.01, 0, 0}, p).pass);
    CHECK_FALSE(check_hypothesis_b({1.05, 0, 0}, p).message.empty());
    // general units: v_s = 1/2, M = 2
    p.rescaled = false;
    p.mass_gas = 2;
    p.mass_particle = 2;
    p.lambda = 1;
    CHECK(check_hypothesis_b({1.1, 0, 0}, p).pass);
    CHECK_FALSE(check_hypothesis_b({1.0, 0, 0}, p).pass);
}
