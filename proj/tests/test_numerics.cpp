#include <doctest.h>

#include <cmath>
#include <random>

#include "cherenkov/numerics.hpp"

using namespace cherenkov;

TEST_CASE("fit_loglog recovers an exact power law") {
    auto x = logspace(1.0, 100.0, 12);
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -1.25));
    auto f = fit_loglog(x, y);
    CHECK(f.ok);
    CHECK(f.slope == doctest::Approx(-1.25).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(f.stderr_ < 1e-12);
    CHECK(f.points == 12);
}

TEST_CASE("fit_loglog drops zero and non-finite samples") {
    std::vector<double> x{1, 2, 4, 8, 16};
    std::vector<double> y{1, 0, 0.0625, NAN, 1.0 / 256};
    auto f = fit_loglog(x, y);
    CHECK(f.points == 3);
    CHECK(f.slope == doctest::Approx(-2.0));
}

TEST_CASE("fit_loglog stderr matches a direct regression") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 0.05);
    auto x = logspace(1.0, 1000.0, 20);
    std::vector<double> y, lx, ly;
    for (double v : x) {
        double e = noise(rng);
        y.push_back(std::pow(v, -0.5) * std::exp(e));
        lx.push_back(std::log(v));
        ly.push_back(-0.5 * std::log(v) + e);
    }
    // textbook normal equations
    double n = lx.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    double b = (n * sxy - sx * sy) / (n * sxx - sx * sx), a = (sy - b * sx) / n, ss = 0;
    for (size_t i = 0; i < lx.size(); ++i) ss += std::pow(ly[i] - a - b * lx[i], 2);
    double se = std::sqrt(ss / (n - 2) / (sxx - sx * sx / n));
    auto f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(b).epsilon(1e-10));
    CHECK(f.stderr_ == doctest::Approx(se).epsilon(1e-8));
}

TEST_CASE("logspace endpoints") {
    auto v = logspace(1e-3, 1e-1, 9);
    REQUIRE(v.size() == 9);
    CHECK(v.front() == doctest::Approx(1e-3));
    CHECK(v.back() == doctest::Approx(1e-1));
    CHECK(v[4] == doctest::Approx(1e-2));
}

TEST_CASE("richardson removes polynomial error in eps") {
    std::vector<double> eps{1e-2, 5e-3, 2.5e-3, 1.25e-3}, vals;
    for (double e : eps) vals.push_back(2.0 + 3.0 * e - 7.0 * e * e + 0.5 * e * e * e);
    auto [lim, err] = richardson(eps, vals);
    CHECK(lim == doctest::Approx(2.0).epsilon(1e-13));
    // spread between the two top orders sees only the cubic term
    CHECK(err < 1e-7);
}

TEST_CASE("gauss_legendre integrates polynomials exactly") {
    const auto& g = gauss_legendre(8);
    double s = 0;
    for (size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * std::pow(g.x[i], 14);
    CHECK(s == doctest::Approx(2.0 / 15).epsilon(1e-14));
    double c = composite_gl([](double x) { return std::cos(x); }, 0.0, 3.0, 4);
    CHECK(c == doctest::Approx(std::sin(3.0)).epsilon(1e-14));
}

TEST_CASE("kronrod15 weights sum to one half interval") {
    const auto& k = kronrod15();
    double sk = 0, sg = 0;
    for (size_t i = 0; i < k.x.size(); ++i) {
        double m = k.x[i] == 0 ? 1.0 : 2.0;
        sk += m * k.wk[i];
        sg += m * k.wg[i];
    }
    CHECK(sk == doctest::Approx(2.0));
    CHECK(sg == doctest::Approx(2.0));
}

TEST_CASE("qag on oscillatory and kinked integrands") {
    auto r = qag([](double x) { return cplx(std::cos(40 * x), std::sin(40 * x)); }, 0.0, 2.0, 1e-13, 1e-12);
    CHECK(r.converged);
    cplx exact = (std::exp(cplx(0, 80.0)) - 1.0) / cplx(0, 40.0);
    CHECK(std::abs(r.value - exact) < 1e-11);
    auto k = qag([](double x) { return cplx(std::abs(x - 0.3), 0.0); }, 0.0, 1.0, 1e-14, 1e-13, 400, {0.3});
    CHECK(k.value.real() == doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-13));
}

TEST_CASE("gk_real and gk_complex") {
    double e = 0;
    double v = gk_real([](double x) { return std::exp(-x * x); }, -6.0, 6.0, 1e-12, &e);
    CHECK(v == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
    cplx c = gk_complex([](double x) { return std::exp(cplx(0, x)); }, 0.0, M_PI, 1e-12);
    CHECK(std::abs(c - cplx(0, 2)) < 1e-11);
}

TEST_CASE("parallel_for visits each index once") {
    std::vector<int> hits(37, 0);
    parallel_for(hits.size(), 4, [&](size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
}
