#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "cherenkov/dynamics.hpp"
#include "cherenkov/field.hpp"

using namespace cherenkov;

namespace {

// n = 1 makes W = -Laplacian V, available in closed form for the gaussian
const double kA = std::pow(2.0, 1.5);
double W1(const Vec3& y) {
    double r2 = dot3(y, y);
    return kA * (6.0 - 4.0 * r2) * std::exp(-r2);
}
Vec3 gradW1(const Vec3& y) {
    double r2 = dot3(y, y);
    double c = kA * std::exp(-r2) * (8.0 * r2 - 20.0);
    return {c * y[0], c * y[1], c * y[2]};
}

struct Bump {
    Vec3 c;
    double s, a;
};

Vec3 min_image(const Vec3& x, const Vec3& c, double L) {
    Vec3 d;
    for (int j = 0; j < 3; ++j) {
        d[j] = x[j] - c[j];
        d[j] -= L * std::round(d[j] / L);
    }
    return d;
}

template <class F>
std::vector<double> sample(const GridSpec& g, F&& f) {
    const int N = g.points;
    const double h = g.spacing();
    std::vector<double> out(static_cast<size_t>(N) * N * N);
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (int iz = 0; iz < N; ++iz) out[(static_cast<size_t>(ix) * N + iy) * N + iz] = f(Vec3{ix * h, iy * h, iz * h});
    return out;
}

double bumps(const std::vector<Bump>& bs, const Vec3& x, double L) {
    double s = 0;
    for (auto& b : bs) {
        Vec3 d = min_image(x, b.c, L);
        s += b.a * std::exp(-dot3(d, d) / (b.s * b.s));
    }
    return s;
}

Vec3 bumps_grad(const std::vector<Bump>& bs, const Vec3& x, double L) {
    Vec3 g{0, 0, 0};
    for (auto& b : bs) {
        Vec3 d = min_image(x, b.c, L);
        double e = -2.0 * b.a * std::exp(-dot3(d, d) / (b.s * b.s)) / (b.s * b.s);
        for (int j = 0; j < 3; ++j) g[j] += e * d[j];
    }
    return g;
}

std::vector<Bump> random_bumps(std::mt19937_64& rng, double L, int count) {
    std::uniform_real_distribution<double> pos(0, L), wid(0.8, 1.2), amp(-1, 1);
    std::vector<Bump> out;
    for (int i = 0; i < count; ++i) out.push_back({{pos(rng), pos(rng), pos(rng)}, wid(rng), amp(rng)});
    return out;
}

double max_diff(const FieldState& a, const FieldState& b) {
    double m = 0;
    for (size_t i = 0; i < a.modes(); ++i) m = std::max({m, std::abs(a.u_hat[i] - b.u_hat[i]), std::abs(a.v_hat[i] - b.v_hat[i])});
    return m;
}

double max_abs(const FieldState& a) {
    double m = 0;
    for (size_t i = 0; i < a.modes(); ++i) m = std::max({m, std::abs(a.u_hat[i]), std::abs(a.v_hat[i])});
    return m;
}

FieldState noise_field(const GridSpec& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, 1);
    auto u = sample(g, [&](const Vec3&) { return n(rng); });
    auto v = sample(g, [&](const Vec3&) { return n(rng); });
    return FieldState::from_real(g, u, v);
}

const GridSpec kFine{12.0, 48, 0.0, 0.0};

} // namespace

TEST_CASE("real-space round trip") {
    GridSpec g{8.0, 16, 0, 0};
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 1);
    auto u = sample(g, [&](const Vec3&) { return n(rng); });
    auto v = sample(g, [&](const Vec3&) { return n(rng); });
    auto s = FieldState::from_real(g, u, v);
    std::vector<double> u2, v2;
    s.to_real(u2, v2);
    for (size_t i = 0; i < u.size(); ++i) {
        CHECK(u2[i] == doctest::Approx(u[i]).epsilon(1e-12));
        CHECK(v2[i] == doctest::Approx(v[i]).epsilon(1e-12));
    }
    CHECK_THROWS(FieldState::from_real(g, {1.0}, {1.0}));
}

TEST_CASE("grid validation") {
    CHECK_NOTHROW((GridSpec{32, 64, 6, 1}.validate(1.0)));
    CHECK_THROWS_AS((GridSpec{32, 48, 0, 0}.validate(1.0)), InvalidSpec);
    CHECK_THROWS_AS((GridSpec{32, 32, 0, 0}.validate(1.0)), InvalidSpec);
    CHECK_THROWS_AS((GridSpec{32, 64, 9, 1}.validate(1.0)), InvalidSpec);
}

TEST_CASE("mode symbol reconstructs H0") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5, 5);
    PhysicalParams p;
    for (int t = 0; t < 100; ++t) {
        Vec3 k{u(rng), u(rng), u(rng)};
        auto m = mode_symbol(k, p);
        double k2 = dot3(k, k);
        CHECK(m.h12 == doctest::Approx(k2).epsilon(1e-12));
        CHECK(m.h21 == doctest::Approx(-(k2 + 1)).epsilon(1e-12));
        CHECK(m.L_k == doctest::Approx(std::sqrt(k2 * (k2 + 1))).epsilon(1e-12));
        Eigen::Matrix2cd A;
        A << m.a11, m.a12, m.a21, m.a22;
        Eigen::Matrix2cd D = Eigen::Matrix2cd::Zero();
        D(0, 0) = cplx(0, m.L_k);
        D(1, 1) = cplx(0, -m.L_k);
        Eigen::Matrix2cd H = A * D * A.inverse();
        double scale = 1 + k2;
        CHECK(std::abs(H(0, 0)) < 1e-12 * scale);
        CHECK(std::abs(H(1, 1)) < 1e-12 * scale);
        CHECK(std::abs(H(0, 1) - k2) < 1e-12 * scale);
        CHECK(std::abs(H(1, 0) + (k2 + 1)) < 1e-12 * scale);
    }
}

TEST_CASE("single mode propagation against a dense matrix exponential") {
    // L = 2 pi puts index 1 at |k| = 1
    GridSpec g{2 * M_PI, 16, 0, 0};
    PhysicalParams p;
    const size_t nz = 9, idx = (1 * 16 + 0) * nz + 0;
    auto s = FieldState::zeros(g);
    s.u_hat[idx] = cplx(0.3, -0.2);
    s.v_hat[idx] = cplx(-0.1, 0.7);
    const double Lk = std::sqrt(2.0), dt = M_PI / Lk;
    Eigen::Matrix2d M;
    M << 0, 1, -2, 0;
    Eigen::Matrix2d E = (M * dt).exp();
    auto t = s;
    propagate_linear(t, dt, {0, 0, 0}, p);
    cplx u = E(0, 0) * s.u_hat[idx] + E(0, 1) * s.v_hat[idx];
    cplx v = E(1, 0) * s.u_hat[idx] + E(1, 1) * s.v_hat[idx];
    CHECK(std::abs(t.u_hat[idx] - u) < 1e-13);
    CHECK(std::abs(t.v_hat[idx] - v) < 1e-13);
    // half period in the diagonal basis is a sign flip
    CHECK(std::abs(t.u_hat[idx] + s.u_hat[idx]) < 1e-13);
    CHECK(std::abs(t.v_hat[idx] + s.v_hat[idx]) < 1e-13);

    // general K and lambda, arbitrary dt
    PhysicalParams q;
    q.rescaled = false;
    q.mass_gas = 0.8;
    q.lambda = 2.5;
    const double K = 1.0 / (2 * 0.8), d2 = 0.37;
    M << 0, K, -(K + 2.5), 0;
    E = (M * d2).exp();
    t = s;
    propagate_linear(t, d2, {0, 0, 0}, q);
    CHECK(std::abs(t.u_hat[idx] - (E(0, 0) * s.u_hat[idx] + E(0, 1) * s.v_hat[idx])) < 1e-13);
    CHECK(std::abs(t.v_hat[idx] - (E(1, 0) * s.u_hat[idx] + E(1, 1) * s.v_hat[idx])) < 1e-13);
}

TEST_CASE("propagation group property") {
    GridSpec g{16, 16, 0, 0};
    PhysicalParams p;
    auto s = noise_field(g, 5);
    auto t = s;
    propagate_linear(t, 0.0, {0.4, -0.2, 1.0}, p);
    CHECK(max_diff(s, t) == 0.0);
    propagate_linear(t, 0.3, {0.4, -0.2, 1.0}, p);
    CHECK(max_diff(s, t) > 1e-3 * max_abs(s));
    propagate_linear(t, -0.3, {0.4, -0.2, 1.0}, p);
    CHECK(max_diff(s, t) < 1e-10 * max_abs(s));
    auto bad = s;
    bad.u_hat[3] = cplx(NAN, 0);
    CHECK_THROWS(propagate_linear(bad, 0.1, {0, 0, 0}, p));
}

TEST_CASE("linear flow conserves the field energy") {
    PhysicalParams p;
    p.rho0 = 0;
    auto s = noise_field(GridSpec{16, 16, 0, 0}, 9);
    auto spec = PotentialSpec::gaussian(1.0);
    double e0 = hamiltonian(s, {0, 0, 0}, {0, 0, 0}, p, spec);
    for (int i = 0; i < 5; ++i) {
        double before = hamiltonian(s, {0, 0, 0}, {0, 0, 0}, p, spec);
        propagate_linear(s, 0.01, {0, 0, 0}, p);
        double after = hamiltonian(s, {0, 0, 0}, {0, 0, 0}, p, spec);
        CHECK(std::abs(after - before) < 1e-10 * std::abs(e0));
    }
}

TEST_CASE("forcing") {
    auto spec = PotentialSpec::gaussian(1.0, 1.0);
    PhysicalParams p;
    p.n_exponent = 1.0;
    p.rho0 = 0.04;
    const Vec3 X{5.3, 6.1, 4.7};

    SUBCASE("rho0 = 0 is the identity") {
        PhysicalParams z = p;
        z.rho0 = 0;
        auto s = noise_field(GridSpec{8, 16, 0, 0}, 1);
        auto t = s;
        apply_forcing(t, X, 0.1, z, spec);
        CHECK(max_diff(s, t) == 0.0);
    }
    SUBCASE("difference quotient is -sqrt(rho0) W(x - X)") {
        auto s = FieldState::zeros(kFine);
        for (double dt : {1e-2, 1e-4}) {
            auto t = s;
            apply_forcing(t, X, dt, p, spec);
            std::vector<double> u, v;
            t.to_real(u, v);
            auto w = sample(kFine, [&](const Vec3& x) { return W1(min_image(x, X, kFine.box_length)); });
            double err = 0, um = 0;
            for (size_t i = 0; i < v.size(); ++i) {
                err = std::max(err, std::abs(v[i] / dt + std::sqrt(p.rho0) * w[i]));
                um = std::max(um, std::abs(u[i]));
            }
            CHECK(err < 1e-9);
            CHECK(um < 1e-14);
        }
    }
    SUBCASE("two half steps equal one step") {
        auto s = noise_field(GridSpec{8, 16, 0, 0}, 2);
        auto a = s, b = s;
        apply_forcing(a, X, 0.2, p, spec);
        apply_forcing(b, X, 0.1, p, spec);
        apply_forcing(b, X, 0.1, p, spec);
        CHECK(max_diff(a, b) < 1e-12 * max_abs(a));
    }
}

TEST_CASE("force on the particle") {
    auto spec = PotentialSpec::gaussian(1.0, 1.0);
    PhysicalParams p;
    p.n_exponent = 1.0;
    p.rho0 = 0.01;
    const Vec3 X{6.2, 5.9, 6.05};
    const double L = kFine.box_length, h3 = std::pow(kFine.spacing(), 3);

    auto zero = FieldState::zeros(kFine);
    auto F0 = force_on_particle(zero, X, p, spec);
    CHECK(norm3(F0) == 0.0);

    // beta = W^X: <grad W, W> vanishes
    auto wx = sample(kFine, [&](const Vec3& x) { return W1(min_image(x, X, L)); });
    auto self = FieldState::from_real(kFine, wx, std::vector<double>(wx.size(), 0.0));
    CHECK(norm3(force_on_particle(self, X, p, spec)) < 1e-12);

    std::vector<Bump> b{{{X[0] + 1.3, X[1], X[2]}, 1.0, 0.8}};
    auto u = sample(kFine, [&](const Vec3& x) { return bumps(b, x, L); });
    auto s = FieldState::from_real(kFine, u, std::vector<double>(u.size(), 0.0));
    Vec3 F = force_on_particle(s, X, p, spec);
    Vec3 ref{0, 0, 0};
    const int N = kFine.points;
    const double hh = kFine.spacing();
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (int iz = 0; iz < N; ++iz) {
                Vec3 x{ix * hh, iy * hh, iz * hh};
                Vec3 gw = gradW1(min_image(x, X, L));
                double uu = u[(static_cast<size_t>(ix) * N + iy) * N + iz];
                for (int j = 0; j < 3; ++j) ref[j] += std::sqrt(p.rho0) * h3 * gw[j] * uu;
            }
    CHECK(std::abs(F[0]) > 1e-3);
    CHECK(std::abs(F[1]) < 1e-12);
    CHECK(std::abs(F[2]) < 1e-12);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(F[j] - ref[j]) < 1e-10 * std::abs(ref[0]));

    // F = -dH/dX
    const double e = 1e-4;
    auto H = [&](double x0) { return hamiltonian(s, {x0, X[1], X[2]}, {0, 0, 0}, p, spec); };
    double fd = -(H(X[0] + e) - H(X[0] - e)) / (2 * e);
    CHECK(fd == doctest::Approx(F[0]).epsilon(1e-6));
}

TEST_CASE("force translation covariance") {
    auto spec = PotentialSpec::gaussian(1.0);
    PhysicalParams p;
    GridSpec g{16, 32, 0, 0};
    std::mt19937_64 rng(21);
    auto b = random_bumps(rng, g.box_length, 4);
    auto u = sample(g, [&](const Vec3& x) { return bumps(b, x, g.box_length); });
    auto s = FieldState::from_real(g, u, std::vector<double>(u.size(), 0.0));
    std::uniform_real_distribution<double> d(-3, 3);
    for (int t = 0; t < 5; ++t) {
        Vec3 X{8 + d(rng), 8 + d(rng), 8 + d(rng)}, a{d(rng), d(rng), d(rng)};
        Vec3 F = force_on_particle(s, X, p, spec);
        auto s2 = s;
        translate(s2, a);
        Vec3 F2 = force_on_particle(s2, {X[0] + a[0], X[1] + a[1], X[2] + a[2]}, p, spec);
        for (int j = 0; j < 3; ++j) CHECK(std::abs(F2[j] - F[j]) < 1e-10 * (1 + norm3(F)));
    }
}

TEST_CASE("hamiltonian") {
    auto spec = PotentialSpec::gaussian(1.0);
    PhysicalParams p;
    auto z = FieldState::zeros(GridSpec{8, 16, 0, 0});
    CHECK(hamiltonian(z, {1, 2, 3}, {0, 0, 0}, p, spec) == 0.0);
    CHECK(hamiltonian(z, {1, 2, 3}, {1, 0, 0}, p, spec) == doctest::Approx(0.5).epsilon(1e-15));

    // rho0 = 0: 1/2 int |grad u|^2 + |grad v|^2 + u^2 by a real-space sum
    p.rho0 = 0;
    std::mt19937_64 rng(33);
    const double L = kFine.box_length;
    auto bu = random_bumps(rng, L, 3), bv = random_bumps(rng, L, 3);
    auto u = sample(kFine, [&](const Vec3& x) { return bumps(bu, x, L); });
    auto v = sample(kFine, [&](const Vec3& x) { return bumps(bv, x, L); });
    auto s = FieldState::from_real(kFine, u, v);
    double ref = 0;
    const int N = kFine.points;
    const double h = kFine.spacing();
    for (int ix = 0; ix < N; ++ix)
        for (int iy = 0; iy < N; ++iy)
            for (int iz = 0; iz < N; ++iz) {
                Vec3 x{ix * h, iy * h, iz * h};
                Vec3 gu = bumps_grad(bu, x, L), gv = bumps_grad(bv, x, L);
                double uu = bumps(bu, x, L);
                ref += 0.5 * (dot3(gu, gu) + dot3(gv, gv) + uu * uu);
            }
    ref *= h * h * h;
    CHECK(hamiltonian(s, {0, 0, 0}, {0, 0, 0}, p, spec) == doctest::Approx(ref).epsilon(1e-8));

    // the integrator's cached form agrees
    p.rho0 = 0.02;
    Integrator in(p, spec, kFine, false);
    auto s2 = s;
    s2.frame_offset = {0, 0, 0};
    CHECK(in.energy(s2, {0.3, 0, 0}) == doctest::Approx(hamiltonian(s2, kFine.center(), {0.3, 0, 0}, p, spec)).epsilon(1e-12));
}

TEST_CASE("sponge") {
    GridSpec g{16, 16, 4, 2};
    auto one = sample(g, [](const Vec3&) { return 1.0; });
    auto half = sample(g, [](const Vec3&) { return 0.5; });
    auto s = FieldState::from_real(g, one, half);

    auto t = s;
    apply_sponge(t, 0.1, GridSpec{16, 16, 4, 0});
    CHECK(max_diff(s, t) == 0.0);

    apply_sponge(t, 0.1, g);
    std::vector<double> u, v;
    t.to_real(u, v);
    auto gam = sponge_profile(g);
    CHECK(gam[0] == doctest::Approx(2.0));
    CHECK(u[0] == doctest::Approx(std::exp(-0.2)).epsilon(1e-12));
    CHECK(v[0] == doctest::Approx(0.5 * std::exp(-0.2)).epsilon(1e-12));
    for (size_t i = 0; i < u.size(); ++i) CHECK(u[i] == doctest::Approx(std::exp(-0.1 * gam[i])).epsilon(1e-12));

    // field living where the rate vanishes
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> a(gam.size()), b(gam.size());
    for (size_t i = 0; i < gam.size(); ++i) {
        a[i] = gam[i] == 0 ? n(rng) : 0.0;
        b[i] = gam[i] == 0 ? n(rng) : 0.0;
    }
    auto in = FieldState::from_real(g, a, b);
    auto in2 = in;
    apply_sponge(in2, 0.5, g);
    CHECK(max_diff(in, in2) < 1e-14 * max_abs(in) * 16);
    CHECK(interior_l2(in) == doctest::Approx(field_l2(in)).epsilon(1e-12));
}

TEST_CASE("translate shifts the real-space field") {
    GridSpec g{16, 32, 0, 0};
    std::vector<Bump> b{{{7, 8, 9}, 1.5, 1.0}};
    auto u = sample(g, [&](const Vec3& x) { return bumps(b, x, 16); });
    auto s = FieldState::from_real(g, u, u);
    translate(s, {1.25, -0.5, 0.3});
    std::vector<Bump> b2{{{8.25, 7.5, 9.3}, 1.5, 1.0}};
    auto ref = sample(g, [&](const Vec3& x) { return bumps(b2, x, 16); });
    std::vector<double> tu, tv;
    s.to_real(tu, tv);
    double err = 0;
    for (size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(tu[i] - ref[i]));
    CHECK(err < 1e-9);
}

TEST_CASE("hypothesis A") {
    GridSpec g{16, 32, 0, 0};
    auto z = FieldState::zeros(g);
    auto r = check_hypothesis_a(z, g.center(), 0.5, 0.01);
    CHECK(r.pass);
    CHECK(r.value == 0.0);
    std::vector<Bump> b{{g.center(), 1.0, 0.5}};
    auto u = sample(g, [&](const Vec3& x) { return bumps(b, x, 16); });
    auto s = FieldState::from_real(g, u, u);
    auto bad = check_hypothesis_a(s, g.center(), 0.5, 0.01);
    CHECK_FALSE(bad.pass);
    CHECK(bad.value > field_l2(s));
}

TEST_CASE("snapshot round trip") {
    GridSpec g{8, 16, 0, 0};
    auto s = noise_field(g, 8);
    s.time = 1.25;
    s.frame_offset = {0.5, -1, 2};
    auto path = (std::filesystem::temp_directory_path() / "cherenkov_snapshot_test.bin").string();
    write_snapshot(path, s);
    auto r = read_snapshot(path);
    std::filesystem::remove(path);
    CHECK(r.grid.points == 16);
    CHECK(r.time == 1.25);
    CHECK(r.frame_offset[1] == -1);
    CHECK(max_diff(r, s) < 1e-12 * max_abs(s));
    CHECK_THROWS(read_snapshot(path));
}
