#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <queue>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace cherenkov {

using cplx = std::complex<double>;

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_ = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    int points = 0;
    bool ok = false;
    std::string note;
};

// least squares of log|y| against log x; points with y == 0 or non-finite are dropped
DecayFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

std::vector<double> logspace(double lo, double hi, int n);

// Richardson extrapolation to eps -> 0 assuming an error series in powers of eps.
// Returns the limit and the spread between the two highest orders as an error estimate.
template <class T>
std::pair<T, double> richardson(const std::vector<double>& eps, const std::vector<T>& vals);

// Gauss-Legendre rule on [-1, 1]
struct GaussRule {
    std::vector<double> x, w;
};
const GaussRule& gauss_legendre(int n);

// composite Gauss-Legendre on [a, b] with `panels` equal panels of `order` points
template <class F>
auto composite_gl(F&& f, double a, double b, int panels, int order = 16) -> decltype(f(a)) {
    const GaussRule& g = gauss_legendre(order);
    using R = decltype(f(a));
    R sum{};
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h;
        R s{};
        for (int i = 0; i < order; ++i) s += g.w[i] * f(c + 0.5 * h * g.x[i]);
        sum += s * (0.5 * h);
    }
    return sum;
}

// adaptive Gauss-Kronrod on a finite interval (real or complex integrand)
double gk_real(const std::function<double(double)>& f, double a, double b, double tol, double* err = nullptr,
               int depth = 18);
cplx gk_complex(const std::function<cplx(double)>& f, double a, double b, double tol, double* err = nullptr,
                int depth = 18);

// runs body(i) for i in [0, n) on up to `threads` workers, strided assignment
template <class F>
void parallel_for(size_t n, int threads, F&& body) {
    const size_t t = std::max<size_t>(1, std::min<size_t>(threads > 0 ? threads : 1, n));
    if (t == 1) {
        for (size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    for (size_t w = 0; w < t; ++w)
        pool.emplace_back([&, w] {
            for (size_t i = w; i < n; i += t) body(i);
        });
    for (auto& th : pool) th.join();
}

// 15-point Kronrod rule with its embedded 7-point Gauss rule, nodes on [0, 1] of the half interval
struct KronrodRule {
    std::vector<double> x, wk, wg; // x[i] >= 0, wg nonzero only at Gauss nodes
};
const KronrodRule& kronrod15();

struct QagResult {
    cplx value{};
    double err = 0.0;
    int intervals = 0;
    bool converged = false;
};

// Globally adaptive Gauss-Kronrod (bisect the interval with the largest error) for
// complex integrands. Stops when the summed error is below max(epsabs, epsrel |I|).
// `breaks` are interior points where the integrand has a kink.
template <class F>
QagResult qag(F&& f, double a, double b, double epsabs, double epsrel, int limit = 400,
              const std::vector<double>& breaks = {}) {
    const KronrodRule& r = kronrod15();
    struct Seg {
        double a, b;
        cplx v;
        double e;
        bool operator<(const Seg& o) const { return e < o.e; }
    };
    auto eval = [&](double lo, double hi) {
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        cplx k{}, g{};
        for (size_t i = 0; i < r.x.size(); ++i) {
            if (r.x[i] == 0.0) {
                cplx fc = f(c);
                k += r.wk[i] * fc;
                g += r.wg[i] * fc;
            } else {
                cplx s = f(c - h * r.x[i]) + f(c + h * r.x[i]);
                k += r.wk[i] * s;
                g += r.wg[i] * s;
            }
        }
        return Seg{lo, hi, k * h, std::abs((k - g) * h)};
    };
    std::vector<double> pts{a};
    for (double p : breaks)
        if (p > a && p < b) pts.push_back(p);
    std::sort(pts.begin() + 1, pts.end());
    pts.push_back(b);
    std::priority_queue<Seg> q;
    QagResult res;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i + 1] <= pts[i]) continue;
        Seg s = eval(pts[i], pts[i + 1]);
        res.value += s.v;
        res.err += s.e;
        q.push(s);
    }
    while (true) {
        if (res.err <= std::max(epsabs, epsrel * std::abs(res.value))) {
            res.converged = true;
            break;
        }
        if (static_cast<int>(q.size()) >= limit || q.empty()) break;
        Seg s = q.top();
        const double m = 0.5 * (s.a + s.b);
        if (!(m > s.a && m < s.b)) break;
        q.pop();
        Seg l = eval(s.a, m), h = eval(m, s.b);
        res.value += l.v + h.v - s.v;
        res.err += l.e + h.e - s.e;
        q.push(l);
        q.push(h);
    }
    // resum to shed accumulated rounding from the running updates
    res.value = 0;
    res.err = 0;
    res.intervals = static_cast<int>(q.size());
    while (!q.empty()) {
        res.value += q.top().v;
        res.err += q.top().e;
        q.pop();
    }
    if (!res.converged) res.converged = res.err <= std::max(epsabs, epsrel * std::abs(res.value));
    return res;
}

} // namespace cherenkov
