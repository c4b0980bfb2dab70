#include "cherenkov/numerics.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gsl/gsl_fit.h>
#include <gsl/gsl_integration.h>

namespace cherenkov {

DecayFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    DecayFit f;
    std::vector<double> lx, ly;
    for (size_t i = 0; i < x.size() && i < y.size(); ++i) {
        double a = std::abs(y[i]);
        if (x[i] > 0 && a > 0 && std::isfinite(a)) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(a));
        }
    }
    f.points = static_cast<int>(lx.size());
    if (f.points < 3) {
        f.note = "too few nonzero points";
        return f;
    }
    double c0, c1, cov00, cov01, cov11, sumsq;
    gsl_fit_linear(lx.data(), 1, ly.data(), 1, lx.size(), &c0, &c1, &cov00, &cov01, &cov11, &sumsq);
    f.slope = c1;
    f.intercept = c0;
    f.stderr_ = std::sqrt(cov11);
    f.window_lo = std::exp(lx.front());
    f.window_hi = std::exp(lx.back());
    f.ok = true;
    return f;
}

std::vector<double> logspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
    return v;
}

template <class T>
std::pair<T, double> richardson(const std::vector<double>& eps, const std::vector<T>& vals) {
    // Neville tableau evaluated at eps = 0
    const size_t m = eps.size();
    std::vector<std::vector<T>> t(m);
    for (size_t i = 0; i < m; ++i) t[i].push_back(vals[i]);
    for (size_t j = 1; j < m; ++j)
        for (size_t i = j; i < m; ++i) {
            T a = t[i][j - 1], b = t[i - 1][j - 1];
            t[i].push_back((eps[i - j] * a - eps[i] * b) / (eps[i - j] - eps[i]));
        }
    T best = t[m - 1][m - 1];
    double err = m >= 2 ? std::abs(best - t[m - 1][m - 2]) : std::abs(best);
    return {best, err};
}

template std::pair<double, double> richardson(const std::vector<double>&, const std::vector<double>&);
template std::pair<cplx, double> richardson(const std::vector<double>&, const std::vector<cplx>&);

const GaussRule& gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GaussRule g;
    gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(-1.0, 1.0, i, &g.x[i], &g.w[i], t);
    gsl_integration_glfixed_table_free(t);
    return cache.emplace(n, std::move(g)).first->second;
}

const KronrodRule& kronrod15() {
    static const KronrodRule rule = [] {
        using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
        KronrodRule r;
        const auto& x = GK::abscissa();
        const auto& wk = GK::weights();
        const auto& wg = boost::math::quadrature::gauss<double, 7>::weights();
        // boost lists nonnegative nodes; Gauss nodes sit at the even positions
        for (size_t i = 0; i < x.size(); ++i) {
            r.x.push_back(x[i]);
            r.wk.push_back(wk[i]);
            r.wg.push_back(i % 2 == 0 ? wg[i / 2] : 0.0);
        }
        return r;
    }();
    return rule;
}

double gk_real(const std::function<double(double)>& f, double a, double b, double tol, double* err, int depth) {
    double e = 0.0;
    double r = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, depth, tol, &e);
    if (err) *err = e;
    return r;
}

cplx gk_complex(const std::function<cplx(double)>& f, double a, double b, double tol, double* err, int depth) {
    double e = 0.0;
    cplx r = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, depth, tol, &e);
    if (err) *err = e;
    return r;
}

} // namespace cherenkov
