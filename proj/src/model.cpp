#include "cherenkov/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <gsl/gsl_interp.h>

namespace cherenkov {

void PhysicalParams::validate() const {
    if (!(rho0 >= 0.0)) throw InvalidSpec("rho0 must be nonnegative");
    if (!(n_exponent >= 0.75)) throw InvalidSpec("n must be >= 3/4");
    if (!(mass_gas > 0.0) || !(mass_particle > 0.0) || !(lambda > 0.0))
        throw InvalidSpec("masses and lambda must be positive");
}

PhysicalParams PhysicalParams::normalized() const {
    PhysicalParams p = *this;
    if (p.rescaled) {
        p.mass_gas = 0.5;
        p.mass_particle = 1.0;
        p.lambda = 1.0;
    }
    return p;
}

double PhysicalParams::speed_of_sound() const {
    if (rescaled) return 1.0;
    return std::sqrt(lambda / (2.0 * mass_gas));
}

PotentialSpec PotentialSpec::gaussian(double w, double n) {
    PotentialSpec s;
    s.profile = Profile::gaussian;
    s.width = w;
    s.n_exponent = n;
    return s;
}

PotentialSpec PotentialSpec::custom(std::vector<double> k, std::vector<double> v, double n) {
    PotentialSpec s;
    s.profile = Profile::custom;
    s.k_samples = std::move(k);
    s.vhat_samples = std::move(v);
    s.n_exponent = n;
    return s;
}

namespace {

double custom_vhat(const PotentialSpec& spec, double k) {
    const auto& ks = spec.k_samples;
    const auto& vs = spec.vhat_samples;
    if (ks.size() < 4 || vs.size() != ks.size())
        throw InvalidSpec("custom profile needs at least 4 (k, vhat) samples");
    if (k < ks.front()) return vs.front();
    if (k > ks.back()) return 0.0;
    // gsl_interp without accel is reentrant; the object is rebuilt per call,
    // custom profiles are only used for validation scans
    gsl_interp* it = gsl_interp_alloc(gsl_interp_steffen, ks.size());
    gsl_interp_init(it, ks.data(), vs.data(), ks.size());
    double y = gsl_interp_eval(it, ks.data(), vs.data(), k, nullptr);
    gsl_interp_free(it);
    return y;
}

} // namespace

double v_hat(const PotentialSpec& spec, double k) {
    if (k < 0.0) throw InvalidSpec("v_hat: k must be nonnegative");
    if (spec.amplitude == 0.0) return 0.0;
    if (spec.profile == Profile::custom) return spec.amplitude * custom_vhat(spec, k);
    const double w = spec.width;
    // unitary transform of exp(-|x|^2/w^2) is (w^2/2)^{3/2} exp(-w^2 k^2/4)
    double a = spec.rescaled ? 1.0 : std::pow(w * w / 2.0, 1.5);
    return spec.amplitude * a * std::exp(-w * w * k * k / 4.0);
}

double w_hat(const PotentialSpec& spec, double k) {
    if (k == 0.0) return 0.0;
    return std::pow(k, 2.0 * spec.n_exponent) * v_hat(spec, k);
}

double v_real(const PotentialSpec& spec, double r) {
    if (spec.profile != Profile::gaussian) throw InvalidSpec("v_real: gaussian profile only");
    const double w = spec.width;
    double a = spec.rescaled ? std::pow(2.0 / (w * w), 1.5) : 1.0;
    return spec.amplitude * a * std::exp(-r * r / (w * w));
}

FgrReport check_fgr_condition(const PotentialSpec& spec, double k_max, int samples) {
    if (samples < 100) throw InvalidSpec("check_fgr_condition: samples must be >= 100");
    const double tol = 1e-10;
    const double h = k_max / samples;
    FgrReport rep;
    std::vector<double> v(samples + 1);
    for (int i = 0; i <= samples; ++i) v[i] = v_hat(spec, i * h);

    int i = 0;
    double prev_sign = 0.0;
    while (i <= samples) {
        if (std::abs(v[i]) < tol) {
            int j = i;
            while (j + 1 <= samples && std::abs(v[j + 1]) < tol) ++j;
            double a = i * h, b = j * h;
            if (j == samples && i > 0) {
                // run reaching k_max is the decay tail, not a zero set
                rep.tail_start = a;
                break;
            }
            rep.zero_intervals.push_back({a, b});
            rep.longest_zero_run = std::max(rep.longest_zero_run, b - a);
            ++rep.zero_count;
            double next_sign = (j + 1 <= samples) ? std::copysign(1.0, v[j + 1]) : 0.0;
            if (prev_sign != 0.0 && next_sign != 0.0 && prev_sign != next_sign) ++rep.sign_changes;
            i = j + 1;
            continue;
        }
        double s = std::copysign(1.0, v[i]);
        if (prev_sign != 0.0 && s != prev_sign && std::abs(v[i - 1]) >= tol) {
            // zero crossed between two samples
            ++rep.sign_changes;
            ++rep.zero_count;
            rep.zero_intervals.push_back({(i - 1) * h, i * h});
        }
        prev_sign = s;
        ++i;
    }
    rep.pass = rep.longest_zero_run <= 2.0 * k_max / samples;
    return rep;
}

HypothesisReport check_hypothesis_b(const Vec3& P0, const PhysicalParams& params) {
    HypothesisReport r;
    const double vs = params.speed_of_sound();
    const double v = norm3(P0) / params.normalized().mass_particle;
    const double lo = 1.1 * vs, hi = 10.0 * vs;
    const double slack = 1e-12 * hi;
    r.value = v;
    r.bound = lo;
    r.pass = (v >= lo - slack) && (v <= hi + slack);
    if (!r.pass)
        r.message = "hypothesis (B): |P0|/M = " + std::to_string(v) + " outside [" + std::to_string(lo) +
                    ", " + std::to_string(hi) + "]";
    return r;
}

} // namespace cherenkov
