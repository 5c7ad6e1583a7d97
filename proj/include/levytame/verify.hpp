#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "levytame/errors.hpp"
#include "levytame/model.hpp"
#include "levytame/rng.hpp"

namespace levytame {

// All constraint arithmetic is done on natural logarithms: at q in the hundreds the individual
// terms span well over a thousand decimal orders of magnitude.

/// ln m_p for the standard normal, p even and >= 2: m_{2k} = (2k)! / (2^k k!) = (2k-1)!!.
inline double normal_moment(int p) {
    if (p < 2 || p % 2 != 0) throw ConfigError("normal_moment: p must be even and >= 2");
    const double k = p / 2;
    return std::lgamma(2.0 * k + 1.0) - k * std::numbers::ln2 - std::lgamma(k + 1.0);
}

/// ln E|Z|^p for Z ~ N(0,1) and any real p > -1: ln(2^{p/2} Gamma((p+1)/2) / sqrt(pi)).
/// Agrees with normal_moment on even p; odd orders are an extension.
inline double normal_abs_moment_log(double p) {
    if (!(p > -1.0)) throw ConfigError("normal_abs_moment_log: p must exceed -1");
    return 0.5 * p * std::numbers::ln2 + std::lgamma(0.5 * (p + 1.0)) - 0.5 * std::log(std::numbers::pi);
}

/// ln(sum exp(terms)); -inf terms are zeros.
inline double log_sum_exp(std::initializer_list<double> terms) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double t : terms) mx = std::max(mx, t);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
}

/// lhs <= rhs, reported both linearly and in log10. `log_scale` is set when the linear lhs does not
/// fit in a double; `margin` is then the log10 margin, otherwise rhs - lhs.
struct ConstraintReport {
    std::string id;
    double lhs = 0.0;
    double rhs = 0.0;
    double lhs_log10 = 0.0;
    double rhs_log10 = 0.0;
    double margin_log10 = 0.0;
    double margin = 0.0;
    bool log_scale = false;
    bool satisfied = false;
};

namespace detail {

inline double safe_log(double x) { return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity(); }

inline ConstraintReport make_report(std::string id, double lhs_ln, double rhs_ln) {
    ConstraintReport r;
    r.id = std::move(id);
    r.lhs = std::exp(lhs_ln);
    r.rhs = std::exp(rhs_ln);
    r.lhs_log10 = lhs_ln / std::numbers::ln10;
    r.rhs_log10 = rhs_ln / std::numbers::ln10;
    r.margin_log10 = r.rhs_log10 - r.lhs_log10;
    r.satisfied = lhs_ln <= rhs_ln;
    r.log_scale = std::isfinite(lhs_ln) && !std::isnormal(r.lhs);
    r.margin = r.log_scale ? r.margin_log10 : r.rhs - r.lhs;
    return r;
}

}  // namespace detail

/// sigma_hat^2 (q-1) + 2^{q-1} (q-1) (gamma_hat^2 m_2 + gamma_hat^q m_q) <= 2 beta_hat.
inline ConstraintReport check_coercivity(double q, double beta_hat, double sigma_hat, double gamma_hat) {
    if (!(q >= 2.0)) throw ConfigError("check_coercivity: q must be >= 2");
    if (!(beta_hat > 0.0) || !(sigma_hat >= 0.0) || !(gamma_hat >= 0.0)) throw ConfigError("check_coercivity: invalid parameters");
    const double ln_q1 = std::log(q - 1.0);
    const double ln_pow2 = (q - 1.0) * std::numbers::ln2;
    const double ln_g = detail::safe_log(gamma_hat);
    const double t_sigma = 2.0 * detail::safe_log(sigma_hat) + ln_q1;
    const double t_m2 = ln_pow2 + ln_q1 + 2.0 * ln_g + normal_abs_moment_log(2.0);
    const double t_mq = ln_pow2 + ln_q1 + q * ln_g + normal_abs_moment_log(q);
    return detail::make_report("coercivity q=" + std::to_string(static_cast<long long>(q)),
                               log_sum_exp({t_sigma, t_m2, t_mq}), std::log(2.0 * beta_hat));
}

/// 2(p0-1) lambda sigma_hat^2 + (p0-1)(2^{p0-4} + 1/2)((9/4) lambda gamma_hat^2 m_2
///   + (3/2)^{p0} lambda^{p0-1} gamma_hat^{p0} m_{p0}) <= 3 beta_hat.
inline ConstraintReport check_monotonicity(double p0, double lambda, double beta_hat, double sigma_hat, double gamma_hat) {
    if (!(p0 >= 2.0)) throw ConfigError("check_monotonicity: p0 must be >= 2");
    if (!(lambda > 1.0)) throw ConfigError("check_monotonicity: lambda must exceed 1");
    if (!(beta_hat > 0.0) || !(sigma_hat >= 0.0) || !(gamma_hat >= 0.0)) throw ConfigError("check_monotonicity: invalid parameters");
    const double ln_p1 = std::log(p0 - 1.0);
    const double ln_l = std::log(lambda);
    const double ln_g = detail::safe_log(gamma_hat);
    // ln(2^{p0-4} + 1/2) without overflow for large p0
    const double ln_c = (p0 - 4.0) * std::numbers::ln2 + std::log1p(0.5 * std::exp(-(p0 - 4.0) * std::numbers::ln2));
    const double t_sigma = std::numbers::ln2 + ln_p1 + ln_l + 2.0 * detail::safe_log(sigma_hat);
    const double t_m2 = ln_p1 + ln_c + std::log(9.0 / 4.0) + ln_l + 2.0 * ln_g + normal_abs_moment_log(2.0);
    const double t_mp = ln_p1 + ln_c + p0 * std::log(1.5) + (p0 - 1.0) * ln_l + p0 * ln_g + normal_abs_moment_log(p0);
    return detail::make_report("monotonicity p0=" + std::to_string(static_cast<long long>(p0)),
                               log_sum_exp({t_sigma, t_m2, t_mp}), std::log(3.0 * beta_hat));
}

/// E[Z^2] of the standard normal mark law, by adaptive Gauss-Kronrod quadrature on the real line.
inline double normal_second_moment_quadrature() {
    auto f = [](double z) { return z * z * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -std::numeric_limits<double>::infinity(),
                                                                       std::numeric_limits<double>::infinity(), 15, 1e-14);
}

/// 2(x-y)(mu(s,x)-mu(s,y)) + |sigma(s,x)-sigma(s,y)|^2 + lambda E_Z|gamma(s,x,Z)-gamma(s,y,Z)|^2
/// for the double-well coefficients, with `mark_m2` = E[Z^2].
inline double double_well_monotonicity_quantity(const DoubleWellParams& prm, double lambda, double mark_m2, double s, double x, double y) {
    const double bs = sawtooth(s);
    const double dmu = (bs * x - prm.beta_hat * x * x * x) - (bs * y - prm.beta_hat * y * y * y);
    const double dsg = prm.sigma_hat * std::sqrt(s) * ((1.0 - x * x) - (1.0 - y * y));
    const double dg = prm.gamma_hat * std::sqrt(s) *
                      (x * double_well_jump_factor(x, prm.p_exp) - y * double_well_jump_factor(y, prm.p_exp));
    return 2.0 * (x - y) * dmu + dsg * dsg + lambda * dg * dg * mark_m2;
}

struct MonotonicityEmpirical {
    double fitted_constant = 0.0;  // max over samples of quantity / |x-y|^2
    std::size_t samples = 0;
    std::size_t sign_violations = 0;  // samples where -beta_hat (x-y)(x^3-y^3) came out positive
    double mark_m2 = 0.0;
    double worst_s = 0.0, worst_x = 0.0, worst_y = 0.0;
};

/// Samples (s, x, y) in [0,1] x [-r, r]^2 and fits the smallest one-sided Lipschitz constant C.
inline MonotonicityEmpirical check_double_well_monotonicity_empirical(const DoubleWellParams& prm, std::size_t n_samples,
                                                                     std::uint64_t seed = 1, double lambda = 1.0,
                                                                     double x_radius = 10.0) {
    if (n_samples == 0) throw ConfigError("check_double_well_monotonicity_empirical: need samples");
    prm.validate();
    MonotonicityEmpirical r;
    r.mark_m2 = normal_second_moment_quadrature();
    Engine eng = make_engine({seed, 0, StreamTag::init, 0x3030});
    std::uniform_real_distribution<double> us(0.0, 1.0), ux(-x_radius, x_radius);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double s = us(eng), x = ux(eng), y = ux(eng);
        ++r.samples;
        if (-prm.beta_hat * (x - y) * (x * x * x - y * y * y) > 0.0) ++r.sign_violations;
        if (x == y) continue;
        const double c = double_well_monotonicity_quantity(prm, lambda, r.mark_m2, s, x, y) / ((x - y) * (x - y));
        if (c > r.fitted_constant || r.samples == 1) {
            r.fitted_constant = c;
            r.worst_s = s;
            r.worst_x = x;
            r.worst_y = y;
        }
    }
    return r;
}

}  // namespace levytame
