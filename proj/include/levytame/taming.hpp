#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>

#include "levytame/errors.hpp"
#include "levytame/linalg.hpp"
#include "levytame/model.hpp"

namespace levytame {

/// Denominator D_n(x) = 1 + n^{-n_power} |x|^{x_power}. The defaults give 1 + n^{-1/2} |x|^{3 zeta / 2}.
struct TamingConfig {
    std::size_t n = 1;
    double zeta = 0.0;
    double n_power = 0.5;
    std::optional<double> x_power;  // defaults to 3 zeta / 2

    TamingConfig() = default;
    TamingConfig(std::size_t steps, double zeta_, double n_power_ = 0.5, std::optional<double> x_power_ = std::nullopt)
        : n(steps), zeta(zeta_), n_power(n_power_), x_power(x_power_) {}

    double effective_x_power() const { return x_power.value_or(1.5 * zeta); }

    void validate() const {
        if (n == 0) throw ConfigError("TamingConfig: n must be >= 1");
        if (!(n_power > 0.0)) throw ConfigError("TamingConfig: n_power must be positive");
        if (!(effective_x_power() >= 0.0)) throw ConfigError("TamingConfig: x_power must be nonnegative");
    }

    /// |x|^a via exp(a ln|x|); 0^a = 0 for a > 0 and 1 for a = 0.
    static double abs_power(double r, double a) {
        if (a == 0.0) return 1.0;
        if (r == 0.0) return 0.0;
        return std::exp(a * std::log(r));
    }

    double denominator(std::span<const double> x) const {
        return 1.0 + std::exp(-n_power * std::log(static_cast<double>(n))) * abs_power(norm(x), effective_x_power());
    }
};

/// Divides drift, diffusion, jump and the compensator mean by D_n(x).
inline CoefficientSet tame(const CoefficientSet& base, const TamingConfig& cfg) {
    cfg.validate();
    CoefficientSet t = base;
    t.drift = [f = base.drift, cfg](double s, std::span<const double> x, const EnvState& env) {
        State v = f(s, x, env);
        scale(v, 1.0 / cfg.denominator(x));
        return v;
    };
    t.diffusion = [f = base.diffusion, cfg](double s, std::span<const double> x, const EnvState& env) {
        Matrix m = f(s, x, env);
        scale(m.data, 1.0 / cfg.denominator(x));
        return m;
    };
    t.jump = [f = base.jump, cfg](double s, std::span<const double> x, std::span<const double> z, const EnvState& env) {
        State v = f(s, x, z, env);
        scale(v, 1.0 / cfg.denominator(x));
        return v;
    };
    if (base.jump_compensator_mean) {
        t.jump_compensator_mean = [f = base.jump_compensator_mean, cfg](double s, std::span<const double> x, const EnvState& env) {
            State v = f(s, x, env);
            scale(v, 1.0 / cfg.denominator(x));
            return v;
        };
    }
    return t;
}

struct BoundReport {
    std::size_t samples = 0;
    // Samples where |tamed f| > |f| (must stay zero).
    std::size_t drift_violations = 0;
    std::size_t diffusion_violations = 0;
    std::size_t jump_violations = 0;
    // Largest |tamed f| / |f| over samples with f != 0.
    double worst_drift_ratio = 0.0;
    double worst_diffusion_ratio = 0.0;
    double worst_jump_ratio = 0.0;
    // Smallest C with |tamed mu| <= C n^{1/3} (1 + |x|), |tamed sigma| <= C n^{1/6} (1 + |x|).
    double drift_constant = 0.0;
    double diffusion_constant = 0.0;
    SamplePoint worst_drift_point;
};

/// Checks the taming bounds on box samples. The jump bound compares the mark-integrated
/// second moments, estimated with `mark_samples` marks shared between both sides.
inline BoundReport check_taming_bounds(const CoefficientSet& coeffs, const JumpModel& jumps, const TamingConfig& cfg,
                                       const SampleBox& box, std::size_t n_samples, std::uint64_t seed = 1,
                                       std::size_t mark_samples = 32) {
    const CoefficientSet tamed = tame(coeffs, cfg);
    const double n = static_cast<double>(cfg.n);
    const double n13 = std::cbrt(n), n16 = std::pow(n, 1.0 / 6.0);
    std::vector<State> marks;
    if (jumps.sample_mark) {
        Engine eng = make_engine({seed, 1, StreamTag::jumps, 0xB0C5});
        for (std::size_t i = 0; i < mark_samples; ++i) marks.push_back(jumps.sample_mark(eng));
    }
    BoundReport r;
    const EnvState env;
    for (const auto& p : sample_box_points(box, coeffs.dim_state, n_samples, seed)) {
        const double mu = norm(coeffs.drift(p.t, p.x, env));
        const double mu_t = norm(tamed.drift(p.t, p.x, env));
        const double sg = norm(coeffs.diffusion(p.t, p.x, env));
        const double sg_t = norm(tamed.diffusion(p.t, p.x, env));
        double gm = 0.0, gm_t = 0.0;
        for (const auto& z : marks) {
            const double a = norm(coeffs.jump(p.t, p.x, z, env));
            const double b = norm(tamed.jump(p.t, p.x, z, env));
            gm += a * a;
            gm_t += b * b;
        }
        if (mu_t > mu) ++r.drift_violations;
        if (sg_t > sg) ++r.diffusion_violations;
        if (gm_t > gm) ++r.jump_violations;
        if (mu > 0.0) r.worst_drift_ratio = std::max(r.worst_drift_ratio, mu_t / mu);
        if (sg > 0.0) r.worst_diffusion_ratio = std::max(r.worst_diffusion_ratio, sg_t / sg);
        if (gm > 0.0) r.worst_jump_ratio = std::max(r.worst_jump_ratio, std::sqrt(gm_t / gm));
        const double nx = norm(p.x);
        const double cd = mu_t / (n13 * (1.0 + nx));
        if (cd > r.drift_constant || r.samples == 0) {
            r.drift_constant = cd;
            r.worst_drift_point = p;
        }
        r.diffusion_constant = std::max(r.diffusion_constant, sg_t / (n16 * (1.0 + nx)));
        ++r.samples;
    }
    return r;
}

}  // namespace levytame
