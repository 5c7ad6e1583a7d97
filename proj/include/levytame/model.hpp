#pragma once

#include <any>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levytame/errors.hpp"
#include "levytame/linalg.hpp"
#include "levytame/rng.hpp"

namespace levytame {

/// Extra arguments a coefficient may depend on: the switching regime alpha_t (1-based), the delayed
/// state x_{t-theta}, and an opaque slot for other random inputs.
struct EnvState {
    std::optional<int> regime;
    std::optional<State> delayed;
    std::any extension;
};

using DriftFn = std::function<State(double t, std::span<const double> x, const EnvState& env)>;
using DiffusionFn = std::function<Matrix(double t, std::span<const double> x, const EnvState& env)>;
using JumpFn = std::function<State(double t, std::span<const double> x, std::span<const double> z, const EnvState& env)>;

/// Drift mu, diffusion sigma (d x m) and jump coefficient gamma of
///   dx = mu(t,x) dt + sigma(t,x) dw + int gamma(t,x,z) (N - rho)(dt,dz).
/// `jump_compensator_mean` is E_Z[gamma(t,x,Z)] under the mark law; it may be left empty when
/// `zero_mean_jump` holds.
struct CoefficientSet {
    std::size_t dim_state = 1;
    std::size_t dim_noise = 1;
    DriftFn drift;
    DiffusionFn diffusion;
    JumpFn jump;
    DriftFn jump_compensator_mean;
    double zeta = 0.0;
    double horizon = 1.0;
    bool zero_mean_jump = false;

    void validate() const {
        if (dim_state == 0 || dim_noise == 0) throw ConfigError("CoefficientSet: dimensions must be positive");
        if (!drift || !diffusion || !jump) throw ConfigError("CoefficientSet: drift, diffusion and jump are required");
        if (!(zeta >= 0.0)) throw ConfigError("CoefficientSet: zeta must be nonnegative");
        if (!(horizon > 0.0)) throw ConfigError("CoefficientSet: horizon must be positive");
    }
};

/// Coefficients that are identically zero.
inline CoefficientSet zero_coefficients(std::size_t d = 1, std::size_t m = 1, double horizon = 1.0) {
    CoefficientSet c;
    c.dim_state = d;
    c.dim_noise = m;
    c.horizon = horizon;
    c.drift = [d](double, std::span<const double>, const EnvState&) { return State(d, 0.0); };
    c.diffusion = [d, m](double, std::span<const double>, const EnvState&) { return Matrix(d, m); };
    c.jump = [d](double, std::span<const double>, std::span<const double>, const EnvState&) { return State(d, 0.0); };
    c.jump_compensator_mean = c.drift;
    c.zero_mean_jump = true;
    return c;
}

/// Finite-intensity compound Poisson description of the jump measure: rho(dz) = intensity * law(dz).
struct JumpModel {
    double intensity = 0.0;
    std::size_t mark_dim = 1;
    MarkSampler sample_mark;
    /// E|Z|^p for scalar marks, when known in closed form.
    std::function<double(double p)> abs_moment;
};

/// A complete problem instance: coefficients, jump law and initial value.
struct Model {
    std::string name;
    CoefficientSet coeffs;
    JumpModel jumps;
    State x0;
    std::function<State(Engine&)> x0_sampler;

    void validate() const {
        coeffs.validate();
        if (x0.size() != coeffs.dim_state && !x0_sampler) throw ConfigError("Model: x0 has wrong dimension");
        if (!(jumps.intensity >= 0.0) || !std::isfinite(jumps.intensity)) throw ConfigError("Model: jump intensity must be finite and >= 0");
        if (jumps.intensity > 0.0 && !jumps.sample_mark) throw ConfigError("Model: mark sampler required for positive intensity");
    }
};

/// Standard normal scalar marks.
inline MarkSampler standard_normal_marks() {
    return [](Engine& eng) {
        std::normal_distribution<double> n01(0.0, 1.0);
        return State{n01(eng)};
    };
}

/// E|Z|^p for Z ~ N(0,1): 2^{p/2} Gamma((p+1)/2) / sqrt(pi).
inline double standard_normal_abs_moment(double p) {
    return std::exp(0.5 * p * std::log(2.0) + std::lgamma(0.5 * (p + 1.0)) - 0.5 * std::log(std::numbers::pi));
}

// ---------------------------------------------------------------------------
// Double-well preset

/// Sawtooth modulation 2(s - floor(s + 1/2)); range (-1, 1].
inline double sawtooth(double s) { return 2.0 * (s - std::floor(s + 0.5)); }

struct DoubleWellParams {
    double beta_hat = 0.5;
    double sigma_hat = 0.001;
    double gamma_hat = 0.02;
    double p_exp = 648.0;

    void validate() const {
        if (!(beta_hat > 0.0)) throw ConfigError("DoubleWellParams: beta_hat must be positive");
        if (!(sigma_hat >= 0.0) || !(gamma_hat >= 0.0)) throw ConfigError("DoubleWellParams: sigma_hat and gamma_hat must be nonnegative");
        if (!(p_exp >= 4.0)) throw ConfigError("DoubleWellParams: p_exp must be >= 4");
    }
};

/// (1 + x^2)^{1/p} through log1p, which keeps the 2x^2/p correction for small x at large p.
inline double double_well_jump_factor(double x, double p_exp) { return std::exp(std::log1p(x * x) / p_exp); }

/// mu(s,x) = beta(s) x - beta_hat x^3, sigma(s,x) = sigma_hat sqrt(s) (1 - x^2),
/// gamma(s,x,z) = gamma_hat sqrt(s) x (1 + x^2)^{1/p} z on [0, 1], zeta = 2.
inline CoefficientSet double_well_model(const DoubleWellParams& params) {
    params.validate();
    CoefficientSet c;
    c.dim_state = 1;
    c.dim_noise = 1;
    c.zeta = 2.0;
    c.horizon = 1.0;
    c.zero_mean_jump = true;
    const double bh = params.beta_hat, sh = params.sigma_hat, gh = params.gamma_hat, pe = params.p_exp;
    c.drift = [bh](double s, std::span<const double> x, const EnvState&) {
        const double v = x[0];
        return State{sawtooth(s) * v - bh * v * v * v};
    };
    c.diffusion = [sh](double s, std::span<const double> x, const EnvState&) {
        Matrix m(1, 1);
        m(0, 0) = sh * std::sqrt(s) * (1.0 - x[0] * x[0]);
        return m;
    };
    c.jump = [gh, pe](double s, std::span<const double> x, std::span<const double> z, const EnvState&) {
        return State{gh * std::sqrt(s) * x[0] * double_well_jump_factor(x[0], pe) * z[0]};
    };
    c.jump_compensator_mean = [](double, std::span<const double>, const EnvState&) { return State{0.0}; };
    return c;
}

/// Double-well problem with normal marks at the given intensity and x0.
inline Model double_well_preset(const DoubleWellParams& params, double intensity = 1.0, double x0 = 2.0) {
    Model m;
    m.name = "double-well";
    m.coeffs = double_well_model(params);
    m.jumps.intensity = intensity;
    m.jumps.mark_dim = 1;
    m.jumps.sample_mark = standard_normal_marks();
    m.jumps.abs_moment = standard_normal_abs_moment;
    m.x0 = State{x0};
    return m;
}

// ---------------------------------------------------------------------------
// Growth probe

/// Sampling region for diagnostics: t in [t_lo, t_hi], each |x_i| <= x_radius.
struct SampleBox {
    double t_lo = 0.0;
    double t_hi = 1.0;
    double x_radius = 10.0;

    void validate() const {
        if (!(t_hi > t_lo) || !(x_radius > 0.0)) throw ConfigError("SampleBox: degenerate box");
    }
};

struct SamplePoint {
    double t = 0.0;
    State x;
};

/// Deterministic sample set: box corners (for d <= 10) followed by n_samples uniform points.
inline std::vector<SamplePoint> sample_box_points(const SampleBox& box, std::size_t dim, std::size_t n_samples, std::uint64_t seed) {
    box.validate();
    std::vector<SamplePoint> pts;
    if (dim <= 10) {
        for (double t : {box.t_lo, box.t_hi})
            for (std::size_t mask = 0; mask < (std::size_t{1} << dim); ++mask) {
                SamplePoint p{t, State(dim)};
                for (std::size_t i = 0; i < dim; ++i) p.x[i] = (mask >> i & 1U) ? box.x_radius : -box.x_radius;
                pts.push_back(std::move(p));
            }
    }
    Engine eng = make_engine({seed, 0, StreamTag::init, 0xB0C5});
    std::uniform_real_distribution<double> ut(box.t_lo, box.t_hi), ux(-box.x_radius, box.x_radius);
    for (std::size_t i = 0; i < n_samples; ++i) {
        SamplePoint p{ut(eng), State(dim)};
        for (double& v : p.x) v = ux(eng);
        pts.push_back(std::move(p));
    }
    return pts;
}

struct GrowthReport {
    double drift_constant = 0.0;      // smallest K with |mu| <= K (1 + |x|^{zeta+1}) on the samples
    double diffusion_constant = 0.0;  // smallest K with |sigma| <= K (1 + |x|^{zeta/2+1})
    SamplePoint worst_drift;
    SamplePoint worst_diffusion;
    std::size_t samples = 0;
};

/// Fits empirical growth constants. Diagnostic only.
inline GrowthReport probe_growth(const CoefficientSet& coeffs, const SampleBox& box, std::size_t n_samples, std::uint64_t seed = 1) {
    GrowthReport r;
    const EnvState env;
    for (const auto& p : sample_box_points(box, coeffs.dim_state, n_samples, seed)) {
        const double nx = norm(p.x);
        const double kd = norm(coeffs.drift(p.t, p.x, env)) / (1.0 + std::pow(nx, coeffs.zeta + 1.0));
        const double ks = norm(coeffs.diffusion(p.t, p.x, env)) / (1.0 + std::pow(nx, coeffs.zeta / 2.0 + 1.0));
        if (kd > r.drift_constant || r.samples == 0) {
            r.drift_constant = kd;
            r.worst_drift = p;
        }
        if (ks > r.diffusion_constant || r.samples == 0) {
            r.diffusion_constant = ks;
            r.worst_diffusion = p;
        }
        ++r.samples;
    }
    return r;
}

}  // namespace levytame
