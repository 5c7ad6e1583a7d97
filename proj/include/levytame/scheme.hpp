#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "levytame/errors.hpp"
#include "levytame/grid.hpp"
#include "levytame/linalg.hpp"
#include "levytame/markov.hpp"
#include "levytame/model.hpp"
#include "levytame/rng.hpp"
#include "levytame/taming.hpp"

namespace levytame {

enum class SchemeVariant {
    randomized_tamed,    // tamed coefficients, drift at xi_n
    tamed,               // tamed coefficients, drift at kappa_n
    classical,           // plain Euler-Maruyama
    randomized_untamed,  // untamed coefficients, drift at xi_n
};

inline bool is_randomized(SchemeVariant v) {
    return v == SchemeVariant::randomized_tamed || v == SchemeVariant::randomized_untamed;
}
inline bool is_tamed(SchemeVariant v) { return v == SchemeVariant::randomized_tamed || v == SchemeVariant::tamed; }

inline std::string_view to_string(SchemeVariant v) {
    switch (v) {
        case SchemeVariant::randomized_tamed: return "randomized_tamed";
        case SchemeVariant::tamed: return "tamed";
        case SchemeVariant::classical: return "classical";
        case SchemeVariant::randomized_untamed: return "randomized_untamed";
    }
    return "unknown";
}

inline SchemeVariant parse_variant(std::string_view s) {
    for (auto v : {SchemeVariant::randomized_tamed, SchemeVariant::tamed, SchemeVariant::classical, SchemeVariant::randomized_untamed})
        if (s == to_string(v)) return v;
    throw ConfigError("unknown scheme variant '" + std::string(s) + "'");
}

struct SchemeConfig {
    SchemeVariant variant = SchemeVariant::randomized_tamed;
    std::size_t n = 1;
    double taming_n_power = 0.5;
    std::optional<double> taming_x_power;  // default 3 zeta / 2

    void validate() const {
        if (n == 0) throw ConfigError("SchemeConfig: n must be >= 1");
    }

    /// Taming denominator for this step count; ignored by untamed variants.
    TamingConfig taming(double zeta) const { return TamingConfig(n, zeta, taming_n_power, taming_x_power); }
};

/// Grid states x^n_{t_k}, k = 0..n. `regimes` is filled for switching runs (regime at each t_k).
struct Trajectory {
    TimeGrid grid;
    std::vector<State> states;
    std::vector<int> regimes;
    std::optional<double> snapped_delay;  // set when the delay was moved onto the grid

    const State& terminal() const { return states.back(); }
};

/// Randomness of one cell (t_{k-1}, t_k].
struct CellNoise {
    std::span<const double> dW;
    std::span<const Jump> jumps;
    double phi = 1.0;
};

/// One cell of the scheme from the left state x = x_{k-1}:
///   x + mu(xi_n, x) dt + sigma(t_{k-1}, x) dW + sum_j gamma(t_{k-1}, x, z_j) - lambda dt E_Z[gamma(t_{k-1}, x, Z)].
/// `coeffs` are used as given (pass tamed coefficients for tamed variants). With `randomized` false
/// the drift is evaluated at t_{k-1}.
inline State step(std::span<const double> x, std::size_t k, const TimeGrid& grid, const CoefficientSet& coeffs,
                  const CellNoise& noise, double intensity, const EnvState& env, bool randomized = true) {
    const double dt = grid.dt();
    const double t_left = grid.point(k - 1);
    const double t_drift = randomized ? grid.xi(k, noise.phi) : t_left;

    State out(x.begin(), x.end());
    const State mu = coeffs.drift(t_drift, x, env);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += mu[i] * dt;
    gemv_add(coeffs.diffusion(t_left, x, env), noise.dW, out);
    for (const Jump& j : noise.jumps) {
        const State g = coeffs.jump(t_left, x, j.mark, env);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i];
    }
    if (intensity > 0.0 && !coeffs.zero_mean_jump) {
        if (!coeffs.jump_compensator_mean) throw ConfigError("step: jump compensator mean required for nonzero-mean jumps");
        const State c = coeffs.jump_compensator_mean(t_left, x, env);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= intensity * dt * c[i];
    }
    if (!all_finite(out)) throw DivergedPath(k, State(x.begin(), x.end()));
    return out;
}

namespace detail {

/// first[k] .. first[k+1] index the jumps owned by step k (1-based, first has n + 2 entries).
inline std::vector<std::size_t> bucket_jumps(const TimeGrid& grid, std::span<const Jump> jumps) {
    const std::size_t n = grid.steps();
    std::vector<std::size_t> first(n + 2, jumps.size());
    std::size_t j = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        first[k] = j;
        while (j < jumps.size() && grid.owning_step(jumps[j].time) == k) ++j;
    }
    first[n + 1] = j;
    return first;
}

}  // namespace detail

/// Prepared stepper for one model and configuration; reusable across paths and threads.
class Scheme {
public:
    Scheme(const Model& model, SchemeConfig cfg) : cfg_(cfg), intensity_(model.jumps.intensity) {
        model.validate();
        cfg_.validate();
        coeffs_ = is_tamed(cfg_.variant) ? tame(model.coeffs, cfg_.taming(model.coeffs.zeta)) : model.coeffs;
    }

    const SchemeConfig& config() const noexcept { return cfg_; }
    const CoefficientSet& coefficients() const noexcept { return coeffs_; }
    double intensity() const noexcept { return intensity_; }
    TimeGrid grid() const { return TimeGrid(cfg_.n, coeffs_.horizon); }

    Trajectory simulate(const PathDraw& draw) const { return run(draw, nullptr, nullptr); }

    /// Delay/switching run; see simulate_sdde_switching.
    Trajectory simulate_delay_switching(const PathDraw& draw, double theta, const std::function<State(double)>& initial_segment,
                                        const MarkovPath& chain) const {
        DelayArgs args{theta, &initial_segment};
        return run(draw, &args, &chain);
    }

private:
    struct DelayArgs {
        double theta;
        const std::function<State(double)>* segment;
    };

    Trajectory run(const PathDraw& draw, const DelayArgs* delay, const MarkovPath* chain) const {
        const TimeGrid g = grid();
        const std::size_t n = g.steps();
        const std::size_t m = coeffs_.dim_noise;
        if (draw.noise_dim != m) throw ConfigError("simulate: draw noise dimension does not match the model");
        if (draw.n_fine % n != 0) throw ConfigError("simulate: fine resolution must be divisible by n");
        if (draw.x0.size() != coeffs_.dim_state) throw ConfigError("simulate: x0 has wrong dimension");
        if (std::abs(draw.horizon - coeffs_.horizon) > 1e-12 * coeffs_.horizon) throw ConfigError("simulate: draw horizon does not match the model");

        const std::vector<double> dW = coarsen(draw.fine_increments, m, draw.n_fine / n);
        const bool randomized = is_randomized(cfg_.variant);
        const std::vector<double>* phis = randomized ? &draw.randomizers(n) : nullptr;
        const auto first = detail::bucket_jumps(g, draw.jumps);
        const std::span<const Jump> all_jumps(draw.jumps);

        Trajectory traj{g, {}, {}, std::nullopt};
        traj.states.reserve(n + 1);
        traj.states.push_back(draw.x0);

        std::ptrdiff_t lag = 0;
        if (delay) {
            if (!(delay->theta >= 0.0)) throw ConfigError("simulate_sdde_switching: delay must be >= 0");
            if (delay->theta > 0.0 && !(delay->segment && *delay->segment))
                throw ConfigError("simulate_sdde_switching: missing initial segment");
            const double steps = delay->theta / g.dt();
            lag = static_cast<std::ptrdiff_t>(std::llround(steps));
            if (std::abs(steps - static_cast<double>(lag)) > 1e-9) traj.snapped_delay = static_cast<double>(lag) * g.dt();
        }
        if (chain) {
            if (chain->horizon < g.horizon()) throw ConfigError("simulate_sdde_switching: chain must cover [0, T]");
            traj.regimes.reserve(n + 1);
            traj.regimes.push_back(chain->regime_at(0.0));
        }

        EnvState env;
        for (std::size_t k = 1; k <= n; ++k) {
            const double t_left = g.point(k - 1);
            if (chain) env.regime = chain->regime_at(t_left);
            if (delay) {
                const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(k - 1) - lag;
                if (idx >= 0) {
                    env.delayed = traj.states[static_cast<std::size_t>(idx)];
                } else {
                    // x_u = zeta_{u + theta} for u in [-theta, 0)
                    const double theta_grid = static_cast<double>(lag) * g.dt();
                    env.delayed = (*delay->segment)(static_cast<double>(idx) * g.dt() + theta_grid);
                }
            }
            CellNoise noise{std::span<const double>(dW).subspan((k - 1) * m, m),
                            all_jumps.subspan(first[k], first[k + 1] - first[k]),
                            phis ? (*phis)[k - 1] : 1.0};
            traj.states.push_back(step(traj.states.back(), k, g, coeffs_, noise, intensity_, env, randomized));
            if (chain) traj.regimes.push_back(chain->regime_at(g.point(k)));
        }
        return traj;
    }

    SchemeConfig cfg_;
    double intensity_;
    CoefficientSet coeffs_;
};

/// Drawing spec matching a model's noise dimension, jump law and initial value.
inline DrawSpec draw_spec_for(const Model& model, std::size_t n_fine, std::vector<std::size_t> levels) {
    DrawSpec s;
    s.n_fine = n_fine;
    s.noise_dim = model.coeffs.dim_noise;
    s.horizon = model.coeffs.horizon;
    s.intensity = model.jumps.intensity;
    s.mark_sampler = model.jumps.sample_mark;
    s.levels = std::move(levels);
    s.x0 = model.x0;
    s.x0_sampler = model.x0_sampler;
    return s;
}

inline PathDraw draw_path(std::uint64_t base_seed, std::uint64_t path_index, const Model& model, std::size_t n_fine,
                          std::vector<std::size_t> levels) {
    return make_path_draw(base_seed, path_index, draw_spec_for(model, n_fine, std::move(levels)));
}

/// Runs the scheme on one path draw.
inline Trajectory simulate_path(const Model& model, const SchemeConfig& cfg, const PathDraw& draw) {
    return Scheme(model, cfg).simulate(draw);
}

/// Delay equation with Markovian switching. Coefficients read the regime alpha_{kappa_n(s)} and the
/// delayed state x^n_{kappa_n(s - theta)} from EnvState; all three share the taming denominator of the
/// current state. theta is snapped to a multiple of dt when needed (reported in the trajectory).
inline Trajectory simulate_sdde_switching(const Model& model, const SchemeConfig& cfg, const PathDraw& draw, double theta,
                                          const std::function<State(double)>& initial_segment, const MarkovPath& chain) {
    return Scheme(model, cfg).simulate_delay_switching(draw, theta, initial_segment, chain);
}

/// Coefficient set that dispatches on EnvState::regime (1-based; absent means regime 1).
inline CoefficientSet switch_by_regime(std::vector<CoefficientSet> per_regime) {
    if (per_regime.empty()) throw ConfigError("switch_by_regime: need at least one regime");
    for (const auto& c : per_regime) {
        c.validate();
        if (c.dim_state != per_regime[0].dim_state || c.dim_noise != per_regime[0].dim_noise)
            throw ConfigError("switch_by_regime: regimes must share dimensions");
    }
    auto regimes = std::make_shared<const std::vector<CoefficientSet>>(std::move(per_regime));
    auto pick = [regimes](const EnvState& env) -> const CoefficientSet& {
        const int r = env.regime.value_or(1);
        if (r < 1 || static_cast<std::size_t>(r) > regimes->size()) throw ConfigError("switch_by_regime: regime out of range");
        return (*regimes)[static_cast<std::size_t>(r - 1)];
    };
    CoefficientSet c = regimes->front();
    c.drift = [pick](double t, std::span<const double> x, const EnvState& env) { return pick(env).drift(t, x, env); };
    c.diffusion = [pick](double t, std::span<const double> x, const EnvState& env) { return pick(env).diffusion(t, x, env); };
    c.jump = [pick](double t, std::span<const double> x, std::span<const double> z, const EnvState& env) {
        return pick(env).jump(t, x, z, env);
    };
    bool all_zero_mean = true, all_have_comp = true;
    for (const auto& r : *regimes) {
        all_zero_mean = all_zero_mean && r.zero_mean_jump;
        all_have_comp = all_have_comp && static_cast<bool>(r.jump_compensator_mean);
    }
    c.zero_mean_jump = all_zero_mean;
    c.zeta = 0.0;
    for (const auto& r : *regimes) c.zeta = std::max(c.zeta, r.zeta);
    c.jump_compensator_mean = nullptr;
    if (all_have_comp)
        c.jump_compensator_mean = [pick](double t, std::span<const double> x, const EnvState& env) {
            return pick(env).jump_compensator_mean(t, x, env);
        };
    return c;
}

}  // namespace levytame
