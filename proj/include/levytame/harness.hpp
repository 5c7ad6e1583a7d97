#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "levytame/errors.hpp"
#include "levytame/linalg.hpp"
#include "levytame/model.hpp"
#include "levytame/parallel.hpp"
#include "levytame/scheme.hpp"
#include "levytame/stats.hpp"

namespace levytame {

enum class ErrorTime { terminal, max_over_grid };

inline std::string_view to_string(ErrorTime t) { return t == ErrorTime::terminal ? "terminal" : "max_over_grid"; }

inline ErrorTime parse_error_time(std::string_view s) {
    if (s == "terminal") return ErrorTime::terminal;
    if (s == "max_over_grid") return ErrorTime::max_over_grid;
    throw ConfigError("unknown error time '" + std::string(s) + "'");
}

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Strong-error ladder: every path is simulated at reference_n and at each level on shared Brownian
/// and jump noise; randomizers are drawn independently per level.
struct StudyConfig {
    Model model;
    std::vector<SchemeVariant> variants{SchemeVariant::randomized_tamed};
    std::vector<std::size_t> levels;
    std::size_t reference_n = 8192;
    SchemeVariant reference_variant = SchemeVariant::randomized_tamed;
    std::size_t num_paths = 2000;
    std::vector<double> p_list{1.0, 2.0, 3.0, 4.0};
    ErrorTime error_time = ErrorTime::terminal;
    std::uint64_t base_seed = 1;
    unsigned workers = 1;
    std::size_t batches = 20;
    double taming_n_power = 0.5;
    std::optional<double> taming_x_power;
    ProgressFn progress;

    void validate() const {
        model.validate();
        if (variants.empty()) throw ConfigError("StudyConfig: no scheme variants");
        if (levels.empty()) throw ConfigError("StudyConfig: levels list is empty");
        if (reference_n == 0) throw ConfigError("StudyConfig: reference_n must be positive");
        for (std::size_t n : levels) {
            if (n == 0 || reference_n % n != 0) throw ConfigError("StudyConfig: reference_n must be divisible by every level");
        }
        if (num_paths == 0) throw ConfigError("StudyConfig: need at least one path");
        if (p_list.empty()) throw ConfigError("StudyConfig: p_list is empty");
        for (double p : p_list)
            if (!(p > 0.0)) throw ConfigError("StudyConfig: moments must be positive");
        if (batches == 0) throw ConfigError("StudyConfig: batches must be positive");
    }

    SchemeConfig scheme_config(SchemeVariant v, std::size_t n) const { return SchemeConfig{v, n, taming_n_power, taming_x_power}; }
};

struct ErrorRow {
    double dt = 0.0;
    std::size_t n = 0;
    double p = 0.0;
    double error = 0.0;      // (E|x_ref - x_n|^p)^{1/p}
    double std_error = 0.0;  // batch-means standard error of `error` (delta method)
    double diverged_fraction = 0.0;
    bool usable = true;  // false when more than half the paths diverged
};

struct SlopeFit {
    double p = 0.0;
    std::optional<RateFit> fit;  // empty when fewer than 3 usable rows
};

struct ErrorReport {
    std::string model;
    std::string variant;
    std::uint64_t seed = 0;
    std::size_t paths = 0;
    std::size_t reference_n = 0;
    std::string reference_variant;
    ErrorTime error_time = ErrorTime::terminal;
    double reference_diverged_fraction = 0.0;
    std::vector<ErrorRow> rows;  // ordered by level then p
    std::vector<SlopeFit> slopes;

    bool any_unusable() const {
        return std::any_of(rows.begin(), rows.end(), [](const ErrorRow& r) { return !r.usable; });
    }
};

namespace detail {

/// Per-batch sums for one (variant, level): sums[p][k] of |err_k|^p over converged paths.
struct LevelAccumulator {
    std::size_t converged = 0;
    std::size_t diverged = 0;
    std::vector<std::vector<CompensatedSum>> sums;
};

struct StudyBatch {
    std::size_t reference_diverged = 0;
    std::vector<std::vector<LevelAccumulator>> per_variant;  // [variant][level]
};

inline double state_distance(const State& a, const State& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

/// Reduces per-batch sums in batch order; returns (estimate, stderr) of sup_k E|.|^p.
inline std::pair<double, double> reduce_moment(const std::vector<const LevelAccumulator*>& batches, std::size_t pi) {
    std::size_t total = 0;
    for (auto* b : batches) total += b->converged;
    if (total == 0) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    const std::size_t nk = batches.front()->sums[pi].size();
    double best = -1.0;
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < nk; ++k) {
        CompensatedSum s;
        for (auto* b : batches) s += b->sums[pi][k].value();
        const double mean = s.value() / static_cast<double>(total);
        if (mean > best) {
            best = mean;
            best_k = k;
        }
    }
    std::vector<double> means;
    for (auto* b : batches)
        if (b->converged > 0) means.push_back(b->sums[pi][best_k].value() / static_cast<double>(b->converged));
    return {best, batch_means_stderr(means)};
}

}  // namespace detail

/// Runs the strong-error study; one report per configured variant.
inline std::vector<ErrorReport> strong_error_study(const StudyConfig& cfg) {
    cfg.validate();
    const Model& model = cfg.model;
    const std::size_t nv = cfg.variants.size(), nl = cfg.levels.size(), np = cfg.p_list.size();

    std::vector<std::size_t> draw_levels = cfg.levels;
    draw_levels.push_back(cfg.reference_n);
    std::sort(draw_levels.begin(), draw_levels.end());
    draw_levels.erase(std::unique(draw_levels.begin(), draw_levels.end()), draw_levels.end());
    const DrawSpec spec = draw_spec_for(model, cfg.reference_n, draw_levels);

    const Scheme reference(model, cfg.scheme_config(cfg.reference_variant, cfg.reference_n));
    std::vector<std::vector<Scheme>> schemes(nv);
    for (std::size_t v = 0; v < nv; ++v)
        for (std::size_t n : cfg.levels) schemes[v].emplace_back(model, cfg.scheme_config(cfg.variants[v], n));

    const bool over_grid = cfg.error_time == ErrorTime::max_over_grid;
    std::atomic<std::size_t> done{0};

    auto batches = run_batches(cfg.num_paths, cfg.batches, cfg.workers, [&](const BatchRange& range) {
        detail::StudyBatch acc;
        acc.per_variant.assign(nv, std::vector<detail::LevelAccumulator>(nl));
        for (std::size_t v = 0; v < nv; ++v)
            for (std::size_t l = 0; l < nl; ++l)
                acc.per_variant[v][l].sums.assign(np, std::vector<CompensatedSum>(over_grid ? cfg.levels[l] + 1 : 1));

        for (std::size_t i = range.begin; i < range.end; ++i) {
            const PathDraw draw = make_path_draw(cfg.base_seed, i, spec);
            std::optional<Trajectory> ref;
            try {
                ref = reference.simulate(draw);
            } catch (const DivergedPath&) {
                ++acc.reference_diverged;
                for (auto& per_level : acc.per_variant)
                    for (auto& la : per_level) ++la.diverged;
            }
            if (ref) {
                for (std::size_t v = 0; v < nv; ++v) {
                    for (std::size_t l = 0; l < nl; ++l) {
                        auto& la = acc.per_variant[v][l];
                        std::optional<Trajectory> traj;
                        try {
                            traj = schemes[v][l].simulate(draw);
                        } catch (const DivergedPath&) {
                            ++la.diverged;
                            continue;
                        }
                        const std::size_t n = cfg.levels[l];
                        const std::size_t factor = cfg.reference_n / n;
                        ++la.converged;
                        const std::size_t k0 = over_grid ? 0 : n;
                        for (std::size_t k = k0; k <= n; ++k) {
                            const double d = detail::state_distance(ref->states[k * factor], traj->states[k]);
                            for (std::size_t pi = 0; pi < np; ++pi) la.sums[pi][k - k0] += std::pow(d, cfg.p_list[pi]);
                        }
                    }
                }
            }
            const std::size_t finished = ++done;
            if (cfg.progress) cfg.progress(finished, cfg.num_paths);
        }
        return acc;
    });

    std::size_t ref_div = 0;
    for (const auto& b : batches) ref_div += b.reference_diverged;

    std::vector<ErrorReport> reports;
    for (std::size_t v = 0; v < nv; ++v) {
        ErrorReport rep;
        rep.model = model.name;
        rep.variant = std::string(to_string(cfg.variants[v]));
        rep.seed = cfg.base_seed;
        rep.paths = cfg.num_paths;
        rep.reference_n = cfg.reference_n;
        rep.reference_variant = std::string(to_string(cfg.reference_variant));
        rep.error_time = cfg.error_time;
        rep.reference_diverged_fraction = static_cast<double>(ref_div) / static_cast<double>(cfg.num_paths);
        for (std::size_t l = 0; l < nl; ++l) {
            std::vector<const detail::LevelAccumulator*> per_batch;
            std::size_t diverged = 0;
            for (const auto& b : batches) {
                per_batch.push_back(&b.per_variant[v][l]);
                diverged += b.per_variant[v][l].diverged;
            }
            const double div_frac = static_cast<double>(diverged) / static_cast<double>(cfg.num_paths);
            for (std::size_t pi = 0; pi < np; ++pi) {
                const double p = cfg.p_list[pi];
                const auto [moment, moment_se] = detail::reduce_moment(per_batch, pi);
                ErrorRow row;
                row.n = cfg.levels[l];
                row.dt = model.coeffs.horizon / static_cast<double>(row.n);
                row.p = p;
                row.error = std::pow(moment, 1.0 / p);
                row.std_error = moment > 0.0 ? std::pow(moment, 1.0 / p - 1.0) * moment_se / p : 0.0;
                if (std::isnan(moment)) row.std_error = moment;
                row.diverged_fraction = div_frac;
                row.usable = div_frac <= 0.5 && std::isfinite(row.error);
                rep.rows.push_back(row);
            }
        }
        for (double p : cfg.p_list) {
            SlopeFit sf{p, std::nullopt};
            std::vector<std::pair<double, double>> pts;
            for (const auto& r : rep.rows)
                if (r.p == p && r.usable && r.error > 0.0) pts.emplace_back(r.dt, r.error);
            if (pts.size() >= 3) sf.fit = fit_rate(pts);
            rep.slopes.push_back(sf);
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Moment probe

struct MomentRow {
    std::size_t n = 0;
    double q = 0.0;
    double sup_moment = 0.0;  // sup_k (1/M) sum_i |x^n_{t_k}|^q; +inf once any path diverged
    double diverged_fraction = 0.0;
    std::optional<std::size_t> first_divergence_step;  // smallest step index at which some path blew up
};

struct MomentTable {
    std::vector<MomentRow> rows;

    /// max/min of the sup moments across n (inf when any row diverged).
    double spread() const {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& r : rows) {
            lo = std::min(lo, r.sup_moment);
            hi = std::max(hi, r.sup_moment);
        }
        if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
        return lo > 0.0 ? hi / lo : (hi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
    }
};

struct ProbeOptions {
    std::uint64_t base_seed = 1;
    unsigned workers = 1;
    std::size_t batches = 20;
};

namespace detail {

/// Largest n in the list when it is a common multiple of all of them, else 0.
inline std::size_t common_fine_resolution(const std::vector<std::size_t>& n_list) {
    const std::size_t mx = *std::max_element(n_list.begin(), n_list.end());
    for (std::size_t n : n_list)
        if (n == 0 || mx % n != 0) return 0;
    return mx;
}

}  // namespace detail

/// Empirical sup_k E|x^n_{t_k}|^q per step count. `base` supplies variant and taming exponents; its n is ignored.
inline MomentTable moment_probe(const Model& model, const SchemeConfig& base, const std::vector<std::size_t>& n_list, double q,
                                std::size_t num_paths, const ProbeOptions& opt = {}) {
    if (!(q >= 2.0)) throw ConfigError("moment_probe: q must be >= 2");
    if (n_list.empty() || num_paths == 0) throw ConfigError("moment_probe: need step counts and paths");
    model.validate();
    const std::size_t common = detail::common_fine_resolution(n_list);

    struct Acc {
        std::vector<std::vector<CompensatedSum>> sums;  // [level][k]
        std::vector<std::size_t> diverged;
        std::vector<std::size_t> first_div;
    };
    std::vector<Scheme> schemes;
    for (std::size_t n : n_list) {
        SchemeConfig c = base;
        c.n = n;
        schemes.emplace_back(model, c);
    }
    const std::size_t none = std::numeric_limits<std::size_t>::max();
    auto batches = run_batches(num_paths, opt.batches, opt.workers, [&](const BatchRange& range) {
        Acc acc;
        for (std::size_t n : n_list) acc.sums.emplace_back(n + 1);
        acc.diverged.assign(n_list.size(), 0);
        acc.first_div.assign(n_list.size(), none);
        std::optional<PathDraw> shared;
        for (std::size_t i = range.begin; i < range.end; ++i) {
            if (common) shared = draw_path(opt.base_seed, i, model, common, n_list);
            for (std::size_t l = 0; l < n_list.size(); ++l) {
                const PathDraw draw = common ? *shared : draw_path(opt.base_seed, i, model, n_list[l], {n_list[l]});
                try {
                    const Trajectory tr = schemes[l].simulate(draw);
                    for (std::size_t k = 0; k < tr.states.size(); ++k) acc.sums[l][k] += std::pow(norm(tr.states[k]), q);
                } catch (const DivergedPath& e) {
                    ++acc.diverged[l];
                    acc.first_div[l] = std::min(acc.first_div[l], e.step());
                }
            }
        }
        return acc;
    });

    MomentTable table;
    for (std::size_t l = 0; l < n_list.size(); ++l) {
        MomentRow row;
        row.n = n_list[l];
        row.q = q;
        std::size_t diverged = 0, first = none;
        for (const auto& b : batches) {
            diverged += b.diverged[l];
            first = std::min(first, b.first_div[l]);
        }
        row.diverged_fraction = static_cast<double>(diverged) / static_cast<double>(num_paths);
        if (first != none) row.first_divergence_step = first;
        if (diverged > 0) {
            row.sup_moment = std::numeric_limits<double>::infinity();
        } else {
            double best = 0.0;
            for (std::size_t k = 0; k <= n_list[l]; ++k) {
                CompensatedSum s;
                for (const auto& b : batches) s += b.sums[l][k].value();
                best = std::max(best, s.value() / static_cast<double>(num_paths));
            }
            row.sup_moment = best;
        }
        table.rows.push_back(row);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Taming gap probe

/// Gaps are averaged over the step index k, i.e. over a uniformly sampled time s; the *_sup
/// fields keep the largest single-k value.
struct GapRow {
    std::size_t n = 0;
    double drift_diffusion_gap = 0.0;  // mean_k E|mu - tamed mu|^p0 + E|sigma - tamed sigma|^p0
    double jump_gap = 0.0;             // mean_k max over qbar in {2, p0} of (lambda E_Z E|gamma - tamed gamma|^qbar)^{p0/qbar}
    double drift_diffusion_sup = 0.0;
    double jump_sup = 0.0;
};

struct GapTable {
    double p0 = 2.0;
    std::vector<GapRow> rows;
    std::optional<RateFit> drift_diffusion_fit;  // slope = decay exponent in n
    std::optional<RateFit> jump_fit;
};

/// Monte Carlo estimate of the gap between original and tamed coefficients along the scheme's own
/// paths, at the evaluation points the scheme uses (xi_n for the drift, kappa_n otherwise).
inline GapTable taming_gap_probe(const Model& model, const SchemeConfig& base, const std::vector<std::size_t>& n_list, double p0,
                                 std::size_t num_paths, const ProbeOptions& opt = {}, std::size_t mark_samples = 16) {
    if (!(p0 >= 2.0)) throw ConfigError("taming_gap_probe: p0 must be >= 2");
    if (n_list.empty() || num_paths == 0) throw ConfigError("taming_gap_probe: need step counts and paths");
    model.validate();
    const CoefficientSet& raw = model.coeffs;
    std::vector<State> marks;
    if (model.jumps.intensity > 0.0) {
        Engine eng = make_engine({opt.base_seed, 0, StreamTag::jumps, 0x6A9});
        for (std::size_t i = 0; i < mark_samples; ++i) marks.push_back(model.jumps.sample_mark(eng));
    }
    std::vector<Scheme> schemes;
    for (std::size_t n : n_list) {
        SchemeConfig c = base;
        c.n = n;
        schemes.emplace_back(model, c);
    }
    const double lambda = model.jumps.intensity;
    const bool randomized = is_randomized(base.variant);

    struct Acc {
        std::vector<std::vector<CompensatedSum>> dd, j2, jp;  // [level][k]
    };
    auto batches = run_batches(num_paths, opt.batches, opt.workers, [&](const BatchRange& range) {
        Acc acc;
        for (std::size_t n : n_list) {
            acc.dd.emplace_back(n);
            acc.j2.emplace_back(n);
            acc.jp.emplace_back(n);
        }
        const EnvState env;
        for (std::size_t i = range.begin; i < range.end; ++i) {
            for (std::size_t l = 0; l < n_list.size(); ++l) {
                const std::size_t n = n_list[l];
                const PathDraw draw = draw_path(opt.base_seed, i, model, n, {n});
                const Trajectory tr = schemes[l].simulate(draw);
                const CoefficientSet& tamed = schemes[l].coefficients();
                const auto& phis = draw.randomizers(n);
                for (std::size_t k = 1; k <= n; ++k) {
                    const State& x = tr.states[k - 1];
                    const double tk = tr.grid.point(k - 1);
                    const double xi = randomized ? tr.grid.xi(k, phis[k - 1]) : tk;
                    const State a = raw.drift(xi, x, env), b = tamed.drift(xi, x, env);
                    const Matrix sa = raw.diffusion(tk, x, env), sb = tamed.diffusion(tk, x, env);
                    double dmu = 0.0, dsg = 0.0;
                    for (std::size_t c = 0; c < a.size(); ++c) dmu += (a[c] - b[c]) * (a[c] - b[c]);
                    for (std::size_t c = 0; c < sa.data.size(); ++c) dsg += (sa.data[c] - sb.data[c]) * (sa.data[c] - sb.data[c]);
                    acc.dd[l][k - 1] += std::pow(std::sqrt(dmu), p0) + std::pow(std::sqrt(dsg), p0);
                    if (!marks.empty()) {
                        double s2 = 0.0, sp = 0.0;
                        for (const auto& z : marks) {
                            const State ga = raw.jump(tk, x, z, env), gb = tamed.jump(tk, x, z, env);
                            double dg = 0.0;
                            for (std::size_t c = 0; c < ga.size(); ++c) dg += (ga[c] - gb[c]) * (ga[c] - gb[c]);
                            s2 += dg;
                            sp += std::pow(std::sqrt(dg), p0);
                        }
                        acc.j2[l][k - 1] += lambda * s2 / static_cast<double>(marks.size());
                        acc.jp[l][k - 1] += lambda * sp / static_cast<double>(marks.size());
                    }
                }
            }
        }
        return acc;
    });

    GapTable table;
    table.p0 = p0;
    const double M = static_cast<double>(num_paths);
    for (std::size_t l = 0; l < n_list.size(); ++l) {
        GapRow row;
        row.n = n_list[l];
        for (std::size_t k = 0; k < n_list[l]; ++k) {
            CompensatedSum dd, j2, jp;
            for (const auto& b : batches) {
                dd += b.dd[l][k].value();
                j2 += b.j2[l][k].value();
                jp += b.jp[l][k].value();
            }
            const double jk = std::max(std::pow(j2.value() / M, p0 / 2.0), jp.value() / M);
            row.drift_diffusion_gap += dd.value() / M / static_cast<double>(n_list[l]);
            row.jump_gap += jk / static_cast<double>(n_list[l]);
            row.drift_diffusion_sup = std::max(row.drift_diffusion_sup, dd.value() / M);
            row.jump_sup = std::max(row.jump_sup, jk);
        }
        table.rows.push_back(row);
    }
    auto fit_of = [&](auto member) -> std::optional<RateFit> {
        std::vector<std::pair<double, double>> pts;
        for (const auto& r : table.rows)
            if (r.*member > 0.0) pts.emplace_back(1.0 / static_cast<double>(r.n), r.*member);
        if (pts.size() < 3) return std::nullopt;
        return fit_rate(pts);
    };
    table.drift_diffusion_fit = fit_of(&GapRow::drift_diffusion_gap);
    table.jump_fit = fit_of(&GapRow::jump_gap);
    return table;
}

}  // namespace levytame
