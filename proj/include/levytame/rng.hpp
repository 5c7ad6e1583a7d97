#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "levytame/errors.hpp"
#include "levytame/linalg.hpp"

namespace levytame {

using Engine = std::mt19937_64;

enum class StreamTag : std::uint32_t { brownian = 1, jumps = 2, randomizer = 3, init = 4, markov = 5 };

/// Names one independent random substream. `level` distinguishes randomizer streams per step count
/// (and is free for other tags).
struct StreamKey {
    std::uint64_t base_seed = 0;
    std::uint64_t path_index = 0;
    StreamTag tag = StreamTag::brownian;
    std::uint64_t level = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Engine seeded from a hash of the key. Same key, same stream, regardless of which thread asks.
inline Engine make_engine(const StreamKey& key) {
    std::uint64_t h = detail::splitmix64(key.base_seed);
    h = detail::splitmix64(h ^ detail::splitmix64(key.path_index + 0x1234567ULL));
    h = detail::splitmix64(h ^ (static_cast<std::uint64_t>(key.tag) << 56));
    h = detail::splitmix64(h ^ detail::splitmix64(key.level + 0x7654321ULL));
    const std::uint64_t h2 = detail::splitmix64(h + 0xda942042e4dd58b5ULL);
    std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(h2), static_cast<std::uint32_t>(h2 >> 32)};
    return Engine(seq);
}

/// Uniform draw on (0, 1].
inline double uniform_open_closed(Engine& eng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return 1.0 - u(eng);
}

/// n_fine i.i.d. N(0, (T/n_fine) I_m) vectors, flattened row-major (n_fine x m).
inline std::vector<double> brownian_increments(const StreamKey& key, std::size_t n_fine, std::size_t m, double horizon) {
    if (n_fine == 0 || m == 0) throw ConfigError("brownian_increments: sizes must be positive");
    Engine eng = make_engine(key);
    std::normal_distribution<double> normal(0.0, std::sqrt(horizon / static_cast<double>(n_fine)));
    std::vector<double> out(n_fine * m);
    for (double& v : out) v = normal(eng);
    return out;
}

/// Sums consecutive blocks of `factor` increments (each an m-vector) into coarse-cell increments.
inline std::vector<double> coarsen(std::span<const double> fine, std::size_t m, std::size_t factor) {
    if (m == 0 || factor == 0 || fine.size() % m != 0 || (fine.size() / m) % factor != 0)
        throw ConfigError("coarsen: factor must divide the number of increments");
    const std::size_t n_coarse = fine.size() / m / factor;
    std::vector<double> out(n_coarse * m, 0.0);
    for (std::size_t j = 0; j < n_coarse; ++j)
        for (std::size_t i = j * factor; i < (j + 1) * factor; ++i)
            for (std::size_t c = 0; c < m; ++c) out[j * m + c] += fine[i * m + c];
    return out;
}

/// Scalar-increment convenience overload.
inline std::vector<double> coarsen(std::span<const double> fine, std::size_t factor) { return coarsen(fine, 1, factor); }

using MarkSampler = std::function<State(Engine&)>;

struct Jump {
    double time;
    State mark;
};

/// Compound Poisson path on (0, T] with total intensity lambda; times sorted ascending.
inline std::vector<Jump> jump_path(const StreamKey& key, double intensity, double horizon, const MarkSampler& mark_sampler) {
    if (!(intensity >= 0.0) || !std::isfinite(intensity)) throw ConfigError("jump_path: intensity must be finite and >= 0");
    std::vector<Jump> jumps;
    if (intensity == 0.0) return jumps;
    if (!mark_sampler) throw ConfigError("jump_path: mark sampler required for positive intensity");
    Engine eng = make_engine(key);
    std::poisson_distribution<long> count_dist(intensity * horizon);
    const long count = count_dist(eng);
    std::vector<double> times(static_cast<std::size_t>(count));
    for (double& t : times) t = horizon * uniform_open_closed(eng);
    std::sort(times.begin(), times.end());
    jumps.reserve(times.size());
    for (double t : times) jumps.push_back(Jump{t, mark_sampler(eng)});
    return jumps;
}

/// All randomness of one Monte Carlo path. Brownian increments live on the finest grid; coarser
/// levels read them through coarsen(). Randomizers are independent per level.
struct PathDraw {
    std::uint64_t base_seed = 0;
    std::uint64_t path_index = 0;
    double horizon = 1.0;
    std::size_t noise_dim = 1;
    std::size_t n_fine = 1;
    std::vector<double> fine_increments;
    std::vector<Jump> jumps;
    std::map<std::size_t, std::vector<double>> phis;
    State x0;

    const std::vector<double>& randomizers(std::size_t n) const {
        auto it = phis.find(n);
        if (it == phis.end()) throw ConfigError("PathDraw: no randomizers drawn for n = " + std::to_string(n));
        return it->second;
    }
};

/// n draws from U(0, 1] on the randomizer stream of level n.
inline std::vector<double> randomizer_draws(std::uint64_t base_seed, std::uint64_t path_index, std::size_t n) {
    Engine eng = make_engine({base_seed, path_index, StreamTag::randomizer, n});
    std::vector<double> out(n);
    for (double& v : out) v = uniform_open_closed(eng);
    return out;
}

struct DrawSpec {
    std::size_t n_fine = 1;
    std::size_t noise_dim = 1;
    double horizon = 1.0;
    double intensity = 0.0;
    MarkSampler mark_sampler;
    std::vector<std::size_t> levels;  // step counts that need randomizers
    State x0;
    std::function<State(Engine&)> x0_sampler;  // overrides x0 when set
};

/// Pure function of (base_seed, path_index, spec).
inline PathDraw make_path_draw(std::uint64_t base_seed, std::uint64_t path_index, const DrawSpec& spec) {
    PathDraw d;
    d.base_seed = base_seed;
    d.path_index = path_index;
    d.horizon = spec.horizon;
    d.noise_dim = spec.noise_dim;
    d.n_fine = spec.n_fine;
    d.fine_increments = brownian_increments({base_seed, path_index, StreamTag::brownian, 0}, spec.n_fine, spec.noise_dim, spec.horizon);
    d.jumps = jump_path({base_seed, path_index, StreamTag::jumps, 0}, spec.intensity, spec.horizon, spec.mark_sampler);
    for (std::size_t n : spec.levels) {
        if (n == 0 || spec.n_fine % n != 0) throw ConfigError("make_path_draw: level must divide the fine resolution");
        d.phis.emplace(n, randomizer_draws(base_seed, path_index, n));
    }
    if (spec.x0_sampler) {
        Engine eng = make_engine({base_seed, path_index, StreamTag::init, 0});
        d.x0 = spec.x0_sampler(eng);
    } else {
        d.x0 = spec.x0;
    }
    return d;
}

}  // namespace levytame
