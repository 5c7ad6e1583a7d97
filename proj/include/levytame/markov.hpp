#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "levytame/errors.hpp"
#include "levytame/rng.hpp"

namespace levytame {

/// Generator matrix Q of a continuous-time Markov chain on {1, ..., m0}.
/// Off-diagonal rates are nonnegative and rows sum to zero.
class Generator {
public:
    Generator(std::size_t m0, std::vector<double> row_major) : m0_(m0), q_(std::move(row_major)) {
        if (m0_ == 0) throw ConfigError("Generator: need at least one state");
        if (q_.size() != m0_ * m0_) throw ConfigError("Generator: matrix must be m0 x m0");
        for (std::size_t i = 0; i < m0_; ++i) {
            double off = 0.0, scale = 0.0;
            for (std::size_t j = 0; j < m0_; ++j) {
                const double v = q_[i * m0_ + j];
                if (!std::isfinite(v)) throw ConfigError("Generator: non-finite rate");
                scale = std::max(scale, std::abs(v));
                if (i == j) continue;
                if (v < 0.0) throw ConfigError("Generator: negative off-diagonal rate");
                off += v;
            }
            if (std::abs(q_[i * m0_ + i] + off) > 1e-12 * std::max(1.0, scale))
                throw ConfigError("Generator: rows must sum to zero");
        }
    }

    std::size_t states() const noexcept { return m0_; }

    /// q_{ij} with 1-based regime indices.
    double rate(int i, int j) const { return q_[index(i) * m0_ + index(j)]; }

    /// Total exit rate -q_{ii}.
    double exit_rate(int i) const { return -rate(i, i); }

    bool contains(int i) const noexcept { return i >= 1 && static_cast<std::size_t>(i) <= m0_; }

private:
    std::size_t index(int i) const {
        if (!contains(i)) throw ConfigError("Generator: regime index outside 1..m0");
        return static_cast<std::size_t>(i - 1);
    }

    std::size_t m0_;
    std::vector<double> q_;
};

/// Right-continuous piecewise-constant path: states[i] holds on [switch_times[i-1], switch_times[i]).
struct MarkovPath {
    std::vector<double> switch_times;
    std::vector<int> states;
    double horizon = 0.0;

    /// alpha_t, right-continuous.
    int regime_at(double t) const {
        if (!(t >= 0.0 && t <= horizon)) throw ConfigError("MarkovPath: time outside [0, T]");
        const auto it = std::upper_bound(switch_times.begin(), switch_times.end(), t);
        return states[static_cast<std::size_t>(it - switch_times.begin())];
    }

    /// Single-regime path.
    static MarkovPath constant(int regime, double horizon) { return MarkovPath{{}, {regime}, horizon}; }
};

inline int regime_at(const MarkovPath& path, double t) { return path.regime_at(t); }

/// Direct event simulation: Exp(-q_ii) holding times, jump to j with probability q_ij / -q_ii.
inline MarkovPath simulate_ctmc(const Generator& gen, int alpha0, double horizon, const StreamKey& key) {
    if (!gen.contains(alpha0)) throw ConfigError("simulate_ctmc: initial regime outside 1..m0");
    if (!(horizon > 0.0)) throw ConfigError("simulate_ctmc: horizon must be positive");
    MarkovPath path;
    path.horizon = horizon;
    path.states.push_back(alpha0);
    Engine eng = make_engine(key);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double t = 0.0;
    int current = alpha0;
    const int m0 = static_cast<int>(gen.states());
    for (;;) {
        const double rate = gen.exit_rate(current);
        if (rate <= 0.0) break;  // absorbing
        std::exponential_distribution<double> hold(rate);
        t += hold(eng);
        if (t > horizon) break;
        double target = u01(eng) * rate;
        int next = current;
        for (int j = 1; j <= m0; ++j) {
            if (j == current) continue;
            const double q = gen.rate(current, j);
            if (q <= 0.0) continue;
            next = j;
            if (target < q) break;
            target -= q;
        }
        path.switch_times.push_back(t);
        path.states.push_back(next);
        current = next;
    }
    return path;
}

}  // namespace levytame
