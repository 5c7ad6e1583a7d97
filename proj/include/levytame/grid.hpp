#pragma once

#include <cmath>
#include <cstddef>

#include "levytame/errors.hpp"

namespace levytame {

/// Equidistant partition 0 = t_0 < ... < t_n = T.
class TimeGrid {
public:
    TimeGrid(std::size_t n, double horizon) : n_(n), horizon_(horizon) {
        if (n == 0) throw ConfigError("TimeGrid: step count must be positive");
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("TimeGrid: horizon must be positive");
    }

    std::size_t steps() const noexcept { return n_; }
    double horizon() const noexcept { return horizon_; }
    double dt() const noexcept { return horizon_ / static_cast<double>(n_); }

    /// t_k, computed as (k*T)/n so that nested grids share points exactly.
    double point(std::size_t k) const noexcept {
        return (static_cast<double>(k) * horizon_) / static_cast<double>(n_);
    }

    /// Index k-1 of the cell [t_{k-1}, t_k) containing t; t = T maps into the last cell.
    std::size_t cell_index(double t) const {
        if (!(t >= 0.0 && t <= horizon_)) throw ConfigError("TimeGrid: time outside [0, T]");
        auto k = static_cast<std::size_t>(std::floor(t / horizon_ * static_cast<double>(n_)));
        if (k >= n_) k = n_ - 1;
        // Repair rounding in t/T*n against the exactly computed grid points.
        while (k > 0 && point(k) > t) --k;
        while (k + 1 < n_ && point(k + 1) <= t) ++k;
        return k;
    }

    /// Left endpoint kappa_n(t).
    double kappa(double t) const { return point(cell_index(t)); }

    /// Randomized evaluation point xi_n = t_{k-1} + dt * phi for step k in 1..n, phi in (0, 1].
    double xi(std::size_t k, double phi) const {
        if (k < 1 || k > n_) throw ConfigError("TimeGrid: step index outside 1..n");
        if (!(phi > 0.0 && phi <= 1.0)) throw ConfigError("TimeGrid: randomizer outside (0, 1]");
        return point(k - 1) + dt() * phi;
    }

    /// Step k in 1..n whose half-open cell (t_{k-1}, t_k] holds tau (stochastic-integral convention).
    std::size_t owning_step(double tau) const {
        if (!(tau > 0.0 && tau <= horizon_)) throw ConfigError("TimeGrid: jump time outside (0, T]");
        auto k = static_cast<std::size_t>(std::ceil(tau / horizon_ * static_cast<double>(n_)));
        if (k < 1) k = 1;
        if (k > n_) k = n_;
        while (k > 1 && point(k - 1) >= tau) --k;
        while (k < n_ && point(k) < tau) ++k;
        return k;
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    std::size_t n_;
    double horizon_;
};

}  // namespace levytame
