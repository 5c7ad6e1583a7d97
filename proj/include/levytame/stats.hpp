#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "levytame/errors.hpp"
#include "levytame/linalg.hpp"

namespace levytame {

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // Euclidean norm of the log2 residuals
};

/// Ordinary least squares of log2(e) on log2(dt). The slope is the empirical convergence order.
inline RateFit fit_rate(std::span<const std::pair<double, double>> dt_error) {
    if (dt_error.size() < 3) throw ConfigError("fit_rate: need at least 3 rows");
    const double n = static_cast<double>(dt_error.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [dt, e] : dt_error) {
        if (!(dt > 0.0)) throw ConfigError("fit_rate: step sizes must be positive");
        if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError("fit_rate: errors must be positive and finite");
        sx += std::log2(dt);
        sy += std::log2(e);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [dt, e] : dt_error) {
        const double dx = std::log2(dt) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log2(e) - my);
    }
    if (sxx == 0.0) throw ConfigError("fit_rate: step sizes must not all coincide");
    RateFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    for (const auto& [dt, e] : dt_error) {
        const double r = std::log2(e) - (f.intercept + f.slope * std::log2(dt));
        rss += r * r;
    }
    f.residual = std::sqrt(rss);
    return f;
}

inline RateFit fit_rate(const std::vector<std::pair<double, double>>& dt_error) {
    return fit_rate(std::span<const std::pair<double, double>>(dt_error));
}

/// Standard error of the grand mean from per-batch means (batch-means method).
inline double batch_means_stderr(std::span<const double> batch_means) {
    const std::size_t b = batch_means.size();
    if (b < 2) return 0.0;
    CompensatedSum s;
    for (double v : batch_means) s += v;
    const double mean = s.value() / static_cast<double>(b);
    CompensatedSum ss;
    for (double v : batch_means) ss += (v - mean) * (v - mean);
    return std::sqrt(ss.value() / static_cast<double>(b - 1) / static_cast<double>(b));
}

}  // namespace levytame
