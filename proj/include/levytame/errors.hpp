#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace levytame {

/// Invalid parameters, configurations or arguments supplied by the caller.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A simulated path produced a non-finite state.
class DivergedPath : public std::runtime_error {
public:
    DivergedPath(std::size_t step, std::vector<double> state)
        : std::runtime_error("path diverged at step " + std::to_string(step)),
          step_(step), state_(std::move(state)) {}

    /// Index k of the first step whose output was non-finite.
    std::size_t step() const noexcept { return step_; }
    /// Left state x_{k-1} that the failing step started from.
    const std::vector<double>& state() const noexcept { return state_; }

private:
    std::size_t step_;
    std::vector<double> state_;
};

}  // namespace levytame
