#pragma once

#include <cctype>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "levytame/errors.hpp"
#include "levytame/model.hpp"

namespace levytame {

/// String-valued model parameters, e.g. the keys of a config file's [model] section.
class ParamMap {
public:
    ParamMap() = default;
    ParamMap(std::map<std::string, std::string> values) : values_(std::move(values)) {}

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    double number(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse(key, it->second);
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse(key, item));
        return out;
    }

private:
    static double parse(const std::string& key, const std::string& text) {
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
            if (used != text.size()) throw std::invalid_argument(text);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("parameter '" + key + "' is not a number: '" + text + "'");
        }
    }

    std::map<std::string, std::string> values_;
};

using ModelFactory = std::function<Model(const ParamMap&)>;

namespace detail {

inline Model scalar_model(std::string name, double x0, double zeta, DriftFn drift, DiffusionFn diffusion) {
    Model m;
    m.name = std::move(name);
    m.coeffs = zero_coefficients(1, 1, 1.0);
    m.coeffs.zeta = zeta;
    if (drift) m.coeffs.drift = std::move(drift);
    if (diffusion) m.coeffs.diffusion = std::move(diffusion);
    m.x0 = State{x0};
    return m;
}

inline std::map<std::string, ModelFactory> builtin_presets() {
    std::map<std::string, ModelFactory> r;
    r["double-well"] = [](const ParamMap& p) {
        DoubleWellParams prm;
        prm.beta_hat = p.number("beta_hat", prm.beta_hat);
        prm.sigma_hat = p.number("sigma_hat", prm.sigma_hat);
        prm.gamma_hat = p.number("gamma_hat", prm.gamma_hat);
        prm.p_exp = p.number("p_exp", prm.p_exp);
        return double_well_preset(prm, p.number("intensity", 1.0), p.number("x0", 2.0));
    };
    r["zero"] = [](const ParamMap& p) { return scalar_model("zero", p.number("x0", 1.0), 0.0, nullptr, nullptr); };
    r["linear"] = [](const ParamMap& p) {
        const double a = p.number("a", 1.0), b = p.number("b", 0.5);
        return scalar_model(
            "linear", p.number("x0", 1.0), 0.0,
            [a](double, std::span<const double> x, const EnvState&) { return State{a * x[0]}; },
            [b](double, std::span<const double> x, const EnvState&) {
                Matrix m(1, 1);
                m(0, 0) = b * x[0];
                return m;
            });
    };
    r["ode-decay"] = [](const ParamMap& p) {
        return scalar_model("ode-decay", p.number("x0", 1.0), 0.0,
                            [](double, std::span<const double> x, const EnvState&) { return State{-x[0]}; }, nullptr);
    };
    r["cubic"] = [](const ParamMap& p) {
        return scalar_model("cubic", p.number("x0", 10.0), 2.0,
                            [](double, std::span<const double> x, const EnvState&) { return State{-x[0] * x[0] * x[0]}; }, nullptr);
    };
    // Double-well whose cubic coefficient depends on the regime, plus a linear delayed feedback.
    r["switching-double-well"] = [](const ParamMap& p) {
        DoubleWellParams prm;
        prm.sigma_hat = p.number("sigma_hat", prm.sigma_hat);
        prm.gamma_hat = p.number("gamma_hat", prm.gamma_hat);
        prm.p_exp = p.number("p_exp", prm.p_exp);
        const std::vector<double> betas = p.numbers("regime_beta_hat", {0.5, 1.0});
        const double coupling = p.number("delay_coupling", 0.1);
        if (betas.empty()) throw ConfigError("switching-double-well: regime_beta_hat is empty");
        for (double b : betas)
            if (!(b > 0.0)) throw ConfigError("switching-double-well: regime_beta_hat entries must be positive");
        Model m = double_well_preset(prm, p.number("intensity", 1.0), p.number("x0", 2.0));
        m.name = "switching-double-well";
        m.coeffs.drift = [betas, coupling](double s, std::span<const double> x, const EnvState& env) {
            const int r = env.regime.value_or(1);
            if (r < 1 || static_cast<std::size_t>(r) > betas.size()) throw ConfigError("switching-double-well: regime out of range");
            const double v = x[0];
            const double delayed = env.delayed ? (*env.delayed)[0] : 0.0;
            return State{sawtooth(s) * v - betas[static_cast<std::size_t>(r - 1)] * v * v * v + coupling * delayed};
        };
        return m;
    };
    return r;
}

inline std::map<std::string, ModelFactory>& preset_registry() {
    static std::map<std::string, ModelFactory> registry = builtin_presets();
    return registry;
}

inline std::mutex& preset_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

/// Adds or replaces a named model, making it selectable from config files.
inline void register_preset(const std::string& name, ModelFactory factory) {
    std::lock_guard lock(detail::preset_mutex());
    detail::preset_registry()[name] = std::move(factory);
}

inline std::vector<std::string> preset_names() {
    std::lock_guard lock(detail::preset_mutex());
    std::vector<std::string> names;
    for (const auto& [k, v] : detail::preset_registry()) names.push_back(k);
    return names;
}

inline Model make_preset(const std::string& name, const ParamMap& params = {}) {
    ModelFactory f;
    {
        std::lock_guard lock(detail::preset_mutex());
        auto it = detail::preset_registry().find(name);
        if (it == detail::preset_registry().end()) throw ConfigError("unknown model preset '" + name + "'");
        f = it->second;
    }
    Model m = f(params);
    m.validate();
    return m;
}

}  // namespace levytame
