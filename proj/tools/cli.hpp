#pragma once

// levytame command line front end: converge | simulate | verify | moments.
// Kept in a header so the test suite can drive it in-process.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include "levytame/io.hpp"
#include "levytame/levytame.hpp"

namespace levytame::cli {

enum ExitCode : int { ok = 0, config_error = 2, diverged = 3 };

/// Options that may come from the command line; when set they override the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<std::string> levels;
    std::optional<std::size_t> ref;
    std::optional<std::string> variant;
    std::optional<std::string> format;
    std::optional<std::string> out;
    std::optional<unsigned> workers;
    bool quiet = false;
};

/// INI file with [sections]; keys are addressed as "section.key".
class Config {
public:
    static Config load(const std::string& path) {
        Config c;
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        try {
            boost::property_tree::ini_parser::read_ini(in, c.tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
        return c;
    }

    static Config from_string(const std::string& text) {
        Config c;
        std::istringstream in(text);
        try {
            boost::property_tree::ini_parser::read_ini(in, c.tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
        return c;
    }

    bool has(const std::string& key) const { return static_cast<bool>(tree_.get_optional<std::string>(key)); }

    std::string text(const std::string& key, const std::string& fallback) const { return tree_.get<std::string>(key, fallback); }

    double number(const std::string& key, double fallback) const {
        auto v = tree_.get_optional<std::string>(key);
        return v ? ParamMap(std::map<std::string, std::string>{{key, *v}}).number(key, fallback) : fallback;
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
        auto v = tree_.get_optional<std::string>(key);
        return v ? ParamMap(std::map<std::string, std::string>{{key, *v}}).numbers(key, fallback) : fallback;
    }

    std::size_t count(const std::string& key, std::size_t fallback) const {
        const double v = number(key, static_cast<double>(fallback));
        if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError("'" + key + "' must be a nonnegative integer");
        return static_cast<std::size_t>(v);
    }

    /// Every key of a section as strings.
    std::map<std::string, std::string> section(const std::string& name) const {
        std::map<std::string, std::string> out;
        if (auto child = tree_.get_child_optional(name))
            for (const auto& [k, v] : *child) out[k] = v.get_value<std::string>();
        return out;
    }

private:
    boost::property_tree::ptree tree_;
};

inline std::vector<std::size_t> parse_counts(const std::string& what, const std::vector<double>& vals) {
    std::vector<std::size_t> out;
    for (double v : vals) {
        if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError(what + " entries must be positive integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

inline Model load_model(const Config& cfg) {
    auto params = cfg.section("model");
    auto it = params.find("name");
    if (it == params.end() || it->second.empty()) throw ConfigError("config has no [model] name");
    const std::string name = it->second;
    params.erase(it);
    return make_preset(name, ParamMap(params));
}

struct RunSettings {
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string format = "csv";
    std::filesystem::path out = ".";
};

inline RunSettings run_settings(const Config& cfg, const Overrides& ov) {
    RunSettings s;
    s.seed = ov.seed.value_or(static_cast<std::uint64_t>(cfg.count("run.seed", 1)));
    s.workers = ov.workers.value_or(static_cast<unsigned>(cfg.count("run.workers", 1)));
    s.format = ov.format.value_or(cfg.text("run.format", "csv"));
    if (s.format != "csv" && s.format != "json") throw ConfigError("format must be csv or json");
    s.out = ov.out.value_or(cfg.text("run.out", "."));
    std::error_code ec;
    std::filesystem::create_directories(s.out, ec);
    if (ec || !std::filesystem::is_directory(s.out)) throw ConfigError("output directory not writable: " + s.out.string());
    return s;
}

inline std::vector<std::size_t> levels_from(const Config& cfg, const Overrides& ov, const std::string& key, std::vector<double> fallback) {
    if (ov.levels) return parse_counts("levels", ParamMap(std::map<std::string, std::string>{{"levels", *ov.levels}}).numbers("levels", {}));
    return parse_counts(key, cfg.numbers(key, std::move(fallback)));
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << content;
}

inline SchemeConfig scheme_from(const Config& cfg, const Overrides& ov) {
    SchemeConfig s;
    s.variant = parse_variant(ov.variant.value_or(cfg.text("scheme.variant", "randomized_tamed")));
    s.n = cfg.count("scheme.n", 256);
    s.taming_n_power = cfg.number("taming.n_power", 0.5);
    if (cfg.has("taming.x_power")) s.taming_x_power = cfg.number("taming.x_power", 0.0);
    return s;
}

inline int cmd_converge(const Config& cfg, const Overrides& ov, std::ostream& out, std::ostream& err) {
    const RunSettings rs = run_settings(cfg, ov);
    StudyConfig sc;
    sc.model = load_model(cfg);
    sc.levels = levels_from(cfg, ov, "study.levels", {64, 128, 256, 512, 1024, 2048});
    sc.reference_n = ov.ref.value_or(cfg.count("study.reference_n", 8192));
    sc.reference_variant = parse_variant(cfg.text("study.reference_variant", "randomized_tamed"));
    sc.num_paths = ov.paths.value_or(cfg.count("study.paths", 2000));
    sc.p_list = cfg.numbers("study.p_list", {1, 2, 3, 4});
    sc.error_time = parse_error_time(cfg.text("study.error_time", "terminal"));
    sc.batches = cfg.count("study.batches", 20);
    sc.base_seed = rs.seed;
    sc.workers = rs.workers;
    sc.taming_n_power = cfg.number("taming.n_power", 0.5);
    if (cfg.has("taming.x_power")) sc.taming_x_power = cfg.number("taming.x_power", 0.0);
    sc.variants.clear();
    if (ov.variant) {
        sc.variants.push_back(parse_variant(*ov.variant));
    } else {
        std::stringstream ss(cfg.text("study.variants", "randomized_tamed"));
        std::string v;
        while (std::getline(ss, v, ','))
            if (!v.empty()) sc.variants.push_back(parse_variant(v));
    }
    if (!ov.quiet) {
        sc.progress = [&err, step = std::max<std::size_t>(1, sc.num_paths / 10)](std::size_t done, std::size_t total) {
            if (done % step == 0 || done == total) err << "converge: " << done << "/" << total << " paths\n";
        };
    }
    const auto reports = strong_error_study(sc);

    nlohmann::json rates = nlohmann::json::array();
    bool unusable = false;
    for (const auto& rep : reports) {
        const std::string suffix = reports.size() > 1 ? "_" + rep.variant : "";
        std::ostringstream body;
        if (rs.format == "csv") {
            io::write_error_csv(body, rep);
            write_file(rs.out / ("errors" + suffix + ".csv"), body.str());
        } else {
            body << io::to_json(rep).dump(2) << '\n';
            write_file(rs.out / ("errors" + suffix + ".json"), body.str());
        }
        std::ostringstream svg;
        io::write_error_svg(svg, rep);
        write_file(rs.out / ("errors" + suffix + ".svg"), svg.str());
        rates.push_back({{"variant", rep.variant}, {"model", rep.model}, {"seed", rep.seed}, {"slopes", io::slopes_json(rep)}});
        for (const auto& s : rep.slopes)
            out << rep.variant << " p=" << io::format_number(s.p) << " slope=" << (s.fit ? io::format_number(s.fit->slope) : "n/a") << '\n';
        unusable = unusable || rep.any_unusable();
    }
    write_file(rs.out / "rates.json", rates.dump(2) + "\n");
    if (unusable) {
        err << "converge: more than half of the paths diverged at some level\n";
        return diverged;
    }
    return ok;
}

inline int cmd_simulate(const Config& cfg, const Overrides& ov, std::ostream& out, std::ostream& err) {
    const RunSettings rs = run_settings(cfg, ov);
    const Model model = load_model(cfg);
    const SchemeConfig sc = scheme_from(cfg, ov);
    const PathDraw draw = draw_path(rs.seed, 0, model, sc.n, {sc.n});
    const bool switching = cfg.has("sdde.delay") || cfg.has("sdde.generator");
    std::optional<Trajectory> traj;
    try {
        if (switching) {
            const double theta = cfg.number("sdde.delay", 0.0);
            const double c = cfg.number("sdde.initial_value", model.x0.empty() ? 0.0 : model.x0[0]);
            const std::size_t d = model.coeffs.dim_state;
            std::function<State(double)> segment = [c, d](double) { return State(d, c); };
            MarkovPath chain = MarkovPath::constant(1, model.coeffs.horizon);
            if (cfg.has("sdde.generator")) {
                const auto q = cfg.numbers("sdde.generator", {});
                const auto m0 = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(q.size()))));
                const Generator gen(m0, q);
                const int alpha0 = static_cast<int>(cfg.count("sdde.alpha0", 1));
                chain = simulate_ctmc(gen, alpha0, model.coeffs.horizon, {rs.seed, 0, StreamTag::markov, 0});
            }
            traj = simulate_sdde_switching(model, sc, draw, theta, segment, chain);
            if (traj->snapped_delay)
                err << "simulate: WARNING delay " << theta << " is not a multiple of dt; snapped to " << *traj->snapped_delay << '\n';
        } else {
            traj = simulate_path(model, sc, draw);
        }
    } catch (const DivergedPath& e) {
        err << "simulate: path diverged at step " << e.step() << '\n';
        return diverged;
    }
    std::ostringstream body;
    io::write_trajectory_csv(body, *traj);
    write_file(rs.out / "trajectory.csv", body.str());
    out << "simulate: wrote " << traj->states.size() << " rows to " << (rs.out / "trajectory.csv").string() << '\n';
    return ok;
}

inline int cmd_moments(const Config& cfg, const Overrides& ov, std::ostream& out, std::ostream& err) {
    const RunSettings rs = run_settings(cfg, ov);
    const Model model = load_model(cfg);
    const SchemeConfig sc = scheme_from(cfg, ov);
    const auto n_list = levels_from(cfg, ov, "moments.n_list", {64, 128, 256, 512, 1024});
    const double q = cfg.number("moments.q", 4.0);
    const std::size_t paths = ov.paths.value_or(cfg.count("moments.paths", 10000));
    const MomentTable t = moment_probe(model, sc, n_list, q, paths, ProbeOptions{rs.seed, rs.workers, 20});
    std::ostringstream body;
    io::write_moment_csv(body, t);
    write_file(rs.out / "moments.csv", body.str());
    out << body.str();
    out << "# max/min across n: " << io::format_number(t.spread()) << '\n';
    (void)err;
    return ok;
}

inline int cmd_verify(const Config& cfg, const Overrides& ov, std::ostream& out, std::ostream& err) {
    const RunSettings rs = run_settings(cfg, ov);
    const Model model = load_model(cfg);
    const auto params = cfg.section("model");
    std::vector<ConstraintReport> rows;
    nlohmann::json doc;
    if (model.name == "double-well") {
        DoubleWellParams prm;
        const ParamMap pm(params);
        prm.beta_hat = pm.number("beta_hat", prm.beta_hat);
        prm.sigma_hat = pm.number("sigma_hat", prm.sigma_hat);
        prm.gamma_hat = pm.number("gamma_hat", prm.gamma_hat);
        prm.p_exp = pm.number("p_exp", prm.p_exp);
        for (double q : cfg.numbers("verify.q_list", {4, 648})) rows.push_back(check_coercivity(q, prm.beta_hat, prm.sigma_hat, prm.gamma_hat));
        const double lambda = cfg.number("verify.lambda", 1.001);
        for (double p0 : cfg.numbers("verify.p0_list", {2, 4}))
            rows.push_back(check_monotonicity(p0, lambda, prm.beta_hat, prm.sigma_hat, prm.gamma_hat));
        const auto mono = check_double_well_monotonicity_empirical(prm, cfg.count("verify.samples", 10000), rs.seed, model.jumps.intensity);
        doc["monotonicity_empirical"] = {{"fitted_constant", mono.fitted_constant}, {"samples", mono.samples},
                                         {"sign_violations", mono.sign_violations}, {"mark_m2", mono.mark_m2}};
    }
    const SampleBox box{0.0, model.coeffs.horizon, cfg.number("verify.x_radius", 10.0)};
    const std::size_t samples = cfg.count("verify.samples", 10000);
    const GrowthReport growth = probe_growth(model.coeffs, box, samples, rs.seed);
    doc["growth"] = {{"drift_constant", growth.drift_constant}, {"diffusion_constant", growth.diffusion_constant}};
    nlohmann::json taming = nlohmann::json::array();
    for (double n : cfg.numbers("verify.taming_n", {16, 64, 256, 1024})) {
        const SchemeConfig sc = scheme_from(cfg, ov);
        TamingConfig tc = sc.taming(model.coeffs.zeta);
        tc.n = static_cast<std::size_t>(n);
        const BoundReport b = check_taming_bounds(model.coeffs, model.jumps, tc, box, samples, rs.seed);
        taming.push_back({{"n", tc.n},
                          {"drift_violations", b.drift_violations},
                          {"diffusion_violations", b.diffusion_violations},
                          {"jump_violations", b.jump_violations},
                          {"drift_constant", b.drift_constant},
                          {"diffusion_constant", b.diffusion_constant}});
    }
    doc["taming_bounds"] = taming;
    nlohmann::json cons = nlohmann::json::array();
    for (const auto& r : rows)
        cons.push_back({{"id", r.id}, {"lhs_log10", r.lhs_log10}, {"rhs_log10", r.rhs_log10}, {"margin_log10", r.margin_log10},
                        {"satisfied", r.satisfied}});
    doc["constraints"] = cons;

    std::ostringstream table;
    io::write_constraint_csv(table, rows);
    write_file(rs.out / "constraints.csv", table.str());
    write_file(rs.out / "verify.json", doc.dump(2) + "\n");

    out << table.str();
    out << "# growth drift_constant=" << io::format_number(growth.drift_constant)
        << " diffusion_constant=" << io::format_number(growth.diffusion_constant) << '\n';
    for (const auto& t : taming)
        out << "# taming n=" << t["n"].get<std::size_t>() << " violations=" << t["drift_violations"].get<std::size_t>() + t["diffusion_violations"].get<std::size_t>() + t["jump_violations"].get<std::size_t>()
            << " drift_constant=" << io::format_number(t["drift_constant"].get<double>()) << '\n';
    (void)err;
    return ok;
}

/// Entry point; args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Randomized tamed Euler scheme for jump SDEs: simulation and strong-error studies", "levytame"};
    app.require_subcommand(1);
    Overrides ov;
    std::string config_path;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "INI configuration file")->required();
        sub->add_option("--seed", ov.seed, "base seed (determines all randomness)");
        sub->add_option("--paths", ov.paths, "number of Monte Carlo paths");
        sub->add_option("--levels", ov.levels, "comma separated step counts");
        sub->add_option("--ref", ov.ref, "reference step count");
        sub->add_option("--variant", ov.variant, "randomized_tamed | tamed | classical | randomized_untamed");
        sub->add_option("--format", ov.format, "csv | json");
        sub->add_option("--out", ov.out, "output directory");
        sub->add_option("--workers", ov.workers, "worker threads (0 = all cores)");
        sub->add_flag("--quiet", ov.quiet, "no progress output");
    };
    auto* converge = app.add_subcommand("converge", "strong L^p error study against a fine reference");
    auto* simulate = app.add_subcommand("simulate", "dump one trajectory as CSV");
    auto* verify = app.add_subcommand("verify", "parameter constraint and taming bound checks");
    auto* moments = app.add_subcommand("moments", "empirical moment bounds across step counts");
    for (auto* s : {converge, simulate, verify, moments}) add_common(s);

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "levytame: " << e.what() << "\n" << app.help();
        return config_error;
    }
    try {
        const Config cfg = Config::load(config_path);
        if (converge->parsed()) return cmd_converge(cfg, ov, out, err);
        if (simulate->parsed()) return cmd_simulate(cfg, ov, out, err);
        if (verify->parsed()) return cmd_verify(cfg, ov, out, err);
        return cmd_moments(cfg, ov, out, err);
    } catch (const ConfigError& e) {
        err << "levytame: configuration error: " << e.what() << '\n';
        return config_error;
    }
}

}  // namespace levytame::cli
