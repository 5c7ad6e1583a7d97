#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "levytame/harness.hpp"
#include "levytame/scheme.hpp"
#include "levytame/verify.hpp"

namespace levytame::io {

/// 17 significant digits, locale independent; parse_number(format_number(v)) == v.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

/// Inverse of format_number.
inline double parse_number(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("not a number: '" + s + "'");
    return v;
}

/// `dt,p,error,stderr,diverged_frac` rows followed by `# slope p=<p>: <value>` comments.
inline void write_error_csv(std::ostream& os, const ErrorReport& rep) {
    os << "dt,p,error,stderr,diverged_frac\n";
    for (const auto& r : rep.rows)
        os << format_number(r.dt) << ',' << format_number(r.p) << ',' << format_number(r.error) << ','
           << format_number(r.std_error) << ',' << format_number(r.diverged_fraction) << '\n';
    for (const auto& s : rep.slopes)
        os << "# slope p=" << format_number(s.p) << ": "
           << format_number(s.fit ? s.fit->slope : std::numeric_limits<double>::quiet_NaN()) << '\n';
    for (const auto& r : rep.rows)
        if (!r.usable) os << "# unusable dt=" << format_number(r.dt) << " p=" << format_number(r.p) << '\n';
    os << "# model=" << rep.model << " variant=" << rep.variant << " seed=" << rep.seed << " paths=" << rep.paths
       << " reference_n=" << rep.reference_n
       << " reference_variant=" << rep.reference_variant << " error_time=" << to_string(rep.error_time) << '\n';
}

inline nlohmann::json slopes_json(const ErrorReport& rep) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : rep.slopes) {
        nlohmann::json j{{"p", s.p}};
        if (s.fit) {
            j["slope"] = s.fit->slope;
            j["intercept"] = s.fit->intercept;
            j["residual"] = s.fit->residual;
        } else {
            j["slope"] = nullptr;
        }
        arr.push_back(j);
    }
    return arr;
}

inline nlohmann::json to_json(const ErrorReport& rep) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows) {
        auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
        rows.push_back({{"dt", r.dt}, {"n", r.n}, {"p", r.p}, {"error", num(r.error)}, {"stderr", num(r.std_error)},
                        {"diverged_frac", r.diverged_fraction}, {"usable", r.usable}});
    }
    return {{"model", rep.model},
            {"variant", rep.variant},
            {"seed", rep.seed},
            {"paths", rep.paths},
            {"reference_n", rep.reference_n},
            {"reference_variant", rep.reference_variant},
            {"error_time", std::string(to_string(rep.error_time))},
            {"reference_diverged_frac", rep.reference_diverged_fraction},
            {"rows", rows},
            {"slopes", slopes_json(rep)}};
}

/// `t,x_1..x_d` and a trailing `regime` column when the trajectory carries regimes.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    const std::size_t d = tr.states.empty() ? 0 : tr.states.front().size();
    os << 't';
    for (std::size_t i = 1; i <= d; ++i) os << ",x_" << i;
    if (!tr.regimes.empty()) os << ",regime";
    os << '\n';
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        os << format_number(tr.grid.point(k));
        for (double v : tr.states[k]) os << ',' << format_number(v);
        if (!tr.regimes.empty()) os << ',' << tr.regimes[k];
        os << '\n';
    }
}

inline void write_moment_csv(std::ostream& os, const MomentTable& t) {
    os << "n,q,sup_moment,diverged_frac,first_divergence_step\n";
    for (const auto& r : t.rows)
        os << r.n << ',' << format_number(r.q) << ',' << format_number(r.sup_moment) << ',' << format_number(r.diverged_fraction) << ','
           << (r.first_divergence_step ? std::to_string(*r.first_divergence_step) : std::string()) << '\n';
}

inline void write_constraint_csv(std::ostream& os, const std::vector<ConstraintReport>& rows) {
    os << "constraint,lhs_log10,rhs_log10,margin_log10,satisfied\n";
    for (const auto& r : rows)
        os << r.id << ',' << format_number(r.lhs_log10) << ',' << format_number(r.rhs_log10) << ',' << format_number(r.margin_log10)
           << ',' << (r.satisfied ? "true" : "false") << '\n';
}

/// Log-log plot of error against dt, one polyline per p, plus a dashed slope-1/2 guide.
inline void write_error_svg(std::ostream& os, const ErrorReport& rep) {
    constexpr double W = 640, H = 480, L = 70, R = 20, T = 30, B = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& r : rep.rows) {
        if (!(r.error > 0.0) || !std::isfinite(r.error)) continue;
        xmin = std::min(xmin, std::log2(r.dt));
        xmax = std::max(xmax, std::log2(r.dt));
        ymin = std::min(ymin, std::log2(r.error));
        ymax = std::max(ymax, std::log2(r.error));
    }
    if (!std::isfinite(xmin)) xmin = -1, xmax = 0, ymin = -1, ymax = 0;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    ymin -= 0.25;
    ymax += 0.25;
    auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int e = static_cast<int>(std::ceil(xmin)); e <= static_cast<int>(std::floor(xmax)); ++e)
        os << "<text x=\"" << px(e) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">2^" << e << "</text>\n";
    for (int e = static_cast<int>(std::ceil(ymin)); e <= static_cast<int>(std::floor(ymax)); ++e)
        os << "<text x=\"" << L - 6 << "\" y=\"" << py(e) + 4 << "\" text-anchor=\"end\">2^" << e << "</text>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">step size dt</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
       << ")\" text-anchor=\"middle\">strong L^p error</text>\n";

    std::size_t ci = 0;
    for (const auto& s : rep.slopes) {
        std::ostringstream pts;
        for (const auto& r : rep.rows)
            if (r.p == s.p && r.error > 0.0 && std::isfinite(r.error)) pts << px(std::log2(r.dt)) << ',' << py(std::log2(r.error)) << ' ';
        const char* c = colors[ci % 6];
        os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
        os << "<text x=\"" << W - R - 90 << "\" y=\"" << T + 14 * (ci + 1) << "\" fill=\"" << c << "\">L^" << format_number(s.p) << " slope "
           << (s.fit ? format_number(std::round(s.fit->slope * 1000) / 1000) : std::string("n/a")) << "</text>\n";
        ++ci;
    }
    // slope 1/2 guide through the top-right data point
    const double gx1 = xmax, gy1 = ymax - 0.25, gx0 = xmin, gy0 = gy1 - 0.5 * (xmax - xmin);
    os << "<line x1=\"" << px(gx0) << "\" y1=\"" << py(gy0) << "\" x2=\"" << px(gx1) << "\" y2=\"" << py(gy1)
       << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    os << "<text x=\"" << px(gx0) + 4 << "\" y=\"" << py(gy0) - 6 << "\" fill=\"gray\">slope 1/2</text>\n";
    os << "</svg>\n";
}

}  // namespace levytame::io
