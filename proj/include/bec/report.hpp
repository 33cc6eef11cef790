#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "bec/csv.hpp"
#include "bec/harness.hpp"

namespace bec {

namespace fs = std::filesystem;

inline std::string cell_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "cell_%04zu.csv", index);
    return buf;
}

inline nlohmann::json sweep_summary_json(const ExperimentConfig& base, const SweepResult& result) {
    using nlohmann::json;
    auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json cells = json::array();
    for (const auto& c : result.cells) {
        cells.push_back({{"index", c.index},
                         {"alpha", c.alpha},
                         {"beta", c.beta},
                         {"zeta", c.zeta},
                         {"file", cell_file_name(c.index)},
                         {"final_mean_rmscbe", finite_or_null(c.final_mean)},
                         {"final_std_rmscbe", finite_or_null(c.final_std)},
                         {"final_n_diverged", c.final_diverged},
                         {"fingerprint", c.curve.fingerprint}});
    }
    json best = nullptr;
    if (result.best) {
        const auto& c = result.cells[*result.best];
        best = {{"index", c.index}, {"alpha", c.alpha}, {"beta", c.beta}, {"zeta", c.zeta},
                {"final_mean_rmscbe", c.final_mean}};
    }
    return {{"environment", base.environment.name},
            {"algorithm", std::string(to_string(base.algorithm))},
            {"steps_per_run", base.steps_per_run},
            {"n_runs", base.n_runs},
            {"record_every", base.record_every},
            {"seed", base.seed},
            {"sampling_mode", to_string(base.environment.sampling_mode)},
            {"cells", cells},
            {"best", best},
            {"notices", result.notices}};
}

/// Writes one CSV per cell, then summary.json last.
inline void write_sweep(const fs::path& dir, const ExperimentConfig& base, const SweepResult& result) {
    fs::create_directories(dir);
    for (const auto& c : result.cells) {
        std::ofstream out(dir / cell_file_name(c.index), std::ios::binary);
        write_cell_csv(out, c.curve);
        if (!out) throw std::runtime_error("cannot write " + (dir / cell_file_name(c.index)).string());
    }
    const fs::path tmp = dir / "summary.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << sweep_summary_json(base, result).dump(2) << '\n';
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, dir / "summary.json");
}

// Report ----------------------------------------------------------------------

struct ReportCurve {
    std::string environment;
    std::string algorithm;
    double alpha = 0.0;
    double beta = 0.0;
    double zeta = 0.0;
    AggregateCurve curve;
};

struct ReportOutcome {
    std::vector<fs::path> plots;
    fs::path tidy_csv;
    std::vector<std::string> missing;
    std::vector<ReportCurve> curves;
};

namespace report_detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline const char* color_for(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    return palette[i % 6];
}

/// Sweep directories: `root` itself if it holds summary.json, else its
/// immediate subdirectories that do, sorted by name.
inline std::vector<fs::path> sweep_dirs(const fs::path& root) {
    if (fs::exists(root / "summary.json")) return {root};
    std::vector<fs::path> dirs;
    if (fs::is_directory(root))
        for (const auto& e : fs::directory_iterator(root))
            if (e.is_directory() && fs::exists(e.path() / "summary.json")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

/// The best cell whose CSV is present, by (final mean, alpha, beta, zeta).
inline std::optional<ReportCurve> load_best(const fs::path& dir, std::vector<std::string>& missing) {
    std::ifstream in(dir / "summary.json", std::ios::binary);
    const nlohmann::json s = nlohmann::json::parse(in);
    using Key = std::tuple<double, double, double, double>;
    std::vector<std::pair<Key, const nlohmann::json*>> ranked;
    for (const auto& c : s.at("cells")) {
        const fs::path file = dir / c.at("file").get<std::string>();
        if (!fs::exists(file)) {
            missing.push_back(file.string());
            continue;
        }
        const auto& m = c.at("final_mean_rmscbe");
        const double mean = m.is_number() ? m.get<double>() : std::numeric_limits<double>::infinity();
        ranked.push_back({Key{mean, c.at("alpha").get<double>(), c.at("beta").get<double>(), c.at("zeta").get<double>()},
                          &c});
    }
    if (ranked.empty()) return std::nullopt;
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const auto& c = *ranked.front().second;
    ReportCurve rc;
    rc.environment = s.at("environment").get<std::string>();
    rc.algorithm = s.at("algorithm").get<std::string>();
    rc.alpha = c.at("alpha").get<double>();
    rc.beta = c.at("beta").get<double>();
    rc.zeta = c.at("zeta").get<double>();
    std::ifstream csv(dir / c.at("file").get<std::string>(), std::ios::binary);
    rc.curve = read_cell_csv(csv);
    return rc;
}

/// Mean curves with +-1 std bands on a log-scaled y axis.
inline std::string render_svg(const std::string& environment, const std::vector<const ReportCurve*>& curves) {
    const double width = 720, height = 440, left = 70, right = 170, top = 40, bottom = 50;
    const double pw = width - left - right, ph = height - top - bottom;

    double x_max = 1.0;
    double y_lo = std::numeric_limits<double>::infinity(), y_hi = 0.0;
    for (const auto* c : curves) {
        for (std::size_t i = 0; i < c->curve.steps.size(); ++i) {
            x_max = std::max(x_max, static_cast<double>(c->curve.steps[i]));
            const double m = c->curve.mean_rmscbe[i], s = c->curve.std_rmscbe[i];
            if (!std::isfinite(m)) continue;
            if (m > 0) y_lo = std::min(y_lo, m);
            y_hi = std::max(y_hi, m + (std::isfinite(s) ? s : 0.0));
        }
    }
    if (!std::isfinite(y_lo) || !(y_hi > 0)) {
        y_lo = 1e-3;
        y_hi = 1.0;
    }
    const double d_lo = std::floor(std::log10(y_lo));
    const double d_hi = std::max(std::ceil(std::log10(y_hi)), d_lo + 1);
    const double floor_value = std::pow(10.0, d_lo);
    auto px = [&](double step) { return left + pw * step / x_max; };
    auto py = [&](double v) {
        const double l = std::log10(std::max(v, floor_value));
        return top + ph * (d_hi - l) / (d_hi - d_lo);
    };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
      << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect x=\"0\" y=\"0\" width=\"" << fmt(width) << "\" height=\"" << fmt(height) << "\" fill=\"white\"/>\n";
    o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(environment) << "</text>\n";
    o << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double d = d_lo; d <= d_hi; d += 1.0) {
        const double y = py(std::pow(10.0, d));
        o << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(left + pw) << "\" y2=\""
          << fmt(y) << "\" stroke=\"#ddd\"/>\n";
        o << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">1e"
          << static_cast<int>(d) << "</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double step = x_max * i / 4.0;
        const double x = px(step);
        o << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(x) << "\" y2=\""
          << fmt(top + ph + 5) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(top + ph + 20) << "\" text-anchor=\"middle\">"
          << static_cast<long long>(std::llround(step)) << "</text>\n";
    }
    o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(height - 10) << "\" text-anchor=\"middle\">step</text>\n";
    o << "<text x=\"16\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fmt(top + ph / 2) << ")\">RMSCBE</text>\n";

    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& c = curves[k]->curve;
        const char* color = color_for(k);
        std::string upper, lower, line;
        for (std::size_t i = 0; i < c.steps.size(); ++i) {
            const double m = c.mean_rmscbe[i];
            if (!std::isfinite(m)) continue;
            const double s = std::isfinite(c.std_rmscbe[i]) ? c.std_rmscbe[i] : 0.0;
            const std::string x = fmt(px(static_cast<double>(c.steps[i])));
            upper += x + "," + fmt(py(m + s)) + " ";
            lower = x + "," + fmt(py(m - s)) + " " + lower;
            line += x + "," + fmt(py(m)) + " ";
        }
        if (!line.empty()) {
            o << "<polygon points=\"" << upper << lower << "\" fill=\"" << color
              << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
            o << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"" << color
              << "\" stroke-width=\"1.5\"/>\n";
        }
        const double ly = top + 14 + 18.0 * static_cast<double>(k);
        o << "<line x1=\"" << fmt(left + pw + 12) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << fmt(left + pw + 32)
          << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << fmt(left + pw + 38) << "\" y=\"" << fmt(ly) << "\">"
          << xml_escape(curves[k]->algorithm) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace report_detail

/// Builds report_<environment>.svg and report_tidy.csv in `out_dir` from the
/// sweep outputs under `roots`. Only files on disk are read. Each sweep
/// contributes its best available cell.
inline ReportOutcome build_report(const std::vector<fs::path>& roots, const fs::path& out_dir) {
    ReportOutcome outcome;
    std::vector<fs::path> dirs;
    for (const auto& r : roots) {
        auto found = report_detail::sweep_dirs(r);
        if (found.empty()) outcome.missing.push_back((r / "summary.json").string());
        dirs.insert(dirs.end(), found.begin(), found.end());
    }
    for (const auto& d : dirs) {
        auto rc = report_detail::load_best(d, outcome.missing);
        if (rc) outcome.curves.push_back(std::move(*rc));
    }
    std::stable_sort(outcome.curves.begin(), outcome.curves.end(), [](const ReportCurve& a, const ReportCurve& b) {
        return std::tie(a.environment, a.algorithm) < std::tie(b.environment, b.algorithm);
    });

    fs::create_directories(out_dir);
    std::map<std::string, std::vector<const ReportCurve*>> by_env;
    for (const auto& c : outcome.curves) by_env[c.environment].push_back(&c);
    for (const auto& [env, curves] : by_env) {
        const fs::path file = out_dir / ("report_" + env + ".svg");
        std::ofstream out(file, std::ios::binary);
        out << report_detail::render_svg(env, curves);
        outcome.plots.push_back(file);
    }

    outcome.tidy_csv = out_dir / "report_tidy.csv";
    std::ofstream tidy(outcome.tidy_csv, std::ios::binary);
    tidy << "environment,algorithm,alpha,beta,zeta,step,mean_rmscbe,std_rmscbe,n_diverged\n";
    for (const auto& c : outcome.curves)
        for (std::size_t i = 0; i < c.curve.steps.size(); ++i)
            tidy << c.environment << ',' << c.algorithm << ',' << format_double(c.alpha) << ','
                 << format_double(c.beta) << ',' << format_double(c.zeta) << ',' << c.curve.steps[i] << ','
                 << format_double(c.curve.mean_rmscbe[i]) << ',' << format_double(c.curve.std_rmscbe[i]) << ','
                 << c.curve.n_diverged[i] << '\n';
    return outcome;
}

} // namespace bec
