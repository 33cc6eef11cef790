#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bec/errors.hpp"
#include "bec/harness.hpp"

namespace bec {

inline constexpr const char* kTraceCsvHeader = "step,run,rmscbe,theta_norm,diverged";
inline constexpr const char* kCellCsvHeader = "step,mean_rmscbe,std_rmscbe,n_diverged";

/// 17 significant digits, so every double round-trips.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_trace_csv(std::ostream& out, const std::vector<MetricTrace>& traces) {
    out << kTraceCsvHeader << '\n';
    for (const auto& t : traces)
        for (const auto& r : t.records)
            out << r.step << ',' << t.run_id << ',' << format_double(r.rmscbe) << ',' << format_double(r.theta_norm)
                << ',' << (r.diverged ? 1 : 0) << '\n';
}

inline void write_cell_csv(std::ostream& out, const AggregateCurve& curve) {
    out << kCellCsvHeader << '\n';
    for (std::size_t i = 0; i < curve.steps.size(); ++i)
        out << curve.steps[i] << ',' << format_double(curve.mean_rmscbe[i]) << ','
            << format_double(curve.std_rmscbe[i]) << ',' << curve.n_diverged[i] << '\n';
}

namespace csv_detail {

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw InvalidModel("csv line " + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

inline std::uint64_t parse_unsigned(const std::string& s, std::size_t line) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || s[0] == '-')
        throw InvalidModel("csv line " + std::to_string(line) + ": bad integer '" + s + "'");
    return v;
}

} // namespace csv_detail

/// Reads a cell CSV back. The header must match exactly.
inline AggregateCurve read_cell_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCellCsvHeader) throw InvalidModel("cell csv: unexpected header");
    AggregateCurve curve;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = csv_detail::split(line);
        if (f.size() != 4) throw InvalidModel("cell csv line " + std::to_string(lineno) + ": expected 4 fields");
        curve.steps.push_back(csv_detail::parse_unsigned(f[0], lineno));
        curve.mean_rmscbe.push_back(csv_detail::parse_double(f[1], lineno));
        curve.std_rmscbe.push_back(csv_detail::parse_double(f[2], lineno));
        curve.n_diverged.push_back(static_cast<std::size_t>(csv_detail::parse_unsigned(f[3], lineno)));
    }
    return curve;
}

/// Reads a trace CSV back into one trace per run id, in order of appearance.
inline std::vector<MetricTrace> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTraceCsvHeader) throw InvalidModel("trace csv: unexpected header");
    std::vector<MetricTrace> traces;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = csv_detail::split(line);
        if (f.size() != 5) throw InvalidModel("trace csv line " + std::to_string(lineno) + ": expected 5 fields");
        const auto run = csv_detail::parse_unsigned(f[1], lineno);
        if (traces.empty() || traces.back().run_id != run) {
            traces.emplace_back();
            traces.back().run_id = run;
        }
        MetricRecord r;
        r.step = csv_detail::parse_unsigned(f[0], lineno);
        r.rmscbe = csv_detail::parse_double(f[2], lineno);
        r.theta_norm = csv_detail::parse_double(f[3], lineno);
        r.diverged = csv_detail::parse_unsigned(f[4], lineno) != 0;
        traces.back().records.push_back(r);
    }
    return traces;
}

} // namespace bec
