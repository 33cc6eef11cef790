#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bec/environments.hpp"
#include "bec/errors.hpp"
#include "bec/harness.hpp"

namespace bec {

/// A parsed configuration file: the experiment plus optional sweep grids.
struct LoadedConfig {
    ExperimentConfig experiment;
    std::optional<SweepGrids> grids;
};

namespace config_detail {

using nlohmann::json;

/// Maps keys back to source lines for diagnostics. JSON values carry no
/// positions, so this finds the first `"key":` at or after the parent's line.
class SourceIndex {
public:
    explicit SourceIndex(std::string text) : text_(std::move(text)) {
        line_starts_.push_back(0);
        for (std::size_t i = 0; i < text_.size(); ++i)
            if (text_[i] == '\n') line_starts_.push_back(i + 1);
    }

    std::size_t line_of_offset(std::size_t offset) const {
        std::size_t line = 0;
        while (line + 1 < line_starts_.size() && line_starts_[line + 1] <= offset) ++line;
        return line + 1;
    }

    std::size_t column_of_offset(std::size_t offset) const {
        return offset - line_starts_[line_of_offset(offset) - 1] + 1;
    }

    /// Line of the first `"key"` followed by a colon, searching from `from_line`.
    std::size_t line_of_key(const std::string& key, std::size_t from_line = 1) const {
        if (text_.empty()) return 0;
        const std::string needle = "\"" + key + "\"";
        std::size_t pos = from_line >= 1 && from_line <= line_starts_.size() ? line_starts_[from_line - 1] : 0;
        while ((pos = text_.find(needle, pos)) != std::string::npos) {
            std::size_t after = pos + needle.size();
            while (after < text_.size() && std::isspace(static_cast<unsigned char>(text_[after]))) ++after;
            if (after < text_.size() && text_[after] == ':') return line_of_offset(pos);
            pos += needle.size();
        }
        return 0;
    }

    const std::string& text() const { return text_; }

private:
    std::string text_;
    std::vector<std::size_t> line_starts_;
};

/// Walks one JSON object, tracking the dotted path for error messages.
class Reader {
public:
    Reader(const json& node, std::string path, const SourceIndex& src, std::size_t line)
        : node_(node), path_(std::move(path)), src_(src), line_(line) {
        if (!node_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError(key.empty() ? std::string("<root>") : key, what, line_for(key));
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    std::size_t line_for(const std::string& dotted) const {
        const auto dot = dotted.rfind('.');
        const std::string last = dot == std::string::npos ? dotted : dotted.substr(dot + 1);
        const std::size_t found = src_.line_of_key(last, line_ == 0 ? 1 : line_);
        return found != 0 ? found : line_;
    }

    void allow_only(std::initializer_list<const char*> keys) const {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& item : node_.items())
            if (!ok.count(item.key())) fail(key_path(item.key()), "unknown key");
    }

    bool has(const std::string& key) const { return node_.contains(key); }
    const json& raw(const std::string& key) const { return node_.at(key); }

    Reader child(const std::string& key) const {
        const std::string p = key_path(key);
        return Reader(node_.at(key), p, src_, line_for(p));
    }

    double number(const std::string& key) const {
        const json& v = node_.at(key);
        if (!v.is_number()) fail(key_path(key), "expected a number");
        return v.get<double>();
    }

    double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::uint64_t unsigned_integer(const std::string& key) const {
        const json& v = node_.at(key);
        if (!v.is_number_unsigned()) fail(key_path(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    std::uint64_t unsigned_or(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? unsigned_integer(key) : fallback;
    }

    std::string string(const std::string& key) const {
        const json& v = node_.at(key);
        if (!v.is_string()) fail(key_path(key), "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> number_list(const std::string& key) const {
        const json& v = node_.at(key);
        if (!v.is_array()) fail(key_path(key), "expected a list of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) fail(key_path(key), "expected a list of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    Matrix matrix(const std::string& key, Eigen::Index rows, Eigen::Index cols) const {
        const json& v = node_.at(key);
        const std::string p = key_path(key);
        if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != rows)
            fail(p, "expected " + std::to_string(rows) + " rows");
        Matrix m(rows, cols == 0 ? 1 : cols);
        Eigen::Index width = cols;
        for (Eigen::Index i = 0; i < rows; ++i) {
            const json& row = v[static_cast<std::size_t>(i)];
            if (!row.is_array()) fail(p, "row " + std::to_string(i) + " is not a list");
            if (width == 0) {
                width = static_cast<Eigen::Index>(row.size());
                if (width == 0) fail(p, "rows must not be empty");
                m.resize(rows, width);
            }
            if (static_cast<Eigen::Index>(row.size()) != width)
                fail(p, "row " + std::to_string(i) + " has " + std::to_string(row.size()) + " entries, expected " +
                            std::to_string(width));
            for (Eigen::Index j = 0; j < width; ++j) {
                const json& e = row[static_cast<std::size_t>(j)];
                if (!e.is_number()) fail(p, "non-numeric entry in row " + std::to_string(i));
                m(i, j) = e.get<double>();
            }
        }
        return m;
    }

    const std::string& path() const { return path_; }

private:
    const json& node_;
    std::string path_;
    const SourceIndex& src_;
    std::size_t line_;
};

inline json parse_text(const SourceIndex& src, const std::string& origin) {
    try {
        return json::parse(src.text());
    } catch (const json::parse_error& e) {
        const std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
        const std::size_t line = src.line_of_offset(offset);
        throw ConfigError(origin, "parse error at column " + std::to_string(src.column_of_offset(offset)), line);
    }
}

inline std::string read_file(const std::filesystem::path& path, const std::string& key) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(key, "cannot open file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Custom MDP object: n_states, p_behavior, p_target (defaults to p_behavior),
/// rewards (n x n per transition), gamma, features, start_state, name.
inline EnvironmentSpec custom_environment(const Reader& r) {
    r.allow_only({"name", "n_states", "p_behavior", "p_target", "rewards", "gamma", "features", "start_state"});
    for (const char* k : {"n_states", "p_behavior", "rewards", "gamma", "features"})
        if (!r.has(k)) r.fail(r.key_path(k), "missing required key");
    const auto n = static_cast<Eigen::Index>(r.unsigned_integer("n_states"));
    if (n < 1) r.fail(r.key_path("n_states"), "must be >= 1");
    const Matrix pb = r.matrix("p_behavior", n, n);
    const Matrix pt = r.has("p_target") ? r.matrix("p_target", n, n) : pb;
    const Matrix rewards = r.matrix("rewards", n, n);
    const Matrix phi = r.matrix("features", n, 0);
    const double gamma = r.number("gamma");
    std::optional<StateId> start = StateId{0};
    if (r.has("start_state")) {
        const auto& v = r.raw("start_state");
        if (v.is_string() && v.get<std::string>() == "uniform") start = std::nullopt;
        else if (v.is_number_unsigned()) start = v.get<StateId>();
        else r.fail(r.key_path("start_state"), "expected a state index or \"uniform\"");
    }
    const std::string name = r.has("name") ? r.string("name") : std::string("custom");
    try {
        return EnvironmentSpec(MdpModel(pb, pt, rewards, gamma), FeatureMap(phi), name, start);
    } catch (const std::invalid_argument& e) {
        r.fail(r.path(), e.what());
    }
}

inline TwoStateParams two_state_params(const Reader& r) {
    r.allow_only({"a", "b", "x", "y", "m", "n", "gamma"});
    TwoStateParams p;
    p.a = r.number_or("a", p.a);
    p.b = r.number_or("b", p.b);
    p.x = r.number_or("x", p.x);
    p.y = r.number_or("y", p.y);
    p.m = r.number_or("m", p.m);
    p.n = r.number_or("n", p.n);
    p.gamma = r.number_or("gamma", p.gamma);
    try {
        validate(p);
    } catch (const std::invalid_argument& e) {
        r.fail(r.path(), e.what());
    }
    return p;
}

inline EnvironmentSpec environment_from(const Reader& root, const std::filesystem::path& base_dir) {
    const bool inline_env = root.has("environment");
    const bool file_env = root.has("environment_file");
    if (inline_env == file_env) root.fail("environment", "exactly one of 'environment' or 'environment_file' is required");

    if (file_env) {
        const std::string key = root.key_path("environment_file");
        std::filesystem::path p = root.string("environment_file");
        if (p.is_relative()) p = base_dir / p;
        const SourceIndex src(read_file(p, key));
        const json doc = parse_text(src, key);
        return custom_environment(Reader(doc, "", src, 1));
    }

    const json& env = root.raw("environment");
    if (env.is_object()) {
        if (root.has("two_state")) root.fail("two_state", "only valid with the built-in two-state environment");
        return custom_environment(root.child("environment"));
    }
    if (!env.is_string()) root.fail("environment", "expected a built-in name or an object");
    const std::string name = env.get<std::string>();
    if (name == "two-state" && root.has("two_state")) return two_state(two_state_params(root.child("two_state")));
    if (root.has("two_state")) root.fail("two_state", "only valid with the built-in two-state environment");
    auto spec = builtin_environment(name);
    if (!spec) root.fail("environment", "unknown environment '" + name + "' (expected boyan, two-state or baird7)");
    return *spec;
}

inline void read_step_sizes(const Reader& r, StepSizes& s) {
    r.allow_only({"alpha", "beta", "zeta", "decay", "alpha_exponent", "beta_exponent", "zeta_exponent"});
    s.alpha = r.number_or("alpha", s.alpha);
    s.beta = r.number_or("beta", s.beta);
    s.zeta = r.number_or("zeta", s.zeta);
    s.alpha_exponent = r.number_or("alpha_exponent", s.alpha_exponent);
    s.beta_exponent = r.number_or("beta_exponent", s.beta_exponent);
    s.zeta_exponent = r.number_or("zeta_exponent", s.zeta_exponent);
    if (r.has("decay")) {
        const std::string d = r.string("decay");
        if (d == "constant") s.decay = DecayMode::constant;
        else if (d == "power") s.decay = DecayMode::power;
        else r.fail(r.key_path("decay"), "expected \"constant\" or \"power\"");
    }
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        r.fail(r.path(), e.what());
    }
}

inline SweepGrids read_grids(const Reader& r) {
    r.allow_only({"alpha", "beta", "zeta"});
    SweepGrids g;
    if (r.has("alpha")) g.alpha = r.number_list("alpha");
    if (r.has("beta")) g.beta = r.number_list("beta");
    if (r.has("zeta")) g.zeta = r.number_list("zeta");
    for (const auto& [key, grid] : {std::pair{"alpha", &g.alpha}, {"beta", &g.beta}, {"zeta", &g.zeta}})
        for (double v : *grid)
            if (!(v > 0.0) || !std::isfinite(v)) r.fail(r.key_path(key), "grid values must be positive");
    return g;
}

} // namespace config_detail

/// Parses a standalone custom MDP document (the same object an
/// environment_file holds).
inline EnvironmentSpec parse_environment(const std::string& text) {
    using namespace config_detail;
    const SourceIndex src(text);
    const json doc = parse_text(src, "<document>");
    return custom_environment(Reader(doc, "", src, 1));
}

inline EnvironmentSpec load_environment(const std::filesystem::path& path) {
    return parse_environment(config_detail::read_file(path, path.string()));
}

/// Parses a JSON configuration document. `base_dir` resolves a relative
/// environment_file.
inline LoadedConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
    using namespace config_detail;
    const SourceIndex src(text);
    const json doc = parse_text(src, "<document>");
    const Reader root(doc, "", src, 1);
    root.allow_only({"environment", "environment_file", "two_state", "algorithm", "step_sizes", "steps_per_run",
                     "n_runs", "record_every", "seed", "sampling_mode", "theta_init", "ctdc_mode", "grids"});

    LoadedConfig out{ExperimentConfig(environment_from(root, base_dir)), std::nullopt};
    ExperimentConfig& c = out.experiment;

    if (root.has("algorithm")) {
        const std::string name = root.string("algorithm");
        if (!parse_algorithm(name, c.algorithm))
            root.fail("algorithm", "unknown algorithm '" + name + "' (expected td, tdc, ctd, ctdc, src or vrc)");
    }
    if (root.has("step_sizes")) read_step_sizes(root.child("step_sizes"), c.sizes);
    c.steps_per_run = root.unsigned_or("steps_per_run", c.steps_per_run);
    c.n_runs = root.unsigned_or("n_runs", c.n_runs);
    c.record_every = root.unsigned_or("record_every", c.record_every);
    c.seed = root.unsigned_or("seed", c.seed);
    if (c.steps_per_run < 1) root.fail("steps_per_run", "must be >= 1");
    if (c.n_runs < 1) root.fail("n_runs", "must be >= 1");
    if (c.record_every < 1) root.fail("record_every", "must be >= 1");
    if (c.steps_per_run % c.record_every != 0) root.fail("record_every", "must divide steps_per_run");

    if (root.has("sampling_mode")) {
        const std::string m = root.string("sampling_mode");
        if (m == "trajectory") c.environment.sampling_mode = SamplingMode::trajectory;
        else if (m == "iid-stationary") c.environment.sampling_mode = SamplingMode::iid_stationary;
        else root.fail("sampling_mode", "expected \"trajectory\" or \"iid-stationary\"");
    }
    if (root.has("theta_init")) {
        const json& v = root.raw("theta_init");
        if (v.is_string() && v.get<std::string>() == "ones") c.theta_init.kind = ThetaInit::Kind::ones;
        else if (v.is_string() && v.get<std::string>() == "zeros") c.theta_init.kind = ThetaInit::Kind::zeros;
        else if (v.is_array()) {
            const auto vals = root.number_list("theta_init");
            c.theta_init.kind = ThetaInit::Kind::values;
            c.theta_init.values = Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
        } else {
            root.fail("theta_init", "expected \"ones\", \"zeros\" or a list of numbers");
        }
    }
    if (root.has("ctdc_mode")) {
        const std::string m = root.string("ctdc_mode");
        if (m == "rho") c.ctdc_mode = CtdcMode::rho_weighted;
        else if (m == "subsample") c.ctdc_mode = CtdcMode::subsample;
        else root.fail("ctdc_mode", "expected \"rho\" or \"subsample\"");
    }
    if (root.has("grids")) out.grids = read_grids(root.child("grids"));

    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        root.fail(root.has("theta_init") ? "theta_init" : "", e.what());
    }
    return out;
}

inline LoadedConfig load_config(const std::filesystem::path& path) {
    return parse_config(config_detail::read_file(path, path.string()), path.parent_path());
}

} // namespace bec
