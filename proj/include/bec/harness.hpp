#pragma once

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "bec/centering.hpp"
#include "bec/environments.hpp"
#include "bec/learners.hpp"
#include "bec/schedule.hpp"

namespace bec {

struct ThetaInit {
    enum class Kind { ones, zeros, values };
    Kind kind = Kind::ones;
    Vector values;

    Vector make(Eigen::Index size) const {
        switch (kind) {
        case Kind::ones: return Vector::Ones(size);
        case Kind::zeros: return Vector::Zero(size);
        case Kind::values:
            if (values.size() != size) throw InvalidModel("theta_init: explicit vector has wrong length");
            return values;
        }
        return Vector::Ones(size);
    }
};

struct ExperimentConfig {
    explicit ExperimentConfig(EnvironmentSpec env) : environment(std::move(env)) {}

    EnvironmentSpec environment;
    Algorithm algorithm = Algorithm::ctd;
    StepSizes sizes;
    std::uint64_t steps_per_run = 1000;
    std::uint64_t n_runs = 1;
    std::uint64_t record_every = 10;
    std::uint64_t seed = 0;
    ThetaInit theta_init;
    CtdcMode ctdc_mode = CtdcMode::rho_weighted;

    void validate() const {
        if (steps_per_run < 1) throw InvalidModel("steps_per_run must be >= 1");
        if (n_runs < 1) throw InvalidModel("n_runs must be >= 1");
        if (record_every < 1) throw InvalidModel("record_every must be >= 1");
        if (steps_per_run % record_every != 0)
            throw InvalidModel("record_every must divide steps_per_run evenly");
        sizes.validate();
        const auto width = is_tabular(algorithm) ? static_cast<Eigen::Index>(environment.model.n_states())
                                                 : static_cast<Eigen::Index>(environment.features.n_features());
        (void)theta_init.make(width);
    }
};

struct MetricRecord {
    std::uint64_t step = 0;
    double rmscbe = 0.0;
    double theta_norm = 0.0;
    bool diverged = false;
};

struct MetricTrace {
    std::uint64_t run_id = 0;
    std::vector<MetricRecord> records;
    std::uint64_t fingerprint = 0;
    Vector final_parameters; ///< theta, or the value table for tabular learners
    double final_omega = 0.0;
};

struct AggregateCurve {
    std::vector<std::uint64_t> steps;
    std::vector<double> mean_rmscbe;
    std::vector<double> std_rmscbe;
    std::vector<std::size_t> n_diverged;
    std::size_t n_runs = 0;
    std::uint64_t fingerprint = 0;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline void put(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g,", v);
    out += buf;
}

inline void put(std::string& out, const Matrix& m) {
    out += std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ":";
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) put(out, m(i, j));
    out += ";";
}

} // namespace detail

/// Canonical text of every field that influences a run (environment included).
inline std::string canonical_text(const ExperimentConfig& c) {
    std::string t = "env=" + c.environment.name + ";";
    const auto& m = c.environment.model;
    detail::put(t, m.p_behavior());
    detail::put(t, m.p_target());
    detail::put(t, m.rewards());
    detail::put(t, m.gamma());
    detail::put(t, c.environment.features.matrix());
    t += "start=" + (c.environment.start_state ? std::to_string(*c.environment.start_state) : std::string("uniform"));
    t += ";sampling=" + std::string(to_string(c.environment.sampling_mode));
    t += ";algorithm=" + std::string(to_string(c.algorithm)) + ";sizes=";
    detail::put(t, c.sizes.alpha);
    detail::put(t, c.sizes.beta);
    detail::put(t, c.sizes.zeta);
    t += c.sizes.decay == DecayMode::constant ? "constant," : "power,";
    detail::put(t, c.sizes.alpha_exponent);
    detail::put(t, c.sizes.beta_exponent);
    detail::put(t, c.sizes.zeta_exponent);
    t += ";steps=" + std::to_string(c.steps_per_run) + ";runs=" + std::to_string(c.n_runs) +
         ";record=" + std::to_string(c.record_every) + ";seed=" + std::to_string(c.seed) + ";theta_init=";
    switch (c.theta_init.kind) {
    case ThetaInit::Kind::ones: t += "ones"; break;
    case ThetaInit::Kind::zeros: t += "zeros"; break;
    case ThetaInit::Kind::values: detail::put(t, Matrix(c.theta_init.values)); break;
    }
    t += c.ctdc_mode == CtdcMode::rho_weighted ? ";ctdc=rho" : ";ctdc=subsample";
    return t;
}

inline std::uint64_t config_fingerprint(const ExperimentConfig& c) { return detail::fnv1a(canonical_text(c)); }

namespace detail {

/// Per-config data shared by every run of a cell.
struct RunContext {
    const ExperimentConfig* config;
    DistributionVector d_mu;
    std::uint64_t fingerprint;

    explicit RunContext(const ExperimentConfig& c)
        : config(&c), d_mu(c.environment.behavior_distribution()), fingerprint(config_fingerprint(c)) {}
};

inline MetricTrace run_with(const RunContext& ctx, std::uint64_t run_index) {
    const ExperimentConfig& c = *ctx.config;
    const EnvironmentSpec& env = c.environment;
    const bool tabular = is_tabular(c.algorithm);

    Sampler sampler(env);
    RngStream rng = RngStream::substream(c.seed, run_index);
    RmscbeEvaluator evaluate(env.model, ctx.d_mu);
    const Matrix& phi = env.features.matrix();
    const double gamma = env.model.gamma();

    LearnerState st = tabular ? LearnerState::tabular(c.theta_init.make(static_cast<Eigen::Index>(env.model.n_states())))
                              : LearnerState::linear(c.theta_init.make(phi.cols()));

    MetricTrace trace;
    trace.run_id = run_index;
    trace.fingerprint = ctx.fingerprint;
    trace.records.reserve(static_cast<std::size_t>(c.steps_per_run / c.record_every));

    TransitionSample x;
    x.phi_s.resize(phi.cols());
    x.phi_next.resize(phi.cols());
    StateId s = sampler.start(rng);
    for (std::uint64_t k = 1; k <= c.steps_per_run; ++k) {
        s = sampler.step(s, rng, x);
        apply_update(c.algorithm, st, x, gamma, c.sizes.at(k), c.ctdc_mode);
        if (k % c.record_every == 0) {
            const Vector& params = tabular ? st.v_table : st.theta;
            const double err = tabular ? evaluate(st.v_table) : evaluate(phi, st.theta);
            trace.records.push_back({k, err, params.norm(), st.diverged});
        }
    }
    trace.final_parameters = tabular ? st.v_table : st.theta;
    trace.final_omega = st.omega;
    return trace;
}

/// Runs task(i) for i in [0, count) on `threads` workers; the first
/// exception stops the pool and is rethrown.
template <class Task>
void parallel_for(std::size_t count, unsigned threads, Task&& task) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            if (failed.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
}

} // namespace detail

/// One run of `config`. Deterministic in (config, run_index).
inline MetricTrace run_one(const ExperimentConfig& config, std::uint64_t run_index) {
    config.validate();
    const detail::RunContext ctx(config);
    return detail::run_with(ctx, run_index);
}

/// All n_runs runs, ordered by run index.
inline std::vector<MetricTrace> run_all(const ExperimentConfig& config, unsigned threads = 1) {
    config.validate();
    const detail::RunContext ctx(config);
    std::vector<MetricTrace> traces(static_cast<std::size_t>(config.n_runs));
    detail::parallel_for(traces.size(), threads, [&](std::size_t i) { traces[i] = detail::run_with(ctx, i); });
    return traces;
}

/// Pointwise mean and population standard deviation of rmscbe over the runs
/// not diverged at each recorded step. Values are summed in sorted order so
/// the result does not depend on the order of `traces`.
inline AggregateCurve aggregate(const std::vector<MetricTrace>& traces) {
    if (traces.empty()) throw InvalidModel("aggregate: no traces");
    const auto& first = traces.front();
    for (const auto& t : traces) {
        if (t.fingerprint != first.fingerprint) throw InvalidModel("aggregate: traces come from different configs");
        if (t.records.size() != first.records.size()) throw InvalidModel("aggregate: recording grids differ");
        for (std::size_t i = 0; i < t.records.size(); ++i)
            if (t.records[i].step != first.records[i].step) throw InvalidModel("aggregate: recording grids differ");
    }
    AggregateCurve out;
    out.n_runs = traces.size();
    out.fingerprint = first.fingerprint;
    std::vector<double> values;
    values.reserve(traces.size());
    for (std::size_t i = 0; i < first.records.size(); ++i) {
        values.clear();
        std::size_t diverged = 0;
        for (const auto& t : traces) {
            if (t.records[i].diverged) ++diverged;
            else values.push_back(t.records[i].rmscbe);
        }
        std::sort(values.begin(), values.end());
        double mean = std::numeric_limits<double>::quiet_NaN();
        double sd = std::numeric_limits<double>::quiet_NaN();
        if (!values.empty()) {
            double sum = 0.0;
            for (double v : values) sum += v;
            mean = sum / static_cast<double>(values.size());
            double sq = 0.0;
            for (double v : values) sq += (v - mean) * (v - mean);
            sd = std::sqrt(sq / static_cast<double>(values.size()));
        }
        out.steps.push_back(first.records[i].step);
        out.mean_rmscbe.push_back(mean);
        out.std_rmscbe.push_back(sd);
        out.n_diverged.push_back(diverged);
    }
    return out;
}

// Sweeps ----------------------------------------------------------------------

struct SweepGrids {
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> zeta;
};

struct SweepCell {
    std::size_t index = 0;
    double alpha = 0.0;
    double beta = 0.0;
    double zeta = 0.0;
    AggregateCurve curve;
    double final_mean = 0.0;
    double final_std = 0.0;
    std::size_t final_diverged = 0;
    Vector mean_final_parameters; ///< over runs not diverged at the end
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::optional<std::size_t> best; ///< empty when every cell diverged
    std::vector<std::string> notices;
};

/// Learning-rate grids used for the built-in benchmarks.
inline SweepGrids benchmark_grids(const std::string& environment) {
    SweepGrids g;
    if (environment == "two-state") {
        g.alpha = {0.0001, 0.0005, 0.001, 0.005, 0.01};
        g.zeta = {0.0005, 0.001, 0.005, 0.01, 0.05};
        g.beta = {0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.2};
    } else if (environment == "baird7") {
        g.alpha = {0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.3};
        g.zeta = {0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.2};
        g.beta = {0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.2};
    } else {
        g.alpha = {0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.3};
        g.zeta = {0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.5};
        g.beta = {0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.5};
    }
    return g;
}

/// Picks the cell with the smallest finite final mean rmscbe; ties go to the
/// lexicographically smallest (alpha, beta, zeta).
inline std::optional<std::size_t> best_cell(const std::vector<SweepCell>& cells) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        if (!std::isfinite(c.final_mean)) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = cells[*best];
        if (std::tie(c.final_mean, c.alpha, c.beta, c.zeta) < std::tie(b.final_mean, b.alpha, b.beta, b.zeta))
            best = i;
    }
    return best;
}

/// Cartesian product of the grids that the algorithm uses, n_runs runs per
/// cell. Runs execute in parallel; results are ordered by (cell, run) index.
inline SweepResult sweep(const ExperimentConfig& base, const SweepGrids& grids, unsigned threads = 1) {
    base.validate();
    SweepResult result;
    const Algorithm algo = base.algorithm;
    if (grids.alpha.empty()) throw InvalidModel("sweep: alpha grid is empty");
    if (uses_beta(algo) && grids.beta.empty()) throw InvalidModel("sweep: beta grid is empty");
    if (uses_zeta(algo) && grids.zeta.empty()) throw InvalidModel("sweep: zeta grid is empty");
    if (!uses_beta(algo) && !grids.beta.empty())
        result.notices.push_back("beta grid ignored: " + std::string(to_string(algo)) + " has no beta rate");
    if (!uses_zeta(algo) && !grids.zeta.empty())
        result.notices.push_back("zeta grid ignored: " + std::string(to_string(algo)) + " has no zeta rate");

    const std::vector<double> betas = uses_beta(algo) ? grids.beta : std::vector<double>{base.sizes.beta};
    const std::vector<double> zetas = uses_zeta(algo) ? grids.zeta : std::vector<double>{base.sizes.zeta};

    std::vector<ExperimentConfig> configs;
    for (double a : grids.alpha)
        for (double b : betas)
            for (double z : zetas) {
                ExperimentConfig c = base;
                c.sizes.alpha = a;
                c.sizes.beta = b;
                c.sizes.zeta = z;
                c.validate();
                configs.push_back(std::move(c));
                SweepCell cell;
                cell.index = result.cells.size();
                cell.alpha = a;
                cell.beta = b;
                cell.zeta = z;
                result.cells.push_back(std::move(cell));
            }

    const auto runs = static_cast<std::size_t>(base.n_runs);
    std::vector<detail::RunContext> contexts;
    contexts.reserve(configs.size());
    for (const auto& c : configs) contexts.emplace_back(c);

    // Each cell's traces are reduced by whichever worker finishes its last run.
    std::vector<std::vector<MetricTrace>> traces(configs.size(), std::vector<MetricTrace>(runs));
    std::vector<std::atomic<std::size_t>> remaining(configs.size());
    for (auto& r : remaining) r.store(runs);

    detail::parallel_for(configs.size() * runs, threads, [&](std::size_t task) {
        const std::size_t ci = task / runs;
        const std::size_t ri = task % runs;
        traces[ci][ri] = detail::run_with(contexts[ci], ri);
        if (remaining[ci].fetch_sub(1) != 1) return;

        SweepCell& cell = result.cells[ci];
        cell.curve = aggregate(traces[ci]);
        cell.final_mean = cell.curve.mean_rmscbe.back();
        cell.final_std = cell.curve.std_rmscbe.back();
        cell.final_diverged = cell.curve.n_diverged.back();
        Vector sum = Vector::Zero(traces[ci].front().final_parameters.size());
        std::size_t kept = 0;
        for (const auto& t : traces[ci]) {
            if (t.records.back().diverged) continue;
            sum += t.final_parameters;
            ++kept;
        }
        cell.mean_final_parameters = kept > 0 ? Vector(sum / static_cast<double>(kept))
                                              : Vector::Constant(sum.size(), std::numeric_limits<double>::quiet_NaN());
        std::vector<MetricTrace>().swap(traces[ci]);
    });

    result.best = best_cell(result.cells);
    return result;
}

} // namespace bec
