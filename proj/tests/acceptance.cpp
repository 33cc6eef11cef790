// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bec/bec.hpp"
#include "test_util.hpp"

using namespace bec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

// 1 ---------------------------------------------------------------------------

Outcome lemma_cross_check() {
    RngStream rng(20240601);
    double max_diff = 0.0, min_value = INFINITY;
    for (int i = 0; i < 1000; ++i) {
        const TwoStateParams p = random_two_state_params(rng);
        const LemmaValues v = lemma_two_state(p);
        // third, independent path through the general analytic machinery
        const auto env = two_state(p);
        const double general = analytic_system(env.model, env.features).a_matrix(0, 0);
        max_diff = std::max({max_diff, std::abs(v.closed_form - v.matrix_form), std::abs(v.closed_form - general)});
        min_value = std::min({min_value, v.closed_form, v.matrix_form});
    }
    return {max_diff <= 1e-10 && min_value > 0.0, fmt("max |diff| %.3g, min value %.3g", max_diff, min_value)};
}

// 2 ---------------------------------------------------------------------------

Outcome centering_algebra() {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    std::uniform_int_distribution<int> size(1, 12);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Eigen::Index n = size(gen);
        const DistributionVector d(test::random_distribution(gen, n));
        const Vector x = test::random_vector(gen, n);
        const Vector y = test::random_vector(gen, n);
        const double a = coef(gen), b = coef(gen), c = coef(gen) * 5.0;
        const Vector cx = center(x, d);
        worst = std::max(worst, (center(cx, d) - cx).cwiseAbs().maxCoeff());
        worst = std::max(worst, (center(a * x + b * y, d) - (a * cx + b * center(y, d))).cwiseAbs().maxCoeff());
        worst = std::max(worst, std::abs(d.vector().dot(cx)));
        worst = std::max(worst, (center(x + Vector::Constant(n, c), d) - cx).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-12, fmt("10000 cases, worst violation %.3g", worst)};
}

// 3 ---------------------------------------------------------------------------

Outcome covariance_identity() {
    const auto env = boyan_chain();
    const Matrix& phi = env.features.matrix();
    const Matrix& p = env.model.p_target();
    const double g = env.model.gamma();
    const Vector d = env.behavior_distribution().vector();
    const auto n = phi.rows();

    const Matrix dd = d.asDiagonal();
    const Matrix lhs = phi.transpose() * (dd - d * d.transpose()) * (Matrix::Identity(n, n) - g * p) * phi;

    // moments of (phi(s), phi(s')) with s ~ d, s' ~ P(s, .)
    const Vector mean_phi = phi.transpose() * d;
    const Vector mean_next = phi.transpose() * (p.transpose() * d);
    const Matrix e_pp = phi.transpose() * dd * phi;
    const Matrix e_pn = phi.transpose() * dd * p * phi;
    const Matrix e_nn = phi.transpose() * Matrix((p.transpose() * d).asDiagonal()) * phi;
    const Matrix cov_phi = e_pp - mean_phi * mean_phi.transpose();
    const Vector mean_diff = mean_phi - g * mean_next;
    const Matrix e_diff = e_pp - g * e_pn - g * e_pn.transpose() + g * g * e_nn;
    const Matrix cov_diff = e_diff - mean_diff * mean_diff.transpose();
    const Matrix rhs = 0.5 * ((1.0 - g * g) * cov_phi + cov_diff);

    const double literal = (lhs - rhs).cwiseAbs().maxCoeff();
    const double sym = (0.5 * (lhs + lhs.transpose()) - rhs).cwiseAbs().maxCoeff();
    return {literal <= 1e-10,
            fmt("max |A - rhs| %.3g; symmetric part of A vs rhs %.3g; skew part of A %.3g", literal, sym,
                (0.5 * (lhs - lhs.transpose())).cwiseAbs().maxCoeff())};
}

// 4 ---------------------------------------------------------------------------

/// Monte-Carlo mean of the CTD (ctdc=false) or CTDC theta increment, per unit
/// alpha, at theta with omega = omega*(theta) and u = C^-1 (b - A theta),
/// compared to the stated expectation. Returns the largest |z| score.
double increment_z(const EnvironmentSpec& base, const Vector& theta, bool ctdc, std::uint64_t seed) {
    EnvironmentSpec env = base;
    env.sampling_mode = SamplingMode::iid_stationary;
    const AnalyticSystem sys = analytic_system(env.model, env.features);
    const Matrix& a = sys.a_matrix;
    const Vector rhs = sys.b_vector - a * theta;
    const Vector expected = ctdc ? Vector(a.transpose() * sys.c_matrix.ldlt().solve(rhs)) : rhs;

    LearnerState st = LearnerState::linear(theta);
    st.omega = sys.omega_star.slope.dot(theta) + sys.omega_star.offset;
    st.u = sys.c_matrix.ldlt().solve(rhs);
    const Rates unit{1.0, 0.0, 0.0};
    const double gamma = env.model.gamma();

    Sampler sampler(env);
    RngStream rng(seed);
    TransitionSample x;
    StateId s = sampler.start(rng);
    const int samples = 200000;
    const auto k = theta.size();
    Vector sum = Vector::Zero(k), sq = Vector::Zero(k);
    for (int i = 0; i < samples; ++i) {
        s = sampler.step(s, rng, x);
        LearnerState next = ctdc ? ctdc_step(st, x, gamma, unit) : ctd_step(st, x, gamma, unit);
        const Vector inc = next.theta - st.theta;
        sum += inc;
        sq += inc.cwiseAbs2();
    }
    const Vector mean = sum / samples;
    const Vector var = (sq / samples - mean.cwiseAbs2()).cwiseMax(0.0);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        const double se = std::sqrt(var[i] / samples);
        const double err = std::abs(mean[i] - expected[i]);
        worst = std::max(worst, se > 0.0 ? err / se : (err <= 1e-12 ? 0.0 : INFINITY));
    }
    return worst;
}

Outcome expected_updates() {
    std::mt19937_64 gen(31);
    std::string detail;
    bool pass = true;
    for (const auto& env : {two_state_default(), boyan_chain()}) {
        double worst_ctd = 0.0, worst_ctdc = 0.0;
        for (int t = 0; t < 5; ++t) {
            const Vector theta = test::random_vector(gen, static_cast<Eigen::Index>(env.features.n_features()), 2.0);
            worst_ctd = std::max(worst_ctd, increment_z(env, theta, false, 1000 + t));
            worst_ctdc = std::max(worst_ctdc, increment_z(env, theta, true, 2000 + t));
        }
        pass = pass && worst_ctd <= 3.0 && worst_ctdc <= 3.0;
        detail += env.name + fmt(": ctd max |z| %.2f, ctdc max |z| %.2f; ", worst_ctd, worst_ctdc);
    }
    detail.resize(detail.size() - 2);
    return {pass, detail};
}

// 5 ---------------------------------------------------------------------------

double mean_at(const AggregateCurve& c, std::uint64_t step) {
    for (std::size_t i = 0; i < c.steps.size(); ++i)
        if (c.steps[i] == step) return c.mean_rmscbe[i];
    return NAN;
}

Outcome baird_contrast(unsigned threads) {
    ExperimentConfig td(baird_seven());
    td.algorithm = Algorithm::td;
    td.sizes.alpha = 0.01;
    td.steps_per_run = 2000;
    td.n_runs = 50;
    td.record_every = 10;
    td.seed = 5;
    const AggregateCurve td_curve = aggregate(run_all(td, threads));
    const double td_ratio = td_curve.mean_rmscbe.back() / mean_at(td_curve, 100);
    const bool td_ok = td_ratio > 10.0 || td_curve.n_diverged.back() >= 45;

    ExperimentConfig ctdc = td;
    ctdc.algorithm = Algorithm::ctdc;
    const SweepResult r = sweep(ctdc, benchmark_grids("baird7"), threads);
    double ctdc_ratio = INFINITY;
    std::string where = "no finite cell";
    if (r.best) {
        const SweepCell& b = r.cells[*r.best];
        ctdc_ratio = b.final_mean / mean_at(b.curve, 100);
        where = fmt("alpha=%g beta=%g zeta=%g", b.alpha, b.beta, b.zeta);
    }
    const bool ctdc_ok = ctdc_ratio < 0.2;
    return {td_ok && ctdc_ok,
            fmt("td final/step100 %.3g (%g diverged); ", td_ratio, static_cast<double>(td_curve.n_diverged.back())) +
                fmt("ctdc best cell final/step100 %.3g at ", ctdc_ratio) + where};
}

// 6 ---------------------------------------------------------------------------

Outcome boyan_convergence(unsigned threads) {
    ExperimentConfig c(boyan_chain());
    c.algorithm = Algorithm::ctd;
    c.steps_per_run = 1000;
    c.n_runs = 50;
    c.record_every = 10;
    c.seed = 1;
    const SweepResult r = sweep(c, benchmark_grids("boyan"), threads);
    if (!r.best) return {false, "every cell diverged"};
    const SweepCell& b = r.cells[*r.best];

    const auto& env = c.environment;
    const double initial = rmscbe(env.model, env.features, c.theta_init.make(4), env.behavior_distribution());
    const double ratio = b.final_mean / initial;

    const AnalyticSystem sys = analytic_system(env.model, env.features);
    const FixpointSolution sol = fixpoint_solve(sys);
    const double dist = distance_to_fixpoint_set(sys, sol, b.mean_final_parameters);
    const double tol = 0.1 * (1.0 + sol.theta_star.norm());
    return {ratio < 0.1 && dist <= tol,
            fmt("best cell alpha=%g beta=%g: final/initial %.3g (need < 0.1); ", b.alpha, b.beta, ratio) +
                fmt("distance to fixpoint set %.3g (tol %.3g)", dist, tol)};
}

// 7 ---------------------------------------------------------------------------

Outcome src_tracking() {
    Matrix p(2, 2), r(2, 2);
    p << 0.3, 0.7, 0.6, 0.4;
    r << 1.0, 0.5, 0.2, 0.8;
    const EnvironmentSpec env(MdpModel(p, p, r, 0.9), FeatureMap(Matrix::Identity(2, 2)), "ergodic2", StateId{0});
    // two-state chain: d0 = p10 / (p01 + p10)
    const double d0 = p(1, 0) / (p(0, 1) + p(1, 0));
    const double r0 = p(0, 0) * r(0, 0) + p(0, 1) * r(0, 1);
    const double r1 = p(1, 0) * r(1, 0) + p(1, 1) * r(1, 1);
    const double target = d0 * r0 + (1.0 - d0) * r1;

    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Sampler sampler(env);
        RngStream rng(seed);
        LearnerState st = LearnerState::tabular(Vector::Zero(2));
        TransitionSample x;
        StateId s = sampler.start(rng);
        for (int k = 0; k < 100000; ++k) {
            s = sampler.step(s, rng, x);
            src_update(st, x, 0.9, Rates{0.01, 0.001, 0.0});
        }
        worst = std::max(worst, std::abs(st.omega - target));
    }
    return {worst <= 0.02, fmt("d^T r_pi = %.6f, worst |r_bar - d^T r_pi| over 10 seeds %.4f", target, worst)};
}

// 8 ---------------------------------------------------------------------------

std::string cli(const std::string& args) { return std::string("\"") + BEC_CLI_PATH + "\" " + args; }

Outcome determinism() {
    const fs::path dir = test::scratch_dir("acceptance_determinism");
    const fs::path configs = BEC_CONFIG_DIR;
    std::vector<std::string> problems;

    for (const char* name : {"boyan_ctd.json", "two_state_ctdc.json", "custom_chain.json"}) {
        const std::string cfg = "\"" + (configs / name).string() + "\"";
        const auto a = test::run_command(cli("run " + cfg + " -o \"" + (dir / "a.csv").string() + "\""));
        const auto b = test::run_command(cli("--threads 4 run " + cfg + " -o \"" + (dir / "b.csv").string() + "\""));
        if (a.exit_code != 0 || b.exit_code != 0) problems.push_back(std::string(name) + ": run failed");
        else if (test::read_file(dir / "a.csv") != test::read_file(dir / "b.csv"))
            problems.push_back(std::string(name) + ": run output differs");
    }

    const std::string cfg = "\"" + (configs / "baird7_ctdc.json").string() + "\"";
    const auto s1 = test::run_command(cli("--threads 1 --out-dir \"" + (dir / "t1").string() + "\" sweep " + cfg));
    const auto s4 = test::run_command(cli("--threads 4 --out-dir \"" + (dir / "t4").string() + "\" sweep " + cfg));
    std::size_t files = 0;
    if (s1.exit_code != 0 || s4.exit_code != 0) {
        problems.push_back("sweep failed");
    } else {
        for (const auto& e : fs::directory_iterator(dir / "t1")) {
            ++files;
            const auto other = dir / "t4" / e.path().filename();
            if (!fs::exists(other) || test::read_file(e.path()) != test::read_file(other))
                problems.push_back("sweep file differs: " + e.path().filename().string());
        }
    }
    std::string detail = "3 configs run twice, baird7 ctdc sweep (" + std::to_string(files) + " files) at 1 and 4 threads";
    for (const auto& p : problems) detail += "; " + p;
    return {problems.empty() && files > 0, detail};
}

// 9 ---------------------------------------------------------------------------

Matrix rows(std::initializer_list<std::initializer_list<double>> data) {
    Matrix m(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : data) {
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Outcome golden_data() {
    std::vector<std::string> bad;
    auto same = [&](const char* what, const Matrix& got, const Matrix& want) {
        if (got.rows() != want.rows() || got.cols() != want.cols() || got != want) bad.push_back(what);
    };

    const Matrix boyan_phi = rows({{1, 0, 0, 0},
                                   {0.75, 0.25, 0, 0},
                                   {0.5, 0.5, 0, 0},
                                   {0.25, 0.75, 0, 0},
                                   {0, 1, 0, 0},
                                   {0, 0.75, 0.25, 0},
                                   {0, 0.5, 0.5, 0},
                                   {0, 0.25, 0.75, 0},
                                   {0, 0, 1, 0},
                                   {0, 0, 0.75, 0.25},
                                   {0, 0, 0.5, 0.5},
                                   {0, 0, 0.25, 0.75},
                                   {0, 0, 0, 1}});
    Matrix boyan_p = Matrix::Zero(13, 13);
    for (int s = 0; s <= 10; ++s) boyan_p(s, s + 1) = boyan_p(s, s + 2) = 0.5;
    boyan_p(11, 12) = 1.0;
    boyan_p(12, 0) = 1.0;
    const auto boyan = boyan_chain();
    same("boyan features", boyan.features.matrix(), boyan_phi);
    same("boyan behavior policy", boyan.model.p_behavior(), boyan_p);
    same("boyan target policy", boyan.model.p_target(), boyan_p);

    const auto two = two_state_default();
    same("two-state features", two.features.matrix(), rows({{1}, {2}}));
    same("two-state behavior policy", two.model.p_behavior(), rows({{0.5, 0.5}, {0.5, 0.5}}));
    same("two-state target policy", two.model.p_target(), rows({{0, 1}, {0, 1}}));

    const Matrix baird_phi = rows({{1, 2, 0, 0, 0, 0, 0, 0},
                                   {1, 0, 2, 0, 0, 0, 0, 0},
                                   {1, 0, 0, 2, 0, 0, 0, 0},
                                   {1, 0, 0, 0, 2, 0, 0, 0},
                                   {1, 0, 0, 0, 0, 2, 0, 0},
                                   {1, 0, 0, 0, 0, 0, 2, 0},
                                   {2, 0, 0, 0, 0, 0, 0, 1}});
    Matrix baird_target = Matrix::Zero(7, 7);
    baird_target.col(6).setOnes();
    const auto baird = baird_seven();
    same("baird features", baird.features.matrix(), baird_phi);
    same("baird behavior policy", baird.model.p_behavior(), Matrix::Constant(7, 7, 1.0 / 7.0));
    same("baird target policy", baird.model.p_target(), baird_target);

    if (boyan.model.gamma() != 0.9 || two.model.gamma() != 0.9 || baird.model.gamma() != 0.99)
        bad.push_back("discount factors");

    std::string detail = "3 feature matrices, 6 policy matrices, 3 discounts";
    for (const auto& b : bad) detail += "; mismatch: " + b;
    return {bad.empty(), detail};
}

} // namespace

int main() {
    const unsigned threads = 0;
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"lemma cross-check", lemma_cross_check},
        {"centering algebra", centering_algebra},
        {"on-policy A covariance identity (Boyan)", covariance_identity},
        {"expected-update oracles", expected_updates},
        {"Baird divergence/convergence contrast", [] { return baird_contrast(threads); }},
        {"on-policy CTD convergence (Boyan)", [] { return boyan_convergence(threads); }},
        {"SRC average-reward tracking", src_tracking},
        {"determinism", determinism},
        {"golden environment data", golden_data},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %zu %s: %s (%.2fs) %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, secs,
                    o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
