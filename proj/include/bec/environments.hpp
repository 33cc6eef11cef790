#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bec/analytic.hpp"
#include "bec/learners.hpp"
#include "bec/rng.hpp"
#include "bec/stationary.hpp"

namespace bec {

enum class SamplingMode {
    trajectory,     ///< s_{t+1} is the previous successor
    iid_stationary, ///< s ~ d_mu afresh every step
};

inline const char* to_string(SamplingMode m) {
    return m == SamplingMode::trajectory ? "trajectory" : "iid-stationary";
}

/// A benchmark: model, features, and how episodes start. An empty
/// start_state means "uniform over states".
struct EnvironmentSpec {
    MdpModel model;
    FeatureMap features;
    std::string name;
    std::optional<StateId> start_state;
    SamplingMode sampling_mode = SamplingMode::trajectory;

    EnvironmentSpec(MdpModel m, FeatureMap f, std::string n, std::optional<StateId> start,
                    SamplingMode mode = SamplingMode::trajectory)
        : model(std::move(m)), features(std::move(f)), name(std::move(n)), start_state(start), sampling_mode(mode) {
        require_compatible(model, features);
        if (start_state && *start_state >= model.n_states()) throw InvalidModel(name + ": start_state out of range");
    }

    DistributionVector behavior_distribution() const { return stationary_distribution(model.p_behavior()); }
};

/// 13-state chain, 4 features, gamma 0.9. States 0..10 move +1 or +2 with
/// probability 1/2 (10's skip lands on 12), 11 -> 12, 12 -> 0. Reward -3 per
/// step except -2 on 11 -> 12 and 0 on the 12 -> 0 reset. On-policy.
inline EnvironmentSpec boyan_chain() {
    constexpr int n = 13;
    Matrix p = Matrix::Zero(n, n);
    Matrix r = Matrix::Constant(n, n, -3.0);
    for (int s = 0; s <= 10; ++s) {
        p(s, s + 1) += 0.5;
        p(s, std::min(s + 2, 12)) += 0.5;
    }
    p(11, 12) = 1.0;
    p(12, 0) = 1.0;
    r(11, 12) = -2.0;
    r(12, 0) = 0.0;

    Matrix phi(n, 4);
    phi << 1, 0, 0, 0,
           0.75, 0.25, 0, 0,
           0.5, 0.5, 0, 0,
           0.25, 0.75, 0, 0,
           0, 1, 0, 0,
           0, 0.75, 0.25, 0,
           0, 0.5, 0.5, 0,
           0, 0.25, 0.75, 0,
           0, 0, 1, 0,
           0, 0, 0.75, 0.25,
           0, 0, 0.5, 0.5,
           0, 0, 0.25, 0.75,
           0, 0, 0, 1;
    return EnvironmentSpec(MdpModel(p, p, r, 0.9), FeatureMap(phi), "boyan", StateId{0});
}

/// General two-state off-policy family: P_mu = [[a,1-a],[b,1-b]],
/// P_pi = [[x,1-x],[y,1-y]], Phi = (m,n)^T, zero rewards.
inline EnvironmentSpec two_state(const TwoStateParams& p) {
    validate(p);
    Matrix pb(2, 2), pt(2, 2), phi(2, 1);
    pb << p.a, 1.0 - p.a, p.b, 1.0 - p.b;
    pt << p.x, 1.0 - p.x, p.y, 1.0 - p.y;
    phi << p.m, p.n;
    return EnvironmentSpec(MdpModel(pb, pt, Matrix::Zero(2, 2), p.gamma), FeatureMap(phi), "two-state", StateId{0});
}

/// Default instance: uniform behavior, always-right target, Phi = (1,2)^T.
inline EnvironmentSpec two_state_default() { return two_state(TwoStateParams{}); }

/// Baird's 7-state counterexample with 8 features. Behavior picks the solid
/// action (to state 7, index 6) with probability 1/7 and otherwise a dashed
/// action to one of states 1..6 uniformly; the target always goes solid.
/// Zero rewards, gamma 0.99, uniform start.
inline EnvironmentSpec baird_seven() {
    constexpr int n = 7;
    // each dashed successor: (6/7)(1/6) = 1/7, same as the solid one
    const Matrix pb = Matrix::Constant(n, n, 1.0 / 7.0);
    Matrix pt = Matrix::Zero(n, n);
    pt.col(6).setOnes();

    Matrix phi(n, 8);
    phi << 1, 2, 0, 0, 0, 0, 0, 0,
           1, 0, 2, 0, 0, 0, 0, 0,
           1, 0, 0, 2, 0, 0, 0, 0,
           1, 0, 0, 0, 2, 0, 0, 0,
           1, 0, 0, 0, 0, 2, 0, 0,
           1, 0, 0, 0, 0, 0, 2, 0,
           2, 0, 0, 0, 0, 0, 0, 1;
    return EnvironmentSpec(MdpModel(pb, pt, Matrix::Zero(n, n), 0.99), FeatureMap(phi), "baird7", std::nullopt);
}

/// Built-in environment by name ("boyan", "two-state", "baird7").
inline std::optional<EnvironmentSpec> builtin_environment(const std::string& name) {
    if (name == "boyan") return boyan_chain();
    if (name == "two-state") return two_state_default();
    if (name == "baird7") return baird_seven();
    return std::nullopt;
}

/// Random two-state parameters: a, b in [0.05, 0.95], x, y in [0, 1],
/// m, n in [-3, 3] with |m - n| >= 0.1 and both nonzero, gamma in {0.9, 0.99}.
inline TwoStateParams random_two_state_params(RngStream& rng) {
    auto between = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    TwoStateParams p;
    p.a = between(0.05, 0.95);
    p.b = between(0.05, 0.95);
    p.x = rng.uniform();
    p.y = rng.uniform();
    do {
        p.m = between(-3.0, 3.0);
        p.n = between(-3.0, 3.0);
    } while (std::abs(p.m - p.n) < 0.1 || p.m == 0.0 || p.n == 0.0);
    p.gamma = rng.uniform() < 0.5 ? 0.9 : 0.99;
    return p;
}

/// Precomputed cumulative rows for repeated sampling.
class Sampler {
public:
    explicit Sampler(const EnvironmentSpec& spec)
        : spec_(&spec), cumulative_(spec.model.p_behavior().rows(), spec.model.p_behavior().cols()) {
        const Matrix& pb = spec.model.p_behavior();
        for (Eigen::Index s = 0; s < pb.rows(); ++s) {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < pb.cols(); ++j) cumulative_(s, j) = acc += pb(s, j);
        }
        if (spec.sampling_mode == SamplingMode::iid_stationary) {
            const Vector d = spec.behavior_distribution().vector();
            double acc = 0.0;
            for (Eigen::Index j = 0; j < d.size(); ++j) state_cumulative_.push_back(acc += d[j]);
        }
    }

    StateId start(RngStream& rng) const {
        if (spec_->start_state) return *spec_->start_state;
        return static_cast<StateId>(rng.next_u64() % spec_->model.n_states());
    }

    /// Fills `out` with one behavior transition and returns the successor.
    StateId step(StateId current, RngStream& rng, TransitionSample& out) const {
        const auto n = spec_->model.n_states();
        StateId s = current;
        if (spec_->sampling_mode == SamplingMode::iid_stationary) s = rng.categorical(state_cumulative_, n);
        if (s >= n) throw InvalidModel("sample_step: state out of range");
        const auto row = cumulative_.row(static_cast<Eigen::Index>(s));
        const StateId s_next = rng.categorical(row, n);
        const auto si = static_cast<Eigen::Index>(s);
        const auto ni = static_cast<Eigen::Index>(s_next);
        out.s = s;
        out.s_next = s_next;
        out.r = spec_->model.rewards()(si, ni);
        out.rho = spec_->model.rho(s, s_next);
        out.phi_s = spec_->features.row(s).transpose();
        out.phi_next = spec_->features.row(s_next).transpose();
        return s_next;
    }

private:
    const EnvironmentSpec* spec_;
    Matrix cumulative_;
    std::vector<double> state_cumulative_;
};

/// One behavior step from `current_state`. In iid-stationary mode the start
/// of the transition is drawn from d_mu and `current_state` is ignored.
inline std::pair<TransitionSample, StateId> sample_step(const EnvironmentSpec& spec, StateId current_state,
                                                        RngStream& rng) {
    TransitionSample x;
    const StateId next = Sampler(spec).step(current_state, rng, x);
    return {std::move(x), next};
}

} // namespace bec
