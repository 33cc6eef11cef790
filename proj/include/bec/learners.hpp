#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "bec/mdp.hpp"

namespace bec {

/// Norm above which a learner is declared diverged.
inline constexpr double kDivergenceNorm = 1e8;

/// Mutable learner state shared by every step rule. Linear learners use
/// theta (and u for the gradient-corrected ones); tabular learners use
/// v_table. omega estimates E[delta] for the centered learners and the
/// average reward r_bar for SRC/VRC.
struct LearnerState {
    Vector theta;
    double omega = 0.0;
    Vector u;
    Vector v_table;
    bool diverged = false;

    static LearnerState linear(Vector theta0) {
        LearnerState s;
        s.u = Vector::Zero(theta0.size());
        s.theta = std::move(theta0);
        return s;
    }

    static LearnerState tabular(Vector v0) {
        LearnerState s;
        s.v_table = std::move(v0);
        return s;
    }
};

/// One observed transition. rho = P_pi(s,s') / P_mu(s,s'), identically 1
/// for on-policy data. delta is derived per step, never stored.
struct TransitionSample {
    StateId s = 0;
    StateId s_next = 0;
    double r = 0.0;
    Vector phi_s;
    Vector phi_next;
    double rho = 1.0;
};

/// Instantaneous step sizes for one update.
struct Rates {
    double alpha = 0.0;
    double beta = 0.0;
    double zeta = 0.0;
};

enum class CtdcMode {
    rho_weighted, ///< importance ratio multiplies all three updates
    subsample,    ///< only transitions the target policy can take are used, without rho
};

namespace detail {

inline double td_error(const LearnerState& st, const TransitionSample& x, double gamma) {
    return x.r + gamma * st.theta.dot(x.phi_next) - st.theta.dot(x.phi_s);
}

inline bool out_of_bounds(const Vector& v) {
    if (v.size() == 0) return false;
    if (!v.allFinite()) return true;
    return v.norm() > kDivergenceNorm;
}

inline void guard(LearnerState& st) {
    if (out_of_bounds(st.theta) || out_of_bounds(st.u) || out_of_bounds(st.v_table) || !std::isfinite(st.omega) ||
        std::abs(st.omega) > kDivergenceNorm)
        st.diverged = true;
}

inline void require_linear(const LearnerState& st, const TransitionSample& x, bool needs_u) {
    if (x.phi_s.size() != st.theta.size() || x.phi_next.size() != st.theta.size())
        throw DimensionMismatch("learner: feature length differs from theta length");
    if (needs_u && st.u.size() != st.theta.size()) throw DimensionMismatch("learner: u must match theta");
}

inline void require_tabular(const LearnerState& st, const TransitionSample& x) {
    const auto n = static_cast<std::size_t>(st.v_table.size());
    if (n == 0) throw InvalidModel("tabular learner: v_table is empty");
    if (x.s >= n || x.s_next >= n) throw DimensionMismatch("tabular learner: state id out of range");
}

} // namespace detail

// In-place updates. Each is a no-op on a diverged state.

/// theta += alpha rho delta phi
inline void td_update(LearnerState& st, const TransitionSample& x, double gamma, const Rates& k) {
    if (st.diverged) return;
    detail::require_linear(st, x, false);
    const double delta = detail::td_error(st, x, gamma);
    st.theta += ((k.alpha * x.rho) * delta) * x.phi_s;
    detail::guard(st);
}

/// theta += alpha rho (delta - omega) phi;  omega += beta rho (delta - omega).
/// Both consume the pre-update omega.
inline void ctd_update(LearnerState& st, const TransitionSample& x, double gamma, const Rates& k) {
    if (st.diverged) return;
    detail::require_linear(st, x, false);
    const double centered = detail::td_error(st, x, gamma) - st.omega;
    st.theta += ((k.alpha * x.rho) * centered) * x.phi_s;
    st.omega += (k.beta * x.rho) * centered;
    detail::guard(st);
}

/// TDC: the gradient-corrected rule with omega held at zero.
inline void tdc_update(LearnerState& st, const TransitionSample& x, double gamma, const Rates& k) {
    if (st.diverged) return;
    detail::require_linear(st, x, true);
    const double delta = detail::td_error(st, x, gamma);
    const double phi_u = x.phi_s.dot(st.u);
    const double ar = k.alpha * x.rho;
    st.theta += (ar * delta) * x.phi_s - (ar * gamma * phi_u) * x.phi_next;
    st.u += ((k.zeta * x.rho) * (delta - phi_u)) * x.phi_s;
    detail::guard(st);
}

/// Centered TDC. theta and u use the pre-update omega and u:
///   theta += alpha rho [(delta - omega) phi - gamma phi' (phi^T u)]
///   u     += zeta  rho [(delta - omega) - phi^T u] phi
///   omega += beta  rho (delta - omega)
inline void ctdc_update(LearnerState& st, const TransitionSample& x, double gamma, const Rates& k,
                        CtdcMode mode = CtdcMode::rho_weighted) {
    if (st.diverged) return;
    detail::require_linear(st, x, true);
    double rho = x.rho;
    if (mode == CtdcMode::subsample) {
        if (!(x.rho > 0.0)) return;
        rho = 1.0;
    }
    const double centered = detail::td_error(st, x, gamma) - st.omega;
    const double phi_u = x.phi_s.dot(st.u);
    const double ar = k.alpha * rho;
    st.theta += (ar * centered) * x.phi_s - (ar * gamma * phi_u) * x.phi_next;
    st.u += ((k.zeta * rho) * (centered - phi_u)) * x.phi_s;
    st.omega += (k.beta * rho) * centered;
    detail::guard(st);
}

/// Simple reward centering (tabular, on-policy): r_bar lives in omega.
///   V(s) += alpha (r - r_bar + gamma V(s') - V(s));  r_bar += beta (r - r_bar)
inline void src_update(LearnerState& st, const TransitionSample& x, double gamma, const Rates& k) {
    if (st.diverged) return;
    detail::require_tabular(st, x);
    const auto s = static_cast<Eigen::Index>(x.s);
    const auto sn = static_cast<Eigen::Index>(x.s_next);
    const double centered = x.r - st.omega + gamma * st.v_table[sn] - st.v_table[s];
    st.v_table[s] += k.alpha * centered;
    st.omega += k.beta * (x.r - st.omega);
    detail::guard(st);
}

/// Value-based reward centering, i.e. tabular Bellman error centering:
///   V(s) += alpha rho (delta - r_bar);  r_bar += beta rho (delta - r_bar)
/// using the pre-update r_bar in both.
inline void vrc_update(LearnerState& st, const TransitionSample& x, double gamma, const Rates& k) {
    if (st.diverged) return;
    detail::require_tabular(st, x);
    const auto s = static_cast<Eigen::Index>(x.s);
    const auto sn = static_cast<Eigen::Index>(x.s_next);
    const double centered = x.r + gamma * st.v_table[sn] - st.v_table[s] - st.omega;
    st.v_table[s] += (k.alpha * x.rho) * centered;
    st.omega += (k.beta * x.rho) * centered;
    detail::guard(st);
}

// Value-style wrappers: state in, state out.

inline LearnerState td_step(LearnerState st, const TransitionSample& x, double gamma, const Rates& k) {
    td_update(st, x, gamma, k);
    return st;
}

inline LearnerState ctd_step(LearnerState st, const TransitionSample& x, double gamma, const Rates& k) {
    ctd_update(st, x, gamma, k);
    return st;
}

inline LearnerState tdc_step(LearnerState st, const TransitionSample& x, double gamma, const Rates& k) {
    tdc_update(st, x, gamma, k);
    return st;
}

inline LearnerState ctdc_step(LearnerState st, const TransitionSample& x, double gamma, const Rates& k,
                              CtdcMode mode = CtdcMode::rho_weighted) {
    ctdc_update(st, x, gamma, k, mode);
    return st;
}

inline LearnerState src_step(LearnerState st, const TransitionSample& x, double gamma, const Rates& k) {
    src_update(st, x, gamma, k);
    return st;
}

inline LearnerState vrc_step(LearnerState st, const TransitionSample& x, double gamma, const Rates& k) {
    vrc_update(st, x, gamma, k);
    return st;
}

enum class Algorithm { td, tdc, ctd, ctdc, src, vrc };

inline std::string_view to_string(Algorithm a) {
    switch (a) {
    case Algorithm::td: return "td";
    case Algorithm::tdc: return "tdc";
    case Algorithm::ctd: return "ctd";
    case Algorithm::ctdc: return "ctdc";
    case Algorithm::src: return "src";
    case Algorithm::vrc: return "vrc";
    }
    return "?";
}

inline bool parse_algorithm(std::string_view name, Algorithm& out) {
    for (auto a : {Algorithm::td, Algorithm::tdc, Algorithm::ctd, Algorithm::ctdc, Algorithm::src, Algorithm::vrc}) {
        if (to_string(a) == name) {
            out = a;
            return true;
        }
    }
    return false;
}

inline bool is_tabular(Algorithm a) { return a == Algorithm::src || a == Algorithm::vrc; }
inline bool uses_beta(Algorithm a) { return a == Algorithm::ctd || a == Algorithm::ctdc || is_tabular(a); }
inline bool uses_zeta(Algorithm a) { return a == Algorithm::tdc || a == Algorithm::ctdc; }

inline void apply_update(Algorithm algo, LearnerState& st, const TransitionSample& x, double gamma, const Rates& k,
                         CtdcMode mode = CtdcMode::rho_weighted) {
    switch (algo) {
    case Algorithm::td: td_update(st, x, gamma, k); break;
    case Algorithm::tdc: tdc_update(st, x, gamma, k); break;
    case Algorithm::ctd: ctd_update(st, x, gamma, k); break;
    case Algorithm::ctdc: ctdc_update(st, x, gamma, k, mode); break;
    case Algorithm::src: src_update(st, x, gamma, k); break;
    case Algorithm::vrc: vrc_update(st, x, gamma, k); break;
    }
}

} // namespace bec
