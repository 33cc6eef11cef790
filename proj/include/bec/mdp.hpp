#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "bec/errors.hpp"

namespace bec {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using StateId = std::size_t;

inline constexpr double kRowSumTolerance = 1e-12;

namespace detail {

inline void require_row_stochastic(const Matrix& p, const char* name) {
    for (Eigen::Index s = 0; s < p.rows(); ++s) {
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            const double v = p(s, j);
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw InvalidModel(std::string(name) + ": entry (" + std::to_string(s) + "," +
                                   std::to_string(j) + ") outside [0,1]");
        }
        if (std::abs(p.row(s).sum() - 1.0) > kRowSumTolerance)
            throw InvalidModel(std::string(name) + ": row " + std::to_string(s) +
                               " does not sum to 1");
    }
}

} // namespace detail

/// Finite MDP at the state-transition level. Actions are folded into the
/// successor distribution, so the importance ratio of a transition is
/// p_target(s, s') / p_behavior(s, s').
class MdpModel {
public:
    MdpModel(Matrix p_behavior, Matrix p_target, Matrix rewards, double gamma)
        : p_behavior_(std::move(p_behavior)),
          p_target_(std::move(p_target)),
          rewards_(std::move(rewards)),
          gamma_(gamma) {
        const auto n = p_behavior_.rows();
        if (n < 1) throw InvalidModel("MdpModel: at least one state is required");
        if (p_behavior_.cols() != n || p_target_.rows() != n || p_target_.cols() != n ||
            rewards_.rows() != n || rewards_.cols() != n)
            throw DimensionMismatch("MdpModel: all matrices must be n_states x n_states");
        if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw InvalidModel("MdpModel: gamma must lie in (0,1)");
        if (!rewards_.allFinite()) throw InvalidModel("MdpModel: rewards must be finite");
        detail::require_row_stochastic(p_behavior_, "p_behavior");
        detail::require_row_stochastic(p_target_, "p_target");
        for (Eigen::Index s = 0; s < n; ++s)
            for (Eigen::Index j = 0; j < n; ++j)
                if (p_target_(s, j) > 0.0 && !(p_behavior_(s, j) > 0.0))
                    throw InvalidModel("MdpModel: coverage violated at transition " +
                                       std::to_string(s) + "->" + std::to_string(j));
    }

    std::size_t n_states() const noexcept { return static_cast<std::size_t>(p_behavior_.rows()); }
    const Matrix& p_behavior() const noexcept { return p_behavior_; }
    const Matrix& p_target() const noexcept { return p_target_; }
    const Matrix& rewards() const noexcept { return rewards_; }
    double gamma() const noexcept { return gamma_; }

    bool on_policy() const { return p_behavior_ == p_target_; }

    /// r_pi(s) = sum_s' P_pi(s,s') R(s,s').
    Vector expected_reward() const { return p_target_.cwiseProduct(rewards_).rowwise().sum(); }

    double rho(StateId s, StateId s_next) const {
        const double pb = p_behavior_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s_next));
        const double pt = p_target_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s_next));
        return pt / pb;
    }

private:
    Matrix p_behavior_;
    Matrix p_target_;
    Matrix rewards_;
    double gamma_;
};

/// State-feature matrix, one row per state.
class FeatureMap {
public:
    explicit FeatureMap(Matrix phi) : phi_(std::move(phi)) {
        if (phi_.cols() < 1) throw InvalidModel("FeatureMap: n_features must be >= 1");
        if (phi_.rows() < 1) throw InvalidModel("FeatureMap: at least one state row is required");
        if (!phi_.allFinite()) throw InvalidModel("FeatureMap: entries must be finite");
    }

    static FeatureMap tabular(std::size_t n_states) {
        const auto n = static_cast<Eigen::Index>(n_states);
        return FeatureMap(Matrix::Identity(n, n));
    }

    const Matrix& matrix() const noexcept { return phi_; }
    std::size_t n_states() const noexcept { return static_cast<std::size_t>(phi_.rows()); }
    std::size_t n_features() const noexcept { return static_cast<std::size_t>(phi_.cols()); }
    auto row(StateId s) const { return phi_.row(static_cast<Eigen::Index>(s)); }

    Vector values(const Vector& theta) const {
        if (static_cast<std::size_t>(theta.size()) != n_features())
            throw DimensionMismatch("FeatureMap: theta has wrong length");
        return phi_ * theta;
    }

private:
    Matrix phi_;
};

/// A probability vector over states.
class DistributionVector {
public:
    explicit DistributionVector(Vector d) : d_(std::move(d)) {
        if (d_.size() < 1) throw InvalidModel("DistributionVector: empty");
        for (Eigen::Index i = 0; i < d_.size(); ++i)
            if (!std::isfinite(d_[i]) || d_[i] < 0.0)
                throw InvalidModel("DistributionVector: entries must be finite and >= 0");
        if (std::abs(d_.sum() - 1.0) > kRowSumTolerance)
            throw InvalidModel("DistributionVector: entries must sum to 1");
    }

    const Vector& vector() const noexcept { return d_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(d_.size()); }
    double operator[](std::size_t i) const { return d_[static_cast<Eigen::Index>(i)]; }

private:
    Vector d_;
};

inline void require_compatible(const MdpModel& model, const FeatureMap& phi) {
    if (model.n_states() != phi.n_states())
        throw DimensionMismatch("feature map row count differs from the model's state count");
}

} // namespace bec
