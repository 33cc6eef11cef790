#pragma once

#include <cmath>

#include "bec/mdp.hpp"

namespace bec {

/// x - (x^T d) 1. The result is d-orthogonal to the constants.
inline Vector center(const Vector& x, const DistributionVector& d) {
    if (x.size() != d.vector().size()) throw DimensionMismatch("center: x and d differ in length");
    return x.array() - x.dot(d.vector());
}

/// Bellman prediction operator on a value vector: r_pi + gamma P_pi v.
inline Vector bellman_apply_values(const MdpModel& model, const Vector& v) {
    if (static_cast<std::size_t>(v.size()) != model.n_states())
        throw DimensionMismatch("bellman_apply: value vector has wrong length");
    return model.expected_reward() + model.gamma() * (model.p_target() * v);
}

inline Vector bellman_apply(const MdpModel& model, const FeatureMap& phi, const Vector& theta) {
    require_compatible(model, phi);
    return bellman_apply_values(model, phi.values(theta));
}

/// C(T v - v): zero exactly when v solves the centered Bellman equation.
inline Vector centered_bellman_residual_values(const MdpModel& model, const Vector& v, const DistributionVector& d) {
    return center(bellman_apply_values(model, v) - v, d);
}

inline Vector centered_bellman_residual(const MdpModel& model, const FeatureMap& phi, const Vector& theta,
                                        const DistributionVector& d) {
    require_compatible(model, phi);
    return centered_bellman_residual_values(model, phi.values(theta), d);
}

inline double rmscbe_values(const MdpModel& model, const Vector& v, const DistributionVector& d) {
    const Vector ec = centered_bellman_residual_values(model, v, d);
    return std::sqrt(d.vector().dot(ec.cwiseAbs2()));
}

/// Root mean squared centered Bellman error, weighted by d.
inline double rmscbe(const MdpModel& model, const FeatureMap& phi, const Vector& theta, const DistributionVector& d) {
    require_compatible(model, phi);
    return rmscbe_values(model, phi.values(theta), d);
}

/// Allocation-free RMSCBE for repeated evaluation inside experiment loops.
class RmscbeEvaluator {
public:
    RmscbeEvaluator(const MdpModel& model, const DistributionVector& d)
        : p_target_(model.p_target()),
          r_pi_(model.expected_reward()),
          d_(d.vector()),
          gamma_(model.gamma()),
          values_(r_pi_.size()),
          residual_(r_pi_.size()) {
        if (d_.size() != r_pi_.size()) throw DimensionMismatch("RmscbeEvaluator: d has wrong length");
    }

    double operator()(const Vector& v) {
        residual_.noalias() = p_target_ * v;
        residual_ = r_pi_ + gamma_ * residual_ - v;
        const double mean = residual_.dot(d_);
        residual_.array() -= mean;
        return std::sqrt(d_.dot(residual_.cwiseAbs2()));
    }

    double operator()(const Matrix& phi, const Vector& theta) {
        values_.noalias() = phi * theta;
        return (*this)(values_);
    }

private:
    Matrix p_target_;
    Vector r_pi_;
    Vector d_;
    double gamma_;
    Vector values_;
    Vector residual_;
};

} // namespace bec
