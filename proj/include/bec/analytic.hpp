#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "bec/centering.hpp"
#include "bec/stationary.hpp"

namespace bec {

/// omega*(theta) = slope^T theta + offset, the mean TD error under d_mu.
struct OmegaStar {
    Vector slope;
    double offset = 0.0;

    double operator()(const Vector& theta) const { return slope.dot(theta) + offset; }
};

/// Expected-update matrices of the centered learners:
///   A = Phi^T (D - d d^T)(I - gamma P_pi) Phi
///   b = Phi^T (D - d d^T) r_pi
///   C = Phi^T D Phi
/// with d the behavior stationary distribution. On-policy models are the
/// special case P_pi = P_mu, where A = Cov(phi, phi - gamma phi').
struct AnalyticSystem {
    DistributionVector d_mu;
    Matrix a_matrix;
    Vector b_vector;
    Matrix c_matrix;
    OmegaStar omega_star;
};

inline AnalyticSystem analytic_system(const MdpModel& model, const FeatureMap& features, const DistributionVector& d) {
    require_compatible(model, features);
    if (d.size() != model.n_states()) throw DimensionMismatch("analytic_system: d has wrong length");
    const Matrix& phi = features.matrix();
    const Vector& dv = d.vector();
    const auto n = static_cast<Eigen::Index>(model.n_states());

    const Matrix weight = Matrix(dv.asDiagonal()) - dv * dv.transpose();
    const Matrix td_map = (Matrix::Identity(n, n) - model.gamma() * model.p_target()) * phi;
    const Vector r_pi = model.expected_reward();

    Matrix a = phi.transpose() * weight * td_map;
    Vector b = phi.transpose() * weight * r_pi;
    Matrix c = phi.transpose() * dv.asDiagonal() * phi;
    c = 0.5 * (c + c.transpose());

    OmegaStar omega{-(td_map.transpose() * dv), dv.dot(r_pi)};
    return AnalyticSystem{d, std::move(a), std::move(b), std::move(c), std::move(omega)};
}

inline AnalyticSystem analytic_system(const MdpModel& model, const FeatureMap& features) {
    return analytic_system(model, features, stationary_distribution(model.p_behavior()));
}

inline constexpr double kSingularConditionThreshold = 1e10;

struct FixpointSolution {
    Vector theta_star;
    bool singular = false;
    double condition = 0.0;
    double residual = 0.0; ///< ||A theta* - b||
};

/// A^{-1} b when A is well conditioned (condition <= 1e10), otherwise the
/// minimum-norm least-squares solution with `singular` set.
inline FixpointSolution fixpoint_solve(const AnalyticSystem& sys) {
    const Matrix& a = sys.a_matrix;
    const Vector& b = sys.b_vector;
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sigma = svd.singularValues();
    const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
    const double smin = sigma.size() > 0 ? sigma(sigma.size() - 1) : 0.0;
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();

    FixpointSolution out;
    out.condition = cond;
    if (cond <= kSingularConditionThreshold) {
        out.theta_star = a.partialPivLu().solve(b);
    } else {
        out.singular = true;
        out.theta_star = Vector::Zero(a.cols());
        const double cutoff = smax / kSingularConditionThreshold;
        for (Eigen::Index i = 0; i < sigma.size(); ++i) {
            if (sigma(i) > cutoff && sigma(i) > 0.0)
                out.theta_star += svd.matrixV().col(i) * (svd.matrixU().col(i).dot(b) / sigma(i));
        }
    }
    out.residual = (a * out.theta_star - b).norm();
    return out;
}

/// Distance from theta to the least-squares solution set of A theta = b.
/// Equals ||theta - A^{-1} b|| when A is nonsingular; for singular A the
/// null-space component of theta - theta* is discarded.
inline double distance_to_fixpoint_set(const AnalyticSystem& sys, const FixpointSolution& sol, const Vector& theta) {
    if (theta.size() != sol.theta_star.size()) throw DimensionMismatch("distance_to_fixpoint_set: length");
    const Vector diff = theta - sol.theta_star;
    if (!sol.singular) return diff.norm();
    Eigen::JacobiSVD<Matrix> svd(sys.a_matrix, Eigen::ComputeFullV);
    const Vector& sigma = svd.singularValues();
    const double cutoff = sigma(0) / kSingularConditionThreshold;
    Vector row_part = Vector::Zero(diff.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > cutoff && sigma(i) > 0.0) row_part += svd.matrixV().col(i) * svd.matrixV().col(i).dot(diff);
    return row_part.norm();
}

/// Smallest eigenvalue of (A + A^T)/2; positive iff A is positive definite.
inline double symmetrized_min_eigenvalue(const Matrix& a) {
    const Matrix sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// Two-state off-policy family -------------------------------------------------

struct TwoStateParams {
    double a = 0.5; ///< P_mu(0 -> 0)
    double b = 0.5; ///< P_mu(1 -> 0)
    double x = 0.0; ///< P_pi(0 -> 0)
    double y = 0.0; ///< P_pi(1 -> 0)
    double m = 1.0; ///< feature of state 0
    double n = 2.0; ///< feature of state 1
    double gamma = 0.9;
};

inline void validate(const TwoStateParams& p) {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(p.a) || !unit(p.b) || !unit(p.x) || !unit(p.y))
        throw InvalidModel("two-state: a, b, x, y must lie in [0,1]");
    if (!(p.gamma > 0.0 && p.gamma < 1.0)) throw InvalidModel("two-state: gamma must lie in (0,1)");
    if (p.a == 1.0 && p.b == 0.0) throw InvalidModel("two-state: degenerate behavior chain (a = 1 and b = 0)");
    if (!std::isfinite(p.m) || !std::isfinite(p.n)) throw InvalidModel("two-state: features must be finite");
}

struct LemmaValues {
    double closed_form = 0.0;
    double matrix_form = 0.0;
};

/// The 1x1 centered A of the two-state family, evaluated both by the closed
/// form ((1-a)b/(1-a+b)^2)(1 - x gamma + y gamma)(m - n)^2 and by explicit
/// matrix arithmetic with d_mu = (b, 1-a)/(1-a+b).
inline LemmaValues lemma_two_state(const TwoStateParams& p) {
    validate(p);
    if (p.m == 0.0 || p.n == 0.0) throw InvalidModel("two-state: features m and n must be nonzero");
    const double z = 1.0 - p.a + p.b;
    LemmaValues out;
    out.closed_form = ((1.0 - p.a) * p.b / (z * z)) * (1.0 - p.x * p.gamma + p.y * p.gamma) * (p.m - p.n) * (p.m - p.n);

    Eigen::Vector2d d(p.b / z, (1.0 - p.a) / z);
    Eigen::Matrix2d p_pi;
    p_pi << p.x, 1.0 - p.x, p.y, 1.0 - p.y;
    const Eigen::Vector2d phi(p.m, p.n);
    const Eigen::Matrix2d weight = Eigen::Matrix2d(d.asDiagonal()) - d * d.transpose();
    out.matrix_form = phi.dot(weight * (Eigen::Matrix2d::Identity() - p.gamma * p_pi) * phi);
    return out;
}

} // namespace bec
