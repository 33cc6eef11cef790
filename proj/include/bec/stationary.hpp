#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "bec/mdp.hpp"

namespace bec {

struct PowerIterationOptions {
    double tolerance = 1e-12;
    std::size_t max_iterations = 1'000'000;
};

namespace detail {

/// Number of closed communicating classes of the graph {s -> s' : p(s,s') > 0}.
/// A finite chain has a unique stationary distribution iff this is 1.
inline std::size_t closed_class_count(const Matrix& p) {
    const auto n = static_cast<std::size_t>(p.rows());
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<std::size_t> stack{s};
        reach[s][s] = 1;
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < n; ++j) {
                if (p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0 && !reach[s][j]) {
                    reach[s][j] = 1;
                    stack.push_back(j);
                }
            }
        }
    }
    std::vector<char> seen(n, 0);
    std::size_t classes = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s]) continue;
        bool closed = true;
        for (std::size_t j = 0; j < n && closed; ++j)
            if (reach[s][j] && !reach[j][s]) closed = false;
        if (!closed) continue;
        ++classes;
        for (std::size_t j = 0; j < n; ++j)
            if (reach[s][j]) seen[j] = 1;
    }
    return classes;
}

} // namespace detail

/// Invariant law of a row-stochastic matrix by power iteration from the
/// uniform vector. Throws ConvergenceError (with the last L1 step size) for
/// chains with several closed classes or that fail to settle within the cap.
inline DistributionVector stationary_distribution(const Matrix& p, const PowerIterationOptions& opts = {}) {
    if (p.rows() != p.cols() || p.rows() < 1) throw DimensionMismatch("stationary_distribution: p must be square");
    detail::require_row_stochastic(p, "p");

    if (const auto classes = detail::closed_class_count(p); classes != 1)
        throw ConvergenceError("stationary_distribution: chain has " + std::to_string(classes) +
                                   " closed classes; no unique stationary distribution",
                               std::numeric_limits<double>::quiet_NaN());

    const auto n = p.rows();
    Eigen::RowVectorXd d = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::RowVectorXd next(n);
    double step = 0.0;
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        next.noalias() = d * p;
        step = (next - d).lpNorm<1>();
        d.swap(next);
        if (step <= opts.tolerance) {
            d /= d.sum();
            return DistributionVector(d.transpose());
        }
    }
    throw ConvergenceError("stationary_distribution: power iteration did not converge (residual " +
                               std::to_string(step) + ")",
                           step);
}

} // namespace bec
