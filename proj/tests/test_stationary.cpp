#include <gtest/gtest.h>

#include "bec/environments.hpp"
#include "bec/stationary.hpp"
#include "test_util.hpp"

using namespace bec;

TEST(Stationary, UniformTwoState) {
    Matrix p(2, 2);
    p << 0.5, 0.5, 0.5, 0.5;
    const auto d = stationary_distribution(p);
    EXPECT_DOUBLE_EQ(d[0], 0.5);
    EXPECT_DOUBLE_EQ(d[1], 0.5);
}

TEST(Stationary, AbsorbingRightState) {
    Matrix p(2, 2);
    p << 0, 1, 0, 1;
    const auto d = stationary_distribution(p);
    EXPECT_NEAR(d[0], 0.0, 1e-12);
    EXPECT_NEAR(d[1], 1.0, 1e-12);
}

TEST(Stationary, IdentityHasNoUniqueLaw) {
    EXPECT_THROW(stationary_distribution(Matrix::Identity(2, 2)), ConvergenceError);
}

TEST(Stationary, TwoClosedClassesRejected) {
    // {0,1} and {2,3} are closed; state 4 feeds both
    Matrix p(5, 5);
    p << 0.5, 0.5, 0, 0, 0,
         0.5, 0.5, 0, 0, 0,
         0, 0, 0.3, 0.7, 0,
         0, 0, 0.6, 0.4, 0,
         0.2, 0.2, 0.3, 0.2, 0.1;
    EXPECT_THROW(stationary_distribution(p), ConvergenceError);
}

TEST(Stationary, PeriodicChainReportsResidual) {
    // bipartite 0 <-> 1 <-> 2: the uniform start oscillates forever
    Matrix p(3, 3);
    p << 0, 1, 0,
         0.5, 0, 0.5,
         0, 1, 0;
    try {
        stationary_distribution(p, PowerIterationOptions{1e-12, 1000});
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_GT(e.residual(), 0.1);
    }
}

TEST(Stationary, RejectsNonStochasticInput) {
    Matrix p(2, 2);
    p << 0.5, 0.6, 0.5, 0.5;
    EXPECT_THROW(stationary_distribution(p), InvalidModel);
    EXPECT_THROW(stationary_distribution(Matrix::Ones(2, 3) / 3.0), DimensionMismatch);
}

TEST(Stationary, BairdBehaviorIsUniform) {
    const auto env = baird_seven();
    const auto d = stationary_distribution(env.model.p_behavior());
    for (std::size_t s = 0; s < 7; ++s) EXPECT_NEAR(d[s], 1.0 / 7.0, 1e-15);
    const Vector residual = env.model.p_behavior().transpose() * d.vector() - d.vector();
    EXPECT_LE(residual.lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Stationary, BoyanMatchesDenseSolve) {
    const auto env = boyan_chain();
    const Matrix& p = env.model.p_behavior();
    const auto d = stationary_distribution(p);

    // oracle: solve (P^T - I) d = 0 with the normalisation row appended
    const Eigen::Index n = p.rows();
    Matrix m(n + 1, n);
    m.topRows(n) = p.transpose() - Matrix::Identity(n, n);
    m.row(n).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs[n] = 1.0;
    const Vector oracle = m.colPivHouseholderQr().solve(rhs);
    EXPECT_LE((d.vector() - oracle).lpNorm<Eigen::Infinity>(), 1e-10);

    const double expected[] = {0.10843437, 0.05421719, 0.08132578, 0.06777148, 0.07454863,
                               0.07116006, 0.07285434, 0.0720072,  0.07243077, 0.07221899,
                               0.07232488, 0.07227193, 0.10843437};
    for (Eigen::Index s = 0; s < n; ++s) EXPECT_NEAR(d.vector()[s], expected[s], 5e-9);
}

TEST(Stationary, RandomPositiveChainsAreInvariant) {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 2 + trial % 9;
        const Matrix p = test::random_stochastic(gen, n);
        const auto d = stationary_distribution(p);
        EXPECT_NEAR(d.vector().sum(), 1.0, 1e-12);
        EXPECT_GE(d.vector().minCoeff(), 0.0);
        const Vector residual = p.transpose() * d.vector() - d.vector();
        EXPECT_LE(residual.lpNorm<Eigen::Infinity>(), 1e-10);
    }
}

TEST(Stationary, ClosedClassCount) {
    EXPECT_EQ(detail::closed_class_count(Matrix::Identity(3, 3)), 3u);
    Matrix p(3, 3);
    p << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    EXPECT_EQ(detail::closed_class_count(p), 1u);
    p << 1, 0, 0, 0.5, 0, 0.5, 0, 0, 1;
    EXPECT_EQ(detail::closed_class_count(p), 2u);
}
