#include <gtest/gtest.h>

#include "epem/errors.hpp"
#include "epem/estimator.hpp"
#include "epem/oracle.hpp"
#include "test_support.hpp"

using namespace epem;

TEST(FiniteDiff, QuadraticAtOptimum) {
    const Eigen::Vector3d c(1.0, -2.0, 0.5);
    const oracle::Objective f = [&](const Eigen::VectorXd& x) { return -(x - c).squaredNorm(); };
    EXPECT_LT(oracle::finite_diff_gradient(f, c).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FiniteDiff, LinearObjective) {
    const Eigen::Vector3d a(3.0, -1.0, 0.25);
    const oracle::Objective f = [&](const Eigen::VectorXd& x) { return a.dot(x); };
    const Eigen::VectorXd g = oracle::finite_diff_gradient(f, Eigen::Vector3d(10.0, 0.0, -4.0));
    EXPECT_LT((g - a).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FiniteDiff, NonFiniteObjectiveThrows) {
    const oracle::Objective f = [](const Eigen::VectorXd& x) { return std::log(x(0)); };
    EXPECT_THROW(oracle::finite_diff_gradient(f, Eigen::VectorXd::Constant(1, -1.0)), NonFiniteObjective);
}

TEST(FiniteDiff, LikelihoodGradientStableAcrossSteps) {
    const auto ds = fixtures::tiny_instance(6, 2, 2);
    const Index p = ds.spec().features();
    Rng rng(6);
    const auto sigma = fixtures::random_spd(p, rng);
    const auto mu = fixtures::random_means(p, 2, rng);
    const auto g4 = oracle::likelihood_gradient(ds, mu, sigma, 1e-4);
    const auto g5 = oracle::likelihood_gradient(ds, mu, sigma, 1e-5);
    ASSERT_GT(g5.norm(), 1e-3);
    EXPECT_LT((g4 - g5).norm() / g5.norm(), 0.01);
}

TEST(NumericMle, OneStageClosedForm) {
    Rng rng(7);
    const auto ds = fixtures::gaussian_staircase({3}, {{9}, {7}}, fixtures::random_means(3, 2, rng),
                                                fixtures::random_spd(3, rng), rng);
    const auto num = oracle::numeric_mle(ds);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(3, 3);
    for (std::size_t g = 0; g < 2; ++g) {
        const Eigen::MatrixXd& x = ds.at(g).values();
        const Eigen::VectorXd m = x.rowwise().mean();
        EXPECT_LT((num.params.mu.col(static_cast<Index>(g)) - m).cwiseAbs().maxCoeff(), 1e-7);
        const Eigen::MatrixXd c = x.colwise() - m;
        W += c * c.transpose();
    }
    EXPECT_LT((num.params.sigma - W / 16.0).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(NumericMle, ObjectiveDominatesPerturbations) {
    const auto ds = fixtures::tiny_instance(12, 2, 2);
    const auto num = oracle::numeric_mle(ds);
    Rng rng(12);
    for (int t = 0; t < 50; ++t) {
        Eigen::MatrixXd d(num.params.mu.rows(), num.params.mu.cols());
        for (Index i = 0; i < d.size(); ++i) d(i) = 1e-2 * standard_normal(rng);
        ASSERT_GE(num.objective, oracle::direct_log_likelihood(ds, num.params.mu + d, num.params.sigma));
    }
}

TEST(NumericMle, Deterministic) {
    const auto ds = fixtures::tiny_instance(13, 2, 2);
    const auto a = oracle::numeric_mle(ds);
    const auto b = oracle::numeric_mle(ds);
    EXPECT_EQ(a.params.mu, b.params.mu);
    EXPECT_EQ(a.params.sigma, b.params.sigma);
    EXPECT_EQ(a.restart, b.restart);
}

TEST(LikelihoodGradient, VanishesAtEstimateWithNearSingularCovariance) {
    // Three stages, one class, ten samples: the fitted covariance has an eigenvalue near 4e-4.
    const auto ds = fixtures::tiny_instance(1002, 3, 1);
    const auto fit = epem_fit(ds);
    const auto grad = oracle::likelihood_gradient(ds, fit.mu, fit.sigma);
    EXPECT_LT(grad.cwiseAbs().maxCoeff(), 1e-4 * static_cast<double>(ds.total_samples()));
}
