#include <gtest/gtest.h>

#include "epem/errors.hpp"
#include "epem/summary_stats.hpp"
#include "test_support.hpp"

using namespace epem;

namespace {

MonotoneDataset one_stage(const std::vector<Eigen::MatrixXd>& blocks) {
    std::vector<ClassSamples> classes;
    for (std::size_t g = 0; g < blocks.size(); ++g)
        classes.emplace_back("c" + std::to_string(g), std::vector<Index>{blocks[g].cols()}, blocks[g]);
    return MonotoneDataset(FeatureBlockSpec({blocks.front().rows()}), std::move(classes));
}

std::vector<BlockMoments> all_moments(const MonotoneDataset& ds, Index stage) {
    std::vector<BlockMoments> out;
    for (std::size_t g = 0; g < ds.class_count(); ++g) out.push_back(block_moments(block_view(ds, g, stage)));
    return out;
}

}  // namespace

TEST(BlockMoments, TwoByTwo) {
    Eigen::MatrixXd x(2, 2);
    x << 1, 3, 2, 4;
    const auto ds = one_stage({x});
    const auto m = block_moments(block_view(ds, 0, 1));
    EXPECT_EQ(m.n, 2);
    EXPECT_DOUBLE_EQ(m.mean(0), 2.0);
    EXPECT_DOUBLE_EQ(m.mean(1), 3.0);
    Eigen::Matrix2d S;
    S << 2, 2, 2, 2;
    EXPECT_LT((m.cov - S).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BlockMoments, SingleSampleHasZeroCovariance) {
    Eigen::MatrixXd x(3, 1);
    x << 1, -2, 5;
    const auto ds = one_stage({x});
    const auto m = block_moments(block_view(ds, 0, 1));
    EXPECT_EQ(m.mean, Eigen::VectorXd(x.col(0)));
    EXPECT_TRUE(m.cov.isZero(0.0));
}

TEST(BlockMoments, IdenticalColumnsHaveZeroCovariance) {
    Eigen::MatrixXd x(2, 4);
    x.colwise() = Eigen::Vector2d(0.3, 7.0);
    const auto ds = one_stage({x});
    EXPECT_LT(block_moments(block_view(ds, 0, 1)).cov.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PooledScatter, ScalarExample) {
    Eigen::MatrixXd a(1, 2);
    a << 1, 3;  // (n-1) S = 2
    Eigen::MatrixXd b(1, 3);
    b << 0, 1, 2;  // (n-1) S = 2
    const auto ds = one_stage({a, b});
    const auto moments = all_moments(ds, 1);
    const auto W = pooled_scatter(moments, 1);
    EXPECT_EQ(W.n_total, 5);
    ASSERT_EQ(W.W.rows(), 1);
    EXPECT_DOUBLE_EQ(W.W(0, 0), 4.0);
}

TEST(PooledScatter, TwoClassFormula) {
    Rng rng(5);
    const auto sigma = fixtures::random_spd(3, rng);
    const auto mu = fixtures::random_means(3, 2, rng);
    const auto ds = fixtures::gaussian_staircase({3}, {{9}, {6}}, mu, sigma, rng);
    const auto moments = all_moments(ds, 1);
    const auto W = pooled_scatter(moments, 1);
    const Eigen::MatrixXd expected = 8.0 * moments[0].cov + 5.0 * moments[1].cov;
    EXPECT_LT((W.W - expected).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_EQ(W.n_total, 15);
}

TEST(PooledScatter, RejectsMismatchedOrders) {
    BlockMoments a{0, 1, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2), 3};
    BlockMoments b{1, 1, Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(3, 3), 3};
    const std::vector<BlockMoments> v{a, b};
    EXPECT_THROW(pooled_scatter(v, 1), DimensionMismatch);
}

TEST(PooledScatter, PropertySymmetricPsdAndCrossProduct) {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        const Index p = 1 + static_cast<Index>(uniform_index(rng, 5));
        const Index G = 1 + static_cast<Index>(uniform_index(rng, 3));
        const auto sigma = fixtures::random_spd(p, rng);
        const auto mu = fixtures::random_means(p, G, rng, 3.0);
        std::vector<std::vector<Index>> counts;
        for (Index g = 0; g < G; ++g) counts.push_back({1 + static_cast<Index>(uniform_index(rng, 12))});
        const auto ds = fixtures::gaussian_staircase({p}, counts, mu, sigma, rng);
        const auto moments = all_moments(ds, 1);
        const auto W = pooled_scatter(moments, 1);

        ASSERT_EQ(W.W, W.W.transpose()) << "seed " << seed;
        const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(W.W).eigenvalues().minCoeff();
        ASSERT_GE(min_eig, -1e-12 * std::max(1.0, W.W.norm())) << "seed " << seed;

        Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(p, p);
        for (std::size_t g = 0; g < ds.class_count(); ++g) {
            const Eigen::MatrixXd x = block_view(ds, g, 1).data;
            const Eigen::MatrixXd c = x.colwise() - x.rowwise().mean();
            direct += c * c.transpose();
        }
        if (direct.norm() > 0.0) {
            ASSERT_LT((W.W - direct).norm() / direct.norm(), 1e-12) << "seed " << seed;
        }
    }
}

TEST(Partition, Shapes) {
    Eigen::MatrixXd m(3, 3);
    m << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    const auto part = partition_at(m, 1);
    EXPECT_EQ(part.top_left.rows(), 1);
    EXPECT_EQ(part.top_right.cols(), 2);
    EXPECT_EQ(part.bottom_left.rows(), 2);
    EXPECT_EQ(part.bottom_right.rows(), 2);
    EXPECT_DOUBLE_EQ(part.top_left(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(part.bottom_left(1, 0), 7.0);
    EXPECT_DOUBLE_EQ(part.bottom_right(0, 0), 5.0);
    EXPECT_EQ(part.assemble(), m);
}

TEST(Partition, RejectsBadSplit) {
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
    EXPECT_THROW(partition_at(m, 0), BadSplit);
    EXPECT_THROW(partition_at(m, 3), BadSplit);
    EXPECT_THROW(partition_at(Eigen::MatrixXd::Zero(2, 3), 1), DimensionMismatch);
}

TEST(Partition, PropertyTilesExactly) {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = 2 + static_cast<Index>(uniform_index(rng, 6));
        const Index q = 1 + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n - 1)));
        Eigen::MatrixXd m(n, n);
        for (Index r = 0; r < n; ++r)
            for (Index c = 0; c < n; ++c) m(r, c) = standard_normal(rng);
        const auto part = partition_at(m, q);
        ASSERT_EQ(part.top_left.size() + part.top_right.size() + part.bottom_left.size() + part.bottom_right.size(),
                  n * n);
        ASSERT_EQ(part.assemble(), m);
    }
}

TEST(Symmetrize, AveragesTranspose) {
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 4, 3;
    symmetrize(m);
    EXPECT_DOUBLE_EQ(m(0, 1), 3.0);
    EXPECT_DOUBLE_EQ(m(1, 0), 3.0);
}
