#pragma once

#include <span>

#include <Eigen/Dense>

#include "epem/monotone_data.hpp"

namespace epem {

/// Mean and (n-1)-normalized covariance of one class block. The covariance is
/// the zero matrix when n == 1.
struct BlockMoments {
    std::size_t class_index = 0;
    Index stage = 0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Index n = 0;
};

/// W_i = sum_g (n_i^(g) - 1) S_i^(g) and the stage sample total.
struct PooledScatter {
    Index stage = 0;
    Eigen::MatrixXd W;
    Index n_total = 0;
};

struct QuadrantPartition {
    Eigen::MatrixXd top_left;
    Eigen::MatrixXd top_right;
    Eigen::MatrixXd bottom_left;
    Eigen::MatrixXd bottom_right;

    Eigen::MatrixXd assemble() const;
};

BlockMoments block_moments(const BlockView& view);

PooledScatter pooled_scatter(std::span<const BlockMoments> moments, Index stage);

/// Splits a square matrix after row/column q.
QuadrantPartition partition_at(const Eigen::MatrixXd& m, Index q);

/// Replaces m by (m + m') / 2.
void symmetrize(Eigen::MatrixXd& m);

}  // namespace epem
