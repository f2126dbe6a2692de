#include "epem/summary_stats.hpp"

#include <string>

#include "epem/errors.hpp"

namespace epem {

Eigen::MatrixXd QuadrantPartition::assemble() const {
    const Index q = top_left.rows();
    const Index r = bottom_right.rows();
    Eigen::MatrixXd m(q + r, q + r);
    m.topLeftCorner(q, q) = top_left;
    m.topRightCorner(q, r) = top_right;
    m.bottomLeftCorner(r, q) = bottom_left;
    m.bottomRightCorner(r, r) = bottom_right;
    return m;
}

BlockMoments block_moments(const BlockView& view) {
    const Index n = view.data.cols();
    if (n < 1) {
        throw EmptyStage("block has no samples");
    }
    BlockMoments out;
    out.class_index = view.class_index;
    out.stage = view.stage;
    out.n = n;
    out.mean = view.data.rowwise().mean();
    if (n == 1) {
        out.cov = Eigen::MatrixXd::Zero(view.data.rows(), view.data.rows());
        return out;
    }
    const Eigen::MatrixXd centered = view.data.colwise() - out.mean;
    out.cov = Eigen::MatrixXd::Zero(view.data.rows(), view.data.rows());
    out.cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
    out.cov.triangularView<Eigen::StrictlyUpper>() = out.cov.transpose();
    out.cov /= static_cast<double>(n - 1);
    return out;
}

PooledScatter pooled_scatter(std::span<const BlockMoments> moments, Index stage) {
    if (moments.empty()) {
        throw DimensionMismatch("pooled scatter needs at least one class");
    }
    const Index order = moments.front().cov.rows();
    PooledScatter out{stage, Eigen::MatrixXd::Zero(order, order), 0};
    for (const auto& m : moments) {
        if (m.cov.rows() != order || m.cov.cols() != order) {
            throw DimensionMismatch("class moments of order " + std::to_string(m.cov.rows()) +
                                    " cannot be pooled with order " + std::to_string(order));
        }
        out.W += static_cast<double>(m.n - 1) * m.cov;
        out.n_total += m.n;
    }
    return out;
}

QuadrantPartition partition_at(const Eigen::MatrixXd& m, Index q) {
    const Index order = m.rows();
    if (m.cols() != order) {
        throw DimensionMismatch("partition_at needs a square matrix");
    }
    if (q < 1 || q >= order) {
        throw BadSplit("split index " + std::to_string(q) + " outside 1.." + std::to_string(order - 1));
    }
    const Index r = order - q;
    return QuadrantPartition{m.topLeftCorner(q, q), m.topRightCorner(q, r), m.bottomLeftCorner(r, q),
                             m.bottomRightCorner(r, r)};
}

void symmetrize(Eigen::MatrixXd& m) {
    m = (0.5 * (m + m.transpose())).eval();
}

}  // namespace epem
