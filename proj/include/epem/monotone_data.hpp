#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace epem {

using Index = Eigen::Index;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Widths p_1..p_k of the feature stages. Stages are 1-based throughout the library.
class FeatureBlockSpec {
public:
    FeatureBlockSpec() = default;
    explicit FeatureBlockSpec(std::vector<Index> widths);

    Index stages() const noexcept { return static_cast<Index>(widths_.size()); }
    Index features() const noexcept { return leading_.empty() ? 0 : leading_.back(); }
    Index width(Index stage) const;
    /// Number of features in stages 1..stage; leading(0) == 0.
    Index leading(Index stage) const;

    const std::vector<Index>& widths() const noexcept { return widths_; }

    bool operator==(const FeatureBlockSpec&) const = default;

private:
    std::vector<Index> widths_;
    std::vector<Index> leading_;  // prefix sums, leading_[0] == 0
};

/// Values with an explicit observation mask. Columns are samples, rows are features.
struct MaskedMatrix {
    Eigen::MatrixXd values;
    BoolArray observed;

    Index features() const noexcept { return values.rows(); }
    Index samples() const noexcept { return values.cols(); }
};

/// The samples of one class laid out as a staircase: column j is observed through
/// stage i exactly when j < count(i).
class ClassSamples {
public:
    ClassSamples(std::string label, std::vector<Index> counts, Eigen::MatrixXd values,
                 std::vector<std::size_t> source_columns = {});

    const std::string& label() const noexcept { return label_; }
    const std::vector<Index>& counts() const noexcept { return counts_; }
    /// n_i for 1-based stage i.
    Index count(Index stage) const;
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    Index samples() const noexcept { return values_.cols(); }
    /// Column index of each sample in the matrix it was detected from.
    const std::vector<std::size_t>& source_columns() const noexcept { return source_; }

    /// Last stage at which the sample in column `col` is observed.
    Index last_stage(Index col) const;

private:
    std::string label_;
    std::vector<Index> counts_;
    Eigen::MatrixXd values_;
    std::vector<std::size_t> source_;
};

class MonotoneDataset {
public:
    MonotoneDataset(FeatureBlockSpec spec, std::vector<ClassSamples> classes);

    const FeatureBlockSpec& spec() const noexcept { return spec_; }
    const std::vector<ClassSamples>& classes() const noexcept { return classes_; }
    std::size_t class_count() const noexcept { return classes_.size(); }
    const ClassSamples& at(std::size_t g) const { return classes_.at(g); }
    std::vector<std::string> labels() const;

    /// Sum over classes of n_i^(g).
    Index total_count(Index stage) const;
    Index total_samples() const { return total_count(1); }
    Index missing_cells() const;
    Index total_cells() const { return spec_.features() * total_samples(); }

    /// Re-emits the staircase as a masked matrix, classes concatenated in order.
    MaskedMatrix to_masked() const;

private:
    FeatureBlockSpec spec_;
    std::vector<ClassSamples> classes_;
};

/// Fully observed top-left part of one class: leading(stage) rows by n_stage columns.
struct BlockView {
    std::size_t class_index;
    Index stage;
    Eigen::Block<const Eigen::MatrixXd> data;
};

/// Builds a canonical staircase from a masked matrix and per-column labels.
/// Classes are ordered by first appearance.
MonotoneDataset detect_pattern(const MaskedMatrix& raw, std::span<const std::string> labels);

/// As above with an explicit class order; a listed class without samples is EmptyClass.
MonotoneDataset detect_pattern(const MaskedMatrix& raw, std::span<const std::string> labels,
                               std::span<const std::string> class_order);

BlockView block_view(const MonotoneDataset& ds, std::size_t class_index, Index stage);

/// Keeps stages 1..stages of every class.
MonotoneDataset truncate_stages(const MonotoneDataset& ds, Index stages);

/// Single-stage dataset from fully observed columns grouped by label.
MonotoneDataset complete_dataset(const Eigen::MatrixXd& values,
                                 std::span<const std::string> labels);

}  // namespace epem
