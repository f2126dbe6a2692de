#include "epem/monotone_data.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "epem/errors.hpp"

namespace epem {

FeatureBlockSpec::FeatureBlockSpec(std::vector<Index> widths) : widths_(std::move(widths)) {
    if (widths_.empty()) {
        throw DimensionMismatch("feature block spec needs at least one stage");
    }
    leading_.reserve(widths_.size() + 1);
    leading_.push_back(0);
    for (Index w : widths_) {
        if (w < 1) {
            throw DimensionMismatch("feature block widths must be positive");
        }
        leading_.push_back(leading_.back() + w);
    }
}

Index FeatureBlockSpec::width(Index stage) const {
    if (stage < 1 || stage > stages()) {
        throw BadSplit("stage " + std::to_string(stage) + " outside 1.." + std::to_string(stages()));
    }
    return widths_[static_cast<std::size_t>(stage - 1)];
}

Index FeatureBlockSpec::leading(Index stage) const {
    if (stage < 0 || stage > stages()) {
        throw BadSplit("stage " + std::to_string(stage) + " outside 0.." + std::to_string(stages()));
    }
    return leading_[static_cast<std::size_t>(stage)];
}

ClassSamples::ClassSamples(std::string label, std::vector<Index> counts, Eigen::MatrixXd values,
                           std::vector<std::size_t> source_columns)
    : label_(std::move(label)),
      counts_(std::move(counts)),
      values_(std::move(values)),
      source_(std::move(source_columns)) {
    if (counts_.empty()) {
        throw DimensionMismatch("class '" + label_ + "' has no stage counts");
    }
    if (counts_.front() < 1) {
        throw EmptyClass("class '" + label_ + "' has no samples");
    }
    if (counts_.front() != values_.cols()) {
        throw DimensionMismatch("class '" + label_ + "': n_1 does not match the number of columns");
    }
    for (std::size_t i = 1; i < counts_.size(); ++i) {
        if (counts_[i] > counts_[i - 1] || counts_[i] < 0) {
            throw NonMonotonePattern(0, i, "class '" + label_ + "': stage counts must be non-increasing");
        }
    }
    if (source_.empty()) {
        source_.resize(static_cast<std::size_t>(values_.cols()));
        std::iota(source_.begin(), source_.end(), std::size_t{0});
    } else if (source_.size() != static_cast<std::size_t>(values_.cols())) {
        throw DimensionMismatch("class '" + label_ + "': source column list has the wrong length");
    }
}

Index ClassSamples::count(Index stage) const {
    if (stage < 1 || stage > static_cast<Index>(counts_.size())) {
        throw BadSplit("stage " + std::to_string(stage) + " out of range for class '" + label_ + "'");
    }
    return counts_[static_cast<std::size_t>(stage - 1)];
}

Index ClassSamples::last_stage(Index col) const {
    Index stage = 0;
    for (std::size_t i = 0; i < counts_.size() && counts_[i] > col; ++i) {
        stage = static_cast<Index>(i + 1);
    }
    return stage;
}

MonotoneDataset::MonotoneDataset(FeatureBlockSpec spec, std::vector<ClassSamples> classes)
    : spec_(std::move(spec)), classes_(std::move(classes)) {
    if (classes_.empty()) {
        throw EmptyClass("dataset has no classes");
    }
    for (const auto& c : classes_) {
        if (c.values().rows() != spec_.features()) {
            throw DimensionMismatch("class '" + c.label() + "' has " + std::to_string(c.values().rows()) +
                                    " features, expected " + std::to_string(spec_.features()));
        }
        if (static_cast<Index>(c.counts().size()) != spec_.stages()) {
            throw DimensionMismatch("class '" + c.label() + "' has counts for " +
                                    std::to_string(c.counts().size()) + " stages, expected " +
                                    std::to_string(spec_.stages()));
        }
    }
}

std::vector<std::string> MonotoneDataset::labels() const {
    std::vector<std::string> out;
    out.reserve(classes_.size());
    for (const auto& c : classes_) out.push_back(c.label());
    return out;
}

Index MonotoneDataset::total_count(Index stage) const {
    Index total = 0;
    for (const auto& c : classes_) total += c.count(stage);
    return total;
}

Index MonotoneDataset::missing_cells() const {
    Index missing = 0;
    for (const auto& c : classes_) {
        for (Index i = 2; i <= spec_.stages(); ++i) {
            missing += spec_.width(i) * (c.count(1) - c.count(i));
        }
    }
    return missing;
}

MaskedMatrix MonotoneDataset::to_masked() const {
    const Index p = spec_.features();
    const Index n = total_samples();
    MaskedMatrix out{Eigen::MatrixXd::Zero(p, n), BoolArray::Constant(p, n, false)};
    Index offset = 0;
    for (const auto& c : classes_) {
        for (Index j = 0; j < c.samples(); ++j) {
            const Index rows = spec_.leading(c.last_stage(j));
            out.values.col(offset + j).head(rows) = c.values().col(j).head(rows);
            out.observed.col(offset + j).head(rows).setConstant(true);
        }
        offset += c.samples();
    }
    return out;
}

namespace {

// Number of leading observed entries of column c; throws if observation resumes later.
Index prefix_length(const MaskedMatrix& raw, Index c) {
    const Index p = raw.features();
    Index len = 0;
    while (len < p && raw.observed(len, c)) ++len;
    for (Index r = len + 1; r < p; ++r) {
        if (raw.observed(r, c)) {
            std::ostringstream msg;
            msg << "sample column " << c << " observes feature " << r << " but is missing feature "
                << len;
            throw NonMonotonePattern(static_cast<std::size_t>(c), static_cast<std::size_t>(len), msg.str());
        }
    }
    if (len == 0) {
        throw NonMonotonePattern(static_cast<std::size_t>(c), 0,
                                 "sample column " + std::to_string(c) + " has no observed features");
    }
    return len;
}

}  // namespace

MonotoneDataset detect_pattern(const MaskedMatrix& raw, std::span<const std::string> labels) {
    std::vector<std::string> order;
    for (const auto& l : labels) {
        if (std::find(order.begin(), order.end(), l) == order.end()) order.push_back(l);
    }
    return detect_pattern(raw, labels, order);
}

MonotoneDataset detect_pattern(const MaskedMatrix& raw, std::span<const std::string> labels,
                               std::span<const std::string> class_order) {
    const Index p = raw.features();
    const Index n = raw.samples();
    if (raw.observed.rows() != p || raw.observed.cols() != n) {
        throw DimensionMismatch("mask and value matrix differ in shape");
    }
    if (static_cast<Index>(labels.size()) != n) {
        throw DimensionMismatch("expected one label per sample column");
    }
    if (p == 0) {
        throw DimensionMismatch("data has no features");
    }
    if (class_order.empty()) {
        throw EmptyClass("no classes given");
    }

    std::unordered_map<std::string, std::size_t> class_of;
    for (std::size_t g = 0; g < class_order.size(); ++g) class_of.emplace(class_order[g], g);
    const std::size_t G = class_order.size();

    std::vector<std::vector<Index>> members(G);
    std::vector<Index> length(static_cast<std::size_t>(n));
    for (Index c = 0; c < n; ++c) {
        auto it = class_of.find(labels[static_cast<std::size_t>(c)]);
        if (it == class_of.end()) {
            throw Error("sample column " + std::to_string(c) + " has unknown class label '" +
                        labels[static_cast<std::size_t>(c)] + "'");
        }
        length[static_cast<std::size_t>(c)] = prefix_length(raw, c);
        members[it->second].push_back(c);
    }
    for (std::size_t g = 0; g < G; ++g) {
        if (members[g].empty()) {
            throw EmptyClass("class '" + class_order[g] + "' has no samples");
        }
    }

    // observed[g][f]: samples of class g observing feature f. Stage boundaries sit where
    // this per-class count vector changes.
    std::vector<std::vector<Index>> observed(G, std::vector<Index>(static_cast<std::size_t>(p), 0));
    for (std::size_t g = 0; g < G; ++g) {
        for (Index c : members[g]) {
            for (Index f = 0; f < length[static_cast<std::size_t>(c)]; ++f) {
                ++observed[g][static_cast<std::size_t>(f)];
            }
        }
    }
    std::vector<Index> widths;
    Index run = 1;
    for (Index f = 1; f < p; ++f) {
        bool same = true;
        for (std::size_t g = 0; g < G && same; ++g) {
            same = observed[g][static_cast<std::size_t>(f)] == observed[g][static_cast<std::size_t>(f - 1)];
        }
        if (same) {
            ++run;
        } else {
            widths.push_back(run);
            run = 1;
        }
    }
    widths.push_back(run);
    FeatureBlockSpec spec(widths);

    std::vector<ClassSamples> classes;
    classes.reserve(G);
    for (std::size_t g = 0; g < G; ++g) {
        auto cols = members[g];
        std::stable_sort(cols.begin(), cols.end(), [&](Index a, Index b) {
            return length[static_cast<std::size_t>(a)] > length[static_cast<std::size_t>(b)];
        });
        std::vector<Index> counts;
        for (Index i = 1; i <= spec.stages(); ++i) {
            counts.push_back(observed[g][static_cast<std::size_t>(spec.leading(i) - 1)]);
        }
        Eigen::MatrixXd values = Eigen::MatrixXd::Zero(p, static_cast<Index>(cols.size()));
        std::vector<std::size_t> source;
        source.reserve(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const Index c = cols[j];
            const Index len = length[static_cast<std::size_t>(c)];
            values.col(static_cast<Index>(j)).head(len) = raw.values.col(c).head(len);
            source.push_back(static_cast<std::size_t>(c));
        }
        classes.emplace_back(class_order[g], std::move(counts), std::move(values), std::move(source));
    }
    return MonotoneDataset(std::move(spec), std::move(classes));
}

BlockView block_view(const MonotoneDataset& ds, std::size_t class_index, Index stage) {
    const auto& c = ds.at(class_index);
    const Index n = c.count(stage);
    if (n < 1) {
        throw EmptyStage("class '" + c.label() + "' has no samples observed through stage " +
                         std::to_string(stage));
    }
    const Index rows = ds.spec().leading(stage);
    return BlockView{class_index, stage, c.values().topLeftCorner(rows, n)};
}

MonotoneDataset truncate_stages(const MonotoneDataset& ds, Index stages) {
    if (stages < 1 || stages > ds.spec().stages()) {
        throw BadSplit("cannot truncate to " + std::to_string(stages) + " stages");
    }
    const auto& widths = ds.spec().widths();
    FeatureBlockSpec spec(std::vector<Index>(widths.begin(), widths.begin() + stages));
    std::vector<ClassSamples> classes;
    for (const auto& c : ds.classes()) {
        std::vector<Index> counts(c.counts().begin(), c.counts().begin() + stages);
        classes.emplace_back(c.label(), std::move(counts), c.values().topRows(spec.features()),
                             c.source_columns());
    }
    return MonotoneDataset(std::move(spec), std::move(classes));
}

MonotoneDataset complete_dataset(const Eigen::MatrixXd& values, std::span<const std::string> labels) {
    MaskedMatrix raw{values, BoolArray::Constant(values.rows(), values.cols(), true)};
    return detect_pattern(raw, labels);
}

}  // namespace epem
