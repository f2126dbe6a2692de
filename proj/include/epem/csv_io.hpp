#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "epem/estimator.hpp"
#include "epem/lda.hpp"
#include "epem/monotone_data.hpp"

namespace epem::io {

/// A CSV table with a `class` column and numeric feature columns. Data is stored
/// features x samples; an empty cell or NaN is missing.
struct LabeledTable {
    std::vector<std::string> header;        // every column, in file order
    std::optional<std::size_t> class_column;  // position of `class` in header
    std::vector<std::string> feature_names;
    std::vector<std::string> labels;         // one per sample, empty if no class column
    MaskedMatrix data;
};

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

std::vector<std::string> split_csv_line(std::string_view line);

LabeledTable read_table(std::istream& in, bool require_class = true);
LabeledTable read_table(const std::filesystem::path& path, bool require_class = true);

/// Writes rows in sample order; masked cells are left empty.
void write_table(std::ostream& out, const LabeledTable& table);

/// Fully observed values, throws IncompleteObservation naming the first incomplete row.
Eigen::MatrixXd complete_values(const LabeledTable& table);

/// Model file: a `dims` and a `classes` line, the block widths, p `mu` rows, p `sigma`
/// rows, and a `priors` line.
void write_model(std::ostream& out, const MleParameters& params, const Eigen::VectorXd& priors);

struct ModelFile {
    MleParameters params;
    Eigen::VectorXd priors;
};

ModelFile read_model(std::istream& in);
ModelFile read_model(const std::filesystem::path& path);

}  // namespace epem::io
