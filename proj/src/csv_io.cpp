#include "epem/csv_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "epem/errors.hpp"

namespace epem::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_missing_token(std::string_view cell) {
    if (cell.empty()) return true;
    if (cell.size() != 3) return false;
    return std::tolower(static_cast<unsigned char>(cell[0])) == 'n' &&
           std::tolower(static_cast<unsigned char>(cell[1])) == 'a' &&
           std::tolower(static_cast<unsigned char>(cell[2])) == 'n';
}

double parse_number(std::string_view cell, const std::string& where) {
    double value = 0.0;
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw ParseError(where + ": '" + std::string(cell) + "' is not a number");
    }
    return value;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

bool next_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) return true;
    }
    return false;
}

std::vector<std::string> expect_row(std::istream& in, std::string_view tag, std::size_t values) {
    std::string line;
    if (!next_line(in, line)) {
        throw ParseError("model file ended before the '" + std::string(tag) + "' line");
    }
    auto cells = split_csv_line(line);
    if (cells.empty() || cells.front() != tag) {
        throw ParseError("expected a '" + std::string(tag) + "' line in model file, got '" + line + "'");
    }
    cells.erase(cells.begin());
    if (values != 0 && cells.size() != values) {
        throw ParseError("'" + std::string(tag) + "' line has " + std::to_string(cells.size()) +
                         " values, expected " + std::to_string(values));
    }
    return cells;
}

Index parse_index(const std::string& cell, const std::string& where) {
    const double v = parse_number(trim(cell), where);
    if (v != static_cast<double>(static_cast<Index>(v)) || v < 1) {
        throw ParseError(where + ": '" + cell + "' is not a positive integer");
    }
    return static_cast<Index>(v);
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        throw Error("cannot format number");
    }
    return std::string(buf.data(), ptr);
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.emplace_back(trim(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    if (quoted) {
        throw ParseError("unterminated quote in line: " + std::string(line));
    }
    cells.emplace_back(trim(cell));
    return cells;
}

LabeledTable read_table(std::istream& in, bool require_class) {
    std::string line;
    if (!next_line(in, line)) {
        throw ParseError("input is empty; expected a header row");
    }
    LabeledTable table;
    table.header = split_csv_line(line);
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (table.header[c] == "class") {
            if (table.class_column) throw ParseError("header has more than one 'class' column");
            table.class_column = c;
        } else {
            table.feature_names.push_back(table.header[c]);
        }
    }
    if (require_class && !table.class_column) {
        throw ParseError("header has no 'class' column");
    }
    if (table.feature_names.empty()) {
        throw ParseError("header has no feature columns");
    }

    std::vector<std::vector<double>> values;
    std::vector<std::vector<bool>> observed;
    std::size_t row = 0;
    while (next_line(in, line)) {
        ++row;
        const auto cells = split_csv_line(line);
        if (cells.size() != table.header.size()) {
            throw ParseError("data row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                             " cells, header has " + std::to_string(table.header.size()));
        }
        std::vector<double> v;
        std::vector<bool> o;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (table.class_column && c == *table.class_column) {
                if (cells[c].empty()) throw ParseError("data row " + std::to_string(row) + " has an empty class label");
                table.labels.push_back(cells[c]);
                continue;
            }
            if (is_missing_token(cells[c])) {
                v.push_back(0.0);
                o.push_back(false);
            } else {
                v.push_back(parse_number(cells[c], "data row " + std::to_string(row) + ", column '" +
                                                       table.header[c] + "'"));
                o.push_back(true);
            }
        }
        values.push_back(std::move(v));
        observed.push_back(std::move(o));
    }
    const auto p = static_cast<Index>(table.feature_names.size());
    const auto n = static_cast<Index>(values.size());
    table.data.values.resize(p, n);
    table.data.observed.resize(p, n);
    for (Index j = 0; j < n; ++j) {
        for (Index f = 0; f < p; ++f) {
            table.data.values(f, j) = values[static_cast<std::size_t>(j)][static_cast<std::size_t>(f)];
            table.data.observed(f, j) = observed[static_cast<std::size_t>(j)][static_cast<std::size_t>(f)];
        }
    }
    return table;
}

LabeledTable read_table(const std::filesystem::path& path, bool require_class) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    return read_table(in, require_class);
}

void write_table(std::ostream& out, const LabeledTable& table) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c) out << ',';
        out << quote_if_needed(table.header[c]);
    }
    out << '\n';
    for (Index j = 0; j < table.data.samples(); ++j) {
        Index f = 0;
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (c) out << ',';
            if (table.class_column && c == *table.class_column) {
                out << quote_if_needed(table.labels[static_cast<std::size_t>(j)]);
                continue;
            }
            if (table.data.observed(f, j)) out << format_double(table.data.values(f, j));
            ++f;
        }
        out << '\n';
    }
}

Eigen::MatrixXd complete_values(const LabeledTable& table) {
    for (Index j = 0; j < table.data.samples(); ++j) {
        if (!table.data.observed.col(j).all()) {
            throw IncompleteObservation(static_cast<std::size_t>(j),
                                        "data row " + std::to_string(j + 1) + " has missing values");
        }
    }
    return table.data.values;
}

void write_model(std::ostream& out, const MleParameters& params, const Eigen::VectorXd& priors) {
    const Index p = params.mu.rows();
    const Index G = params.mu.cols();
    out << "dims," << p << ',' << G << '\n';
    out << "classes";
    for (const auto& label : params.class_labels) out << ',' << quote_if_needed(label);
    out << '\n';
    out << "blocks";
    for (Index w : params.spec.widths()) out << ',' << w;
    out << '\n';
    for (Index r = 0; r < p; ++r) {
        out << "mu";
        for (Index g = 0; g < G; ++g) out << ',' << format_double(params.mu(r, g));
        out << '\n';
    }
    for (Index r = 0; r < p; ++r) {
        out << "sigma";
        for (Index c = 0; c < p; ++c) out << ',' << format_double(params.sigma(r, c));
        out << '\n';
    }
    out << "priors";
    for (Index g = 0; g < priors.size(); ++g) out << ',' << format_double(priors(g));
    out << '\n';
}

ModelFile read_model(std::istream& in) {
    const auto dims = expect_row(in, "dims", 2);
    const Index p = parse_index(dims[0], "dims");
    const Index G = parse_index(dims[1], "dims");
    ModelFile model;
    model.params.class_labels = expect_row(in, "classes", static_cast<std::size_t>(G));
    std::vector<Index> widths;
    for (const auto& w : expect_row(in, "blocks", 0)) widths.push_back(parse_index(w, "blocks"));
    model.params.spec = FeatureBlockSpec(widths);
    if (model.params.spec.features() != p) {
        throw ParseError("block widths sum to " + std::to_string(model.params.spec.features()) + ", expected " +
                         std::to_string(p));
    }
    model.params.mu.resize(p, G);
    for (Index r = 0; r < p; ++r) {
        const auto cells = expect_row(in, "mu", static_cast<std::size_t>(G));
        for (Index g = 0; g < G; ++g) model.params.mu(r, g) = parse_number(cells[static_cast<std::size_t>(g)], "mu");
    }
    model.params.sigma.resize(p, p);
    for (Index r = 0; r < p; ++r) {
        const auto cells = expect_row(in, "sigma", static_cast<std::size_t>(p));
        for (Index c = 0; c < p; ++c) {
            model.params.sigma(r, c) = parse_number(cells[static_cast<std::size_t>(c)], "sigma");
        }
    }
    const auto priors = expect_row(in, "priors", static_cast<std::size_t>(G));
    model.priors.resize(G);
    for (Index g = 0; g < G; ++g) model.priors(g) = parse_number(priors[static_cast<std::size_t>(g)], "priors");
    return model;
}

ModelFile read_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    return read_model(in);
}

}  // namespace epem::io
