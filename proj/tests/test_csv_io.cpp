#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "epem/csv_io.hpp"
#include "epem/errors.hpp"
#include "test_support.hpp"

using namespace epem;

TEST(CsvIo, ReadsMissingCellsAndClassColumn) {
    std::istringstream in("a,class,b\n1.5,x,\n2,y,NaN\n-3e2,\"x\",4\n");
    const auto t = io::read_table(in);
    ASSERT_TRUE(t.class_column.has_value());
    EXPECT_EQ(*t.class_column, 1u);
    EXPECT_EQ(t.feature_names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(t.labels, (std::vector<std::string>{"x", "y", "x"}));
    EXPECT_EQ(t.data.values(0, 2), -300.0);
    EXPECT_FALSE(t.data.observed(1, 0));
    EXPECT_FALSE(t.data.observed(1, 1));
    EXPECT_TRUE(t.data.observed(1, 2));
}

TEST(CsvIo, ParseErrorsNameTheRow) {
    std::istringstream bad("a,class\n1,x\nfoo,y\n");
    try {
        io::read_table(bad);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("data row 2"), std::string::npos);
    }
    std::istringstream ragged("a,class\n1,x,3\n");
    EXPECT_THROW(io::read_table(ragged), ParseError);
    std::istringstream no_class("a,b\n1,2\n");
    EXPECT_THROW(io::read_table(no_class), ParseError);
    std::istringstream empty("");
    EXPECT_THROW(io::read_table(empty), ParseError);
}

TEST(CsvIo, TableRoundTrip) {
    std::istringstream in("f1,f2,class\n0.1,,a\n1e-300,2,b\n");
    const auto t = io::read_table(in);
    std::ostringstream out;
    io::write_table(out, t);
    EXPECT_EQ(out.str(), "f1,f2,class\n0.1,,a\n1e-300,2,b\n");
}

TEST(CsvIo, CompleteValuesNamesIncompleteRow) {
    std::istringstream in("f1,f2,class\n1,2,a\n3,,b\n");
    const auto t = io::read_table(in);
    try {
        io::complete_values(t);
        FAIL() << "expected IncompleteObservation";
    } catch (const IncompleteObservation& e) {
        EXPECT_EQ(e.row(), 1u);
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
    }
}

TEST(CsvIo, FormatDoubleRoundTrips) {
    Rng rng(4);
    for (int t = 0; t < 1000; ++t) {
        const double v = std::ldexp(standard_normal(rng), static_cast<int>(uniform_index(rng, 200)) - 100);
        ASSERT_EQ(std::stod(io::format_double(v)), v);
    }
    EXPECT_EQ(io::format_double(0.5), "0.5");
}

TEST(CsvIo, ModelRoundTripIsExact) {
    const auto ds = fixtures::tiny_instance(3, 2, 3);
    const auto fit = epem_fit(ds);
    const Eigen::VectorXd priors = class_priors(ds);
    std::stringstream buf;
    io::write_model(buf, fit, priors);
    const auto back = io::read_model(buf);
    EXPECT_EQ(back.params.mu, fit.mu);
    EXPECT_EQ(back.params.sigma, fit.sigma);
    EXPECT_EQ(back.params.spec, fit.spec);
    EXPECT_EQ(back.params.class_labels, fit.class_labels);
    EXPECT_EQ(back.priors, priors);
}

TEST(CsvIo, TruncatedModelIsParseError) {
    std::istringstream in("dims,2,1\nclasses,a\nblocks,2\nmu,1\n");
    EXPECT_THROW(io::read_model(in), ParseError);
}
