#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace epem {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// A sample is observed on a later feature than on an earlier one.
class NonMonotonePattern : public Error {
public:
    NonMonotonePattern(std::size_t column, std::size_t feature, const std::string& what)
        : Error(what), column_(column), feature_(feature) {}

    std::size_t column() const noexcept { return column_; }
    std::size_t feature() const noexcept { return feature_; }

private:
    std::size_t column_;
    std::size_t feature_;
};

class EmptyClass : public Error {
public:
    using Error::Error;
};

class EmptyStage : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class BadSplit : public Error {
public:
    using Error::Error;
};

/// The leading quadrant of a stage scatter matrix is numerically rank deficient.
class SingularScatter : public Error {
public:
    SingularScatter(std::size_t stage, std::size_t extra_samples, const std::string& what)
        : Error(what), stage_(stage), extra_samples_(extra_samples) {}

    /// 1-based stage index.
    std::size_t stage() const noexcept { return stage_; }
    /// Lower bound on the number of additional stage samples needed for full rank.
    std::size_t extra_samples() const noexcept { return extra_samples_; }

private:
    std::size_t stage_;
    std::size_t extra_samples_;
};

class InsufficientSamples : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

class NonFiniteObjective : public Error {
public:
    using Error::Error;
};

class RateUnreachable : public Error {
public:
    using Error::Error;
};

class FoldTooSmall : public Error {
public:
    using Error::Error;
};

/// A prediction input has missing entries.
class IncompleteObservation : public Error {
public:
    IncompleteObservation(std::size_t row, const std::string& what) : Error(what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

}  // namespace epem
