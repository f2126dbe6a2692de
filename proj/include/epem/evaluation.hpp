#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epem/estimator.hpp"
#include "epem/lda.hpp"
#include "epem/monotone_data.hpp"

namespace epem::eval {

/// Complete labeled data, features x samples. labels[j] indexes class_labels.
struct LabeledData {
    Eigen::MatrixXd X;
    std::vector<std::size_t> labels;
    std::vector<std::string> class_labels;

    Index features() const noexcept { return X.rows(); }
    Index samples() const noexcept { return X.cols(); }
    std::size_t class_count() const noexcept { return class_labels.size(); }
    std::vector<std::size_t> class_sizes() const;
};

/// Classes ordered by first appearance.
LabeledData make_labeled(const Eigen::MatrixXd& X, std::span<const std::string> labels);

LabeledData subset(const LabeledData& data, std::span<const std::size_t> samples);

/// Zero mean and unit (population) variance per feature; constant features are only centered.
LabeledData standardize(const LabeledData& data);

/// Draws counts[g] samples from N(mu.col(g), sigma) for every class.
LabeledData synthetic_gaussian(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& sigma,
                               std::span<const std::size_t> counts, std::uint64_t seed);

/// Per-class sample means and the pooled covariance W / N of complete data.
struct GroundTruth {
    Eigen::MatrixXd mu;
    Eigen::MatrixXd sigma;
};
GroundTruth complete_data_truth(const LabeledData& data);

// ---------------------------------------------------------------------------
// Missingness induction

struct MissingnessPlan {
    Index stages = 2;
    double rate = 0.2;     // target fraction of masked cells
    std::uint64_t seed = 1;
};

inline constexpr double kRateTolerance = 0.02;

struct InducedMissing {
    MonotoneDataset data;
    double achieved_rate = 0.0;
    /// Set when the target was positive but too small to mask a single cell.
    bool below_resolution = false;
};

/// Feature block widths as equal as possible, earlier blocks larger.
std::vector<Index> equal_block_widths(Index features, Index stages);

/// Stage counts n_1 >= ... >= n_k for one class of n samples: a linear ramp of dropped
/// samples sized to mask `target_cells`, rounded, then nudged one sample at a time
/// starting from the last stage.
std::vector<Index> ramp_stage_counts(Index n, std::span<const Index> widths, double target_cells);

/// Shuffles every class with the plan's seed and masks a staircase of the target rate.
InducedMissing induce_monotone_missing(const LabeledData& full, const MissingnessPlan& plan);

// ---------------------------------------------------------------------------
// Estimation and classification

enum class Method { Epem, MeanImpute };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct EstimationError {
    double r = 0.0;
    double mean_term = 0.0;
    double cov_term = 0.0;
};

/// ||mu - mu_hat||_F / (p G) + ||sigma - sigma_hat||_F / (p p).
EstimationError parameter_error(const MleParameters& est, const Eigen::MatrixXd& truth_mu,
                                const Eigen::MatrixXd& truth_sigma);

struct ImputedFit {
    MleParameters params;
    MonotoneDataset completed;
};

/// Fills missing cells with the class mean of the observed values, then fits the
/// complete-data estimates.
ImputedFit mean_impute_baseline(const MonotoneDataset& ds);

MleParameters fit_parameters(const MonotoneDataset& ds, Method method);
LdaModel fit_classifier(const MonotoneDataset& ds, Method method);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified assignment: each class is shuffled and dealt round-robin into folds.
std::vector<Fold> stratified_folds(const LabeledData& data, std::size_t folds, std::uint64_t seed);

struct CvResult {
    double error = 0.0;  // mean of the per-fold error rates
    std::vector<double> fold_errors;
    std::vector<Fold> folds;
};

/// Missingness is induced on the training split only (fold f uses plan.seed + f);
/// held-out samples are scored complete.
CvResult cross_validate(const LabeledData& full, const MissingnessPlan& plan, std::size_t folds,
                        std::uint64_t seed, Method method);

struct BenchStats {
    double median_seconds = 0.0;
    double min_seconds = 0.0;
    std::vector<double> seconds;
};

/// Wall time of epem_fit over `repetitions` runs on the calling thread.
BenchStats bench_fit(const MonotoneDataset& ds, int repetitions);

// ---------------------------------------------------------------------------
// Sweeps

struct ReportRow {
    std::string dataset;
    double rate = 0.0;
    Method method = Method::Epem;
    std::uint64_t seed = 0;
    double r = 0.0;
    double cv_error = 0.0;
    double fit_seconds = 0.0;
};

struct SweepConfig {
    std::vector<double> rates;
    std::vector<std::uint64_t> seeds;
    std::vector<Method> methods{Method::Epem, Method::MeanImpute};
    std::size_t folds = 5;
    Index stages = 2;
    unsigned jobs = 1;
};

/// Every (rate, seed, method) cell on already standardized data. Rows come out in
/// rate, seed, method order regardless of jobs.
std::vector<ReportRow> run_sweep(const std::string& dataset, const LabeledData& data, const SweepConfig& cfg);

void write_report(std::ostream& out, std::span<const ReportRow> rows);

}  // namespace epem::eval
