#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "epem/errors.hpp"
#include "epem/evaluation.hpp"
#include "test_support.hpp"

using namespace epem;
using namespace epem::eval;

namespace {

LabeledData one_class(Index p, std::size_t n, std::uint64_t seed) {
    const std::vector<std::size_t> counts{n};
    return synthetic_gaussian(Eigen::MatrixXd::Zero(p, 1), Eigen::MatrixXd::Identity(p, p), counts, seed);
}

LabeledData separated_pair(std::size_t n, double gap, std::uint64_t seed) {
    Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(2, 2);
    mu(0, 0) = gap;
    mu(0, 1) = -gap;
    const std::vector<std::size_t> counts{n, n};
    return synthetic_gaussian(mu, Eigen::MatrixXd::Identity(2, 2), counts, seed);
}

}  // namespace

TEST(Missingness, QuarterRateBlockExample) {
    const auto full = one_class(4, 10, 1);
    const auto induced = induce_monotone_missing(full, MissingnessPlan{2, 0.25, 7});
    EXPECT_EQ(induced.data.spec().widths(), (std::vector<Index>{2, 2}));
    EXPECT_EQ(induced.data.at(0).counts(), (std::vector<Index>{10, 5}));
    EXPECT_DOUBLE_EQ(induced.achieved_rate, 0.25);
    EXPECT_FALSE(induced.below_resolution);
}

TEST(Missingness, RateBelowOneCell) {
    const auto full = one_class(4, 10, 1);
    const auto induced = induce_monotone_missing(full, MissingnessPlan{2, 0.01, 7});
    EXPECT_EQ(induced.data.at(0).counts(), (std::vector<Index>{10, 10}));
    EXPECT_EQ(induced.achieved_rate, 0.0);
    EXPECT_TRUE(induced.below_resolution);
}

TEST(Missingness, SeedChangesOrderNotCounts) {
    const auto full = one_class(4, 10, 1);
    const auto a = induce_monotone_missing(full, MissingnessPlan{2, 0.25, 1});
    const auto b = induce_monotone_missing(full, MissingnessPlan{2, 0.25, 2});
    const auto a2 = induce_monotone_missing(full, MissingnessPlan{2, 0.25, 1});
    EXPECT_EQ(a.data.at(0).counts(), b.data.at(0).counts());
    EXPECT_NE(a.data.at(0).source_columns(), b.data.at(0).source_columns());
    EXPECT_EQ(a.data.at(0).values(), a2.data.at(0).values());
}

TEST(Missingness, UnreachableRate) {
    const auto full = one_class(4, 10, 1);
    // At most 9 of 10 samples can lose the last 2 of 4 features: 18 / 40 = 0.45.
    EXPECT_THROW(induce_monotone_missing(full, MissingnessPlan{2, 0.5, 1}), RateUnreachable);
    EXPECT_NO_THROW(induce_monotone_missing(full, MissingnessPlan{2, 0.45, 1}));
    EXPECT_THROW(induce_monotone_missing(full, MissingnessPlan{2, -0.1, 1}), RateUnreachable);
}

TEST(Missingness, PropertyAchievedRateWithinTolerance) {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        Rng rng(seed);
        const Index p = 3 + static_cast<Index>(uniform_index(rng, 8));
        const Index k = 2 + static_cast<Index>(uniform_index(rng, 2));
        const std::vector<std::size_t> counts{30 + uniform_index(rng, 40), 30 + uniform_index(rng, 40)};
        const auto full = synthetic_gaussian(Eigen::MatrixXd::Zero(p, 2), Eigen::MatrixXd::Identity(p, p), counts, seed);
        for (double rate : {0.1, 0.2, 0.3}) {
            const auto induced = induce_monotone_missing(full, MissingnessPlan{k, rate, seed});
            ASSERT_LE(std::abs(induced.achieved_rate - rate), kRateTolerance) << "seed " << seed;
            ASSERT_EQ(induced.achieved_rate, static_cast<double>(induced.data.missing_cells()) /
                                                 static_cast<double>(induced.data.total_cells()));
            for (const auto& c : induced.data.classes()) {
                ASSERT_TRUE(std::is_sorted(c.counts().rbegin(), c.counts().rend()));
                ASSERT_GE(c.counts().back(), 1);
            }
        }
    }
}

TEST(ParameterError, ExactEstimateIsZero) {
    MleParameters est;
    est.mu = Eigen::MatrixXd::Ones(2, 2);
    est.sigma = Eigen::MatrixXd::Identity(2, 2);
    EXPECT_EQ(parameter_error(est, est.mu, est.sigma).r, 0.0);
}

TEST(ParameterError, SingleMeanEntryOffByOne) {
    MleParameters est;
    est.mu = Eigen::MatrixXd::Zero(2, 2);
    est.sigma = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd truth = est.mu;
    truth(1, 0) = 1.0;
    const auto e = parameter_error(est, truth, est.sigma);
    EXPECT_DOUBLE_EQ(e.r, 0.25);
    EXPECT_DOUBLE_EQ(e.cov_term, 0.0);
}

TEST(ParameterError, RelabelingClassesKeepsError) {
    Rng rng(3);
    MleParameters est;
    est.mu = fixtures::random_means(3, 3, rng);
    est.sigma = fixtures::random_spd(3, rng);
    const Eigen::MatrixXd truth_mu = fixtures::random_means(3, 3, rng);
    const Eigen::MatrixXd truth_sigma = fixtures::random_spd(3, rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
    perm.indices() << 2, 0, 1;
    MleParameters swapped = est;
    swapped.mu = est.mu * perm;
    EXPECT_NEAR(parameter_error(est, truth_mu, truth_sigma).r,
                parameter_error(swapped, truth_mu * perm, truth_sigma).r, 1e-15);
}

TEST(CrossValidation, SeparatedClassesRarelyErr) {
    const auto data = separated_pair(100, 4.0, 5);
    const auto cv = cross_validate(data, MissingnessPlan{2, 0.0, 1}, 5, 1, Method::Epem);
    EXPECT_LT(cv.error, 0.02);
    EXPECT_EQ(cv.fold_errors.size(), 5u);
}

TEST(CrossValidation, PermutedLabelsAreNearChance) {
    auto data = separated_pair(100, 4.0, 6);
    Rng rng(6);
    shuffle(data.labels, rng);
    const auto cv = cross_validate(data, MissingnessPlan{2, 0.0, 1}, 5, 1, Method::Epem);
    EXPECT_NEAR(cv.error, 0.5, 0.1);
}

TEST(CrossValidation, FoldsPartitionSamples) {
    const auto data = separated_pair(23, 1.0, 7);
    const auto folds = stratified_folds(data, 5, 3);
    std::vector<int> seen(static_cast<std::size_t>(data.samples()), 0);
    for (const auto& f : folds) {
        ASSERT_EQ(f.train.size() + f.test.size(), static_cast<std::size_t>(data.samples()));
        for (auto j : f.test) ++seen[j];
        for (auto j : f.test) ASSERT_EQ(std::count(f.train.begin(), f.train.end(), j), 0);
    }
    for (int s : seen) EXPECT_EQ(s, 1);
    EXPECT_THROW(stratified_folds(data, 1, 3), FoldTooSmall);
    EXPECT_THROW(stratified_folds(data, 30, 3), FoldTooSmall);
}

TEST(CrossValidation, HeldOutLabelsDoNotLeak) {
    // Flipping the labels of the test fold must not change what the fold's model predicts.
    const auto data = separated_pair(50, 1.0, 8);
    const auto folds = stratified_folds(data, 5, 2);
    const auto& fold = folds[0];
    auto altered = data;
    for (auto j : fold.test) altered.X.col(static_cast<Index>(j)).setConstant(1e6);
    const auto a = induce_monotone_missing(subset(data, fold.train), MissingnessPlan{2, 0.2, 1});
    const auto b = induce_monotone_missing(subset(altered, fold.train), MissingnessPlan{2, 0.2, 1});
    const auto ma = fit_classifier(a.data, Method::Epem);
    const auto mb = fit_classifier(b.data, Method::Epem);
    EXPECT_EQ(ma.coefficients(), mb.coefficients());
    EXPECT_EQ(ma.offsets(), mb.offsets());
}

TEST(Baseline, NoMissingCellsMatchesOneStageFit) {
    Rng rng(9);
    const auto ds = fixtures::gaussian_staircase({3}, {{6}, {8}}, fixtures::random_means(3, 2, rng),
                                                fixtures::random_spd(3, rng), rng);
    const auto imputed = mean_impute_baseline(ds);
    const auto fit = epem_fit(ds);
    EXPECT_EQ(imputed.params.mu, fit.mu);
    EXPECT_EQ(imputed.params.sigma, fit.sigma);
}

TEST(Baseline, SingleMissingCellTakesOtherValue) {
    Eigen::MatrixXd a(2, 2);
    a << 1, 4, 7, 0;
    Eigen::MatrixXd b(2, 3);
    b << 0, 1, 2, 3, 4, 5;
    std::vector<ClassSamples> classes;
    classes.emplace_back("y", std::vector<Index>{2, 1}, a);
    classes.emplace_back("z", std::vector<Index>{3, 3}, b);
    const MonotoneDataset ds(FeatureBlockSpec({1, 1}), std::move(classes));
    const auto imputed = mean_impute_baseline(ds);
    EXPECT_EQ(imputed.completed.at(0).values()(1, 1), 7.0);
    EXPECT_EQ(imputed.completed.at(1).values(), b);
}

TEST(Baseline, EpemUsuallyBeatsMeanImputation) {
    Rng rng(10);
    const Index p = 6;
    Eigen::MatrixXd sigma = fixtures::random_spd(p, rng);
    // Strong correlation makes stage-wise regression informative.
    sigma += 2.0 * Eigen::MatrixXd::Ones(p, p);
    const Eigen::MatrixXd mu = fixtures::random_means(p, 2, rng);
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const std::vector<std::size_t> counts{60, 60};
        const auto full = synthetic_gaussian(mu, sigma, counts, seed);
        const auto truth = complete_data_truth(full);
        const auto induced = induce_monotone_missing(full, MissingnessPlan{2, 0.3, seed});
        const double r_epem = parameter_error(fit_parameters(induced.data, Method::Epem), truth.mu, truth.sigma).r;
        const double r_base =
            parameter_error(fit_parameters(induced.data, Method::MeanImpute), truth.mu, truth.sigma).r;
        wins += r_epem < r_base;
    }
    EXPECT_GE(wins, 8);
}

TEST(Bench, OutputsAreDeterministicAndStagesCost) {
    Rng rng(11);
    const Index p = 30;
    const std::vector<std::size_t> counts{200, 200, 200};
    const auto full = synthetic_gaussian(fixtures::random_means(p, 3, rng), fixtures::random_spd(p, rng), counts, 1);
    const auto k3 = induce_monotone_missing(full, MissingnessPlan{3, 0.2, 1});
    const auto k1 = induce_monotone_missing(full, MissingnessPlan{1, 0.0, 1});
    const auto a = epem_fit(k3.data);
    const auto b = epem_fit(k3.data);
    EXPECT_EQ(a.mu, b.mu);
    EXPECT_EQ(a.sigma, b.sigma);
    const auto t3 = bench_fit(k3.data, 5);
    const auto t1 = bench_fit(k1.data, 5);
    EXPECT_EQ(t3.seconds.size(), 5u);
    EXPECT_GT(t3.median_seconds, 0.0);
    EXPECT_LT(t1.min_seconds, t3.median_seconds);
    EXPECT_THROW(bench_fit(k1.data, 2), Error);
}

TEST(Sweep, RowOrderIndependentOfJobs) {
    const auto data = standardize(separated_pair(40, 1.0, 12));
    SweepConfig cfg;
    cfg.rates = {0.1, 0.2};
    cfg.seeds = {1, 2};
    cfg.folds = 3;
    const auto serial = run_sweep("toy", data, cfg);
    cfg.jobs = 4;
    const auto parallel = run_sweep("toy", data, cfg);
    ASSERT_EQ(serial.size(), 8u);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        EXPECT_EQ(serial[i].rate, parallel[i].rate);
        EXPECT_EQ(serial[i].seed, parallel[i].seed);
        EXPECT_EQ(serial[i].method, parallel[i].method);
        EXPECT_EQ(serial[i].r, parallel[i].r);
        EXPECT_EQ(serial[i].cv_error, parallel[i].cv_error);
    }
    std::ostringstream out;
    write_report(out, serial);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "dataset,rate,method,seed,r,cv_error,fit_seconds");
}
