#include "epem/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <ostream>
#include <sstream>
#include <thread>

#include "epem/csv_io.hpp"
#include "epem/errors.hpp"
#include "epem/random.hpp"

namespace epem::eval {

std::vector<std::size_t> LabeledData::class_sizes() const {
    std::vector<std::size_t> sizes(class_labels.size(), 0);
    for (auto y : labels) ++sizes[y];
    return sizes;
}

LabeledData make_labeled(const Eigen::MatrixXd& X, std::span<const std::string> labels) {
    if (static_cast<Index>(labels.size()) != X.cols()) {
        throw DimensionMismatch("expected one label per sample");
    }
    LabeledData out;
    out.X = X;
    out.labels.reserve(labels.size());
    for (const auto& l : labels) {
        auto it = std::find(out.class_labels.begin(), out.class_labels.end(), l);
        if (it == out.class_labels.end()) {
            out.class_labels.push_back(l);
            it = out.class_labels.end() - 1;
        }
        out.labels.push_back(static_cast<std::size_t>(it - out.class_labels.begin()));
    }
    return out;
}

LabeledData subset(const LabeledData& data, std::span<const std::size_t> samples) {
    LabeledData out;
    out.class_labels = data.class_labels;
    out.X.resize(data.features(), static_cast<Index>(samples.size()));
    out.labels.reserve(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j) {
        out.X.col(static_cast<Index>(j)) = data.X.col(static_cast<Index>(samples[j]));
        out.labels.push_back(data.labels[samples[j]]);
    }
    return out;
}

LabeledData standardize(const LabeledData& data) {
    LabeledData out = data;
    const Eigen::VectorXd mean = data.X.rowwise().mean();
    out.X.colwise() -= mean;
    for (Index f = 0; f < out.features(); ++f) {
        const double sd = std::sqrt(out.X.row(f).squaredNorm() / static_cast<double>(out.samples()));
        if (sd > 0.0) out.X.row(f) /= sd;
    }
    return out;
}

LabeledData synthetic_gaussian(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& sigma,
                               std::span<const std::size_t> counts, std::uint64_t seed) {
    const Index p = mu.rows();
    if (sigma.rows() != p || sigma.cols() != p || static_cast<Index>(counts.size()) != mu.cols()) {
        throw DimensionMismatch("synthetic generator parameters have inconsistent dimensions");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("generator covariance is not positive definite");
    }
    const Eigen::MatrixXd L = llt.matrixL();
    std::size_t total = 0;
    for (auto c : counts) total += c;

    Rng rng(seed);
    LabeledData out;
    out.X.resize(p, static_cast<Index>(total));
    Index col = 0;
    for (std::size_t g = 0; g < counts.size(); ++g) {
        out.class_labels.push_back("c" + std::to_string(g + 1));
        for (std::size_t j = 0; j < counts[g]; ++j) {
            Eigen::VectorXd z(p);
            for (Index f = 0; f < p; ++f) z(f) = standard_normal(rng);
            out.X.col(col++) = mu.col(static_cast<Index>(g)) + L * z;
            out.labels.push_back(g);
        }
    }
    return out;
}

GroundTruth complete_data_truth(const LabeledData& data) {
    const Index p = data.features();
    const auto G = static_cast<Index>(data.class_count());
    GroundTruth truth{Eigen::MatrixXd::Zero(p, G), Eigen::MatrixXd::Zero(p, p)};
    const auto sizes = data.class_sizes();
    for (Index j = 0; j < data.samples(); ++j) {
        truth.mu.col(static_cast<Index>(data.labels[static_cast<std::size_t>(j)])) += data.X.col(j);
    }
    for (Index g = 0; g < G; ++g) {
        if (sizes[static_cast<std::size_t>(g)] == 0) {
            throw EmptyClass("class '" + data.class_labels[static_cast<std::size_t>(g)] + "' has no samples");
        }
        truth.mu.col(g) /= static_cast<double>(sizes[static_cast<std::size_t>(g)]);
    }
    for (Index j = 0; j < data.samples(); ++j) {
        const Eigen::VectorXd d = data.X.col(j) - truth.mu.col(static_cast<Index>(data.labels[static_cast<std::size_t>(j)]));
        truth.sigma += d * d.transpose();
    }
    truth.sigma /= static_cast<double>(data.samples());
    return truth;
}

std::vector<Index> equal_block_widths(Index features, Index stages) {
    if (stages < 1 || stages > features) {
        throw BadSplit("cannot split " + std::to_string(features) + " features into " + std::to_string(stages) +
                       " stages");
    }
    std::vector<Index> widths(static_cast<std::size_t>(stages), features / stages);
    for (Index i = 0; i < features % stages; ++i) ++widths[static_cast<std::size_t>(i)];
    return widths;
}

std::vector<Index> ramp_stage_counts(Index n, std::span<const Index> widths, double target_cells) {
    const auto k = static_cast<Index>(widths.size());
    std::vector<Index> dropped(static_cast<std::size_t>(k), 0);
    auto w = [&](Index stage) { return widths[static_cast<std::size_t>(stage - 1)]; };
    auto d = [&](Index stage) -> Index& { return dropped[static_cast<std::size_t>(stage - 1)]; };

    if (k > 1 && n > 1) {
        double weight = 0.0;
        for (Index i = 2; i <= k; ++i) weight += static_cast<double>(w(i) * (i - 1));
        const double step = target_cells / weight;
        for (Index i = 2; i <= k; ++i) {
            const auto ramp = static_cast<Index>(std::llround(step * static_cast<double>(i - 1)));
            d(i) = std::clamp(ramp, d(i - 1), n - 1);
        }
        double masked = 0.0;
        for (Index i = 2; i <= k; ++i) masked += static_cast<double>(w(i) * d(i));

        for (Index s = k; s >= 2; --s) {
            const Index upper = (s == k) ? n - 1 : d(s + 1);
            const Index lower = d(s - 1);
            const auto width = static_cast<double>(w(s));
            while (true) {
                const double err = std::abs(masked - target_cells);
                if (d(s) + 1 <= upper && std::abs(masked + width - target_cells) < err) {
                    ++d(s);
                    masked += width;
                } else if (d(s) - 1 >= lower && std::abs(masked - width - target_cells) < err) {
                    --d(s);
                    masked -= width;
                } else {
                    break;
                }
            }
        }
    }
    std::vector<Index> counts;
    counts.reserve(dropped.size());
    for (Index dd : dropped) counts.push_back(n - dd);
    return counts;
}

InducedMissing induce_monotone_missing(const LabeledData& full, const MissingnessPlan& plan) {
    const Index p = full.features();
    if (!(plan.rate >= 0.0) || !(plan.rate < 1.0)) {
        throw RateUnreachable("missing rate must lie in [0, 1)");
    }
    const auto widths = equal_block_widths(p, plan.stages);
    const auto sizes = full.class_sizes();
    const auto N = static_cast<double>(full.samples());

    double max_masked = 0.0;
    for (auto n : sizes) {
        if (n == 0) throw EmptyClass("a class has no samples");
        max_masked += static_cast<double>((static_cast<Index>(n) - 1) * (p - widths.front()));
    }
    const double max_rate = max_masked / (static_cast<double>(p) * N);
    if (plan.rate > max_rate + 1e-12) {
        std::ostringstream msg;
        msg << "missing rate " << plan.rate << " exceeds the largest reachable rate " << max_rate << " for "
            << plan.stages << " stages";
        throw RateUnreachable(msg.str());
    }

    Rng rng(plan.seed);
    std::vector<ClassSamples> classes;
    Index masked = 0;
    for (std::size_t g = 0; g < full.class_count(); ++g) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < full.labels.size(); ++j) {
            if (full.labels[j] == g) members.push_back(j);
        }
        shuffle(members, rng);
        const auto n = static_cast<Index>(members.size());
        const double target = plan.rate * static_cast<double>(p) * static_cast<double>(n);
        auto counts = ramp_stage_counts(n, widths, target);
        Eigen::MatrixXd values(p, n);
        for (Index j = 0; j < n; ++j) values.col(j) = full.X.col(static_cast<Index>(members[static_cast<std::size_t>(j)]));
        for (std::size_t i = 1; i < counts.size(); ++i) masked += widths[i] * (n - counts[i]);
        classes.emplace_back(full.class_labels[g], std::move(counts), std::move(values), std::move(members));
    }
    InducedMissing out{MonotoneDataset(FeatureBlockSpec(widths), std::move(classes)), 0.0, false};
    out.achieved_rate = static_cast<double>(masked) / (static_cast<double>(p) * N);
    out.below_resolution = plan.rate > 0.0 && masked == 0;
    if (!out.below_resolution && std::abs(out.achieved_rate - plan.rate) > kRateTolerance) {
        std::ostringstream msg;
        msg << "achieved missing rate " << out.achieved_rate << " is more than " << kRateTolerance
            << " away from the target " << plan.rate;
        throw RateUnreachable(msg.str());
    }
    return out;
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Epem: return "epem";
        case Method::MeanImpute: return "mean-impute";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "epem") return Method::Epem;
    if (name == "mean-impute") return Method::MeanImpute;
    throw Error("unknown method '" + name + "' (expected epem or mean-impute)");
}

EstimationError parameter_error(const MleParameters& est, const Eigen::MatrixXd& truth_mu,
                                const Eigen::MatrixXd& truth_sigma) {
    if (est.mu.rows() != truth_mu.rows() || est.mu.cols() != truth_mu.cols() ||
        est.sigma.rows() != truth_sigma.rows() || est.sigma.cols() != truth_sigma.cols()) {
        throw DimensionMismatch("estimate and ground truth differ in shape");
    }
    EstimationError e;
    e.mean_term = (truth_mu - est.mu).norm() / static_cast<double>(truth_mu.size());
    e.cov_term = (truth_sigma - est.sigma).norm() / static_cast<double>(truth_sigma.size());
    e.r = e.mean_term + e.cov_term;
    return e;
}

ImputedFit mean_impute_baseline(const MonotoneDataset& ds) {
    const FeatureBlockSpec& spec = ds.spec();
    std::vector<ClassSamples> filled;
    for (const auto& c : ds.classes()) {
        Eigen::MatrixXd values = c.values();
        for (Index i = 2; i <= spec.stages(); ++i) {
            const Index n_obs = c.count(i);
            const Index first = spec.leading(i - 1);
            const Index w = spec.width(i);
            if (n_obs == c.samples()) continue;
            if (n_obs == 0) {
                throw InsufficientSamples("class '" + c.label() + "' has no observed values for stage " +
                                          std::to_string(i) + " to impute from");
            }
            const Eigen::VectorXd mean = values.block(first, 0, w, n_obs).rowwise().mean();
            for (Index j = n_obs; j < c.samples(); ++j) values.block(first, j, w, 1) = mean;
        }
        filled.emplace_back(c.label(), std::vector<Index>{c.samples()}, std::move(values), c.source_columns());
    }
    MonotoneDataset completed(FeatureBlockSpec({spec.features()}), std::move(filled));
    MleParameters params = epem_fit(completed);
    return ImputedFit{std::move(params), std::move(completed)};
}

MleParameters fit_parameters(const MonotoneDataset& ds, Method method) {
    switch (method) {
        case Method::Epem: return epem_fit(ds);
        case Method::MeanImpute: return mean_impute_baseline(ds).params;
    }
    throw Error("unknown method");
}

LdaModel fit_classifier(const MonotoneDataset& ds, Method method) {
    return LdaModel(fit_parameters(ds, method), class_priors(ds));
}

std::vector<Fold> stratified_folds(const LabeledData& data, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) {
        throw FoldTooSmall("cross-validation needs at least 2 folds");
    }
    const auto sizes = data.class_sizes();
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        if (sizes[g] < folds) {
            throw FoldTooSmall("class '" + data.class_labels[g] + "' has " + std::to_string(sizes[g]) +
                               " samples, fewer than the " + std::to_string(folds) + " folds");
        }
    }
    Rng rng(seed);
    std::vector<std::size_t> fold_of(data.labels.size());
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < data.labels.size(); ++j) {
            if (data.labels[j] == g) members.push_back(j);
        }
        shuffle(members, rng);
        for (std::size_t t = 0; t < members.size(); ++t) fold_of[members[t]] = t % folds;
    }
    std::vector<Fold> out(folds);
    for (std::size_t j = 0; j < fold_of.size(); ++j) {
        for (std::size_t f = 0; f < folds; ++f) {
            (fold_of[j] == f ? out[f].test : out[f].train).push_back(j);
        }
    }
    return out;
}

CvResult cross_validate(const LabeledData& full, const MissingnessPlan& plan, std::size_t folds,
                        std::uint64_t seed, Method method) {
    CvResult out;
    out.folds = stratified_folds(full, folds, seed);
    double total = 0.0;
    for (std::size_t f = 0; f < out.folds.size(); ++f) {
        const auto& fold = out.folds[f];
        const LabeledData train = subset(full, fold.train);
        MissingnessPlan fold_plan = plan;
        fold_plan.seed = plan.seed + f;
        const InducedMissing induced = induce_monotone_missing(train, fold_plan);
        const LdaModel model = fit_classifier(induced.data, method);
        std::size_t wrong = 0;
        for (auto j : fold.test) {
            if (model.predict(full.X.col(static_cast<Index>(j))) != full.labels[j]) ++wrong;
        }
        const double err = static_cast<double>(wrong) / static_cast<double>(fold.test.size());
        out.fold_errors.push_back(err);
        total += err;
    }
    out.error = total / static_cast<double>(out.folds.size());
    return out;
}

BenchStats bench_fit(const MonotoneDataset& ds, int repetitions) {
    if (repetitions < 3) {
        throw Error("benchmarking needs at least 3 repetitions");
    }
    BenchStats out;
    for (int r = 0; r < repetitions; ++r) {
        const auto start = std::chrono::steady_clock::now();
        const MleParameters params = epem_fit(ds);
        const auto stop = std::chrono::steady_clock::now();
        // Keep the result observable so the fit cannot be elided.
        if (!std::isfinite(params.sigma(0, 0))) throw Error("non-finite estimate");
        out.seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
    auto sorted = out.seconds;
    std::sort(sorted.begin(), sorted.end());
    out.min_seconds = sorted.front();
    const std::size_t mid = sorted.size() / 2;
    out.median_seconds = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    return out;
}

std::vector<ReportRow> run_sweep(const std::string& dataset, const LabeledData& data, const SweepConfig& cfg) {
    struct Cell {
        double rate;
        std::uint64_t seed;
        Method method;
    };
    std::vector<Cell> cells;
    for (double rate : cfg.rates) {
        for (auto seed : cfg.seeds) {
            for (auto method : cfg.methods) cells.push_back({rate, seed, method});
        }
    }
    const GroundTruth truth = complete_data_truth(data);
    std::vector<ReportRow> rows(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());

    auto run_cell = [&](std::size_t idx) {
        try {
            const Cell& c = cells[idx];
            const MissingnessPlan plan{cfg.stages, c.rate, c.seed};
            const InducedMissing induced = induce_monotone_missing(data, plan);
            const auto start = std::chrono::steady_clock::now();
            const MleParameters params = fit_parameters(induced.data, c.method);
            const auto stop = std::chrono::steady_clock::now();
            ReportRow row;
            row.dataset = dataset;
            row.rate = c.rate;
            row.method = c.method;
            row.seed = c.seed;
            row.r = parameter_error(params, truth.mu, truth.sigma).r;
            row.cv_error = cross_validate(data, plan, cfg.folds, c.seed, c.method).error;
            row.fit_seconds = std::chrono::duration<double>(stop - start).count();
            rows[idx] = std::move(row);
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(cells.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return rows;
}

void write_report(std::ostream& out, std::span<const ReportRow> rows) {
    out << "dataset,rate,method,seed,r,cv_error,fit_seconds\n";
    for (const auto& row : rows) {
        out << row.dataset << ',' << io::format_double(row.rate) << ',' << method_name(row.method) << ','
            << row.seed << ',' << io::format_double(row.r) << ',' << io::format_double(row.cv_error) << ','
            << io::format_double(row.fit_seconds) << '\n';
    }
}

}  // namespace epem::eval
