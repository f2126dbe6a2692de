// Command line front end: fit, predict, simulate, evaluate, bench.
//
// Exit codes
//   0 success          4 singular scatter / insufficient samples
//   1 usage            5 incomplete observation
//   2 parse            6 missing rate unreachable
//   3 non-monotone     7 covariance not positive definite
//                      8 any other error

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epem/csv_io.hpp"
#include "epem/errors.hpp"
#include "epem/estimator.hpp"
#include "epem/evaluation.hpp"
#include "epem/lda.hpp"
#include "epem/monotone_data.hpp"

namespace {

using namespace epem;

enum Exit : int {
    kOk = 0,
    kUsage = 1,
    kParse = 2,
    kNonMonotone = 3,
    kEstimation = 4,
    kIncomplete = 5,
    kRate = 6,
    kNotPd = 7,
    kOther = 8,
};

class UsageError : public Error {
public:
    using Error::Error;
};

struct Options {
    std::string input;
    std::string output;
    std::string model;
    Index k = 2;
    double rate = 0.2;
    std::vector<double> rates;
    std::size_t folds = 5;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> methods;
    int reps = 5;
    unsigned jobs = 1;
};

// Writes to --output when given, otherwise to stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw Error("cannot open " + path + " for writing");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }
    bool to_file() const { return file_ != nullptr; }

private:
    std::unique_ptr<std::ofstream> file_;
};

eval::LabeledData load_complete(const std::string& path) {
    const io::LabeledTable table = io::read_table(std::filesystem::path(path));
    return eval::make_labeled(io::complete_values(table), table.labels);
}

std::string dataset_name(const std::string& path) { return std::filesystem::path(path).stem().string(); }

int cmd_fit(const Options& opt) {
    const io::LabeledTable table = io::read_table(std::filesystem::path(opt.input));
    const MonotoneDataset ds = [&] {
        try {
            return detect_pattern(table.data, table.labels);
        } catch (const NonMonotonePattern& e) {
            // Samples are CSV rows; name the row and the first missing feature column.
            const std::string feature = e.feature() < table.feature_names.size()
                                            ? table.feature_names[e.feature()]
                                            : std::to_string(e.feature());
            const std::string what = e.feature() == 0 && e.column() < table.labels.size() &&
                                             !table.data.observed.col(static_cast<Index>(e.column())).any()
                                         ? "has no observed feature values"
                                         : "is missing column '" + feature + "' but observes a later column";
            throw NonMonotonePattern(e.column(), e.feature(),
                                     "data row " + std::to_string(e.column() + 1) + " " + what);
        }
    }();
    const MleParameters params = epem_fit(ds);
    const Eigen::VectorXd priors = class_priors(ds);
    {
        std::ofstream out(opt.output, std::ios::binary);
        if (!out) throw Error("cannot open " + opt.output + " for writing");
        io::write_model(out, params, priors);
    }
    std::string loglik = "undefined";
    try {
        loglik = io::format_double(log_likelihood(ds, params.mu, params.sigma));
    } catch (const NotPositiveDefinite& e) {
        // Degenerate data still yields a model; prediction is where it fails.
        std::cerr << "warning: " << e.what() << '\n';
    }
    std::cout << "log_likelihood," << loglik << '\n';
    std::cout << "stage,width";
    for (const auto& c : ds.classes()) std::cout << ",n_" << c.label();
    std::cout << '\n';
    for (Index i = 1; i <= ds.spec().stages(); ++i) {
        std::cout << i << ',' << ds.spec().width(i);
        for (const auto& c : ds.classes()) std::cout << ',' << c.count(i);
        std::cout << '\n';
    }
    return kOk;
}

int cmd_predict(const Options& opt) {
    const io::ModelFile model = io::read_model(std::filesystem::path(opt.model));
    const io::LabeledTable table = io::read_table(std::filesystem::path(opt.input), false);
    if (table.data.features() != model.params.mu.rows()) {
        throw ParseError("test file has " + std::to_string(table.data.features()) + " feature columns, model has " +
                         std::to_string(model.params.mu.rows()));
    }
    const Eigen::MatrixXd X = io::complete_values(table);
    const LdaModel lda(model.params, model.priors);
    Sink sink(opt.output);
    std::ostream& out = sink.stream();
    out << "row,predicted";
    for (const auto& label : model.params.class_labels) out << ",score_" << label;
    out << '\n';
    for (Index j = 0; j < X.cols(); ++j) {
        const Eigen::VectorXd s = lda.discriminant(X.col(j));
        out << (j + 1) << ',' << model.params.class_labels[argmax_first(s)];
        for (Index g = 0; g < s.size(); ++g) out << ',' << io::format_double(s(g));
        out << '\n';
    }
    return kOk;
}

int cmd_simulate(const Options& opt) {
    io::LabeledTable table = io::read_table(std::filesystem::path(opt.input));
    const eval::LabeledData full = eval::make_labeled(io::complete_values(table), table.labels);
    const auto induced = eval::induce_monotone_missing(full, eval::MissingnessPlan{opt.k, opt.rate, opt.seed});

    // Rows keep their input order; only the mask changes.
    table.data.observed.setConstant(true);
    for (const auto& c : induced.data.classes()) {
        for (Index j = 0; j < c.samples(); ++j) {
            const auto row = static_cast<Index>(c.source_columns()[static_cast<std::size_t>(j)]);
            const Index seen = induced.data.spec().leading(c.last_stage(j));
            table.data.observed.col(row).tail(table.data.features() - seen).setConstant(false);
        }
    }
    Sink sink(opt.output);
    io::write_table(sink.stream(), table);
    std::ostream& note = sink.to_file() ? std::cout : std::cerr;
    note << "achieved_rate," << io::format_double(induced.achieved_rate) << '\n';
    if (induced.below_resolution) {
        std::cerr << "warning: target rate " << opt.rate << " is below one masked cell; nothing was masked\n";
    }
    return kOk;
}

std::vector<eval::Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<eval::Method> out;
    for (const auto& n : names) {
        try {
            out.push_back(eval::parse_method(n));
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    }
    return out;
}

int cmd_evaluate(const Options& opt) {
    if (opt.rates.empty()) throw UsageError("--rates needs at least one value");
    const eval::LabeledData data = eval::standardize(load_complete(opt.input));
    eval::SweepConfig cfg;
    cfg.rates = opt.rates;
    cfg.seeds = opt.seeds.empty() ? std::vector<std::uint64_t>{opt.seed} : opt.seeds;
    if (!opt.methods.empty()) cfg.methods = parse_methods(opt.methods);
    cfg.folds = opt.folds;
    cfg.stages = opt.k;
    cfg.jobs = opt.jobs;
    const auto rows = eval::run_sweep(dataset_name(opt.input), data, cfg);
    Sink sink(opt.output);
    eval::write_report(sink.stream(), rows);
    return kOk;
}

int cmd_bench(const Options& opt) {
    if (opt.rates.empty()) throw UsageError("--rates needs at least one value");
    const eval::LabeledData data = load_complete(opt.input);
    Sink sink(opt.output);
    std::ostream& out = sink.stream();
    out << "rate,achieved_rate,reps,median_seconds,min_seconds\n";
    for (double rate : opt.rates) {
        const auto induced = eval::induce_monotone_missing(data, eval::MissingnessPlan{opt.k, rate, opt.seed});
        const auto stats = eval::bench_fit(induced.data, opt.reps);
        out << io::format_double(rate) << ',' << io::format_double(induced.achieved_rate) << ',' << opt.reps << ','
            << io::format_double(stats.median_seconds) << ',' << io::format_double(stats.min_seconds) << '\n';
    }
    return kOk;
}

int report(const char* kind, const std::exception& e, int code) {
    std::cerr << "error (" << kind << "): " << e.what() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-form Gaussian estimates and LDA from monotone missing data"};
    app.require_subcommand(1);
    Options opt;

    auto* fit = app.add_subcommand("fit", "estimate class means and shared covariance from a CSV");
    fit->add_option("--input", opt.input, "training CSV with a class column")->required()->check(CLI::ExistingFile);
    fit->add_option("--output", opt.output, "model file to write")->required();

    auto* predict = app.add_subcommand("predict", "score complete rows with a fitted model");
    predict->add_option("--model", opt.model, "model file")->required()->check(CLI::ExistingFile);
    predict->add_option("--input", opt.input, "CSV of complete rows; a class column is ignored")
        ->required()
        ->check(CLI::ExistingFile);
    predict->add_option("--output", opt.output, "predictions CSV (default stdout)");

    auto* simulate = app.add_subcommand("simulate", "mask a complete CSV with a monotone staircase");
    simulate->add_option("--input", opt.input, "complete CSV")->required()->check(CLI::ExistingFile);
    simulate->add_option("--output", opt.output, "masked CSV (default stdout)");
    simulate->add_option("--k", opt.k, "number of feature stages")->check(CLI::PositiveNumber);
    simulate->add_option("--rate", opt.rate, "target fraction of masked cells")->check(CLI::Range(0.0, 0.999999));
    simulate->add_option("--seed", opt.seed, "seed for the row shuffle");

    auto* evaluate = app.add_subcommand("evaluate", "parameter error and cross-validated error sweep");
    evaluate->add_option("--input", opt.input, "complete CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--output", opt.output, "report CSV (default stdout)");
    evaluate->add_option("--rates", opt.rates, "comma separated missing rates")
        ->required()
        ->delimiter(',')
        ->check(CLI::Range(0.0, 0.999999));
    evaluate->add_option("--folds", opt.folds, "cross-validation folds")->check(CLI::Range(2, 1000));
    evaluate->add_option("--seeds", opt.seeds, "comma separated seeds")->delimiter(',');
    evaluate->add_option("--seed", opt.seed, "single seed when --seeds is absent");
    evaluate->add_option("--method", opt.methods, "epem, mean-impute, or both comma separated")->delimiter(',');
    evaluate->add_option("--k", opt.k, "number of feature stages")->check(CLI::PositiveNumber);
    evaluate->add_option("--jobs", opt.jobs, "worker threads across sweep cells")->check(CLI::Range(1u, 256u));

    auto* bench = app.add_subcommand("bench", "single-threaded fit timings per missing rate");
    bench->add_option("--input", opt.input, "complete CSV")->required()->check(CLI::ExistingFile);
    bench->add_option("--output", opt.output, "timing CSV (default stdout)");
    bench->add_option("--rates", opt.rates, "comma separated missing rates")
        ->required()
        ->delimiter(',')
        ->check(CLI::Range(0.0, 0.999999));
    bench->add_option("--reps", opt.reps, "repetitions per rate (at least 3)")->check(CLI::Range(3, 100000));
    bench->add_option("--k", opt.k, "number of feature stages")->check(CLI::PositiveNumber);
    bench->add_option("--seed", opt.seed, "seed for the row shuffle");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*fit) return cmd_fit(opt);
        if (*predict) return cmd_predict(opt);
        if (*simulate) return cmd_simulate(opt);
        if (*evaluate) return cmd_evaluate(opt);
        if (*bench) return cmd_bench(opt);
    } catch (const UsageError& e) {
        return report("usage", e, kUsage);
    } catch (const ParseError& e) {
        return report("parse", e, kParse);
    } catch (const NonMonotonePattern& e) {
        return report("non-monotone pattern", e, kNonMonotone);
    } catch (const SingularScatter& e) {
        return report("singular scatter", e, kEstimation);
    } catch (const InsufficientSamples& e) {
        return report("insufficient samples", e, kEstimation);
    } catch (const IncompleteObservation& e) {
        return report("incomplete observation", e, kIncomplete);
    } catch (const RateUnreachable& e) {
        return report("rate unreachable", e, kRate);
    } catch (const NotPositiveDefinite& e) {
        return report("not positive definite", e, kNotPd);
    } catch (const std::exception& e) {
        return report("error", e, kOther);
    }
    return kUsage;
}
