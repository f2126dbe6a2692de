#include "epem/lda.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "epem/errors.hpp"

namespace epem {

namespace {
// Relative eigenvalue floor below which the covariance counts as singular.
constexpr double kSingularCovariance = 1e-12;
}  // namespace

LdaModel::LdaModel(MleParameters params, Eigen::VectorXd priors)
    : params_(std::move(params)), priors_(std::move(priors)) {
    const Index p = params_.sigma.rows();
    const Index G = params_.mu.cols();
    if (params_.sigma.cols() != p || params_.mu.rows() != p) {
        throw DimensionMismatch("model parameters have inconsistent dimensions");
    }
    if (priors_.size() != G) {
        throw DimensionMismatch("expected " + std::to_string(G) + " priors, got " + std::to_string(priors_.size()));
    }
    if ((priors_.array() <= 0.0).any() || std::abs(priors_.sum() - 1.0) > 1e-12) {
        throw Error("priors must be positive and sum to one");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(params_.sigma, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& spectrum = eig.eigenvalues();
    Eigen::LLT<Eigen::MatrixXd> llt(params_.sigma);
    if (llt.info() != Eigen::Success || !(spectrum.minCoeff() > kSingularCovariance * spectrum.maxCoeff())) {
        std::ostringstream msg;
        msg << "covariance is not positive definite (eigenvalues from " << spectrum.minCoeff() << " to "
            << spectrum.maxCoeff() << "); LDA coefficients are undefined";
        throw NotPositiveDefinite(msg.str());
    }
    coeffs_ = llt.solve(params_.mu);
    offsets_.resize(G);
    for (Index g = 0; g < G; ++g) {
        offsets_(g) = -0.5 * params_.mu.col(g).dot(coeffs_.col(g)) + std::log(priors_(g));
    }
}

Eigen::VectorXd LdaModel::discriminant(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != coeffs_.rows()) {
        throw DimensionMismatch("observation has " + std::to_string(x.size()) + " features, model expects " +
                                std::to_string(coeffs_.rows()));
    }
    if (!x.allFinite()) {
        throw IncompleteObservation(0, "observation has missing or non-finite entries");
    }
    return coeffs_.transpose() * x + offsets_;
}

std::size_t LdaModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return argmax_first(discriminant(x));
}

std::vector<std::size_t> LdaModel::predict_all(const Eigen::MatrixXd& xs) const {
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(xs.cols()));
    for (Index j = 0; j < xs.cols(); ++j) {
        try {
            out.push_back(predict(xs.col(j)));
        } catch (const IncompleteObservation&) {
            throw IncompleteObservation(static_cast<std::size_t>(j),
                                        "observation " + std::to_string(j) + " has missing entries");
        }
    }
    return out;
}

Eigen::VectorXd class_priors(const MonotoneDataset& ds) {
    Eigen::VectorXd priors(static_cast<Index>(ds.class_count()));
    const double total = static_cast<double>(ds.total_count(1));
    for (std::size_t g = 0; g < ds.class_count(); ++g) {
        priors(static_cast<Index>(g)) = static_cast<double>(ds.at(g).count(1)) / total;
    }
    return priors;
}

LdaModel fit_lda(const MonotoneDataset& ds) {
    return LdaModel(epem_fit(ds), class_priors(ds));
}

std::size_t argmax_first(const Eigen::Ref<const Eigen::VectorXd>& scores) {
    std::size_t best = 0;
    for (Index g = 1; g < scores.size(); ++g) {
        if (scores(g) > scores(static_cast<Index>(best))) best = static_cast<std::size_t>(g);
    }
    return best;
}

}  // namespace epem
