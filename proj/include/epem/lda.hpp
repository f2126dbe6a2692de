#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "epem/estimator.hpp"
#include "epem/monotone_data.hpp"

namespace epem {

/// Linear discriminant built on a shared covariance. Score of class g at x is
/// a_g' x + b_g with a_g = sigma^{-1} mu_g and b_g = -mu_g' sigma^{-1} mu_g / 2 + ln prior_g.
class LdaModel {
public:
    /// Throws NotPositiveDefinite if params.sigma is not positive definite.
    LdaModel(MleParameters params, Eigen::VectorXd priors);

    const MleParameters& params() const noexcept { return params_; }
    const Eigen::VectorXd& priors() const noexcept { return priors_; }
    /// p x G, column g is a_g.
    const Eigen::MatrixXd& coefficients() const noexcept { return coeffs_; }
    const Eigen::VectorXd& offsets() const noexcept { return offsets_; }
    std::size_t class_count() const noexcept { return static_cast<std::size_t>(priors_.size()); }

    Eigen::VectorXd discriminant(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// Index of the largest score; ties go to the smallest index.
    std::size_t predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// Predictions for every column of xs.
    std::vector<std::size_t> predict_all(const Eigen::MatrixXd& xs) const;

private:
    MleParameters params_;
    Eigen::VectorXd priors_;
    Eigen::MatrixXd coeffs_;
    Eigen::VectorXd offsets_;
};

/// Class proportions n_1^(g) / sum_h n_1^(h).
Eigen::VectorXd class_priors(const MonotoneDataset& ds);

LdaModel fit_lda(const MonotoneDataset& ds);

/// Index of the largest entry, smallest index on ties.
std::size_t argmax_first(const Eigen::Ref<const Eigen::VectorXd>& scores);

}  // namespace epem
