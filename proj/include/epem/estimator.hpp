#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epem/monotone_data.hpp"
#include "epem/summary_stats.hpp"

namespace epem {

/// Regression of stage-i features on all earlier features, pooled over classes.
/// P is p_i x q, Q is the p_i x p_i residual covariance.
struct RegressionStep {
    Index stage = 0;
    Eigen::MatrixXd P;
    Eigen::MatrixXd Q;
};

/// Maximum likelihood estimates: column g of mu is the mean of class g, sigma is the
/// covariance shared by all classes.
struct MleParameters {
    Eigen::MatrixXd mu;
    Eigen::MatrixXd sigma;
    FeatureBlockSpec spec;
    std::vector<std::string> class_labels;
};

/// Relative threshold on the spectrum of [W_i]_11 below which it is treated as singular.
inline constexpr double kSingularityThreshold = 1e-10;

RegressionStep regression_step(const PooledScatter& scatter, Index stage, const FeatureBlockSpec& spec);

/// Closed-form multi-class estimates from monotone data. Every class needs at least
/// one sample observed through every stage.
MleParameters epem_fit(const MonotoneDataset& ds);

/// Two-class form of epem_fit, written in terms of the y / z classes directly.
/// Produces output identical to epem_fit on the dataset {y, z}.
MleParameters epem_fit_two_class(const ClassSamples& y, const ClassSamples& z,
                                 const FeatureBlockSpec& spec);

/// Observed-data log-likelihood accumulated stage by stage: the stage-1 marginal of
/// every sample plus, for each later stage, the conditional density of the new block
/// given the earlier ones.
double log_likelihood(const MonotoneDataset& ds, const Eigen::MatrixXd& mu, const Eigen::MatrixXd& sigma);

}  // namespace epem
