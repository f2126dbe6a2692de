#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "epem/errors.hpp"
#include "epem/estimator.hpp"
#include "epem/monotone_data.hpp"

// Brute-force checks for the closed-form estimator: direct numeric maximization of the
// observed-data likelihood and finite-difference gradients. Meant for tiny problems.
namespace epem::oracle {

struct OracleConfig {
    int max_iters = 5000;
    /// Stop when no coordinate moves by more than this (relative to max(1, |x|)).
    double step_tolerance = 1e-9;
    /// Relative step for central differences.
    double fd_epsilon = 1e-5;
    /// Required max-norm of the ascent gradient at an accepted point.
    double gradient_tolerance = 1e-6;
    std::array<std::uint64_t, 3> seeds{1, 2, 3};
};

struct OracleResult {
    MleParameters params;
    double objective = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    std::size_t restart = 0;
};

class DidNotConverge : public Error {
public:
    DidNotConverge(OracleResult best, const std::string& what) : Error(what), best_(std::move(best)) {}
    const OracleResult& best() const noexcept { return best_; }

private:
    OracleResult best_;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Central differences with per-coordinate step fd_epsilon * max(1, |x_j|).
Eigen::VectorXd finite_diff_gradient(const Objective& objective, const Eigen::VectorXd& point,
                                     double fd_epsilon = 1e-5);

/// Observed-data log-likelihood evaluated sample by sample: each sample contributes the
/// joint Gaussian log-density of its observed leading features.
double direct_log_likelihood(const MonotoneDataset& ds, const Eigen::MatrixXd& mu, const Eigen::MatrixXd& sigma);

/// Finite-difference gradient of log_likelihood with respect to the entries of mu
/// (column-major) followed by the lower triangle of sigma, perturbed symmetrically.
/// The step is fd_epsilon scaled down by the smallest eigenvalue of sigma when it is below 1.
Eigen::VectorXd likelihood_gradient(const MonotoneDataset& ds, const Eigen::MatrixXd& mu,
                                    const Eigen::MatrixXd& sigma, double fd_epsilon = 1e-5);

/// Quasi-Newton maximization of direct_log_likelihood from seeded random starts. The
/// covariance is parameterized by a lower triangular factor with log diagonal.
OracleResult numeric_mle(const MonotoneDataset& ds, const OracleConfig& cfg = {});

}  // namespace epem::oracle
