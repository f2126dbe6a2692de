#include "epem/estimator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "epem/errors.hpp"

namespace epem {

namespace {

void require_stage_samples(const MonotoneDataset& ds) {
    if (ds.total_count(1) < 2) {
        throw InsufficientSamples("at least two samples are needed at stage 1, got " +
                                  std::to_string(ds.total_count(1)));
    }
    for (Index i = 1; i <= ds.spec().stages(); ++i) {
        for (const auto& c : ds.classes()) {
            if (c.count(i) < 1) {
                throw InsufficientSamples("class '" + c.label() + "' has no samples observed through stage " +
                                          std::to_string(i));
            }
        }
    }
}

std::vector<BlockMoments> stage_moments(const MonotoneDataset& ds, Index stage) {
    std::vector<BlockMoments> out;
    out.reserve(ds.class_count());
    for (std::size_t g = 0; g < ds.class_count(); ++g) {
        out.push_back(block_moments(block_view(ds, g, stage)));
    }
    return out;
}

// Appends stage i to (mu, sigma), both already holding stages 1..i-1.
void append_stage(const RegressionStep& step, Index q, Index width, std::span<const BlockMoments> moments,
                  Eigen::MatrixXd& mu, Eigen::MatrixXd& sigma) {
    const Eigen::MatrixXd lower = step.P * sigma.topLeftCorner(q, q);
    Eigen::MatrixXd corner = step.Q + step.P * lower.transpose();
    symmetrize(corner);
    sigma.block(q, 0, width, q) = lower;
    sigma.block(0, q, q, width) = lower.transpose();
    sigma.block(q, q, width, width) = corner;
    for (std::size_t g = 0; g < moments.size(); ++g) {
        const auto& xbar = moments[g].mean;
        const Eigen::VectorXd shift = xbar.head(q) - mu.col(static_cast<Index>(g)).head(q);
        mu.col(static_cast<Index>(g)).segment(q, width) = xbar.segment(q, width) - step.P * shift;
    }
}

double log_two_pi() { return std::log(2.0 * std::numbers::pi); }

// Sum of N(0, cov) log-densities over the columns of residuals.
double gaussian_log_density_sum(const Eigen::MatrixXd& cov, const Eigen::MatrixXd& residuals,
                                const std::string& what) {
    if (residuals.cols() == 0) return 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite(what + " is not positive definite");
    }
    const Eigen::MatrixXd L = llt.matrixL();
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    if (!std::isfinite(log_det)) {
        throw NotPositiveDefinite(what + " is not positive definite");
    }
    const Eigen::MatrixXd whitened = llt.matrixL().solve(residuals);
    const double d = static_cast<double>(cov.rows());
    const double n = static_cast<double>(residuals.cols());
    return -0.5 * (n * (d * log_two_pi() + log_det) + whitened.squaredNorm());
}

}  // namespace

RegressionStep regression_step(const PooledScatter& scatter, Index stage, const FeatureBlockSpec& spec) {
    if (stage < 2 || stage > spec.stages()) {
        throw BadSplit("regression step needs a stage in 2.." + std::to_string(spec.stages()));
    }
    const Index q = spec.leading(stage - 1);
    if (scatter.W.rows() != spec.leading(stage)) {
        throw DimensionMismatch("scatter of order " + std::to_string(scatter.W.rows()) +
                                " does not match stage " + std::to_string(stage));
    }
    if (scatter.n_total < 1) {
        throw InsufficientSamples("stage " + std::to_string(stage) + " has no samples");
    }
    const QuadrantPartition part = partition_at(scatter.W, q);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(part.top_left, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& spectrum = eig.eigenvalues();
    const double largest = spectrum.maxCoeff();
    const double cutoff = kSingularityThreshold * largest;
    if (!(largest > 0.0) || spectrum.minCoeff() < cutoff) {
        const Index rank = largest > 0.0 ? (spectrum.array() >= cutoff).count() : 0;
        const auto extra = static_cast<std::size_t>(q - rank);
        std::ostringstream msg;
        msg << "stage " << stage << ": pooled scatter of the first " << q << " features has rank " << rank
            << " < " << q << " (" << scatter.n_total << " stage samples); at least " << extra
            << " more stage-" << stage << " samples are needed";
        throw SingularScatter(static_cast<std::size_t>(stage), extra, msg.str());
    }
    Eigen::LLT<Eigen::MatrixXd> llt(part.top_left);
    if (llt.info() != Eigen::Success) {
        throw SingularScatter(static_cast<std::size_t>(stage), 1,
                              "stage " + std::to_string(stage) + ": Cholesky factorization of the pooled scatter failed");
    }

    RegressionStep step;
    step.stage = stage;
    step.P = llt.solve(part.top_right).transpose();
    step.Q = (part.bottom_right - step.P * part.top_right) / static_cast<double>(scatter.n_total);
    symmetrize(step.Q);
    return step;
}

MleParameters epem_fit(const MonotoneDataset& ds) {
    require_stage_samples(ds);
    const FeatureBlockSpec& spec = ds.spec();
    const Index p = spec.features();
    const auto G = static_cast<Index>(ds.class_count());

    MleParameters out;
    out.spec = spec;
    out.class_labels = ds.labels();
    out.mu = Eigen::MatrixXd::Zero(p, G);
    out.sigma = Eigen::MatrixXd::Zero(p, p);

    const auto first = stage_moments(ds, 1);
    const PooledScatter w1 = pooled_scatter(first, 1);
    const Index p1 = spec.leading(1);
    out.sigma.topLeftCorner(p1, p1) = w1.W / static_cast<double>(w1.n_total);
    for (Index g = 0; g < G; ++g) {
        out.mu.col(g).head(p1) = first[static_cast<std::size_t>(g)].mean;
    }

    for (Index i = 2; i <= spec.stages(); ++i) {
        const auto moments = stage_moments(ds, i);
        const RegressionStep step = regression_step(pooled_scatter(moments, i), i, spec);
        append_stage(step, spec.leading(i - 1), spec.width(i), moments, out.mu, out.sigma);
    }
    return out;
}

MleParameters epem_fit_two_class(const ClassSamples& y, const ClassSamples& z, const FeatureBlockSpec& spec) {
    const MonotoneDataset ds(spec, {y, z});
    require_stage_samples(ds);
    const Index p = spec.features();

    // mu_hat / eta_hat are the class means of y / z.
    Eigen::VectorXd mu_hat = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd eta_hat = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd sigma_hat = Eigen::MatrixXd::Zero(p, p);

    auto moments_at = [&](Index stage) {
        return std::pair{block_moments(block_view(ds, 0, stage)), block_moments(block_view(ds, 1, stage))};
    };
    auto scatter = [](const BlockMoments& s, const BlockMoments& r) {
        return PooledScatter{s.stage, static_cast<double>(s.n - 1) * s.cov + static_cast<double>(r.n - 1) * r.cov,
                             s.n + r.n};
    };

    const auto [s1, r1] = moments_at(1);
    const PooledScatter w1 = scatter(s1, r1);
    const Index p1 = spec.leading(1);
    mu_hat.head(p1) = s1.mean;
    eta_hat.head(p1) = r1.mean;
    sigma_hat.topLeftCorner(p1, p1) = w1.W / static_cast<double>(w1.n_total);

    for (Index i = 2; i <= spec.stages(); ++i) {
        const auto [si, ri] = moments_at(i);
        const RegressionStep step = regression_step(scatter(si, ri), i, spec);
        const Index q = spec.leading(i - 1);
        const Index w = spec.width(i);

        const Eigen::MatrixXd lower = step.P * sigma_hat.topLeftCorner(q, q);
        Eigen::MatrixXd corner = step.Q + step.P * lower.transpose();
        symmetrize(corner);
        sigma_hat.block(q, 0, w, q) = lower;
        sigma_hat.block(0, q, q, w) = lower.transpose();
        sigma_hat.block(q, q, w, w) = corner;

        const Eigen::VectorXd y_shift = si.mean.head(q) - mu_hat.head(q);
        const Eigen::VectorXd z_shift = ri.mean.head(q) - eta_hat.head(q);
        mu_hat.segment(q, w) = si.mean.segment(q, w) - step.P * y_shift;
        eta_hat.segment(q, w) = ri.mean.segment(q, w) - step.P * z_shift;
    }

    MleParameters out;
    out.spec = spec;
    out.class_labels = {y.label(), z.label()};
    out.mu.resize(p, 2);
    out.mu.col(0) = mu_hat;
    out.mu.col(1) = eta_hat;
    out.sigma = std::move(sigma_hat);
    return out;
}

double log_likelihood(const MonotoneDataset& ds, const Eigen::MatrixXd& mu, const Eigen::MatrixXd& sigma) {
    const FeatureBlockSpec& spec = ds.spec();
    const Index p = spec.features();
    const auto G = static_cast<Index>(ds.class_count());
    if (mu.rows() != p || mu.cols() != G) {
        throw DimensionMismatch("mean matrix must be " + std::to_string(p) + " x " + std::to_string(G));
    }
    if (sigma.rows() != p || sigma.cols() != p) {
        throw DimensionMismatch("covariance must be " + std::to_string(p) + " x " + std::to_string(p));
    }

    const Index p1 = spec.leading(1);
    double total = 0.0;
    {
        const Eigen::MatrixXd cov = sigma.topLeftCorner(p1, p1);
        for (Index g = 0; g < G; ++g) {
            const auto& c = ds.at(static_cast<std::size_t>(g));
            const Eigen::MatrixXd resid = c.values().topRows(p1).colwise() - mu.col(g).head(p1);
            total += gaussian_log_density_sum(cov, resid, "stage-1 covariance block");
        }
    }
    for (Index i = 2; i <= spec.stages(); ++i) {
        const Index q = spec.leading(i - 1);
        const Index w = spec.width(i);
        Eigen::LLT<Eigen::MatrixXd> llt(sigma.topLeftCorner(q, q));
        if (llt.info() != Eigen::Success) {
            throw NotPositiveDefinite("leading covariance block of stage " + std::to_string(i - 1) +
                                      " is not positive definite");
        }
        // B = Sigma_21 Sigma_11^{-1}, H = Sigma_22 - B Sigma_12
        const Eigen::MatrixXd B = llt.solve(sigma.block(0, q, q, w)).transpose();
        Eigen::MatrixXd H = sigma.block(q, q, w, w) - B * sigma.block(0, q, q, w);
        symmetrize(H);
        for (Index g = 0; g < G; ++g) {
            const auto& c = ds.at(static_cast<std::size_t>(g));
            const Index n = c.count(i);
            if (n == 0) continue;
            const auto block = c.values().topLeftCorner(q + w, n);
            const Eigen::MatrixXd earlier = block.topRows(q).colwise() - mu.col(g).head(q);
            const Eigen::MatrixXd resid =
                (block.bottomRows(w).colwise() - mu.col(g).segment(q, w)) - B * earlier;
            total += gaussian_log_density_sum(H, resid,
                                              "conditional covariance of stage " + std::to_string(i));
        }
    }
    return total;
}

}  // namespace epem
