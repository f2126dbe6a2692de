#include "epem/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace epem::oracle {

namespace {

// theta = [vec(mu) ; lower triangle of L row by row, diagonal stored as log]
class Packing {
public:
    Packing(Index p, Index G) : p_(p), G_(G) {}

    Index size() const { return p_ * G_ + p_ * (p_ + 1) / 2; }

    void unpack(const Eigen::VectorXd& theta, Eigen::MatrixXd& mu, Eigen::MatrixXd& sigma) const {
        mu = Eigen::Map<const Eigen::MatrixXd>(theta.data(), p_, G_);
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(p_, p_);
        Index k = p_ * G_;
        for (Index r = 0; r < p_; ++r) {
            for (Index c = 0; c <= r; ++c) {
                L(r, c) = (r == c) ? std::exp(theta(k)) : theta(k);
                ++k;
            }
        }
        sigma = L * L.transpose();
    }

    Eigen::VectorXd pack(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& L) const {
        Eigen::VectorXd theta(size());
        theta.head(p_ * G_) = Eigen::Map<const Eigen::VectorXd>(mu.data(), p_ * G_);
        Index k = p_ * G_;
        for (Index r = 0; r < p_; ++r) {
            for (Index c = 0; c <= r; ++c) {
                theta(k++) = (r == c) ? std::log(L(r, c)) : L(r, c);
            }
        }
        return theta;
    }

private:
    Index p_;
    Index G_;
};

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

struct Minimized {
    Eigen::VectorXd x;
    double value;
    double gradient_norm;
    int iterations;
};

// BFGS on a function to be minimized, gradients by central differences.
Minimized bfgs_minimize(const Objective& F, Eigen::VectorXd x, const OracleConfig& cfg) {
    const Index n = x.size();
    double fx = F(x);
    Eigen::VectorXd g = finite_diff_gradient(F, x, cfg.fd_epsilon);
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;
    int iter = 0;
    int stalls = 0;
    for (; iter < cfg.max_iters; ++iter) {
        if (max_abs(g) < cfg.gradient_tolerance * 1e-2) break;
        Eigen::VectorXd d = -H * g;
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            H.setIdentity();
            d = -g;
            slope = -g.squaredNorm();
        }
        double t = 1.0;
        Eigen::VectorXd x_new;
        double f_new = std::numeric_limits<double>::infinity();
        for (int backtrack = 0; backtrack < 80; ++backtrack) {
            x_new = x + t * d;
            f_new = F(x_new);
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * t * slope) break;
            t *= 0.5;
        }
        if (!std::isfinite(f_new) || f_new > fx) {
            // No progress along d; retry from steepest descent once, then give up.
            if (stalls++ > 2) break;
            H.setIdentity();
            continue;
        }
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd g_new = finite_diff_gradient(F, x_new, cfg.fd_epsilon);
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm()) {
            if (!scaled) {
                H *= sy / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::VectorXd Hy = H * y;
            H += (rho * rho * y.dot(Hy) + rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
        }
        double rel_step = 0.0;
        for (Index j = 0; j < n; ++j) {
            rel_step = std::max(rel_step, std::abs(s(j)) / std::max(1.0, std::abs(x_new(j))));
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        if (rel_step < cfg.step_tolerance) {
            if (++stalls > 3) break;
            H.setIdentity();
            scaled = false;
        } else {
            stalls = 0;
        }
    }
    return Minimized{x, fx, max_abs(g), iter};
}

double log_two_pi() { return std::log(2.0 * std::numbers::pi); }

}  // namespace

Eigen::VectorXd finite_diff_gradient(const Objective& objective, const Eigen::VectorXd& point, double fd_epsilon) {
    if (!(fd_epsilon > 0.0)) {
        throw Error("fd_epsilon must be positive");
    }
    if (!std::isfinite(objective(point))) {
        throw NonFiniteObjective("objective is not finite at the base point");
    }
    Eigen::VectorXd grad(point.size());
    Eigen::VectorXd probe = point;
    for (Index j = 0; j < point.size(); ++j) {
        const double h = fd_epsilon * std::max(1.0, std::abs(point(j)));
        probe(j) = point(j) + h;
        const double up = objective(probe);
        probe(j) = point(j) - h;
        const double down = objective(probe);
        probe(j) = point(j);
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NonFiniteObjective("objective is not finite at a probe of coordinate " + std::to_string(j));
        }
        grad(j) = (up - down) / (2.0 * h);
    }
    return grad;
}

double direct_log_likelihood(const MonotoneDataset& ds, const Eigen::MatrixXd& mu, const Eigen::MatrixXd& sigma) {
    const FeatureBlockSpec& spec = ds.spec();
    const Index p = spec.features();
    if (mu.rows() != p || mu.cols() != static_cast<Index>(ds.class_count()) || sigma.rows() != p ||
        sigma.cols() != p) {
        throw DimensionMismatch("parameter dimensions do not match the dataset");
    }
    double total = 0.0;
    for (Index s = 1; s <= spec.stages(); ++s) {
        const Index d = spec.leading(s);
        Eigen::LLT<Eigen::MatrixXd> llt(sigma.topLeftCorner(d, d));
        if (llt.info() != Eigen::Success) {
            throw NotPositiveDefinite("leading " + std::to_string(d) + "x" + std::to_string(d) +
                                      " covariance block is not positive definite");
        }
        const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        for (std::size_t g = 0; g < ds.class_count(); ++g) {
            const auto& c = ds.at(g);
            for (Index j = 0; j < c.samples(); ++j) {
                if (c.last_stage(j) != s) continue;
                const Eigen::VectorXd r = c.values().col(j).head(d) - mu.col(static_cast<Index>(g)).head(d);
                const double quad = llt.matrixL().solve(r).squaredNorm();
                total += -0.5 * (static_cast<double>(d) * log_two_pi() + log_det + quad);
            }
        }
    }
    return total;
}

Eigen::VectorXd likelihood_gradient(const MonotoneDataset& ds, const Eigen::MatrixXd& mu,
                                    const Eigen::MatrixXd& sigma, double fd_epsilon) {
    const Index p = mu.rows();
    const Index G = mu.cols();
    const Index n_mu = p * G;
    Eigen::VectorXd point(n_mu + p * (p + 1) / 2);
    point.head(n_mu) = Eigen::Map<const Eigen::VectorXd>(mu.data(), n_mu);
    Index k = n_mu;
    for (Index r = 0; r < p; ++r) {
        for (Index c = 0; c <= r; ++c) point(k++) = sigma(r, c);
    }
    auto objective = [&](const Eigen::VectorXd& theta) {
        Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(theta.data(), p, G);
        Eigen::MatrixXd s(p, p);
        Index idx = n_mu;
        for (Index r = 0; r < p; ++r) {
            for (Index c = 0; c <= r; ++c) {
                s(r, c) = theta(idx);
                s(c, r) = theta(idx);
                ++idx;
            }
        }
        try {
            return log_likelihood(ds, m, s);
        } catch (const NotPositiveDefinite&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    // Curvature in sigma grows like 1/lambda_min^2; shrink the step with it.
    const double lambda_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sigma, Eigen::EigenvaluesOnly).eigenvalues()(0);
    const double scale = lambda_min > 0.0 ? std::min(1.0, lambda_min) : 1.0;
    return finite_diff_gradient(objective, point, fd_epsilon * scale);
}

OracleResult numeric_mle(const MonotoneDataset& ds, const OracleConfig& cfg) {
    if (!(cfg.step_tolerance > 0.0) || !(cfg.fd_epsilon > 0.0) || !(cfg.gradient_tolerance > 0.0) ||
        cfg.max_iters < 1) {
        throw Error("oracle tolerances and iteration budget must be positive");
    }
    const Index p = ds.spec().features();
    const auto G = static_cast<Index>(ds.class_count());
    const Packing packing(p, G);

    // Per-feature mean and spread over every observed cell, ignoring class.
    const MaskedMatrix masked = ds.to_masked();
    Eigen::VectorXd center(p);
    Eigen::VectorXd spread(p);
    for (Index f = 0; f < p; ++f) {
        double sum = 0.0;
        double sq = 0.0;
        Index n = 0;
        for (Index j = 0; j < masked.samples(); ++j) {
            if (!masked.observed(f, j)) continue;
            sum += masked.values(f, j);
            sq += masked.values(f, j) * masked.values(f, j);
            ++n;
        }
        center(f) = sum / static_cast<double>(n);
        const double var = sq / static_cast<double>(n) - center(f) * center(f);
        spread(f) = std::sqrt(std::max(var, 1e-4));
    }

    const Objective negative = [&](const Eigen::VectorXd& theta) {
        Eigen::MatrixXd mu;
        Eigen::MatrixXd sigma;
        packing.unpack(theta, mu, sigma);
        try {
            return -direct_log_likelihood(ds, mu, sigma);
        } catch (const NotPositiveDefinite&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    OracleResult best;
    bool have_best = false;
    for (std::size_t r = 0; r < cfg.seeds.size(); ++r) {
        std::mt19937_64 rng(cfg.seeds[r]);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::MatrixXd mu0(p, G);
        for (Index g = 0; g < G; ++g) {
            for (Index f = 0; f < p; ++f) mu0(f, g) = center(f) + 0.5 * spread(f) * normal(rng);
        }
        Eigen::MatrixXd L0 = Eigen::MatrixXd::Zero(p, p);
        for (Index f = 0; f < p; ++f) L0(f, f) = spread(f) * std::exp(0.2 * normal(rng));

        const Minimized run = bfgs_minimize(negative, packing.pack(mu0, L0), cfg);
        if (!have_best || -run.value > best.objective) {
            have_best = true;
            best.objective = -run.value;
            best.gradient_norm = run.gradient_norm;
            best.iterations = run.iterations;
            best.restart = r;
            best.params.spec = ds.spec();
            best.params.class_labels = ds.labels();
            packing.unpack(run.x, best.params.mu, best.params.sigma);
        }
    }
    if (!(best.gradient_norm < cfg.gradient_tolerance)) {
        std::ostringstream msg;
        msg << "numeric MLE did not converge: best gradient max-norm " << best.gradient_norm << " after "
            << best.iterations << " iterations";
        throw DidNotConverge(best, msg.str());
    }
    return best;
}

}  // namespace epem::oracle
