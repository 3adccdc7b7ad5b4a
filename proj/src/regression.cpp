#include "maar/regression.hpp"

#include <algorithm>
#include <cmath>

#include "maar/distributions.hpp"
#include "maar/errors.hpp"

namespace maar {

namespace {

constexpr int kMaxIter = 100;
constexpr double kCoefTol = 1e-8;
constexpr double kSeparationNorm = 1e3;
constexpr double kSaturation = 1e-10;
constexpr int kMaxHalvings = 40;

void check_rank(const Eigen::MatrixXd& X) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < X.cols()) throw SingularDesignError("design matrix is not of full column rank");
}

} // namespace

RegressionFit fit_gaussian_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw DomainError("design rows and response length differ");
    if (X.rows() <= X.cols()) throw DomainError("least squares needs more rows than columns");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < X.cols()) throw SingularDesignError("design matrix is not of full column rank");

    RegressionFit fit;
    fit.family = Family::gaussian;
    fit.coefficients = qr.solve(y);
    const Eigen::VectorXd resid = y - X * fit.coefficients;
    const double rss = resid.squaredNorm();
    const double n = static_cast<double>(y.size());
    if (!(rss > 1e-20 * std::max(1.0, y.squaredNorm())))
        throw DegenerateFitError("zero residual sum of squares; Gaussian log-likelihood is unbounded");
    fit.noise_variance = rss / n;
    fit.max_loglik = -0.5 * n * (std::log(2.0 * M_PI * fit.noise_variance) + 1.0);
    fit.n_params = static_cast<int>(X.cols()) + 1;
    return fit;
}

double logistic_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& r, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = X * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += r(i) * eta(i) - log1p_exp(eta(i));
    return ll;
}

RegressionFit fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& r) {
    const auto n = X.rows();
    const auto p = X.cols();
    if (n != r.size()) throw DomainError("design rows and response length differ");
    if (n <= p) throw DomainError("logistic regression needs more rows than columns");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (r(i) != 0.0 && r(i) != 1.0) throw DomainError("logistic response must be binary");
    }
    if (r.minCoeff() == r.maxCoeff()) throw DomainError("logistic response is constant");
    check_rank(X);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double ll = logistic_loglik(X, r, beta);
    Eigen::VectorXd prob(n), w(n);

    for (int iter = 1; iter <= kMaxIter; ++iter) {
        const Eigen::VectorXd eta = X * beta;
        for (Eigen::Index i = 0; i < n; ++i) {
            prob(i) = inv_logit(eta(i));
            w(i) = prob(i) * (1.0 - prob(i));
        }
        const Eigen::VectorXd score = X.transpose() * (r - prob);
        const Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            throw SeparationError("information matrix lost positive definiteness; fitted probabilities saturated");
        Eigen::VectorXd step = ldlt.solve(score);
        if (!step.allFinite())
            throw SeparationError("information matrix lost positive definiteness; fitted probabilities saturated");

        Eigen::VectorXd next = beta + step;
        double ll_next = logistic_loglik(X, r, next);
        int halvings = 0;
        while (!(ll_next >= ll - 1e-12) && halvings < kMaxHalvings) {
            step *= 0.5;
            next = beta + step;
            ll_next = logistic_loglik(X, r, next);
            ++halvings;
        }
        const double change = step.cwiseAbs().maxCoeff();
        beta = next;
        ll = ll_next;
        if (beta.norm() > kSeparationNorm)
            throw SeparationError("coefficient norm diverged; data are (quasi-)separated");
        if (change < kCoefTol) {
            RegressionFit fit;
            fit.family = Family::logistic;
            fit.coefficients = beta;
            fit.max_loglik = ll;
            fit.n_params = static_cast<int>(p);
            fit.iterations = iter;
            return fit;
        }
    }

    const Eigen::VectorXd eta = X * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double q = inv_logit(eta(i));
        if (q < kSaturation || q > 1.0 - kSaturation)
            throw SeparationError("fitted probabilities saturated without convergence; data are (quasi-)separated");
    }
    throw ConvergenceError("IRLS did not converge in 100 iterations");
}

LrtResult lrt_from_statistic(double statistic, int df) {
    if (df <= 0) throw DomainError("likelihood ratio test needs positive degrees of freedom");
    LrtResult out;
    out.statistic = std::max(0.0, statistic);
    out.df = df;
    out.p_value = chisq_sf(out.statistic, df);
    return out;
}

LrtResult lrt(const RegressionFit& null_fit, const RegressionFit& alt_fit) {
    const int df = alt_fit.n_params - null_fit.n_params;
    if (df <= 0) throw DomainError("alternative model does not nest the null (df <= 0)");
    if (!std::isfinite(null_fit.max_loglik) || !std::isfinite(alt_fit.max_loglik))
        throw DomainError("non-finite log-likelihood");
    if (alt_fit.max_loglik < null_fit.max_loglik - 1e-8 * std::max(1.0, std::abs(null_fit.max_loglik)))
        throw DomainError("alternative log-likelihood below the null; models are not nested");
    return lrt_from_statistic(2.0 * (alt_fit.max_loglik - null_fit.max_loglik), df);
}

} // namespace maar
