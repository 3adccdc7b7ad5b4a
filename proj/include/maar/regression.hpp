#ifndef MAAR_REGRESSION_HPP
#define MAAR_REGRESSION_HPP

#include <Eigen/Dense>

namespace maar {

enum class Family { gaussian, logistic };

struct RegressionFit {
    Family family = Family::gaussian;
    Eigen::VectorXd coefficients;
    // MLE RSS / n; zero for the logistic family.
    double noise_variance = 0.0;
    double max_loglik = 0.0;
    // Coefficients, plus one for the Gaussian noise variance.
    int n_params = 0;
    int iterations = 0;
};

struct LrtResult {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
};

// Gaussian linear model by least squares. X is expected to carry its own intercept column.
RegressionFit fit_gaussian_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Binomial-logit MLE by iteratively reweighted least squares with step halving.
// Converged when the largest coefficient change is below 1e-8 (max 100 iterations).
RegressionFit fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& r);

// Bernoulli log-likelihood of r under coefficients beta.
double logistic_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& r, const Eigen::VectorXd& beta);

// Likelihood ratio test of a nested null against an alternative.
LrtResult lrt(const RegressionFit& null_fit, const RegressionFit& alt_fit);

// LRT result from a statistic already computed; negative statistics clamp to 0.
LrtResult lrt_from_statistic(double statistic, int df);

} // namespace maar

#endif
