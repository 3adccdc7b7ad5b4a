#ifndef MAAR_SAMPLERS_HPP
#define MAAR_SAMPLERS_HPP

#include <cstddef>

#include <Eigen/Dense>

#include "maar/random.hpp"

namespace maar {

// n rows drawn i.i.d. from N(mean, cov).
Eigen::MatrixXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, std::size_t n,
                           RandomStream& stream);

// Wishart(nu, scale) by the Bartlett decomposition.
Eigen::MatrixXd sample_wishart(double nu, const Eigen::MatrixXd& scale, RandomStream& stream);

// Inverse-Wishart(nu, scale): the inverse of a Wishart(nu, scale^{-1}) draw.
// Mean is scale / (nu - dim - 1) when nu > dim + 1.
Eigen::MatrixXd sample_inverse_wishart(double nu, const Eigen::MatrixXd& scale, RandomStream& stream);

// N(mu, sd^2) conditioned to [lo, hi]; either bound may be infinite.
double sample_truncated_normal(double mu, double sd, double lo, double hi, RandomStream& stream);

// Standard normal conditioned to [lo, hi].
double sample_truncated_std_normal(double lo, double hi, RandomStream& stream);

} // namespace maar

#endif
