#ifndef MAAR_LINALG_HPP
#define MAAR_LINALG_HPP

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace maar {

// Symmetric positive-definite matrix with unit diagonal.
class CorrelationMatrix {
public:
    // Throws DomainError unless the input is a valid correlation matrix.
    explicit CorrelationMatrix(Eigen::MatrixXd entries);

    std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
    const Eigen::MatrixXd& matrix() const { return entries_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }

private:
    Eigen::MatrixXd entries_;
};

// rho * 11' + (1 - rho) I, valid for -1/(J-1) < rho < 1.
CorrelationMatrix equicorr_covariance(std::size_t dim, double rho);

// D^{-1/2} cov D^{-1/2} with D = diag(cov).
CorrelationMatrix to_correlation(const Eigen::MatrixXd& cov);

// Correlation of coordinates a and b given the coordinates in `given`,
// from the Schur complement of C on the conditioning block.
double partial_correlation(const CorrelationMatrix& c, std::size_t a, std::size_t b,
                           const std::vector<std::size_t>& given);

// Lower Cholesky factor; throws DomainError when the matrix is not positive definite.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& m);

} // namespace maar

#endif
