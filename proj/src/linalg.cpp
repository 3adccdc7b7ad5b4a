#include "maar/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "maar/errors.hpp"

namespace maar {

namespace {
constexpr double kTol = 1e-12;
}

CorrelationMatrix::CorrelationMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.rows() == 0 || entries_.rows() != entries_.cols())
        throw DomainError("correlation matrix must be square and nonempty");
    const auto n = entries_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(entries_(i, i) - 1.0) > kTol) throw DomainError("correlation matrix diagonal must be 1");
        for (Eigen::Index j = 0; j < i; ++j) {
            if (std::abs(entries_(i, j) - entries_(j, i)) > kTol)
                throw DomainError("correlation matrix must be symmetric");
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries_, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= kTol)
        throw DomainError("correlation matrix must be positive definite");
}

CorrelationMatrix equicorr_covariance(std::size_t dim, double rho) {
    if (dim == 0) throw DomainError("dimension must be positive");
    if (!(rho < 1.0) || (dim > 1 && !(rho > -1.0 / static_cast<double>(dim - 1))))
        throw DomainError("equicorrelation outside the positive-definite range");
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(dim, dim, rho);
    m.diagonal().setOnes();
    return CorrelationMatrix(std::move(m));
}

CorrelationMatrix to_correlation(const Eigen::MatrixXd& cov) {
    if (cov.rows() != cov.cols()) throw DomainError("covariance must be square");
    const Eigen::VectorXd d = cov.diagonal();
    if ((d.array() <= 0.0).any()) throw DomainError("covariance diagonal must be positive");
    const Eigen::VectorXd s = d.array().sqrt().inverse();
    Eigen::MatrixXd c = s.asDiagonal() * cov * s.asDiagonal();
    c = 0.5 * (c + c.transpose());
    c.diagonal().setOnes();
    return CorrelationMatrix(std::move(c));
}

double partial_correlation(const CorrelationMatrix& c, std::size_t a, std::size_t b,
                           const std::vector<std::size_t>& given) {
    const auto dim = c.dim();
    if (a >= dim || b >= dim) throw DomainError("partial_correlation: index out of range");
    if (a == b) throw DomainError("partial_correlation: indices must differ");
    for (auto k : given) {
        if (k >= dim) throw DomainError("partial_correlation: conditioning index out of range");
        if (k == a || k == b) throw DomainError("partial_correlation: conditioning set contains a target index");
    }
    if (given.empty()) return c(a, b);

    const auto nk = static_cast<Eigen::Index>(given.size());
    Eigen::MatrixXd ckk(nk, nk);
    Eigen::MatrixXd cxk(2, nk);
    for (Eigen::Index u = 0; u < nk; ++u) {
        cxk(0, u) = c(a, given[u]);
        cxk(1, u) = c(b, given[u]);
        for (Eigen::Index v = 0; v < nk; ++v) ckk(u, v) = c(given[u], given[v]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(ckk);
    if (llt.info() != Eigen::Success) throw DomainError("partial_correlation: conditioning block is singular");
    const Eigen::MatrixXd half = llt.matrixL().solve(cxk.transpose());
    const Eigen::Matrix2d schur =
        (Eigen::Matrix2d() << 1.0, c(a, b), c(a, b), 1.0).finished() - half.transpose() * half;
    if (!(schur(0, 0) > 0.0) || !(schur(1, 1) > 0.0))
        throw DomainError("partial_correlation: conditional variance is not positive");
    const double r = schur(0, 1) / std::sqrt(schur(0, 0) * schur(1, 1));
    return std::clamp(r, -1.0, 1.0);
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw DomainError("matrix is not positive definite");
    return llt.matrixL();
}

} // namespace maar
