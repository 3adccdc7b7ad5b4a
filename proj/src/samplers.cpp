#include "maar/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "maar/distributions.hpp"
#include "maar/errors.hpp"
#include "maar/linalg.hpp"

namespace maar {

namespace {

constexpr double kTailCut = 6.0;

// Standard normal on [a, b] with 0 <= a, found by rejection. Uniform proposals
// for narrow intervals, translated-exponential proposals otherwise.
double upper_tail(double a, double b, RandomStream& stream) {
    if (std::isfinite(b) && (b - a) * std::max(a, 1.0) < 1.0) {
        while (true) {
            const double x = a + (b - a) * stream.uniform();
            if (stream.uniform() <= std::exp(-0.5 * (x - a) * (x + a))) return x;
        }
    }
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    while (true) {
        const double x = a - std::log(stream.uniform()) / lambda;
        if (x > b) continue;
        const double d = x - lambda;
        if (stream.uniform() <= std::exp(-0.5 * d * d)) return x;
    }
}

} // namespace

Eigen::MatrixXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, std::size_t n,
                           RandomStream& stream) {
    if (cov.rows() != cov.cols() || cov.rows() != mean.size())
        throw DomainError("sample_mvn: mean and covariance dimensions disagree");
    const Eigen::MatrixXd L = cholesky_lower(cov);
    const auto dim = mean.size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), dim);
    Eigen::VectorXd z(dim);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) z(j) = stream.normal();
        out.row(i) = (mean + L * z).transpose();
    }
    return out;
}

Eigen::MatrixXd sample_wishart(double nu, const Eigen::MatrixXd& scale, RandomStream& stream) {
    const auto p = scale.rows();
    if (scale.cols() != p || p == 0) throw DomainError("wishart scale must be square");
    if (!(nu > static_cast<double>(p) - 1.0)) throw DomainError("wishart degrees of freedom too small");
    const Eigen::MatrixXd L = cholesky_lower(scale);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        A(i, i) = std::sqrt(stream.chi_square(nu - static_cast<double>(i)));
        for (Eigen::Index j = 0; j < i; ++j) A(i, j) = stream.normal();
    }
    const Eigen::MatrixXd LA = L * A;
    return LA * LA.transpose();
}

Eigen::MatrixXd sample_inverse_wishart(double nu, const Eigen::MatrixXd& scale, RandomStream& stream) {
    const auto p = scale.rows();
    if (scale.cols() != p || p == 0) throw DomainError("inverse-wishart scale must be square");
    if (!(nu > static_cast<double>(p) - 1.0)) throw DomainError("inverse-wishart degrees of freedom too small");
    Eigen::LLT<Eigen::MatrixXd> llt(scale);
    if (llt.info() != Eigen::Success) throw DomainError("inverse-wishart scale is not positive definite");
    const Eigen::MatrixXd scale_inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd w = sample_wishart(nu, 0.5 * (scale_inv + scale_inv.transpose()), stream);
    Eigen::LLT<Eigen::MatrixXd> wllt(w);
    if (wllt.info() != Eigen::Success) throw DomainError("wishart draw is not positive definite");
    Eigen::MatrixXd out = wllt.solve(Eigen::MatrixXd::Identity(p, p));
    return 0.5 * (out + out.transpose());
}

double sample_truncated_std_normal(double lo, double hi, RandomStream& stream) {
    if (!(lo < hi)) throw DomainError("truncated normal requires lo < hi");
    if (lo >= kTailCut) return upper_tail(lo, hi, stream);
    if (hi <= -kTailCut) return -upper_tail(-hi, -lo, stream);

    // Narrow interval: uniform proposal against the density ratio to its peak on [lo, hi].
    const double width = hi - lo;
    const double far = std::max(std::abs(lo), std::abs(hi));
    if (width <= 0.5 && width * far <= 0.5) {
        const double peak = lo > 0.0 ? lo : (hi < 0.0 ? hi : 0.0);
        while (true) {
            const double x = lo + width * stream.uniform();
            if (stream.uniform() <= std::exp(-0.5 * (x - peak) * (x + peak))) return x;
        }
    }
    // Wide interval around the mode: plain rejection accepts at least half the time.
    if (lo <= 0.0 && hi >= 0.0 && ((lo <= -1.0 && hi >= 1.0) || std::isinf(lo) || std::isinf(hi))) {
        while (true) {
            const double x = stream.normal();
            if (x >= lo && x <= hi) return x;
        }
    }

    double x;
    if (lo > 0.0) {
        const double plo = normal_sf(lo);
        const double phi = normal_sf(hi);
        if (!(plo > phi)) return upper_tail(lo, hi, stream);
        x = -normal_quantile(phi + (plo - phi) * stream.uniform());
    } else if (hi < 0.0) {
        const double plo = normal_cdf(lo);
        const double phi = normal_cdf(hi);
        if (!(phi > plo)) return -upper_tail(-hi, -lo, stream);
        x = normal_quantile(plo + (phi - plo) * stream.uniform());
    } else {
        const double plo = normal_cdf(lo);
        const double phi = normal_cdf(hi);
        x = normal_quantile(plo + (phi - plo) * stream.uniform());
    }
    return std::clamp(x, lo, hi);
}

double sample_truncated_normal(double mu, double sd, double lo, double hi, RandomStream& stream) {
    if (!(sd > 0.0)) throw DomainError("truncated normal requires sd > 0");
    if (!(lo < hi)) throw DomainError("truncated normal requires lo < hi");
    const double a = (lo - mu) / sd;
    const double b = (hi - mu) / sd;
    if (!(a < b)) return std::clamp(mu + sd * a, lo, hi);
    const double x = mu + sd * sample_truncated_std_normal(a, b, stream);
    return std::clamp(x, lo, hi);
}

} // namespace maar
