#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "maar/distributions.hpp"
#include "maar/errors.hpp"
#include "maar/linalg.hpp"
#include "maar/random.hpp"
#include "maar/samplers.hpp"

using namespace maar;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Regularized upper incomplete gamma Q(a, x): series below a+1, Lentz continued fraction above.
double gamma_q_oracle(double a, double x) {
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a, sum = term;
        for (int n = 1; n < 10000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-17) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-17) break;
    }
    return std::exp(-x + a * std::log(x) - lg) * h;
}

Eigen::MatrixXd random_pd(Eigen::Index dim, RandomStream& rs) {
    Eigen::MatrixXd a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = rs.normal();
    return a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
}

} // namespace

TEST(Random, SameSeedSameStream) {
    RandomStream a(7), b(7), c(8);
    for (int i = 0; i < 100; ++i) {
        const double x = a.normal();
        EXPECT_EQ(x, b.normal());
    }
    EXPECT_NE(RandomStream(7).uniform(), c.uniform());
    EXPECT_EQ(RandomStream(3).child(5).uniform(), RandomStream(3).child(5).uniform());
    EXPECT_NE(RandomStream(3).child(5).uniform(), RandomStream(3).child(6).uniform());
}

TEST(Random, UniformIsOpenInterval) {
    RandomStream rs(1);
    for (int i = 0; i < 100000; ++i) {
        const double u = rs.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(InvLogit, Values) {
    EXPECT_DOUBLE_EQ(inv_logit(0.0), 0.5);
    EXPECT_NEAR(inv_logit(std::log(3.0)), 0.75, 1e-15);
    const double tiny = inv_logit(-700.0);
    EXPECT_FALSE(std::isnan(tiny));
    EXPECT_LT(tiny, 1e-300);
    EXPECT_EQ(inv_logit(800.0), 1.0);
    EXPECT_NEAR(log1p_exp(1000.0), 1000.0, 1e-12);
    EXPECT_NEAR(log1p_exp(0.0), std::log(2.0), 1e-15);
}

TEST(NormalQuantile, InvertsTheCdf) {
    for (double p : {1e-300, 1e-20, 1e-5, 0.01, 0.3, 0.5, 0.7, 0.975, 1.0 - 1e-9}) {
        const double x = normal_quantile(p);
        const double back = p < 0.5 ? normal_cdf(x) : 1.0 - normal_sf(x);
        EXPECT_NEAR(back / p, 1.0, 1e-12) << p;
    }
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
    EXPECT_THROW(normal_quantile(1.5), DomainError);
}

TEST(ChisqSf, Examples) {
    EXPECT_EQ(chisq_sf(0.0, 3), 1.0);
    EXPECT_NEAR(chisq_sf(5.991, 2), std::exp(-5.991 / 2.0), 1e-14);
    EXPECT_NEAR(chisq_sf(5.991, 2), 0.05, 1e-4);
    EXPECT_THROW(chisq_sf(1.0, 0), DomainError);
}

TEST(ChisqSf, MatchesSeriesOracle) {
    for (int df : {1, 2, 3, 5, 10, 30, 100}) {
        double prev = 1.0;
        for (double x = 0.05; x < 250.0; x *= 1.3) {
            const double got = chisq_sf(x, df);
            EXPECT_NEAR(got, gamma_q_oracle(0.5 * df, 0.5 * x), 1e-10) << "df " << df << " x " << x;
            EXPECT_LE(got, prev);
            prev = got;
        }
    }
}

TEST(FSf, Examples) {
    for (double d : {1.0, 3.0, 10.0, 57.5}) EXPECT_NEAR(f_sf(1.0, d, d), 0.5, 1e-12);
    EXPECT_EQ(f_sf(0.0, 2, 5), 1.0);
}

TEST(FSf, ClosedForms) {
    for (double x : {0.01, 0.3, 1.0, 2.5, 9.0, 40.0}) {
        // F(1,1): 1 - (2/pi) atan(sqrt(x))
        EXPECT_NEAR(f_sf(x, 1, 1), 1.0 - 2.0 / M_PI * std::atan(std::sqrt(x)), 1e-12);
        // F(2, d2): (1 + 2x/d2)^(-d2/2)
        for (double d2 : {3.0, 7.5, 40.0})
            EXPECT_NEAR(f_sf(x, 2, d2), std::pow(1.0 + 2.0 * x / d2, -d2 / 2.0), 1e-12);
        // infinite denominator df is the scaled chi-square
        EXPECT_NEAR(f_sf(x, 3, kInf), gamma_q_oracle(1.5, 1.5 * x), 1e-10);
    }
}

TEST(EquicorrCovariance, Examples) {
    EXPECT_TRUE(equicorr_covariance(5, 0.0).matrix().isIdentity());
    Eigen::Matrix2d want;
    want << 1, 0.8, 0.8, 1;
    EXPECT_TRUE(equicorr_covariance(2, 0.8).matrix().isApprox(want));
    EXPECT_THROW(equicorr_covariance(3, -0.6), DomainError);
}

TEST(SampleMvn, IdentityCovarianceRecovered) {
    RandomStream rs(11);
    const auto x = sample_mvn(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3), 100000, rs);
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / (x.rows() - 1.0);
    EXPECT_LT((cov - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(SampleMvn, EmptyAndDeterministic) {
    RandomStream rs(1);
    EXPECT_EQ(sample_mvn(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 0, rs).rows(), 0);
    RandomStream a(5), b(5);
    const auto cov = equicorr_covariance(4, 0.3).matrix();
    EXPECT_EQ(sample_mvn(Eigen::VectorXd::Ones(4), cov, 20, a), sample_mvn(Eigen::VectorXd::Ones(4), cov, 20, b));
    Eigen::Matrix2d bad;
    bad << 1, 2, 2, 1;
    EXPECT_THROW(sample_mvn(Eigen::VectorXd::Zero(2), bad, 3, rs), DomainError);
}

TEST(SampleInverseWishart, MeanMatchesFormula) {
    RandomStream rs(3);
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, 3);
    const int n = 100000;
    for (int i = 0; i < n; ++i) mean += sample_inverse_wishart(10.0, Eigen::MatrixXd::Identity(3, 3), rs);
    mean /= n;
    // E = scale / (nu - p - 1) = I / 6
    EXPECT_LT((mean - Eigen::MatrixXd::Identity(3, 3) / 6.0).cwiseAbs().maxCoeff(), 0.02);
}

TEST(SampleInverseWishart, Errors) {
    RandomStream rs(3);
    Eigen::Matrix2d bad;
    bad << 1, 2, 2, 1;
    EXPECT_THROW(sample_inverse_wishart(5.0, bad, rs), DomainError);
    EXPECT_THROW(sample_inverse_wishart(0.5, Eigen::MatrixXd::Identity(2, 2), rs), DomainError);
    RandomStream a(9), b(9);
    EXPECT_EQ(sample_inverse_wishart(6.0, Eigen::MatrixXd::Identity(3, 3), a),
              sample_inverse_wishart(6.0, Eigen::MatrixXd::Identity(3, 3), b));
}

TEST(TruncatedNormal, Examples) {
    RandomStream rs(21);
    EXPECT_TRUE(std::isfinite(sample_truncated_normal(0, 1, -kInf, kInf, rs)));
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += sample_truncated_normal(0, 1, 0, kInf, rs);
    EXPECT_NEAR(sum / n, std::sqrt(2.0 / M_PI), 0.01);
    for (int i = 0; i < 1000; ++i) {
        const double x = sample_truncated_normal(0, 1, 8, 9, rs);
        ASSERT_GE(x, 8.0);
        ASSERT_LE(x, 9.0);
    }
    EXPECT_THROW(sample_truncated_normal(0, 1, 1, 1, rs), DomainError);
    EXPECT_THROW(sample_truncated_normal(0, 0, 0, 1, rs), DomainError);
}

TEST(TruncatedNormal, MomentsAcrossIntervalShapes) {
    // closed-form truncated-normal mean and variance
    auto pdf = [](double x) { return std::isinf(x) ? 0.0 : std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
    const double cases[][2] = {{-0.1, 0.2}, {0.3, 0.6}, {-kInf, 0.0}, {-1.5, 2.0}, {0.5, 3.0},
                               {-3.0, -2.9}, {2.0, 2.3}, {-0.2, kInf}, {6.5, 7.0}, {-kInf, -7.0}};
    RandomStream rs(4);
    for (const auto& c : cases) {
        const double lo = c[0], hi = c[1];
        const int n = 200000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = sample_truncated_std_normal(lo, hi, rs);
            ASSERT_GE(x, lo);
            ASSERT_LE(x, hi);
            s += x;
            s2 += x * x;
        }
        const double mean = s / n, var = s2 / n - mean * mean;
        double z = normal_cdf(hi) - normal_cdf(lo);
        if (lo > 0) z = normal_sf(lo) - normal_sf(hi);
        const double em = (pdf(lo) - pdf(hi)) / z;
        const double lf = std::isinf(lo) ? 0.0 : lo * pdf(lo), hf = std::isinf(hi) ? 0.0 : hi * pdf(hi);
        const double ev = 1.0 + (lf - hf) / z - em * em;
        EXPECT_NEAR(mean, em, 5.0 * std::sqrt(ev / n)) << lo << "," << hi;
        EXPECT_NEAR(var / ev, 1.0, 0.03) << lo << "," << hi;
    }
}

TEST(ToCorrelation, Examples) {
    EXPECT_TRUE(to_correlation(Eigen::MatrixXd::Identity(3, 3)).matrix().isIdentity());
    Eigen::Matrix2d cov;
    cov << 4, 2, 2, 9;
    EXPECT_NEAR(to_correlation(cov)(0, 1), 1.0 / 3.0, 1e-15);
    RandomStream rs(2);
    for (int t = 0; t < 20; ++t) {
        const auto c = to_correlation(random_pd(5, rs));
        for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(c(i, i), 1.0);
    }
    Eigen::Matrix2d bad;
    bad << -1, 0, 0, 1;
    EXPECT_THROW(to_correlation(bad), DomainError);
}

TEST(PartialCorrelation, Examples) {
    const CorrelationMatrix eye(Eigen::MatrixXd::Identity(4, 4));
    EXPECT_EQ(partial_correlation(eye, 0, 1, {2, 3}), 0.0);
    const auto eq = equicorr_covariance(3, 0.5);
    EXPECT_NEAR(partial_correlation(eq, 0, 1, {2}), 1.0 / 3.0, 1e-12);
    EXPECT_EQ(partial_correlation(eq, 0, 2, {}), 0.5);
}

TEST(PartialCorrelation, MatchesPrecisionMatrixOracle) {
    RandomStream rs(99);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto dim = static_cast<Eigen::Index>(3 + rs.index(6));
        const auto c = to_correlation(random_pd(dim, rs));
        std::vector<std::size_t> idx(static_cast<std::size_t>(dim));
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rs.index(i + 1)]);
        const std::size_t a = idx[0], b = idx[1];
        const std::vector<std::size_t> given(idx.begin() + 2, idx.begin() + 2 + static_cast<long>(rs.index(idx.size() - 1)));
        std::vector<std::size_t> sub{a, b};
        sub.insert(sub.end(), given.begin(), given.end());
        Eigen::MatrixXd s(sub.size(), sub.size());
        for (std::size_t i = 0; i < sub.size(); ++i)
            for (std::size_t j = 0; j < sub.size(); ++j) s(i, j) = c(sub[i], sub[j]);
        const Eigen::MatrixXd p = s.inverse();
        const double oracle = -p(0, 1) / std::sqrt(p(0, 0) * p(1, 1));
        worst = std::max(worst, std::abs(partial_correlation(c, a, b, given) - oracle));
    }
    EXPECT_LT(worst, 1e-10);
}
