#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "maar/ccm.hpp"
#include "maar/distributions.hpp"
#include "maar/errors.hpp"
#include "maar/random.hpp"

using namespace maar;
using maar::test::NA;
using maar::test::from_columns;

namespace {

// RSS of least squares via Gauss-Jordan on the normal equations.
double rss_normal_equations(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    const std::size_t p = x.size(), n = y.size();
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < p; ++c)
            for (std::size_t i = 0; i < n; ++i) a[r][c] += x[r][i] * x[c][i];
        for (std::size_t i = 0; i < n; ++i) a[r][p] += x[r][i] * y[i];
    }
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
        }
    }
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t c = 0; c < p; ++c) fit += a[c][p] / a[c][c] * x[c][i];
        rss += (y[i] - fit) * (y[i] - fit);
    }
    return rss;
}

// Y1 target, Y2 indicator source, Y3 fully observed conditioner.
DataMatrix sim_pair_data(std::size_t n, RandomStream& rs, double shift) {
    std::vector<double> y1(n), y2(n), y3(n);
    for (std::size_t i = 0; i < n; ++i) {
        y3[i] = rs.normal();
        const bool r2 = rs.bernoulli(inv_logit(y3[i]));
        y2[i] = r2 ? rs.normal() : NA;
        y1[i] = 0.5 * y3[i] + shift * (r2 ? 1.0 : 0.0) + rs.normal();
        if (rs.uniform() < 0.1) y1[i] = NA;
    }
    return from_columns({y1, y2, y3});
}

} // namespace

TEST(CcmPair, SixRowFixtureMatchesNormalEquations) {
    const std::vector<double> y3{1, 2, 3, 4, 5, 6};
    const std::vector<double> r2{0, 0, 0, 1, 1, 1};
    const std::vector<double> e{.1, -.1, .1, -.1, .1, -.1};
    Eigen::MatrixXd v(6, 3);
    MaskMatrix m = MaskMatrix::Ones(6, 3);
    for (int i = 0; i < 6; ++i) {
        v(i, 0) = y3[i] + 10.0 * r2[i] + e[i];
        v(i, 1) = 1.0 + i;
        v(i, 2) = y3[i];
        m(i, 1) = static_cast<std::uint8_t>(r2[i]);
    }
    const DataMatrix dm(v, m, {}, std::vector<std::size_t>{0, 1});
    const auto rec = ccm_pair_test(dm, 0, 1);
    ASSERT_TRUE(rec.lrt.has_value());
    EXPECT_EQ(rec.n_used, 6u);
    EXPECT_EQ(rec.lrt->df, 2);

    std::vector<double> y(6), ones(6, 1.0), r2y3(6);
    for (int i = 0; i < 6; ++i) {
        y[i] = v(i, 0);
        r2y3[i] = r2[i] * y3[i];
    }
    const double rss0 = rss_normal_equations({ones, y3}, y);
    const double rss1 = rss_normal_equations({ones, y3, r2, r2y3}, y);
    const double stat = 6.0 * std::log(rss0 / rss1);
    EXPECT_NEAR(rec.lrt->statistic, stat, 1e-8 * stat);
    EXPECT_LT(rec.lrt->p_value, 0.001);
}

TEST(CcmPair, NullCalibration) {
    RandomStream rs(2024);
    int rejections = 0;
    const int reps = 1000;
    for (int t = 0; t < reps; ++t) {
        const auto dm = sim_pair_data(500, rs, 0.0);
        const auto rec = ccm_pair_test(dm, 0, 1);
        ASSERT_TRUE(rec.lrt.has_value());
        rejections += rec.lrt->p_value <= 0.05 ? 1 : 0;
    }
    EXPECT_NEAR(rejections / static_cast<double>(reps), 0.05, 0.02);
}

TEST(CcmPair, SamePatternIsSkipped) {
    const auto dm = from_columns({{1, NA, 3, 4, 5}, {2, NA, 1, 0, 3}, {1, 2, 3, 4, 5}});
    const auto rec = ccm_pair_test(dm, 0, 1);
    EXPECT_FALSE(rec.lrt.has_value());
    EXPECT_EQ(rec.skipped_reason, SkipReason::same_pattern);
}

TEST(CcmPair, IndicatorConstantWhereTargetObserved) {
    const auto dm = from_columns({{1, NA, 3, 4, 5}, {2, NA, 1, 0, NA}, {1, 2, 3, 4, 5}});
    // rows with Y2 observed all have Y1 observed
    EXPECT_EQ(ccm_pair_test(dm, 1, 0).skipped_reason, SkipReason::constant_indicator);
}

TEST(CcmPair, TooFewRows) {
    const auto dm = from_columns({{1, 2, 3, 4, NA}, {NA, 1, 0, 2, 3}, {1, 2, 3, 4, 5}});
    EXPECT_EQ(ccm_pair_test(dm, 0, 1).skipped_reason, SkipReason::too_few_rows);
}

TEST(CcmRun, TwoMissingProneColumnsGiveTwoTests) {
    RandomStream rs(5);
    const auto dm = sim_pair_data(300, rs, 0.0);
    const auto holm = ccm_run(dm, 0.05, Correction::holm);
    const auto bonf = ccm_run(dm, 0.05, Correction::bonferroni);
    ASSERT_EQ(bonf.pairs.size(), 2u);
    for (const auto& p : bonf.pairs) {
        ASSERT_TRUE(p.lrt.has_value());
        EXPECT_DOUBLE_EQ(p.corrected_p, std::min(1.0, 2.0 * p.lrt->p_value));
    }
    EXPECT_EQ(holm.correction, Correction::holm);
}

TEST(CcmRun, DetectsShift) {
    RandomStream rs(6);
    const auto report = ccm_run(sim_pair_data(1000, rs, 1.0));
    EXPECT_EQ(report.decision_for(1), Decision::reject);
}

TEST(CcmRun, AllSkippedWarns) {
    const auto dm = from_columns({{1, NA, 3, 4, 5, 6}, {2, NA, 1, 0, 3, 2}, {1, 2, 3, 4, 5, 7}});
    const auto report = ccm_run(dm);
    EXPECT_TRUE(report.decisions.empty());
    ASSERT_EQ(report.warnings.size(), 2u);
    EXPECT_NE(report.warnings[1].find("conditionally independent"), std::string::npos);
}

TEST(CcmRun, DesignErrors) {
    EXPECT_THROW(ccm_run(from_columns({{1, NA, 3, 4}, {1, 2, 3, 4}})), NothingToTestError);
    EXPECT_THROW(ccm_run(from_columns({{1, NA, 3, 4}, {1, 2, NA, 4}})), UnsupportedDesignError);
}

TEST(CcmRun, DuplicatedConditionerIsSingular) {
    RandomStream rs(7);
    const auto base = sim_pair_data(200, rs, 0.0);
    Eigen::MatrixXd v(base.n_rows(), 4);
    MaskMatrix m(base.n_rows(), 4);
    v.leftCols(3) = base.values();
    m.leftCols(3) = base.mask();
    v.col(3) = base.values().col(2);
    m.col(3) = base.mask().col(2);
    EXPECT_THROW(ccm_run(DataMatrix(v, m)), SingularDesignError);
}

TEST(CcmInvariance, RowPermutationAndAffineRescaling) {
    RandomStream rs(8);
    const auto dm = sim_pair_data(400, rs, 0.2);
    const auto ref = ccm_run(dm);

    std::vector<std::size_t> perm(dm.n_rows());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rs.index(i + 1)]);
    const auto permuted = ccm_run(dm.select_rows(perm));

    Eigen::MatrixXd v = dm.values();
    v.col(2) = v.col(2) * -3.5 + Eigen::VectorXd::Constant(v.rows(), 12.0);
    const auto rescaled = ccm_run(DataMatrix(v, dm.mask()));

    ASSERT_EQ(ref.pairs.size(), permuted.pairs.size());
    for (std::size_t t = 0; t < ref.pairs.size(); ++t) {
        EXPECT_NEAR(ref.pairs[t].lrt->statistic, permuted.pairs[t].lrt->statistic, 1e-8);
        EXPECT_NEAR(ref.pairs[t].lrt->statistic, rescaled.pairs[t].lrt->statistic, 1e-8);
    }
    for (std::size_t k : {0u, 1u}) {
        EXPECT_EQ(ref.decision_for(k), permuted.decision_for(k));
        EXPECT_EQ(ref.decision_for(k), rescaled.decision_for(k));
    }
}
