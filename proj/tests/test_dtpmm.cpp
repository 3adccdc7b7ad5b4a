#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "maar/distributions.hpp"
#include "maar/dtpmm.hpp"
#include "maar/errors.hpp"
#include "maar/mechanism.hpp"
#include "maar/random.hpp"

using namespace maar;

namespace {

DataMatrix maar_data(std::size_t n, double m, double rho, RandomStream& rs, Eigen::MatrixXd* truth = nullptr) {
    const auto spec = mechanism_spec(Mechanism::maar);
    RandomStream cal = rs.child(1000);
    const auto alphas = calibrate_alphas(spec, m, rho, cal, 20000);
    const auto y = gen_complete(n, rho, rs);
    if (truth) *truth = y;
    return simulated_data(y, apply_mechanism(y, spec, alphas, rs));
}

double ks_uniform(std::vector<double> p) {
    std::sort(p.begin(), p.end());
    double d = 0.0;
    const double n = static_cast<double>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        d = std::max({d, (i + 1) / n - p[i], p[i] - i / n});
    return d;
}

} // namespace

TEST(ImputeUnderNull, CompleteDataGivesCopies) {
    RandomStream rs(1);
    const auto dm = DataMatrix::complete(gen_complete(50, 0.3, rs));
    const auto out = impute_under_null(dm, 4, RandomStream(9));
    ASSERT_EQ(out.size(), 4u);
    for (const auto& y : out) EXPECT_EQ(y, dm.values());
}

TEST(ImputeUnderNull, DeterministicAndFilled) {
    RandomStream rs(2);
    const auto dm = maar_data(300, 0.4, 0.5, rs);
    const auto a = impute_under_null(dm, 3, RandomStream(77));
    const auto b = impute_under_null(dm, 3, RandomStream(77));
    ASSERT_EQ(a.size(), 3u);
    for (std::size_t m = 0; m < a.size(); ++m) {
        EXPECT_EQ(a[m], b[m]);
        EXPECT_TRUE(a[m].allFinite());
        for (std::size_t i = 0; i < dm.n_rows(); ++i)
            for (std::size_t j = 0; j < dm.n_cols(); ++j)
                if (dm.observed(i, j)) ASSERT_EQ(a[m](i, j), dm.value(i, j));
    }
    EXPECT_NE(a[0], a[1]);
}

TEST(ImputeUnderNull, Errors) {
    RandomStream rs(3);
    const auto dm = maar_data(100, 0.2, 0.5, rs);
    EXPECT_THROW(impute_under_null(dm, 1, RandomStream(1)), DomainError);
    EXPECT_THROW(impute_under_null(dm.select_rows({0, 1, 2, 3, 4, 5, 6, 7}), 2, RandomStream(1)), ImputationError);
}

TEST(ImputeUnderNull, ImputedMeansTrackHiddenValues) {
    RandomStream rs(4);
    double bias[3] = {0, 0, 0};
    const int reps = 100;
    for (int t = 0; t < reps; ++t) {
        Eigen::MatrixXd truth;
        const auto dm = maar_data(1000, 0.4, 0.6, rs, &truth);
        const auto imp = impute_under_null(dm, 2, rs.child(static_cast<std::uint64_t>(t)));
        for (std::size_t j = 0; j < 3; ++j) {
            double diff = 0.0;
            int cnt = 0;
            for (std::size_t i = 0; i < dm.n_rows(); ++i) {
                if (dm.observed(i, j)) continue;
                diff += 0.5 * (imp[0](i, j) + imp[1](i, j)) - truth(i, j);
                ++cnt;
            }
            bias[j] += diff / cnt / reps;
        }
    }
    for (double b : bias) EXPECT_LT(std::abs(b), 0.1);
}

TEST(DefaultMechanism, SelfExcludedUnlessRequested) {
    RandomStream rs(5);
    const auto dm = maar_data(200, 0.3, 0.3, rs);
    const auto m = default_mechanism(dm, 1);
    EXPECT_EQ(m.null_predictors, (std::vector<std::size_t>{3, 4}));
    EXPECT_EQ(m.alt_predictors, (std::vector<std::size_t>{0, 2, 3, 4}));
    EXPECT_EQ(default_mechanism(dm, 1, true).alt_predictors, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
    EXPECT_THROW(default_mechanism(dm, 3), DomainError);
}

TEST(LrtMechanism, ZeroDfIsRejected) {
    RandomStream rs(6);
    const auto y = gen_complete(100, 0.2, rs);
    Eigen::VectorXd r(100);
    for (int i = 0; i < 100; ++i) r(i) = i % 3 == 0 ? 0.0 : 1.0;
    PostulatedMechanism mech{0, {3, 4}, {3, 4}};
    EXPECT_THROW(lrt_mechanism(y, r, mech), DomainError);
}

namespace {

Eigen::VectorXd logistic_response(const Eigen::MatrixXd& y, double coef_alt, RandomStream& rs) {
    Eigen::VectorXd r(y.rows());
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        r(i) = rs.bernoulli(inv_logit(y(i, 3) - y(i, 4) + coef_alt * y(i, 1))) ? 1.0 : 0.0;
    return r;
}

} // namespace

TEST(LrtMechanism, NullPValuesAreUniform) {
    RandomStream rs(7);
    PostulatedMechanism mech{0, {3, 4}, {1, 2, 3, 4}};
    std::vector<double> p;
    for (int t = 0; t < 1000; ++t) {
        const auto y = gen_complete(1000, 0.4, rs);
        p.push_back(lrt_mechanism(y, logistic_response(y, 0.0, rs), mech).lrt.p_value);
    }
    EXPECT_LT(ks_uniform(p), 0.05);
}

TEST(LrtMechanism, Power) {
    RandomStream rs(8);
    PostulatedMechanism mech{0, {3, 4}, {1, 2, 3, 4}};
    int rejections = 0;
    for (int t = 0; t < 200; ++t) {
        const auto y = gen_complete(1000, 0.4, rs);
        rejections += lrt_mechanism(y, logistic_response(y, 1.0, rs), mech).lrt.p_value <= 0.05;
    }
    EXPECT_GT(rejections / 200.0, 0.99);
}

namespace {

std::vector<MechanismFit> two_fits(Eigen::VectorXd& r, RandomStream& rs) {
    const auto y = gen_complete(80, 0.5, rs);
    r = logistic_response(y, 0.5, rs);
    Eigen::MatrixXd y2 = y;
    for (int i = 0; i < 80; i += 4) y2(i, 1) += rs.normal();
    PostulatedMechanism mech{0, {3, 4}, {1, 2, 3, 4}};
    return {lrt_mechanism(y, r, mech), lrt_mechanism(y2, r, mech)};
}

double loglik_by_hand(const Eigen::MatrixXd& x, const Eigen::VectorXd& r, const Eigen::VectorXd& b) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(-x.row(i).dot(b)));
        ll += r(i) > 0.5 ? std::log(p) : std::log(1.0 - p);
    }
    return ll;
}

} // namespace

TEST(CombineLrtMi, IdenticalImputationsReduceToSingleTest) {
    RandomStream rs(9);
    Eigen::VectorXd r;
    auto fits = two_fits(r, rs);
    fits[1] = fits[0];
    fits.push_back(fits[0]);
    const auto res = combine_lrt_mi(fits, r, 2);
    EXPECT_EQ(res.between_ratio, 0.0);
    EXPECT_TRUE(std::isinf(res.df_den));
    EXPECT_NEAR(res.combined_statistic, fits[0].lrt.statistic / 2.0, 1e-9);
    EXPECT_NEAR(res.p_value, fits[0].lrt.p_value, 1e-9);
}

TEST(CombineLrtMi, NegativeRatioIsClamped) {
    RandomStream rs(10);
    Eigen::VectorXd r;
    auto fits = two_fits(r, rs);
    for (auto& f : fits) f.lrt.statistic = 0.0;
    const auto res = combine_lrt_mi(fits, r, 2);
    EXPECT_TRUE(res.ratio_clamped);
    EXPECT_EQ(res.between_ratio, 0.0);
}

TEST(CombineLrtMi, TwoImputationHandEvaluation) {
    RandomStream rs(11);
    Eigen::VectorXd r;
    const auto fits = two_fits(r, rs);
    const double k = 2.0, m = 2.0;
    const double dbar = 0.5 * (fits[0].lrt.statistic + fits[1].lrt.statistic);
    const Eigen::VectorXd b0 = 0.5 * (fits[0].null_fit.coefficients + fits[1].null_fit.coefficients);
    const Eigen::VectorXd b1 = 0.5 * (fits[0].alt_fit.coefficients + fits[1].alt_fit.coefficients);
    double dtilde = 0.0;
    for (const auto& f : fits) dtilde += (loglik_by_hand(f.x_alt, r, b1) - loglik_by_hand(f.x_null, r, b0));
    const double rr = std::max(0.0, (m + 1.0) * (dbar - dtilde) / (k * (m - 1.0)));
    const double D = dtilde / (k * (1.0 + rr));
    const double t = k * (m - 1.0);  // 2 <= 4: small-t branch
    const double w = rr > 0 ? 0.5 * t * (1.0 + 1.0 / k) * std::pow(1.0 + 1.0 / rr, 2) : INFINITY;

    const auto res = combine_lrt_mi(fits, r, 2);
    EXPECT_NEAR(res.mean_stat, dbar, 1e-10);
    EXPECT_NEAR(res.stat_at_average, dtilde, 1e-9);
    EXPECT_NEAR(res.between_ratio, rr, 1e-9);
    EXPECT_NEAR(res.combined_statistic, D, 1e-9);
    EXPECT_NEAR(res.df_den, w, 1e-6 * w);
    EXPECT_NEAR(res.p_value, f_sf(D, k, w), 1e-9);
}

TEST(CombineLrtMi, DenominatorDfBranches) {
    EXPECT_TRUE(std::isinf(combined_denominator_df(2, 20, 0.0)));
    const double t = 2.0 * 19.0, r = 0.3;
    EXPECT_NEAR(combined_denominator_df(2, 20, r), 4.0 + (t - 4.0) * std::pow(1.0 + (1.0 - 2.0 / t) / r, 2), 1e-9);
    EXPECT_THROW(combine_lrt_mi({}, Eigen::VectorXd(), 2), CombiningError);
}

TEST(DtpmmRun, ReportShape) {
    RandomStream rs(12);
    const auto dm = maar_data(500, 0.3, 0.4, rs);
    DtpmmOptions opts;
    opts.imputations = 5;
    const auto report = dtpmm_run(dm, opts, RandomStream(3));
    EXPECT_EQ(report.test, "DTPMM");
    ASSERT_EQ(report.mechanisms.size(), 3u);
    ASSERT_EQ(report.decisions.size(), 3u);
    for (const auto& m : report.mechanisms) {
        EXPECT_EQ(m.mi.df_num, 2);
        EXPECT_EQ(m.mi.imputations, 5);
    }
    const auto again = dtpmm_run(dm, opts, RandomStream(3));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(report.mechanisms[k].mi.p_value, again.mechanisms[k].mi.p_value);
    EXPECT_THROW(dtpmm_run(DataMatrix::complete(dm.values().rightCols(2)), opts, RandomStream(1)), NothingToTestError);
}

TEST(DtpmmRun, RowOrderDoesNotChangeTheFittedNull) {
    // with complete data the imputation is the identity, so the test reduces to one LRT
    RandomStream rs(13);
    const auto y = gen_complete(400, 0.3, rs);
    const auto r = logistic_response(y, 0.8, rs);
    PostulatedMechanism mech{0, {3, 4}, {1, 2, 3, 4}};
    const auto direct = lrt_mechanism(y, r, mech);
    std::vector<Eigen::Index> perm(400);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    Eigen::MatrixXd yp = y(perm, Eigen::all);
    Eigen::VectorXd rp = r(perm);
    EXPECT_NEAR(lrt_mechanism(yp, rp, mech).lrt.statistic, direct.lrt.statistic, 1e-8);
}
