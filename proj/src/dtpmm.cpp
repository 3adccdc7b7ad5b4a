#include "maar/dtpmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "maar/distributions.hpp"
#include "maar/errors.hpp"

namespace maar {

namespace {

constexpr int kCycles = 10;

Eigen::MatrixXd design(const Eigen::MatrixXd& completed, const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd x(completed.rows(), static_cast<Eigen::Index>(cols.size()) + 1);
    x.col(0).setOnes();
    for (std::size_t c = 0; c < cols.size(); ++c) x.col(static_cast<Eigen::Index>(c) + 1) = completed.col(cols[c]);
    return x;
}

// Average of vectors as first + mean of differences, exact when all inputs agree.
Eigen::VectorXd stable_mean(const std::vector<const Eigen::VectorXd*>& v) {
    const Eigen::VectorXd& first = *v.front();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(first.size());
    for (const auto* x : v) acc += (*x - first);
    return first + acc / static_cast<double>(v.size());
}

double stable_mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x - v.front();
    return v.front() + acc / static_cast<double>(v.size());
}

} // namespace

PostulatedMechanism default_mechanism(const DataMatrix& dm, std::size_t indicator_col, bool include_self) {
    if (!dm.is_missing_prone(indicator_col)) throw DomainError("indicator column must be missing-prone");
    PostulatedMechanism mech;
    mech.indicator_col = indicator_col;
    mech.null_predictors = dm.fully_observed_cols();
    mech.alt_predictors = mech.null_predictors;
    for (auto j : dm.missing_prone_cols()) {
        if (j != indicator_col || include_self) mech.alt_predictors.push_back(j);
    }
    std::sort(mech.alt_predictors.begin(), mech.alt_predictors.end());
    return mech;
}

std::vector<Eigen::MatrixXd> impute_under_null(const DataMatrix& dm, int imputations, const RandomStream& stream) {
    if (imputations < 2) throw DomainError("at least two imputations are needed for the combining rule");
    const auto n = static_cast<Eigen::Index>(dm.n_rows());
    const auto J = static_cast<Eigen::Index>(dm.n_cols());

    std::vector<std::size_t> incomplete;
    for (std::size_t j = 0; j < dm.n_cols(); ++j) {
        if (dm.observed_count(j) < dm.n_rows()) incomplete.push_back(j);
    }
    if (incomplete.empty()) return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(imputations), dm.values());

    const std::size_t min_obs = std::max<std::size_t>(10, 2 * dm.n_cols());
    std::vector<std::vector<Eigen::Index>> obs_rows(dm.n_cols()), mis_rows(dm.n_cols());
    for (auto j : incomplete) {
        for (Eigen::Index i = 0; i < n; ++i) (dm.observed(i, j) ? obs_rows[j] : mis_rows[j]).push_back(i);
        if (obs_rows[j].size() < min_obs)
            throw ImputationError("column " + dm.names()[j] + " has too few observed values to impute (" +
                                  std::to_string(obs_rows[j].size()) + " < " + std::to_string(min_obs) + ")");
    }

    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(imputations));
    for (int m = 0; m < imputations; ++m) {
        RandomStream rs = stream.child(static_cast<std::uint64_t>(m));
        Eigen::MatrixXd y = dm.values();
        for (auto j : incomplete) {
            const auto& obs = obs_rows[j];
            for (auto i : mis_rows[j]) y(i, j) = dm.value(obs[rs.index(obs.size())], j);
        }

        for (int cycle = 0; cycle < kCycles; ++cycle) {
            for (auto j : incomplete) {
                const auto& obs = obs_rows[j];
                const auto& mis = mis_rows[j];
                const auto n_obs = static_cast<Eigen::Index>(obs.size());
                const Eigen::Index p = J;  // intercept + J - 1 other columns
                Eigen::MatrixXd x(n_obs, p);
                Eigen::VectorXd target(n_obs);
                for (Eigen::Index r = 0; r < n_obs; ++r) {
                    const auto i = obs[r];
                    x(r, 0) = 1.0;
                    Eigen::Index c = 1;
                    for (Eigen::Index l = 0; l < J; ++l) {
                        if (l != static_cast<Eigen::Index>(j)) x(r, c++) = y(i, l);
                    }
                    target(r) = y(i, j);
                }
                const Eigen::MatrixXd xtx = x.transpose() * x;
                Eigen::LLT<Eigen::MatrixXd> llt(xtx);
                if (llt.info() != Eigen::Success)
                    throw ImputationError("singular imputation design for column " + dm.names()[j]);
                const Eigen::VectorXd beta_hat = llt.solve(x.transpose() * target);
                const double rss = (target - x * beta_hat).squaredNorm();
                const double df = static_cast<double>(n_obs - p);
                if (!(df > 0.0) || !(rss > 0.0) || !beta_hat.allFinite())
                    throw ImputationError("degenerate imputation model for column " + dm.names()[j]);

                const double sigma = std::sqrt(rss / rs.chi_square(df));
                Eigen::VectorXd z(p);
                for (Eigen::Index c = 0; c < p; ++c) z(c) = rs.normal();
                const Eigen::VectorXd beta =
                    beta_hat + sigma * llt.matrixL().transpose().solve(z);

                for (auto i : mis) {
                    double mu = beta(0);
                    Eigen::Index c = 1;
                    for (Eigen::Index l = 0; l < J; ++l) {
                        if (l != static_cast<Eigen::Index>(j)) mu += beta(c++) * y(i, l);
                    }
                    y(i, j) = mu + sigma * rs.normal();
                }
            }
        }
        out.push_back(std::move(y));
    }
    return out;
}

MechanismFit lrt_mechanism(const Eigen::MatrixXd& completed, const Eigen::VectorXd& response,
                           const PostulatedMechanism& mech) {
    if (!completed.allFinite()) throw DomainError("completed matrix has missing cells");
    if (completed.rows() != response.size()) throw DomainError("response length does not match completed rows");
    for (auto c : mech.null_predictors) {
        if (std::find(mech.alt_predictors.begin(), mech.alt_predictors.end(), c) == mech.alt_predictors.end())
            throw DomainError("null predictors must be a subset of the alternative predictors");
    }
    if (mech.alt_predictors.size() <= mech.null_predictors.size())
        throw DomainError("alternative mechanism adds no predictors (df = 0)");

    MechanismFit fit;
    fit.x_null = design(completed, mech.null_predictors);
    fit.x_alt = design(completed, mech.alt_predictors);
    fit.null_fit = fit_logistic(fit.x_null, response);
    fit.alt_fit = fit_logistic(fit.x_alt, response);
    fit.lrt = lrt(fit.null_fit, fit.alt_fit);
    return fit;
}

double combined_denominator_df(int df_num, int imputations, double between_ratio) {
    if (!(between_ratio > 0.0)) return std::numeric_limits<double>::infinity();
    const double k = df_num;
    const double t = k * (imputations - 1);
    if (t > 4.0) {
        const double a = 1.0 + (1.0 - 2.0 / t) / between_ratio;
        return 4.0 + (t - 4.0) * a * a;
    }
    const double a = 1.0 + 1.0 / between_ratio;
    return 0.5 * t * (1.0 + 1.0 / k) * a * a;
}

MIResult combine_lrt_mi(const std::vector<MechanismFit>& fits, const Eigen::VectorXd& response, int df) {
    if (fits.size() < 2) throw CombiningError("fewer than two usable imputations");
    if (df <= 0) throw DomainError("combining rule needs positive degrees of freedom");
    const auto m = static_cast<double>(fits.size());
    const double k = df;

    MIResult res;
    res.imputations = static_cast<int>(fits.size());
    res.df_num = df;
    for (const auto& f : fits) res.per_imputation_stats.push_back(f.lrt.statistic);
    res.mean_stat = stable_mean(res.per_imputation_stats);

    std::vector<const Eigen::VectorXd*> null_coefs, alt_coefs;
    for (const auto& f : fits) {
        null_coefs.push_back(&f.null_fit.coefficients);
        alt_coefs.push_back(&f.alt_fit.coefficients);
    }
    const Eigen::VectorXd null_bar = stable_mean(null_coefs);
    const Eigen::VectorXd alt_bar = stable_mean(alt_coefs);

    std::vector<double> at_avg;
    for (const auto& f : fits) {
        at_avg.push_back(2.0 * (logistic_loglik(f.x_alt, response, alt_bar) -
                                logistic_loglik(f.x_null, response, null_bar)));
    }
    res.stat_at_average = stable_mean(at_avg);

    const double ratio = (m + 1.0) * (res.mean_stat - res.stat_at_average) / (k * (m - 1.0));
    res.ratio_clamped = ratio < 0.0;
    res.between_ratio = std::max(0.0, ratio);
    res.combined_statistic = std::max(0.0, res.stat_at_average / (k * (1.0 + res.between_ratio)));
    res.df_den = combined_denominator_df(df, res.imputations, res.between_ratio);
    res.p_value = f_sf(res.combined_statistic, k, res.df_den);
    return res;
}

DiagnosticReport dtpmm_run(const DataMatrix& dm, const DtpmmOptions& options, const RandomStream& stream) {
    if (!(options.alpha_level > 0.0 && options.alpha_level < 1.0))
        throw DomainError("alpha level must lie in (0, 1)");
    const auto& prone = dm.missing_prone_cols();
    if (prone.empty()) throw NothingToTestError("no missing-prone columns");

    DiagnosticReport report;
    report.test = "DTPMM";
    report.alpha_level = options.alpha_level;
    report.correction = Correction::none;
    report.settings = {{"imputations", std::to_string(options.imputations)},
                       {"include_self", options.include_self ? "true" : "false"},
                       {"imputation_model", "chained Gaussian linear regressions, 10 cycles"}};

    const auto completed = impute_under_null(dm, options.imputations, stream);

    for (auto k : prone) {
        const auto mech = default_mechanism(dm, k, options.include_self);
        if (mech.alt_predictors.size() == mech.null_predictors.size()) {
            report.warnings.push_back("no alternative predictors for R(" + dm.names()[k] + "); not tested");
            continue;
        }
        if (dm.observed_count(k) == dm.n_rows()) {
            report.warnings.push_back("R(" + dm.names()[k] + ") is constant; not tested");
            continue;
        }
        Eigen::VectorXd response(static_cast<Eigen::Index>(dm.n_rows()));
        for (std::size_t i = 0; i < dm.n_rows(); ++i) response(i) = dm.observed(i, k) ? 1.0 : 0.0;

        MechanismTestRecord rec;
        rec.indicator_col = k;
        rec.null_predictors = mech.null_predictors;
        rec.alt_predictors = mech.alt_predictors;
        rec.include_self = options.include_self;

        std::vector<MechanismFit> fits;
        for (const auto& y : completed) {
            try {
                fits.push_back(lrt_mechanism(y, response, mech));
            } catch (const SeparationError&) {
                ++rec.unusable_imputations;
            } catch (const ConvergenceError&) {
                ++rec.unusable_imputations;
            }
        }
        const int df = static_cast<int>(mech.alt_predictors.size() - mech.null_predictors.size());
        rec.mi = combine_lrt_mi(fits, response, df);
        if (rec.mi.ratio_clamped) {
            report.warnings.push_back("R(" + dm.names()[k] +
                                      "): between-imputation ratio was negative and clamped to 0");
        }
        if (rec.unusable_imputations > 0) {
            report.warnings.push_back("R(" + dm.names()[k] + "): " + std::to_string(rec.unusable_imputations) +
                                      " imputation(s) dropped after separation or non-convergence");
        }

        IndicatorDecision d;
        d.indicator_col = k;
        d.evidence = rec.mi.p_value;
        d.decision = rec.mi.p_value <= options.alpha_level ? Decision::reject : Decision::fail_to_reject;
        report.decisions.push_back(d);
        report.mechanisms.push_back(std::move(rec));
    }
    return report;
}

} // namespace maar
