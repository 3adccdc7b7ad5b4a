#include "maar/ccm.hpp"

#include <algorithm>
#include <map>

#include "maar/errors.hpp"
#include "maar/regression.hpp"

namespace maar {

PairTestRecord ccm_pair_test(const DataMatrix& dm, std::size_t target_col, std::size_t indicator_col) {
    if (target_col == indicator_col) throw DomainError("target and indicator column must differ");
    if (!dm.is_missing_prone(target_col) || !dm.is_missing_prone(indicator_col))
        throw DomainError("both columns of a conditional-means pair must be missing-prone");
    const auto& conditioners = dm.fully_observed_cols();
    if (conditioners.empty()) throw UnsupportedDesignError("conditional-means test needs a fully observed column");

    PairTestRecord rec;
    rec.target_col = target_col;
    rec.indicator_col = indicator_col;

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < dm.n_rows(); ++i) {
        if (dm.observed(i, target_col)) rows.push_back(i);
    }
    rec.n_used = rows.size();

    if (dm.mask().col(target_col) == dm.mask().col(indicator_col)) {
        rec.skipped_reason = SkipReason::same_pattern;
        return rec;
    }
    std::size_t ones = 0;
    for (auto i : rows) ones += dm.observed(i, indicator_col) ? 1 : 0;
    if (ones == 0 || ones == rows.size()) {
        rec.skipped_reason = SkipReason::constant_indicator;
        return rec;
    }
    const auto f = static_cast<Eigen::Index>(conditioners.size());
    const Eigen::Index null_p = 1 + f;
    const Eigen::Index alt_p = 2 * null_p;
    // at least two residual degrees of freedom in the alternative
    if (rows.size() < static_cast<std::size_t>(alt_p + 2)) {
        rec.skipped_reason = SkipReason::too_few_rows;
        return rec;
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd x_alt(n, alt_p);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto i = rows[r];
        const double ind = dm.observed(i, indicator_col) ? 1.0 : 0.0;
        y(r) = dm.value(i, target_col);
        x_alt(r, 0) = 1.0;
        x_alt(r, null_p) = ind;
        for (Eigen::Index c = 0; c < f; ++c) {
            const double v = dm.value(i, conditioners[c]);
            x_alt(r, 1 + c) = v;
            x_alt(r, null_p + 1 + c) = ind * v;
        }
    }
    const auto null_fit = fit_gaussian_ols(x_alt.leftCols(null_p), y);
    const auto alt_fit = fit_gaussian_ols(x_alt, y);
    rec.lrt = lrt(null_fit, alt_fit);
    rec.corrected_p = rec.lrt->p_value;
    return rec;
}

DiagnosticReport ccm_run(const DataMatrix& dm, double alpha_level, Correction correction) {
    if (!(alpha_level > 0.0 && alpha_level < 1.0)) throw DomainError("alpha level must lie in (0, 1)");
    const auto& prone = dm.missing_prone_cols();
    if (prone.size() < 2) throw NothingToTestError("conditional-means test needs at least two missing-prone columns");
    if (dm.fully_observed_cols().empty())
        throw UnsupportedDesignError("conditional-means test needs a fully observed column");

    DiagnosticReport report;
    report.test = "CCM";
    report.alpha_level = alpha_level;
    report.correction = correction;
    report.settings = {{"model", "R_k main effect + R_k x fully observed"}};

    for (auto j : prone) {
        for (auto k : prone) {
            if (j != k) report.pairs.push_back(ccm_pair_test(dm, j, k));
        }
    }

    std::vector<double> raw;
    std::vector<std::size_t> tested;
    for (std::size_t t = 0; t < report.pairs.size(); ++t) {
        if (report.pairs[t].lrt) {
            raw.push_back(report.pairs[t].lrt->p_value);
            tested.push_back(t);
        }
    }
    const auto adjusted = adjust_p_values(raw, correction);
    for (std::size_t u = 0; u < tested.size(); ++u) report.pairs[tested[u]].corrected_p = adjusted[u];

    std::map<std::size_t, IndicatorDecision> by_indicator;
    for (const auto& p : report.pairs) {
        if (!p.lrt) continue;
        auto [it, inserted] = by_indicator.try_emplace(p.indicator_col);
        auto& d = it->second;
        if (inserted) {
            d.indicator_col = p.indicator_col;
            d.evidence = p.corrected_p;
        }
        d.evidence = std::min(d.evidence, p.corrected_p);
        if (p.corrected_p <= alpha_level) d.decision = Decision::reject;
    }
    for (const auto& [k, d] : by_indicator) report.decisions.push_back(d);

    const bool any_same = std::any_of(report.pairs.begin(), report.pairs.end(), [](const PairTestRecord& p) {
        return p.skipped_reason == SkipReason::same_pattern;
    });
    if (tested.empty()) {
        report.warnings.push_back("every pair test was skipped; no indicator decision is available");
    }
    if (any_same) {
        report.warnings.push_back(
            "some missing-prone columns share an identical missingness pattern; the assumption that the "
            "indicator columns are mutually conditionally independent given the data is itself suspect");
    }
    return report;
}

} // namespace maar
