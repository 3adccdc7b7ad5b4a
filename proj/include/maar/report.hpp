#ifndef MAAR_REPORT_HPP
#define MAAR_REPORT_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "maar/regression.hpp"

namespace maar {

enum class Decision { fail_to_reject, reject };
enum class Correction { none, bonferroni, holm };
enum class SkipReason { same_pattern, constant_indicator, too_few_rows };

std::string to_string(Decision d);
std::string to_string(Correction c);
std::string to_string(SkipReason s);
Correction parse_correction(const std::string& name);

// One conditional-means comparison: target column j against indicator column k.
struct PairTestRecord {
    std::size_t target_col = 0;
    std::size_t indicator_col = 0;
    std::optional<LrtResult> lrt;
    std::optional<SkipReason> skipped_reason;
    std::size_t n_used = 0;
    // Family-wise corrected p-value; only meaningful when lrt is present.
    double corrected_p = 1.0;
};

// Likelihood-ratio tests combined across multiple imputations.
struct MIResult {
    int imputations = 0;
    std::vector<double> per_imputation_stats;
    double mean_stat = 0.0;        // average of the per-imputation statistics
    double stat_at_average = 0.0;  // average statistic re-evaluated at pooled coefficients
    double between_ratio = 0.0;    // relative increase in variance, floored at 0
    bool ratio_clamped = false;
    double combined_statistic = 0.0;
    int df_num = 0;
    double df_den = 0.0;  // +infinity when the between-imputation component vanishes
    double p_value = 1.0;
};

struct MechanismTestRecord {
    std::size_t indicator_col = 0;
    std::vector<std::size_t> null_predictors;
    std::vector<std::size_t> alt_predictors;
    bool include_self = false;
    std::size_t unusable_imputations = 0;
    MIResult mi;
};

struct CorrelationTestRecord {
    std::size_t y_col = 0;
    std::size_t indicator_col = 0;
    double posterior_mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    // Two-sided posterior tail mass at zero: 2 min(P(rho > 0), P(rho < 0)).
    double tail_probability = 1.0;
    std::size_t n_draws = 0;
    bool reject = false;
};

struct IndicatorDecision {
    std::size_t indicator_col = 0;
    Decision decision = Decision::fail_to_reject;
    // Smallest p-value (or posterior tail mass) supporting the decision; lower is stronger.
    double evidence = 1.0;
};

struct DiagnosticReport {
    std::string test;
    double alpha_level = 0.05;
    Correction correction = Correction::none;
    std::vector<PairTestRecord> pairs;
    std::vector<MechanismTestRecord> mechanisms;
    std::vector<CorrelationTestRecord> correlations;
    std::vector<IndicatorDecision> decisions;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, std::string>> settings;

    // Indicators without a decision (every test skipped) count as fail_to_reject.
    Decision decision_for(std::size_t indicator_col) const;
    bool any_reject() const;
};

// Multiplicity-adjusted p-values, same order as the input.
std::vector<double> adjust_p_values(const std::vector<double>& p, Correction correction);

// Column indices are written 1-based.
nlohmann::json to_json(const DiagnosticReport& report, const std::vector<std::string>& names = {});
std::string to_text(const DiagnosticReport& report, const std::vector<std::string>& names = {});

} // namespace maar

#endif
