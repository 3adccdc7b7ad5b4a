#include "maar/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "maar/errors.hpp"

namespace maar {

namespace {

std::string col_name(std::size_t j, const std::vector<std::string>& names) {
    if (j < names.size()) return names[j];
    return "Y" + std::to_string(j + 1);
}

std::string ind_name(std::size_t k, const std::vector<std::string>& names) { return "R(" + col_name(k, names) + ")"; }

nlohmann::json number_or_inf(double x) {
    if (std::isinf(x)) return "inf";
    return x;
}

} // namespace

std::string to_string(Decision d) { return d == Decision::reject ? "reject" : "fail_to_reject"; }

std::string to_string(Correction c) {
    switch (c) {
    case Correction::none: return "none";
    case Correction::bonferroni: return "bonferroni";
    case Correction::holm: return "holm";
    }
    return "none";
}

std::string to_string(SkipReason s) {
    switch (s) {
    case SkipReason::same_pattern: return "same_pattern";
    case SkipReason::constant_indicator: return "constant_indicator";
    case SkipReason::too_few_rows: return "too_few_rows";
    }
    return "";
}

Correction parse_correction(const std::string& name) {
    if (name == "none") return Correction::none;
    if (name == "bonferroni") return Correction::bonferroni;
    if (name == "holm") return Correction::holm;
    throw DomainError("unknown multiplicity correction: " + name);
}

Decision DiagnosticReport::decision_for(std::size_t indicator_col) const {
    for (const auto& d : decisions) {
        if (d.indicator_col == indicator_col) return d.decision;
    }
    return Decision::fail_to_reject;
}

bool DiagnosticReport::any_reject() const {
    return std::any_of(decisions.begin(), decisions.end(),
                       [](const IndicatorDecision& d) { return d.decision == Decision::reject; });
}

std::vector<double> adjust_p_values(const std::vector<double>& p, Correction correction) {
    const auto m = p.size();
    std::vector<double> out(p);
    if (m == 0 || correction == Correction::none) return out;
    if (correction == Correction::bonferroni) {
        for (auto& x : out) x = std::min(1.0, x * static_cast<double>(m));
        return out;
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    double running = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        const double adj = std::min(1.0, static_cast<double>(m - r) * p[order[r]]);
        running = std::max(running, adj);
        out[order[r]] = running;
    }
    return out;
}

nlohmann::json to_json(const DiagnosticReport& report, const std::vector<std::string>& names) {
    using nlohmann::json;
    json j;
    j["test"] = report.test;
    j["alpha_level"] = report.alpha_level;
    j["correction"] = to_string(report.correction);
    json settings = json::object();
    for (const auto& [k, v] : report.settings) settings[k] = v;
    j["settings"] = settings;

    if (!report.pairs.empty()) {
        json arr = json::array();
        for (const auto& p : report.pairs) {
            json e;
            e["target"] = p.target_col + 1;
            e["target_name"] = col_name(p.target_col, names);
            e["indicator"] = p.indicator_col + 1;
            e["n_used"] = p.n_used;
            if (p.lrt) {
                e["statistic"] = p.lrt->statistic;
                e["df"] = p.lrt->df;
                e["p_value"] = p.lrt->p_value;
                e["corrected_p"] = p.corrected_p;
            } else {
                e["skipped"] = to_string(*p.skipped_reason);
            }
            arr.push_back(e);
        }
        j["pairs"] = arr;
    }
    if (!report.mechanisms.empty()) {
        json arr = json::array();
        for (const auto& m : report.mechanisms) {
            json e;
            e["indicator"] = m.indicator_col + 1;
            json np = json::array(), ap = json::array();
            for (auto c : m.null_predictors) np.push_back(c + 1);
            for (auto c : m.alt_predictors) ap.push_back(c + 1);
            e["null_predictors"] = np;
            e["alt_predictors"] = ap;
            e["include_self"] = m.include_self;
            e["unusable_imputations"] = m.unusable_imputations;
            e["imputations"] = m.mi.imputations;
            e["per_imputation_stats"] = m.mi.per_imputation_stats;
            e["mean_stat"] = m.mi.mean_stat;
            e["stat_at_average"] = m.mi.stat_at_average;
            e["between_ratio"] = m.mi.between_ratio;
            e["ratio_clamped"] = m.mi.ratio_clamped;
            e["combined_statistic"] = m.mi.combined_statistic;
            e["df_num"] = m.mi.df_num;
            e["df_den"] = number_or_inf(m.mi.df_den);
            e["p_value"] = m.mi.p_value;
            arr.push_back(e);
        }
        j["mechanisms"] = arr;
    }
    if (!report.correlations.empty()) {
        json arr = json::array();
        for (const auto& c : report.correlations) {
            json e;
            e["y"] = c.y_col + 1;
            e["indicator"] = c.indicator_col + 1;
            e["posterior_mean"] = c.posterior_mean;
            e["lower"] = c.lower;
            e["upper"] = c.upper;
            e["tail_probability"] = c.tail_probability;
            e["n_draws"] = c.n_draws;
            e["reject"] = c.reject;
            arr.push_back(e);
        }
        j["correlations"] = arr;
    }
    json dec = json::array();
    for (const auto& d : report.decisions) {
        dec.push_back({{"indicator", d.indicator_col + 1},
                       {"name", ind_name(d.indicator_col, names)},
                       {"decision", to_string(d.decision)},
                       {"evidence", d.evidence}});
    }
    j["decisions"] = dec;
    j["warnings"] = report.warnings;
    return j;
}

std::string to_text(const DiagnosticReport& report, const std::vector<std::string>& names) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "== " << report.test << " (alpha " << report.alpha_level << ", correction " << to_string(report.correction)
       << ") ==\n";
    for (const auto& [k, v] : report.settings) os << "  " << k << " = " << v << '\n';
    for (const auto& p : report.pairs) {
        os << "  " << col_name(p.target_col, names) << " | " << ind_name(p.indicator_col, names) << ": ";
        if (p.lrt) {
            os << "LR " << p.lrt->statistic << " on " << p.lrt->df << " df, p " << p.lrt->p_value << ", corrected p "
               << p.corrected_p << " (n " << p.n_used << ")\n";
        } else {
            os << "skipped (" << to_string(*p.skipped_reason) << ")\n";
        }
    }
    for (const auto& m : report.mechanisms) {
        os << "  " << ind_name(m.indicator_col, names) << ": D " << m.mi.combined_statistic << " ~ F(" << m.mi.df_num
           << ", ";
        if (std::isinf(m.mi.df_den)) os << "inf"; else os << m.mi.df_den;
        os << "), p " << m.mi.p_value << ", r " << m.mi.between_ratio << (m.mi.ratio_clamped ? " (clamped)" : "")
           << ", M " << m.mi.imputations << '\n';
    }
    for (const auto& c : report.correlations) {
        os << "  cor(" << col_name(c.y_col, names) << ", " << ind_name(c.indicator_col, names)
           << " | fully observed): mean " << c.posterior_mean << ", interval [" << c.lower << ", " << c.upper << "]"
           << (c.reject ? " *" : "") << '\n';
    }
    os << "  decisions:\n";
    for (const auto& d : report.decisions) {
        os << "    " << ind_name(d.indicator_col, names) << ": " << to_string(d.decision) << " (evidence " << d.evidence
           << ")\n";
    }
    for (const auto& w : report.warnings) os << "  warning: " << w << '\n';
    return os.str();
}

} // namespace maar
