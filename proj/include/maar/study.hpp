#ifndef MAAR_STUDY_HPP
#define MAAR_STUDY_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "maar/anova.hpp"
#include "maar/gcopula.hpp"
#include "maar/mechanism.hpp"
#include "maar/report.hpp"

namespace maar {

enum class TestKind { ccm, dtpmm, gc };

std::string to_string(TestKind t);
TestKind parse_test(const std::string& name);

struct DiagnosticSettings {
    double alpha_level = 0.05;
    Correction ccm_correction = Correction::holm;
    int imputations = 20;
    // The study's alternative mechanism lets R_k depend on Y_k as well,
    // unlike the dtpmm_run default.
    bool include_self = true;
    GcOptions gc;
};

struct SimCell {
    Mechanism mechanism = Mechanism::maar;
    std::size_t n = 100;
    double m = 0.2;
    double rho = 0.2;
    TestKind test = TestKind::ccm;
    int reps = 200;
};

struct CellResult {
    SimCell cell;
    int reps_completed = 0;
    int errors = 0;
    std::array<int, kSimIndicators> correct{};
    // Replications whose any-indicator-rejects verdict matches the mechanism.
    int overall_correct = 0;

    double rate(std::size_t indicator) const;
    double overall_rate() const;
};

struct StudyConfig {
    std::vector<Mechanism> mechanisms{Mechanism::maar, Mechanism::maar2, Mechanism::mnaar};
    std::vector<std::size_t> sizes{100, 500, 1000};
    std::vector<double> missing{0.2, 0.4, 0.6};
    std::vector<double> rhos{0.2, 0.4, 0.6, 0.8};
    std::vector<TestKind> tests{TestKind::ccm, TestKind::dtpmm, TestKind::gc};
    int reps = 200;
    std::uint64_t seed = 20190601;
    std::size_t calibration_draws = 100000;
    // 0 keeps every cell; otherwise only the first max_cells cells in grid order.
    std::size_t max_cells = 0;
    DiagnosticSettings settings;

    std::vector<SimCell> cells() const;
};

nlohmann::json to_json(const StudyConfig& config);
StudyConfig study_config_from_json(const nlohmann::json& j);

// Calibrated intercepts keyed by (mechanism, m, rho).
class AlphaCache {
public:
    AlphaCache(std::uint64_t seed, std::size_t draws) : seed_(seed), draws_(draws) {}
    const std::array<double, kSimIndicators>& get(Mechanism mech, double m, double rho);

private:
    std::uint64_t seed_;
    std::size_t draws_;
    std::map<std::tuple<int, long, long>, std::array<double, kSimIndicators>> cache_;
};

// Outcome of one replication: per-indicator decisions, or an error message.
struct ReplicationOutcome {
    bool ok = false;
    std::array<Decision, kSimIndicators> decisions{};
    std::string error;
};

// Data for replication `rep` of a (mechanism, N, m, rho) combination. Shared
// by all diagnostics so tests are compared on identical data sets.
DataMatrix replication_data(const SimCell& cell, const std::array<double, kSimIndicators>& alphas,
                            std::uint64_t study_seed, int rep);

ReplicationOutcome run_replication(const SimCell& cell, const std::array<double, kSimIndicators>& alphas,
                                   const DiagnosticSettings& settings, std::uint64_t study_seed, int rep);

// Replications run on `jobs` worker threads; results do not depend on scheduling.
CellResult run_cell(const SimCell& cell, const std::array<double, kSimIndicators>& alphas,
                    const DiagnosticSettings& settings, std::uint64_t study_seed, unsigned jobs = 1);

std::vector<CellResult> run_study(const StudyConfig& config, unsigned jobs = 1);

// Long-format results; lines starting with '#' carry metadata.
void write_results_csv(const std::vector<CellResult>& results, const StudyConfig& config, std::ostream& out);
std::vector<CellResult> read_results_csv(std::istream& in);

// ANOVA of the overall correct rates with factors Test, N, rho, m, Mechanism.
AnovaTable study_anova(const std::vector<CellResult>& results);
void write_anova_csv(const AnovaTable& table, std::ostream& out);

enum class Margin { by_size_rho_m, by_indicator, by_mechanism };
Margin parse_margin(const std::string& name);

// Margin tables averaged over the remaining factors.
std::string format_margin_text(const std::vector<CellResult>& results, Margin margin);
std::string format_margin_csv(const std::vector<CellResult>& results, Margin margin);

} // namespace maar

#endif
