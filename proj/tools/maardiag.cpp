#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maar/ccm.hpp"
#include "maar/data_matrix.hpp"
#include "maar/dtpmm.hpp"
#include "maar/errors.hpp"
#include "maar/gcopula.hpp"
#include "maar/study.hpp"

using namespace maar;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFlagged = 2;

struct DiagnoseArgs {
    std::string input;
    std::string na_token = "NA";
    std::vector<std::string> tests{"CCM", "DTPMM", "GC"};
    double alpha = 0.05;
    std::string correction = "holm";
    int imputations = 20;
    bool include_self = false;
    int gibbs_iters = 5000;
    int burn_in = 1000;
    int thin = 4;
    double credible = 0.95;
    std::uint64_t seed = 20190601;
    std::string out;
    std::string format = "text";
};

struct SimulateArgs {
    std::string grid;
    std::vector<std::string> mechanisms, tests;
    std::vector<std::size_t> sizes;
    std::vector<double> missing, rhos;
    int reps = 0;
    std::size_t cells = 0;
    std::uint64_t seed = 0;
    double alpha = -1.0;
    int imputations = 0;
    int gibbs_iters = 0;
    int burn_in = -1;
    int thin = 0;
    std::size_t calibration_draws = 0;
    bool exclude_self = false;
    unsigned jobs = 0;
    std::string out = "maar_study";
};

struct GenerateArgs {
    std::string mechanism = "MAAR";
    std::size_t n = 1000;
    double m = 0.4;
    double rho = 0.4;
    std::uint64_t seed = 20190601;
    std::string na_token = "NA";
    std::string out;
};

struct ReportArgs {
    std::string input;
    std::string margin = "size-rho-m";
    std::string format = "text";
    std::string out;
    bool anova = false;
};

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

std::string indicator_label(std::size_t k, const DataMatrix& dm) {
    return "R(" + (k < dm.names().size() ? dm.names()[k] : "Y" + std::to_string(k + 1)) + ")";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed for " + path);
}

// Either JSON or a results CSV carrying a "# config {...}" line.
json read_grid(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open grid file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string text = ss.str();
    const std::string tag = "# config ";
    const auto pos = text.find(tag);
    try {
        if (pos != std::string::npos) {
            const auto end = text.find('\n', pos);
            return json::parse(text.substr(pos + tag.size(), end - pos - tag.size()));
        }
        return json::parse(text);
    } catch (const json::exception& e) {
        throw StructureError("grid file " + path + " is not valid JSON: " + e.what());
    }
}

struct Ranked {
    std::size_t col = 0;
    int flagged_by = 0;
    int tested_by = 0;
    double evidence = 1.0;
    std::map<std::string, std::string> per_test;
};

int cmd_diagnose(const DiagnoseArgs& a) {
    std::vector<TestKind> kinds;
    for (const auto& name : a.tests) kinds.push_back(parse_test(name));
    parse_correction(a.correction);
    const DataMatrix dm = load_csv(a.input, a.na_token);
    const std::string fmt = a.format;

    json meta{{"tool", "maardiag"},
              {"version", MAAR_VERSION},
              {"seed", a.seed},
              {"config",
               {{"input", a.input},
                {"na_token", a.na_token},
                {"tests", a.tests},
                {"alpha", a.alpha},
                {"correction", a.correction},
                {"imputations", a.imputations},
                {"include_self", a.include_self},
                {"gibbs_iters", a.gibbs_iters},
                {"burn_in", a.burn_in},
                {"thin", a.thin},
                {"credible_level", a.credible}}}};

    if (dm.missing_prone_cols().empty()) {
        const std::string msg = "J* = 0, nothing to diagnose";
        if (!a.out.empty()) {
            json j{{"meta", meta}, {"message", msg}, {"reports", json::array()}, {"ranking", json::array()}};
            write_file(a.out + ".json", j.dump(2) + "\n");
        }
        std::cout << msg << '\n';
        return kExitOk;
    }

    std::vector<std::pair<std::string, DiagnosticReport>> reports;
    std::vector<std::pair<std::string, std::string>> failures;
    for (const TestKind kind : kinds) {
        try {
            switch (kind) {
            case TestKind::ccm:
                reports.emplace_back("CCM", ccm_run(dm, a.alpha, parse_correction(a.correction)));
                break;
            case TestKind::dtpmm: {
                DtpmmOptions o;
                o.alpha_level = a.alpha;
                o.imputations = a.imputations;
                o.include_self = a.include_self;
                reports.emplace_back("DTPMM", dtpmm_run(dm, o, RandomStream(derive_seed(a.seed, 1))));
                break;
            }
            case TestKind::gc: {
                GcOptions o;
                o.sampler.n_iter = a.gibbs_iters;
                o.sampler.burn_in = a.burn_in;
                o.sampler.thin = a.thin;
                o.credible_level = a.credible;
                reports.emplace_back("GC", gc_run(dm, o, derive_seed(a.seed, 2)));
                break;
            }
            }
        } catch (const Error& e) {
            failures.emplace_back(to_string(kind), e.what());
            std::cerr << "maardiag: " << to_string(kind) << " failed: " << e.what() << '\n';
        }
    }
    if (reports.empty()) throw std::runtime_error("every selected test failed");

    // Rank indicators: more tests flagging first, then stronger evidence.
    std::vector<Ranked> ranking;
    for (auto k : dm.missing_prone_cols()) {
        Ranked r;
        r.col = k;
        for (const auto& [name, rep] : reports) {
            auto it = std::find_if(rep.decisions.begin(), rep.decisions.end(),
                                   [k](const IndicatorDecision& d) { return d.indicator_col == k; });
            if (it == rep.decisions.end()) {
                r.per_test[name] = "not_tested";
                continue;
            }
            ++r.tested_by;
            r.per_test[name] = to_string(it->decision);
            if (it->decision == Decision::reject) ++r.flagged_by;
            r.evidence = std::min(r.evidence, it->evidence);
        }
        ranking.push_back(r);
    }
    std::stable_sort(ranking.begin(), ranking.end(), [](const Ranked& x, const Ranked& y) {
        if (x.flagged_by != y.flagged_by) return x.flagged_by > y.flagged_by;
        return x.evidence < y.evidence;
    });
    const bool flagged = std::any_of(ranking.begin(), ranking.end(), [](const Ranked& r) { return r.flagged_by > 0; });

    json j;
    j["meta"] = meta;
    j["n_rows"] = dm.n_rows();
    j["missing_prone"] = json::array();
    for (auto k : dm.missing_prone_cols()) j["missing_prone"].push_back(k + 1);
    j["reports"] = json::array();
    for (const auto& [name, rep] : reports) j["reports"].push_back(to_json(rep, dm.names()));
    j["failures"] = json::array();
    for (const auto& [name, msg] : failures) j["failures"].push_back({{"test", name}, {"error", msg}});
    j["ranking"] = json::array();
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        const auto& r = ranking[i];
        j["ranking"].push_back({{"rank", i + 1},
                                {"indicator", r.col + 1},
                                {"name", indicator_label(r.col, dm)},
                                {"flagged_by", r.flagged_by},
                                {"tested_by", r.tested_by},
                                {"evidence", r.evidence},
                                {"decisions", r.per_test}});
    }

    std::ostringstream text;
    text << "# maardiag " << MAAR_VERSION << " seed " << a.seed << '\n';
    text << "# config " << meta["config"].dump() << '\n';
    text << "input " << a.input << ": " << dm.n_rows() << " rows, " << dm.n_cols() << " columns, J* = "
         << dm.missing_prone_cols().size() << "\n\n";
    for (const auto& [name, rep] : reports) text << to_text(rep, dm.names()) << '\n';
    for (const auto& [name, msg] : failures) text << "== " << name << " failed: " << msg << " ==\n\n";
    text << "ranking by evidence of violation:\n";
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        const auto& r = ranking[i];
        text << "  " << i + 1 << ". " << std::left << std::setw(12) << indicator_label(r.col, dm) << std::right
             << " flagged by " << r.flagged_by << "/" << r.tested_by << ", evidence " << std::setprecision(4)
             << r.evidence << '\n';
    }

    std::ostringstream csv;
    csv << "# maardiag " << MAAR_VERSION << '\n' << "# config " << meta.dump() << '\n';
    csv << "rank,indicator,name,flagged_by,tested_by,evidence";
    for (const auto& [name, rep] : reports) csv << ',' << name;
    csv << '\n';
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        const auto& r = ranking[i];
        csv << i + 1 << ',' << r.col + 1 << ',' << indicator_label(r.col, dm) << ',' << r.flagged_by << ','
            << r.tested_by << ',' << std::setprecision(17) << r.evidence;
        for (const auto& [name, rep] : reports) csv << ',' << r.per_test.at(name);
        csv << '\n';
    }

    if (a.out.empty()) {
        if (fmt == "json") std::cout << j.dump(2) << '\n';
        else if (fmt == "csv") std::cout << csv.str();
        else std::cout << text.str();
    } else {
        if (fmt == "json" || fmt == "all") write_file(a.out + ".json", j.dump(2) + "\n");
        if (fmt == "csv" || fmt == "all") write_file(a.out + ".csv", csv.str());
        if (fmt == "text" || fmt == "all") write_file(a.out + ".txt", text.str());
        std::cout << (flagged ? "flagged:" : "no indicator flagged");
        for (const auto& r : ranking)
            if (r.flagged_by > 0) std::cout << ' ' << indicator_label(r.col, dm);
        std::cout << '\n';
    }
    return flagged ? kExitFlagged : kExitOk;
}

int cmd_simulate(const SimulateArgs& a) {
    StudyConfig cfg = a.grid.empty() ? StudyConfig{} : study_config_from_json(read_grid(a.grid));
    if (!a.mechanisms.empty()) {
        cfg.mechanisms.clear();
        for (const auto& m : a.mechanisms) cfg.mechanisms.push_back(parse_mechanism(upper(m)));
    }
    if (!a.tests.empty()) {
        cfg.tests.clear();
        for (const auto& t : a.tests) cfg.tests.push_back(parse_test(t));
    }
    if (!a.sizes.empty()) cfg.sizes = a.sizes;
    if (!a.missing.empty()) cfg.missing = a.missing;
    if (!a.rhos.empty()) cfg.rhos = a.rhos;
    if (a.reps > 0) cfg.reps = a.reps;
    if (a.cells > 0) cfg.max_cells = a.cells;
    if (a.seed > 0) cfg.seed = a.seed;
    if (a.alpha > 0.0) cfg.settings.alpha_level = a.alpha;
    if (a.imputations > 0) cfg.settings.imputations = a.imputations;
    if (a.gibbs_iters > 0) cfg.settings.gc.sampler.n_iter = a.gibbs_iters;
    if (a.burn_in >= 0) cfg.settings.gc.sampler.burn_in = a.burn_in;
    if (a.thin > 0) cfg.settings.gc.sampler.thin = a.thin;
    if (a.calibration_draws > 0) cfg.calibration_draws = a.calibration_draws;
    if (a.exclude_self) cfg.settings.include_self = false;

    const unsigned jobs = a.jobs > 0 ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
    const auto results = run_study(cfg, jobs);

    std::ostringstream res;
    write_results_csv(results, cfg, res);
    write_file(a.out + ".results.csv", res.str());
    int errors = 0;
    for (const auto& r : results) errors += r.errors;
    std::cout << "wrote " << a.out << ".results.csv (" << results.size() << " cells, " << errors
              << " failed replications)\n";

    // ANOVA only makes sense on a complete factorial with replicated levels.
    try {
        const auto table = study_anova(results);
        std::ostringstream an;
        an << "# maardiag " << MAAR_VERSION << '\n' << "# config " << to_json(cfg).dump() << '\n';
        write_anova_csv(table, an);
        write_file(a.out + ".anova.csv", an.str());
        std::cout << "wrote " << a.out << ".anova.csv\n";
    } catch (const DomainError& e) {
        std::cout << "anova skipped: " << e.what() << '\n';
    }
    return kExitOk;
}

// One simulated data set, written as CSV.
int cmd_generate(const GenerateArgs& a) {
    SimCell cell;
    cell.mechanism = parse_mechanism(upper(a.mechanism));
    cell.n = a.n;
    cell.m = a.m;
    cell.rho = a.rho;
    AlphaCache cache(a.seed, 100000);
    const auto dm = replication_data(cell, cache.get(cell.mechanism, cell.m, cell.rho), a.seed, 0);
    if (a.out.empty()) write_csv(dm, std::cout, a.na_token);
    else save_csv(dm, a.out, a.na_token);
    return kExitOk;
}

int cmd_report(const ReportArgs& a) {
    std::ifstream f(a.input);
    if (!f) throw std::runtime_error("cannot open results file " + a.input);
    std::string config_line;
    {
        std::string line;
        while (std::getline(f, line) && !line.empty() && line[0] == '#')
            if (line.rfind("# config ", 0) == 0) config_line = line;
        f.clear();
        f.seekg(0);
    }
    const auto results = read_results_csv(f);
    std::string body;
    if (a.anova) {
        std::ostringstream os;
        write_anova_csv(study_anova(results), os);
        body = os.str();
    } else {
        const Margin margin = parse_margin(a.margin);
        body = a.format == "csv" ? format_margin_csv(results, margin) : format_margin_text(results, margin);
    }
    std::ostringstream os;
    os << "# maardiag " << MAAR_VERSION << " report of " << a.input << '\n';
    if (!config_line.empty()) os << config_line << '\n';
    os << body;
    if (a.out.empty()) std::cout << os.str();
    else write_file(a.out, os.str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diagnostics for the missing-always-at-random assumption"};
    app.set_version_flag("--version", std::string(MAAR_VERSION));
    app.require_subcommand(1);

    DiagnoseArgs d;
    auto* diag = app.add_subcommand("diagnose", "Run CCM, DTPMM and GC on a CSV data set");
    diag->add_option("--input,-i", d.input, "CSV file; first row holds column names")->required()->envname("MAARDIAG_INPUT");
    diag->add_option("--na-token", d.na_token, "Token marking missing cells")->envname("MAARDIAG_NA_TOKEN");
    diag->add_option("--tests", d.tests, "Subset of CCM, DTPMM, GC")->delimiter(',')->envname("MAARDIAG_TESTS");
    diag->add_option("--alpha", d.alpha, "Significance level")->check(CLI::Range(0.0, 1.0))->envname("MAARDIAG_ALPHA");
    diag->add_option("--correction", d.correction, "CCM multiplicity correction: holm, bonferroni, none")
        ->envname("MAARDIAG_CORRECTION");
    diag->add_option("--imputations", d.imputations, "DTPMM imputations")->check(CLI::PositiveNumber)
        ->envname("MAARDIAG_IMPUTATIONS");
    diag->add_flag("--include-self", d.include_self, "DTPMM: let R_k depend on its own column");
    diag->add_option("--gibbs-iters", d.gibbs_iters, "GC sampler iterations")->envname("MAARDIAG_GIBBS_ITERS");
    diag->add_option("--burn-in", d.burn_in, "GC burn-in")->envname("MAARDIAG_BURN_IN");
    diag->add_option("--thin", d.thin, "GC thinning")->envname("MAARDIAG_THIN");
    diag->add_option("--credible", d.credible, "GC credible level")->envname("MAARDIAG_CREDIBLE");
    diag->add_option("--seed", d.seed, "Random seed")->envname("MAARDIAG_SEED");
    diag->add_option("--out,-o", d.out, "Output prefix; stdout when omitted")->envname("MAARDIAG_OUT");
    diag->add_option("--format", d.format, "text, json, csv or all")
        ->check(CLI::IsMember({"text", "json", "csv", "all"}))->envname("MAARDIAG_FORMAT");

    SimulateArgs s;
    auto* sim = app.add_subcommand("simulate", "Run the factorial simulation study");
    sim->add_option("--grid", s.grid, "JSON study config, or a results CSV to rerun")->envname("MAARDIAG_GRID");
    sim->add_option("--mechanisms", s.mechanisms, "Subset of MAAR, MAAR2, MNAAR")->delimiter(',');
    sim->add_option("--sizes", s.sizes, "Sample sizes")->delimiter(',');
    sim->add_option("--missing", s.missing, "Missing proportions")->delimiter(',');
    sim->add_option("--rhos", s.rhos, "Correlations")->delimiter(',');
    sim->add_option("--tests", s.tests, "Subset of CCM, DTPMM, GC")->delimiter(',')->envname("MAARDIAG_TESTS");
    sim->add_option("--reps", s.reps, "Replications per cell")->envname("MAARDIAG_REPS");
    sim->add_option("--cells", s.cells, "Keep only the first N cells of the grid")->envname("MAARDIAG_CELLS");
    sim->add_option("--seed", s.seed, "Study seed")->envname("MAARDIAG_SEED");
    sim->add_option("--alpha", s.alpha, "Significance level")->envname("MAARDIAG_ALPHA");
    sim->add_option("--imputations", s.imputations, "DTPMM imputations")->envname("MAARDIAG_IMPUTATIONS");
    sim->add_option("--gibbs-iters", s.gibbs_iters, "GC sampler iterations")->envname("MAARDIAG_GIBBS_ITERS");
    sim->add_option("--burn-in", s.burn_in, "GC burn-in")->envname("MAARDIAG_BURN_IN");
    sim->add_option("--thin", s.thin, "GC thinning")->envname("MAARDIAG_THIN");
    sim->add_flag("--exclude-self", s.exclude_self, "DTPMM: drop Y_k from R_k's alternative model");
    sim->add_option("--calibration-draws", s.calibration_draws, "Monte Carlo rows for intercept calibration");
    sim->add_option("--jobs,-j", s.jobs, "Worker threads; default all cores")->envname("MAARDIAG_JOBS");
    sim->add_option("--out,-o", s.out, "Output prefix")->envname("MAARDIAG_OUT");

    GenerateArgs g;
    auto* gen = app.add_subcommand("generate", "Write one simulated data set as CSV");
    gen->add_option("--mechanism", g.mechanism, "MAAR, MAAR2 or MNAAR");
    gen->add_option("--n", g.n, "Rows")->check(CLI::PositiveNumber);
    gen->add_option("--m", g.m, "Missing proportion per missing-prone column");
    gen->add_option("--rho", g.rho, "Equicorrelation");
    gen->add_option("--seed", g.seed, "Random seed")->envname("MAARDIAG_SEED");
    gen->add_option("--na-token", g.na_token, "Token marking missing cells");
    gen->add_option("--out,-o", g.out, "Output CSV; stdout when omitted");

    ReportArgs r;
    auto* rep = app.add_subcommand("report", "Summarize a results file into margin tables");
    rep->add_option("--input,-i", r.input, "Results CSV from simulate")->required()->envname("MAARDIAG_INPUT");
    rep->add_option("--margin", r.margin, "size-rho-m, indicator or mechanism")->envname("MAARDIAG_MARGIN");
    rep->add_flag("--anova", r.anova, "Print the ANOVA table instead of a margin");
    rep->add_option("--format", r.format, "text or csv")->check(CLI::IsMember({"text", "csv"}))
        ->envname("MAARDIAG_FORMAT");
    rep->add_option("--out,-o", r.out, "Output file; stdout when omitted")->envname("MAARDIAG_OUT");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (*diag) return cmd_diagnose(d);
        if (*sim) return cmd_simulate(s);
        if (*rep) return cmd_report(r);
        if (*gen) return cmd_generate(g);
    } catch (const std::exception& e) {
        std::cerr << "maardiag: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
