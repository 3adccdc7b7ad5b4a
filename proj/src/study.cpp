#include "maar/study.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "maar/ccm.hpp"
#include "maar/dtpmm.hpp"
#include "maar/errors.hpp"

namespace maar {

namespace {

constexpr std::uint64_t kCalibrationTag = 0x63616c6962ULL;
constexpr std::uint64_t kDataTag = 0x64617461ULL;
constexpr std::uint64_t kDiagnosticTag = 0x64696167ULL;

std::uint64_t mix(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = seed;
    for (auto k : keys) s = derive_seed(s, k);
    return s;
}

std::uint64_t level_key(double x) { return static_cast<std::uint64_t>(std::llround(x * 1e6)); }

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

std::string fixed2(double x) {
    if (std::isnan(x)) return "  nan";
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << x;
    return os.str();
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t row, std::size_t col) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("malformed number '" + s + "'", row, col);
    return x;
}

long parse_int(const std::string& s, std::size_t row, std::size_t col) {
    long x = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("malformed integer '" + s + "'", row, col);
    return x;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace

std::string to_string(TestKind t) {
    switch (t) {
    case TestKind::ccm: return "CCM";
    case TestKind::dtpmm: return "DTPMM";
    case TestKind::gc: return "GC";
    }
    return "";
}

TestKind parse_test(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (up == "CCM") return TestKind::ccm;
    if (up == "DTPMM") return TestKind::dtpmm;
    if (up == "GC") return TestKind::gc;
    throw DomainError("unknown diagnostic test: " + name);
}

double CellResult::rate(std::size_t indicator) const {
    if (reps_completed == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(correct.at(indicator)) / reps_completed;
}

double CellResult::overall_rate() const {
    if (reps_completed == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(overall_correct) / reps_completed;
}

std::vector<SimCell> StudyConfig::cells() const {
    std::vector<SimCell> out;
    for (auto mech : mechanisms)
        for (auto n : sizes)
            for (auto m : missing)
                for (auto rho : rhos)
                    for (auto t : tests) out.push_back({mech, n, m, rho, t, reps});
    if (max_cells > 0 && out.size() > max_cells) out.resize(max_cells);
    return out;
}

nlohmann::json to_json(const StudyConfig& c) {
    nlohmann::json j;
    std::vector<std::string> mechs, tests;
    for (auto m : c.mechanisms) mechs.push_back(to_string(m));
    for (auto t : c.tests) tests.push_back(to_string(t));
    j["grid"] = {{"mechanism", mechs}, {"N", c.sizes}, {"m", c.missing}, {"rho", c.rhos}, {"test", tests}};
    j["reps"] = c.reps;
    j["seed"] = c.seed;
    j["calibration_draws"] = c.calibration_draws;
    j["max_cells"] = c.max_cells;
    j["alpha"] = c.settings.alpha_level;
    j["ccm"] = {{"correction", to_string(c.settings.ccm_correction)}};
    j["dtpmm"] = {{"imputations", c.settings.imputations}, {"include_self", c.settings.include_self}};
    j["gc"] = {{"n_iter", c.settings.gc.sampler.n_iter},
               {"burn_in", c.settings.gc.sampler.burn_in},
               {"thin", c.settings.gc.sampler.thin},
               {"credible_level", c.settings.gc.credible_level}};
    return j;
}

StudyConfig study_config_from_json(const nlohmann::json& j) {
    StudyConfig c;
    try {
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            if (g.contains("mechanism")) {
                c.mechanisms.clear();
                for (const auto& s : g.at("mechanism")) c.mechanisms.push_back(parse_mechanism(s.get<std::string>()));
            }
            if (g.contains("N")) c.sizes = g.at("N").get<std::vector<std::size_t>>();
            if (g.contains("m")) c.missing = g.at("m").get<std::vector<double>>();
            if (g.contains("rho")) c.rhos = g.at("rho").get<std::vector<double>>();
            if (g.contains("test")) {
                c.tests.clear();
                for (const auto& s : g.at("test")) c.tests.push_back(parse_test(s.get<std::string>()));
            }
        }
        c.reps = j.value("reps", c.reps);
        c.seed = j.value("seed", c.seed);
        c.calibration_draws = j.value("calibration_draws", c.calibration_draws);
        c.max_cells = j.value("max_cells", c.max_cells);
        c.settings.alpha_level = j.value("alpha", c.settings.alpha_level);
        if (j.contains("ccm")) {
            c.settings.ccm_correction =
                parse_correction(j.at("ccm").value("correction", to_string(c.settings.ccm_correction)));
        }
        if (j.contains("dtpmm")) {
            c.settings.imputations = j.at("dtpmm").value("imputations", c.settings.imputations);
            c.settings.include_self = j.at("dtpmm").value("include_self", c.settings.include_self);
        }
        if (j.contains("gc")) {
            const auto& g = j.at("gc");
            c.settings.gc.sampler.n_iter = g.value("n_iter", c.settings.gc.sampler.n_iter);
            c.settings.gc.sampler.burn_in = g.value("burn_in", c.settings.gc.sampler.burn_in);
            c.settings.gc.sampler.thin = g.value("thin", c.settings.gc.sampler.thin);
            c.settings.gc.credible_level = g.value("credible_level", c.settings.gc.credible_level);
        }
    } catch (const nlohmann::json::exception& e) {
        throw StructureError(std::string("malformed study configuration: ") + e.what());
    }
    if (c.reps <= 0) throw DomainError("reps must be positive");
    return c;
}

const std::array<double, kSimIndicators>& AlphaCache::get(Mechanism mech, double m, double rho) {
    const auto key = std::make_tuple(static_cast<int>(mech), std::lround(m * 1e6), std::lround(rho * 1e6));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    RandomStream stream(mix(seed_, {kCalibrationTag, static_cast<std::uint64_t>(mech), level_key(m), level_key(rho)}));
    auto alphas = calibrate_alphas(mechanism_spec(mech), m, rho, stream, draws_);
    return cache_.emplace(key, alphas).first->second;
}

DataMatrix replication_data(const SimCell& cell, const std::array<double, kSimIndicators>& alphas,
                            std::uint64_t study_seed, int rep) {
    RandomStream stream(mix(study_seed, {kDataTag, static_cast<std::uint64_t>(cell.mechanism), cell.n,
                                         level_key(cell.m), level_key(cell.rho), static_cast<std::uint64_t>(rep)}));
    const Eigen::MatrixXd y = gen_complete(cell.n, cell.rho, stream);
    const MaskMatrix mask = apply_mechanism(y, mechanism_spec(cell.mechanism), alphas, stream);
    return simulated_data(y, mask);
}

ReplicationOutcome run_replication(const SimCell& cell, const std::array<double, kSimIndicators>& alphas,
                                   const DiagnosticSettings& settings, std::uint64_t study_seed, int rep) {
    ReplicationOutcome out;
    try {
        const DataMatrix dm = replication_data(cell, alphas, study_seed, rep);
        const std::uint64_t diag_seed =
            mix(study_seed, {kDiagnosticTag, static_cast<std::uint64_t>(cell.mechanism), cell.n, level_key(cell.m),
                             level_key(cell.rho), static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(cell.test)});
        DiagnosticReport report;
        switch (cell.test) {
        case TestKind::ccm:
            report = ccm_run(dm, settings.alpha_level, settings.ccm_correction);
            break;
        case TestKind::dtpmm: {
            DtpmmOptions opt;
            opt.imputations = settings.imputations;
            opt.alpha_level = settings.alpha_level;
            opt.include_self = settings.include_self;
            report = dtpmm_run(dm, opt, RandomStream(diag_seed));
            break;
        }
        case TestKind::gc:
            report = gc_run(dm, settings.gc, diag_seed);
            break;
        }
        for (std::size_t j = 0; j < kSimIndicators; ++j) out.decisions[j] = report.decision_for(j);
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

CellResult run_cell(const SimCell& cell, const std::array<double, kSimIndicators>& alphas,
                    const DiagnosticSettings& settings, std::uint64_t study_seed, unsigned jobs) {
    if (cell.reps <= 0) throw DomainError("reps must be positive");
    std::vector<ReplicationOutcome> outcomes(static_cast<std::size_t>(cell.reps));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < cell.reps; r = next++)
            outcomes[static_cast<std::size_t>(r)] = run_replication(cell, alphas, settings, study_seed, r);
    };
    const unsigned n_threads = std::max(1u, std::min(jobs, static_cast<unsigned>(cell.reps)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    CellResult res;
    res.cell = cell;
    const auto truth = ground_truth(cell.mechanism);
    for (const auto& o : outcomes) {
        if (!o.ok) {
            ++res.errors;
            continue;
        }
        ++res.reps_completed;
        // Overall: does the data set get flagged at all, and should it be?
        bool flagged = false, violates = false;
        for (std::size_t j = 0; j < kSimIndicators; ++j) {
            const bool rejected = o.decisions[j] == Decision::reject;
            res.correct[j] += rejected == truth[j] ? 1 : 0;
            flagged = flagged || rejected;
            violates = violates || truth[j];
        }
        res.overall_correct += flagged == violates ? 1 : 0;
    }
    return res;
}

std::vector<CellResult> run_study(const StudyConfig& config, unsigned jobs) {
    AlphaCache alphas(config.seed, config.calibration_draws);
    std::vector<CellResult> out;
    for (const auto& cell : config.cells()) {
        const auto& a = alphas.get(cell.mechanism, cell.m, cell.rho);
        out.push_back(run_cell(cell, a, config.settings, config.seed, jobs));
    }
    return out;
}

void write_results_csv(const std::vector<CellResult>& results, const StudyConfig& config, std::ostream& out) {
    out << "# maardiag " << MAAR_VERSION << '\n';
    out << "# config " << to_json(config).dump() << '\n';
    out << "mechanism,N,m,rho,test,reps,reps_completed,errors,correct_r1,correct_r2,correct_r3,correct_overall,"
           "rate_r1,rate_r2,rate_r3,rate_overall\n";
    for (const auto& r : results) {
        out << to_string(r.cell.mechanism) << ',' << r.cell.n << ',' << fmt(r.cell.m) << ',' << fmt(r.cell.rho) << ','
            << to_string(r.cell.test) << ',' << r.cell.reps << ',' << r.reps_completed << ',' << r.errors;
        for (auto c : r.correct) out << ',' << c;
        out << ',' << r.overall_correct;
        for (std::size_t j = 0; j < kSimIndicators; ++j) out << ',' << fmt(r.rate(j));
        out << ',' << fmt(r.overall_rate()) << '\n';
    }
}

std::vector<CellResult> read_results_csv(std::istream& in) {
    std::string line;
    std::vector<std::string> header;
    std::vector<CellResult> out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (header.empty()) {
            header = split(line);
            continue;
        }
        ++row;
        const auto f = split(line);
        if (f.size() != header.size()) throw StructureError("ragged results row " + std::to_string(row));
        auto col = [&](const std::string& name) -> std::size_t {
            auto it = std::find(header.begin(), header.end(), name);
            if (it == header.end()) throw StructureError("results file lacks column '" + name + "'");
            return static_cast<std::size_t>(it - header.begin());
        };
        CellResult r;
        try {
            r.cell.mechanism = parse_mechanism(f[col("mechanism")]);
            r.cell.test = parse_test(f[col("test")]);
        } catch (const DomainError& e) {
            throw ParseError(e.what(), row, 0);
        }
        r.cell.n = static_cast<std::size_t>(parse_int(f[col("N")], row, col("N") + 1));
        r.cell.m = parse_double(f[col("m")], row, col("m") + 1);
        r.cell.rho = parse_double(f[col("rho")], row, col("rho") + 1);
        r.cell.reps = static_cast<int>(parse_int(f[col("reps")], row, col("reps") + 1));
        r.reps_completed = static_cast<int>(parse_int(f[col("reps_completed")], row, col("reps_completed") + 1));
        r.errors = static_cast<int>(parse_int(f[col("errors")], row, col("errors") + 1));
        for (std::size_t j = 0; j < kSimIndicators; ++j) {
            const auto name = "correct_r" + std::to_string(j + 1);
            r.correct[j] = static_cast<int>(parse_int(f[col(name)], row, col(name) + 1));
        }
        r.overall_correct = static_cast<int>(parse_int(f[col("correct_overall")], row, col("correct_overall") + 1));
        out.push_back(r);
    }
    if (out.empty()) throw StructureError("results file has no data rows");
    return out;
}

AnovaTable study_anova(const std::vector<CellResult>& results) {
    std::vector<TestKind> tests;
    std::vector<std::size_t> sizes;
    std::vector<double> rhos, ms;
    std::vector<Mechanism> mechs;
    auto add = [](auto& v, auto x) {
        if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
    };
    for (const auto& r : results) {
        add(tests, r.cell.test);
        add(sizes, r.cell.n);
        add(rhos, r.cell.rho);
        add(ms, r.cell.m);
        add(mechs, r.cell.mechanism);
    }
    std::sort(tests.begin(), tests.end());
    std::sort(sizes.begin(), sizes.end());
    std::sort(rhos.begin(), rhos.end());
    std::sort(ms.begin(), ms.end());
    std::sort(mechs.begin(), mechs.end());
    auto idx = [](const auto& v, auto x) {
        return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin());
    };

    std::vector<AnovaFactor> factors{{"Diagnostic Test", tests.size()},
                                     {"N", sizes.size()},
                                     {"rho", rhos.size()},
                                     {"m", ms.size()},
                                     {"Mechanism", mechs.size()}};
    std::vector<std::vector<std::size_t>> levels;
    std::vector<double> response;
    for (const auto& r : results) {
        levels.push_back({idx(tests, r.cell.test), idx(sizes, r.cell.n), idx(rhos, r.cell.rho), idx(ms, r.cell.m),
                          idx(mechs, r.cell.mechanism)});
        const double y = r.overall_rate();
        if (std::isnan(y)) throw DomainError("cell without completed replications; anova needs every cell");
        response.push_back(y);
    }
    return anova(factors, levels, response);
}

void write_anova_csv(const AnovaTable& table, std::ostream& out) {
    out << "source,df,sum_sq,mean_sq,mean_sq_x1e4\n";
    for (const auto& r : table.rows) {
        out << '"' << r.source << '"' << ',' << r.df << ',' << fmt(r.sum_sq) << ',' << fmt(r.mean_sq) << ','
            << std::fixed << std::setprecision(1) << r.mean_sq * 1e4 << std::defaultfloat << '\n';
    }
    out << "\"Total\"," << table.total_df << ',' << fmt(table.total_sum_sq) << ",,\n";
}

Margin parse_margin(const std::string& name) {
    if (name == "size-rho-m") return Margin::by_size_rho_m;
    if (name == "indicator") return Margin::by_indicator;
    if (name == "mechanism") return Margin::by_mechanism;
    throw DomainError("unknown margin: " + name + " (expected size-rho-m, indicator or mechanism)");
}

namespace {

struct MarginTable {
    std::vector<std::string> row_labels_a;
    std::vector<std::string> row_labels_b;
    std::string head_a, head_b;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;
};

MarginTable build_margin(const std::vector<CellResult>& results, Margin margin) {
    if (results.empty()) throw StructureError("no results to summarize");
    std::set<TestKind> tests;
    std::set<std::size_t> sizes;
    std::set<double> rhos, ms;
    std::set<Mechanism> mechs;
    for (const auto& r : results) {
        tests.insert(r.cell.test);
        sizes.insert(r.cell.n);
        rhos.insert(r.cell.rho);
        ms.insert(r.cell.m);
        mechs.insert(r.cell.mechanism);
    }

    MarginTable t;
    auto collect = [&](auto pred, auto value) {
        std::vector<double> v;
        for (const auto& r : results) {
            if (pred(r)) {
                const double x = value(r);
                if (!std::isnan(x)) v.push_back(x);
            }
        }
        return mean_of(v);
    };

    if (margin == Margin::by_size_rho_m || margin == Margin::by_indicator) {
        t.head_a = "test";
        t.head_b = "N";
        if (margin == Margin::by_size_rho_m) {
            for (double rho : rhos)
                for (double m : ms) t.columns.push_back("rho=" + fmt(rho) + " m=" + fmt(m));
            t.columns.push_back("Average");
        } else {
            t.columns = {"R1", "R2", "R3", "Overall"};
        }
        for (auto test : tests) {
            for (auto n : sizes) {
                t.row_labels_a.push_back(to_string(test));
                t.row_labels_b.push_back(std::to_string(n));
                std::vector<double> row;
                auto base = [&](const CellResult& r) { return r.cell.test == test && r.cell.n == n; };
                if (margin == Margin::by_size_rho_m) {
                    for (double rho : rhos)
                        for (double m : ms)
                            row.push_back(collect(
                                [&](const CellResult& r) { return base(r) && r.cell.rho == rho && r.cell.m == m; },
                                [](const CellResult& r) { return r.overall_rate(); }));
                    row.push_back(collect(base, [](const CellResult& r) { return r.overall_rate(); }));
                } else {
                    for (std::size_t j = 0; j < kSimIndicators; ++j)
                        row.push_back(collect(base, [j](const CellResult& r) { return r.rate(j); }));
                    row.push_back(collect(base, [](const CellResult& r) { return r.overall_rate(); }));
                }
                t.values.push_back(row);
            }
        }
    } else {
        t.head_a = "mechanism";
        t.head_b = "test";
        for (std::size_t j = 0; j <= kSimIndicators; ++j)
            for (auto n : sizes)
                t.columns.push_back((j < kSimIndicators ? "R" + std::to_string(j + 1) : std::string("Overall")) +
                                    " N=" + std::to_string(n));
        for (auto mech : mechs) {
            for (auto test : tests) {
                t.row_labels_a.push_back(to_string(mech));
                t.row_labels_b.push_back(to_string(test));
                std::vector<double> row;
                for (std::size_t j = 0; j <= kSimIndicators; ++j) {
                    for (auto n : sizes) {
                        row.push_back(collect(
                            [&](const CellResult& r) {
                                return r.cell.mechanism == mech && r.cell.test == test && r.cell.n == n;
                            },
                            [j](const CellResult& r) { return j < kSimIndicators ? r.rate(j) : r.overall_rate(); }));
                    }
                }
                t.values.push_back(row);
            }
        }
    }
    return t;
}

} // namespace

std::string format_margin_text(const std::vector<CellResult>& results, Margin margin) {
    const auto t = build_margin(results, margin);
    std::ostringstream os;
    std::size_t width = 8;
    for (const auto& c : t.columns) width = std::max(width, c.size() + 2);
    os << std::left << std::setw(11) << t.head_a << std::setw(7) << t.head_b;
    for (const auto& c : t.columns) os << std::right << std::setw(static_cast<int>(width)) << c;
    os << '\n';
    for (std::size_t r = 0; r < t.values.size(); ++r) {
        os << std::left << std::setw(11) << t.row_labels_a[r] << std::setw(7) << t.row_labels_b[r];
        for (double v : t.values[r]) os << std::right << std::setw(static_cast<int>(width)) << fixed2(v);
        os << '\n';
    }
    return os.str();
}

std::string format_margin_csv(const std::vector<CellResult>& results, Margin margin) {
    const auto t = build_margin(results, margin);
    std::ostringstream os;
    os << t.head_a << ',' << t.head_b;
    for (const auto& c : t.columns) os << ',' << c;
    os << '\n';
    for (std::size_t r = 0; r < t.values.size(); ++r) {
        os << t.row_labels_a[r] << ',' << t.row_labels_b[r];
        for (double v : t.values[r]) os << ',' << fmt(v);
        os << '\n';
    }
    return os.str();
}

} // namespace maar
