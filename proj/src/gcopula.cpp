#include "maar/gcopula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "maar/distributions.hpp"
#include "maar/errors.hpp"
#include "maar/samplers.hpp"

namespace maar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd precision_with_jitter(const Eigen::MatrixXd& c) {
    const auto d = c.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) {
        Eigen::MatrixXd jittered = c;
        jittered.diagonal().array() += 1e-10;
        llt.compute(jittered);
        if (llt.info() != Eigen::Success) throw DomainError("latent correlation matrix is not positive definite");
    }
    return llt.solve(Eigen::MatrixXd::Identity(d, d));
}

void draw_column(CopulaState& state, std::size_t col, const Eigen::MatrixXd& precision, RandomStream& stream) {
    auto& z = state.z;
    const auto j = static_cast<Eigen::Index>(col);
    const double pjj = precision(j, j);
    const double sd = 1.0 / std::sqrt(pjj);
    Eigen::VectorXd coef = -precision.col(j) / pjj;
    coef(j) = 0.0;
    const Eigen::VectorXd mu = z * coef;

    const auto& cons = state.columns[col];
    for (auto i : cons.free_rows) z(i, j) = mu(i) + sd * stream.normal();

    // Binary columns fall through: two ordered levels with a floating cut.
    const auto n_levels = cons.levels.size();
    double lower = -kInf;
    for (std::size_t g = 0; g < n_levels; ++g) {
        double upper = kInf;
        if (g + 1 < n_levels) {
            for (auto i : cons.levels[g + 1]) upper = std::min(upper, z(i, j));
        }
        double group_max = -kInf;
        for (auto i : cons.levels[g]) {
            const double v = (lower < upper) ? sample_truncated_normal(mu(i), sd, lower, upper, stream) : lower;
            z(i, j) = v;
            group_max = std::max(group_max, v);
        }
        lower = group_max;
    }
}

} // namespace

std::size_t indicator_latent_index(const DataMatrix& dm, std::size_t j) {
    const auto& prone = dm.missing_prone_cols();
    auto it = std::lower_bound(prone.begin(), prone.end(), j);
    if (it == prone.end() || *it != j) throw DomainError("column is not missing-prone");
    return dm.n_cols() + static_cast<std::size_t>(it - prone.begin());
}

CopulaState init_state(const DataMatrix& dm) {
    const auto n = dm.n_rows();
    const auto J = dm.n_cols();
    const auto& prone = dm.missing_prone_cols();
    const auto dim = J + prone.size();

    CopulaState state;
    state.z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    state.c = CorrelationMatrix(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
    state.columns.resize(dim);

    for (std::size_t j = 0; j < J; ++j) {
        auto& cons = state.columns[j];
        cons.kind = dm.is_missing_prone(j) ? ColumnKind::continuous_missing : ColumnKind::continuous_observed;
        cons.source_col = j;
        std::vector<std::size_t> obs;
        for (std::size_t i = 0; i < n; ++i) (dm.observed(i, j) ? obs : cons.free_rows).push_back(i);
        std::stable_sort(obs.begin(), obs.end(),
                         [&](std::size_t a, std::size_t b) { return dm.value(a, j) < dm.value(b, j); });
        const double n_obs = static_cast<double>(obs.size());
        std::size_t start = 0;
        while (start < obs.size()) {
            std::size_t end = start + 1;
            while (end < obs.size() && dm.value(obs[end], j) == dm.value(obs[start], j)) ++end;
            // mid-rank of positions start+1 .. end
            const double midrank = 0.5 * static_cast<double>(start + 1 + end);
            const double score = normal_quantile(midrank / (n_obs + 1.0));
            cons.levels.emplace_back(obs.begin() + static_cast<std::ptrdiff_t>(start),
                                     obs.begin() + static_cast<std::ptrdiff_t>(end));
            for (std::size_t u = start; u < end; ++u) state.z(static_cast<Eigen::Index>(obs[u]), static_cast<Eigen::Index>(j)) = score;
            start = end;
        }
        if (cons.levels.size() < 2)
            throw DegenerateColumnError("column " + dm.names()[j] + " has fewer than two distinct observed values");
    }

    for (std::size_t u = 0; u < prone.size(); ++u) {
        const auto col = J + u;
        auto& cons = state.columns[col];
        cons.kind = ColumnKind::binary_indicator;
        cons.source_col = prone[u];
        cons.levels.resize(2);
        for (std::size_t i = 0; i < n; ++i) {
            const bool obs = dm.observed(i, prone[u]);
            cons.levels[obs ? 1 : 0].push_back(i);
            state.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) = obs ? 0.5 : -0.5;
        }
        if (cons.levels[0].empty() || cons.levels[1].empty())
            throw DegenerateColumnError("indicator of column " + dm.names()[prone[u]] + " is constant");
    }
    return state;
}

bool constraints_hold(const CopulaState& state) {
    const auto& z = state.z;
    for (std::size_t col = 0; col < state.columns.size(); ++col) {
        const auto j = static_cast<Eigen::Index>(col);
        const auto& cons = state.columns[col];
        double prev_max = -kInf;
        for (const auto& level : cons.levels) {
            double lo = kInf, hi = -kInf;
            for (auto i : level) {
                lo = std::min(lo, z(i, j));
                hi = std::max(hi, z(i, j));
            }
            if (!(lo >= prev_max)) return false;
            prev_max = hi;
        }
        for (auto i : cons.free_rows) {
            if (!std::isfinite(z(i, j))) return false;
        }
    }
    return true;
}

CopulaPrior default_prior(std::size_t dim) {
    const double nu = static_cast<double>(dim) + 2.0;
    return {nu, nu * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))};
}

void gibbs_sweep(CopulaState& state, const CopulaPrior& prior, RandomStream& stream) {
    const auto dim = state.dim();
    const Eigen::MatrixXd precision = precision_with_jitter(state.c.matrix());
    for (std::size_t col = 0; col < dim; ++col) draw_column(state, col, precision, stream);

    const double n = static_cast<double>(state.z.rows());
    Eigen::MatrixXd scale = prior.scale;
    scale.selfadjointView<Eigen::Lower>().rankUpdate(state.z.transpose());
    scale = scale.selfadjointView<Eigen::Lower>();
    const Eigen::MatrixXd cov = sample_inverse_wishart(prior.nu + n, scale, stream);
    state.c = to_correlation(cov);
}

PosteriorSummary run_sampler(const DataMatrix& dm, const SamplerOptions& options, std::uint64_t seed) {
    if (options.n_iter <= options.burn_in) throw DomainError("n_iter must exceed burn_in");
    if (options.burn_in < 0 || options.thin < 1) throw DomainError("burn_in must be >= 0 and thin >= 1");

    CopulaState state = init_state(dm);
    const CopulaPrior prior = options.prior ? *options.prior : default_prior(state.dim());
    if (prior.scale.rows() != static_cast<Eigen::Index>(state.dim()))
        throw DomainError("prior scale dimension does not match the latent dimension");

    RandomStream stream(seed);
    PosteriorSummary post;
    post.burn_in = options.burn_in;
    post.thin = options.thin;
    post.n_iter = options.n_iter;
    post.draws.reserve(static_cast<std::size_t>((options.n_iter - options.burn_in) / options.thin));
    for (int t = 1; t <= options.n_iter; ++t) {
        gibbs_sweep(state, prior, stream);
        if (t > options.burn_in && (t - options.burn_in) % options.thin == 0) post.draws.push_back(state.c);
    }
    post.n_kept = post.draws.size();
    return post;
}

double sample_quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw DomainError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

DiagnosticReport gc_test(const PosteriorSummary& post, const DataMatrix& dm, double credible_level) {
    if (post.draws.empty()) throw DomainError("posterior summary has no draws");
    if (!(credible_level > 0.0 && credible_level < 1.0)) throw DomainError("credible level must lie in (0, 1)");
    const auto& prone = dm.missing_prone_cols();
    if (prone.empty()) throw NothingToTestError("no missing-prone columns");
    const auto dim = dm.n_cols() + prone.size();
    if (post.draws.front().dim() != dim) throw DomainError("posterior draws do not match the data layout");

    const std::vector<std::size_t>& given = dm.fully_observed_cols();
    const double tail = 0.5 * (1.0 - credible_level);

    DiagnosticReport report;
    report.test = "GC";
    report.alpha_level = 1.0 - credible_level;
    report.correction = Correction::none;
    report.settings = {{"credible_level", std::to_string(credible_level)},
                       {"n_iter", std::to_string(post.n_iter)},
                       {"burn_in", std::to_string(post.burn_in)},
                       {"thin", std::to_string(post.thin)},
                       {"draws", std::to_string(post.n_kept)}};

    for (auto r_col : prone) {
        const auto r_latent = indicator_latent_index(dm, r_col);
        IndicatorDecision d;
        d.indicator_col = r_col;
        for (auto y_col : prone) {
            std::vector<double> pc;
            pc.reserve(post.draws.size());
            std::size_t positive = 0, negative = 0;
            for (const auto& c : post.draws) {
                const double v = partial_correlation(c, y_col, r_latent, given);
                pc.push_back(v);
                positive += v > 0.0;
                negative += v < 0.0;
            }
            CorrelationTestRecord rec;
            rec.y_col = y_col;
            rec.indicator_col = r_col;
            rec.n_draws = pc.size();
            rec.posterior_mean = std::accumulate(pc.begin(), pc.end(), 0.0) / static_cast<double>(pc.size());
            rec.lower = sample_quantile(pc, tail);
            rec.upper = sample_quantile(pc, 1.0 - tail);
            rec.tail_probability =
                2.0 * static_cast<double>(std::min(positive, negative)) / static_cast<double>(pc.size());
            rec.reject = rec.lower > 0.0 || rec.upper < 0.0;
            if (rec.reject) d.decision = Decision::reject;
            d.evidence = std::min(d.evidence, rec.tail_probability);
            report.correlations.push_back(rec);
        }
        report.decisions.push_back(d);
    }
    return report;
}

DiagnosticReport gc_run(const DataMatrix& dm, const GcOptions& options, std::uint64_t seed) {
    if (dm.missing_prone_cols().empty()) throw NothingToTestError("no missing-prone columns");
    const auto post = run_sampler(dm, options.sampler, seed);
    auto report = gc_test(post, dm, options.credible_level);
    report.settings.emplace_back("seed", std::to_string(seed));
    return report;
}

} // namespace maar
