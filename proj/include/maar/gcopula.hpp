#ifndef MAAR_GCOPULA_HPP
#define MAAR_GCOPULA_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "maar/data_matrix.hpp"
#include "maar/linalg.hpp"
#include "maar/random.hpp"
#include "maar/report.hpp"

namespace maar {

// Gaussian copula of (Y, R) under the extended rank likelihood.
//
// Latent columns 0..J-1 hold the Y variables; columns J..J+J*-1 hold the
// indicators of the missing-prone columns in increasing column order. A
// continuous column constrains its latent scores only through the ordering
// of its observed values. An indicator column is a two-level ordinal: every
// latent score at an observed cell lies above every score at a missing cell,
// with the cut point left free. Latent cells at missing Y entries are
// unconstrained.

enum class ColumnKind { continuous_observed, continuous_missing, binary_indicator };

// Rank levels of one latent column: groups of tied rows in increasing order
// (continuous), or {rows with indicator 0, rows with indicator 1} (binary).
struct ColumnConstraints {
    ColumnKind kind = ColumnKind::continuous_observed;
    std::size_t source_col = 0;
    std::vector<std::vector<std::size_t>> levels;
    std::vector<std::size_t> free_rows;
};

struct CopulaState {
    Eigen::MatrixXd z;
    CorrelationMatrix c{Eigen::MatrixXd::Identity(1, 1)};
    std::vector<ColumnConstraints> columns;

    std::size_t dim() const { return columns.size(); }
};

// Latent index of the indicator for missing-prone column j.
std::size_t indicator_latent_index(const DataMatrix& dm, std::size_t j);

// Normal scores of mid-ranks for observed Y cells, +/-0.5 for indicator cells, 0 for missing cells; C = I.
CopulaState init_state(const DataMatrix& dm);

// True when every rank constraint holds for the current latent scores.
bool constraints_hold(const CopulaState& state);

struct CopulaPrior {
    double nu = 0.0;
    Eigen::MatrixXd scale;
};

// nu = dim + 2, scale = (dim + 2) I, which centres the covariance at the identity.
CopulaPrior default_prior(std::size_t dim);

// One Gibbs scan: every latent cell from its truncated conditional normal,
// then a covariance from the inverse-Wishart full conditional, rescaled to a correlation matrix.
void gibbs_sweep(CopulaState& state, const CopulaPrior& prior, RandomStream& stream);

struct SamplerOptions {
    int n_iter = 5000;
    int burn_in = 1000;
    int thin = 4;
    // Defaults to default_prior(dim) when unset.
    std::optional<CopulaPrior> prior;
};

struct PosteriorSummary {
    std::vector<CorrelationMatrix> draws;
    std::size_t n_kept = 0;
    int burn_in = 0;
    int thin = 1;
    int n_iter = 0;
};

PosteriorSummary run_sampler(const DataMatrix& dm, const SamplerOptions& options, std::uint64_t seed);

// Posterior of cor(Y_j, R_j' | fully observed Y) for every missing-prone j and indicator j'.
// A pair rejects when its central credible interval excludes 0.
DiagnosticReport gc_test(const PosteriorSummary& post, const DataMatrix& dm, double credible_level = 0.95);

struct GcOptions {
    SamplerOptions sampler;
    double credible_level = 0.95;
};

DiagnosticReport gc_run(const DataMatrix& dm, const GcOptions& options, std::uint64_t seed);

// Linear-interpolation sample quantile (type 7) of unsorted values.
double sample_quantile(std::vector<double> values, double prob);

} // namespace maar

#endif
