#ifndef MAAR_DTPMM_HPP
#define MAAR_DTPMM_HPP

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "maar/data_matrix.hpp"
#include "maar/random.hpp"
#include "maar/regression.hpp"
#include "maar/report.hpp"

namespace maar {

// Logistic mechanism for one indicator column. The null uses only fully
// observed columns; the alternative adds further columns.
struct PostulatedMechanism {
    std::size_t indicator_col = 0;
    std::vector<std::size_t> null_predictors;
    std::vector<std::size_t> alt_predictors;
};

// Null: fully observed columns. Alternative: fully observed plus every other
// missing-prone column, plus the indicator's own column when include_self is set.
PostulatedMechanism default_mechanism(const DataMatrix& dm, std::size_t indicator_col, bool include_self = false);

// Proper multiple imputation that ignores R: chained Gaussian linear
// regressions with posterior parameter draws, 10 cycles per imputation from a
// random-donor start. Imputation m uses stream.child(m). Observed cells are copied
// unchanged.
std::vector<Eigen::MatrixXd> impute_under_null(const DataMatrix& dm, int imputations, const RandomStream& stream);

struct MechanismFit {
    Eigen::MatrixXd x_null;
    Eigen::MatrixXd x_alt;
    RegressionFit null_fit;
    RegressionFit alt_fit;
    LrtResult lrt;
};

// Both logistic models for R_k fitted on every row of a completed matrix.
MechanismFit lrt_mechanism(const Eigen::MatrixXd& completed, const Eigen::VectorXd& response,
                           const PostulatedMechanism& mech);

// Likelihood-ratio combining rule for multiply imputed data: the average
// statistic, the statistic re-evaluated at pooled coefficients, the implied
// between-imputation ratio and an F(k, w) reference.
MIResult combine_lrt_mi(const std::vector<MechanismFit>& fits, const Eigen::VectorXd& response, int df);

// Denominator degrees of freedom of the combined F reference.
double combined_denominator_df(int df_num, int imputations, double between_ratio);

struct DtpmmOptions {
    int imputations = 20;
    double alpha_level = 0.05;
    bool include_self = false;
};

DiagnosticReport dtpmm_run(const DataMatrix& dm, const DtpmmOptions& options, const RandomStream& stream);

} // namespace maar

#endif
