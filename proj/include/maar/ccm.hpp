#ifndef MAAR_CCM_HPP
#define MAAR_CCM_HPP

#include <cstddef>

#include "maar/data_matrix.hpp"
#include "maar/report.hpp"

namespace maar {

// Comparison of conditional means.
//
// For a target column j and an indicator column k (both missing-prone), the
// rows with Y_j observed are split by R_k. Under the null, the regression of
// Y_j on the fully observed columns is the same in both parts. The null model
// regresses Y_j on an intercept and the fully observed columns; the
// alternative adds R_k and its interaction with every fully observed column,
// so the test has 1 + (J - J*) degrees of freedom.
PairTestRecord ccm_pair_test(const DataMatrix& dm, std::size_t target_col, std::size_t indicator_col);

// Every ordered pair of missing-prone columns, corrected family-wise across
// the non-skipped tests. R_k is rejected when any pair with indicator k is.
DiagnosticReport ccm_run(const DataMatrix& dm, double alpha_level = 0.05, Correction correction = Correction::holm);

} // namespace maar

#endif
