#ifndef MAAR_TEST_HELPERS_HPP
#define MAAR_TEST_HELPERS_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "maar/data_matrix.hpp"

namespace maar::test {

inline constexpr double NA = std::numeric_limits<double>::quiet_NaN();

// Columns given as vectors; NaN marks a missing cell.
inline DataMatrix from_columns(const std::vector<std::vector<double>>& cols) {
    const auto J = static_cast<Eigen::Index>(cols.size());
    const auto n = static_cast<Eigen::Index>(cols.front().size());
    Eigen::MatrixXd v(n, J);
    MaskMatrix m(n, J);
    for (Eigen::Index j = 0; j < J; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = cols[j][i];
            m(i, j) = std::isnan(x) ? 0 : 1;
            v(i, j) = std::isnan(x) ? 0.0 : x;
        }
    }
    return DataMatrix(v, m);
}

} // namespace maar::test

#endif
