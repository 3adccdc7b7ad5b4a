#ifndef MAAR_ANOVA_HPP
#define MAAR_ANOVA_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace maar {

struct AnovaFactor {
    std::string name;
    std::size_t levels = 0;
};

struct AnovaRow {
    std::string source;
    int df = 0;
    double sum_sq = 0.0;
    double mean_sq = 0.0;
};

struct AnovaTable {
    std::vector<AnovaRow> rows;
    double total_sum_sq = 0.0;
    int total_df = 0;
};

// Balanced full factorial, one observation per cell. Every main effect and
// interaction is listed, by order and then in colex order of the factor
// subsets. With one observation per cell the highest-order interaction is
// the residual stratum.
//
// cell_levels[c][f] is the level index of factor f in cell c.
AnovaTable anova(const std::vector<AnovaFactor>& factors, const std::vector<std::vector<std::size_t>>& cell_levels,
                 const std::vector<double>& response);

} // namespace maar

#endif
