#include "maar/anova.hpp"

#include <algorithm>
#include <bit>

#include "maar/errors.hpp"

namespace maar {

namespace {

// Colex order within each subset size: sort by size, then by the reversed bit pattern.
std::vector<unsigned> ordered_subsets(std::size_t n_factors) {
    std::vector<unsigned> subsets;
    for (unsigned s = 1; s < (1u << n_factors); ++s) subsets.push_back(s);
    std::stable_sort(subsets.begin(), subsets.end(), [](unsigned a, unsigned b) {
        const int ca = std::popcount(a), cb = std::popcount(b);
        if (ca != cb) return ca < cb;
        return a < b;
    });
    return subsets;
}

} // namespace

AnovaTable anova(const std::vector<AnovaFactor>& factors, const std::vector<std::vector<std::size_t>>& cell_levels,
                 const std::vector<double>& response) {
    const auto F = factors.size();
    if (F == 0 || F > 16) throw DomainError("anova supports between 1 and 16 factors");
    if (cell_levels.size() != response.size()) throw DomainError("one response per cell is required");

    std::vector<std::size_t> stride(F);
    std::size_t n_cells = 1;
    for (std::size_t f = 0; f < F; ++f) {
        if (factors[f].levels < 2) throw DomainError("every factor needs at least two levels");
        stride[f] = n_cells;
        n_cells *= factors[f].levels;
    }
    if (response.size() != n_cells)
        throw DomainError("incomplete factorial: expected " + std::to_string(n_cells) + " cells, got " +
                          std::to_string(response.size()));

    std::vector<double> y(n_cells, 0.0);
    std::vector<char> seen(n_cells, 0);
    for (std::size_t c = 0; c < n_cells; ++c) {
        if (cell_levels[c].size() != F) throw DomainError("cell level vector has the wrong length");
        std::size_t idx = 0;
        for (std::size_t f = 0; f < F; ++f) {
            if (cell_levels[c][f] >= factors[f].levels) throw DomainError("cell level out of range");
            idx += cell_levels[c][f] * stride[f];
        }
        if (seen[idx]) throw DomainError("incomplete factorial: duplicated cell");
        seen[idx] = 1;
        y[idx] = response[c];
    }

    // Marginal mean over the factors outside subset s, stored per full cell index.
    const auto n_subsets = std::size_t{1} << F;
    std::vector<std::vector<double>> marginal(n_subsets, std::vector<double>(n_cells, 0.0));
    std::vector<std::size_t> level(F);
    for (std::size_t s = 0; s < n_subsets; ++s) {
        std::size_t group_cells = 1;
        for (std::size_t f = 0; f < F; ++f) {
            if (!(s >> f & 1u)) group_cells *= factors[f].levels;
        }
        auto key = [&](std::size_t idx) {
            std::size_t k = 0;
            for (std::size_t f = 0; f < F; ++f) {
                if (s >> f & 1u) k += (idx / stride[f] % factors[f].levels) * stride[f];
            }
            return k;
        };
        std::vector<double> sums(n_cells, 0.0);
        for (std::size_t idx = 0; idx < n_cells; ++idx) sums[key(idx)] += y[idx];
        for (std::size_t idx = 0; idx < n_cells; ++idx)
            marginal[s][idx] = sums[key(idx)] / static_cast<double>(group_cells);
    }

    AnovaTable table;
    const double grand = marginal[0][0];
    for (double v : y) table.total_sum_sq += (v - grand) * (v - grand);
    table.total_df = static_cast<int>(n_cells) - 1;

    for (unsigned s : ordered_subsets(F)) {
        AnovaRow row;
        row.df = 1;
        std::string name;
        for (std::size_t f = 0; f < F; ++f) {
            if (!(s >> f & 1u)) continue;
            row.df *= static_cast<int>(factors[f].levels) - 1;
            name += (name.empty() ? "" : " x ") + factors[f].name;
        }
        row.source = name;
        // Moebius inversion over the subsets t of s.
        double ss = 0.0;
        for (std::size_t idx = 0; idx < n_cells; ++idx) {
            double effect = 0.0;
            for (unsigned t = s;; t = (t - 1) & s) {
                const int sign = (std::popcount(s) - std::popcount(t)) % 2 == 0 ? 1 : -1;
                effect += sign * marginal[t][idx];
                if (t == 0) break;
            }
            ss += effect * effect;
        }
        row.sum_sq = ss;
        row.mean_sq = ss / row.df;
        table.rows.push_back(row);
    }
    return table;
}

} // namespace maar
