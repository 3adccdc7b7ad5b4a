#ifndef MAAR_MECHANISM_HPP
#define MAAR_MECHANISM_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "maar/data_matrix.hpp"
#include "maar/random.hpp"

namespace maar {

// Simulation layout: five equicorrelated normal columns; the first three are
// missing-prone, the last two always observed.
inline constexpr std::size_t kSimColumns = 5;
inline constexpr std::size_t kSimIndicators = 3;

enum class Mechanism { maar, maar2, mnaar };

std::string to_string(Mechanism m);
Mechanism parse_mechanism(const std::string& name);

// coef * y[y_col] (* r[r_col] when present).
struct PredictorTerm {
    double coef = 1.0;
    std::size_t y_col = 0;
    std::optional<std::size_t> r_col;
};

// P(R_ij = 1) = inv_logit(alpha_j + sum of terms), indicators generated in column order.
struct MechanismSpec {
    Mechanism name = Mechanism::maar;
    std::array<std::vector<PredictorTerm>, kSimIndicators> predictors;

    double linear_predictor(std::size_t indicator, const double* y_row, const double* r_row) const;
};

MechanismSpec mechanism_spec(Mechanism m);

// Per indicator: true when R_j violates the conditions the diagnostics test.
std::array<bool, kSimIndicators> ground_truth(Mechanism m);

// N x 5 draws from N(0, rho 11' + (1 - rho) I).
Eigen::MatrixXd gen_complete(std::size_t n, double rho, RandomStream& stream);

// Intercepts giving an average missing proportion m for every indicator,
// solved in indicator order by bisection on a Monte Carlo sample of `draws`
// rows (upstream indicators are drawn with their calibrated intercepts).
std::array<double, kSimIndicators> calibrate_alphas(const MechanismSpec& spec, double m, double rho,
                                                    RandomStream& stream, std::size_t draws = 100000);

double calibrate_alpha(const MechanismSpec& spec, std::size_t indicator, double m, double rho, RandomStream& stream,
                       std::size_t draws = 100000);

// Response indicators for all columns; only the first three can be 0.
MaskMatrix apply_mechanism(const Eigen::MatrixXd& y, const MechanismSpec& spec,
                           const std::array<double, kSimIndicators>& alphas, RandomStream& stream);

// Masked data matrix with the first three columns declared missing-prone.
DataMatrix simulated_data(const Eigen::MatrixXd& y, const MaskMatrix& mask);

} // namespace maar

#endif
