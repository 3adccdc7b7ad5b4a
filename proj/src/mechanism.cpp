#include "maar/mechanism.hpp"

#include <cmath>

#include "maar/distributions.hpp"
#include "maar/errors.hpp"
#include "maar/linalg.hpp"
#include "maar/samplers.hpp"

namespace maar {

namespace {

double expected_missing(const Eigen::VectorXd& lin, double alpha) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < lin.size(); ++i) s += 1.0 - inv_logit(alpha + lin(i));
    return s / static_cast<double>(lin.size());
}

} // namespace

std::string to_string(Mechanism m) {
    switch (m) {
    case Mechanism::maar: return "MAAR";
    case Mechanism::maar2: return "MAAR2";
    case Mechanism::mnaar: return "MNAAR";
    }
    return "";
}

Mechanism parse_mechanism(const std::string& name) {
    if (name == "MAAR") return Mechanism::maar;
    if (name == "MAAR2") return Mechanism::maar2;
    if (name == "MNAAR") return Mechanism::mnaar;
    throw DomainError("unknown mechanism: " + name);
}

double MechanismSpec::linear_predictor(std::size_t indicator, const double* y_row, const double* r_row) const {
    double s = 0.0;
    for (const auto& t : predictors[indicator]) {
        double v = t.coef * y_row[t.y_col];
        if (t.r_col) v *= r_row[*t.r_col];
        s += v;
    }
    return s;
}

MechanismSpec mechanism_spec(Mechanism m) {
    MechanismSpec spec;
    spec.name = m;
    const std::vector<PredictorTerm> base{{1.0, 3, std::nullopt}, {-1.0, 4, std::nullopt}};
    for (auto& p : spec.predictors) p = base;
    switch (m) {
    case Mechanism::maar:
        break;
    case Mechanism::maar2:
        spec.predictors[1].push_back({1.0, 0, 0});
        spec.predictors[2].push_back({1.0, 0, 0});
        spec.predictors[2].push_back({1.0, 1, 1});
        break;
    case Mechanism::mnaar:
        spec.predictors[1].push_back({0.5, 0, std::nullopt});
        spec.predictors[1].push_back({0.5, 2, std::nullopt});
        spec.predictors[2].push_back({1.0, 0, std::nullopt});
        spec.predictors[2].push_back({1.0, 1, std::nullopt});
        break;
    }
    return spec;
}

std::array<bool, kSimIndicators> ground_truth(Mechanism m) {
    if (m == Mechanism::maar) return {false, false, false};
    return {false, true, true};
}

Eigen::MatrixXd gen_complete(std::size_t n, double rho, RandomStream& stream) {
    const auto cov = equicorr_covariance(kSimColumns, rho);
    return sample_mvn(Eigen::VectorXd::Zero(kSimColumns), cov.matrix(), n, stream);
}

std::array<double, kSimIndicators> calibrate_alphas(const MechanismSpec& spec, double m, double rho,
                                                    RandomStream& stream, std::size_t draws) {
    if (!(m > 0.0 && m < 1.0)) throw CalibrationError("missing proportion must lie strictly between 0 and 1");
    if (draws == 0) throw DomainError("calibration needs at least one draw");
    const Eigen::MatrixXd y = gen_complete(draws, rho, stream);
    const auto n = static_cast<Eigen::Index>(draws);
    Eigen::MatrixXd r = Eigen::MatrixXd::Ones(n, kSimIndicators);
    std::array<double, kSimIndicators> alphas{};

    Eigen::VectorXd lin(n);
    double yrow[kSimColumns];
    double rrow[kSimIndicators] = {1.0, 1.0, 1.0};
    for (std::size_t j = 0; j < kSimIndicators; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < kSimColumns; ++c) yrow[c] = y(i, static_cast<Eigen::Index>(c));
            for (std::size_t c = 0; c < kSimIndicators; ++c) rrow[c] = r(i, static_cast<Eigen::Index>(c));
            lin(i) = spec.linear_predictor(j, yrow, rrow);
        }
        double lo = -50.0, hi = 50.0;
        if (!(expected_missing(lin, lo) > m && expected_missing(lin, hi) < m))
            throw CalibrationError("calibration bracket does not contain the target proportion");
        for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (expected_missing(lin, mid) > m) lo = mid; else hi = mid;
        }
        const double alpha = 0.5 * (lo + hi);
        if (std::abs(expected_missing(lin, alpha) - m) > 0.002)
            throw CalibrationError("calibrated proportion misses the target by more than 0.002");
        alphas[j] = alpha;
        for (Eigen::Index i = 0; i < n; ++i)
            r(i, static_cast<Eigen::Index>(j)) = stream.bernoulli(inv_logit(alpha + lin(i))) ? 1.0 : 0.0;
    }
    return alphas;
}

double calibrate_alpha(const MechanismSpec& spec, std::size_t indicator, double m, double rho, RandomStream& stream,
                       std::size_t draws) {
    if (indicator >= kSimIndicators) throw DomainError("indicator index out of range");
    return calibrate_alphas(spec, m, rho, stream, draws)[indicator];
}

MaskMatrix apply_mechanism(const Eigen::MatrixXd& y, const MechanismSpec& spec,
                           const std::array<double, kSimIndicators>& alphas, RandomStream& stream) {
    if (y.cols() != static_cast<Eigen::Index>(kSimColumns)) throw DomainError("simulation data must have 5 columns");
    const auto n = y.rows();
    MaskMatrix mask = MaskMatrix::Ones(n, kSimColumns);
    double yrow[kSimColumns];
    double rrow[kSimIndicators] = {1.0, 1.0, 1.0};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < kSimColumns; ++c) yrow[c] = y(i, static_cast<Eigen::Index>(c));
        for (std::size_t j = 0; j < kSimIndicators; ++j) {
            const double p = inv_logit(alphas[j] + spec.linear_predictor(j, yrow, rrow));
            const bool observed = stream.bernoulli(p);
            rrow[j] = observed ? 1.0 : 0.0;
            mask(i, static_cast<Eigen::Index>(j)) = observed ? 1 : 0;
        }
    }
    return mask;
}

DataMatrix simulated_data(const Eigen::MatrixXd& y, const MaskMatrix& mask) {
    return DataMatrix(y, mask, {"Y1", "Y2", "Y3", "Y4", "Y5"}, {0, 1, 2});
}

} // namespace maar
