#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace svf {

/// Shock-time covariates of the target (p-vector) and of the donors (p x n).
struct VolatilityProfile {
    Eigen::VectorXd target;
    Eigen::MatrixXd donors;
    std::vector<std::string> covariate_names;  // empty or length p
    std::vector<std::string> donor_names;      // empty or length n
    bool standardized = false;
    std::vector<bool> constant_rows;  // set by standardize(): row had zero dispersion

    // Copy of the unstandardized values, kept for reporting.
    Eigen::VectorXd raw_target;
    Eigen::MatrixXd raw_donors;

    std::size_t covariates() const noexcept { return static_cast<std::size_t>(target.size()); }
    std::size_t n_donors() const noexcept { return static_cast<std::size_t>(donors.cols()); }

    // Throws DimensionMismatch on shape problems and Validation on non-finite entries.
    void validate() const;

    /// Profile with the given donor column and/or covariate row removed. The
    /// result is unstandardized (built from the raw values when present).
    VolatilityProfile without(std::optional<std::size_t> donor, std::optional<std::size_t> covariate) const;
};

/// Z-scores every covariate row over all n + 1 events (target included), with
/// the sample standard deviation. Rows with no dispersion become zeros and are
/// flagged in `constant_rows`.
VolatilityProfile standardize(const VolatilityProfile& profile);

struct WeightSolution {
    Eigen::VectorXd weights;
    double objective = 0.0;  // ||v1 - V pi||_S
    bool unique_hint = false;
    std::vector<std::size_t> active_support;  // donors with weight > 1e-6
};

/// ||x||_S = sqrt(x' S x); S defaults to the identity.
double seminorm(const Eigen::VectorXd& x, const std::optional<Eigen::MatrixXd>& s = std::nullopt);

/// Minimizes ||v1 - V pi||_S over the probability simplex with a primal
/// active-set method. A vanishing ridge (1e-10, relative to the column
/// scale) selects the minimum-norm weights when the minimizer is not unique.
WeightSolution solve_weights(const VolatilityProfile& profile,
                             const std::optional<Eigen::MatrixXd>& seminorm_matrix = std::nullopt);

/// pi' omega_hat
double aggregate_shock(const WeightSolution& weights, const Eigen::VectorXd& donor_effects);
double aggregate_shock(const Eigen::VectorXd& weights, const Eigen::VectorXd& donor_effects);

/// Arithmetic mean of the donor effects.
double mean_shock(const Eigen::VectorXd& donor_effects);

/// Least squares of the donor effects on the covariates (a p-vector of
/// coefficients), reported only as a contrast to the simplex weighting.
struct OlsContrast {
    Eigen::VectorXd coefficients;
    double implied_adjustment = 0.0;  // v1' w
};
OlsContrast ols_contrast(const VolatilityProfile& profile, const Eigen::VectorXd& donor_effects);

/// Squared singular values of the donor matrix as shares of their sum.
std::vector<double> singular_value_shares(const Eigen::MatrixXd& donors);

}  // namespace svf
