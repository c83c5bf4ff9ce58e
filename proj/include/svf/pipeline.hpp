#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "svf/estimation.hpp"
#include "svf/evaluation.hpp"
#include "svf/garch.hpp"
#include "svf/similarity.hpp"

namespace svf {

/// Returns and shock timing for one series. `t_star` counts the pre-shock
/// observations, so the shock window starts at zero-based index `t_star`.
struct SeriesData {
    std::string name;
    std::vector<double> returns;
    std::size_t t_star = 0;
    std::size_t len_vol = 1;
    Eigen::VectorXd profile;          // shock-time covariates for the volatility profile
    Eigen::MatrixXd garch_covariates;  // optional T x q regressors entering the variance (GARCH-X)
};

struct PipelineConfig {
    FitConfig fit;
    std::size_t arch_order = 1;
    std::size_t garch_order = 1;
    std::size_t horizon = 1;
    std::size_t adjustment_length = 1;
    double floor = 1e-12;
    std::optional<std::size_t> estimation_window;    // pre-shock rows used; all when unset
    std::optional<std::size_t> donor_post_shock_rows;  // rows after the shock window kept for donors
    std::optional<Eigen::MatrixXd> seminorm;

    void validate() const;
};

/// A donor after fitting: its estimated shock effect and fit diagnostics.
struct Donor {
    std::string name;
    std::size_t t_star = 0;
    std::size_t len_vol = 1;
    Eigen::VectorXd profile;
    FitResult fit;
    double omega_star_hat = 0.0;
};

Donor fit_donor(const SeriesData& series, const PipelineConfig& config);

/// The target fitted on its pre-shock sample with its unadjusted forecast.
struct TargetFit {
    std::string name;
    FitResult fit;
    ForecastOrigin origin;
    ForecastPath unadjusted;
};

TargetFit fit_target(const SeriesData& series, const PipelineConfig& config);

struct Adjustment {
    VolatilityProfile profile;  // standardized
    WeightSolution weights;
    double omega_star_hat = 0.0;
    double mean_omega_star = 0.0;
    ForecastPath adjusted;
    ForecastPath mean_adjusted;
};

/// Standardizes the raw profile, solves the simplex weights, aggregates the
/// donor effects and adds the result to the target's forecast.
Adjustment adjust(const VolatilityProfile& raw_profile, const Eigen::VectorXd& donor_effects,
                  const TargetFit& target, const PipelineConfig& config);

struct ForecastLosses {
    LossTriple unadjusted;
    LossTriple adjusted;
    LossTriple mean_adjusted;
};

struct ForecastReport {
    TargetFit target;
    std::vector<Donor> donors;
    VolatilityProfile raw_profile;
    Adjustment adjustment;
    OlsContrast ols;
    std::vector<double> singular_value_shares;
    std::optional<double> ground_truth;
    std::optional<ForecastLosses> losses;  // one-step forecasts against the ground truth
};

/// Assembles the raw profile from fitted donors and the target's profile vector.
VolatilityProfile build_profile(const Eigen::VectorXd& target_profile, const std::vector<Donor>& donors,
                                const std::vector<std::string>& covariate_names);

Eigen::VectorXd donor_effects(const std::vector<Donor>& donors);

/// Fits every donor and the target, then forecasts with and without adjustment.
ForecastReport run_forecast(const SeriesData& target, const std::vector<SeriesData>& donors,
                            const std::vector<std::string>& covariate_names, const PipelineConfig& config,
                            std::optional<double> ground_truth = std::nullopt);

}  // namespace svf
