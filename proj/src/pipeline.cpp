#include "svf/pipeline.hpp"

#include <algorithm>
#include <string>

#include "svf/error.hpp"

namespace svf {

namespace {

const Eigen::MatrixXd* covariates_or_null(const Eigen::MatrixXd& m) { return m.size() == 0 ? nullptr : &m; }

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, std::size_t start, std::size_t end) {
    if (m.size() == 0) return {};
    return m.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start));
}

}  // namespace

void PipelineConfig::validate() const {
    fit.validate();
    if (arch_order + garch_order == 0) throw Error(ErrorCode::Validation, "GARCH orders must not both be zero");
    if (horizon == 0) throw Error(ErrorCode::Validation, "horizon must be positive");
    if (adjustment_length > horizon) throw Error(ErrorCode::Validation, "adjustment_length must not exceed horizon");
    if (!(floor > 0.0)) throw Error(ErrorCode::Validation, "forecast floor must be positive");
    if (estimation_window && *estimation_window == 0)
        throw Error(ErrorCode::Validation, "estimation_window must be positive");
}

Donor fit_donor(const SeriesData& series, const PipelineConfig& config) {
    if (series.t_star == 0 || series.t_star + series.len_vol > series.returns.size())
        throw Error(ErrorCode::InvalidShockWindow,
                    "donor '" + series.name + "': shock window must lie inside the return series");
    if (series.garch_covariates.size() != 0 &&
        static_cast<std::size_t>(series.garch_covariates.rows()) != series.returns.size())
        throw Error(ErrorCode::DimensionMismatch, "donor '" + series.name + "': covariate rows must match returns");
    const std::size_t start =
        config.estimation_window && *config.estimation_window < series.t_star ? series.t_star - *config.estimation_window : 0;
    std::size_t end = series.returns.size();
    if (config.donor_post_shock_rows)
        end = std::min(end, series.t_star + series.len_vol + *config.donor_post_shock_rows);

    const std::span<const double> window(series.returns.data() + start, end - start);
    const Eigen::MatrixXd cov = rows_of(series.garch_covariates, start, end);

    Donor d;
    d.name = series.name;
    d.t_star = series.t_star;
    d.len_vol = series.len_vol;
    d.profile = series.profile;
    d.fit = fit_shock_fixed_effect(window, covariates_or_null(cov), series.t_star - start, series.len_vol,
                                   config.arch_order, config.garch_order, config.fit);
    d.omega_star_hat = d.fit.omega_star_hat.value_or(0.0);
    return d;
}

TargetFit fit_target(const SeriesData& series, const PipelineConfig& config) {
    if (series.t_star == 0 || series.t_star > series.returns.size())
        throw Error(ErrorCode::InvalidShockWindow, "target '" + series.name + "': t_star must lie inside the series");
    const std::size_t start =
        config.estimation_window && *config.estimation_window < series.t_star ? series.t_star - *config.estimation_window : 0;
    const std::size_t end = series.t_star;
    const std::span<const double> window(series.returns.data() + start, end - start);
    const Eigen::MatrixXd cov = rows_of(series.garch_covariates, start, end);

    TargetFit out;
    out.name = series.name;
    out.fit = fit_garch(window, covariates_or_null(cov), config.arch_order, config.garch_order, config.fit);

    FitConfig centered = config.fit;
    centered.demean = Demean::Supplied;
    centered.supplied_mean = out.fit.mean;
    const std::vector<double> a = demean_returns(window, centered);
    const double s2_init = initial_variance(out.fit.params, a, config.fit.variance_init);
    Eigen::VectorXd next_cov;
    if (series.garch_covariates.size() != 0 && series.t_star < static_cast<std::size_t>(series.garch_covariates.rows()))
        next_cov = series.garch_covariates.row(static_cast<Eigen::Index>(series.t_star)).transpose();
    out.origin = make_origin(out.fit.params, a, covariates_or_null(cov), s2_init, next_cov);
    out.unadjusted = forecast(out.fit.params, out.origin, config.horizon, 0.0, config.adjustment_length, config.floor);
    return out;
}

Adjustment adjust(const VolatilityProfile& raw_profile, const Eigen::VectorXd& donor_effects, const TargetFit& target,
                  const PipelineConfig& config) {
    Adjustment out;
    out.profile = standardize(raw_profile);
    out.weights = solve_weights(out.profile, config.seminorm);
    out.omega_star_hat = aggregate_shock(out.weights, donor_effects);
    out.mean_omega_star = mean_shock(donor_effects);
    out.adjusted = forecast(target.fit.params, target.origin, config.horizon, out.omega_star_hat,
                            config.adjustment_length, config.floor);
    out.mean_adjusted = forecast(target.fit.params, target.origin, config.horizon, out.mean_omega_star,
                                 config.adjustment_length, config.floor);
    return out;
}

VolatilityProfile build_profile(const Eigen::VectorXd& target_profile, const std::vector<Donor>& donors,
                                const std::vector<std::string>& covariate_names) {
    VolatilityProfile prof;
    prof.target = target_profile;
    prof.covariate_names = covariate_names;
    prof.donors.resize(target_profile.size(), static_cast<Eigen::Index>(donors.size()));
    for (std::size_t j = 0; j < donors.size(); ++j) {
        if (donors[j].profile.size() != target_profile.size())
            throw Error(ErrorCode::DimensionMismatch,
                        "donor '" + donors[j].name + "' has " + std::to_string(donors[j].profile.size()) +
                            " profile entries, expected " + std::to_string(target_profile.size()));
        prof.donors.col(static_cast<Eigen::Index>(j)) = donors[j].profile;
        prof.donor_names.push_back(donors[j].name);
    }
    prof.validate();
    return prof;
}

Eigen::VectorXd donor_effects(const std::vector<Donor>& donors) {
    Eigen::VectorXd e(static_cast<Eigen::Index>(donors.size()));
    for (std::size_t j = 0; j < donors.size(); ++j) e[static_cast<Eigen::Index>(j)] = donors[j].omega_star_hat;
    return e;
}

ForecastReport run_forecast(const SeriesData& target, const std::vector<SeriesData>& donors,
                            const std::vector<std::string>& covariate_names, const PipelineConfig& config,
                            std::optional<double> ground_truth) {
    config.validate();
    if (donors.empty()) throw Error(ErrorCode::Validation, "at least one donor is required");
    ForecastReport rep;
    for (const auto& s : donors) {
        try {
            rep.donors.push_back(fit_donor(s, config));
        } catch (const Error& e) {
            throw Error(e.code(), "donor '" + s.name + "' failed: " + e.what());
        }
    }
    rep.target = fit_target(target, config);
    rep.raw_profile = build_profile(target.profile, rep.donors, covariate_names);
    const Eigen::VectorXd effects = donor_effects(rep.donors);
    rep.adjustment = adjust(rep.raw_profile, effects, rep.target, config);
    rep.ols = ols_contrast(rep.adjustment.profile, effects);
    rep.singular_value_shares = singular_value_shares(rep.adjustment.profile.donors);
    if (ground_truth) {
        rep.ground_truth = ground_truth;
        ForecastLosses l;
        l.unadjusted = losses(rep.target.unadjusted.variance.front(), *ground_truth);
        l.adjusted = losses(rep.adjustment.adjusted.variance.front(), *ground_truth);
        l.mean_adjusted = losses(rep.adjustment.mean_adjusted.variance.front(), *ground_truth);
        rep.losses = l;
    }
    return rep;
}

}  // namespace svf
