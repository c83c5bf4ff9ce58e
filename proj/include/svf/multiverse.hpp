#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "svf/pipeline.hpp"
#include "svf/similarity.hpp"

namespace svf {

enum class LossKind { QL, MSE, APE };

LossKind parse_loss_kind(const std::string& name);  // "QL", "MSE" or "APE", case-insensitive
std::string to_string(LossKind kind);
double loss_value(LossKind kind, double prediction, double ground_truth);

/// One leave-one-out configuration; nullopt means nothing is omitted.
struct Omission {
    std::optional<std::size_t> covariate;
    std::optional<std::size_t> donor;
};

/// (n_covariates + 1) x (n_donors + 1) configurations, covariates outermost,
/// with "none" before the first index on both axes.
std::vector<Omission> enumerate_configs(std::size_t n_donors, std::size_t n_covariates);

struct MultiverseInput {
    VolatilityProfile raw_profile;  // unstandardized, names filled in
    Eigen::VectorXd donor_effects;  // fitted once, reused in every configuration
    TargetFit target;
    double ground_truth = 0.0;
    LossKind loss = LossKind::QL;
    PipelineConfig config;

    void validate() const;
};

/// Builds the input from a completed forecast run.
MultiverseInput multiverse_input(const ForecastReport& report, double ground_truth, LossKind loss,
                                 const PipelineConfig& config);

enum class RowKind { Configuration, Mean, Median, Unadjusted };

struct MultiverseRow {
    RowKind kind = RowKind::Configuration;
    std::size_t index = 0;  // enumeration order; synthetic rows follow the configurations
    std::string omitted_covariate = "None";
    std::string omitted_donor = "None";
    bool feasible = true;
    std::string error;
    double adjusted_forecast = 0.0;
    double loss = 0.0;
    double omega_star_hat = 0.0;
    Eigen::VectorXd weights;  // full donor length; the omitted donor carries zero
};

struct MultiverseResult {
    std::vector<MultiverseRow> rows;  // enumeration order, then mean, median, unadjusted
    LossKind loss = LossKind::QL;
    std::vector<std::string> donor_names;

    /// Ascending by loss, ties by enumeration order, infeasible rows last.
    std::vector<MultiverseRow> ranked() const;
};

MultiverseResult run_multiverse(const MultiverseInput& input, std::size_t threads = 1);

/// Ranked table: loss,omitted_covariate,omitted_donor,kind,adjusted_forecast,omega_star_hat,feasible,
/// then one weight column per donor.
std::string export_multiverse_csv(const MultiverseResult& result);

}  // namespace svf
