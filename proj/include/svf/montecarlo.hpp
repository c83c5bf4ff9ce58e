#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "svf/estimation.hpp"
#include "svf/garch.hpp"
#include "svf/rng.hpp"

namespace svf::mc {

/// The five shock-distribution parameters swept by the simulation study.
struct CellParams {
    double mu_V = 0.125;
    double sigma_V = 0.125;
    double mu_delta = 0.125;
    double mu_omega_star = 0.125;
    double sigma_u = 0.125;

    // Throws Validation for names outside {mu_V, sigma_V, mu_delta, mu_omega_star, sigma_u}.
    double& at(const std::string& name);
    double at(const std::string& name) const;
};

bool is_grid_parameter(const std::string& name);

/// Entries proportional to 1..p whose arithmetic mean is mu_delta: 2 mu_delta j / (p + 1).
std::vector<double> build_delta(std::size_t p, double mu_delta);

/// Everything a replication needs besides the cell parameters.
struct Design {
    std::size_t n_donors = 3;
    std::size_t p = 9;
    std::size_t t_min = 756;
    std::size_t t_max = 2520;
    GarchParams base = GarchParams::garch11(0.2, 0.1, 0.82);
    FitConfig fit = default_fit();

    static FitConfig default_fit() {
        FitConfig f;
        f.compute_stderr = false;
        return f;
    }
    void validate() const;
};

struct ReplicationOutcome {
    double ql_adjusted = 0.0;
    double ql_unadjusted = 0.0;
    double adjusted = 0.0;
    double unadjusted = 0.0;
    double ground_truth = 0.0;
    double omega_star_hat = 0.0;
    double omega_star_true = 0.0;  // the target's realized shock
    bool floored = false;
};

/// One draw of the study: n + 1 shocked series, donor fixed effects, simplex
/// weights, and both forecasts scored against the target's true variance at
/// the first shocked index. Throws ReplicationFailed.
ReplicationOutcome run_replication(const CellParams& cell, const Design& design, std::uint64_t seed);

struct CellResult {
    CellParams params;
    double win_fraction = 0.0;
    double mean_ql_adjusted = 0.0;
    double mean_ql_unadjusted = 0.0;
    std::size_t replications = 0;
    std::size_t failures = 0;
};

struct Axis {
    std::string name;
    std::vector<double> values;
};

struct GridConfig {
    CellParams fixed;
    Axis axis1{"mu_delta", {0.125, 0.5, 1.0, 2.0}};
    Axis axis2{"sigma_u", {0.125, 0.5, 1.0}};
    std::size_t replications = 200;
    Design design;
    std::uint64_t seed = kDefaultSeed;
    std::size_t threads = 1;

    void validate() const;
};

struct GridResult {
    std::string axis1_name;
    std::string axis2_name;
    std::vector<double> axis1_values;
    std::vector<double> axis2_values;
    std::vector<std::vector<CellResult>> cells;  // [axis1][axis2]
};

/// Replication r of every cell uses the seed derived from (seed, r), so cells
/// share common random numbers and the result does not depend on axis order.
CellResult run_cell(const CellParams& cell, const Design& design, std::size_t replications, std::uint64_t seed,
                    std::size_t threads = 1);

GridResult run_grid(const GridConfig& config);

/// One row per cell: axis1,axis2,win_fraction,mean_ql_adj,mean_ql_unadj,reps,failures
std::string export_grid_csv(const GridResult& result);

}  // namespace svf::mc
