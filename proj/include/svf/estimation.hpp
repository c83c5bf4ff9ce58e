#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "svf/garch.hpp"

namespace svf {

enum class Demean { SampleMean, Zero, Supplied };
enum class VarianceInit { Unconditional, SampleVariance };

struct FitConfig {
    int max_iterations = 5000;
    double tolerance = 1e-9;
    Demean demean = Demean::SampleMean;
    double supplied_mean = 0.0;
    VarianceInit variance_init = VarianceInit::Unconditional;
    bool compute_stderr = true;  // numeric Hessian at the optimum

    void validate() const;
};

/// Indices [start, start + length) carrying the shock dummy.
struct ShockWindow {
    std::size_t start = 0;
    std::size_t length = 0;
};

struct FitResult {
    GarchParams params;
    std::optional<double> omega_star_hat;
    double loglik = 0.0;
    double initial_loglik = 0.0;
    bool converged = false;
    int iterations = 0;
    std::optional<std::vector<double>> stderr_proxy;  // omega, alpha.., beta.., gamma.., omega_star
    double mean = 0.0;                                // subtracted from the raw returns
    std::size_t observations = 0;
};

/// Centers returns according to the configured mean model.
std::vector<double> demean_returns(std::span<const double> returns, const FitConfig& config,
                                   double* mean_out = nullptr);

/// Pre-sample variance used by the likelihood recursion.
double initial_variance(const GarchParams& params, std::span<const double> returns, VarianceInit init);

/// Gaussian quasi log-likelihood with constants dropped:
/// -1/2 sum_t [log sigma2_t + a_t^2 / sigma2_t], where sigma2_t follows the
/// variance recursion with the intercept shifted by omega_star on `window`.
double gaussian_qml_loglik(const GarchParams& params, double omega_star, const ShockWindow& window,
                           std::span<const double> returns, const Eigen::MatrixXd* covariates,
                           VarianceInit init = VarianceInit::Unconditional);

/// Unconstrained coordinates for the optimizer. omega = exp(theta_0);
/// (alpha, beta, slack) = softmax(theta_1..theta_{m+s}, 0), which keeps every
/// coefficient positive and their sum below one. gamma and omega_star are
/// carried in units of `scale` (the sample variance).
struct GarchTransform {
    std::size_t m = 1;
    std::size_t s = 1;
    std::size_t p = 0;
    bool has_shock = false;
    double scale = 1.0;

    std::size_t dimension() const noexcept { return 1 + m + s + p + (has_shock ? 1 : 0); }
    // Returns false when rounding pushes the point onto the stationarity boundary.
    bool unpack(const Eigen::VectorXd& theta, GarchParams& params, double& omega_star) const;
    Eigen::VectorXd pack(const GarchParams& params, double omega_star) const;
};

FitResult fit_garch(std::span<const double> returns, const Eigen::MatrixXd* covariates,
                    std::size_t arch_order = 1, std::size_t garch_order = 1, const FitConfig& config = {});

/// Joint QML fit of the GARCH parameters and a scalar intercept shift on
/// indices [t_star, t_star + len_vol).
FitResult fit_shock_fixed_effect(std::span<const double> returns, const Eigen::MatrixXd* covariates,
                                 std::size_t t_star, std::size_t len_vol, std::size_t arch_order = 1,
                                 std::size_t garch_order = 1, const FitConfig& config = {});

}  // namespace svf
