#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace svf {

/// Coefficients of one GARCH-X(m,s) variance equation.
///
/// sigma2_t = omega + sum_k alpha_k a_{t-k}^2 + sum_j beta_j sigma2_{t-j} + gamma' v_t
///
/// `gamma` may be empty, in which case covariates never enter the variance.
struct GarchParams {
    double omega = 0.0;
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> gamma;

    static GarchParams garch11(double omega, double alpha, double beta) {
        return GarchParams{omega, {alpha}, {beta}, {}};
    }

    std::size_t arch_order() const noexcept { return alpha.size(); }
    std::size_t garch_order() const noexcept { return beta.size(); }
    std::size_t max_lag() const noexcept { return std::max(alpha.size(), beta.size()); }
    double persistence() const noexcept;
    bool is_stationary() const noexcept { return persistence() < 1.0; }

    // Throws InvalidParams unless omega > 0 and every alpha/beta is >= 0.
    void validate() const;
};

/// News-shock description for one series. Times are zero-based sample
/// indices: `t_star` is the number of pre-shock observations, so the volatility
/// shock occupies indices [t_star, t_star + len_vol) and the level shock
/// occupies [t_star, t_star + len_return).
struct ShockSpec {
    std::size_t t_star = 0;
    std::size_t len_vol = 1;
    std::size_t len_return = 0;
    double mu_omega_star = 0.0;
    std::vector<double> delta;  // empty or length p; empty means zero
    double sigma_u = 0.0;
    double mu_eps_star = 0.0;
    double sigma_eps_star = 0.0;

    bool vol_active(std::size_t t) const noexcept { return t >= t_star && t < t_star + len_vol; }
    bool return_active(std::size_t t) const noexcept { return t >= t_star && t < t_star + len_return; }
};

/// i.i.d. covariate draws v_t ~ N(mean * 1, sd^2 I_p).
struct CovariateModel {
    std::size_t p = 0;
    double mean = 0.0;
    double sd = 1.0;
};

struct SimulatedPath {
    std::vector<double> returns;
    std::vector<double> sigma2;
    std::vector<double> omega_star;
    Eigen::MatrixXd covariates;  // T x p

    std::size_t size() const noexcept { return returns.size(); }
};

/// One application of the variance equation with an additive intercept shift.
/// Lag spans are ordered most recent first. Throws NonpositiveVariance when
/// the result is not strictly positive.
double variance_step(const GarchParams& params, std::span<const double> lagged_a2,
                     std::span<const double> lagged_sigma2, std::span<const double> v_t,
                     double omega_star_t);

/// omega / (1 - sum(alpha) - sum(beta)); throws NonstationaryParams otherwise.
double unconditional_variance(const GarchParams& params);

/// Simulates a path under the shock model; without a shock this is the plain
/// GARCH-X process. Pre-sample lags start at the unconditional variance.
SimulatedPath simulate_path(const GarchParams& params, const std::optional<ShockSpec>& shock,
                            std::size_t length, const CovariateModel& covariates,
                            std::uint64_t seed);

/// A contiguous block of indices whose variance intercept is shifted by `omega_star`.
struct InterceptShift {
    std::size_t start = 0;
    std::size_t length = 0;
    double omega_star = 0.0;

    bool contains(std::size_t t) const noexcept { return t >= start && t < start + length; }
};

/// Runs the variance recursion over observed (demeaned) returns. Pre-sample
/// squared returns and variances are set to `sigma2_init`. `covariates` must
/// have one row per return when the parameters carry a gamma vector.
std::vector<double> filter_variance(const GarchParams& params, std::span<const double> returns,
                                    const Eigen::MatrixXd* covariates, const InterceptShift& shift,
                                    double sigma2_init);

/// Observed information through the forecast origin t.
struct ForecastOrigin {
    std::vector<double> returns;  // a_1..a_t
    std::vector<double> sigma2;   // filtered sigma2_1..sigma2_t
    Eigen::VectorXd covariates;   // v_{t+1}, held fixed over the horizon; empty if no gamma
};

/// Builds a forecast origin by filtering `returns` with `params`.
ForecastOrigin make_origin(const GarchParams& params, std::span<const double> returns,
                           const Eigen::MatrixXd* covariates, double sigma2_init,
                           Eigen::VectorXd next_covariates = {});

struct ForecastPath {
    std::vector<double> variance;  // E[sigma2_{t+k} | F_t], k = 1..h
    bool floored = false;          // an adjusted step fell below the floor and was clamped
};

/// h-step conditional-expectation forecast. `adjustment` is added to the
/// intercept for the first `adjustment_length` steps; adjustment = 0 gives the
/// unadjusted forecast.
ForecastPath forecast(const GarchParams& params, const ForecastOrigin& origin, std::size_t horizon,
                      double adjustment = 0.0, std::size_t adjustment_length = 1,
                      double floor = 1e-12);

}  // namespace svf
