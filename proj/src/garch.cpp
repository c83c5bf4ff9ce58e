#include "svf/garch.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "svf/error.hpp"
#include "svf/rng.hpp"

namespace svf {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void require_covariate_dims(const GarchParams& params, const Eigen::MatrixXd* covariates,
                            std::size_t length) {
    if (params.gamma.empty()) return;
    if (covariates == nullptr || static_cast<std::size_t>(covariates->rows()) != length ||
        static_cast<std::size_t>(covariates->cols()) != params.gamma.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "gamma has " + std::to_string(params.gamma.size()) +
                        " entries but covariates do not supply a matching T x p matrix");
    }
}

// Most-recent-first lag buffer over a growing history.
class LagWindow {
public:
    LagWindow(std::size_t order, double init) : values_(order, init) {}

    void push(double x) {
        if (values_.empty()) return;
        for (std::size_t i = values_.size() - 1; i > 0; --i) values_[i] = values_[i - 1];
        values_[0] = x;
    }

    std::span<const double> view() const { return values_; }

private:
    std::vector<double> values_;
};

}  // namespace

double GarchParams::persistence() const noexcept {
    return std::accumulate(alpha.begin(), alpha.end(), 0.0) +
           std::accumulate(beta.begin(), beta.end(), 0.0);
}

void GarchParams::validate() const {
    if (!(omega > 0.0) || !std::isfinite(omega))
        throw Error(ErrorCode::InvalidParams, "omega must be positive, got " + std::to_string(omega));
    for (double a : alpha)
        if (!(a >= 0.0)) throw Error(ErrorCode::InvalidParams, "alpha coefficients must be >= 0");
    for (double b : beta)
        if (!(b >= 0.0)) throw Error(ErrorCode::InvalidParams, "beta coefficients must be >= 0");
    for (double g : gamma)
        if (!std::isfinite(g)) throw Error(ErrorCode::InvalidParams, "gamma must be finite");
}

double variance_step(const GarchParams& params, std::span<const double> lagged_a2,
                     std::span<const double> lagged_sigma2, std::span<const double> v_t,
                     double omega_star_t) {
    if (lagged_a2.size() != params.alpha.size() || lagged_sigma2.size() != params.beta.size())
        throw Error(ErrorCode::DimensionMismatch, "lag vectors must match the ARCH/GARCH orders");
    if (!params.gamma.empty() && v_t.size() != params.gamma.size())
        throw Error(ErrorCode::DimensionMismatch, "covariate vector length must match gamma");

    double s2 = params.omega + omega_star_t + dot(params.alpha, lagged_a2) +
                dot(params.beta, lagged_sigma2);
    if (!params.gamma.empty()) s2 += dot(params.gamma, v_t);
    if (!(s2 > 0.0) || !std::isfinite(s2))
        throw Error(ErrorCode::NonpositiveVariance,
                    "variance equation produced " + std::to_string(s2));
    return s2;
}

double unconditional_variance(const GarchParams& params) {
    params.validate();
    const double pers = params.persistence();
    if (pers >= 1.0)
        throw Error(ErrorCode::NonstationaryParams,
                    "sum(alpha) + sum(beta) = " + std::to_string(pers) + " >= 1");
    return params.omega / (1.0 - pers);
}

SimulatedPath simulate_path(const GarchParams& params, const std::optional<ShockSpec>& shock,
                            std::size_t length, const CovariateModel& covariates,
                            std::uint64_t seed) {
    const double s2_init = unconditional_variance(params);
    if (length == 0) throw Error(ErrorCode::Validation, "path length must be positive");
    if (!params.gamma.empty() && params.gamma.size() != covariates.p)
        throw Error(ErrorCode::DimensionMismatch, "gamma length must equal covariate dimension p");
    if (covariates.sd < 0.0) throw Error(ErrorCode::Validation, "covariate sd must be >= 0");
    if (shock) {
        if (shock->t_star == 0 || shock->t_star >= length)
            throw Error(ErrorCode::InvalidShockWindow, "t_star must satisfy 0 < t_star < T");
        if (shock->t_star + shock->len_vol > length || shock->t_star + shock->len_return > length)
            throw Error(ErrorCode::InvalidShockWindow, "shock window extends past the end of the path");
        if (!shock->delta.empty() && shock->delta.size() != covariates.p)
            throw Error(ErrorCode::DimensionMismatch, "delta length must equal covariate dimension p");
        if (shock->sigma_u < 0.0 || shock->sigma_eps_star < 0.0)
            throw Error(ErrorCode::Validation, "shock standard deviations must be >= 0");
    }

    Rng rng(seed);
    std::normal_distribution<double> std_normal(0.0, 1.0);

    SimulatedPath path;
    path.returns.resize(length);
    path.sigma2.resize(length);
    path.omega_star.assign(length, 0.0);
    path.covariates.resize(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(covariates.p));

    // The level-shock innovation is drawn once per series.
    double eps_star = 0.0;
    if (shock) eps_star = shock->mu_eps_star + shock->sigma_eps_star * std_normal(rng);

    LagWindow a2_lags(params.arch_order(), s2_init);
    LagWindow s2_lags(params.garch_order(), s2_init);
    std::vector<double> v(covariates.p);

    for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t j = 0; j < covariates.p; ++j) {
            v[j] = covariates.mean + covariates.sd * std_normal(rng);
            path.covariates(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = v[j];
        }
        double omega_star = 0.0;
        if (shock && shock->vol_active(t)) {
            const double u = shock->sigma_u * std_normal(rng);
            const double signal = shock->delta.empty() ? 0.0 : dot(shock->delta, v);
            omega_star = shock->mu_omega_star + signal + u;
        }
        const double eps = std_normal(rng);
        const double s2 = variance_step(params, a2_lags.view(), s2_lags.view(), v, omega_star);
        const double z = (shock && shock->return_active(t)) ? eps_star : eps;
        const double a = std::sqrt(s2) * z;

        path.sigma2[t] = s2;
        path.returns[t] = a;
        path.omega_star[t] = omega_star;
        a2_lags.push(a * a);
        s2_lags.push(s2);
    }
    return path;
}

std::vector<double> filter_variance(const GarchParams& params, std::span<const double> returns,
                                    const Eigen::MatrixXd* covariates, const InterceptShift& shift,
                                    double sigma2_init) {
    require_covariate_dims(params, covariates, returns.size());
    if (!(sigma2_init > 0.0))
        throw Error(ErrorCode::NonpositiveVariance, "initial variance must be positive");

    const std::size_t m = params.arch_order();
    const std::size_t s = params.garch_order();
    const std::size_t p = params.gamma.size();
    std::vector<double> sigma2(returns.size());

    // GARCH(1,1) without covariates dominates runtime in estimation.
    if (m == 1 && s == 1 && p == 0) {
        const double w = params.omega, al = params.alpha[0], be = params.beta[0];
        double prev_a2 = sigma2_init, prev_s2 = sigma2_init;
        for (std::size_t t = 0; t < returns.size(); ++t) {
            double s2 = w + al * prev_a2 + be * prev_s2;
            if (shift.contains(t)) s2 += shift.omega_star;
            if (!(s2 > 0.0) || !std::isfinite(s2))
                throw Error(ErrorCode::NonpositiveVariance,
                            "variance recursion produced " + std::to_string(s2) + " at index " +
                                std::to_string(t));
            sigma2[t] = s2;
            prev_a2 = returns[t] * returns[t];
            prev_s2 = s2;
        }
        return sigma2;
    }

    LagWindow a2_lags(m, sigma2_init);
    LagWindow s2_lags(s, sigma2_init);
    std::vector<double> v(p);
    for (std::size_t t = 0; t < returns.size(); ++t) {
        for (std::size_t j = 0; j < p; ++j)
            v[j] = (*covariates)(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
        const double shock = shift.contains(t) ? shift.omega_star : 0.0;
        sigma2[t] = variance_step(params, a2_lags.view(), s2_lags.view(), v, shock);
        a2_lags.push(returns[t] * returns[t]);
        s2_lags.push(sigma2[t]);
    }
    return sigma2;
}

ForecastOrigin make_origin(const GarchParams& params, std::span<const double> returns,
                           const Eigen::MatrixXd* covariates, double sigma2_init,
                           Eigen::VectorXd next_covariates) {
    ForecastOrigin origin;
    origin.returns.assign(returns.begin(), returns.end());
    origin.sigma2 = filter_variance(params, returns, covariates, InterceptShift{}, sigma2_init);
    if (!params.gamma.empty() && next_covariates.size() == 0 && covariates != nullptr &&
        covariates->rows() > 0) {
        next_covariates = covariates->row(covariates->rows() - 1).transpose();
    }
    origin.covariates = std::move(next_covariates);
    return origin;
}

ForecastPath forecast(const GarchParams& params, const ForecastOrigin& origin, std::size_t horizon,
                      double adjustment, std::size_t adjustment_length, double floor) {
    params.validate();
    if (horizon == 0) throw Error(ErrorCode::Validation, "forecast horizon must be positive");
    if (adjustment_length > horizon)
        throw Error(ErrorCode::Validation, "adjustment_length must not exceed the horizon");
    if (origin.returns.size() != origin.sigma2.size())
        throw Error(ErrorCode::DimensionMismatch, "origin returns and variances differ in length");
    const std::size_t m = params.arch_order();
    const std::size_t s = params.garch_order();
    if (origin.returns.size() < std::max(m, s))
        throw Error(ErrorCode::InsufficientHistory,
                    "forecast needs at least " + std::to_string(std::max(m, s)) + " observations");
    if (!params.gamma.empty() &&
        static_cast<std::size_t>(origin.covariates.size()) != params.gamma.size())
        throw Error(ErrorCode::DimensionMismatch, "forecast covariates must match gamma");

    // Lags most recent first; in-horizon values are replaced by their forecasts
    // since E[a^2_{t+k} | F_t] = E[sigma2_{t+k} | F_t] for k >= 1.
    const std::size_t n = origin.returns.size();
    std::vector<double> a2(m), s2(s);
    for (std::size_t k = 0; k < m; ++k) a2[k] = origin.returns[n - 1 - k] * origin.returns[n - 1 - k];
    for (std::size_t j = 0; j < s; ++j) s2[j] = origin.sigma2[n - 1 - j];

    const std::span<const double> v(origin.covariates.data(),
                                    static_cast<std::size_t>(origin.covariates.size()));
    ForecastPath out;
    out.variance.reserve(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        double next = variance_step(params, a2, s2, v, 0.0);
        if (k < adjustment_length && adjustment != 0.0) {
            next += adjustment;
            if (!(next > floor)) {
                next = floor;
                out.floored = true;
            }
        }
        out.variance.push_back(next);
        if (m > 0) {
            for (std::size_t i = m - 1; i > 0; --i) a2[i] = a2[i - 1];
            a2[0] = next;
        }
        if (s > 0) {
            for (std::size_t i = s - 1; i > 0; --i) s2[i] = s2[i - 1];
            s2[0] = next;
        }
    }
    return out;
}

}  // namespace svf
