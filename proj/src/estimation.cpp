#include "svf/estimation.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "svf/error.hpp"
#include "svf/optimize.hpp"

namespace svf {

namespace {

constexpr double kInitAlpha = 0.05;
constexpr double kInitBeta = 0.85;

double sample_variance_about_zero(std::span<const double> a) {
    double ss = 0.0;
    for (double x : a) ss += x * x;
    return ss / static_cast<double>(a.size());
}

FitResult fit_impl(std::span<const double> raw, const Eigen::MatrixXd* covariates, std::size_t m,
                   std::size_t s, std::optional<ShockWindow> window, const FitConfig& config) {
    config.validate();
    const std::size_t n_obs = raw.size();
    const std::size_t min_len = 10 * (m + s + 1);
    if (n_obs <= min_len)
        throw Error(ErrorCode::InsufficientHistory,
                    "need more than " + std::to_string(min_len) + " returns, got " + std::to_string(n_obs));
    const std::size_t p = covariates ? static_cast<std::size_t>(covariates->cols()) : 0;
    if (covariates && static_cast<std::size_t>(covariates->rows()) != n_obs)
        throw Error(ErrorCode::DimensionMismatch, "covariate rows must match the number of returns");

    FitResult out;
    out.observations = n_obs;
    const std::vector<double> a = demean_returns(raw, config, &out.mean);
    const double var = sample_variance_about_zero(a);
    if (!(var > 0.0) || !std::isfinite(var))
        throw Error(ErrorCode::DegenerateData, "returns have zero variance");
    // Constant input leaves only rounding noise after centering.
    double scale_ref = 0.0;
    for (double r : raw) scale_ref = std::max(scale_ref, std::abs(r));
    if (std::sqrt(var) <= 1e-12 * scale_ref)
        throw Error(ErrorCode::DegenerateData, "returns have zero variance");

    GarchTransform tr{m, s, p, window.has_value(), var};
    const ShockWindow win = window.value_or(ShockWindow{});

    GarchParams init;
    init.alpha.assign(m, kInitAlpha / static_cast<double>(m));
    init.beta.assign(s, kInitBeta / static_cast<double>(s));
    init.gamma.assign(p, 0.0);
    init.omega = var * (1.0 - kInitAlpha - kInitBeta);

    const double inv_n = 1.0 / static_cast<double>(n_obs);
    const optim::Objective objective = [&](const Eigen::VectorXd& theta) {
        GarchParams prm;
        double omega_star = 0.0;
        if (!tr.unpack(theta, prm, omega_star)) return std::numeric_limits<double>::infinity();
        try {
            const double ll = gaussian_qml_loglik(prm, omega_star, win, a, covariates, config.variance_init);
            return std::isfinite(ll) ? -ll * inv_n : std::numeric_limits<double>::infinity();
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const Eigen::VectorXd theta0 = tr.pack(init, 0.0);
    out.initial_loglik = -objective(theta0) * static_cast<double>(n_obs);

    optim::NelderMeadOptions nm_opts;
    nm_opts.max_iterations = config.max_iterations;
    nm_opts.ftol = config.tolerance;
    nm_opts.xtol = std::sqrt(config.tolerance);
    nm_opts.initial_step = 0.25;
    const optim::Result nm = optim::nelder_mead(objective, theta0, nm_opts);

    optim::BfgsOptions q_opts;
    q_opts.max_iterations = std::max(50, config.max_iterations / 20);
    q_opts.gtol = std::max(1e-7, std::sqrt(config.tolerance) * 1e-2);
    const optim::Result qn = optim::bfgs(objective, nm.x, q_opts);

    const optim::Result& best = (std::isfinite(qn.value) && qn.value <= nm.value) ? qn : nm;
    double omega_star = 0.0;
    if (!tr.unpack(best.x, out.params, omega_star) || !std::isfinite(best.value)) {
        out.params = init;
        out.loglik = out.initial_loglik;
        out.converged = false;
        out.iterations = nm.iterations + qn.iterations;
        if (window) out.omega_star_hat = 0.0;
        return out;
    }
    out.loglik = -best.value * static_cast<double>(n_obs);
    out.converged = nm.converged || qn.converged;
    out.iterations = nm.iterations + qn.iterations;
    if (window) out.omega_star_hat = omega_star;
    if (!config.compute_stderr) return out;

    // Curvature of the log-likelihood in natural coordinates.
    const optim::Objective natural = [&](const Eigen::VectorXd& x) {
        GarchParams prm;
        prm.omega = x[0];
        Eigen::Index k = 1;
        prm.alpha.resize(m);
        prm.beta.resize(s);
        prm.gamma.resize(p);
        for (std::size_t i = 0; i < m; ++i) prm.alpha[i] = x[k++];
        for (std::size_t i = 0; i < s; ++i) prm.beta[i] = x[k++];
        for (std::size_t i = 0; i < p; ++i) prm.gamma[i] = x[k++];
        const double ws = window ? x[k] : 0.0;
        try {
            return -gaussian_qml_loglik(prm, ws, win, a, covariates, config.variance_init);
        } catch (const Error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    Eigen::VectorXd xhat(static_cast<Eigen::Index>(tr.dimension()));
    {
        Eigen::Index k = 0;
        xhat[k++] = out.params.omega;
        for (double v : out.params.alpha) xhat[k++] = v;
        for (double v : out.params.beta) xhat[k++] = v;
        for (double v : out.params.gamma) xhat[k++] = v;
        if (window) xhat[k++] = omega_star;
    }
    const Eigen::MatrixXd hess = optim::numeric_hessian(natural, xhat, 1e-4);
    if (hess.allFinite()) {
        Eigen::LLT<Eigen::MatrixXd> llt(hess);
        if (llt.info() == Eigen::Success) {
            const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(hess.rows(), hess.cols()));
            std::vector<double> se(static_cast<std::size_t>(cov.rows()));
            bool ok = true;
            for (Eigen::Index i = 0; i < cov.rows(); ++i) {
                ok = ok && cov(i, i) > 0.0;
                se[static_cast<std::size_t>(i)] = std::sqrt(std::max(cov(i, i), 0.0));
            }
            if (ok) out.stderr_proxy = std::move(se);
        }
    }
    return out;
}

}  // namespace

void FitConfig::validate() const {
    if (max_iterations <= 0) throw Error(ErrorCode::Validation, "max_iterations must be positive");
    if (!(tolerance > 0.0)) throw Error(ErrorCode::Validation, "tolerance must be positive");
}

std::vector<double> demean_returns(std::span<const double> returns, const FitConfig& config,
                                   double* mean_out) {
    double mu = 0.0;
    switch (config.demean) {
        case Demean::SampleMean:
            mu = returns.empty() ? 0.0
                                 : std::accumulate(returns.begin(), returns.end(), 0.0) /
                                       static_cast<double>(returns.size());
            break;
        case Demean::Zero: mu = 0.0; break;
        case Demean::Supplied: mu = config.supplied_mean; break;
    }
    std::vector<double> a(returns.size());
    for (std::size_t t = 0; t < returns.size(); ++t) a[t] = returns[t] - mu;
    if (mean_out) *mean_out = mu;
    return a;
}

double initial_variance(const GarchParams& params, std::span<const double> returns, VarianceInit init) {
    if (init == VarianceInit::Unconditional && params.is_stationary() && params.omega > 0.0)
        return params.omega / (1.0 - params.persistence());
    if (returns.empty()) throw Error(ErrorCode::InsufficientHistory, "no returns to initialize variance");
    return sample_variance_about_zero(returns);
}

double gaussian_qml_loglik(const GarchParams& params, double omega_star, const ShockWindow& window,
                           std::span<const double> returns, const Eigen::MatrixXd* covariates,
                           VarianceInit init) {
    if (window.start + window.length > returns.size())
        throw Error(ErrorCode::InvalidShockWindow, "shock window extends past the end of the returns");
    const double s2_init = initial_variance(params, returns, init);
    const std::vector<double> sigma2 =
        filter_variance(params, returns, covariates, InterceptShift{window.start, window.length, omega_star},
                        s2_init);
    double acc = 0.0;
    for (std::size_t t = 0; t < returns.size(); ++t)
        acc += std::log(sigma2[t]) + returns[t] * returns[t] / sigma2[t];
    return -0.5 * acc;
}

bool GarchTransform::unpack(const Eigen::VectorXd& theta, GarchParams& params, double& omega_star) const {
    if (static_cast<std::size_t>(theta.size()) != dimension())
        throw Error(ErrorCode::DimensionMismatch, "parameter vector has the wrong length");
    if (!theta.allFinite()) return false;
    params.omega = std::exp(theta[0]);
    if (!(params.omega > 0.0) || !std::isfinite(params.omega)) return false;

    // Softmax with an implicit zero logit for the slack term, shifted for stability.
    const std::size_t k = m + s;
    double top = 0.0;
    for (std::size_t i = 0; i < k; ++i) top = std::max(top, theta[static_cast<Eigen::Index>(1 + i)]);
    double denom = std::exp(-top);
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) {
        w[i] = std::exp(theta[static_cast<Eigen::Index>(1 + i)] - top);
        denom += w[i];
    }
    const double slack = std::exp(-top) / denom;
    params.alpha.resize(m);
    params.beta.resize(s);
    for (std::size_t i = 0; i < m; ++i) params.alpha[i] = w[i] / denom;
    for (std::size_t i = 0; i < s; ++i) params.beta[i] = w[m + i] / denom;
    if (!(slack > 0.0) || !(params.persistence() < 1.0)) return false;

    params.gamma.resize(p);
    Eigen::Index at = static_cast<Eigen::Index>(1 + k);
    for (std::size_t i = 0; i < p; ++i) params.gamma[i] = theta[at++] * scale;
    omega_star = has_shock ? theta[at] * scale : 0.0;
    return true;
}

Eigen::VectorXd GarchTransform::pack(const GarchParams& params, double omega_star) const {
    if (params.alpha.size() != m || params.beta.size() != s || params.gamma.size() != p)
        throw Error(ErrorCode::DimensionMismatch, "parameters do not match the transform orders");
    const double slack = 1.0 - params.persistence();
    if (!(slack > 0.0) || !(params.omega > 0.0))
        throw Error(ErrorCode::InvalidParams, "cannot pack parameters outside the feasible region");
    Eigen::VectorXd theta(static_cast<Eigen::Index>(dimension()));
    theta[0] = std::log(params.omega);
    Eigen::Index at = 1;
    const double floor = 1e-12;
    for (double v : params.alpha) theta[at++] = std::log(std::max(v, floor) / slack);
    for (double v : params.beta) theta[at++] = std::log(std::max(v, floor) / slack);
    for (double v : params.gamma) theta[at++] = v / scale;
    if (has_shock) theta[at] = omega_star / scale;
    return theta;
}

FitResult fit_garch(std::span<const double> returns, const Eigen::MatrixXd* covariates,
                    std::size_t arch_order, std::size_t garch_order, const FitConfig& config) {
    return fit_impl(returns, covariates, arch_order, garch_order, std::nullopt, config);
}

FitResult fit_shock_fixed_effect(std::span<const double> returns, const Eigen::MatrixXd* covariates,
                                 std::size_t t_star, std::size_t len_vol, std::size_t arch_order,
                                 std::size_t garch_order, const FitConfig& config) {
    if (len_vol == 0) throw Error(ErrorCode::InvalidShockWindow, "len_vol must be at least 1");
    if (t_star + len_vol > returns.size())
        throw Error(ErrorCode::InvalidShockWindow,
                    "t_star + len_vol = " + std::to_string(t_star + len_vol) + " exceeds series length " +
                        std::to_string(returns.size()));
    // The dummy is collinear with the intercept unless enough observations lie outside it.
    const std::size_t outside = returns.size() - len_vol;
    if (t_star == 0 || outside <= 10 * (arch_order + garch_order + 1))
        throw Error(ErrorCode::InvalidShockWindow,
                    "shock window leaves too few observations to identify the intercept");
    return fit_impl(returns, covariates, arch_order, garch_order, ShockWindow{t_star, len_vol}, config);
}

}  // namespace svf
