#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "svf/error.hpp"
#include "svf/estimation.hpp"
#include "svf/rng.hpp"

using namespace svf;
using svf::test::median;

namespace {

const GarchParams kBase = GarchParams::garch11(0.2, 0.1, 0.82);

FitConfig quick() {
    FitConfig c;
    c.compute_stderr = false;
    return c;
}

// P(chi2_1 > x)
double chi2_1_upper(double x) { return std::erfc(std::sqrt(x / 2.0)); }

}  // namespace

TEST_CASE("constant-variance likelihood reduces to the i.i.d. Gaussian one") {
    const auto path = simulate_path(kBase, std::nullopt, 500, {}, 1);
    const GarchParams flat = GarchParams::garch11(1.7, 0.0, 0.0);
    double expect = 0.0;
    for (double a : path.returns) expect += -0.5 * (std::log(1.7) + a * a / 1.7);
    CHECK(gaussian_qml_loglik(flat, 0.0, {}, path.returns, nullptr) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("an empty shock window ignores omega_star") {
    const auto path = simulate_path(kBase, std::nullopt, 300, {}, 2);
    const double a = gaussian_qml_loglik(kBase, 0.0, {}, path.returns, nullptr);
    const double b = gaussian_qml_loglik(kBase, 123.0, {}, path.returns, nullptr);
    CHECK(a == b);
    const double c = gaussian_qml_loglik(kBase, 3.0, {150, 1}, path.returns, nullptr);
    CHECK(c != a);
}

TEST_CASE("true parameters beat perturbed intercepts in nearly every seed") {
    int wins = 0;
    const int seeds = 40;
    for (int s = 0; s < seeds; ++s) {
        const auto path = simulate_path(kBase, std::nullopt, 5000, {}, derive_seed(77, {static_cast<std::uint64_t>(s)}));
        const double truth = gaussian_qml_loglik(kBase, 0.0, {}, path.returns, nullptr);
        const double lo = gaussian_qml_loglik(GarchParams::garch11(0.1, 0.1, 0.82), 0.0, {}, path.returns, nullptr);
        const double hi = gaussian_qml_loglik(GarchParams::garch11(0.3, 0.1, 0.82), 0.0, {}, path.returns, nullptr);
        if (truth > lo && truth > hi) ++wins;
    }
    CHECK(wins >= 38);  // >= 95% of seeds
}

TEST_CASE("transform keeps every unpacked point inside the stationary region") {
    GarchTransform tr{2, 1, 0, true, 2.0};
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 5.0);
    for (int k = 0; k < 1000; ++k) {
        Eigen::VectorXd theta(static_cast<Eigen::Index>(tr.dimension()));
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = n(rng);
        GarchParams p;
        double w = 0.0;
        if (!tr.unpack(theta, p, w)) continue;
        CHECK(p.omega > 0.0);
        for (double a : p.alpha) CHECK(a >= 0.0);
        for (double b : p.beta) CHECK(b >= 0.0);
        CHECK(p.persistence() < 1.0);
    }
    GarchParams p{0.3, {0.05, 0.1}, {0.7}, {}};
    GarchParams q;
    double w = 0.0;
    REQUIRE(tr.unpack(tr.pack(p, -0.4), q, w));
    CHECK(q.omega == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(q.alpha[1] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(q.beta[0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(w == doctest::Approx(-0.4).epsilon(1e-12));
}

TEST_CASE("fit_garch recovers simulated parameters and ascends the likelihood") {
    const auto path = simulate_path(kBase, std::nullopt, 8000, {}, 31);
    const FitResult f = fit_garch(path.returns, nullptr, 1, 1, FitConfig{});
    CHECK(f.converged);
    CHECK(f.loglik >= f.initial_loglik);
    CHECK(std::abs(f.params.alpha[0] - 0.1) < 0.04);
    CHECK(std::abs(f.params.beta[0] - 0.82) < 0.08);
    CHECK(std::abs(f.params.persistence() - 0.92) < 0.04);
    CHECK(!f.omega_star_hat);
    REQUIRE(f.stderr_proxy);
    CHECK(f.stderr_proxy->size() == 3);
    CHECK(f.observations == 8000);
}

TEST_CASE("white noise yields negligible ARCH effect and unit long-run variance") {
    // beta is not identified once alpha is zero, so the checks target alpha and
    // the implied unconditional variance.
    std::vector<double> alpha, uncond;
    for (int r = 0; r < 50; ++r) {
        Rng rng(derive_seed(5, {static_cast<std::uint64_t>(r)}));
        std::normal_distribution<double> n;
        std::vector<double> x(2000);
        for (double& v : x) v = n(rng);
        const auto f = fit_garch(x, nullptr, 1, 1, quick());
        alpha.push_back(f.params.alpha[0]);
        uncond.push_back(f.params.omega / (1.0 - f.params.persistence()));
    }
    CHECK(median(alpha) < 0.02);
    CHECK(std::abs(median(uncond) - 1.0) < 0.05);
}

TEST_CASE("degenerate and short inputs") {
    const std::vector<double> flat(100, 0.3);
    CHECK_THROWS_AS(fit_garch(flat, nullptr), Error);
    try {
        fit_garch(flat, nullptr);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateData);
    }
    const std::vector<double> tiny{0.1, -0.2, 0.3};
    try {
        fit_garch(tiny, nullptr);
        FAIL("expected InsufficientHistory");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientHistory);
    }
}

TEST_CASE("sample-mean demeaning makes estimates invariant to a level shift") {
    const auto path = simulate_path(kBase, std::nullopt, 3000, {}, 9);
    std::vector<double> shifted = path.returns;
    for (double& r : shifted) r += 0.37;
    const auto a = fit_garch(path.returns, nullptr, 1, 1, quick());
    const auto b = fit_garch(shifted, nullptr, 1, 1, quick());
    CHECK(std::abs(a.params.omega - b.params.omega) <= 1e-8);
    CHECK(std::abs(a.params.alpha[0] - b.params.alpha[0]) <= 1e-8);
    CHECK(std::abs(a.params.beta[0] - b.params.beta[0]) <= 1e-8);
    CHECK(b.mean == doctest::Approx(a.mean + 0.37).epsilon(1e-12));
}

TEST_CASE("demeaning modes") {
    const std::vector<double> r{1.0, 2.0, 3.0};
    FitConfig c;
    double mu = 0.0;
    CHECK(demean_returns(r, c, &mu) == std::vector<double>{-1.0, 0.0, 1.0});
    CHECK(mu == 2.0);
    c.demean = Demean::Zero;
    CHECK(demean_returns(r, c) == r);
    c.demean = Demean::Supplied;
    c.supplied_mean = 1.0;
    CHECK(demean_returns(r, c) == std::vector<double>{0.0, 1.0, 2.0});
}

TEST_CASE("a shock at the final index has a coin-flip sign, matching its analytic oracle") {
    // With one shocked observation the estimate is about a_T^2 - sigma2_T, so
    // its sign is positive with probability P(chi2_1 > s / (s + 5)).
    const std::size_t T = 2000;
    int positive = 0;
    double expected = 0.0;
    const int reps = 100;
    for (int r = 0; r < reps; ++r) {
        ShockSpec s;
        s.t_star = T - 1;
        s.mu_omega_star = 5.0;
        const auto path = simulate_path(kBase, s, T, {}, derive_seed(2, {static_cast<std::uint64_t>(r)}));
        const auto f = fit_shock_fixed_effect(path.returns, nullptr, T - 1, 1, 1, 1, quick());
        if (*f.omega_star_hat > 0.0) ++positive;
        const double base = path.sigma2[T - 1] - 5.0;
        expected += chi2_1_upper(base / (base + 5.0));
    }
    expected /= reps;
    const double frac = static_cast<double>(positive) / reps;
    CHECK(std::abs(frac - expected) < 3.0 * std::sqrt(expected * (1.0 - expected) / reps));
}

TEST_CASE("a twenty-day shock window identifies the sign in at least 90% of seeds") {
    const std::size_t T = 2000, L = 20;
    int positive = 0;
    for (int r = 0; r < 100; ++r) {
        ShockSpec s;
        s.t_star = T - L;
        s.len_vol = L;
        s.mu_omega_star = 5.0;
        const auto path = simulate_path(kBase, s, T, {}, derive_seed(2, {static_cast<std::uint64_t>(r)}));
        const auto f = fit_shock_fixed_effect(path.returns, nullptr, T - L, L, 1, 1, quick());
        if (*f.omega_star_hat > 0.0) ++positive;
    }
    CHECK(positive >= 90);
}

TEST_CASE("without a shock the fixed effect is centred near zero") {
    std::vector<double> one, twenty;
    for (int r = 0; r < 100; ++r) {
        const auto path = simulate_path(kBase, std::nullopt, 2000, {}, derive_seed(4, {static_cast<std::uint64_t>(r)}));
        one.push_back(std::abs(*fit_shock_fixed_effect(path.returns, nullptr, 1000, 1, 1, 1, quick()).omega_star_hat));
        twenty.push_back(std::abs(*fit_shock_fixed_effect(path.returns, nullptr, 1000, 20, 1, 1, quick()).omega_star_hat));
    }
    // Oracle pilot medians: 1.34 (one index) and 0.12 (twenty indices).
    CHECK(median(one) < 2.0);
    CHECK(median(twenty) < 0.4);
}

TEST_CASE("shock window validation") {
    const auto path = simulate_path(kBase, std::nullopt, 300, {}, 6);
    auto code = [&](std::size_t t_star, std::size_t len) {
        try {
            fit_shock_fixed_effect(path.returns, nullptr, t_star, len, 1, 1, quick());
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Validation;
    };
    CHECK(code(300, 1) == ErrorCode::InvalidShockWindow);
    CHECK(code(0, 1) == ErrorCode::InvalidShockWindow);
    CHECK(code(290, 20) == ErrorCode::InvalidShockWindow);
    CHECK(code(1, 299) == ErrorCode::InvalidShockWindow);  // dummy collinear with the intercept
    CHECK(code(100, 0) == ErrorCode::InvalidShockWindow);
}

TEST_CASE("fit config validation") {
    FitConfig c;
    c.tolerance = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = FitConfig{};
    c.max_iterations = 0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("GARCH-X fit estimates a covariate coefficient") {
    GarchParams p = kBase;
    p.gamma = {0.5};
    // Positive covariate keeps the variance positive.
    const auto path = simulate_path(p, std::nullopt, 6000, CovariateModel{1, 2.0, 0.5}, 12);
    const auto f = fit_garch(path.returns, &path.covariates, 1, 1, quick());
    REQUIRE(f.params.gamma.size() == 1);
    CHECK(std::abs(f.params.gamma[0] - 0.5) < 0.3);
}
