#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "svf/error.hpp"
#include "svf/garch.hpp"
#include "svf/rng.hpp"

using namespace svf;

namespace {

const GarchParams kBase = GarchParams::garch11(0.2, 0.1, 0.82);

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an svf::Error");
    return ErrorCode::Validation;
}

}  // namespace

TEST_CASE("variance_step hand arithmetic") {
    const std::vector<double> one{1.0};
    CHECK(variance_step(kBase, one, one, {}, 0.0) == doctest::Approx(1.12).epsilon(1e-15));
    CHECK(variance_step(kBase, one, one, {}, 3.0) == doctest::Approx(4.12).epsilon(1e-15));
    const GarchParams flat = GarchParams::garch11(0.2, 0.0, 0.0);
    CHECK(variance_step(flat, std::vector<double>{7.0}, std::vector<double>{9.0}, {}, 0.0) == 0.2);
}

TEST_CASE("variance_step includes the covariate term and rejects nonpositive results") {
    GarchParams p = kBase;
    p.gamma = {0.5, -1.0};
    const std::vector<double> one{1.0};
    CHECK(variance_step(p, one, one, std::vector<double>{2.0, 0.5}, 0.0) == doctest::Approx(1.62));
    CHECK(code_of([&] { variance_step(kBase, one, one, {}, -1.2); }) == ErrorCode::NonpositiveVariance);
    CHECK(code_of([&] { variance_step(p, one, one, std::vector<double>{1.0}, 0.0); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("unconditional variance") {
    CHECK(unconditional_variance(kBase) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(unconditional_variance(GarchParams::garch11(1.0, 0.0, 0.0)) == 1.0);
    CHECK(code_of([] { unconditional_variance(GarchParams::garch11(0.2, 0.5, 0.5)); }) ==
          ErrorCode::NonstationaryParams);
}

TEST_CASE("parameter validation") {
    CHECK(code_of([] { GarchParams::garch11(0.0, 0.1, 0.8).validate(); }) == ErrorCode::InvalidParams);
    CHECK(code_of([] { GarchParams::garch11(0.1, -0.1, 0.8).validate(); }) == ErrorCode::InvalidParams);
}

TEST_CASE("simulate_path without a shock has no omega_star") {
    const auto path = simulate_path(kBase, std::nullopt, 500, {}, 11);
    CHECK(path.returns.size() == 500);
    CHECK(path.sigma2.size() == 500);
    CHECK(path.omega_star.size() == 500);
    for (double w : path.omega_star) CHECK(w == 0.0);
    for (double s : path.sigma2) CHECK(s > 0.0);
}

TEST_CASE("deterministic shock occupies exactly len_vol indices") {
    ShockSpec s;
    s.t_star = 100;
    s.len_vol = 4;
    s.mu_omega_star = 3.5;
    const auto path = simulate_path(kBase, s, 300, {}, 5);
    int active = 0;
    for (std::size_t t = 0; t < path.size(); ++t) {
        if (t >= 100 && t < 104) {
            CHECK(path.omega_star[t] == 3.5);
            ++active;
        } else {
            CHECK(path.omega_star[t] == 0.0);
        }
    }
    CHECK(active == 4);
}

TEST_CASE("zero delta with covariates equals an omitted delta path for path") {
    ShockSpec a;
    a.t_star = 50;
    a.len_vol = 3;
    a.mu_omega_star = 2.0;
    ShockSpec b = a;
    b.delta = std::vector<double>(4, 0.0);
    const CovariateModel cov{4, 1.0, 0.5};
    const auto pa = simulate_path(kBase, a, 200, cov, 99);
    const auto pb = simulate_path(kBase, b, 200, cov, 99);
    CHECK(pa.returns == pb.returns);
    CHECK(pa.sigma2 == pb.sigma2);
    CHECK(pa.omega_star == pb.omega_star);
}

TEST_CASE("shock equation is affine in the covariates") {
    ShockSpec s;
    s.t_star = 10;
    s.len_vol = 2;
    s.mu_omega_star = 0.5;
    s.delta = {1.0, 2.0};
    const auto path = simulate_path(kBase, s, 40, CovariateModel{2, 1.0, 0.3}, 3);
    for (std::size_t t : {std::size_t{10}, std::size_t{11}}) {
        const double expect = 0.5 + path.covariates(static_cast<Eigen::Index>(t), 0) +
                              2.0 * path.covariates(static_cast<Eigen::Index>(t), 1);
        CHECK(path.omega_star[t] == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("the same seed reproduces the path bit for bit") {
    ShockSpec s;
    s.t_star = 30;
    s.mu_omega_star = 1.0;
    s.sigma_u = 0.5;
    const auto a = simulate_path(kBase, s, 100, CovariateModel{3, 0.0, 1.0}, 42);
    const auto b = simulate_path(kBase, s, 100, CovariateModel{3, 0.0, 1.0}, 42);
    CHECK(a.returns == b.returns);
    CHECK(a.covariates == b.covariates);
    const auto c = simulate_path(kBase, s, 100, CovariateModel{3, 0.0, 1.0}, 43);
    CHECK(a.returns != c.returns);
}

TEST_CASE("shock window validation") {
    ShockSpec s;
    s.t_star = 0;
    CHECK(code_of([&] { simulate_path(kBase, s, 10, {}, 1); }) == ErrorCode::InvalidShockWindow);
    s.t_star = 8;
    s.len_vol = 3;
    CHECK(code_of([&] { simulate_path(kBase, s, 10, {}, 1); }) == ErrorCode::InvalidShockWindow);
    s.t_star = 10;
    s.len_vol = 1;
    CHECK(code_of([&] { simulate_path(kBase, s, 10, {}, 1); }) == ErrorCode::InvalidShockWindow);
}

TEST_CASE("long-run mean of sigma2 approaches the unconditional variance") {
    const auto path = simulate_path(kBase, std::nullopt, 1000000, {}, 2024);
    double sum = 0.0;
    for (double s : path.sigma2) sum += s;
    const double mean = sum / static_cast<double>(path.size());
    CHECK(std::abs(mean / 2.5 - 1.0) < 0.02);
}

TEST_CASE("one-step forecast equals the variance equation at the origin") {
    const auto path = simulate_path(kBase, std::nullopt, 300, {}, 8);
    const auto origin = make_origin(kBase, path.returns, nullptr, 2.5);
    const auto f = forecast(kBase, origin, 1);
    const double a = origin.returns.back();
    const double expect = 0.2 + 0.1 * a * a + 0.82 * origin.sigma2.back();
    CHECK(f.variance.size() == 1);
    CHECK(f.variance[0] == doctest::Approx(expect).epsilon(1e-15));
    CHECK(!f.floored);
}

TEST_CASE("filtering reproduces the simulated variance path") {
    const auto path = simulate_path(kBase, std::nullopt, 400, {}, 17);
    const auto s2 = filter_variance(kBase, path.returns, nullptr, {}, 2.5);
    for (std::size_t t = 0; t < s2.size(); ++t) CHECK(s2[t] == doctest::Approx(path.sigma2[t]).epsilon(1e-12));
}

TEST_CASE("GARCH(1,1) shortcut agrees with the general recursion") {
    GarchParams wide = kBase;
    wide.alpha.push_back(0.0);
    wide.beta.push_back(0.0);
    const auto path = simulate_path(kBase, std::nullopt, 300, {}, 21);
    const InterceptShift shift{120, 2, 1.5};
    const auto a = filter_variance(kBase, path.returns, nullptr, shift, 2.5);
    const auto b = filter_variance(wide, path.returns, nullptr, shift, 2.5);
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(a[t] == doctest::Approx(b[t]).epsilon(1e-14));
}

TEST_CASE("multi-step forecast follows the decay identity") {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 50; ++k) {
        const double alpha = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
        const double beta = std::uniform_real_distribution<double>(0.0, 0.95 - alpha)(rng);
        const GarchParams p = GarchParams::garch11(std::uniform_real_distribution<double>(0.01, 1.0)(rng), alpha, beta);
        ForecastOrigin o;
        o.returns = {std::normal_distribution<double>(0.0, 3.0)(rng)};
        o.sigma2 = {std::uniform_real_distribution<double>(0.1, 10.0)(rng)};
        const auto f = forecast(p, o, 12, 4.0, 2);
        for (std::size_t r = 2; r + 1 < f.variance.size(); ++r)
            CHECK(std::abs(f.variance[r + 1] - (p.omega + (alpha + beta) * f.variance[r])) <= 1e-12 * f.variance[r]);
    }
}

TEST_CASE("additive adjustment shifts the first steps only") {
    const auto path = simulate_path(kBase, std::nullopt, 200, {}, 4);
    const auto origin = make_origin(kBase, path.returns, nullptr, 2.5);
    const auto base = forecast(kBase, origin, 3);
    const auto adj = forecast(kBase, origin, 3, 1.7, 1);
    CHECK(adj.variance[0] == doctest::Approx(base.variance[0] + 1.7).epsilon(1e-15));
    CHECK(adj.variance[1] == doctest::Approx(0.2 + 0.92 * adj.variance[0]).epsilon(1e-14));
    const auto two = forecast(kBase, origin, 3, 1.7, 2);
    CHECK(two.variance[1] == doctest::Approx(0.2 + 1.7 + 0.92 * two.variance[0]).epsilon(1e-14));
}

TEST_CASE("adjusted forecasts below the floor are clamped and flagged") {
    ForecastOrigin o{{0.1}, {1.0}, {}};
    const auto f = forecast(kBase, o, 1, -50.0, 1, 1e-6);
    CHECK(f.floored);
    CHECK(f.variance[0] == 1e-6);
}

TEST_CASE("forecast preconditions") {
    ForecastOrigin empty;
    CHECK(code_of([&] { forecast(kBase, empty, 1); }) == ErrorCode::InsufficientHistory);
    ForecastOrigin o{{0.1}, {1.0}, {}};
    CHECK(code_of([&] { forecast(kBase, o, 2, 1.0, 3); }) == ErrorCode::Validation);
    CHECK(code_of([&] { forecast(kBase, o, 0); }) == ErrorCode::Validation);
}

TEST_CASE("long-horizon forecasts converge monotonically to the unconditional variance") {
    for (double start : {0.3, 9.0}) {
        ForecastOrigin o{{0.0}, {start}, {}};
        const auto f = forecast(kBase, o, 400);
        for (std::size_t k = 1; k + 1 < f.variance.size(); ++k) {
            const double d0 = std::abs(f.variance[k] - 2.5), d1 = std::abs(f.variance[k + 1] - 2.5);
            CHECK(d1 <= d0 + 1e-15);
        }
        CHECK(f.variance.back() == doctest::Approx(2.5).epsilon(1e-9));
    }
}
