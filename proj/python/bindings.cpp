#include <optional>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "svf/error.hpp"
#include "svf/estimation.hpp"
#include "svf/evaluation.hpp"
#include "svf/garch.hpp"
#include "svf/montecarlo.hpp"
#include "svf/multiverse.hpp"
#include "svf/similarity.hpp"

namespace py = pybind11;

namespace {

const Eigen::MatrixXd* opt_matrix(const std::optional<Eigen::MatrixXd>& m) { return m ? &*m : nullptr; }

}  // namespace

PYBIND11_MODULE(_svf, m) {
    m.doc() = "Similarity-based volatility forecast correction";
    py::register_exception<svf::Error>(m, "Error", PyExc_ValueError);

    py::class_<svf::GarchParams>(m, "GarchParams")
        .def(py::init([](double omega, std::vector<double> alpha, std::vector<double> beta, std::vector<double> gamma) {
                 return svf::GarchParams{omega, std::move(alpha), std::move(beta), std::move(gamma)};
             }),
             py::arg("omega"), py::arg("alpha"), py::arg("beta"), py::arg("gamma") = std::vector<double>{})
        .def_readwrite("omega", &svf::GarchParams::omega)
        .def_readwrite("alpha", &svf::GarchParams::alpha)
        .def_readwrite("beta", &svf::GarchParams::beta)
        .def_readwrite("gamma", &svf::GarchParams::gamma)
        .def("persistence", &svf::GarchParams::persistence)
        .def("__repr__", [](const svf::GarchParams& p) {
            return "GarchParams(omega=" + std::to_string(p.omega) + ", alpha=" + py::repr(py::cast(p.alpha)).cast<std::string>() +
                   ", beta=" + py::repr(py::cast(p.beta)).cast<std::string>() + ")";
        });

    py::class_<svf::FitResult>(m, "FitResult")
        .def_readonly("params", &svf::FitResult::params)
        .def_readonly("omega_star_hat", &svf::FitResult::omega_star_hat)
        .def_readonly("loglik", &svf::FitResult::loglik)
        .def_readonly("initial_loglik", &svf::FitResult::initial_loglik)
        .def_readonly("converged", &svf::FitResult::converged)
        .def_readonly("iterations", &svf::FitResult::iterations)
        .def_readonly("stderr_proxy", &svf::FitResult::stderr_proxy)
        .def_readonly("mean", &svf::FitResult::mean)
        .def_readonly("observations", &svf::FitResult::observations);

    py::class_<svf::WeightSolution>(m, "WeightSolution")
        .def_readonly("weights", &svf::WeightSolution::weights)
        .def_readonly("objective", &svf::WeightSolution::objective)
        .def_readonly("unique_hint", &svf::WeightSolution::unique_hint)
        .def_readonly("active_support", &svf::WeightSolution::active_support);

    m.def("unconditional_variance", &svf::unconditional_variance, py::arg("params"));
    m.def(
        "variance_step",
        [](const svf::GarchParams& p, std::vector<double> a2, std::vector<double> s2, std::vector<double> v,
           double omega_star) { return svf::variance_step(p, a2, s2, v, omega_star); },
        py::arg("params"), py::arg("lagged_a2"), py::arg("lagged_sigma2"), py::arg("v_t") = std::vector<double>{},
        py::arg("omega_star") = 0.0);

    m.def(
        "simulate_path",
        [](const svf::GarchParams& params, std::size_t length, std::uint64_t seed, std::optional<std::size_t> t_star,
           std::size_t len_vol, double mu_omega_star, std::vector<double> delta, double sigma_u, std::size_t p,
           double cov_mean, double cov_sd) {
            std::optional<svf::ShockSpec> shock;
            if (t_star) {
                svf::ShockSpec s;
                s.t_star = *t_star;
                s.len_vol = len_vol;
                s.mu_omega_star = mu_omega_star;
                s.delta = std::move(delta);
                s.sigma_u = sigma_u;
                shock = s;
            }
            const auto path = svf::simulate_path(params, shock, length, svf::CovariateModel{p, cov_mean, cov_sd}, seed);
            py::dict d;
            d["returns"] = path.returns;
            d["sigma2"] = path.sigma2;
            d["omega_star"] = path.omega_star;
            d["covariates"] = path.covariates;
            return d;
        },
        py::arg("params"), py::arg("length"), py::arg("seed") = svf::kDefaultSeed, py::arg("t_star") = py::none(),
        py::arg("len_vol") = 1, py::arg("mu_omega_star") = 0.0, py::arg("delta") = std::vector<double>{},
        py::arg("sigma_u") = 0.0, py::arg("p") = 0, py::arg("cov_mean") = 0.0, py::arg("cov_sd") = 1.0);

    m.def(
        "forecast",
        [](const svf::GarchParams& params, std::vector<double> returns, std::size_t horizon, double adjustment,
           std::size_t adjustment_length, std::optional<double> sigma2_init) {
            const double s0 = sigma2_init ? *sigma2_init : svf::unconditional_variance(params);
            const auto origin = svf::make_origin(params, returns, nullptr, s0);
            return svf::forecast(params, origin, horizon, adjustment, adjustment_length).variance;
        },
        py::arg("params"), py::arg("returns"), py::arg("horizon") = 1, py::arg("adjustment") = 0.0,
        py::arg("adjustment_length") = 1, py::arg("sigma2_init") = py::none());

    m.def(
        "fit_garch",
        [](std::vector<double> returns, std::optional<Eigen::MatrixXd> cov, std::size_t m_, std::size_t s_,
           bool demean) {
            svf::FitConfig cfg;
            cfg.demean = demean ? svf::Demean::SampleMean : svf::Demean::Zero;
            py::gil_scoped_release release;
            return svf::fit_garch(returns, opt_matrix(cov), m_, s_, cfg);
        },
        py::arg("returns"), py::arg("covariates") = py::none(), py::arg("arch_order") = 1, py::arg("garch_order") = 1,
        py::arg("demean") = true);

    m.def(
        "fit_shock_fixed_effect",
        [](std::vector<double> returns, std::size_t t_star, std::size_t len_vol, std::optional<Eigen::MatrixXd> cov,
           std::size_t m_, std::size_t s_, bool demean) {
            svf::FitConfig cfg;
            cfg.demean = demean ? svf::Demean::SampleMean : svf::Demean::Zero;
            py::gil_scoped_release release;
            return svf::fit_shock_fixed_effect(returns, opt_matrix(cov), t_star, len_vol, m_, s_, cfg);
        },
        py::arg("returns"), py::arg("t_star"), py::arg("len_vol") = 1, py::arg("covariates") = py::none(),
        py::arg("arch_order") = 1, py::arg("garch_order") = 1, py::arg("demean") = true);

    m.def(
        "solve_weights",
        [](Eigen::VectorXd target, Eigen::MatrixXd donors, bool standardize, std::optional<Eigen::MatrixXd> s) {
            svf::VolatilityProfile prof;
            prof.target = std::move(target);
            prof.donors = std::move(donors);
            prof.validate();
            if (standardize) prof = svf::standardize(prof);
            return svf::solve_weights(prof, s);
        },
        py::arg("target"), py::arg("donors"), py::arg("standardize") = false, py::arg("seminorm") = py::none());

    m.def("aggregate_shock",
          py::overload_cast<const Eigen::VectorXd&, const Eigen::VectorXd&>(&svf::aggregate_shock),
          py::arg("weights"), py::arg("donor_effects"));

    m.def(
        "realized_volatility",
        [](std::vector<std::vector<double>> days, std::size_t K, std::size_t m_, bool drop_first_block) {
            return svf::realized_volatility(days, svf::RVConfig{K, m_, drop_first_block});
        },
        py::arg("daily_block_returns"), py::arg("K") = 1, py::arg("m") = 77, py::arg("drop_first_block") = true);

    m.def("ql_loss", &svf::ql_loss, py::arg("prediction"), py::arg("ground_truth"));
    m.def("mse_loss", &svf::mse_loss, py::arg("prediction"), py::arg("ground_truth"));
    m.def("ape_loss", &svf::ape_loss, py::arg("prediction"), py::arg("ground_truth"));
    m.def("ql_advantage", &svf::ql_advantage, py::arg("omega_star"), py::arg("sigma2"));

    m.def("build_delta", &svf::mc::build_delta, py::arg("p"), py::arg("mu_delta"));
    m.def(
        "run_replication",
        [](double mu_V, double sigma_V, double mu_delta, double mu_omega_star, double sigma_u, std::uint64_t seed,
           std::size_t n_donors, std::size_t p) {
            svf::mc::CellParams cell{mu_V, sigma_V, mu_delta, mu_omega_star, sigma_u};
            svf::mc::Design d;
            d.n_donors = n_donors;
            d.p = p;
            svf::mc::ReplicationOutcome o;
            {
                py::gil_scoped_release release;
                o = svf::mc::run_replication(cell, d, seed);
            }
            py::dict r;
            r["ql_adjusted"] = o.ql_adjusted;
            r["ql_unadjusted"] = o.ql_unadjusted;
            r["adjusted"] = o.adjusted;
            r["unadjusted"] = o.unadjusted;
            r["ground_truth"] = o.ground_truth;
            r["omega_star_hat"] = o.omega_star_hat;
            return r;
        },
        py::arg("mu_V"), py::arg("sigma_V"), py::arg("mu_delta"), py::arg("mu_omega_star"), py::arg("sigma_u"),
        py::arg("seed"), py::arg("n_donors") = 3, py::arg("p") = 9);

    m.def(
        "enumerate_configs",
        [](std::size_t n_donors, std::size_t n_covariates) {
            std::vector<std::pair<std::optional<std::size_t>, std::optional<std::size_t>>> out;
            for (const auto& o : svf::enumerate_configs(n_donors, n_covariates)) out.emplace_back(o.covariate, o.donor);
            return out;
        },
        py::arg("n_donors"), py::arg("n_covariates"));
}
