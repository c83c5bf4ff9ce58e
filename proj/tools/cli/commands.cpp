#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "io.hpp"
#include "svf/error.hpp"
#include "svf/estimation.hpp"
#include "svf/evaluation.hpp"
#include "svf/garch.hpp"
#include "svf/rng.hpp"

namespace svf::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// ---- configuration helpers ----

bool has(const json& j, const char* key) { return j.is_object() && j.contains(key) && !j.at(key).is_null(); }

template <class T>
T get(const json& j, const char* key, const std::string& ctx) {
    if (!has(j, key)) throw Error(ErrorCode::Validation, "config: missing key '" + ctx + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::Validation, "config: key '" + ctx + key + "' has the wrong type");
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& ctx) {
    return has(j, key) ? get<T>(j, key, ctx) : fallback;
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback, const std::string& ctx) {
    if (!has(j, key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw Error(ErrorCode::Validation, "config: key '" + ctx + key + "' must be a nonnegative integer");
    return v.get<std::size_t>();
}

void require_object(const json& j, const std::string& what) {
    if (!j.is_object()) throw Error(ErrorCode::Validation, "config: " + what + " must be an object");
}

GarchParams parse_params(const json& j, const std::string& ctx) {
    require_object(j, ctx.empty() ? "params" : ctx);
    GarchParams p;
    p.omega = get<double>(j, "omega", ctx);
    p.alpha = j.at("alpha").is_array() ? get<std::vector<double>>(j, "alpha", ctx)
                                       : std::vector<double>{get<double>(j, "alpha", ctx)};
    p.beta = j.at("beta").is_array() ? get<std::vector<double>>(j, "beta", ctx)
                                     : std::vector<double>{get<double>(j, "beta", ctx)};
    p.gamma = get_or<std::vector<double>>(j, "gamma", {}, ctx);
    p.validate();
    return p;
}

FitConfig parse_fit(const json& j) {
    FitConfig f;
    if (j.is_null()) return f;
    require_object(j, "fit");
    f.max_iterations = get_or<int>(j, "max_iterations", f.max_iterations, "fit.");
    f.tolerance = get_or<double>(j, "tolerance", f.tolerance, "fit.");
    const std::string demean = get_or<std::string>(j, "demean", "sample-mean", "fit.");
    if (demean == "sample-mean") f.demean = Demean::SampleMean;
    else if (demean == "zero") f.demean = Demean::Zero;
    else if (demean == "supplied") f.demean = Demean::Supplied;
    else throw Error(ErrorCode::Validation, "config: fit.demean must be sample-mean, zero or supplied");
    f.supplied_mean = get_or<double>(j, "supplied_mean", 0.0, "fit.");
    const std::string init = get_or<std::string>(j, "variance_init", "unconditional", "fit.");
    if (init == "unconditional") f.variance_init = VarianceInit::Unconditional;
    else if (init == "sample-variance") f.variance_init = VarianceInit::SampleVariance;
    else throw Error(ErrorCode::Validation, "config: fit.variance_init must be unconditional or sample-variance");
    f.compute_stderr = get_or<bool>(j, "stderr", true, "fit.");
    f.validate();
    return f;
}

std::size_t resolve_t_star(const json& j, const ReturnSeries& rs, const std::string& who) {
    if (has(j, "t_star")) return get_count(j, "t_star", 0, "");
    if (has(j, "shock_date")) {
        const std::string date = get<std::string>(j, "shock_date", "");
        if (rs.labels.empty())
            throw Error(ErrorCode::Validation, who + ": shock_date needs a 'date' column in the returns file");
        const auto it = std::find(rs.labels.begin(), rs.labels.end(), date);
        if (it == rs.labels.end())
            throw Error(ErrorCode::Validation, who + ": shock date " + date + " is not in the returns file");
        return static_cast<std::size_t>(it - rs.labels.begin()) + 1;
    }
    throw Error(ErrorCode::Validation, who + ": needs 't_star' or 'shock_date'");
}

Eigen::VectorXd load_profile(const json& j, const fs::path& base, const std::vector<std::string>& names,
                             const std::string& who) {
    if (has(j, "profile")) {
        const auto v = get<std::vector<double>>(j, "profile", "");
        if (v.size() != names.size())
            throw Error(ErrorCode::DimensionMismatch, who + ": profile has " + std::to_string(v.size()) +
                                                          " entries, expected " + std::to_string(names.size()));
        return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (!has(j, "covariates")) {
        if (names.empty()) return {};
        throw Error(ErrorCode::Validation, who + ": needs 'profile' or a 'covariates' file");
    }
    const CsvTable t = read_csv(base / get<std::string>(j, "covariates", ""));
    std::size_t row = 0;
    const auto date_col = t.column("date");
    if (date_col && has(j, "shock_date")) {
        const std::string date = get<std::string>(j, "shock_date", "");
        auto it = std::find_if(t.rows.begin(), t.rows.end(), [&](const auto& r) { return r[*date_col] == date; });
        if (it == t.rows.end()) throw Error(ErrorCode::Validation, t.path + ": no row dated " + date);
        row = static_cast<std::size_t>(it - t.rows.begin());
    } else if (t.rows.size() != 1) {
        throw Error(ErrorCode::Validation,
                    t.path + ": needs a 'date' column matching shock_date, or exactly one data row");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto col = t.column(names[i]);
        if (!col) throw Error(ErrorCode::Validation, t.path + ": missing covariate column '" + names[i] + "'");
        v[static_cast<Eigen::Index>(i)] = t.number(row, *col);
    }
    return v;
}

SeriesData parse_series(const json& j, const fs::path& base, const std::vector<std::string>& names,
                        const PipelineConfig& pc, const std::string& fallback_name) {
    require_object(j, "series '" + fallback_name + "'");
    SeriesData s;
    s.name = get_or<std::string>(j, "name", fallback_name, "");
    const std::string who = "series '" + s.name + "'";
    const ReturnSeries rs = load_returns(base / get<std::string>(j, "returns", ""),
                                         get_or<std::string>(j, "column", "", ""));
    s.returns = rs.returns;
    s.t_star = resolve_t_star(j, rs, who);
    s.len_vol = get_count(j, "len_vol", 1, "");
    if (s.t_star == 0 || s.t_star > s.returns.size())
        throw Error(ErrorCode::InvalidShockWindow, who + ": t_star " + std::to_string(s.t_star) +
                                                       " is outside the " + std::to_string(s.returns.size()) +
                                                       " returns");
    if (pc.estimation_window && s.t_star < *pc.estimation_window)
        throw Error(ErrorCode::InsufficientHistory, who + ": " + std::to_string(s.t_star) +
                                                        " pre-shock returns do not cover estimation_window " +
                                                        std::to_string(*pc.estimation_window));
    s.profile = load_profile(j, base, names, who);
    return s;
}

// ---- output helpers ----

ojson params_json(const GarchParams& p) {
    ojson o;
    o["omega"] = p.omega;
    o["alpha"] = p.alpha;
    o["beta"] = p.beta;
    o["gamma"] = p.gamma;
    return o;
}

ojson fit_json(const FitResult& f) {
    ojson o;
    o["params"] = params_json(f.params);
    o["omega_star_hat"] = f.omega_star_hat ? ojson(*f.omega_star_hat) : ojson(nullptr);
    o["loglik"] = f.loglik;
    o["initial_loglik"] = f.initial_loglik;
    o["converged"] = f.converged;
    o["iterations"] = f.iterations;
    o["observations"] = f.observations;
    o["mean"] = f.mean;
    o["stderr_proxy"] = f.stderr_proxy ? ojson(*f.stderr_proxy) : ojson(nullptr);
    return o;
}

ojson losses_json(const LossTriple& l) { return ojson{{"mse", l.mse}, {"ape", l.ape}, {"ql", l.ql}}; }

// Flattens nested JSON into key,value rows.
void flatten(const ojson& j, const std::string& prefix, std::string& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
    } else if (j.is_number_float()) {
        out += prefix + "," + format_full(j.get<double>()) + "\n";
    } else if (j.is_string()) {
        out += prefix + "," + j.get<std::string>() + "\n";
    } else {
        out += prefix + "," + j.dump() + "\n";
    }
}

std::string kv_csv(const ojson& j) {
    std::string out = "key,value\n";
    flatten(j, "", out);
    return out;
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
    auto* opt = cmd->add_option("--config", c.config, "JSON configuration file");
    if (config_required) opt->required();
    cmd->add_option("--seed", c.seed, "master seed (overrides the configuration)");
    cmd->add_option("--out", c.out, "write machine-readable output to this file");
    cmd->add_option("--format", c.format, "machine-readable format")->check(CLI::IsMember({"csv", "json"}));
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    f << text;
    if (!f) throw Error(ErrorCode::Io, "failed writing '" + path + "'");
}

// Machine output goes to --out (or stdout when --format is given); otherwise
// the human-readable text is printed.
void emit(const Common& c, const std::string& default_format, const std::function<std::string(const std::string&)>& machine,
          const std::function<std::string()>& human, std::ostream& out) {
    const std::string fmt = c.format.empty() ? default_format : c.format;
    if (!c.out.empty()) {
        write_file(c.out, machine(fmt));
        out << human();
    } else if (!c.format.empty()) {
        out << machine(fmt);
    } else {
        out << human();
    }
}

std::uint64_t pick_seed(const Common& c, const json& doc) {
    if (c.seed) return *c.seed;
    if (has(doc, "seed")) {
        if (!doc.at("seed").is_number_unsigned()) throw Error(ErrorCode::Validation, "config: seed must be a nonnegative integer");
        return doc.at("seed").get<std::uint64_t>();
    }
    return kDefaultSeed;
}

// ---- simulate ----

int cmd_simulate(const Common& c, std::ostream& out, std::ostream& err) {
    const json doc = load_json(c.config);
    require_object(doc, "the configuration");
    const std::uint64_t seed = pick_seed(c, doc);
    const GarchParams params = parse_params(doc.at("params"), "params.");
    const std::size_t length = get_count(doc, "length", 0, "");
    if (length < params.max_lag() + 1)
        throw Error(ErrorCode::Validation, "length " + std::to_string(length) + " is below the minimum " +
                                               std::to_string(params.max_lag() + 1));
    CovariateModel cov;
    if (has(doc, "covariates")) {
        const json& cj = doc.at("covariates");
        cov.p = get_count(cj, "p", 0, "covariates.");
        cov.mean = get_or<double>(cj, "mean", 0.0, "covariates.");
        cov.sd = get_or<double>(cj, "sd", 1.0, "covariates.");
    }
    std::optional<ShockSpec> shock;
    if (has(doc, "shock")) {
        const json& sj = doc.at("shock");
        ShockSpec s;
        s.t_star = get_count(sj, "t_star", 0, "shock.");
        s.len_vol = get_count(sj, "len_vol", 1, "shock.");
        s.len_return = get_count(sj, "len_return", 0, "shock.");
        s.mu_omega_star = get_or<double>(sj, "mu_omega_star", 0.0, "shock.");
        s.delta = get_or<std::vector<double>>(sj, "delta", {}, "shock.");
        s.sigma_u = get_or<double>(sj, "sigma_u", 0.0, "shock.");
        s.mu_eps_star = get_or<double>(sj, "mu_eps_star", 0.0, "shock.");
        s.sigma_eps_star = get_or<double>(sj, "sigma_eps_star", 0.0, "shock.");
        shock = s;
    }
    const SimulatedPath path = simulate_path(params, shock, length, cov, seed);

    auto machine = [&](const std::string& fmt) {
        if (fmt == "json") {
            ojson o;
            o["seed"] = seed;
            o["return"] = path.returns;
            o["sigma2"] = path.sigma2;
            o["omega_star"] = path.omega_star;
            if (cov.p > 0) {
                ojson cols = ojson::array();
                for (Eigen::Index k = 0; k < path.covariates.cols(); ++k) {
                    std::vector<double> col(path.covariates.rows());
                    for (Eigen::Index t = 0; t < path.covariates.rows(); ++t) col[t] = path.covariates(t, k);
                    cols.push_back(col);
                }
                o["covariates"] = cols;
            }
            return o.dump(2) + "\n";
        }
        std::string s = "t,return,sigma2,omega_star";
        for (std::size_t k = 0; k < cov.p; ++k) s += ",v" + std::to_string(k + 1);
        s += '\n';
        for (std::size_t t = 0; t < path.size(); ++t) {
            s += std::to_string(t + 1) + "," + format_full(path.returns[t]) + "," + format_full(path.sigma2[t]) + "," +
                 format_full(path.omega_star[t]);
            for (std::size_t k = 0; k < cov.p; ++k)
                s += "," + format_full(path.covariates(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)));
            s += '\n';
        }
        return s;
    };
    const std::string fmt = c.format.empty() ? "csv" : c.format;
    if (c.out.empty()) {
        err << "seed " << seed << "\n";
        out << machine(fmt);
    } else {
        write_file(c.out, machine(fmt));
        out << "simulated " << length << " observations (seed " << seed << ") -> " << c.out << "\n";
    }
    return kOk;
}

// ---- fit ----

struct FitFlags {
    std::string returns;
    std::string column;
    std::optional<std::size_t> t_star;
    std::string shock_date;
    std::optional<std::size_t> len_vol;
    std::optional<std::size_t> arch_order;
    std::optional<std::size_t> garch_order;
    std::string demean;
};

int cmd_fit(const Common& c, const FitFlags& f, std::ostream& out, std::ostream& err) {
    json doc = json::object();
    fs::path base = fs::current_path();
    if (!c.config.empty()) {
        doc = load_json(c.config);
        require_object(doc, "the configuration");
        base = fs::path(c.config).parent_path();
    }
    if (!f.returns.empty()) {
        doc["returns"] = fs::absolute(f.returns).string();
    }
    if (!f.column.empty()) doc["column"] = f.column;
    if (f.t_star) doc["t_star"] = *f.t_star;
    if (!f.shock_date.empty()) doc["shock_date"] = f.shock_date;
    if (f.len_vol) doc["len_vol"] = *f.len_vol;
    if (f.arch_order) doc["arch_order"] = *f.arch_order;
    if (f.garch_order) doc["garch_order"] = *f.garch_order;
    if (!f.demean.empty()) doc["fit"]["demean"] = f.demean;
    if (!has(doc, "returns")) throw Error(ErrorCode::Validation, "fit needs --returns or a 'returns' key");

    const ReturnSeries rs = load_returns(base / get<std::string>(doc, "returns", ""),
                                         get_or<std::string>(doc, "column", "", ""));
    const FitConfig cfg = parse_fit(has(doc, "fit") ? doc.at("fit") : json());
    const std::size_t m = get_count(doc, "arch_order", 1, "");
    const std::size_t s = get_count(doc, "garch_order", 1, "");
    std::optional<std::size_t> t_star;
    if (has(doc, "t_star") || has(doc, "shock_date")) t_star = resolve_t_star(doc, rs, "fit");
    const std::size_t len_vol = get_count(doc, "len_vol", 1, "");

    const FitResult r = t_star ? fit_shock_fixed_effect(rs.returns, nullptr, *t_star, len_vol, m, s, cfg)
                               : fit_garch(rs.returns, nullptr, m, s, cfg);
    if (!r.converged) err << "warning: optimizer did not meet its tolerance; estimates are the best point found\n";

    ojson o = fit_json(r);
    if (t_star) {
        o["t_star"] = *t_star;
        o["len_vol"] = len_vol;
    }
    auto machine = [&](const std::string& fmt) { return fmt == "json" ? o.dump(2) + "\n" : kv_csv(o); };
    auto human = [&] {
        std::ostringstream h;
        h << "GARCH(" << m << "," << s << ") fit on " << r.observations << " returns"
          << (rs.from_prices ? " (from prices)" : "") << "\n";
        h << "  omega      " << format_short(r.params.omega) << "\n";
        for (std::size_t k = 0; k < r.params.alpha.size(); ++k)
            h << "  alpha[" << k + 1 << "]   " << format_short(r.params.alpha[k]) << "\n";
        for (std::size_t k = 0; k < r.params.beta.size(); ++k)
            h << "  beta[" << k + 1 << "]    " << format_short(r.params.beta[k]) << "\n";
        if (r.omega_star_hat) h << "  omega*     " << format_short(*r.omega_star_hat) << "  (t_star " << *t_star << ")\n";
        h << "  loglik     " << format_short(r.loglik) << "\n";
        h << "  converged  " << (r.converged ? "yes" : "no") << " after " << r.iterations << " iterations\n";
        return h.str();
    };
    emit(c, "json", machine, human, out);
    return kOk;
}

// ---- forecast ----

ojson report_json(const ForecastReport& rep) {
    ojson o;
    ojson t;
    t["name"] = rep.target.name;
    t["fit"] = fit_json(rep.target.fit);
    o["target"] = t;
    ojson donors = ojson::array();
    for (std::size_t j = 0; j < rep.donors.size(); ++j) {
        const Donor& d = rep.donors[j];
        ojson dj;
        dj["name"] = d.name;
        dj["t_star"] = d.t_star;
        dj["len_vol"] = d.len_vol;
        dj["omega_star_hat"] = d.omega_star_hat;
        dj["weight"] = rep.adjustment.weights.weights[static_cast<Eigen::Index>(j)];
        dj["fit"] = fit_json(d.fit);
        donors.push_back(dj);
    }
    o["donors"] = donors;
    o["omega_star_hat"] = rep.adjustment.omega_star_hat;
    o["mean_omega_star"] = rep.adjustment.mean_omega_star;
    o["weight_objective"] = rep.adjustment.weights.objective;
    o["weights_unique"] = rep.adjustment.weights.unique_hint;
    o["unadjusted"] = rep.target.unadjusted.variance;
    o["adjusted"] = rep.adjustment.adjusted.variance;
    o["mean_adjusted"] = rep.adjustment.mean_adjusted.variance;
    o["adjusted_floored"] = rep.adjustment.adjusted.floored;
    o["singular_value_shares"] = rep.singular_value_shares;
    o["ols_coefficients"] = std::vector<double>(rep.ols.coefficients.data(),
                                                rep.ols.coefficients.data() + rep.ols.coefficients.size());
    o["ols_implied_adjustment"] = rep.ols.implied_adjustment;
    std::vector<bool> constant(rep.adjustment.profile.constant_rows.begin(), rep.adjustment.profile.constant_rows.end());
    o["constant_covariates"] = constant;
    if (rep.ground_truth) {
        o["ground_truth"] = *rep.ground_truth;
        o["losses"] = ojson{{"unadjusted", losses_json(rep.losses->unadjusted)},
                            {"adjusted", losses_json(rep.losses->adjusted)},
                            {"mean_adjusted", losses_json(rep.losses->mean_adjusted)}};
    }
    return o;
}

std::string join_short(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_short(v[i]);
    return s;
}

std::string report_text(const ForecastReport& rep) {
    std::ostringstream h;
    const auto& tp = rep.target.fit.params;
    h << "target " << rep.target.name << ": omega " << format_short(tp.omega) << ", alpha " << join_short(tp.alpha)
      << ", beta " << join_short(tp.beta) << " (" << rep.target.fit.observations << " pre-shock returns)\n\n";
    h << std::left << std::setw(20) << "donor" << std::setw(14) << "omega*_hat" << "weight\n";
    for (std::size_t j = 0; j < rep.donors.size(); ++j)
        h << std::setw(20) << rep.donors[j].name << std::setw(14) << format_short(rep.donors[j].omega_star_hat)
          << format_short(rep.adjustment.weights.weights[static_cast<Eigen::Index>(j)]) << "\n";
    h << "\nweighted omega*      " << format_short(rep.adjustment.omega_star_hat) << "\n";
    h << "mean omega*          " << format_short(rep.adjustment.mean_omega_star) << "\n";
    h << "unadjusted forecast  " << join_short(rep.target.unadjusted.variance) << "\n";
    h << "adjusted forecast    " << join_short(rep.adjustment.adjusted.variance)
      << (rep.adjustment.adjusted.floored ? "  (floored)" : "") << "\n";
    h << "mean-adjusted        " << join_short(rep.adjustment.mean_adjusted.variance) << "\n";
    h << "singular value shares " << join_short(rep.singular_value_shares) << "\n";
    if (rep.ground_truth) {
        h << "\nground truth " << format_short(*rep.ground_truth) << "\n";
        h << std::setw(16) << "forecast" << std::setw(14) << "MSE" << std::setw(14) << "APE" << "QL\n";
        auto row = [&](const char* name, const LossTriple& l) {
            h << std::setw(16) << name << std::setw(14) << format_short(l.mse) << std::setw(14) << format_short(l.ape)
              << format_short(l.ql) << "\n";
        };
        row("unadjusted", rep.losses->unadjusted);
        row("adjusted", rep.losses->adjusted);
        row("mean-adjusted", rep.losses->mean_adjusted);
    }
    return h.str();
}

ForecastReport run_bundle(const Bundle& b) {
    return run_forecast(b.target, b.donors, b.covariate_names, b.config, b.ground_truth);
}

int cmd_forecast(const Common& c, std::ostream& out) {
    const Bundle b = load_bundle(c.config);
    const ForecastReport rep = run_bundle(b);
    const ojson o = report_json(rep);
    emit(c, "json", [&](const std::string& fmt) { return fmt == "json" ? o.dump(2) + "\n" : kv_csv(o); },
         [&] { return report_text(rep); }, out);
    return kOk;
}

// ---- mc-grid ----

int cmd_mc_grid(const Common& c, std::ostream& out) {
    const json doc = load_json(c.config);
    mc::GridConfig g = parse_grid_config(doc);
    g.seed = pick_seed(c, doc);
    const mc::GridResult res = mc::run_grid(g);
    auto machine = [&](const std::string& fmt) {
        if (fmt == "csv") return mc::export_grid_csv(res);
        ojson o;
        o["seed"] = g.seed;
        o["axis1"] = ojson{{"name", res.axis1_name}, {"values", res.axis1_values}};
        o["axis2"] = ojson{{"name", res.axis2_name}, {"values", res.axis2_values}};
        ojson cells = ojson::array();
        for (std::size_t i = 0; i < res.cells.size(); ++i)
            for (std::size_t j = 0; j < res.cells[i].size(); ++j) {
                const auto& cell = res.cells[i][j];
                cells.push_back(ojson{{res.axis1_name, res.axis1_values[i]},
                                      {res.axis2_name, res.axis2_values[j]},
                                      {"win_fraction", cell.win_fraction},
                                      {"mean_ql_adj", cell.mean_ql_adjusted},
                                      {"mean_ql_unadj", cell.mean_ql_unadjusted},
                                      {"reps", cell.replications},
                                      {"failures", cell.failures}});
            }
        o["cells"] = cells;
        return o.dump(2) + "\n";
    };
    auto human = [&] {
        std::ostringstream h;
        h << "win fraction (rows " << res.axis1_name << ", columns " << res.axis2_name << "; seed " << g.seed << ")\n";
        h << std::left << std::setw(12) << "";
        for (double v : res.axis2_values) h << std::setw(12) << format_short(v);
        h << "\n";
        for (std::size_t i = 0; i < res.cells.size(); ++i) {
            h << std::setw(12) << format_short(res.axis1_values[i]);
            for (const auto& cell : res.cells[i]) h << std::setw(12) << format_short(cell.win_fraction);
            h << "\n";
        }
        return h.str();
    };
    emit(c, "csv", machine, human, out);
    return kOk;
}

// ---- multiverse ----

int cmd_multiverse(const Common& c, std::ostream& out) {
    const Bundle b = load_bundle(c.config);
    if (!b.ground_truth) throw Error(ErrorCode::Validation, "multiverse needs a ground_truth");
    const ForecastReport rep = run_bundle(b);
    const MultiverseResult res = run_multiverse(multiverse_input(rep, *b.ground_truth, b.loss, b.config), b.threads);
    auto machine = [&](const std::string& fmt) {
        if (fmt == "csv") return export_multiverse_csv(res);
        ojson rows = ojson::array();
        for (const auto& r : res.ranked()) {
            ojson o;
            o["loss"] = r.loss;
            o["omitted_covariate"] = r.omitted_covariate;
            o["omitted_donor"] = r.omitted_donor;
            o["kind"] = r.kind == RowKind::Configuration ? "configuration"
                        : r.kind == RowKind::Mean        ? "mean"
                        : r.kind == RowKind::Median      ? "median"
                                                         : "unadjusted";
            o["adjusted_forecast"] = r.adjusted_forecast;
            o["omega_star_hat"] = r.omega_star_hat;
            o["feasible"] = r.feasible;
            if (!r.feasible) o["error"] = r.error;
            o["weights"] = std::vector<double>(r.weights.data(), r.weights.data() + r.weights.size());
            rows.push_back(o);
        }
        ojson o;
        o["loss_kind"] = to_string(res.loss);
        o["ground_truth"] = *b.ground_truth;
        o["donors"] = res.donor_names;
        o["rows"] = rows;
        return o.dump(2) + "\n";
    };
    auto human = [&] {
        std::ostringstream h;
        h << std::left << std::setw(14) << to_string(res.loss) << std::setw(22) << "omitted covariate" << std::setw(22)
          << "omitted donor" << "forecast\n";
        for (const auto& r : res.ranked()) {
            const std::string cov = r.kind == RowKind::Mean     ? "Mean"
                                    : r.kind == RowKind::Median ? "Median"
                                    : r.kind == RowKind::Unadjusted ? "Unadjusted"
                                                                    : r.omitted_covariate;
            h << std::setw(14) << (r.feasible ? format_short(r.loss) : std::string("infeasible")) << std::setw(22)
              << cov << std::setw(22) << r.omitted_donor << (r.feasible ? format_short(r.adjusted_forecast) : r.error)
              << "\n";
        }
        return h.str();
    };
    emit(c, "csv", machine, human, out);
    return kOk;
}

}  // namespace

PipelineConfig parse_pipeline_config(const json& doc) {
    PipelineConfig pc;
    pc.fit = parse_fit(has(doc, "fit") ? doc.at("fit") : json());
    pc.arch_order = get_count(doc, "arch_order", 1, "");
    pc.garch_order = get_count(doc, "garch_order", 1, "");
    pc.horizon = get_count(doc, "horizon", 1, "");
    pc.adjustment_length = get_count(doc, "adjustment_length", 1, "");
    pc.floor = get_or<double>(doc, "floor", 1e-12, "");
    if (has(doc, "estimation_window")) pc.estimation_window = get_count(doc, "estimation_window", 0, "");
    // Donors are fit through the end of their shock window unless told otherwise.
    if (!doc.is_object() || !doc.contains("donor_post_shock_rows")) pc.donor_post_shock_rows = 0;
    else if (!doc.at("donor_post_shock_rows").is_null())
        pc.donor_post_shock_rows = get_count(doc, "donor_post_shock_rows", 0, "");
    if (has(doc, "seminorm")) {
        const auto rows = get<std::vector<std::vector<double>>>(doc, "seminorm", "");
        Eigen::MatrixXd s(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.size())
                throw Error(ErrorCode::DimensionMismatch, "config: seminorm must be a square matrix");
            for (std::size_t k = 0; k < rows.size(); ++k)
                s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
        pc.seminorm = s;
    }
    pc.validate();
    return pc;
}

Bundle parse_bundle(const json& doc, const fs::path& base) {
    require_object(doc, "the configuration");
    Bundle b;
    b.config = parse_pipeline_config(doc);
    b.covariate_names = get_or<std::vector<std::string>>(doc, "covariate_names", {}, "");
    if (!has(doc, "target")) throw Error(ErrorCode::Validation, "config: missing key 'target'");
    if (!has(doc, "donors") || !doc.at("donors").is_array() || doc.at("donors").empty())
        throw Error(ErrorCode::Validation, "config: 'donors' must be a non-empty list");
    b.target = parse_series(doc.at("target"), base, b.covariate_names, b.config, "target");
    for (std::size_t j = 0; j < doc.at("donors").size(); ++j)
        b.donors.push_back(
            parse_series(doc.at("donors")[j], base, b.covariate_names, b.config, "donor" + std::to_string(j + 1)));
    if (has(doc, "ground_truth")) {
        const json& g = doc.at("ground_truth");
        if (g.is_number()) {
            b.ground_truth = g.get<double>();
        } else {
            require_object(g, "ground_truth");
            RVConfig rv;
            rv.K = get_count(g, "days", 1, "ground_truth.");
            rv.m = get_count(g, "m", 77, "ground_truth.");
            rv.drop_first_block = get_or<bool>(g, "drop_first_block", true, "ground_truth.");
            SessionGrid grid;
            grid.block_seconds = static_cast<int>(get_count(g, "block_seconds", 300, "ground_truth."));
            const double scale = get_or<double>(g, "scale", 1.0, "ground_truth.");
            const auto ticks = load_intraday(base / get<std::string>(g, "intraday", "ground_truth."));
            b.ground_truth = scale * realized_volatility_from_ticks(ticks, grid, rv);
        }
        if (!(*b.ground_truth > 0.0))
            throw Error(ErrorCode::NonpositiveGroundTruth, "ground truth must be positive");
    }
    b.loss = parse_loss_kind(get_or<std::string>(doc, "loss", "QL", ""));
    b.threads = std::max<std::size_t>(1, get_count(doc, "threads", 1, ""));
    return b;
}

Bundle load_bundle(const fs::path& config_path) {
    return parse_bundle(load_json(config_path), config_path.parent_path());
}

mc::GridConfig parse_grid_config(const json& doc) {
    require_object(doc, "the configuration");
    mc::GridConfig g;
    if (has(doc, "fixed")) {
        require_object(doc.at("fixed"), "fixed");
        for (auto it = doc.at("fixed").begin(); it != doc.at("fixed").end(); ++it) {
            if (!it.value().is_number())
                throw Error(ErrorCode::Validation, "config: fixed." + it.key() + " must be a number");
            g.fixed.at(it.key()) = it.value().get<double>();
        }
    }
    auto axis = [&](const char* key, mc::Axis& a) {
        if (!has(doc, key)) return;
        const json& aj = doc.at(key);
        a.name = get<std::string>(aj, "name", std::string(key) + ".");
        a.values = get<std::vector<double>>(aj, "values", std::string(key) + ".");
    };
    axis("axis1", g.axis1);
    axis("axis2", g.axis2);
    g.replications = get_count(doc, "replications", g.replications, "");
    g.threads = get_count(doc, "threads", g.threads, "");
    g.design.n_donors = get_count(doc, "n_donors", g.design.n_donors, "");
    g.design.p = get_count(doc, "p", g.design.p, "");
    if (has(doc, "T_range")) {
        const auto r = get<std::vector<std::size_t>>(doc, "T_range", "");
        if (r.size() != 2) throw Error(ErrorCode::Validation, "config: T_range must be [min, max]");
        g.design.t_min = r[0];
        g.design.t_max = r[1];
    }
    if (has(doc, "base_params")) g.design.base = parse_params(doc.at("base_params"), "base_params.");
    if (has(doc, "fit")) {
        g.design.fit = parse_fit(doc.at("fit"));
        if (!has(doc.at("fit"), "stderr")) g.design.fit.compute_stderr = false;
    }
    g.validate();
    return g;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Similarity-based volatility forecast correction", "svf"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    Common c;
    FitFlags ff;
    auto* sim = app.add_subcommand("simulate", "simulate a GARCH path with an optional news shock");
    add_common(sim, c, true);
    auto* fit = app.add_subcommand("fit", "fit GARCH, optionally with a shock fixed effect");
    add_common(fit, c, false);
    fit->add_option("--returns", ff.returns, "CSV with a 'return' or 'price' column");
    fit->add_option("--column", ff.column, "column to read");
    fit->add_option("--t-star", ff.t_star, "number of pre-shock returns");
    fit->add_option("--shock-date", ff.shock_date, "last pre-shock date");
    fit->add_option("--len-vol", ff.len_vol, "shock window length");
    fit->add_option("--arch-order", ff.arch_order, "m");
    fit->add_option("--garch-order", ff.garch_order, "s");
    fit->add_option("--demean", ff.demean, "sample-mean or zero")->check(CLI::IsMember({"sample-mean", "zero"}));
    auto* fc = app.add_subcommand("forecast", "adjusted and unadjusted forecasts for a study bundle");
    add_common(fc, c, true);
    auto* grid = app.add_subcommand("mc-grid", "Monte Carlo win-fraction grid");
    add_common(grid, c, true);
    auto* mv = app.add_subcommand("multiverse", "leave-one-out table over donors and covariates");
    add_common(mv, c, true);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (sim->parsed()) return cmd_simulate(c, out, err);
        if (fit->parsed()) return cmd_fit(c, ff, out, err);
        if (fc->parsed()) return cmd_forecast(c, out);
        if (grid->parsed()) return cmd_mc_grid(c, out);
        if (mv->parsed()) return cmd_multiverse(c, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return is_validation_error(e.code()) ? kValidation : kNumerical;
    } catch (const nlohmann::json::exception& e) {
        err << "error: configuration: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kValidation;
}

}  // namespace svf::cli
