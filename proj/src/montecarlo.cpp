#include "svf/montecarlo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "svf/error.hpp"
#include "svf/evaluation.hpp"
#include "svf/pipeline.hpp"

namespace svf::mc {

namespace {

constexpr const char* kNames[] = {"mu_V", "sigma_V", "mu_delta", "mu_omega_star", "sigma_u"};

std::string fmt(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

struct Placement {
    std::size_t length = 0;
    std::size_t t_star = 0;
};

// Length uniform on [t_min, t_max], shock start uniform on the middle 80%.
Placement draw_placement(const Design& d, Rng& rng) {
    Placement p;
    p.length = std::uniform_int_distribution<std::size_t>(d.t_min, d.t_max)(rng);
    const auto lo = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(p.length)));
    const auto hi = static_cast<std::size_t>(std::floor(0.9 * static_cast<double>(p.length)));
    p.t_star = std::uniform_int_distribution<std::size_t>(std::max<std::size_t>(lo, 1), std::min(hi, p.length - 1))(rng);
    return p;
}

}  // namespace

double& CellParams::at(const std::string& name) {
    if (name == "mu_V") return mu_V;
    if (name == "sigma_V") return sigma_V;
    if (name == "mu_delta") return mu_delta;
    if (name == "mu_omega_star") return mu_omega_star;
    if (name == "sigma_u") return sigma_u;
    throw Error(ErrorCode::Validation, "unknown grid parameter '" + name + "'");
}

double CellParams::at(const std::string& name) const { return const_cast<CellParams&>(*this).at(name); }

bool is_grid_parameter(const std::string& name) {
    return std::any_of(std::begin(kNames), std::end(kNames), [&](const char* n) { return name == n; });
}

std::vector<double> build_delta(std::size_t p, double mu_delta) {
    if (p == 0) throw Error(ErrorCode::Validation, "p must be positive");
    std::vector<double> d(p);
    const double scale = 2.0 * mu_delta / static_cast<double>(p + 1);
    for (std::size_t j = 0; j < p; ++j) d[j] = scale * static_cast<double>(j + 1);
    return d;
}

void Design::validate() const {
    if (n_donors == 0) throw Error(ErrorCode::Validation, "n_donors must be positive");
    if (p == 0) throw Error(ErrorCode::Validation, "p must be positive");
    if (t_min > t_max) throw Error(ErrorCode::Validation, "T range is empty");
    if (t_min < 50) throw Error(ErrorCode::Validation, "T range must start at 50 or more");
    base.validate();
    if (!base.gamma.empty()) throw Error(ErrorCode::Validation, "base parameters must not carry covariates");
    if (!base.is_stationary()) throw Error(ErrorCode::NonstationaryParams, "base parameters are not stationary");
    fit.validate();
}

ReplicationOutcome run_replication(const CellParams& cell, const Design& design, std::uint64_t seed) {
    design.validate();
    if (cell.sigma_V < 0.0 || cell.sigma_u < 0.0)
        throw Error(ErrorCode::Validation, "sigma_V and sigma_u must be nonnegative");
    try {
        Rng layout(derive_seed(seed, {0}));
        ShockSpec shock;
        shock.len_vol = 1;
        shock.len_return = 0;
        shock.mu_omega_star = cell.mu_omega_star;
        shock.delta = build_delta(design.p, cell.mu_delta);
        shock.sigma_u = cell.sigma_u;
        const CovariateModel cov{design.p, cell.mu_V, cell.sigma_V};

        PipelineConfig pc;
        pc.fit = design.fit;
        pc.arch_order = design.base.arch_order();
        pc.garch_order = design.base.garch_order();

        ReplicationOutcome out;
        std::vector<SeriesData> series(design.n_donors + 1);
        SimulatedPath target_path;
        for (std::size_t i = 0; i <= design.n_donors; ++i) {
            const Placement pl = draw_placement(design, layout);
            shock.t_star = pl.t_star;
            SimulatedPath path = simulate_path(design.base, shock, pl.length, cov, derive_seed(seed, {1, i}));
            SeriesData& s = series[i];
            s.name = i == 0 ? "target" : "donor" + std::to_string(i);
            s.t_star = pl.t_star;
            s.len_vol = 1;
            s.profile = path.covariates.row(static_cast<Eigen::Index>(pl.t_star)).transpose();
            if (i == 0) {
                // The target is only observed up to its shock.
                s.returns.assign(path.returns.begin(), path.returns.begin() + static_cast<std::ptrdiff_t>(pl.t_star));
                target_path = std::move(path);
            } else {
                s.returns = std::move(path.returns);
            }
        }

        std::vector<Donor> donors;
        donors.reserve(design.n_donors);
        for (std::size_t i = 1; i <= design.n_donors; ++i) donors.push_back(fit_donor(series[i], pc));
        const TargetFit target = fit_target(series[0], pc);
        const VolatilityProfile raw = build_profile(series[0].profile, donors, {});
        const Adjustment adj = adjust(raw, donor_effects(donors), target, pc);

        out.ground_truth = target_path.sigma2[series[0].t_star];
        out.omega_star_true = target_path.omega_star[series[0].t_star];
        out.unadjusted = target.unadjusted.variance.front();
        out.adjusted = adj.adjusted.variance.front();
        out.omega_star_hat = adj.omega_star_hat;
        out.floored = adj.adjusted.floored;
        out.ql_unadjusted = ql_loss(out.unadjusted, out.ground_truth);
        out.ql_adjusted = ql_loss(out.adjusted, out.ground_truth);
        return out;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Validation) throw;
        throw Error(ErrorCode::ReplicationFailed, e.what());
    }
}

void GridConfig::validate() const {
    for (const Axis* a : {&axis1, &axis2}) {
        if (!is_grid_parameter(a->name))
            throw Error(ErrorCode::Validation, "axis parameter '" + a->name +
                                                   "' is not one of mu_V, sigma_V, mu_delta, mu_omega_star, sigma_u");
        if (a->values.empty()) throw Error(ErrorCode::Validation, "axis '" + a->name + "' has no values");
        for (double v : a->values)
            if (!std::isfinite(v)) throw Error(ErrorCode::Validation, "axis '" + a->name + "' has a non-finite value");
    }
    if (axis1.name == axis2.name) throw Error(ErrorCode::Validation, "the two axes must vary different parameters");
    if (replications == 0) throw Error(ErrorCode::Validation, "replications must be positive");
    if (threads == 0) throw Error(ErrorCode::Validation, "threads must be positive");
    design.validate();
}

CellResult run_cell(const CellParams& cell, const Design& design, std::size_t replications, std::uint64_t seed,
                    std::size_t threads) {
    struct Slot {
        bool ok = false;
        double adj = 0.0;
        double unadj = 0.0;
    };
    std::vector<Slot> slots(replications);
    std::exception_ptr fatal;
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t r = first; r < replications; r += stride) {
            try {
                const auto o = run_replication(cell, design, derive_seed(seed, {r}));
                slots[r] = {true, o.ql_adjusted, o.ql_unadjusted};
            } catch (const Error& e) {
                if (e.code() != ErrorCode::ReplicationFailed) {
                    fatal = std::current_exception();
                    return;
                }
            }
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, replications));
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& t : pool) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    CellResult res;
    res.params = cell;
    res.replications = replications;
    std::size_t ok = 0, wins = 0;
    double sum_adj = 0.0, sum_unadj = 0.0;
    for (const Slot& s : slots) {
        if (!s.ok) {
            ++res.failures;
            continue;
        }
        ++ok;
        if (s.adj <= s.unadj) ++wins;
        sum_adj += s.adj;
        sum_unadj += s.unadj;
    }
    if (ok > 0) {
        res.win_fraction = static_cast<double>(wins) / static_cast<double>(ok);
        res.mean_ql_adjusted = sum_adj / static_cast<double>(ok);
        res.mean_ql_unadjusted = sum_unadj / static_cast<double>(ok);
    } else {
        res.win_fraction = res.mean_ql_adjusted = res.mean_ql_unadjusted = std::nan("");
    }
    return res;
}

GridResult run_grid(const GridConfig& config) {
    config.validate();
    GridResult g;
    g.axis1_name = config.axis1.name;
    g.axis2_name = config.axis2.name;
    g.axis1_values = config.axis1.values;
    g.axis2_values = config.axis2.values;
    g.cells.resize(g.axis1_values.size());
    for (std::size_t i = 0; i < g.axis1_values.size(); ++i) {
        for (std::size_t j = 0; j < g.axis2_values.size(); ++j) {
            CellParams cell = config.fixed;
            cell.at(g.axis1_name) = g.axis1_values[i];
            cell.at(g.axis2_name) = g.axis2_values[j];
            g.cells[i].push_back(run_cell(cell, config.design, config.replications, config.seed, config.threads));
        }
    }
    return g;
}

std::string export_grid_csv(const GridResult& result) {
    std::string out = result.axis1_name + "," + result.axis2_name +
                      ",win_fraction,mean_ql_adj,mean_ql_unadj,reps,failures\n";
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        for (std::size_t j = 0; j < result.cells[i].size(); ++j) {
            const CellResult& c = result.cells[i][j];
            out += fmt(result.axis1_values[i]) + "," + fmt(result.axis2_values[j]) + "," + fmt(c.win_fraction) + "," +
                   fmt(c.mean_ql_adjusted) + "," + fmt(c.mean_ql_unadjusted) + "," + std::to_string(c.replications) +
                   "," + std::to_string(c.failures) + "\n";
        }
    }
    return out;
}

}  // namespace svf::mc
