#include "svf/multiverse.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <thread>

#include "svf/error.hpp"
#include "svf/evaluation.hpp"

namespace svf {

namespace {

std::string fmt(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string name_or_index(const std::vector<std::string>& names, std::size_t i, const char* prefix) {
    return i < names.size() && !names[i].empty() ? names[i] : prefix + std::to_string(i + 1);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

const char* kind_name(RowKind k) {
    switch (k) {
        case RowKind::Configuration: return "configuration";
        case RowKind::Mean: return "mean";
        case RowKind::Median: return "median";
        case RowKind::Unadjusted: return "unadjusted";
    }
    return "";
}

}  // namespace

LossKind parse_loss_kind(const std::string& name) {
    std::string up;
    for (char c : name) up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (up == "QL") return LossKind::QL;
    if (up == "MSE") return LossKind::MSE;
    if (up == "APE") return LossKind::APE;
    throw Error(ErrorCode::Validation, "unknown loss '" + name + "' (expected QL, MSE or APE)");
}

std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::QL: return "QL";
        case LossKind::MSE: return "MSE";
        case LossKind::APE: return "APE";
    }
    return "";
}

double loss_value(LossKind kind, double prediction, double ground_truth) {
    switch (kind) {
        case LossKind::QL: return ql_loss(prediction, ground_truth);
        case LossKind::MSE: return mse_loss(prediction, ground_truth);
        case LossKind::APE: return ape_loss(prediction, ground_truth);
    }
    return 0.0;
}

std::vector<Omission> enumerate_configs(std::size_t n_donors, std::size_t n_covariates) {
    std::vector<Omission> out;
    out.reserve((n_donors + 1) * (n_covariates + 1));
    for (std::size_t c = 0; c <= n_covariates; ++c) {
        for (std::size_t d = 0; d <= n_donors; ++d) {
            Omission o;
            if (c > 0) o.covariate = c - 1;
            if (d > 0) o.donor = d - 1;
            out.push_back(o);
        }
    }
    return out;
}

void MultiverseInput::validate() const {
    raw_profile.validate();
    config.validate();
    if (raw_profile.n_donors() < 2 || raw_profile.covariates() < 2)
        throw Error(ErrorCode::Validation, "leave-one-out needs at least two donors and two covariates");
    if (static_cast<std::size_t>(donor_effects.size()) != raw_profile.n_donors())
        throw Error(ErrorCode::DimensionMismatch, "one donor effect per donor is required");
    if (!(ground_truth > 0.0) || !std::isfinite(ground_truth))
        throw Error(ErrorCode::NonpositiveGroundTruth, "ground truth must be positive and finite");
    if (config.seminorm)
        throw Error(ErrorCode::Validation, "a custom seminorm matrix cannot follow covariate omissions");
}

MultiverseInput multiverse_input(const ForecastReport& report, double ground_truth, LossKind loss,
                                 const PipelineConfig& config) {
    MultiverseInput in;
    in.raw_profile = report.raw_profile;
    in.donor_effects = donor_effects(report.donors);
    in.target = report.target;
    in.ground_truth = ground_truth;
    in.loss = loss;
    in.config = config;
    return in;
}

MultiverseResult run_multiverse(const MultiverseInput& input, std::size_t threads) {
    input.validate();
    const VolatilityProfile& raw = input.raw_profile;
    const std::size_t n = raw.n_donors();
    const std::size_t p = raw.covariates();
    const auto configs = enumerate_configs(n, p);

    MultiverseResult res;
    res.loss = input.loss;
    for (std::size_t j = 0; j < n; ++j) res.donor_names.push_back(name_or_index(raw.donor_names, j, "donor"));
    res.rows.resize(configs.size());

    auto evaluate = [&](std::size_t k) {
        const Omission& o = configs[k];
        MultiverseRow& row = res.rows[k];
        row.index = k;
        if (o.covariate) row.omitted_covariate = name_or_index(raw.covariate_names, *o.covariate, "covariate");
        if (o.donor) row.omitted_donor = res.donor_names[*o.donor];
        row.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        try {
            Eigen::VectorXd effects = input.donor_effects;
            VolatilityProfile prof = raw;
            if (o.covariate || o.donor) prof = raw.without(o.donor, o.covariate);
            if (o.donor) {
                Eigen::VectorXd e(static_cast<Eigen::Index>(n - 1));
                for (std::size_t j = 0, t = 0; j < n; ++j)
                    if (j != *o.donor) e[static_cast<Eigen::Index>(t++)] = effects[static_cast<Eigen::Index>(j)];
                effects = e;
            }
            const Adjustment adj = adjust(prof, effects, input.target, input.config);
            for (std::size_t j = 0, t = 0; j < n; ++j) {
                if (o.donor && j == *o.donor) continue;
                row.weights[static_cast<Eigen::Index>(j)] = adj.weights.weights[static_cast<Eigen::Index>(t++)];
            }
            row.omega_star_hat = adj.omega_star_hat;
            row.adjusted_forecast = adj.adjusted.variance.front();
            row.loss = loss_value(input.loss, row.adjusted_forecast, input.ground_truth);
        } catch (const Error& e) {
            row.feasible = false;
            row.error = e.what();
            row.adjusted_forecast = row.loss = row.omega_star_hat = std::nan("");
        }
    };

    threads = std::max<std::size_t>(1, std::min(threads, configs.size()));
    if (threads == 1) {
        for (std::size_t k = 0; k < configs.size(); ++k) evaluate(k);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t k = t; k < configs.size(); k += threads) evaluate(k);
            });
        for (auto& th : pool) th.join();
    }

    std::vector<double> forecasts;
    for (const auto& r : res.rows)
        if (r.feasible) forecasts.push_back(r.adjusted_forecast);

    auto synthetic = [&](RowKind kind, double value) {
        MultiverseRow row;
        row.kind = kind;
        row.index = res.rows.size();
        row.omitted_covariate = row.omitted_donor = "All";
        row.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        row.adjusted_forecast = value;
        try {
            row.loss = loss_value(input.loss, value, input.ground_truth);
        } catch (const Error& e) {
            row.feasible = false;
            row.error = e.what();
            row.loss = std::nan("");
        }
        res.rows.push_back(std::move(row));
    };

    if (forecasts.empty()) {
        for (RowKind k : {RowKind::Mean, RowKind::Median}) {
            MultiverseRow row;
            row.kind = k;
            row.index = res.rows.size();
            row.omitted_covariate = row.omitted_donor = "All";
            row.feasible = false;
            row.error = "no feasible configuration";
            row.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
            row.adjusted_forecast = row.loss = row.omega_star_hat = std::nan("");
            res.rows.push_back(std::move(row));
        }
    } else {
        double sum = 0.0;
        for (double f : forecasts) sum += f;
        synthetic(RowKind::Mean, sum / static_cast<double>(forecasts.size()));
        std::vector<double> sorted = forecasts;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        synthetic(RowKind::Median, m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]));
    }
    synthetic(RowKind::Unadjusted, input.target.unadjusted.variance.front());
    return res;
}

std::vector<MultiverseRow> MultiverseResult::ranked() const {
    std::vector<MultiverseRow> out = rows;
    std::stable_sort(out.begin(), out.end(), [](const MultiverseRow& a, const MultiverseRow& b) {
        if (a.feasible != b.feasible) return a.feasible;
        if (!a.feasible) return false;
        return a.loss < b.loss;
    });
    return out;
}

std::string export_multiverse_csv(const MultiverseResult& result) {
    std::string out = to_string(result.loss) + ",omitted_covariate,omitted_donor,kind,adjusted_forecast,omega_star_hat,feasible";
    for (const auto& d : result.donor_names) out += ",w_" + csv_field(d);
    out += '\n';
    for (const auto& r : result.ranked()) {
        out += fmt(r.loss) + "," + csv_field(r.omitted_covariate) + "," + csv_field(r.omitted_donor) + "," +
               kind_name(r.kind) + "," + fmt(r.adjusted_forecast) + "," +
               (r.kind == RowKind::Configuration ? fmt(r.omega_star_hat) : std::string()) + "," +
               (r.feasible ? "1" : "0");
        for (Eigen::Index j = 0; j < r.weights.size(); ++j)
            out += "," + (r.kind == RowKind::Configuration && r.feasible ? fmt(r.weights[j]) : std::string());
        out += '\n';
    }
    return out;
}

}  // namespace svf
