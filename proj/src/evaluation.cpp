#include "svf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "svf/error.hpp"

namespace svf {

namespace {

std::string count_message(const std::string& what, std::size_t expected, std::size_t found) {
    return what + ": expected " + std::to_string(expected) + ", found " + std::to_string(found);
}

}  // namespace

void RVConfig::validate() const {
    if (K == 0) throw Error(ErrorCode::Validation, "RV needs K >= 1");
    if (m == 0) throw Error(ErrorCode::Validation, "RV needs m >= 1");
}

double realized_volatility(const std::vector<std::vector<double>>& daily_block_returns, const RVConfig& config) {
    config.validate();
    if (daily_block_returns.size() != config.K)
        throw Error(ErrorCode::BlockCountMismatch, count_message("days", config.K, daily_block_returns.size()));
    const std::size_t per_day = config.blocks_supplied_per_day();
    const std::size_t skip = config.drop_first_block ? 1 : 0;
    double total = 0.0;
    for (std::size_t d = 0; d < daily_block_returns.size(); ++d) {
        const auto& day = daily_block_returns[d];
        if (day.size() != per_day)
            throw Error(ErrorCode::BlockCountMismatch,
                        count_message("blocks on day " + std::to_string(d + 1), per_day, day.size()));
        for (std::size_t b = skip; b < day.size(); ++b) {
            if (!std::isfinite(day[b]))
                throw Error(ErrorCode::Validation, "non-finite block return on day " + std::to_string(d + 1));
            total += day[b] * day[b];
        }
    }
    return total / static_cast<double>(config.K);
}

double realized_volatility(std::span<const double> block_returns, const RVConfig& config) {
    config.validate();
    const std::size_t per_day = config.blocks_supplied_per_day();
    if (block_returns.size() != config.K * per_day)
        throw Error(ErrorCode::BlockCountMismatch, count_message("block returns", config.K * per_day, block_returns.size()));
    std::vector<std::vector<double>> days(config.K);
    for (std::size_t d = 0; d < config.K; ++d)
        days[d].assign(block_returns.begin() + static_cast<std::ptrdiff_t>(d * per_day),
                       block_returns.begin() + static_cast<std::ptrdiff_t>((d + 1) * per_day));
    return realized_volatility(days, config);
}

double realized_volatility_from_log_prices(const std::vector<std::vector<double>>& daily_log_prices,
                                           const RVConfig& config) {
    std::vector<std::vector<double>> days;
    days.reserve(daily_log_prices.size());
    const std::size_t expected = config.blocks_supplied_per_day() + 1;
    for (std::size_t d = 0; d < daily_log_prices.size(); ++d) {
        const auto& px = daily_log_prices[d];
        if (px.size() != expected)
            throw Error(ErrorCode::BlockCountMismatch,
                        count_message("boundary prices on day " + std::to_string(d + 1), expected, px.size()));
        std::vector<double> r(px.size() - 1);
        for (std::size_t i = 1; i < px.size(); ++i) r[i - 1] = px[i] - px[i - 1];
        days.push_back(std::move(r));
    }
    return realized_volatility(days, config);
}

std::vector<std::vector<double>> sample_block_log_prices(std::vector<IntradayTick> ticks, const SessionGrid& grid) {
    if (grid.block_seconds <= 0 || grid.close_seconds <= grid.open_seconds ||
        (grid.close_seconds - grid.open_seconds) % grid.block_seconds != 0)
        throw Error(ErrorCode::Validation, "session grid must divide the trading day into whole blocks");
    std::stable_sort(ticks.begin(), ticks.end(), [](const IntradayTick& a, const IntradayTick& b) {
        return a.date != b.date ? a.date < b.date : a.seconds < b.seconds;
    });

    std::map<std::string, std::vector<const IntradayTick*>> by_day;
    for (const auto& t : ticks) {
        if (!(t.price > 0.0)) throw Error(ErrorCode::NonpositiveInput, "intraday prices must be positive");
        by_day[t.date].push_back(&t);
    }

    std::vector<int> boundaries;
    for (int b = grid.open_seconds; b <= grid.close_seconds; b += grid.block_seconds) boundaries.push_back(b);

    std::vector<std::vector<double>> out;
    for (const auto& [date, day] : by_day) {
        std::vector<double> px;
        px.reserve(boundaries.size());
        std::size_t i = 0;
        for (int b : boundaries) {
            const IntradayTick* last = nullptr;
            while (i < day.size() && day[i]->seconds <= b) {
                if (day[i]->seconds > b - grid.block_seconds) last = day[i];
                ++i;
            }
            if (last == nullptr)
                throw Error(ErrorCode::BlockCountMismatch,
                            "day " + date + " has no tick in the block ending at second " + std::to_string(b));
            px.push_back(std::log(last->price));
        }
        out.push_back(std::move(px));
    }
    return out;
}

double realized_volatility_from_ticks(const std::vector<IntradayTick>& ticks, const SessionGrid& grid,
                                      const RVConfig& config) {
    const std::size_t blocks = grid.blocks();
    if (blocks != config.blocks_supplied_per_day())
        throw Error(ErrorCode::BlockCountMismatch,
                    count_message("blocks per session", config.blocks_supplied_per_day(), blocks));
    return realized_volatility_from_log_prices(sample_block_log_prices(ticks, grid), config);
}

double ql_loss(double prediction, double ground_truth) {
    if (!(prediction > 0.0) || !(ground_truth > 0.0))
        throw Error(ErrorCode::NonpositiveInput, "QL loss needs positive prediction and ground truth");
    // x - log x - 1 with x = 1 + d, written to stay accurate near x = 1.
    const double d = (ground_truth - prediction) / prediction;
    return d - std::log1p(d);
}

double mse_loss(double prediction, double ground_truth) {
    const double e = prediction - ground_truth;
    return e * e;
}

double ape_loss(double prediction, double ground_truth) {
    if (!(ground_truth > 0.0)) throw Error(ErrorCode::NonpositiveGroundTruth, "APE needs a positive ground truth");
    return std::abs(prediction - ground_truth) / ground_truth;
}

LossTriple losses(double prediction, double ground_truth) {
    return LossTriple{mse_loss(prediction, ground_truth), ape_loss(prediction, ground_truth),
                      ql_loss(prediction, ground_truth)};
}

double ql_advantage(double omega_star, double sigma2) {
    if (!(sigma2 > 0.0)) throw Error(ErrorCode::DomainError, "sigma2 must be positive");
    if (!(omega_star < sigma2)) throw Error(ErrorCode::DomainError, "omega_star must be below sigma2");
    const double r = omega_star / sigma2;
    return omega_star / (sigma2 - omega_star) + std::log1p(-r);
}

}  // namespace svf
