#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace svf {

struct RVConfig {
    std::size_t K = 1;             // days averaged
    std::size_t m = 77;            // blocks per day that enter the sum
    bool drop_first_block = true;  // each day carries one extra leading block that is discarded

    std::size_t blocks_supplied_per_day() const noexcept { return m + (drop_first_block ? 1 : 0); }
    void validate() const;
};

/// (1/K) * sum of squared block log returns over K days. Each inner vector is
/// one day of block returns, including the leading block when it is dropped.
double realized_volatility(const std::vector<std::vector<double>>& daily_block_returns, const RVConfig& config);

/// Same estimator over a flat, day-major sequence of block returns.
double realized_volatility(std::span<const double> block_returns, const RVConfig& config);

/// Same estimator from block-boundary log prices, one vector per day.
double realized_volatility_from_log_prices(const std::vector<std::vector<double>>& daily_log_prices,
                                           const RVConfig& config);

struct IntradayTick {
    std::string date;     // YYYY-MM-DD
    int seconds = 0;      // seconds since midnight
    double price = 0.0;
};

/// Fixed intraday grid; default is 09:30-16:00 in 5-minute blocks.
struct SessionGrid {
    int open_seconds = 9 * 3600 + 30 * 60;
    int close_seconds = 16 * 3600;
    int block_seconds = 300;

    std::size_t blocks() const noexcept {
        return static_cast<std::size_t>((close_seconds - open_seconds) / block_seconds);
    }
};

/// Log price of the last tick at or before every block boundary from open to
/// close, one vector per day. Every boundary b must see a tick in
/// (b - block, b]; otherwise the day is missing a block and
/// BlockCountMismatch is thrown.
std::vector<std::vector<double>> sample_block_log_prices(std::vector<IntradayTick> ticks, const SessionGrid& grid);

double realized_volatility_from_ticks(const std::vector<IntradayTick>& ticks, const SessionGrid& grid,
                                      const RVConfig& config);

struct LossTriple {
    double mse = 0.0;
    double ape = 0.0;
    double ql = 0.0;
};

/// x - log x - 1 with x = ground_truth / prediction.
double ql_loss(double prediction, double ground_truth);
double mse_loss(double prediction, double ground_truth);
/// |prediction - ground_truth| / ground_truth
double ape_loss(double prediction, double ground_truth);
LossTriple losses(double prediction, double ground_truth);

/// Asymptotic QL gain of the adjusted forecast when the true shock is
/// `omega_star` and the shocked variance is `sigma2`:
/// x / (sigma2 - x) + log((sigma2 - x) / sigma2).
double ql_advantage(double omega_star, double sigma2);

}  // namespace svf
