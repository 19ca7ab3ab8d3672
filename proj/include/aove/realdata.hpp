#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "aove/methods.hpp"
#include "aove/mle.hpp"
#include "aove/predictor.hpp"
#include "aove/synthetic.hpp"

namespace aove {

/// Daily OHLCV bars for several tickers on a common calendar (rows are dates).
struct DailyBarSeries {
    std::vector<std::string> tickers;
    std::vector<std::string> dates;  // ISO-8601, strictly increasing
    Matrix open, high, low, close, volume;

    Index days() const { return static_cast<Index>(dates.size()); }
    Index assets() const { return static_cast<Index>(tickers.size()); }
    /// volume * (open + high + low + close) / 4
    Matrix dollar_volume() const;
};

/// Reads `date,ticker,open,high,low,close,volume` rows (header required, any column order),
/// keeps the requested tickers within [start, end] (empty bounds are open) and aligns them on
/// the intersection of their dates.
DailyBarSeries ingest_daily_bars(std::istream& in, const std::vector<std::string>& tickers,
                                 const std::string& start = "", const std::string& end = "");
DailyBarSeries ingest_daily_bars_file(const std::string& path, const std::vector<std::string>& tickers,
                                      const std::string& start = "", const std::string& end = "");

/// tau shifted series of log tau-day sums:
///   Y^{(i)}_t = log(sum_{s=tau(t-1)+i}^{tau t+i-1} v_s) - mu^{(i)},  i = 1..tau, t = 1..T_agg.
struct AggregatedSeries {
    std::vector<Matrix> series;  // series[i-1] is T_agg x n
    std::vector<Vector> mu;      // demeaning vector per shift

    int tau() const { return static_cast<int>(series.size()); }
};

/// Days needed for aggregate(): tau * T_agg + tau - 1.
Index required_days(int tau, Index t_agg);

/// Same mu for every shift.
AggregatedSeries aggregate(const Matrix& daily, int tau, Index t_agg, const Vector& mu);
/// Per-shift mu equal to the mean of that shift's first t_train log sums.
AggregatedSeries aggregate_demeaned(const Matrix& daily, int tau, Index t_agg, Index t_train);

/// Kernel-density prior feature of an atom: (theta, sorted lambda_phi, sorted lambda_sigma).
Vector eigen_feature(const SymCommParams& params);

/// 20 log-spaced bandwidths on [0.01, 1].
std::vector<double> default_bandwidths();

struct KdeResult {
    DiscretePrior prior;
    double bandwidth = 0.0;
    std::vector<double> cv_scores;  // per candidate bandwidth
};

/// Gaussian product-kernel density over eigen features with the bandwidth chosen by K-fold
/// held-out mean log density. Folds are the ranks of the lexicographically sorted features
/// modulo K, so the result does not depend on the order of `support`.
KdeResult gen_prior_kde(const std::vector<SymCommParams>& support, const std::vector<double>& bandwidths, int folds);

/// Log of the Gaussian product-kernel density estimate at `point` from `sample` rows.
double kde_log_density(const Matrix& sample, const Vector& point, double bandwidth);

struct RealDataConfig {
    std::vector<std::string> tickers;
    std::string start_date;
    std::string end_date;
    int tau = 10;
    Index T = 10;
    Index t_train = 100;
    Index t_test = 0;  // 0: use every aggregated period after training
    std::size_t n_ove = 200;
    Index window = 10;
    int ensemble_size = 25;
    double wealth = 1.0;
    double risk_aversion = 0.1;
    double mu2 = 0.1;
    int kde_folds = 5;
    std::vector<double> bandwidths = default_bandwidths();
    std::uint64_t seed = 1;
    int workers = 1;
    MleConfig mle;
};

void check_config(const RealDataConfig& config);

struct TrainedBundle {
    std::vector<EnsemblePredictor> ensembles;  // per shift; PTO uses the ensemble mean
    std::vector<SymCommParams> support;
    std::size_t failed_windows = 0;
    KdeResult kde;
    DiscretePrior aove_prior;  // N_ove atoms drawn from the KDE prior, uniform weights
};

TrainedBundle train_models(const AggregatedSeries& agg, const RealDataConfig& config);

struct TraceRow {
    std::size_t step;
    Method method;
    int shift;
    double cost;
};

struct RealDataReport {
    RegretReport regret;         // records indexed by test step
    std::vector<TraceRow> trace; // per step, method, shift
    std::vector<double> oracle_costs;
    PortfolioSpec spec;
    std::size_t support_size = 0;
    std::size_t failed_windows = 0;
    double bandwidth = 0.0;
};

/// Portfolio constants from the training period: e is the mean tau-day simple return of the
/// close price per asset, delta^2 the average of the per-asset return variances.
PortfolioSpec estimate_spec(const DailyBarSeries& bars, const RealDataConfig& config);

/// Rolling SAA evaluation over the test region of each shift.
RealDataReport rolling_evaluate(const AggregatedSeries& agg, const TrainedBundle& bundle, const PortfolioSpec& spec,
                                const RealDataConfig& config, const std::vector<Method>& methods);

/// Full pipeline: aggregation, training, prior, rolling evaluation.
RealDataReport run_real_data(const DailyBarSeries& bars, const RealDataConfig& config,
                             const std::vector<Method>& methods);

void write_trace_table(const RealDataReport& report, std::ostream& out);

}  // namespace aove
