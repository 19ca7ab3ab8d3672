#include "aove/realdata.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "aove/error.hpp"
#include "aove/parallel.hpp"

namespace aove {

namespace {

using Clock = std::chrono::steady_clock;

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& text, std::size_t line_no) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
        throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + text + "'");
    return v;
}

bool iso_date(const std::string& d) {
    if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (d[i] < '0' || d[i] > '9') return false;
    return true;
}

struct Bar {
    double open, high, low, close, volume;
};

std::vector<std::size_t> draw_with_replacement(const std::vector<double>& weights, std::size_t count, Rng& rng) {
    std::vector<double> cumulative(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
    const double total = cumulative.back();
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < count; ++k) {
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), rng.uniform() * total);
        out.push_back(static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(it - cumulative.begin(), static_cast<std::ptrdiff_t>(weights.size()) - 1)));
    }
    return out;
}

}  // namespace

Matrix DailyBarSeries::dollar_volume() const {
    return (volume.array() * (open.array() + high.array() + low.array() + close.array()) / 4.0).matrix();
}

DailyBarSeries ingest_daily_bars(std::istream& in, const std::vector<std::string>& tickers, const std::string& start,
                                 const std::string& end) {
    if (tickers.empty()) throw DataError("no tickers requested");
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        header = split_csv(t);
        break;
    }
    const std::vector<std::string> required{"date", "ticker", "open", "high", "low", "close", "volume"};
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const auto& r : required)
        if (!col.count(r)) throw ParseError("header is missing column '" + r + "'");

    const std::set<std::string> wanted(tickers.begin(), tickers.end());
    std::map<std::string, std::map<std::string, Bar>> by_ticker;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto cells = split_csv(t);
        if (cells.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(cells.size()));
        const auto& date = cells[col["date"]];
        if (!iso_date(date)) throw ParseError("line " + std::to_string(line_no) + ": bad date '" + date + "'");
        const auto& ticker = cells[col["ticker"]];
        if (!wanted.count(ticker)) continue;
        if ((!start.empty() && date < start) || (!end.empty() && date > end)) continue;
        Bar b{parse_double(cells[col["open"]], line_no), parse_double(cells[col["high"]], line_no),
              parse_double(cells[col["low"]], line_no), parse_double(cells[col["close"]], line_no),
              parse_double(cells[col["volume"]], line_no)};
        if (!(b.volume > 0.0)) throw ParseError("line " + std::to_string(line_no) + ": volume must be positive");
        if (!(b.open > 0.0 && b.high > 0.0 && b.low > 0.0 && b.close > 0.0))
            throw ParseError("line " + std::to_string(line_no) + ": prices must be positive");
        if (!by_ticker[ticker].emplace(date, b).second)
            throw ParseError("line " + std::to_string(line_no) + ": duplicate date " + date + " for " + ticker);
    }

    for (const auto& tk : tickers)
        if (!by_ticker.count(tk)) throw MissingTickerError(tk);

    std::vector<std::string> common;
    for (const auto& [date, bar] : by_ticker[tickers.front()]) {
        bool everywhere = true;
        for (const auto& tk : tickers) everywhere = everywhere && by_ticker[tk].count(date) > 0;
        if (everywhere) common.push_back(date);
    }
    if (common.empty()) throw EmptyIntersectionError("requested tickers share no trading dates");

    DailyBarSeries out;
    out.tickers = tickers;
    out.dates = common;
    const auto days = static_cast<Index>(common.size());
    const auto n = static_cast<Index>(tickers.size());
    for (Matrix* m : {&out.open, &out.high, &out.low, &out.close, &out.volume}) m->resize(days, n);
    for (Index j = 0; j < n; ++j) {
        const auto& series = by_ticker[tickers[static_cast<std::size_t>(j)]];
        for (Index d = 0; d < days; ++d) {
            const Bar& b = series.at(common[static_cast<std::size_t>(d)]);
            out.open(d, j) = b.open;
            out.high(d, j) = b.high;
            out.low(d, j) = b.low;
            out.close(d, j) = b.close;
            out.volume(d, j) = b.volume;
        }
    }
    return out;
}

DailyBarSeries ingest_daily_bars_file(const std::string& path, const std::vector<std::string>& tickers,
                                      const std::string& start, const std::string& end) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open bar file: " + path);
    return ingest_daily_bars(in, tickers, start, end);
}

Index required_days(int tau, Index t_agg) { return static_cast<Index>(tau) * t_agg + tau - 1; }

AggregatedSeries aggregate(const Matrix& daily, int tau, Index t_agg, const Vector& mu) {
    if (tau < 1 || t_agg < 1) throw DataError("tau and T_agg must be positive");
    if (mu.size() != daily.cols()) throw DimensionError("mu length does not match the number of assets");
    const Index need = required_days(tau, t_agg);
    if (daily.rows() < need) {
        std::ostringstream os;
        os << "aggregation needs " << need << " daily rows, have " << daily.rows();
        throw DataError(os.str());
    }
    AggregatedSeries out;
    for (int i = 1; i <= tau; ++i) {
        Matrix y(t_agg, daily.cols());
        for (Index t = 1; t <= t_agg; ++t) {
            const Index first = static_cast<Index>(tau) * (t - 1) + i;  // 1-based day index
            const Vector sum = daily.middleRows(first - 1, tau).colwise().sum().transpose();
            y.row(t - 1) = (sum.array().log() - mu.array()).matrix().transpose();
        }
        out.series.push_back(std::move(y));
        out.mu.push_back(mu);
    }
    return out;
}

AggregatedSeries aggregate_demeaned(const Matrix& daily, int tau, Index t_agg, Index t_train) {
    if (t_train < 1 || t_train > t_agg) throw DataError("training length must lie in [1, T_agg]");
    AggregatedSeries raw = aggregate(daily, tau, t_agg, Vector::Zero(daily.cols()));
    for (std::size_t i = 0; i < raw.series.size(); ++i) {
        const Vector mu = raw.series[i].topRows(t_train).colwise().mean().transpose();
        raw.series[i].rowwise() -= mu.transpose();
        raw.mu[i] = mu;
    }
    return raw;
}

Vector eigen_feature(const SymCommParams& params) {
    const Index n = params.dim();
    Vector lp = params.lambda_phi();
    Vector ls = params.lambda_sigma();
    std::sort(lp.data(), lp.data() + n);
    std::sort(ls.data(), ls.data() + n);
    Vector f(1 + 2 * n);
    f << params.theta(), lp, ls;
    return f;
}

std::vector<double> default_bandwidths() {
    std::vector<double> out;
    for (int k = 0; k < 20; ++k) out.push_back(std::pow(10.0, -2.0 + 2.0 * k / 19.0));
    return out;
}

double kde_log_density(const Matrix& sample, const Vector& point, double bandwidth) {
    const Index m = sample.rows();
    const Index d = sample.cols();
    if (m == 0) throw DataError("empty kernel sample");
    std::vector<double> terms(static_cast<std::size_t>(m));
    for (Index j = 0; j < m; ++j)
        terms[static_cast<std::size_t>(j)] = -0.5 * (sample.row(j).transpose() - point).squaredNorm() / (bandwidth * bandwidth);
    const double shift = *std::max_element(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - shift);
    return shift + std::log(sum) - std::log(static_cast<double>(m)) - static_cast<double>(d) * std::log(bandwidth) -
           0.5 * static_cast<double>(d) * std::log(2.0 * M_PI);
}

KdeResult gen_prior_kde(const std::vector<SymCommParams>& support, const std::vector<double>& bandwidths, int folds) {
    if (folds < 2) throw ConfigError({"KDE needs at least 2 folds"});
    if (support.size() < static_cast<std::size_t>(folds))
        throw ConfigError({"KDE support has " + std::to_string(support.size()) + " atoms, fewer than " +
                           std::to_string(folds) + " folds"});
    if (bandwidths.empty()) throw ConfigError({"KDE bandwidth grid is empty"});
    const std::size_t m = support.size();
    const Index d = eigen_feature(support.front()).size();
    Matrix features(static_cast<Index>(m), d);
    for (std::size_t i = 0; i < m; ++i) features.row(static_cast<Index>(i)) = eigen_feature(support[i]).transpose();

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = features.row(static_cast<Index>(a));
        const auto rb = features.row(static_cast<Index>(b));
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    std::vector<int> fold(m);
    for (std::size_t r = 0; r < m; ++r) fold[order[r]] = static_cast<int>(r % static_cast<std::size_t>(folds));

    KdeResult out;
    double best = -std::numeric_limits<double>::infinity();
    for (double b : bandwidths) {
        if (!(b > 0.0)) throw ConfigError({"KDE bandwidths must be positive"});
        double cv = 0.0;
        for (int k = 0; k < folds; ++k) {
            std::vector<Index> train, held;
            for (std::size_t i = 0; i < m; ++i) (fold[i] == k ? held : train).push_back(static_cast<Index>(i));
            const Matrix train_features = features(train, Eigen::all);
            double lk = 0.0;
            for (Index i : held) lk += kde_log_density(train_features, features.row(i).transpose(), b);
            cv += lk / static_cast<double>(held.size());
        }
        cv /= static_cast<double>(folds);
        out.cv_scores.push_back(cv);
        if (cv > best) {
            best = cv;
            out.bandwidth = b;
        }
    }

    std::vector<double> logd(m);
    for (std::size_t i = 0; i < m; ++i)
        logd[i] = kde_log_density(features, features.row(static_cast<Index>(i)).transpose(), out.bandwidth);
    const double shift = *std::max_element(logd.begin(), logd.end());
    for (std::size_t i = 0; i < m; ++i) out.prior.add(support[i], std::exp(logd[i] - shift));
    out.prior.normalize();
    return out;
}

void check_config(const RealDataConfig& c) {
    std::vector<std::string> problems;
    if (c.tickers.empty()) problems.push_back("tickers must be non-empty");
    if (c.tau < 1) problems.push_back("tau must be positive");
    if (c.T < 3) problems.push_back("T must be at least 3");
    if (c.t_train < c.T) problems.push_back("t_train must be at least T");
    if (c.t_train <= c.window + 1) problems.push_back("t_train must exceed window + 1");
    if (c.T < c.window) problems.push_back("T must be at least the lag window");
    if (c.t_test != 0 && c.t_test <= c.T) problems.push_back("t_test must exceed T");
    if (c.n_ove < 1) problems.push_back("n_ove must be positive");
    if (c.window < 1) problems.push_back("window must be positive");
    if (c.ensemble_size < 1) problems.push_back("ensemble_size must be positive");
    if (!(c.wealth > 0.0) || !(c.risk_aversion > 0.0)) problems.push_back("wealth and risk_aversion must be positive");
    if (!(c.mu2 >= 0.0)) problems.push_back("mu2 must be nonnegative");
    if (c.kde_folds < 2) problems.push_back("kde_folds must be at least 2");
    if (c.bandwidths.empty()) problems.push_back("bandwidths must be non-empty");
    for (double b : c.bandwidths)
        if (!(b > 0.0)) {
            problems.push_back("bandwidths must be positive");
            break;
        }
    if (!problems.empty()) throw ConfigError(std::move(problems));
}

TrainedBundle train_models(const AggregatedSeries& agg, const RealDataConfig& config) {
    const int tau = agg.tau();
    const Index windows = config.t_train - config.T + 1;
    TrainedBundle bundle;
    bundle.ensembles.resize(static_cast<std::size_t>(tau));
    for (int i = 0; i < tau; ++i) {
        const auto& y = agg.series[static_cast<std::size_t>(i)];
        if (y.rows() < config.t_train) throw DataError("aggregated series shorter than the training horizon");
        Rng rng = Rng::substream(config.seed, "real-ensemble", static_cast<std::uint64_t>(i));
        bundle.ensembles[static_cast<std::size_t>(i)] =
            bootstrap_ensemble(SamplePath(y.topRows(config.t_train)), config.window, config.ensemble_size, rng);
    }

    const std::size_t jobs = static_cast<std::size_t>(tau) * static_cast<std::size_t>(windows);
    std::vector<std::optional<SymCommParams>> fits(jobs);
    parallel_for(jobs, config.workers, [&](std::size_t job) {
        const std::size_t i = job / static_cast<std::size_t>(windows);
        const auto k = static_cast<Index>(job % static_cast<std::size_t>(windows));
        MleConfig mc = config.mle;
        mc.seed = Rng::substream(config.seed, "support", i, static_cast<std::uint64_t>(k)).next_u64();
        try {
            fits[job] = mle(SamplePath(agg.series[i].middleRows(k, config.T)), mc).params;
        } catch (const Error&) {
        }
    });
    for (auto& f : fits) {
        if (f)
            bundle.support.push_back(std::move(*f));
        else
            ++bundle.failed_windows;
    }

    bundle.kde = gen_prior_kde(bundle.support, config.bandwidths, config.kde_folds);
    Rng draw = Rng::substream(config.seed, "real-aove-atoms");
    for (std::size_t idx : draw_with_replacement(bundle.kde.prior.weights(), config.n_ove, draw))
        bundle.aove_prior.add(*bundle.kde.prior.symcomm(idx), 1.0);
    bundle.aove_prior.normalize();
    return bundle;
}

PortfolioSpec estimate_spec(const DailyBarSeries& bars, const RealDataConfig& config) {
    const Index n = bars.assets();
    const Index periods = config.t_train;
    const Index last = static_cast<Index>(config.tau) * periods;
    if (bars.days() <= last) throw DataError("not enough daily rows to estimate returns");
    Matrix returns(periods, n);
    for (Index k = 1; k <= periods; ++k)
        for (Index j = 0; j < n; ++j)
            returns(k - 1, j) = bars.close(static_cast<Index>(config.tau) * k, j) /
                                    bars.close(static_cast<Index>(config.tau) * (k - 1), j) -
                                1.0;
    const Vector e = returns.colwise().mean().transpose();
    double delta2 = 0.0;
    for (Index j = 0; j < n; ++j) delta2 += (returns.col(j).array() - e(j)).square().sum() / static_cast<double>(periods - 1);
    delta2 /= static_cast<double>(n);
    if (!(delta2 > 0.0)) throw DataError("return variance is zero over the training period");

    Rng rng = Rng::substream(config.seed, "portfolio");
    Vector x0(n);
    for (Index j = 0; j < n; ++j) x0(j) = rng.uniform();
    return PortfolioSpec::from_constants(config.wealth, config.risk_aversion, delta2, 2.0 * config.mu2, e, x0);
}

RealDataReport rolling_evaluate(const AggregatedSeries& agg, const TrainedBundle& bundle, const PortfolioSpec& spec,
                                const RealDataConfig& config, const std::vector<Method>& methods) {
    const auto start = Clock::now();
    const int tau = agg.tau();
    const Index t_agg = agg.series.front().rows();
    const Index t_test = config.t_test > 0 ? config.t_test : t_agg - config.t_train - 1;
    if (config.t_train + t_test + 1 > t_agg) throw DataError("test region runs past the aggregated series");
    const Index n_ts = t_test - config.T;
    if (n_ts < 1) throw DataError("test region too short for a single evaluation step");

    const PreparedPrior prior(bundle.aove_prior);
    const std::size_t n_methods = methods.size();
    const auto steps = static_cast<std::size_t>(n_ts);

    struct StepResult {
        std::vector<OracleRecord> records;
        std::vector<TraceRow> trace;
        double oracle_cost = 0.0;
    };
    std::vector<StepResult> results(steps);

    parallel_for(steps, config.workers, [&](std::size_t l) {
        auto& res = results[l];
        std::vector<Matrix> inputs;
        Vector d2_saa = Vector::Zero(spec.dim());
        std::vector<Vector> targets;
        for (int i = 0; i < tau; ++i) {
            const Matrix& y = agg.series[static_cast<std::size_t>(i)];
            const Index base = config.t_train + static_cast<Index>(l);
            inputs.push_back(y.middleRows(base, config.T));
            targets.push_back(y.row(base + config.T).transpose());
            d2_saa += d2_diag(targets.back(), spec.mu2) / static_cast<double>(tau);
        }
        const Matrix d2 = d2_saa.asDiagonal();
        const Vector x_star = solve_quadratic(d2, spec);
        res.oracle_cost = cost_with_d2(x_star, d2, spec);

        for (std::size_t k = 0; k < n_methods; ++k) {
            OracleRecord rec;
            rec.method = methods[k];
            rec.oracle_index = l;
            rec.oracle_cost = res.oracle_cost;
            const auto t0 = Clock::now();
            double regret = 0.0, cost = 0.0, mse = 0.0;
            std::size_t mse_n = 0;
            bool ok = true;
            std::vector<TraceRow> rows;
            for (int i = 0; i < tau && ok; ++i) {
                const SamplePath y(inputs[static_cast<std::size_t>(i)]);
                const Vector& target = targets[static_cast<std::size_t>(i)];
                const auto& ensemble = bundle.ensembles[static_cast<std::size_t>(i)];
                try {
                    Vector x;
                    std::optional<Vector> forecast;
                    switch (methods[k]) {
                        case Method::AOVE: x = solve_aove(y, prior, spec).x; break;
                        case Method::ETO: {
                            MleConfig mc = config.mle;
                            mc.seed = Rng::substream(config.seed, "real-eto", l, static_cast<std::uint64_t>(i)).next_u64();
                            auto d = solve_eto(y, spec, mc);
                            x = d.x;
                            forecast = VarmaOneStepPredictor(d.fit.expanded()).predict(y.data());
                            break;
                        }
                        case Method::PTO: {
                            const EnsembleMeanPredictor pred(ensemble);
                            x = solve_pto(y, pred, spec).x;
                            forecast = pred.predict(y.data());
                            break;
                        }
                        case Method::FPTP:
                            x = solve_fptp(y, ensemble, spec).x;
                            forecast = ensemble.predict_mean(y.data());
                            break;
                        case Method::ORACLE: x = x_star; break;
                    }
                    const double c = cost_with_d2(x, d2, spec);
                    regret += relative_regret(x, x_star, d2, spec) / static_cast<double>(tau);
                    cost += c / static_cast<double>(tau);
                    rows.push_back({l, methods[k], i + 1, c});
                    if (forecast) {
                        mse += (target - *forecast).squaredNorm();
                        ++mse_n;
                    }
                } catch (const Error&) {
                    ok = false;
                }
            }
            rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
            if (ok) {
                rec.mean_regret = regret;
                rec.mean_cost = cost;
                rec.regrets.push_back(regret);
                rec.mse = mse_n > 0 ? mse / static_cast<double>(mse_n) : std::numeric_limits<double>::quiet_NaN();
                res.trace.insert(res.trace.end(), rows.begin(), rows.end());
            } else {
                rec.failures = 1;
                rec.mean_regret = std::numeric_limits<double>::quiet_NaN();
                rec.mse = std::numeric_limits<double>::quiet_NaN();
            }
            res.records.push_back(std::move(rec));
        }
    });

    RealDataReport out;
    out.spec = spec;
    out.support_size = bundle.support.size();
    out.failed_windows = bundle.failed_windows;
    out.bandwidth = bundle.kde.bandwidth;
    for (auto& r : results) {
        out.oracle_costs.push_back(r.oracle_cost);
        for (auto& rec : r.records) out.regret.records.push_back(std::move(rec));
        for (auto& t : r.trace) out.trace.push_back(t);
    }
    for (std::size_t k = 0; k < n_methods; ++k) {
        MethodSummary s{methods[k]};
        double rs = 0.0, ms = 0.0;
        std::size_t rn = 0, mn = 0;
        for (std::size_t l = 0; l < steps; ++l) {
            const auto& rec = out.regret.records[l * n_methods + k];
            s.seconds += rec.seconds;
            s.failures += rec.failures;
            if (std::isfinite(rec.mean_regret)) {
                rs += rec.mean_regret;
                ++rn;
            }
            if (std::isfinite(rec.mse)) {
                ms += rec.mse;
                ++mn;
            }
        }
        s.mean_regret = rn > 0 ? rs / static_cast<double>(rn) : std::numeric_limits<double>::quiet_NaN();
        s.mse = mn > 0 ? ms / static_cast<double>(mn) : std::numeric_limits<double>::quiet_NaN();
        out.regret.summary.push_back(s);
    }
    out.regret.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
}

RealDataReport run_real_data(const DailyBarSeries& bars, const RealDataConfig& config, const std::vector<Method>& methods) {
    check_config(config);
    const Index available = (bars.days() - config.tau + 1) / config.tau;
    const Index t_agg = config.t_test > 0 ? config.t_train + config.t_test + 1 : available;
    if (t_agg > available) {
        std::ostringstream os;
        os << "need " << required_days(config.tau, t_agg) << " aligned days, have " << bars.days();
        throw DataError(os.str());
    }
    const auto agg = aggregate_demeaned(bars.dollar_volume(), config.tau, t_agg, config.t_train);
    const auto spec = estimate_spec(bars, config);
    const auto bundle = train_models(agg, config);
    return rolling_evaluate(agg, bundle, spec, config, methods);
}

void write_trace_table(const RealDataReport& report, std::ostream& out) {
    out << "step,method,shift,cost\n";
    for (const auto& r : report.trace)
        out << r.step + 1 << ',' << method_label(r.method) << ',' << r.shift << ',' << std::setprecision(12) << r.cost
            << '\n';
}

}  // namespace aove
