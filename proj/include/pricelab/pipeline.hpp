#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "pricelab/aggregation.hpp"
#include "pricelab/bilateral.hpp"
#include "pricelab/error.hpp"
#include "pricelab/extension.hpp"
#include "pricelab/filtering.hpp"
#include "pricelab/ingest.hpp"
#include "pricelab/matching.hpp"
#include "pricelab/multilateral.hpp"
#include "pricelab/panel.hpp"
#include "pricelab/series.hpp"

namespace pricelab {

enum class EmitFormat { csv, json };

struct RunConfig {
    std::vector<std::string> inputs;
    std::optional<std::string> match_table; // imported instead of matching
    std::optional<Month> base;              // defaults to the first panel month
    std::optional<Month> end;               // defaults to the last panel month
    Formula method = Formula::geks;
    bool chained = false;
    int window = 13;
    SpliceMethod splice = SpliceMethod::none;
    std::vector<FilterSpec> filters;
    Partition partition = Partition::none;
    AggFormula agg_formula = AggFormula::laspeyres;
    std::string output = "out";
    EmitFormat emit = EmitFormat::csv;
    bool benchmark = false;
    bool allow_missing_cells = false;
    double match_threshold = 0.90;
    bool limited_blocking = false;
    unsigned threads = 0; // 0: hardware concurrency; never echoed, it cannot change output
    GKOptions gk;

    void validate() const {
        if (inputs.empty()) throw UsageError("at least one input file is required");
        if (splice != SpliceMethod::none && !is_multilateral(method))
            throw UsageError("--splice " + to_string(splice) + " requires a multilateral method, got " + to_string(method));
        if (chained && !is_bilateral(method))
            throw UsageError("--chained requires a bilateral method, got " + to_string(method));
        if (window < 2) throw UsageError("--window must be at least 2");
        if (!(match_threshold >= 0.0 && match_threshold <= 1.0)) throw UsageError("--match-threshold must lie in [0, 1]");
        if (base && end && *end < *base) throw UsageError("--end " + end->str() + " precedes --base " + base->str());
    }

    std::string method_label() const {
        std::string s = to_string(method);
        if (chained) s += "-chained";
        if (is_multilateral(method)) {
            s += "/w" + std::to_string(window);
            if (splice != SpliceMethod::none) s += "/" + to_string(splice);
        }
        return s;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["inputs"] = inputs;
        j["match_table"] = match_table ? nlohmann::json(*match_table) : nlohmann::json();
        j["base"] = base ? nlohmann::json(base->str()) : nlohmann::json();
        j["end"] = end ? nlohmann::json(end->str()) : nlohmann::json();
        j["method"] = to_string(method);
        j["chained"] = chained;
        j["window"] = window;
        j["splice"] = to_string(splice);
        j["filters"] = nlohmann::json::array();
        for (const auto& f : filters) j["filters"].push_back(f.str());
        j["aggregate"] = to_string(partition);
        j["agg_formula"] = to_string(agg_formula);
        j["emit"] = emit == EmitFormat::csv ? "csv" : "json";
        j["benchmark"] = benchmark;
        j["allow_missing_cells"] = allow_missing_cells;
        j["match_threshold"] = match_threshold;
        j["limited_blocking"] = limited_blocking;
        return j;
    }
};

struct SeriesRow {
    Month month;
    double value;
    std::string method;
    std::string cell; // "*" for the aggregate
};

struct RunCounts {
    std::size_t records = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t observations = 0;
    std::size_t products = 0;
    std::size_t matched = 0;
    std::size_t filtered = 0;
    std::size_t excluded_cells = 0;
    std::size_t cells = 0;
    std::vector<std::string> failed_cells;
};

struct RunResult {
    std::vector<SeriesRow> rows;
    std::vector<Reject> rejects;
    RunCounts counts;
    MatchTable match_table;
    nlohmann::json manifest;
};

namespace detail {

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

// Line numbers stay per file; with several inputs the reason names the file.
inline ParsedTransactions load_inputs(const std::vector<std::string>& paths) {
    ParsedTransactions all;
    for (const auto& path : paths) {
        auto in = open_input(path);
        ParsedTransactions part;
        try {
            part = parse_transactions(in);
        } catch (const DataError& e) {
            throw ConfigError(path + ": " + e.what());
        }
        for (auto& r : part.rejects) {
            if (paths.size() > 1) r.reason = path + ": " + r.reason;
            all.rejects.push_back(std::move(r));
        }
        for (auto& r : part.records) all.records.push_back(std::move(r));
    }
    return all;
}

inline std::vector<Observation> observations_of(const std::vector<TransactionRecord>& records) {
    std::map<ObservationKey, Observation> unique;
    for (const auto& r : records) {
        auto obs = observation_of(r);
        unique.try_emplace(key_of(obs), std::move(obs));
    }
    std::vector<Observation> out;
    out.reserve(unique.size());
    for (auto& [k, o] : unique) out.push_back(std::move(o));
    return out;
}

struct CellPlan {
    std::string key;
    CellSelector selector;
};

inline std::vector<CellPlan> plan_cells(const ProductPanel& panel, Partition partition) {
    std::vector<CellPlan> out;
    switch (partition) {
    case Partition::none: out.push_back({"ALL", {}}); break;
    case Partition::subgroup:
        for (const auto& g : panel.subgroups()) out.push_back({"subgroup=" + g, {std::nullopt, g}});
        break;
    case Partition::outlet:
        for (const auto& o : panel.outlets()) out.push_back({"outlet=" + o, {o, std::nullopt}});
        break;
    case Partition::both:
        for (const auto& o : panel.outlets())
            for (const auto& g : panel.subgroups()) out.push_back({"outlet=" + o + ";subgroup=" + g, {o, g}});
        break;
    }
    std::sort(out.begin(), out.end(), [](const CellPlan& a, const CellPlan& b) { return a.key < b.key; });
    return out;
}

// Runs work(i) for i in [0, n) on up to `threads` workers. Results are
// written by index, so scheduling never affects what is produced.
template <class Work>
void parallel_for(std::size_t n, unsigned threads, Work&& work) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) work(i);
        });
    for (auto& t : pool) t.join();
}

} // namespace detail

// Series for one pooled cell over [base, end]. splice none on a
// multilateral method means one window spanning the whole range.
inline IndexSeries cell_series(const ItemPanel& panel, const RunConfig& config, Month base, Month end) {
    if (is_bilateral(config.method)) {
        return config.chained ? chained_series(config.method, panel, base, end, config.filters)
                              : direct_series(config.method, panel, base, end, config.filters);
    }
    MultilateralOptions options{config.method, config.filters, config.gk};
    if (config.splice == SpliceMethod::none)
        return detail::window_levels(panel, base, end, options).series(base);
    return extend_series(panel, config.splice, config.window, options, base, end);
}

// Products removed by the filters, summed over adjacent month pairs.
inline std::size_t filter_removals(const ItemPanel& panel, const std::vector<FilterSpec>& filters, Month base, Month end) {
    if (filters.empty()) return 0;
    std::size_t removed = 0;
    for (Month m = base; m < end; ++m)
        removed += matched_items(panel, m, m + 1).size() - filtered_matched_items(panel, m, m + 1, filters).size();
    return removed;
}

inline RunResult run_pipeline(const RunConfig& config) {
    config.validate();
    RunResult result;

    auto parsed = detail::load_inputs(config.inputs);
    if (config.match_table) {
        auto in = detail::open_input(*config.match_table);
        result.match_table = MatchTable::read_csv(in);
    } else {
        auto observations = detail::observations_of(parsed.records);
        MatchOptions options;
        options.threshold = config.match_threshold;
        options.limited_blocking = config.limited_blocking;
        result.match_table = match_products(observations, options);
    }
    auto build = build_panel(parsed.records, result.match_table);

    result.rejects = parsed.rejects;
    result.rejects.insert(result.rejects.end(), build.rejects.begin(), build.rejects.end());
    auto& counts = result.counts;
    counts.accepted = build.accepted_records;
    counts.rejected = result.rejects.size();
    counts.records = counts.accepted + counts.rejected;
    counts.observations = result.match_table.size();
    counts.products = build.panel.products().size();
    counts.matched = result.match_table.linked_count();
    counts.excluded_cells = build.excluded_cells;

    const auto& months = build.panel.months();
    const Month base = config.base.value_or(months.front());
    const Month end = config.end.value_or(months.back());
    if (base < months.front() || end > months.back())
        throw DataError("requested range " + base.str() + ".." + end.str() + " outside panel " + months.front().str() +
                        ".." + months.back().str());

    auto plans = detail::plan_cells(build.panel, config.partition);
    counts.cells = plans.size();
    struct CellOutcome {
        std::optional<CellData> data;
        std::size_t removed = 0;
        std::exception_ptr error;
    };
    std::vector<CellOutcome> outcomes(plans.size());
    detail::parallel_for(plans.size(), config.threads, [&](std::size_t k) {
        try {
            ItemPanel pooled = build.panel.pool(plans[k].selector).slice(base, end);
            CellData data{cell_series(pooled, config, base, end), pooled.total_expenditure(base), {}};
            for (Month m = base; m <= end; ++m) data.expenditure[m] = pooled.total_expenditure(m);
            outcomes[k].removed = filter_removals(pooled, config.filters, base, end);
            outcomes[k].data = std::move(data);
        } catch (...) {
            outcomes[k].error = std::current_exception();
        }
    });

    CellIndexSet set{config.partition, {}};
    const std::string label = config.method_label();
    for (std::size_t k = 0; k < plans.size(); ++k) {
        if (outcomes[k].error) {
            if (!config.allow_missing_cells) {
                try {
                    std::rethrow_exception(outcomes[k].error);
                } catch (const Error& e) {
                    auto prefix = "cell " + plans[k].key + ": ";
                    if (dynamic_cast<const UsageError*>(&e)) throw UsageError(prefix + e.what());
                    if (dynamic_cast<const ConvergenceError*>(&e))
                        throw ConvergenceError(prefix + e.what(), static_cast<const ConvergenceError&>(e).residual());
                    if (dynamic_cast<const NumericalError*>(&e)) throw NumericalError(prefix + e.what());
                    throw DataError(prefix + e.what());
                }
            }
            counts.failed_cells.push_back(plans[k].key);
            continue;
        }
        counts.filtered += outcomes[k].removed;
        set.cells.emplace(plans[k].key, std::move(*outcomes[k].data));
    }
    if (set.cells.empty()) throw DataError("every cell failed; nothing to aggregate");

    if (config.partition != Partition::none) {
        auto total = aggregate_series(set, config.agg_formula, base, end, config.allow_missing_cells);
        for (const auto& p : total.points())
            result.rows.push_back({p.month, p.value, label + ";agg=" + to_string(config.agg_formula), "*"});
    }
    for (const auto& [key, cell] : set.cells)
        for (const auto& p : cell.series.points()) result.rows.push_back({p.month, p.value, label, key});

    nlohmann::json manifest;
    manifest["config"] = config.to_json();
    manifest["range"] = {{"base", base.str()}, {"end", end.str()}};
    manifest["filter_order"] = nlohmann::json::array();
    for (const auto& f : config.filters) manifest["filter_order"].push_back(f.str());
    manifest["counts"] = {{"records", counts.records},
                          {"accepted", counts.accepted},
                          {"rejected", counts.rejected},
                          {"observations", counts.observations},
                          {"products", counts.products},
                          {"matched", counts.matched},
                          {"filtered", counts.filtered},
                          {"excluded_cells", counts.excluded_cells},
                          {"cells", counts.cells},
                          {"failed_cells", counts.failed_cells}};
    result.manifest = std::move(manifest);
    return result;
}

inline void write_series_csv(std::ostream& out, const std::vector<SeriesRow>& rows) {
    out << "month,value,method,cell\n";
    for (const auto& r : rows)
        csv::write_row(out, {r.month.str(), format_double(r.value), r.method, r.cell});
}

inline nlohmann::json series_json(const std::vector<SeriesRow>& rows) {
    auto out = nlohmann::json::array();
    for (const auto& r : rows)
        out.push_back({{"month", r.month.str()}, {"value", r.value}, {"method", r.method}, {"cell", r.cell}});
    return out;
}

// Writes series.csv (or series.json), manifest.json and rejects.csv under dir.
inline void write_run_outputs(const RunResult& result, const RunConfig& config) {
    const std::filesystem::path dir(config.output);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
    if (config.emit == EmitFormat::csv) {
        auto out = detail::open_output(dir / "series.csv");
        write_series_csv(out, result.rows);
    } else {
        auto out = detail::open_output(dir / "series.json");
        out << series_json(result.rows).dump(2) << '\n';
    }
    {
        auto out = detail::open_output(dir / "manifest.json");
        out << result.manifest.dump(2) << '\n';
    }
    auto out = detail::open_output(dir / "rejects.csv");
    write_rejects(out, result.rejects);
}

struct BenchTiming {
    std::string name;
    std::vector<double> seconds;

    double median() const {
        auto s = seconds;
        std::sort(s.begin(), s.end());
        const auto n = s.size();
        if (n == 0) return 0.0;
        return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
    }
};

// Wall-clock medians of chain Jevons, chain Fisher and one GEKS window over
// the whole panel, each run `repetitions` times on the same ItemPanel.
inline nlohmann::json benchmark(const ItemPanel& panel, int repetitions, const std::vector<FilterSpec>& filters = {}) {
    if (repetitions < 1) throw UsageError("--reps must be at least 1");
    if (panel.month_count() < 2) throw DataError("benchmark needs at least two months");
    const Month base = panel.first_month(), end = panel.last_month();
    double sink = 0.0;
    auto time_it = [&](const std::string& name, auto&& body) {
        BenchTiming t{name, {}};
        for (int r = 0; r < repetitions; ++r) {
            auto start = std::chrono::steady_clock::now();
            sink += body();
            std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
            t.seconds.push_back(d.count());
        }
        return t;
    };
    std::vector<BenchTiming> timings;
    timings.push_back(time_it("chain_jevons", [&] { return chained_series(Formula::jevons, panel, base, end, filters).points().back().value; }));
    timings.push_back(time_it("chain_fisher", [&] { return chained_series(Formula::fisher, panel, base, end, filters).points().back().value; }));
    timings.push_back(time_it("geks", [&] {
        return geks_type_levels(Formula::fisher, panel, WindowSpec{base, panel.month_count(), std::nullopt}, filters).ratio(base, end);
    }));

    nlohmann::json report;
    report["repetitions"] = repetitions;
    report["products"] = panel.item_count();
    report["months"] = panel.month_count();
    for (const auto& t : timings) report["methods"][t.name] = {{"median_seconds", t.median()}, {"samples_seconds", t.seconds}};
    auto ratio = [&](std::size_t a, std::size_t b) {
        return timings[b].median() > 0.0 ? timings[a].median() / timings[b].median() : 0.0;
    };
    report["ratios"] = {{"geks_over_chain_jevons", ratio(2, 0)},
                        {"chain_fisher_over_chain_jevons", ratio(1, 0)},
                        {"geks_over_chain_fisher", ratio(2, 1)}};
    report["checksum"] = sink; // keeps the timed work observable
    return report;
}

// Match table from transaction files, or a re-emitted imported one.
inline MatchTable match_inputs(const std::vector<std::string>& inputs, const MatchOptions& options) {
    auto parsed = detail::load_inputs(inputs);
    auto observations = detail::observations_of(parsed.records);
    return match_products(observations, options);
}

} // namespace pricelab
