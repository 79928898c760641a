#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "pricelab/error.hpp"
#include "pricelab/multilateral.hpp"
#include "pricelab/panel.hpp"
#include "pricelab/series.hpp"

namespace pricelab {

enum class SpliceMethod { none, movement, window, half, mean, fbew, fbmw };

inline constexpr SpliceMethod extension_methods[] = {SpliceMethod::movement, SpliceMethod::window, SpliceMethod::half,
                                                     SpliceMethod::mean,     SpliceMethod::fbew,   SpliceMethod::fbmw};

inline std::string to_string(SpliceMethod m) {
    switch (m) {
    case SpliceMethod::none: return "none";
    case SpliceMethod::movement: return "movement";
    case SpliceMethod::window: return "window";
    case SpliceMethod::half: return "half";
    case SpliceMethod::mean: return "mean";
    case SpliceMethod::fbew: return "fbew";
    case SpliceMethod::fbmw: return "fbmw";
    }
    return {};
}

inline SpliceMethod parse_splice(std::string_view s) {
    for (auto m : {SpliceMethod::none, SpliceMethod::movement, SpliceMethod::window, SpliceMethod::half,
                   SpliceMethod::mean, SpliceMethod::fbew, SpliceMethod::fbmw})
        if (to_string(m) == s) return m;
    throw UsageError("unknown splice method '" + std::string(s) + "'");
}

// Link month offset for the half splice: (T+1)/2 for odd T, T/2 for even T.
inline int half_splice_offset(int T) { return T % 2 == 1 ? (T + 1) / 2 : T / 2; }

namespace detail {

template <class F>
auto with_window_context(Month from, Month to, F&& compute) {
    const std::string where = "window " + from.str() + ".." + to.str() + ": ";
    try {
        return compute();
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(where + e.what(), e.residual());
    } catch (const UndefinedIndexError& e) {
        throw UndefinedIndexError(where + e.what());
    } catch (const UsageError&) {
        throw;
    } catch (const DataError& e) {
        throw DataError(where + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(where + e.what());
    }
}

inline WindowLevels window_levels(const ItemPanel& panel, Month from, Month to, const MultilateralOptions& options) {
    return with_window_context(from, to, [&] {
        return multilateral_levels(panel, WindowSpec{from, (to - from) + 1, std::nullopt}, options);
    });
}

} // namespace detail

// Fixed-base expanding window: P(base, t) on the window [base, t], base
// defaulting to the previous December.
inline double fbew(const ItemPanel& panel, const MultilateralOptions& options, Month t,
                   std::optional<Month> base_december = std::nullopt) {
    const Month base = base_december.value_or(t.previous_december());
    if (t == base) return 1.0;
    if (t < base) throw UsageError("FBEW month " + t.str() + " precedes base " + base.str());
    if (!panel.month_present(base)) throw DataError("FBEW base December " + base.str() + " missing from panel");
    return detail::window_levels(panel, base, t, options).ratio(base, t);
}

// Fixed-base moving window: P(base, t) inside [t - T, t], base defaulting to
// the previous December, which must fall inside the window.
inline double fbmw(const ItemPanel& panel, const MultilateralOptions& options, Month t, int window_length = 13,
                   std::optional<Month> base_december = std::nullopt) {
    if (window_length < 2) throw UsageError("window length must be at least 2");
    const Month base = base_december.value_or(t.previous_december());
    const Month start = t - (window_length - 1);
    if (base < start) throw UsageError("FBMW window " + start.str() + ".." + t.str() + " does not contain " + base.str());
    for (Month m = start; m <= t; ++m)
        if (!panel.month_present(m)) throw DataError("FBMW needs back data: first missing month " + m.str());
    return detail::window_levels(panel, start, t, options).ratio(base, t);
}

// Extended series plus the cached last window, enough to resume month by month.
struct SpliceState {
    SpliceMethod method = SpliceMethod::movement;
    int window_length = 13;
    MultilateralOptions options;
    IndexSeries history;
    WindowLevels last_window;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["method"] = to_string(method);
        j["window_length"] = window_length;
        j["multilateral"] = to_string(options.method);
        j["filters"] = nlohmann::json::array();
        for (const auto& f : options.filters) j["filters"].push_back(f.str());
        j["gk_tolerance"] = options.gk.tolerance;
        j["gk_max_iter"] = options.gk.max_iter;
        j["history"]["base"] = history.base().str();
        j["history"]["points"] = nlohmann::json::array();
        for (const auto& p : history.points()) j["history"]["points"].push_back({p.month.str(), p.value});
        j["last_window"]["start"] = last_window.start().str();
        j["last_window"]["log_levels"] = last_window.log_levels();
        return j;
    }

    static SpliceState from_json(const nlohmann::json& j) {
        auto month = [](const nlohmann::json& v) {
            auto m = Month::parse(v.get<std::string>());
            if (!m) throw DataError("bad month in splice state: " + v.dump());
            return *m;
        };
        try {
            SpliceState s;
            s.method = parse_splice(j.at("method").get<std::string>());
            s.window_length = j.at("window_length").get<int>();
            s.options.method = parse_formula(j.at("multilateral").get<std::string>());
            for (const auto& f : j.at("filters")) s.options.filters.push_back(FilterSpec::parse(f.get<std::string>()));
            s.options.gk.tolerance = j.value("gk_tolerance", 1e-10);
            s.options.gk.max_iter = j.value("gk_max_iter", 1000);
            s.history = IndexSeries(month(j.at("history").at("base")));
            for (const auto& p : j.at("history").at("points")) s.history.append(month(p.at(0)), p.at(1).get<double>());
            s.last_window = WindowLevels(month(j.at("last_window").at("start")),
                                         j.at("last_window").at("log_levels").get<std::vector<double>>());
            return s;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("malformed splice state: ") + e.what());
        }
    }
};

// History over the first window is the full-window series based at its
// first month. A window shorter than window_length is used when the panel
// range is shorter.
inline SpliceState splice_init(const ItemPanel& panel, SpliceMethod method, int window_length,
                               const MultilateralOptions& options, Month start, std::optional<Month> end = std::nullopt) {
    if (method == SpliceMethod::none) throw UsageError("splice_init needs an extension method");
    if (window_length < 2) throw UsageError("window length must be at least 2");
    if (!is_multilateral(options.method)) throw UsageError("splicing requires a multilateral method");
    Month last = start + (window_length - 1);
    if (end && *end < last) last = *end;
    SpliceState state;
    state.method = method;
    state.window_length = window_length;
    state.options = options;
    state.last_window = detail::window_levels(panel, start, last, options);
    state.history = state.last_window.series(start, {to_string(options.method), window_length, to_string(method),
                                                     {}, "none"});
    for (const auto& f : options.filters) state.history.metadata().filters.push_back(f.str());
    return state;
}

// Appends P(0, new_month) by the state's method.
inline void splice_step(SpliceState& state, const ItemPanel& panel, Month new_month) {
    if (state.history.empty()) throw UsageError("splice state has no history");
    const Month prev = state.history.points().back().month;
    if (new_month != prev + 1) throw UsageError("splice step must advance one month past " + prev.str());
    const int T = state.window_length - 1;
    const double last_value = state.history.points().back().value;
    double value = 0.0;

    switch (state.method) {
    case SpliceMethod::movement:
    case SpliceMethod::window:
    case SpliceMethod::half:
    case SpliceMethod::mean: {
        if (state.last_window.length() != state.window_length || state.last_window.end() != prev)
            throw DataError("splice state window does not end at " + prev.str());
        const WindowLevels& old_w = state.last_window;
        WindowLevels new_w = detail::window_levels(panel, new_month - T, new_month, state.options);
        // log of P_new(t - k, t) / P_old(t - k, t - 1)
        auto link = [&](int k) {
            return (new_w.log_level(new_month) - new_w.log_level(new_month - k)) -
                   (old_w.log_level(prev) - old_w.log_level(new_month - k));
        };
        double log_step = 0.0;
        if (state.method == SpliceMethod::movement) {
            log_step = new_w.log_level(new_month) - new_w.log_level(prev);
        } else if (state.method == SpliceMethod::window) {
            log_step = link(T);
        } else if (state.method == SpliceMethod::half) {
            log_step = link(half_splice_offset(T));
        } else {
            for (int k = 1; k <= T; ++k) log_step += link(k);
            log_step /= static_cast<double>(T);
        }
        value = std::exp(std::log(last_value) + log_step);
        state.last_window = std::move(new_w);
        break;
    }
    case SpliceMethod::fbew:
    case SpliceMethod::fbmw: {
        const Month base = new_month.previous_december();
        auto base_value = state.history.at(base);
        if (!base_value) throw DataError("fixed-base extension needs history at " + base.str());
        const Month start = state.method == SpliceMethod::fbew ? base : new_month - T;
        if (base < start)
            throw UsageError("FBMW window " + start.str() + ".." + new_month.str() + " does not contain " + base.str());
        WindowLevels w = detail::window_levels(panel, start, new_month, state.options);
        value = *base_value * w.ratio(base, new_month);
        state.last_window = std::move(w);
        break;
    }
    case SpliceMethod::none: throw UsageError("splice_step needs an extension method");
    }
    state.history.append(new_month, value);
}

inline IndexSeries extend_series(const ItemPanel& panel, SpliceMethod method, int window_length,
                                 const MultilateralOptions& options, Month start, Month end) {
    auto state = splice_init(panel, method, window_length, options, start, end);
    for (Month m = state.history.points().back().month + 1; m <= end; ++m) splice_step(state, panel, m);
    return state.history;
}

} // namespace pricelab
