#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pricelab/bilateral.hpp"
#include "pricelab/error.hpp"
#include "pricelab/filtering.hpp"
#include "pricelab/panel.hpp"
#include "pricelab/series.hpp"

namespace pricelab {

struct WindowSpec {
    Month start;
    int length = 13; // T + 1
    std::optional<Month> base;

    Month end() const { return start + (length - 1); }
    Month base_month() const { return base.value_or(start); }
    bool contains(Month m) const { return m >= start && m <= end(); }

    void validate() const {
        if (length < 2) throw UsageError("window length must be at least 2");
        if (base && !contains(*base)) throw UsageError("window base " + base->str() + " outside window");
    }
};

// Transitive index over one window, stored as log price levels. Any pair of
// months inside the window compares as exp(level[b] - level[a]).
class WindowLevels {
public:
    WindowLevels() = default;
    WindowLevels(Month start, std::vector<double> log_levels) : start_(start), log_levels_(std::move(log_levels)) {}

    Month start() const { return start_; }
    Month end() const { return start_ + (length() - 1); }
    int length() const { return static_cast<int>(log_levels_.size()); }
    bool contains(Month m) const { return m >= start_ && m <= end(); }
    const std::vector<double>& log_levels() const { return log_levels_; }

    double log_level(Month m) const {
        if (!contains(m)) throw DataError("month " + m.str() + " outside window " + start_.str() + ".." + end().str());
        return log_levels_[static_cast<std::size_t>(m - start_)];
    }

    double ratio(Month from, Month to) const {
        if (from == to) return 1.0;
        return std::exp(log_level(to) - log_level(from));
    }

    IndexSeries series(Month base, SeriesMetadata meta = {}) const {
        IndexSeries out(base, std::move(meta));
        for (Month m = start_; m <= end(); ++m) out.append(m, ratio(base, m));
        return out;
    }

private:
    Month start_;
    std::vector<double> log_levels_;
};

namespace detail {

inline void require_window_months(const ItemPanel& panel, const WindowSpec& window) {
    window.validate();
    for (Month m = window.start; m <= window.end(); ++m)
        if (!panel.month_present(m)) throw DataError("month " + m.str() + " missing from panel for window starting " + window.start.str());
}

// (item, month) observations entering GK/TPD: all observations without
// filters, else those surviving the filters in at least one pair of months.
inline std::vector<std::vector<char>> window_mask(const ItemPanel& panel, const WindowSpec& window,
                                                  std::span<const FilterSpec> filters) {
    const auto n = static_cast<std::size_t>(window.length);
    std::vector<std::vector<char>> keep(panel.item_count(), std::vector<char>(n, 0));
    for (std::size_t i = 0; i < panel.item_count(); ++i)
        for (std::size_t z = 0; z < n; ++z)
            keep[i][z] = filters.empty() && panel.observed(i, window.start + static_cast<int>(z));
    if (filters.empty()) return keep;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            Month ma = window.start + static_cast<int>(a), mb = window.start + static_cast<int>(b);
            for (std::size_t i : filtered_matched_items(panel, ma, mb, filters)) keep[i][a] = keep[i][b] = 1;
        }
    return keep;
}

} // namespace detail

// GEKS-type levels: level(t) = mean over tau of ln P(tau, t) for a bilateral
// link formula. Every off-diagonal link is evaluated on its own filtered
// matched set; an empty one is an error.
inline WindowLevels geks_type_levels(Formula link, const ItemPanel& panel, const WindowSpec& window,
                                     std::span<const FilterSpec> filters = {}) {
    detail::require_window_months(panel, window);
    const auto n = static_cast<std::size_t>(window.length);
    std::vector<double> levels(n, 0.0);
    std::vector<std::vector<double>> log_link(n, std::vector<double>(n, 0.0));
    for (std::size_t tau = 0; tau < n; ++tau)
        for (std::size_t t = 0; t < n; ++t) {
            if (tau == t) continue;
            Month a = window.start + static_cast<int>(tau), b = window.start + static_cast<int>(t);
            auto pair = make_matched_pair(panel, a, b, filters);
            if (pair.empty()) throw UndefinedIndexError("missing link " + a.str() + " -> " + b.str() + ": empty matched set");
            log_link[tau][t] = std::log(bilateral_index(link, pair));
        }
    for (std::size_t t = 0; t < n; ++t) {
        double sum = 0.0;
        for (std::size_t tau = 0; tau < n; ++tau) sum += log_link[tau][t];
        levels[t] = sum / static_cast<double>(n);
    }
    return {window.start, std::move(levels)};
}

inline IndexSeries geks(const ItemPanel& panel, const WindowSpec& window, std::span<const FilterSpec> filters = {}) {
    return geks_type_levels(Formula::fisher, panel, window, filters)
        .series(window.base_month(), {"geks", window.length, "none", {}, "none"});
}

inline IndexSeries ccdi(const ItemPanel& panel, const WindowSpec& window, std::span<const FilterSpec> filters = {}) {
    return geks_type_levels(Formula::tornqvist, panel, window, filters)
        .series(window.base_month(), {"ccdi", window.length, "none", {}, "none"});
}

struct GKSolution {
    std::map<std::string, double> v; // quality-adjustment factor per product
    WindowLevels levels;
    IndexSeries series;
    int iterations = 0;
    double residual = 0.0; // max relative change of v at termination
};

struct GKOptions {
    double tolerance = 1e-10;
    int max_iter = 1000;
};

// Fixed point of the QU/Geary-Khamis system. P(0,z) is the turnover index
// over the quantity index in v-units, v_i is the phi-weighted mean of
// deflated prices p_i^z / P(0,z). Starts from v = 1.
inline GKSolution gk_solve(const ItemPanel& panel, const WindowSpec& window, GKOptions options = {},
                           std::span<const FilterSpec> filters = {}) {
    if (!(options.tolerance > 0.0)) throw UsageError("GK tolerance must be positive");
    detail::require_window_months(panel, window);
    const auto n_months = static_cast<std::size_t>(window.length);
    auto keep = detail::window_mask(panel, window, filters);

    std::vector<std::size_t> universe;
    for (std::size_t i = 0; i < panel.item_count(); ++i)
        if (std::any_of(keep[i].begin(), keep[i].end(), [](char c) { return c != 0; })) universe.push_back(i);
    auto month_at = [&](std::size_t z) { return window.start + static_cast<int>(z); };

    std::vector<double> turnover(n_months, 0.0);
    std::vector<double> quantity_total(universe.size(), 0.0);
    for (std::size_t k = 0; k < universe.size(); ++k)
        for (std::size_t z = 0; z < n_months; ++z)
            if (keep[universe[k]][z]) {
                turnover[z] += panel.expenditure(universe[k], month_at(z));
                quantity_total[k] += panel.quantity(universe[k], month_at(z));
            }
    for (std::size_t z = 0; z < n_months; ++z)
        if (!(turnover[z] > 0.0)) throw UndefinedIndexError("no observations left in " + month_at(z).str() + " for GK");

    std::vector<double> v(universe.size(), 1.0);
    std::vector<double> log_level(n_months, 0.0);
    auto compute_levels = [&] {
        for (std::size_t z = 0; z < n_months; ++z) {
            double quantity_units = 0.0;
            for (std::size_t k = 0; k < universe.size(); ++k)
                if (keep[universe[k]][z]) quantity_units += v[k] * panel.quantity(universe[k], month_at(z));
            log_level[z] = std::log(turnover[z] / quantity_units);
        }
    };

    GKSolution out;
    double residual = 0.0;
    int iter = 0;
    for (; iter < options.max_iter;) {
        compute_levels();
        ++iter;
        residual = 0.0;
        for (std::size_t k = 0; k < universe.size(); ++k) {
            double sum = 0.0;
            for (std::size_t z = 0; z < n_months; ++z) {
                if (!keep[universe[k]][z]) continue;
                const double phi = panel.quantity(universe[k], month_at(z)) / quantity_total[k];
                const double p_index = std::exp(log_level[z] - log_level[0]);
                sum += phi * panel.price(universe[k], month_at(z)) / p_index;
            }
            residual = std::max(residual, std::abs(sum - v[k]) / v[k]);
            v[k] = sum;
        }
        if (residual < options.tolerance) break;
    }
    if (!(residual < options.tolerance))
        throw ConvergenceError("GK iteration did not converge in " + std::to_string(options.max_iter) +
                                   " iterations (residual " + format_double(residual) + ")",
                               residual);
    compute_levels();
    for (std::size_t k = 0; k < universe.size(); ++k) out.v.emplace(panel.item(universe[k]), v[k]);
    out.levels = WindowLevels(window.start, log_level);
    out.series = out.levels.series(window.base_month(), {"gk", window.length, "none", {}, "none"});
    out.iterations = iter;
    out.residual = residual;
    return out;
}

struct TPDSolution {
    std::map<Month, double> delta;          // window start pinned to 0
    std::map<std::string, double> gamma;    // reference product pinned to 0
    double intercept = 0.0;
    std::string reference;
    WindowLevels levels;
    IndexSeries series;
};

// Weighted time-product-dummy regression of log prices, weights = monthly
// expenditure shares. Product effects are swept out by a weighted
// within-transformation; the remaining time-dummy problem is solved by a
// column-pivoted Householder QR, which also detects rank deficiency. The
// index follows the share-weighted quality-adjusted price levels with
// v_i = exp(gamma_i).
inline TPDSolution tpd(const ItemPanel& panel, const WindowSpec& window, std::span<const FilterSpec> filters = {},
                       std::optional<std::string> reference = std::nullopt) {
    detail::require_window_months(panel, window);
    const auto n_months = static_cast<std::size_t>(window.length);
    const std::size_t n_time = n_months - 1;
    auto keep = detail::window_mask(panel, window, filters);
    auto month_at = [&](std::size_t z) { return window.start + static_cast<int>(z); };

    std::vector<std::size_t> universe;
    for (std::size_t i = 0; i < panel.item_count(); ++i)
        if (std::any_of(keep[i].begin(), keep[i].end(), [](char c) { return c != 0; })) universe.push_back(i);
    if (universe.empty()) throw UndefinedIndexError("TPD window has no observations");

    std::vector<double> month_spend(n_months, 0.0);
    for (std::size_t i : universe)
        for (std::size_t z = 0; z < n_months; ++z)
            if (keep[i][z]) month_spend[z] += panel.expenditure(i, month_at(z));
    for (std::size_t z = 0; z < n_months; ++z)
        if (!(month_spend[z] > 0.0)) throw UndefinedIndexError("no observations left in " + month_at(z).str() + " for TPD");
    auto share = [&](std::size_t i, std::size_t z) { return panel.expenditure(i, month_at(z)) / month_spend[z]; };

    std::size_t rows = 0;
    for (std::size_t i : universe)
        for (std::size_t z = 0; z < n_months; ++z) rows += keep[i][z] ? 1 : 0;

    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n_time));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
    std::vector<double> y_bar(universe.size());
    std::vector<std::vector<double>> d_bar(universe.size(), std::vector<double>(n_months, 0.0));
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < universe.size(); ++k) {
        const std::size_t i = universe[k];
        double w_sum = 0.0, wy = 0.0;
        for (std::size_t z = 0; z < n_months; ++z)
            if (keep[i][z]) {
                w_sum += share(i, z);
                wy += share(i, z) * std::log(panel.price(i, month_at(z)));
            }
        y_bar[k] = wy / w_sum;
        for (std::size_t z = 0; z < n_months; ++z)
            if (keep[i][z]) d_bar[k][z] = share(i, z) / w_sum;
        for (std::size_t z = 0; z < n_months; ++z) {
            if (!keep[i][z]) continue;
            const double root_w = std::sqrt(share(i, z));
            y(row) = root_w * (std::log(panel.price(i, month_at(z))) - y_bar[k]);
            for (std::size_t c = 0; c < n_time; ++c) {
                const double indicator = (z == c + 1) ? 1.0 : 0.0;
                X(row, static_cast<Eigen::Index>(c)) = root_w * (indicator - d_bar[k][c + 1]);
            }
            ++row;
        }
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(n_time)) {
        std::string names;
        for (Eigen::Index c = qr.rank(); c < static_cast<Eigen::Index>(n_time); ++c) {
            auto col = static_cast<int>(qr.colsPermutation().indices()(c));
            if (!names.empty()) names += ", ";
            names += "time:" + month_at(static_cast<std::size_t>(col) + 1).str();
        }
        throw NumericalError("singular TPD design (products and months not connected); dependent columns: " + names);
    }
    Eigen::VectorXd delta = qr.solve(y);

    TPDSolution out;
    std::size_t ref_k = 0;
    if (reference) {
        auto it = std::find_if(universe.begin(), universe.end(), [&](std::size_t i) { return panel.item(i) == *reference; });
        if (it == universe.end()) throw UsageError("TPD reference product '" + *reference + "' not in window");
        ref_k = static_cast<std::size_t>(it - universe.begin());
    }
    std::vector<double> effect(universe.size());
    for (std::size_t k = 0; k < universe.size(); ++k) {
        double e = y_bar[k];
        for (std::size_t c = 0; c < n_time; ++c) e -= d_bar[k][c + 1] * delta(static_cast<Eigen::Index>(c));
        effect[k] = e;
    }
    out.reference = panel.item(universe[ref_k]);
    out.intercept = effect[ref_k];
    out.delta.emplace(window.start, 0.0);
    for (std::size_t c = 0; c < n_time; ++c) out.delta.emplace(month_at(c + 1), delta(static_cast<Eigen::Index>(c)));
    for (std::size_t k = 0; k < universe.size(); ++k) out.gamma.emplace(panel.item(universe[k]), effect[k] - out.intercept);

    std::vector<double> log_level(n_months, 0.0);
    for (std::size_t z = 0; z < n_months; ++z) {
        double sum = 0.0;
        for (std::size_t k = 0; k < universe.size(); ++k) {
            const std::size_t i = universe[k];
            if (!keep[i][z]) continue;
            sum += share(i, z) * (std::log(panel.price(i, month_at(z))) - out.gamma.at(panel.item(i)));
        }
        log_level[z] = sum;
    }
    out.levels = WindowLevels(window.start, std::move(log_level));
    out.series = out.levels.series(window.base_month(), {"tpd", window.length, "none", {}, "none"});
    return out;
}

struct MultilateralOptions {
    Formula method = Formula::geks;
    std::vector<FilterSpec> filters;
    GKOptions gk;
};

inline WindowLevels multilateral_levels(const ItemPanel& panel, const WindowSpec& window, const MultilateralOptions& options) {
    switch (options.method) {
    case Formula::geks: return geks_type_levels(Formula::fisher, panel, window, options.filters);
    case Formula::ccdi: return geks_type_levels(Formula::tornqvist, panel, window, options.filters);
    case Formula::gk: return gk_solve(panel, window, options.gk, options.filters).levels;
    case Formula::tpd: return tpd(panel, window, options.filters).levels;
    default: throw UsageError(to_string(options.method) + " is not a multilateral method");
    }
}

} // namespace pricelab
