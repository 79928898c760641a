#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pricelab/error.hpp"
#include "pricelab/filtering.hpp"
#include "pricelab/panel.hpp"
#include "pricelab/series.hpp"

namespace pricelab {

enum class Formula {
    jevons, dutot, carli, harmonic, cswd,
    laspeyres, paasche, fisher, tornqvist, sato_vartia,
    geks, ccdi, gk, tpd,
};

inline constexpr Formula all_formulas[] = {
    Formula::jevons,    Formula::dutot,   Formula::carli,  Formula::harmonic,  Formula::cswd,
    Formula::laspeyres, Formula::paasche, Formula::fisher, Formula::tornqvist, Formula::sato_vartia,
    Formula::geks,      Formula::ccdi,    Formula::gk,     Formula::tpd,
};

inline std::string to_string(Formula f) {
    switch (f) {
    case Formula::jevons: return "jevons";
    case Formula::dutot: return "dutot";
    case Formula::carli: return "carli";
    case Formula::harmonic: return "harmonic";
    case Formula::cswd: return "cswd";
    case Formula::laspeyres: return "laspeyres";
    case Formula::paasche: return "paasche";
    case Formula::fisher: return "fisher";
    case Formula::tornqvist: return "tornqvist";
    case Formula::sato_vartia: return "sato-vartia";
    case Formula::geks: return "geks";
    case Formula::ccdi: return "ccdi";
    case Formula::gk: return "gk";
    case Formula::tpd: return "tpd";
    }
    return {};
}

inline Formula parse_formula(std::string_view s) {
    for (auto f : all_formulas)
        if (to_string(f) == s) return f;
    if (s == "sato_vartia" || s == "satovartia") return Formula::sato_vartia;
    if (s == "qu" || s == "geary-khamis") return Formula::gk;
    throw UsageError("unknown index method '" + std::string(s) + "'");
}

inline bool is_unweighted(Formula f) { return f <= Formula::cswd; }
inline bool is_weighted(Formula f) { return f >= Formula::laspeyres && f <= Formula::sato_vartia; }
inline bool is_bilateral(Formula f) { return f <= Formula::sato_vartia; }
inline bool is_multilateral(Formula f) { return f >= Formula::geks; }

struct MatchedProduct {
    double p0, p1, q0, q1, s0, s1;
};

// Matched set G_{0,t}: per-product prices, quantities and expenditure shares
// taken within the set, in ascending product order.
struct MatchedPair {
    Month t0, t1;
    std::vector<MatchedProduct> products;

    bool empty() const { return products.empty(); }
    std::size_t size() const { return products.size(); }

    // Builds a pair from raw columns; shares are computed here.
    static MatchedPair from_columns(std::span<const double> p0, std::span<const double> p1, std::span<const double> q0,
                                    std::span<const double> q1, Month t0 = {}, Month t1 = {}) {
        if (p0.size() != p1.size() || p0.size() != q0.size() || p0.size() != q1.size())
            throw DataError("matched pair columns differ in length");
        MatchedPair pair{t0, t1, {}};
        double e0 = 0.0, e1 = 0.0;
        for (std::size_t i = 0; i < p0.size(); ++i) {
            if (!(p0[i] > 0 && p1[i] > 0 && q0[i] > 0 && q1[i] > 0))
                throw DataError("matched pair needs positive prices and quantities");
            e0 += p0[i] * q0[i];
            e1 += p1[i] * q1[i];
        }
        for (std::size_t i = 0; i < p0.size(); ++i)
            pair.products.push_back({p0[i], p1[i], q0[i], q1[i], p0[i] * q0[i] / e0, p1[i] * q1[i] / e1});
        return pair;
    }
};

inline MatchedPair make_matched_pair(const ItemPanel& panel, Month t0, Month t1, std::span<const FilterSpec> filters = {}) {
    auto items = filtered_matched_items(panel, t0, t1, filters);
    std::vector<double> p0, p1, q0, q1;
    for (std::size_t i : items) {
        p0.push_back(panel.price(i, t0));
        p1.push_back(panel.price(i, t1));
        q0.push_back(panel.quantity(i, t0));
        q1.push_back(panel.quantity(i, t1));
    }
    return MatchedPair::from_columns(p0, p1, q0, q1, t0, t1);
}

namespace detail {

inline void require_nonempty(const MatchedPair& pair) {
    if (pair.empty())
        throw UndefinedIndexError("empty matched set for " + pair.t0.str() + " -> " + pair.t1.str());
}

// (a - b) / (ln a - ln b), with its limit a at a == b and a series near it.
inline double logarithmic_mean(double a, double b) {
    if (a == b) return a;
    const double x = a / b - 1.0;
    if (std::abs(x) < 1e-4) return b * (1.0 + x * (0.5 + x * (-1.0 / 12.0 + x * (1.0 / 24.0 - x * 19.0 / 720.0))));
    return (a - b) / std::log(a / b);
}

} // namespace detail

inline double unweighted_index(Formula formula, const MatchedPair& pair) {
    detail::require_nonempty(pair);
    const double n = static_cast<double>(pair.size());
    switch (formula) {
    case Formula::jevons: {
        double log_sum = 0.0;
        for (const auto& p : pair.products) log_sum += std::log(p.p1 / p.p0);
        return std::exp(log_sum / n);
    }
    case Formula::dutot: {
        double num = 0.0, den = 0.0;
        for (const auto& p : pair.products) {
            num += p.p1;
            den += p.p0;
        }
        return num / den;
    }
    case Formula::carli: {
        double sum = 0.0;
        for (const auto& p : pair.products) sum += p.p1 / p.p0;
        return sum / n;
    }
    case Formula::harmonic: {
        double sum = 0.0;
        for (const auto& p : pair.products) sum += p.p0 / p.p1;
        return n / sum;
    }
    case Formula::cswd:
        return std::sqrt(unweighted_index(Formula::carli, pair) * unweighted_index(Formula::harmonic, pair));
    default: throw UsageError(to_string(formula) + " is not an unweighted bilateral formula");
    }
}

inline double weighted_index(Formula formula, const MatchedPair& pair) {
    detail::require_nonempty(pair);
    switch (formula) {
    case Formula::laspeyres: {
        double num = 0.0, den = 0.0;
        for (const auto& p : pair.products) {
            num += p.p1 * p.q0;
            den += p.p0 * p.q0;
        }
        return num / den;
    }
    case Formula::paasche: {
        double num = 0.0, den = 0.0;
        for (const auto& p : pair.products) {
            num += p.p1 * p.q1;
            den += p.p0 * p.q1;
        }
        return num / den;
    }
    case Formula::fisher:
        return std::sqrt(weighted_index(Formula::laspeyres, pair) * weighted_index(Formula::paasche, pair));
    case Formula::tornqvist: {
        double log_sum = 0.0;
        for (const auto& p : pair.products) log_sum += 0.5 * (p.s0 + p.s1) * std::log(p.p1 / p.p0);
        return std::exp(log_sum);
    }
    case Formula::sato_vartia: {
        // price ratio taken against the base period
        double weight_sum = 0.0, log_sum = 0.0;
        for (const auto& p : pair.products) {
            double w = detail::logarithmic_mean(p.s1, p.s0);
            weight_sum += w;
            log_sum += w * std::log(p.p1 / p.p0);
        }
        return std::exp(log_sum / weight_sum);
    }
    default: throw UsageError(to_string(formula) + " is not a weighted bilateral formula");
    }
}

inline double bilateral_index(Formula formula, const MatchedPair& pair) {
    if (is_unweighted(formula)) return unweighted_index(formula, pair);
    if (is_weighted(formula)) return weighted_index(formula, pair);
    throw UsageError(to_string(formula) + " is not a bilateral formula");
}

// Fixed-base bilateral index P(base, t) on the filtered matched set.
inline double direct_index(Formula formula, const ItemPanel& panel, Month base, Month t,
                           std::span<const FilterSpec> filters = {}) {
    if (base == t) return 1.0;
    return bilateral_index(formula, make_matched_pair(panel, base, t, filters));
}

// Product of adjacent-month links from base to t, each on its own filtered
// matched set.
inline double chain_index(Formula formula, const ItemPanel& panel, Month base, Month t,
                          std::span<const FilterSpec> filters = {}) {
    if (t < base) throw UsageError("chain end " + t.str() + " precedes base " + base.str());
    if (!panel.covers(base) || !panel.covers(t)) throw DataError("chain range outside panel");
    double value = 1.0;
    for (Month m = base; m < t; ++m) {
        auto pair = make_matched_pair(panel, m, m + 1, filters);
        if (pair.empty()) throw UndefinedIndexError("broken chain: empty matched set for " + m.str() + " -> " + (m + 1).str());
        value *= bilateral_index(formula, pair);
    }
    return value;
}

inline IndexSeries chained_series(Formula formula, const ItemPanel& panel, Month base, Month end,
                                  std::span<const FilterSpec> filters = {}) {
    IndexSeries series(base);
    double value = 1.0;
    series.append(base, value);
    for (Month m = base; m < end; ++m) {
        auto pair = make_matched_pair(panel, m, m + 1, filters);
        if (pair.empty()) throw UndefinedIndexError("broken chain: empty matched set for " + m.str() + " -> " + (m + 1).str());
        value *= bilateral_index(formula, pair);
        series.append(m + 1, value);
    }
    return series;
}

inline IndexSeries direct_series(Formula formula, const ItemPanel& panel, Month base, Month end,
                                 std::span<const FilterSpec> filters = {}) {
    IndexSeries series(base);
    for (Month m = base; m <= end; ++m) series.append(m, direct_index(formula, panel, base, m, filters));
    return series;
}

} // namespace pricelab
