#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pricelab/error.hpp"
#include "pricelab/panel.hpp"
#include "pricelab/series.hpp"

namespace pricelab {

struct FilterSpec {
    enum class Kind { low_sale, extreme_fixed, extreme_quantile };
    Kind kind = Kind::low_sale;
    double first = 1.25; // lambda | lo | q_lo
    double second = 0.0; //          hi | q_hi

    static FilterSpec low_sale(double lambda) { return checked({Kind::low_sale, lambda, 0.0}); }
    static FilterSpec extreme_fixed(double lo, double hi) { return checked({Kind::extreme_fixed, lo, hi}); }
    static FilterSpec extreme_quantile(double q_lo, double q_hi) { return checked({Kind::extreme_quantile, q_lo, q_hi}); }

    static FilterSpec checked(FilterSpec f) {
        switch (f.kind) {
        case Kind::low_sale:
            if (!(f.first > 0.0)) throw UsageError("low-sale lambda must be positive");
            break;
        case Kind::extreme_fixed:
            if (!(f.first > 0.0 && f.first < 1.0 && f.second > 1.0 && std::isfinite(f.second)))
                throw UsageError("extreme-price band needs 0 < lo < 1 < hi");
            break;
        case Kind::extreme_quantile:
            if (!(f.first >= 0.0 && f.first < f.second && f.second <= 1.0))
                throw UsageError("extreme-price quantiles need 0 <= q_lo < q_hi <= 1");
            break;
        }
        return f;
    }

    // CLI grammar: lowsale:L | extremeprice:LO,HI | extremeprice-quantile:QLO,QHI
    static FilterSpec parse(std::string_view text) {
        auto colon = text.find(':');
        if (colon == std::string_view::npos) throw UsageError("filter '" + std::string(text) + "' lacks ':'");
        auto name = text.substr(0, colon);
        std::string args(text.substr(colon + 1));
        auto number = [&](const std::string& s) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(s, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != s.size()) throw UsageError("bad number '" + s + "' in filter '" + std::string(text) + "'");
            return v;
        };
        auto pair = [&] {
            auto comma = args.find(',');
            if (comma == std::string::npos) throw UsageError("filter '" + std::string(text) + "' needs two values");
            return std::pair{number(args.substr(0, comma)), number(args.substr(comma + 1))};
        };
        if (name == "lowsale") return low_sale(number(args));
        if (name == "extremeprice") {
            auto [lo, hi] = pair();
            return extreme_fixed(lo, hi);
        }
        if (name == "extremeprice-quantile") {
            auto [lo, hi] = pair();
            return extreme_quantile(lo, hi);
        }
        throw UsageError("unknown filter '" + std::string(name) + "'");
    }

    std::string str() const {
        switch (kind) {
        case Kind::low_sale: return "lowsale:" + format_double(first);
        case Kind::extreme_fixed: return "extremeprice:" + format_double(first) + "," + format_double(second);
        case Kind::extreme_quantile: return "extremeprice-quantile:" + format_double(first) + "," + format_double(second);
        }
        return {};
    }
};

struct FilterOutcome {
    std::vector<std::size_t> survivors; // ascending item indices
    bool empty_warning = false;
};

// Items observed in both months.
inline std::vector<std::size_t> matched_items(const ItemPanel& panel, Month a, Month b) {
    std::vector<std::size_t> out;
    if (!panel.covers(a) || !panel.covers(b)) return out;
    for (std::size_t i = 0; i < panel.item_count(); ++i)
        if (panel.observed(i, a) && panel.observed(i, b)) out.push_back(i);
    return out;
}

// Keeps items whose mean share over the two months strictly exceeds
// 1/(n * lambda); shares and n are taken over `candidates`.
inline FilterOutcome low_sale_filter(const ItemPanel& panel, Month t_prev, Month t, double lambda,
                                     std::span<const std::size_t> candidates) {
    FilterSpec::low_sale(lambda);
    FilterOutcome out;
    if (candidates.empty()) {
        out.empty_warning = true;
        return out;
    }
    auto s0 = panel.shares(candidates, t_prev);
    auto s1 = panel.shares(candidates, t);
    const double threshold = 1.0 / (static_cast<double>(candidates.size()) * lambda);
    for (std::size_t k = 0; k < candidates.size(); ++k)
        if ((s0[k] + s1[k]) / 2.0 > threshold) out.survivors.push_back(candidates[k]);
    return out;
}

inline FilterOutcome low_sale_filter(const ItemPanel& panel, Month t_prev, Month t, double lambda) {
    auto matched = matched_items(panel, t_prev, t);
    return low_sale_filter(panel, t_prev, t, lambda, matched);
}

// Drops items whose relative p^t / p^{t_prev} lies outside [lo, hi].
inline FilterOutcome extreme_price_filter_fixed(const ItemPanel& panel, Month t_prev, Month t, double lo, double hi,
                                                std::span<const std::size_t> candidates) {
    FilterSpec::extreme_fixed(lo, hi);
    FilterOutcome out;
    out.empty_warning = candidates.empty();
    for (std::size_t i : candidates) {
        double r = panel.price(i, t) / panel.price(i, t_prev);
        if (r >= lo && r <= hi) out.survivors.push_back(i);
    }
    return out;
}

inline FilterOutcome extreme_price_filter_fixed(const ItemPanel& panel, Month t_prev, Month t, double lo, double hi) {
    auto matched = matched_items(panel, t_prev, t);
    return extreme_price_filter_fixed(panel, t_prev, t, lo, hi, matched);
}

// Nearest-rank quantile of sorted values: element ceil(q * n), 1-based,
// with q = 0 giving the minimum.
inline double nearest_rank(std::span<const double> sorted, double q) {
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

// Drops items whose relative is strictly below the q_lo quantile or strictly
// above the q_hi quantile of the candidates' relatives.
inline FilterOutcome extreme_price_filter_quantile(const ItemPanel& panel, Month t_prev, Month t, double q_lo,
                                                   double q_hi, std::span<const std::size_t> candidates) {
    FilterSpec::extreme_quantile(q_lo, q_hi);
    FilterOutcome out;
    if (candidates.empty()) {
        out.empty_warning = true;
        return out;
    }
    std::vector<double> rel;
    rel.reserve(candidates.size());
    for (std::size_t i : candidates) rel.push_back(panel.price(i, t) / panel.price(i, t_prev));
    std::vector<double> sorted = rel;
    std::sort(sorted.begin(), sorted.end());
    const double lo = nearest_rank(sorted, q_lo);
    const double hi = nearest_rank(sorted, q_hi);
    for (std::size_t k = 0; k < candidates.size(); ++k)
        if (!(rel[k] < lo) && !(rel[k] > hi)) out.survivors.push_back(candidates[k]);
    return out;
}

inline FilterOutcome extreme_price_filter_quantile(const ItemPanel& panel, Month t_prev, Month t, double q_lo,
                                                   double q_hi) {
    auto matched = matched_items(panel, t_prev, t);
    return extreme_price_filter_quantile(panel, t_prev, t, q_lo, q_hi, matched);
}

inline FilterOutcome apply_filter(const ItemPanel& panel, Month t_prev, Month t, const FilterSpec& f,
                                  std::span<const std::size_t> candidates) {
    switch (f.kind) {
    case FilterSpec::Kind::low_sale: return low_sale_filter(panel, t_prev, t, f.first, candidates);
    case FilterSpec::Kind::extreme_fixed: return extreme_price_filter_fixed(panel, t_prev, t, f.first, f.second, candidates);
    case FilterSpec::Kind::extreme_quantile:
        return extreme_price_filter_quantile(panel, t_prev, t, f.first, f.second, candidates);
    }
    return {};
}

// Matched set of (t_prev, t) passed through the filters in order.
inline std::vector<std::size_t> filtered_matched_items(const ItemPanel& panel, Month t_prev, Month t,
                                                       std::span<const FilterSpec> filters) {
    auto items = matched_items(panel, t_prev, t);
    for (const auto& f : filters) {
        if (items.empty()) break;
        items = apply_filter(panel, t_prev, t, f, items).survivors;
    }
    return items;
}

} // namespace pricelab
