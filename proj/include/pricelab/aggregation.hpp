#pragma once

#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pricelab/error.hpp"
#include "pricelab/series.hpp"

namespace pricelab {

enum class Partition { none, subgroup, outlet, both };
enum class AggFormula { laspeyres, fisher };

inline std::string to_string(Partition p) {
    switch (p) {
    case Partition::none: return "none";
    case Partition::subgroup: return "subgroup";
    case Partition::outlet: return "outlet";
    case Partition::both: return "both";
    }
    return {};
}

inline Partition parse_partition(std::string_view s) {
    for (auto p : {Partition::none, Partition::subgroup, Partition::outlet, Partition::both})
        if (to_string(p) == s) return p;
    throw UsageError("unknown aggregation partition '" + std::string(s) + "'");
}

inline std::string to_string(AggFormula f) { return f == AggFormula::laspeyres ? "laspeyres" : "fisher"; }

inline AggFormula parse_agg_formula(std::string_view s) {
    if (s == "laspeyres") return AggFormula::laspeyres;
    if (s == "fisher") return AggFormula::fisher;
    throw UsageError("unknown aggregation formula '" + std::string(s) + "'");
}

struct CellData {
    IndexSeries series;
    double base_expenditure = 0.0;
    std::map<Month, double> expenditure; // per month
};

struct CellIndexSet {
    Partition partition = Partition::none;
    std::map<std::string, CellData> cells;
};

// Laspeyres: base-share weighted arithmetic mean of cell indices.
// Fisher: geometric mean of that and the current-share weighted harmonic
// mean. Cells without a value at t are an error unless allow_missing, in
// which case they are dropped and both weight sets renormalized.
inline double aggregate(const CellIndexSet& set, AggFormula method, Month t, bool allow_missing = false) {
    struct Term {
        double index, w0, wt;
    };
    std::vector<Term> terms;
    std::string missing;
    for (const auto& [key, cell] : set.cells) {
        auto value = cell.series.at(t);
        auto spend = cell.expenditure.find(t);
        if (!value || (method == AggFormula::fisher && spend == cell.expenditure.end())) {
            if (!missing.empty()) missing += ", ";
            missing += key;
            continue;
        }
        if (!(cell.base_expenditure > 0.0)) throw DataError("cell " + key + " has non-positive base expenditure");
        terms.push_back({*value, cell.base_expenditure, spend == cell.expenditure.end() ? 0.0 : spend->second});
    }
    if (!missing.empty() && !allow_missing) throw DataError("cells missing at " + t.str() + ": " + missing);
    if (terms.empty()) throw UndefinedIndexError("no cells to aggregate at " + t.str());

    double w0_total = 0.0, wt_total = 0.0;
    for (const auto& term : terms) {
        w0_total += term.w0;
        wt_total += term.wt;
    }
    double laspeyres = 0.0;
    for (const auto& term : terms) laspeyres += term.w0 / w0_total * term.index;
    if (method == AggFormula::laspeyres) return laspeyres;
    if (!(wt_total > 0.0)) throw DataError("no current-period expenditure at " + t.str());
    double inverse = 0.0;
    for (const auto& term : terms) inverse += term.wt / wt_total / term.index;
    return std::sqrt(laspeyres / inverse);
}

inline IndexSeries aggregate_series(const CellIndexSet& set, AggFormula method, Month base, Month end,
                                    bool allow_missing = false) {
    IndexSeries out(base);
    for (Month m = base; m <= end; ++m) out.append(m, aggregate(set, method, m, allow_missing));
    return out;
}

} // namespace pricelab
