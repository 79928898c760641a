#pragma once

#include <algorithm>
#include <array>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pricelab/csv.hpp"
#include "pricelab/decimal.hpp"
#include "pricelab/error.hpp"
#include "pricelab/month.hpp"

namespace pricelab {

// One aggregated sale line from a retailer file.
struct TransactionRecord {
    std::string outlet_id;
    Month month;
    std::optional<std::string> ean;
    std::optional<std::string> provider_id;
    std::string description;
    Decimal quantity; // negative for returns
    Decimal turnover;
    std::optional<std::string> subgroup;
    std::size_t line = 0; // source line, 0 when generated
};

struct Reject {
    std::size_t line_number = 0;
    std::string reason;
};

struct CsvDialect {
    char separator = ',';
};

struct ParsedTransactions {
    std::vector<TransactionRecord> records;
    std::vector<Reject> rejects;
};

inline constexpr std::array<const char*, 7> mandatory_columns = {
    "outlet_id", "month", "ean", "provider_id", "description", "quantity", "turnover"};

namespace detail {

inline std::string trim(std::string s) {
    auto notspace = [](unsigned char c) { return c != ' ' && c != '\t'; };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
    s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
    return s;
}

inline std::optional<std::string> optional_field(const std::string& s) {
    auto t = trim(s);
    if (t.empty()) return std::nullopt;
    return t;
}

} // namespace detail

// Columns are located by header name, so their order is free. Malformed rows
// go to the rejects list with their line number; a missing mandatory column
// is a ConfigError.
inline ParsedTransactions parse_transactions(std::istream& in, CsvDialect dialect = {}) {
    csv::Reader reader(in, dialect.separator);
    csv::Row row;
    if (!reader.next(row)) throw ConfigError("input has no header row");
    if (!row.fields.empty() && row.fields[0].rfind("\xEF\xBB\xBF", 0) == 0) row.fields[0].erase(0, 3);

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < row.fields.size(); ++i) index.emplace(detail::trim(row.fields[i]), i);
    for (const char* name : mandatory_columns)
        if (!index.contains(name)) throw ConfigError(std::string("missing mandatory column '") + name + "'");
    auto col = [&](const char* name) { return index.at(name); };
    std::optional<std::size_t> subgroup_col;
    if (auto it = index.find("subgroup"); it != index.end()) subgroup_col = it->second;
    const std::size_t width = row.fields.size();

    ParsedTransactions out;
    while (reader.next(row)) {
        if (row.fields.size() == 1 && detail::trim(row.fields[0]).empty()) continue;
        auto reject = [&](std::string reason) { out.rejects.push_back({row.line, std::move(reason)}); };
        if (row.fields.size() != width) {
            reject("expected " + std::to_string(width) + " fields, found " + std::to_string(row.fields.size()));
            continue;
        }
        TransactionRecord r;
        r.line = row.line;
        r.outlet_id = detail::trim(row.fields[col("outlet_id")]);
        if (r.outlet_id.empty()) {
            reject("empty outlet_id");
            continue;
        }
        auto month = Month::parse(detail::trim(row.fields[col("month")]));
        if (!month) {
            reject("invalid month '" + row.fields[col("month")] + "'");
            continue;
        }
        r.month = *month;
        r.ean = detail::optional_field(row.fields[col("ean")]);
        r.provider_id = detail::optional_field(row.fields[col("provider_id")]);
        if (!r.ean && !r.provider_id) {
            reject("neither ean nor provider_id present");
            continue;
        }
        r.description = row.fields[col("description")];
        auto qty = Decimal::parse(row.fields[col("quantity")]);
        if (!qty) {
            reject("unparseable quantity '" + row.fields[col("quantity")] + "'");
            continue;
        }
        auto turnover = Decimal::parse(row.fields[col("turnover")]);
        if (!turnover) {
            reject("unparseable turnover '" + row.fields[col("turnover")] + "'");
            continue;
        }
        r.quantity = *qty;
        r.turnover = *turnover;
        if (subgroup_col) r.subgroup = detail::optional_field(row.fields[*subgroup_col]);
        out.records.push_back(std::move(r));
    }
    return out;
}

inline void write_transactions(std::ostream& out, std::span<const TransactionRecord> records) {
    csv::write_row(out, {"outlet_id", "month", "ean", "provider_id", "description", "quantity", "turnover", "subgroup"});
    for (const auto& r : records)
        csv::write_row(out, {r.outlet_id, r.month.str(), r.ean.value_or(""), r.provider_id.value_or(""), r.description,
                             r.quantity.str(), r.turnover.str(), r.subgroup.value_or("")});
}

inline void write_rejects(std::ostream& out, std::span<const Reject> rejects) {
    csv::write_row(out, {"line_number", "reason"});
    for (const auto& r : rejects) csv::write_row(out, {std::to_string(r.line_number), r.reason});
}

} // namespace pricelab
