#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pricelab/decimal.hpp"
#include "pricelab/error.hpp"
#include "pricelab/ingest.hpp"
#include "pricelab/matching.hpp"
#include "pricelab/month.hpp"
#include "pricelab/normalize.hpp"

namespace pricelab {

// Dense (item x month) table of unit-value prices and quantities over a
// contiguous month range. A zero price marks an absent observation. Items
// are kept in ascending id order; every sum in the index code walks them
// in that order.
class ItemPanel {
public:
    ItemPanel() = default;
    ItemPanel(std::vector<std::string> items, Month first, int months)
        : items_(std::move(items)), first_(first), months_(months),
          price_(items_.size() * static_cast<std::size_t>(months), 0.0),
          quantity_(items_.size() * static_cast<std::size_t>(months), 0.0) {
        if (!std::is_sorted(items_.begin(), items_.end()) ||
            std::adjacent_find(items_.begin(), items_.end()) != items_.end())
            throw DataError("item ids must be unique and sorted");
        if (months < 0) throw DataError("negative month count");
    }

    std::size_t item_count() const { return items_.size(); }
    int month_count() const { return months_; }
    const std::vector<std::string>& items() const { return items_; }
    const std::string& item(std::size_t i) const { return items_[i]; }
    Month first_month() const { return first_; }
    Month last_month() const { return first_ + (months_ - 1); }
    bool covers(Month m) const { return m >= first_ && m - first_ < months_; }

    void set(std::size_t item, Month m, double price, double quantity) {
        if (!(price > 0.0) || !(quantity > 0.0)) throw DataError("panel observations need positive price and quantity");
        price_[slot(item, m)] = price;
        quantity_[slot(item, m)] = quantity;
    }

    bool observed(std::size_t item, Month m) const { return covers(m) && price_[slot(item, m)] > 0.0; }
    double price(std::size_t item, Month m) const { return price_[slot(item, m)]; }
    double quantity(std::size_t item, Month m) const { return quantity_[slot(item, m)]; }
    double expenditure(std::size_t item, Month m) const { return price(item, m) * quantity(item, m); }

    // A month is present when at least one item is observed in it.
    bool month_present(Month m) const {
        if (!covers(m)) return false;
        for (std::size_t i = 0; i < items_.size(); ++i)
            if (observed(i, m)) return true;
        return false;
    }

    double total_expenditure(Month m) const {
        double sum = 0.0;
        if (!covers(m)) return sum;
        for (std::size_t i = 0; i < items_.size(); ++i)
            if (observed(i, m)) sum += expenditure(i, m);
        return sum;
    }

    // Expenditure shares of the given items in month m; they sum to one.
    std::vector<double> shares(std::span<const std::size_t> subset, Month m) const {
        std::vector<double> out;
        out.reserve(subset.size());
        double total = 0.0;
        for (std::size_t i : subset) total += expenditure(i, m);
        for (std::size_t i : subset) out.push_back(expenditure(i, m) / total);
        return out;
    }

    // Sub-range [from, to] with the same items.
    ItemPanel slice(Month from, Month to) const {
        if (!covers(from) || !covers(to) || to < from)
            throw DataError("month range " + from.str() + ".." + to.str() + " outside panel");
        ItemPanel out(items_, from, (to - from) + 1);
        for (std::size_t i = 0; i < items_.size(); ++i)
            for (Month m = from; m <= to; ++m)
                if (observed(i, m)) out.set(i, m, price(i, m), quantity(i, m));
        return out;
    }

private:
    std::size_t slot(std::size_t item, Month m) const {
        return item * static_cast<std::size_t>(months_) + static_cast<std::size_t>(m - first_);
    }

    std::vector<std::string> items_;
    Month first_;
    int months_ = 0;
    std::vector<double> price_;
    std::vector<double> quantity_;
};

struct CellKey {
    std::string product;
    std::string outlet;
    Month month;
    auto operator<=>(const CellKey&) const = default;
};

struct PanelCell {
    Decimal quantity;
    Decimal turnover;

    double quantity_value() const { return quantity.to_double(); }
    double expenditure() const { return turnover.to_double(); }
    double price() const { return expenditure() / quantity_value(); }
};

// Selects the cells pooled into one ItemPanel.
struct CellSelector {
    std::optional<std::string> outlet;
    std::optional<std::string> subgroup;
};

// Monthly unit-value panel per (product, outlet, month). Immutable once built.
class ProductPanel {
public:
    ProductPanel() = default;
    ProductPanel(std::map<CellKey, PanelCell> cells, std::map<std::string, NormalizedDescription> attributes,
                 std::map<std::string, std::string> subgroups)
        : cells_(std::move(cells)), attributes_(std::move(attributes)), subgroups_(std::move(subgroups)) {
        std::set<std::string> products, outlets;
        std::set<Month> months;
        for (const auto& [k, c] : cells_) {
            products.insert(k.product);
            outlets.insert(k.outlet);
            months.insert(k.month);
        }
        products_.assign(products.begin(), products.end());
        outlets_.assign(outlets.begin(), outlets.end());
        months_.assign(months.begin(), months.end());
    }

    const std::map<CellKey, PanelCell>& cells() const { return cells_; }
    const std::vector<std::string>& products() const { return products_; }
    const std::vector<std::string>& outlets() const { return outlets_; }
    const std::vector<Month>& months() const { return months_; }
    bool empty() const { return cells_.empty(); }
    const std::map<std::string, NormalizedDescription>& attributes() const { return attributes_; }

    std::string subgroup_of(const std::string& product) const {
        auto it = subgroups_.find(product);
        return it == subgroups_.end() ? std::string{} : it->second;
    }

    std::vector<std::string> subgroups() const {
        std::set<std::string> out;
        for (const auto& p : products_) out.insert(subgroup_of(p));
        return {out.begin(), out.end()};
    }

    const PanelCell* find(const std::string& product, const std::string& outlet, Month m) const {
        auto it = cells_.find({product, outlet, m});
        return it == cells_.end() ? nullptr : &it->second;
    }

    // Pools the selected cells across outlets: quantities and turnovers are
    // summed exactly, then unit values recomputed.
    ItemPanel pool(const CellSelector& selector = {}) const {
        std::map<std::pair<std::string, Month>, PanelCell> pooled;
        for (const auto& [k, c] : cells_) {
            if (selector.outlet && k.outlet != *selector.outlet) continue;
            if (selector.subgroup && subgroup_of(k.product) != *selector.subgroup) continue;
            auto& p = pooled[{k.product, k.month}];
            p.quantity += c.quantity;
            p.turnover += c.turnover;
        }
        if (months_.empty()) return {};
        std::set<std::string> items;
        for (const auto& [k, c] : pooled) items.insert(k.first);
        std::vector<std::string> ids(items.begin(), items.end());
        ItemPanel out(ids, months_.front(), (months_.back() - months_.front()) + 1);
        for (const auto& [k, c] : pooled) {
            auto i = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), k.first) - ids.begin());
            out.set(i, k.second, c.price(), c.quantity_value());
        }
        return out;
    }

    // Expenditure shares of the given products in month m, pooled over outlets.
    std::vector<double> shares(std::span<const std::string> products, Month m) const {
        std::vector<double> spend;
        double total = 0.0;
        for (const auto& p : products) {
            double s = 0.0;
            for (const auto& o : outlets_)
                if (auto c = find(p, o, m)) s += c->expenditure();
            spend.push_back(s);
            total += s;
        }
        for (auto& s : spend) s /= total;
        return spend;
    }

private:
    std::map<CellKey, PanelCell> cells_;
    std::map<std::string, NormalizedDescription> attributes_;
    std::map<std::string, std::string> subgroups_;
    std::vector<std::string> products_, outlets_;
    std::vector<Month> months_;
};

struct PanelBuild {
    ProductPanel panel;
    std::vector<Reject> rejects;
    std::size_t accepted_records = 0;
    std::size_t excluded_cells = 0; // net quantity or turnover <= 0
};

inline Observation observation_of(const TransactionRecord& r) {
    return {r.ean, r.provider_id, normalize_description(r.description), r.outlet_id};
}

// Nets records within (product, outlet, month) and drops cells whose net
// quantity or turnover is not positive. Records that do not resolve through
// the match table are rejected.
inline PanelBuild build_panel(std::span<const TransactionRecord> records, const MatchTable& table) {
    PanelBuild out;
    std::map<CellKey, PanelCell> sums;
    std::map<std::string, NormalizedDescription> attributes;
    std::map<std::string, std::string> subgroups;
    std::map<std::string, ObservationKey> attribute_source;
    for (const auto& r : records) {
        auto obs = observation_of(r);
        auto key = key_of(obs);
        const Assignment* a = table.find(key);
        if (!a) {
            out.rejects.push_back({r.line, "record does not resolve to a canonical product"});
            continue;
        }
        ++out.accepted_records;
        auto& cell = sums[{a->canonical_id, r.outlet_id, r.month}];
        cell.quantity += r.quantity;
        cell.turnover += r.turnover;
        // order-independent attribute choices: smallest key / smallest label
        auto src = attribute_source.find(a->canonical_id);
        if (src == attribute_source.end() || key < src->second) {
            attribute_source[a->canonical_id] = key;
            attributes[a->canonical_id] = obs.description;
        }
        if (r.subgroup) {
            auto [it, fresh] = subgroups.try_emplace(a->canonical_id, *r.subgroup);
            if (!fresh && *r.subgroup < it->second) it->second = *r.subgroup;
        }
    }
    if (out.accepted_records == 0) throw DataError("empty panel: every record was rejected");
    std::map<CellKey, PanelCell> cells;
    for (auto& [k, c] : sums) {
        if (c.quantity.units() <= 0 || c.turnover.units() <= 0) {
            ++out.excluded_cells;
            continue;
        }
        cells.emplace(k, c);
    }
    if (cells.empty()) throw DataError("empty panel: every cell has non-positive net quantity or turnover");
    out.panel = ProductPanel(std::move(cells), std::move(attributes), std::move(subgroups));
    return out;
}

} // namespace pricelab
