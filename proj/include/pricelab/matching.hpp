#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "pricelab/csv.hpp"
#include "pricelab/error.hpp"
#include "pricelab/normalize.hpp"

namespace pricelab {

// Jaro similarity over Unicode code points. Matching window is
// floor(max(|s1|,|s2|)/2) - 1; t is half the number of matched characters
// that appear in a different order. Two empty strings are identical (1.0).
inline double jaro_similarity(std::string_view s1, std::string_view s2) {
    auto a = detail::decode_utf8(s1);
    auto b = detail::decode_utf8(s2);
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    if (a == b) return 1.0;
    const std::ptrdiff_t window = std::max<std::ptrdiff_t>(
        0, static_cast<std::ptrdiff_t>(std::max(a.size(), b.size()) / 2) - 1);
    std::vector<char> a_hit(a.size(), 0), b_hit(b.size(), 0);
    std::size_t m = 0;
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a.size()); ++i) {
        std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
        std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(b.size()) - 1, i + window);
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
            if (!b_hit[j] && a[i] == b[j]) {
                a_hit[i] = b_hit[j] = 1;
                ++m;
                break;
            }
        }
    }
    if (m == 0) return 0.0;
    std::size_t out_of_order = 0;
    for (std::size_t i = 0, k = 0; i < a.size(); ++i) {
        if (!a_hit[i]) continue;
        while (!b_hit[k]) ++k;
        if (a[i] != b[k]) ++out_of_order;
        ++k;
    }
    const double md = static_cast<double>(m);
    const double t = static_cast<double>(out_of_order) / 2.0;
    return (md / static_cast<double>(a.size()) + md / static_cast<double>(b.size()) + (md - t) / md) / 3.0;
}

// Winkler's prefix boost: sim_j + l * p * (1 - sim_j), l = common prefix
// length capped at max_prefix.
inline double winkler_score(std::string_view s1, std::string_view s2, double p = 0.1, int max_prefix = 4) {
    if (!(p >= 0.0 && p <= 0.25)) throw UsageError("winkler scaling factor must lie in [0, 0.25]");
    if (max_prefix < 0) throw UsageError("winkler max_prefix must be non-negative");
    const double sim = jaro_similarity(s1, s2);
    auto a = detail::decode_utf8(s1);
    auto b = detail::decode_utf8(s2);
    std::size_t cap = std::min({a.size(), b.size(), static_cast<std::size_t>(max_prefix)});
    std::size_t l = 0;
    while (l < cap && a[l] == b[l]) ++l;
    return sim + static_cast<double>(l) * p * (1.0 - sim);
}

struct Observation {
    std::optional<std::string> ean;
    std::optional<std::string> provider_id;
    NormalizedDescription description;
    std::string outlet_id;
};

// Identity of an observation in a MatchTable.
struct ObservationKey {
    std::optional<std::string> ean;
    std::optional<std::string> provider_id;
    std::string description; // NormalizedDescription::serialize()

    auto operator<=>(const ObservationKey&) const = default;
};

inline ObservationKey key_of(const Observation& o) { return {o.ean, o.provider_id, o.description.serialize()}; }

struct BlockKey {
    std::optional<std::string> provider_id;
    std::string outlet_id;
    std::optional<double> percent;
    bool uht = false;
    std::optional<double> magnitude;
    std::optional<std::string> unit;

    auto operator<=>(const BlockKey&) const = default;
};

// Weight takes precedence over volume as the measure in the block key.
// Limited blocking drops the measure so relaunches with a new size can link.
inline BlockKey block_key(const Observation& o, bool limited_blocking = false) {
    BlockKey k;
    k.provider_id = o.provider_id;
    k.outlet_id = o.outlet_id;
    k.percent = o.description.percent;
    k.uht = o.description.flags.contains("UHT");
    if (!limited_blocking) {
        const auto& m = o.description.weight ? o.description.weight : o.description.volume;
        if (m) {
            k.magnitude = m->total();
            k.unit = m->unit;
        }
    }
    return k;
}

enum class Provenance { identifier, blocked_name, fresh };

inline std::string to_string(Provenance p) {
    switch (p) {
    case Provenance::identifier: return "identifier";
    case Provenance::blocked_name: return "blocked-name";
    case Provenance::fresh: return "fresh";
    }
    return "fresh";
}

inline Provenance parse_provenance(std::string_view s) {
    if (s == "identifier") return Provenance::identifier;
    if (s == "blocked-name") return Provenance::blocked_name;
    if (s == "fresh") return Provenance::fresh;
    throw DataError("unknown provenance '" + std::string(s) + "'");
}

struct Assignment {
    std::string canonical_id;
    Provenance provenance = Provenance::fresh;
    std::optional<double> score;
};

class MatchTable {
public:
    // Re-assigning a key to a different canonical id is a DataError.
    void assign(const ObservationKey& key, Assignment a) {
        auto [it, inserted] = assignments_.try_emplace(key, a);
        if (!inserted && it->second.canonical_id != a.canonical_id)
            throw DataError("observation assigned to two canonical products: " + it->second.canonical_id + " and " +
                            a.canonical_id);
    }

    const Assignment* find(const ObservationKey& key) const {
        auto it = assignments_.find(key);
        return it == assignments_.end() ? nullptr : &it->second;
    }

    const std::map<ObservationKey, Assignment>& assignments() const { return assignments_; }
    std::size_t size() const { return assignments_.size(); }

    std::size_t linked_count() const {
        return static_cast<std::size_t>(std::count_if(assignments_.begin(), assignments_.end(),
                                                      [](const auto& kv) { return kv.second.provenance != Provenance::fresh; }));
    }

    std::set<std::string> canonical_ids() const {
        std::set<std::string> out;
        for (const auto& [k, a] : assignments_) out.insert(a.canonical_id);
        return out;
    }

    void write_csv(std::ostream& out) const {
        csv::write_row(out, {"ean", "provider_id", "description", "canonical_id", "provenance", "score"});
        for (const auto& [k, a] : assignments_)
            csv::write_row(out, {k.ean.value_or(""), k.provider_id.value_or(""), k.description, a.canonical_id,
                                 to_string(a.provenance), a.score ? format_double(*a.score) : ""});
    }

    // Descriptions are re-normalized on import so hand-edited rows still
    // resolve against ingested records.
    static MatchTable read_csv(std::istream& in) {
        csv::Reader reader(in);
        csv::Row row;
        if (!reader.next(row)) throw ConfigError("match table has no header row");
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < row.fields.size(); ++i) index.emplace(row.fields[i], i);
        for (const char* name : {"ean", "provider_id", "description", "canonical_id"})
            if (!index.contains(name)) throw ConfigError(std::string("match table missing column '") + name + "'");
        auto get = [&](const char* name) -> std::string {
            auto it = index.find(name);
            return it == index.end() || it->second >= row.fields.size() ? std::string{} : row.fields[it->second];
        };
        MatchTable table;
        while (reader.next(row)) {
            if (row.fields.size() == 1 && row.fields[0].empty()) continue;
            if (row.fields.size() != index.size())
                throw DataError("match table line " + std::to_string(row.line) + ": wrong field count");
            ObservationKey key;
            if (auto e = get("ean"); !e.empty()) key.ean = e;
            if (auto p = get("provider_id"); !p.empty()) key.provider_id = p;
            key.description = normalize_description(get("description")).serialize();
            Assignment a;
            a.canonical_id = get("canonical_id");
            if (a.canonical_id.empty()) throw DataError("match table line " + std::to_string(row.line) + ": empty canonical_id");
            auto prov = get("provenance");
            a.provenance = prov.empty() ? Provenance::identifier : parse_provenance(prov);
            if (auto s = get("score"); !s.empty()) a.score = std::stod(s);
            table.assign(key, a);
        }
        return table;
    }

private:
    std::map<ObservationKey, Assignment> assignments_;
};

struct MatchOptions {
    double threshold = 0.90;
    double prefix_scale = 0.1;
    int max_prefix = 4;
    bool limited_blocking = false;
};

namespace detail {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    // Smaller index becomes the root, so roots do not depend on union order.
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

// Representative preference: smallest EAN, else smallest provider id, else
// smallest description.
inline std::tuple<int, std::string> id_rank(const ObservationKey& k) {
    if (k.ean) return {0, *k.ean};
    if (k.provider_id) return {1, *k.provider_id};
    return {2, k.description};
}

inline std::string canonical_id_of(const ObservationKey& k) {
    auto [kind, value] = id_rank(k);
    static constexpr const char* prefix[] = {"EAN:", "PID:", "DESC:"};
    return prefix[kind] + value;
}

} // namespace detail

// Two-step linkage. Step 1 unites observations that share an EAN or a
// provider id. Step 2 takes every observation still alone and, inside each
// of its blocks, links it to the candidate with the highest Winkler score on
// the token strings when that score reaches the threshold (ties: smallest
// candidate key). All step-2 links are chosen against the step-1 state and
// then applied together, so the result is independent of input order.
inline MatchTable match_products(std::span<const Observation> observations, const MatchOptions& options = {}) {
    if (!(options.threshold >= 0.0 && options.threshold <= 1.0))
        throw UsageError("match threshold must lie in [0, 1]");

    std::map<ObservationKey, std::size_t> node_of;
    for (const auto& o : observations) node_of.try_emplace(key_of(o), 0);
    std::vector<ObservationKey> keys;
    keys.reserve(node_of.size());
    for (auto& [k, idx] : node_of) {
        idx = keys.size();
        keys.push_back(k);
    }
    const std::size_t n = keys.size();
    std::vector<std::string> token_strings(n);
    std::map<BlockKey, std::set<std::size_t>> blocks;
    std::vector<std::set<BlockKey>> blocks_of(n);
    for (const auto& o : observations) {
        std::size_t node = node_of.at(key_of(o));
        token_strings[node] = o.description.token_string();
        auto bk = block_key(o, options.limited_blocking);
        blocks[bk].insert(node);
        blocks_of[node].insert(bk);
    }

    detail::DisjointSets sets(n);
    std::map<std::string, std::size_t> first_with_ean, first_with_pid;
    for (std::size_t i = 0; i < n; ++i) {
        if (keys[i].ean) {
            auto [it, fresh] = first_with_ean.try_emplace(*keys[i].ean, i);
            if (!fresh) sets.unite(it->second, i);
        }
        if (keys[i].provider_id) {
            auto [it, fresh] = first_with_pid.try_emplace(*keys[i].provider_id, i);
            if (!fresh) sets.unite(it->second, i);
        }
    }
    std::vector<std::size_t> step1_size(n, 0);
    for (std::size_t i = 0; i < n; ++i) ++step1_size[sets.find(i)];
    std::vector<char> step1_linked(n, 0);
    for (std::size_t i = 0; i < n; ++i) step1_linked[i] = step1_size[sets.find(i)] > 1;

    struct Link {
        std::size_t a, b;
        double score;
    };
    std::vector<Link> links;
    for (std::size_t i = 0; i < n; ++i) {
        if (step1_linked[i]) continue;
        std::optional<std::size_t> best;
        double best_score = -1.0;
        for (const auto& bk : blocks_of[i]) {
            for (std::size_t j : blocks.at(bk)) {
                if (j == i) continue;
                double s = winkler_score(token_strings[i], token_strings[j], options.prefix_scale, options.max_prefix);
                // j ascends within a block; across blocks keep the smaller key on ties.
                if (s > best_score || (s == best_score && best && j < *best)) {
                    best = j;
                    best_score = s;
                }
            }
        }
        if (best && best_score >= options.threshold) links.push_back({i, *best, best_score});
    }

    std::vector<std::optional<double>> link_score(n);
    for (const auto& l : links) {
        sets.unite(l.a, l.b);
        for (std::size_t x : {l.a, l.b})
            if (!step1_linked[x]) link_score[x] = std::max(link_score[x].value_or(0.0), l.score);
    }

    std::map<std::size_t, std::size_t> representative; // root -> best member
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = sets.find(i);
        auto [it, fresh] = representative.try_emplace(r, i);
        if (!fresh && detail::id_rank(keys[i]) < detail::id_rank(keys[it->second])) it->second = i;
    }
    MatchTable table;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = sets.find(i);
        Assignment a;
        a.canonical_id = detail::canonical_id_of(keys[representative.at(r)]);
        if (step1_linked[i]) {
            a.provenance = Provenance::identifier;
        } else if (link_score[i]) {
            a.provenance = Provenance::blocked_name;
            a.score = link_score[i];
        } else {
            a.provenance = Provenance::fresh;
        }
        table.assign(keys[i], a);
    }
    return table;
}

} // namespace pricelab
