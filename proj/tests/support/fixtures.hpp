#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pricelab/csv.hpp"
#include "pricelab/matching.hpp"
#include "pricelab/normalize.hpp"

namespace fixtures {

inline std::string path(const std::string& name) { return std::string(PRICELAB_FIXTURES) + "/" + name; }

inline std::vector<std::map<std::string, std::string>> read_rows(const std::string& name) {
    std::ifstream in(path(name), std::ios::binary);
    if (!in) throw std::runtime_error("missing fixture " + name);
    pricelab::csv::Reader reader(in);
    pricelab::csv::Row header, row;
    reader.next(header);
    std::vector<std::map<std::string, std::string>> out;
    while (reader.next(row)) {
        std::map<std::string, std::string> m;
        for (std::size_t i = 0; i < header.fields.size() && i < row.fields.size(); ++i) m[header.fields[i]] = row.fields[i];
        out.push_back(m);
    }
    return out;
}

inline std::optional<std::string> opt(const std::string& s) {
    return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

inline std::vector<pricelab::Observation> matching_observations() {
    std::vector<pricelab::Observation> out;
    for (auto& r : read_rows("matching_observations.csv"))
        out.push_back({opt(r["ean"]), opt(r["provider_id"]), pricelab::normalize_description(r["description"]), r["outlet_id"]});
    return out;
}

struct ExpectedLink {
    std::optional<std::string> ean, provider_id;
    std::string canonical_id, provenance;
    std::optional<double> score;
};

inline std::vector<ExpectedLink> matching_expected() {
    std::vector<ExpectedLink> out;
    for (auto& r : read_rows("matching_expected.csv"))
        out.push_back({opt(r["ean"]), opt(r["provider_id"]), r["canonical_id"], r["provenance"],
                       r["score"].empty() ? std::nullopt : std::optional<double>(std::stod(r["score"]))});
    return out;
}

// Compares a match table with the expected rows (fixture row i <-> observation i).
// Returns an empty string on success, else the first difference.
inline std::string compare_matching(const pricelab::MatchTable& table) {
    auto obs = matching_observations();
    auto expected = matching_expected();
    if (obs.size() != expected.size()) return "fixture size mismatch";
    if (table.size() != obs.size()) return "table has " + std::to_string(table.size()) + " rows";
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto* a = table.find(pricelab::key_of(obs[i]));
        if (!a) return "row " + std::to_string(i) + " unassigned";
        const auto& e = expected[i];
        if (e.ean != obs[i].ean || e.provider_id != obs[i].provider_id) return "fixture rows out of order at " + std::to_string(i);
        if (a->canonical_id != e.canonical_id) return "row " + std::to_string(i) + ": id " + a->canonical_id + " != " + e.canonical_id;
        if (pricelab::to_string(a->provenance) != e.provenance)
            return "row " + std::to_string(i) + ": provenance " + pricelab::to_string(a->provenance) + " != " + e.provenance;
        if (a->score.has_value() != e.score.has_value() || (e.score && std::abs(*a->score - *e.score) > 1e-12))
            return "row " + std::to_string(i) + ": score differs";
    }
    return {};
}

} // namespace fixtures
