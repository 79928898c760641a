#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "pricelab/matching.hpp"
#include "support/fixtures.hpp"

using namespace pricelab;

namespace {

Observation obs(std::optional<std::string> ean, std::optional<std::string> pid, const std::string& desc,
                const std::string& outlet = "S1") {
    return {std::move(ean), std::move(pid), normalize_description(desc), outlet};
}

std::string random_word(std::mt19937& rng, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<int> ch('A', 'F');
    std::string s;
    for (std::size_t n = len(rng); n > 0; --n) s += static_cast<char>(ch(rng));
    return s;
}

} // namespace

TEST(Jaro, UnitValues) {
    EXPECT_DOUBLE_EQ(jaro_similarity("ABC", "ABC"), 1.0);
    EXPECT_DOUBLE_EQ(jaro_similarity("ABC", "XYZ"), 0.0);
    EXPECT_NEAR(jaro_similarity("MARTHA", "MARHTA"), 0.9444444444444445, 1e-15);
    EXPECT_NEAR(winkler_score("MARTHA", "MARHTA", 0.1, 4), 0.9611111111111111, 1e-15);
    EXPECT_DOUBLE_EQ(jaro_similarity("", ""), 1.0);
    EXPECT_DOUBLE_EQ(jaro_similarity("A", ""), 0.0);
    // non-ASCII letters compare as single characters
    EXPECT_NEAR(jaro_similarity("SOK JABLKOWY", "SOK JABŁKOWY"), 0.9444444444444443, 1e-15);
}

TEST(Jaro, WinklerParameterRange) {
    EXPECT_THROW(winkler_score("A", "A", -0.01), UsageError);
    EXPECT_THROW(winkler_score("A", "A", 0.26), UsageError);
    EXPECT_NO_THROW(winkler_score("A", "A", 0.25));
    EXPECT_DOUBLE_EQ(winkler_score("ABCDEFGH", "ABCDEFGH", 0.25), 1.0);
}

TEST(Jaro, RandomProperties) {
    std::mt19937 rng(5);
    for (int k = 0; k < 5000; ++k) {
        auto a = random_word(rng, 9), b = random_word(rng, 9);
        const double j = jaro_similarity(a, b), jr = jaro_similarity(b, a);
        EXPECT_EQ(j, jr) << a << " " << b;
        EXPECT_GE(j, 0.0);
        EXPECT_LE(j, 1.0);
        const double w = winkler_score(a, b);
        EXPECT_GE(w, j);
        EXPECT_LE(w, 1.0);
        EXPECT_EQ(w, winkler_score(b, a));
        EXPECT_EQ(winkler_score(a, b, 0.0), j);
    }
}

TEST(Matching, SameEanDifferentDescriptions) {
    std::vector<Observation> o{obs("1", std::nullopt, "Mleko 1L"), obs("1", std::nullopt, "Milk whole 1L")};
    auto t = match_products(o);
    EXPECT_EQ(t.canonical_ids().size(), 1u);
    for (const auto& [k, a] : t.assignments()) EXPECT_EQ(a.provenance, Provenance::identifier);
}

TEST(Matching, RelaunchBySharedProviderId) {
    std::vector<Observation> o{obs("1", "P9", "Kawa 500g"), obs("2", "P9", "Kawa 500g")};
    auto t = match_products(o);
    EXPECT_EQ(t.canonical_ids(), (std::set<std::string>{"EAN:1"}));
}

TEST(Matching, BlockMismatchOnPercent) {
    std::vector<Observation> o{obs("1", std::nullopt, "MLEKO UHT 3.2 1L"), obs("2", std::nullopt, "MLEKO SWIEZE 2.0 1L")};
    EXPECT_NE(block_key(o[0]), block_key(o[1]));
    auto t = match_products(o, {.threshold = 0.0});
    EXPECT_EQ(t.canonical_ids().size(), 2u);
    EXPECT_EQ(t.linked_count(), 0u);
}

TEST(Matching, LimitedBlockingLinksNewSize) {
    std::vector<Observation> o{obs("1", std::nullopt, "Sok jablkowy 1L"), obs("2", std::nullopt, "Sok jablkowy 2L")};
    EXPECT_EQ(match_products(o).canonical_ids().size(), 2u);
    MatchOptions limited;
    limited.limited_blocking = true;
    EXPECT_EQ(match_products(o, limited).canonical_ids().size(), 1u);
}

TEST(Matching, CraftedFixtureTable) {
    auto t = match_products(fixtures::matching_observations());
    EXPECT_EQ(fixtures::compare_matching(t), "");
}

TEST(Matching, FixtureIsPermutationInvariant) {
    auto o = fixtures::matching_observations();
    std::mt19937 rng(2);
    for (int k = 0; k < 20; ++k) {
        std::shuffle(o.begin(), o.end(), rng);
        EXPECT_EQ(fixtures::compare_matching(match_products(o)), "");
    }
}

TEST(Matching, ThresholdMonotoneAndScoresAboveIt) {
    std::mt19937 rng(8);
    std::vector<Observation> o;
    std::uniform_int_distribution<int> size(1, 3);
    for (int i = 0; i < 60; ++i) {
        std::string desc = "SOK " + random_word(rng, 5) + " " + std::to_string(size(rng)) + "L";
        o.push_back(obs(std::to_string(1000 + i), std::nullopt, desc));
    }
    std::size_t previous = o.size() + 1;
    for (double th : {0.0, 0.5, 0.7, 0.8, 0.85, 0.9, 0.95, 0.99, 1.0}) {
        auto t = match_products(o, {.threshold = th});
        EXPECT_LE(t.linked_count(), previous) << th;
        previous = t.linked_count();
        for (const auto& [k, a] : t.assignments())
            if (a.provenance == Provenance::blocked_name) {
                ASSERT_TRUE(a.score);
                EXPECT_GE(*a.score, th);
            }
    }
    EXPECT_THROW(match_products(o, {.threshold = 1.5}), UsageError);
}

TEST(Matching, TableCsvRoundTrip) {
    auto t = match_products(fixtures::matching_observations());
    std::ostringstream out;
    t.write_csv(out);
    std::istringstream in(out.str());
    auto back = MatchTable::read_csv(in);
    EXPECT_EQ(fixtures::compare_matching(back), "");
    std::ostringstream again;
    back.write_csv(again);
    EXPECT_EQ(out.str(), again.str());
}

TEST(Matching, TableImportErrors) {
    std::istringstream missing("ean,description\n1,x\n");
    EXPECT_THROW(MatchTable::read_csv(missing), ConfigError);
    std::istringstream conflict("ean,provider_id,description,canonical_id\n1,,x,A\n1,,x,B\n");
    EXPECT_THROW(MatchTable::read_csv(conflict), DataError);
    std::istringstream bad("ean,provider_id,description,canonical_id,provenance\n1,,x,A,guess\n");
    EXPECT_THROW(MatchTable::read_csv(bad), DataError);
}
