#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "pricelab/aggregation.hpp"

using namespace pricelab;

namespace {

const Month m0(2018, 12), m1(2019, 1);

CellData cell(double index, double w0, double wt) {
    CellData c;
    c.series = IndexSeries(m0);
    c.series.append(m0, 1.0);
    c.series.append(m1, index);
    c.base_expenditure = w0;
    c.expenditure[m0] = w0;
    c.expenditure[m1] = wt;
    return c;
}

CellIndexSet cells(const std::vector<double>& index, const std::vector<double>& w0, const std::vector<double>& wt) {
    CellIndexSet set{Partition::subgroup, {}};
    for (std::size_t i = 0; i < index.size(); ++i) set.cells["SG" + std::to_string(i)] = cell(index[i], w0[i], wt[i]);
    return set;
}

} // namespace

TEST(Aggregate, WorkedExamples) {
    auto set = cells({1.10, 1.20}, {50, 50}, {70, 70});
    EXPECT_NEAR(aggregate(set, AggFormula::laspeyres, m1), 1.15, 1e-15);
    // harmonic part 1 / (0.5/1.1 + 0.5/1.2)
    EXPECT_NEAR(aggregate(set, AggFormula::fisher, m1), 1.1489125293076057, 1e-15);
    EXPECT_EQ(aggregate(set, AggFormula::fisher, m0), 1.0);
}

TEST(Aggregate, EqualCellsAndSingleCell) {
    auto same = cells({1.07, 1.07, 1.07}, {1, 2, 3}, {4, 1, 9});
    EXPECT_NEAR(aggregate(same, AggFormula::laspeyres, m1), 1.07, 1e-15);
    EXPECT_NEAR(aggregate(same, AggFormula::fisher, m1), 1.07, 1e-15);
    auto one = cells({0.93}, {5}, {2});
    auto s = aggregate_series(one, AggFormula::fisher, m0, m1);
    EXPECT_EQ(s.value(m0), 1.0);
    EXPECT_NEAR(s.value(m1), 0.93, 1e-15);
}

TEST(Aggregate, BoundsAndFisherBelowLaspeyres) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> idx(0.6, 1.6), w(0.1, 100.0);
    for (int k = 0; k < 500; ++k) {
        const std::size_t n = 1 + k % 8;
        std::vector<double> p, w0, wt;
        for (std::size_t i = 0; i < n; ++i) {
            p.push_back(idx(rng));
            w0.push_back(w(rng));
            wt.push_back(w(rng));
        }
        const double lo = *std::min_element(p.begin(), p.end()), hi = *std::max_element(p.begin(), p.end());
        auto set = cells(p, w0, wt);
        for (auto f : {AggFormula::laspeyres, AggFormula::fisher}) {
            const double v = aggregate(set, f, m1);
            EXPECT_GE(v, lo * (1 - 1e-12));
            EXPECT_LE(v, hi * (1 + 1e-12));
        }
        // same shares in both months: arithmetic mean >= harmonic mean
        auto fixed = cells(p, w0, w0);
        const double la = aggregate(fixed, AggFormula::laspeyres, m1), fi = aggregate(fixed, AggFormula::fisher, m1);
        if (n > 1) EXPECT_LT(fi, la);
        else EXPECT_NEAR(fi, la, 1e-15);
    }
}

TEST(Aggregate, MissingCells) {
    auto set = cells({1.10, 1.20, 1.30}, {1, 1, 2}, {1, 1, 2});
    set.cells["SG1"].series = IndexSeries(m0);
    set.cells["SG1"].series.append(m0, 1.0);
    set.cells["SG2"].series = IndexSeries(m0);
    try {
        aggregate(set, AggFormula::laspeyres, m1);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("SG1, SG2"), std::string::npos) << e.what();
    }
    EXPECT_NEAR(aggregate(set, AggFormula::laspeyres, m1, true), 1.10, 1e-15);
    set.cells.erase("SG0");
    EXPECT_THROW(aggregate(set, AggFormula::laspeyres, m1, true), UndefinedIndexError);
}

TEST(Aggregate, RenormalizedWeights) {
    auto set = cells({1.0, 2.0, 4.0}, {1, 1, 2}, {1, 3, 2});
    set.cells["SG2"].expenditure.erase(m1); // Fisher needs current spend
    EXPECT_NEAR(aggregate(set, AggFormula::fisher, m1, true),
                std::sqrt(1.5 / (0.25 / 1.0 + 0.75 / 2.0)), 1e-15);
    EXPECT_THROW(aggregate(set, AggFormula::fisher, m1), DataError);
    EXPECT_NEAR(aggregate(set, AggFormula::laspeyres, m1), 0.25 + 0.5 + 2.0, 1e-15);
}

TEST(Aggregate, Names) {
    for (auto p : {Partition::none, Partition::subgroup, Partition::outlet, Partition::both})
        EXPECT_EQ(parse_partition(to_string(p)), p);
    EXPECT_EQ(parse_agg_formula("fisher"), AggFormula::fisher);
    EXPECT_THROW(parse_agg_formula("tornqvist"), UsageError);
    EXPECT_THROW(parse_partition("chain"), UsageError);
}
