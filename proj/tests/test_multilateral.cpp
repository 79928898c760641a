#include <random>

#include <gtest/gtest.h>

#include "pricelab/multilateral.hpp"
#include "pricelab/synth.hpp"
#include "pricelab/panel.hpp"
#include "support/oracle.hpp"

using namespace pricelab;

namespace {

const Month m0(2018, 12);

WindowSpec whole(const oracle::Table& t) { return {m0, static_cast<int>(t.months()), std::nullopt}; }

oracle::Table constant_table(std::size_t n, std::size_t months) {
    oracle::Table t;
    for (std::size_t i = 0; i < n; ++i) {
        t.p.push_back(std::vector<double>(months, 1.5 + static_cast<double>(i)));
        t.q.push_back(std::vector<double>(months, 2.0 + static_cast<double>(i % 3)));
    }
    return t;
}

// Balanced panel with equal expenditure shares inside each month.
oracle::Table equal_share_table(std::uint64_t seed, std::size_t n, std::size_t months) {
    auto t = oracle::random_table(seed, n, months);
    for (std::size_t z = 0; z < months; ++z) {
        const double spend = 100.0 + static_cast<double>(z);
        for (std::size_t i = 0; i < n; ++i) t.q[i][z] = spend / t.p[i][z];
    }
    return t;
}

} // namespace

TEST(Geks, MatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        const std::size_t n = 3 + seed % 10, months = 2 + seed % 6;
        auto table = oracle::random_table(seed, n, months, 0.85);
        auto panel = oracle::to_panel(table, m0);
        auto g = geks(panel, whole(table));
        auto c = ccdi(panel, whole(table));
        for (std::size_t z = 0; z < months; ++z) {
            const double og = oracle::geks(table, 0, months, 0, z), oc = oracle::ccdi(table, 0, months, 0, z);
            EXPECT_NEAR(g.value(m0 + static_cast<int>(z)), og, 1e-10 * og) << seed;
            EXPECT_NEAR(c.value(m0 + static_cast<int>(z)), oc, 1e-10 * oc) << seed;
        }
    }
}

TEST(Geks, TwoMonthWindowIsTheLink) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto table = oracle::random_table(seed, 6, 2, 0.8);
        auto panel = oracle::to_panel(table, m0);
        EXPECT_NEAR(geks(panel, whole(table)).value(m0 + 1), oracle::bilateral("fisher", table, 0, 1), 1e-14);
        EXPECT_NEAR(ccdi(panel, whole(table)).value(m0 + 1), oracle::bilateral("tornqvist", table, 0, 1), 1e-14);
    }
}

TEST(Multilateral, ConstantPanelIsOne) {
    auto table = constant_table(6, 13);
    auto panel = oracle::to_panel(table, m0);
    for (auto f : {Formula::geks, Formula::ccdi, Formula::gk, Formula::tpd}) {
        auto levels = multilateral_levels(panel, whole(table), {f, {}, {}});
        for (int z = 0; z < 13; ++z) EXPECT_NEAR(levels.ratio(m0, m0 + z), 1.0, 1e-12) << to_string(f);
    }
    auto gk = gk_solve(panel, whole(table));
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(gk.v.at(oracle::product_name(i)), table.p[i][0], 1e-12);
}

TEST(Multilateral, TransitivityAndIdentity) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto table = oracle::random_table(seed, 8, 5, 0.85);
        auto panel = oracle::to_panel(table, m0);
        for (auto f : {Formula::geks, Formula::ccdi, Formula::gk}) {
            auto w = multilateral_levels(panel, whole(table), {f, {}, {}});
            for (int a = 0; a < 5; ++a) {
                EXPECT_EQ(w.ratio(m0 + a, m0 + a), 1.0);
                for (int b = 0; b < 5; ++b)
                    for (int c = 0; c < 5; ++c) {
                        const double lhs = w.ratio(m0 + a, m0 + c), rhs = w.ratio(m0 + a, m0 + b) * w.ratio(m0 + b, m0 + c);
                        EXPECT_NEAR(lhs, rhs, 1e-10 * lhs);
                    }
            }
        }
    }
}

TEST(Geks, MissingLinkIsAnError) {
    oracle::Table t{{{1, 2, 0}, {0, 0, 3}}, {{1, 1, 0}, {0, 0, 1}}};
    auto panel = oracle::to_panel(t, m0);
    EXPECT_THROW(geks(panel, whole(t)), UndefinedIndexError);
    oracle::Table gap{{{1, 0, 1}}, {{1, 0, 1}}};
    EXPECT_THROW(geks(oracle::to_panel(gap, m0), whole(gap)), DataError);
    EXPECT_THROW(geks(oracle::to_panel(constant_table(2, 3), m0), {m0, 1, std::nullopt}), UsageError);
}

TEST(Geks, CloseToCcdiOnStablePanels) {
    PanelRecipe r;
    r.n_products = 40;
    r.n_months = 13;
    r.volatility = 0.01;
    r.seed = 21;
    auto synth = generate(r);
    MatchTable table;
    for (const auto& rec : synth.records)
        table.assign(key_of(observation_of(rec)), {"EAN:" + *rec.ean, Provenance::identifier, std::nullopt});
    auto panel = build_panel(synth.records, table).panel.pool();
    WindowSpec w{r.start, 13, std::nullopt};
    auto g = geks(panel, w), c = ccdi(panel, w);
    for (int z = 0; z < 13; ++z) EXPECT_NEAR(g.value(r.start + z), c.value(r.start + z), 5e-3);
}

TEST(GearyKhamis, MatchesFixedPointOracle) {
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        auto table = oracle::random_table(seed, 2 + seed % 12, 2 + seed % 7, 0.8);
        auto panel = oracle::to_panel(table, m0);
        auto sol = gk_solve(panel, whole(table));
        auto want = oracle::geary_khamis(table);
        for (std::size_t z = 0; z < table.months(); ++z)
            EXPECT_NEAR(sol.series.value(m0 + static_cast<int>(z)), want.index[z], 1e-8) << seed;
        for (std::size_t i = 0; i < table.products(); ++i)
            EXPECT_NEAR(sol.v.at(oracle::product_name(i)), want.v[i], 1e-8 * want.v[i]) << seed;
        EXPECT_LT(sol.residual, 1e-10);
        EXPECT_GT(sol.iterations, 0);
    }
}

TEST(GearyKhamis, SingleProductAndResidual) {
    oracle::Table t{{{2, 3}}, {{5, 9}}};
    auto sol = gk_solve(oracle::to_panel(t, m0), whole(t));
    EXPECT_NEAR(sol.series.value(m0 + 1), 1.5, 1e-12);
    // v = phi-weighted deflated price = 2 for a one-product panel
    EXPECT_NEAR(sol.v.at(oracle::product_name(0)), 2.0, 1e-10);

    auto table = oracle::random_table(77, 7, 6, 0.8);
    auto panel = oracle::to_panel(table, m0);
    auto s = gk_solve(panel, whole(table));
    // plug v back into the system
    for (std::size_t i = 0; i < 7; ++i) {
        double qsum = 0, v = 0;
        for (std::size_t z = 0; z < 6; ++z)
            if (table.seen(i, z)) qsum += table.q[i][z];
        for (std::size_t z = 0; z < 6; ++z)
            if (table.seen(i, z)) v += table.q[i][z] / qsum * table.p[i][z] / s.series.value(m0 + static_cast<int>(z));
        const double got = s.v.at(oracle::product_name(i));
        EXPECT_NEAR(v, got, 1e-9 * got);
    }
}

TEST(GearyKhamis, ConvergenceFailureCarriesResidual) {
    auto table = oracle::random_table(3, 6, 5, 0.8);
    try {
        gk_solve(oracle::to_panel(table, m0), whole(table), {1e-10, 2});
        FAIL();
    } catch (const ConvergenceError& e) {
        EXPECT_GT(e.residual(), 1e-10);
        EXPECT_EQ(e.exit_code(), ExitCode::numerical);
    }
    EXPECT_THROW(gk_solve(oracle::to_panel(table, m0), whole(table), {0.0, 10}), UsageError);
}

TEST(Tpd, MatchesNormalEquations) {
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        auto table = oracle::random_table(seed, 2 + seed % 12, 2 + seed % 7, 0.8);
        auto panel = oracle::to_panel(table, m0);
        auto sol = tpd(panel, whole(table));
        auto want = oracle::time_product_dummy(table, 0);
        EXPECT_EQ(sol.reference, oracle::product_name(0));
        EXPECT_NEAR(sol.intercept, want.alpha, 1e-8);
        for (std::size_t z = 0; z < table.months(); ++z) {
            EXPECT_NEAR(sol.delta.at(m0 + static_cast<int>(z)), want.delta[z], 1e-8) << seed;
            EXPECT_NEAR(sol.series.value(m0 + static_cast<int>(z)), want.index[z], 1e-8) << seed;
        }
        for (std::size_t i = 0; i < table.products(); ++i)
            EXPECT_NEAR(sol.gamma.at(oracle::product_name(i)), want.gamma[i], 1e-8) << seed;
    }
}

TEST(Tpd, WeightedResidualsAreOrthogonal) {
    auto table = oracle::random_table(5, 9, 6, 0.75);
    auto panel = oracle::to_panel(table, m0);
    auto sol = tpd(panel, whole(table));
    std::vector<double> total(6, 0.0);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t z = 0; z < 6; ++z)
            if (table.seen(i, z)) total[z] += table.p[i][z] * table.q[i][z];
    double intercept = 0;
    std::vector<double> by_month(6, 0.0), by_product(9, 0.0);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t z = 0; z < 6; ++z) {
            if (!table.seen(i, z)) continue;
            const double w = table.p[i][z] * table.q[i][z] / total[z];
            const double e = std::log(table.p[i][z]) - sol.intercept - sol.delta.at(m0 + static_cast<int>(z)) -
                             sol.gamma.at(oracle::product_name(i));
            intercept += w * e;
            by_month[z] += w * e;
            by_product[i] += w * e;
        }
    EXPECT_NEAR(intercept, 0.0, 1e-8);
    for (std::size_t z = 1; z < 6; ++z) EXPECT_NEAR(by_month[z], 0.0, 1e-8);
    for (std::size_t i = 1; i < 9; ++i) EXPECT_NEAR(by_product[i], 0.0, 1e-8);
}

TEST(Tpd, EqualSharesGiveJevons) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto table = equal_share_table(seed, 3 + seed % 8, 2 + seed % 6);
        auto panel = oracle::to_panel(table, m0);
        auto sol = tpd(panel, whole(table));
        for (std::size_t z = 0; z < table.months(); ++z) {
            const double j = oracle::bilateral("jevons", table, 0, z == 0 ? 0 : z);
            EXPECT_NEAR(sol.series.value(m0 + static_cast<int>(z)), z == 0 ? 1.0 : j, 1e-10);
        }
    }
}

TEST(Tpd, ReferenceProductInvariance) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto table = oracle::random_table(seed, 6, 5, 0.8);
        auto panel = oracle::to_panel(table, m0);
        auto a = tpd(panel, whole(table));
        auto b = tpd(panel, whole(table), {}, oracle::product_name(5));
        EXPECT_EQ(b.reference, oracle::product_name(5));
        EXPECT_EQ(b.gamma.at(oracle::product_name(5)), 0.0);
        for (int z = 0; z < 5; ++z) EXPECT_NEAR(a.series.value(m0 + z), b.series.value(m0 + z), 1e-10);
    }
    auto table = oracle::random_table(1, 3, 3);
    EXPECT_THROW(tpd(oracle::to_panel(table, m0), whole(table), {}, std::string("nope")), UsageError);
}

TEST(Tpd, SingleProductAndSingularDesign) {
    oracle::Table one{{{2, 3, 2.5}}, {{1, 7, 2}}};
    auto sol = tpd(oracle::to_panel(one, m0), whole(one));
    EXPECT_NEAR(sol.series.value(m0 + 1), 1.5, 1e-12);
    EXPECT_NEAR(sol.series.value(m0 + 2), 1.25, 1e-12);

    // products never share a month: time effects are not identified
    oracle::Table split{{{2, 0}, {0, 3}}, {{1, 0}, {0, 1}}};
    try {
        tpd(oracle::to_panel(split, m0), whole(split));
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("time:2019-01"), std::string::npos) << e.what();
    }
}

TEST(Multilateral, FiltersRestrictTheUniverse) {
    auto table = oracle::random_table(9, 10, 4);
    table.p[3][2] = table.p[3][1] * 5; // extreme relative
    auto panel = oracle::to_panel(table, m0);
    std::vector<FilterSpec> fs{FilterSpec::extreme_fixed(0.5, 2.0)};
    auto mask = detail::window_mask(panel, whole(table), fs);
    auto plain = detail::window_mask(panel, whole(table), {});
    EXPECT_EQ(plain[3][2], 1);
    EXPECT_LE(mask[3][2], plain[3][2]);
    // GEKS links and GK/TPD all run with filters
    for (auto f : {Formula::geks, Formula::ccdi, Formula::gk, Formula::tpd})
        EXPECT_NO_THROW(multilateral_levels(panel, whole(table), {f, fs, {}}));
}
