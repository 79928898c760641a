#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"

#include "pricelab/decimal.hpp"
#include "pricelab/error.hpp"
#include "pricelab/ingest.hpp"
#include "pricelab/month.hpp"

namespace pricelab {

struct PanelRecipe {
    int n_products = 20;
    int n_outlets = 1;
    int n_months = 13;
    int n_subgroups = 1;
    Month start = Month(2018, 12);
    double churn = 0.0;      // monthly disappearance probability
    double relaunch = 0.0;   // monthly probability of a new EAN for a live product
    double volatility = 0.0; // sd of monthly log-price steps
    double elasticity = -1.5; // quantity ~ price^elasticity; its sign sets the price-quantity correlation
    std::uint64_t seed = 1;

    void validate() const {
        if (n_products < 1 || n_outlets < 1 || n_months < 1 || n_subgroups < 1)
            throw UsageError("recipe counts must be positive");
        auto prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0)) throw UsageError(std::string("recipe ") + name + " must lie in [0, 1]");
        };
        prob(churn, "churn");
        prob(relaunch, "relaunch");
        if (!(volatility >= 0.0)) throw UsageError("recipe volatility must be non-negative");
    }

    static PanelRecipe from_json(const nlohmann::json& j) {
        PanelRecipe r;
        try {
            r.n_products = j.value("n_products", r.n_products);
            r.n_outlets = j.value("n_outlets", r.n_outlets);
            r.n_months = j.value("n_months", r.n_months);
            r.n_subgroups = j.value("n_subgroups", r.n_subgroups);
            if (j.contains("start")) {
                auto m = Month::parse(j.at("start").get<std::string>());
                if (!m) throw UsageError("recipe start must be YYYY-MM");
                r.start = *m;
            }
            r.churn = j.value("churn", r.churn);
            r.relaunch = j.value("relaunch", r.relaunch);
            r.volatility = j.value("volatility", r.volatility);
            r.elasticity = j.value("elasticity", r.elasticity);
            r.seed = j.value("seed", r.seed);
        } catch (const nlohmann::json::exception& e) {
            throw UsageError(std::string("malformed recipe: ") + e.what());
        }
        r.validate();
        return r;
    }

    nlohmann::json to_json() const {
        return {{"n_products", n_products}, {"n_outlets", n_outlets}, {"n_months", n_months},
                {"n_subgroups", n_subgroups}, {"start", start.str()},   {"churn", churn},
                {"relaunch", relaunch},     {"volatility", volatility}, {"elasticity", elasticity},
                {"seed", seed}};
    }
};

struct SyntheticPanel {
    std::vector<TransactionRecord> records;
    int initial_products = 0;
    int initial_survivors = 0; // initial cohort still on sale in the last month

    double survival_fraction() const {
        return initial_products == 0 ? 0.0 : static_cast<double>(initial_survivors) / initial_products;
    }
};

namespace detail {

inline constexpr const char* synth_words[] = {
    "MLEKO", "MASLO", "CUKIER", "RYZ", "KAWA", "HERBATA", "SOK", "WODA", "SER", "JOGURT",
    "CHLEB", "MAKARON", "OLEJ", "MAKA", "SOL", "DZEM", "MIOD", "KAKAO", "PLATKI", "BULKA"};
inline constexpr const char* synth_brands[] = {
    "LACIATE", "MLEKOVITA", "DIAMANT", "KUPIEC", "TCHIBO", "LIPTON", "TYMBARK", "ZYWIEC", "HOCHLAND", "DANONE"};

// Stateless draws keyed by (seed, stream, a, b) so every value is
// independent of iteration order.
inline std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t draw_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b) {
    return mix(mix(mix(mix(seed) ^ stream) ^ a) ^ b);
}

inline double uniform01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

inline double standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b) {
    double u1 = uniform01(draw_bits(seed, stream, a, 2 * b));
    double u2 = uniform01(draw_bits(seed, stream, a, 2 * b + 1));
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

} // namespace detail

// Geometric random-walk prices per product, quantity = demand * (p/p0)^e.
// A churned product leaves for good and a new product takes its slot the
// same month, so the panel stays populated. One record per (product,
// outlet, month); quantities are integers and turnover is rounded to cents.
inline SyntheticPanel generate(const PanelRecipe& recipe) {
    recipe.validate();
    enum Stream : std::uint64_t { base_price = 1, demand, walk, churn, relaunch, outlet_level };
    const std::uint64_t seed = recipe.seed;

    struct Product {
        int id;
        int born;
        int ean_version = 0;
        double log_price = 0.0;
        double base_price = 0.0;
        double demand = 0.0;
    };
    auto make_product = [&](int id, int born) {
        Product p{id, born};
        p.base_price = 1.0 + 9.0 * detail::uniform01(detail::draw_bits(seed, base_price, id, 0));
        p.demand = 5.0 + 95.0 * detail::uniform01(detail::draw_bits(seed, demand, id, 0));
        p.log_price = std::log(p.base_price);
        return p;
    };

    SyntheticPanel out;
    out.initial_products = recipe.n_products;
    std::vector<Product> live;
    for (int i = 0; i < recipe.n_products; ++i) live.push_back(make_product(i, 0));
    int next_id = recipe.n_products;

    for (int t = 0; t < recipe.n_months; ++t) {
        if (t > 0) {
            for (auto& p : live) {
                if (detail::uniform01(detail::draw_bits(seed, churn, p.id, t)) < recipe.churn) {
                    p = make_product(next_id++, t);
                    continue;
                }
                p.log_price += recipe.volatility * detail::standard_normal(seed, walk, p.id, t);
                if (detail::uniform01(detail::draw_bits(seed, relaunch, p.id, t)) < recipe.relaunch) ++p.ean_version;
            }
        }
        const Month month = recipe.start + t;
        for (const auto& p : live) {
            char ean[32];
            std::snprintf(ean, sizeof ean, "59%08d%02d", p.id, p.ean_version % 100);
            const std::string provider = "P" + std::to_string(p.id);
            const std::string description = std::string(detail::synth_words[p.id % 20]) + " " +
                                            detail::synth_brands[(p.id / 20) % 10] + " " + std::to_string(p.id) + " " +
                                            std::to_string(100 * (1 + p.id % 10)) + "G";
            const std::string subgroup = "SG" + std::to_string(p.id % recipe.n_subgroups);
            for (int o = 0; o < recipe.n_outlets; ++o) {
                const double outlet_factor =
                    1.0 + 0.1 * (detail::uniform01(detail::draw_bits(seed, outlet_level, p.id, o)) - 0.5);
                const double price = std::exp(p.log_price) * outlet_factor;
                const double relative = price / (p.base_price * outlet_factor);
                const double q = std::max(1.0, std::round(p.demand * std::pow(relative, recipe.elasticity)));
                TransactionRecord r;
                r.outlet_id = "S" + std::to_string(o + 1);
                r.month = month;
                r.ean = ean;
                r.provider_id = provider;
                r.description = description;
                r.quantity = Decimal::from_units(static_cast<std::int64_t>(q) * Decimal::scale);
                r.turnover = Decimal::from_units(static_cast<std::int64_t>(std::llround(price * q * 100.0)) * (Decimal::scale / 100));
                r.subgroup = subgroup;
                out.records.push_back(std::move(r));
            }
        }
    }
    for (const auto& p : live)
        if (p.born == 0) ++out.initial_survivors;
    return out;
}

} // namespace pricelab
