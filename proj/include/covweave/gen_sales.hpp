#pragma once

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covweave/tokenizer.hpp"
#include "covweave/types.hpp"

namespace covweave {

// ===========================================================================
// Sales Report Analysis (SR)
//
// Money is carried in integer cents throughout so every aggregate is exact;
// percentages become doubles only at render time (2 decimals).
// ===========================================================================

enum class TargetBias { Exceed, Meet, Miss };
enum class GrowthBias { Positive, Neutral, Negative };

struct SalesScenario {
    std::string region;
    std::string fiscal_period;  // e.g. "2024-Q3"
    std::string currency = "USD";
    std::int64_t sales_target_cents = 0;
    std::int64_t prior_period_sales_cents = 0;
    std::vector<std::string> reps;
    std::vector<std::string> products;
    std::vector<std::string> cities;
};

struct BiasProfile {
    TargetBias target_achievement = TargetBias::Meet;
    GrowthBias growth = GrowthBias::Neutral;
    std::string anomalous_rep;      // empty = none
    std::string anomalous_product;  // empty = none
    double new_customer_rate = 0.3;
};

struct Transaction {
    std::string id;
    std::string date;  // ISO-8601
    std::string rep;
    std::string product;
    std::string city;
    bool new_customer = false;
    std::int64_t amount_cents = 0;
};

struct ConclusionQuery {
    std::string conclusion;
    std::string query;
    std::string answer;
    std::string facet;   // machine-checkable descriptor, e.g. "rep_total"
    std::string entity;  // entity the facet refers to, if any
};

inline std::string cents_to_str(std::int64_t cents) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%lld.%02lld", static_cast<long long>(cents / 100),
                  static_cast<long long>(cents % 100));
    return buf;
}

inline std::int64_t parse_cents(const std::string& s) {
    std::size_t dot = s.find('.');
    std::int64_t whole = std::stoll(s.substr(0, dot));
    std::int64_t frac = 0;
    if (dot != std::string::npos) {
        std::string f = s.substr(dot + 1);
        f.resize(2, '0');
        frac = std::stoll(f);
    }
    return whole * 100 + frac;
}

inline std::string pct_str(double pct) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f%%", pct);
    return buf;
}

namespace sr_detail {

inline const std::vector<std::string>& rep_first() {
    static const std::vector<std::string> v = {"Dana", "Omar", "Priya", "Lucas", "Mara", "Theo",
                                               "Nadia", "Felix", "Iris",  "Jonas", "Carla", "Ravi",
                                               "Elin",  "Hugo",  "Salma", "Peter", "Wanda", "Noel",
                                               "Aisha", "Bruno"};
    return v;
}

inline const std::vector<std::string>& rep_last() {
    static const std::vector<std::string> v = {"Wells",  "Fontaine", "Sharma", "Bergman", "Ortiz",
                                               "Klein",  "Haddad",   "Marsh",  "Novak",   "Lindqvist",
                                               "Russo",  "Pillai",   "Strand", "Keller",  "Amara",
                                               "Dvorak", "Ember",    "Quint",  "Sorel",   "Vance"};
    return v;
}

inline const std::vector<std::string>& product_brands() {
    static const std::vector<std::string> v = {"Apex",  "Nimbus", "Vertex", "Solara", "Kestrel",
                                               "Orion", "Breva",  "Tundra", "Lyric",  "Quarry"};
    return v;
}

inline const std::vector<std::string>& product_types() {
    static const std::vector<std::string> v = {"Router", "Console", "Printer", "Scanner",
                                               "Monitor", "Dock",   "Switch",  "Tablet"};
    return v;
}

inline const std::vector<std::string>& city_names() {
    static const std::vector<std::string> v = {
        "Brookfield", "Calverton", "Dunmore",  "Eastport", "Fairhaven", "Glenrock",
        "Harwick",    "Ironvale",  "Juneberg", "Kelsford", "Lakewood",  "Marlow",
        "Northcote",  "Oakdale",   "Pinecrest", "Quarrytown"};
    return v;
}

inline const std::vector<std::string>& regions() {
    static const std::vector<std::string> v = {"Northeast", "Southwest", "Midlands",
                                               "Pacific",   "Atlantic",  "Central"};
    return v;
}

// entity pool sizes per tier; scaled so target_count stays satisfiable at 8k
inline constexpr std::array<std::size_t, 4> kRepPool = {8, 12, 24, 40};
inline constexpr std::array<std::size_t, 4> kProductPool = {6, 8, 12, 20};
inline constexpr std::array<std::size_t, 4> kCityPool = {5, 6, 10, 16};

inline std::vector<std::string> unique_names(SeededStream& rng, std::size_t count,
                                             const std::vector<std::string>& first,
                                             const std::vector<std::string>& second,
                                             const std::string& joiner) {
    std::set<std::string> used;
    std::vector<std::string> out;
    while (out.size() < count) {
        std::string name = rng.pick(first) + joiner + rng.pick(second);
        if (used.insert(name).second) out.push_back(name);
    }
    return out;
}

}  // namespace sr_detail

inline SalesScenario build_sales_scenario(const AttributeSeed& seed, SeededStream& rng) {
    using namespace sr_detail;
    SalesScenario sc;
    sc.region = rng.pick(regions());
    int year = static_cast<int>(rng.range(2020, 2025));
    int quarter = static_cast<int>(rng.range(1, 4));
    sc.fiscal_period = std::to_string(year) + "-Q" + std::to_string(quarter);
    sc.sales_target_cents = rng.range(200000, 900000) * 100;

    std::size_t ti = tier_index(seed.tier);
    sc.reps = unique_names(rng, kRepPool[ti], rep_first(), rep_last(), " ");
    sc.products = unique_names(rng, kProductPool[ti], product_brands(), product_types(), " ");
    std::vector<std::string> cities = city_names();
    rng.shuffle(cities);
    cities.resize(kCityPool[ti]);
    sc.cities = cities;
    return sc;
}

inline BiasProfile build_bias_profile(const AttributeSeed& seed, const SalesScenario& sc,
                                      SeededStream& rng) {
    BiasProfile bias;
    auto pick3 = [&](double knob, int fallback) {
        int v = static_cast<int>(knob);
        return v >= 0 ? v : fallback;
    };
    bias.target_achievement = static_cast<TargetBias>(
        pick3(seed.knob("bias_achievement"), static_cast<int>(rng.below(3))));
    bias.growth =
        static_cast<GrowthBias>(pick3(seed.knob("bias_growth"), static_cast<int>(rng.below(3))));
    if (rng.chance(0.5)) bias.anomalous_rep = rng.pick(sc.reps);
    if (rng.chance(0.5)) bias.anomalous_product = rng.pick(sc.products);
    bias.new_customer_rate = seed.knob("new_customer_rate");
    return bias;
}

/// Synthesizes the transaction table. Amounts are first shaped
/// probabilistically by the bias profile, then a deterministic scaling pass
/// pins the total so the achievement bias holds by construction:
/// exceed >= 1.05 x target, miss <= 0.95 x target, meet within +/-5%.
inline std::vector<Transaction> gen_transactions(SalesScenario& scenario, const BiasProfile& bias,
                                                 std::int64_t record_count, SeededStream& rng) {
    if (record_count < 1) throw std::runtime_error("record_count must be >= 1");

    int year = std::stoi(scenario.fiscal_period.substr(0, 4));
    int quarter = scenario.fiscal_period.back() - '0';
    int first_month = (quarter - 1) * 3 + 1;

    std::vector<double> rep_weights(scenario.reps.size(), 1.0);
    for (std::size_t i = 0; i < scenario.reps.size(); ++i) {
        if (scenario.reps[i] == bias.anomalous_rep) rep_weights[i] = 2.5;
    }
    std::vector<double> product_weights(scenario.products.size(), 1.0);
    for (std::size_t i = 0; i < scenario.products.size(); ++i) {
        if (scenario.products[i] == bias.anomalous_product) product_weights[i] = 2.0;
    }

    std::vector<Transaction> txns;
    txns.reserve(static_cast<std::size_t>(record_count));
    for (std::int64_t i = 0; i < record_count; ++i) {
        Transaction t;
        char idbuf[24];
        std::snprintf(idbuf, sizeof(idbuf), "T%04lld", static_cast<long long>(i + 1));
        t.id = idbuf;
        int month = first_month + static_cast<int>(rng.below(3));
        int day = static_cast<int>(rng.range(1, 28));
        char datebuf[16];
        std::snprintf(datebuf, sizeof(datebuf), "%04d-%02d-%02d", year, month, day);
        t.date = datebuf;
        t.rep = scenario.reps[rng.pick_weighted(rep_weights)];
        t.product = scenario.products[rng.pick_weighted(product_weights)];
        t.city = rng.pick(scenario.cities);
        t.new_customer = rng.chance(bias.new_customer_rate);
        t.amount_cents = rng.range(80, 9000) * 100 + rng.range(0, 99);
        if (t.rep == bias.anomalous_rep) {
            t.amount_cents = t.amount_cents + t.amount_cents / 2;
        }
        txns.push_back(t);
    }

    // scaling pass: pin the total to the achievement bias
    double ratio = 0.0;
    switch (bias.target_achievement) {
        case TargetBias::Exceed: ratio = 1.06 + 0.20 * rng.unit_real(); break;
        case TargetBias::Meet: ratio = 0.96 + 0.08 * rng.unit_real(); break;
        case TargetBias::Miss: ratio = 0.72 + 0.20 * rng.unit_real(); break;
    }
    std::int64_t desired = static_cast<std::int64_t>(
        std::llround(ratio * static_cast<double>(scenario.sales_target_cents)));
    std::int64_t current = 0;
    for (const Transaction& t : txns) current += t.amount_cents;
    std::int64_t running = 0;
    for (Transaction& t : txns) {
        t.amount_cents = static_cast<std::int64_t>(
            static_cast<__int128>(t.amount_cents) * desired / current);
        if (t.amount_cents < 1) t.amount_cents = 1;
        running += t.amount_cents;
    }
    std::int64_t remainder = desired - running;
    for (std::size_t i = 0; remainder != 0 && i < txns.size(); ++i) {
        std::int64_t delta = remainder > 0 ? 1 : -1;
        if (txns[i].amount_cents + delta >= 1) {
            txns[i].amount_cents += delta;
            remainder -= delta;
        }
    }
    if (remainder != 0) throw std::logic_error("scaling pass failed to settle the total");

    // derive prior-period sales from the growth bias
    double growth = 0.0;
    switch (bias.growth) {
        case GrowthBias::Positive: growth = 0.06 + 0.24 * rng.unit_real(); break;
        case GrowthBias::Neutral: growth = -0.015 + 0.03 * rng.unit_real(); break;
        case GrowthBias::Negative: growth = -(0.06 + 0.19 * rng.unit_real()); break;
    }
    scenario.prior_period_sales_cents =
        static_cast<std::int64_t>(std::llround(static_cast<double>(desired) / (1.0 + growth)));
    return txns;
}

// ---------------------------------------------------------------------------
// Analytics (exact aggregation in cents)
// ---------------------------------------------------------------------------

struct SalesSummary {
    std::int64_t total_cents = 0;
    std::size_t txn_count = 0;
    double attainment_pct = 0.0;
    double growth_pct = 0.0;
    std::int64_t avg_txn_cents = 0;
    std::vector<std::pair<std::string, std::int64_t>> rep_totals;
    std::vector<std::pair<std::string, std::size_t>> rep_counts;
    std::string top_rep, bottom_rep;  // among reps present in the table
    std::vector<std::pair<std::string, std::int64_t>> product_revenue;
    std::vector<std::pair<std::string, double>> product_share_pct;
    std::string top_product;
    std::vector<std::pair<std::string, std::int64_t>> city_revenue;
    std::vector<std::pair<std::string, std::size_t>> city_counts;
    std::string top_city;
    std::size_t new_count = 0, existing_count = 0;
    std::int64_t new_revenue_cents = 0;
    double new_txn_pct = 0.0;
    double new_revenue_share_pct = 0.0;
};

inline SalesSummary analyze(const std::vector<Transaction>& txns, const SalesScenario& scenario) {
    if (txns.empty()) throw std::runtime_error("transaction table is empty");
    SalesSummary s;
    s.txn_count = txns.size();
    std::map<std::string, std::int64_t> by_rep, by_product, by_city;
    std::map<std::string, std::size_t> rep_n, city_n;
    for (const Transaction& t : txns) {
        s.total_cents += t.amount_cents;
        by_rep[t.rep] += t.amount_cents;
        ++rep_n[t.rep];
        by_product[t.product] += t.amount_cents;
        by_city[t.city] += t.amount_cents;
        ++city_n[t.city];
        if (t.new_customer) {
            ++s.new_count;
            s.new_revenue_cents += t.amount_cents;
        } else {
            ++s.existing_count;
        }
    }
    s.attainment_pct = 100.0 * static_cast<double>(s.total_cents) /
                       static_cast<double>(scenario.sales_target_cents);
    s.growth_pct = 100.0 *
                   (static_cast<double>(s.total_cents) -
                    static_cast<double>(scenario.prior_period_sales_cents)) /
                   static_cast<double>(scenario.prior_period_sales_cents);
    s.avg_txn_cents = (s.total_cents + static_cast<std::int64_t>(s.txn_count) / 2) /
                      static_cast<std::int64_t>(s.txn_count);

    for (const std::string& rep : scenario.reps) {
        s.rep_totals.emplace_back(rep, by_rep.count(rep) ? by_rep[rep] : 0);
        s.rep_counts.emplace_back(rep, rep_n.count(rep) ? rep_n[rep] : 0);
    }
    for (const std::string& p : scenario.products) {
        std::int64_t rev = by_product.count(p) ? by_product[p] : 0;
        s.product_revenue.emplace_back(p, rev);
        s.product_share_pct.emplace_back(
            p, 100.0 * static_cast<double>(rev) / static_cast<double>(s.total_cents));
    }
    for (const std::string& c : scenario.cities) {
        s.city_revenue.emplace_back(c, by_city.count(c) ? by_city[c] : 0);
        s.city_counts.emplace_back(c, city_n.count(c) ? city_n[c] : 0);
    }

    // top/bottom among entities present in the table; ties resolve to the
    // lexicographically first name so recomputation from the CSV is unambiguous
    auto best = [](const std::map<std::string, std::int64_t>& m, bool top) {
        std::string name;
        std::int64_t v = 0;
        bool first = true;
        for (const auto& [k, amount] : m) {
            if (first || (top ? amount > v : amount < v)) {
                name = k;
                v = amount;
                first = false;
            }
        }
        return name;
    };
    s.top_rep = best(by_rep, true);
    s.bottom_rep = best(by_rep, false);
    s.top_product = best(by_product, true);
    s.top_city = best(by_city, true);

    s.new_txn_pct = 100.0 * static_cast<double>(s.new_count) / static_cast<double>(s.txn_count);
    s.new_revenue_share_pct =
        100.0 * static_cast<double>(s.new_revenue_cents) / static_cast<double>(s.total_cents);
    return s;
}

// ---------------------------------------------------------------------------
// Conclusion-query derivation
// ---------------------------------------------------------------------------

/// Prioritized selection over facets: a fixed overall head, then per-entity
/// streams round-robined across rep/product/geo/segment facets.
inline std::vector<ConclusionQuery> derive_cq_pairs(const SalesSummary& s,
                                                    const SalesScenario& sc,
                                                    std::int64_t target_count) {
    std::vector<ConclusionQuery> all;
    std::string total_str = cents_to_str(s.total_cents) + " " + sc.currency;
    std::string target_str = cents_to_str(sc.sales_target_cents) + " " + sc.currency;
    std::string prior_str = cents_to_str(sc.prior_period_sales_cents) + " " + sc.currency;

    all.push_back({"Total sales reached " + total_str + " against a target of " + target_str + ".",
                   "What percentage of the sales target was achieved?", pct_str(s.attainment_pct),
                   "attainment", ""});
    all.push_back({"Sales moved from " + prior_str + " in the prior period to " + total_str + ".",
                   "What was the period-over-period sales growth, in percent?",
                   pct_str(s.growth_pct), "growth", ""});
    all.push_back({"The period closed at " + total_str + " in recognized revenue.",
                   "What was the total sales amount, in " + sc.currency + "?", total_str, "total",
                   ""});
    all.push_back({"The book of business averaged " + cents_to_str(s.avg_txn_cents) + " " +
                       sc.currency + " per transaction.",
                   "What was the average transaction value, in " + sc.currency + "?",
                   cents_to_str(s.avg_txn_cents) + " " + sc.currency, "avg_txn", ""});
    all.push_back({"The table records " + std::to_string(s.txn_count) + " transactions.",
                   "How many transactions were recorded?", std::to_string(s.txn_count), "txn_count",
                   ""});
    all.push_back({"Representative " + s.top_rep + " led the leaderboard this period.",
                   "Which representative appearing in the table generated the highest total "
                   "revenue?",
                   s.top_rep, "top_rep", ""});
    all.push_back({"Representative " + s.bottom_rep + " closed the least revenue of those active.",
                   "Which representative appearing in the table generated the lowest total revenue?",
                   s.bottom_rep, "bottom_rep", ""});
    all.push_back({"Product " + s.top_product + " out-earned every other line.",
                   "Which product generated the most revenue?", s.top_product, "top_product", ""});
    all.push_back({"City " + s.top_city + " recorded the strongest sales.",
                   "Which city recorded the highest revenue?", s.top_city, "top_city", ""});
    all.push_back({"New customers produced " + std::to_string(s.new_count) + " of the " +
                       std::to_string(s.txn_count) + " transactions.",
                   "What percentage of transactions came from new customers?",
                   pct_str(s.new_txn_pct), "new_txn_pct", ""});
    all.push_back({"New-customer revenue share stood at " + pct_str(s.new_revenue_share_pct) + ".",
                   "What share of total revenue came from new customers, in percent?",
                   pct_str(s.new_revenue_share_pct), "new_revenue_share", ""});

    // per-entity facet streams, round-robined
    std::vector<std::vector<ConclusionQuery>> streams;
    {
        std::vector<ConclusionQuery> rep_totals, rep_counts, product_rev, product_share, city_rev,
            city_counts;
        for (const auto& [rep, cents] : s.rep_totals) {
            std::string amount = cents_to_str(cents) + " " + sc.currency;
            rep_totals.push_back({"Representative " + rep + " produced " + amount +
                                      " across the period.",
                                  "What was the total revenue credited to " + rep + ", in " +
                                      sc.currency + "?",
                                  amount, "rep_total", rep});
        }
        for (const auto& [rep, n] : s.rep_counts) {
            rep_counts.push_back({"Representative " + rep + " handled " + std::to_string(n) +
                                      " transactions.",
                                  "How many transactions did " + rep + " handle?",
                                  std::to_string(n), "rep_count", rep});
        }
        for (const auto& [p, cents] : s.product_revenue) {
            std::string amount = cents_to_str(cents) + " " + sc.currency;
            product_rev.push_back({"Product " + p + " booked " + amount + " in revenue.",
                                   "What was the total revenue for " + p + ", in " + sc.currency +
                                       "?",
                                   amount, "product_revenue", p});
        }
        for (const auto& [p, share] : s.product_share_pct) {
            product_share.push_back({"Product " + p + " contributed " + pct_str(share) +
                                         " of total revenue.",
                                     "What percentage of total revenue came from " + p + "?",
                                     pct_str(share), "product_share", p});
        }
        for (const auto& [c, cents] : s.city_revenue) {
            std::string amount = cents_to_str(cents) + " " + sc.currency;
            city_rev.push_back({"City " + c + " accounted for " + amount + " of sales.",
                                "What was the total revenue recorded in " + c + ", in " +
                                    sc.currency + "?",
                                amount, "city_revenue", c});
        }
        for (const auto& [c, n] : s.city_counts) {
            city_counts.push_back({"City " + c + " saw " + std::to_string(n) + " transactions.",
                                   "How many transactions occurred in " + c + "?",
                                   std::to_string(n), "city_count", c});
        }
        streams = {rep_totals, product_rev, city_rev, rep_counts, product_share, city_counts};
    }
    std::vector<std::size_t> cursors(streams.size(), 0);
    bool more = true;
    while (more) {
        more = false;
        for (std::size_t f = 0; f < streams.size(); ++f) {
            if (cursors[f] < streams[f].size()) {
                all.push_back(streams[f][cursors[f]++]);
                more = true;
            }
        }
    }

    if (target_count > static_cast<std::int64_t>(all.size())) {
        throw std::runtime_error("target_count too large");
    }
    all.resize(static_cast<std::size_t>(target_count));
    return all;
}

// ---------------------------------------------------------------------------
// CSV rendering (RFC-4180-style quoting, dot decimals, ISO dates)
// ---------------------------------------------------------------------------

inline std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string render_sales_csv(const std::vector<Transaction>& txns) {
    std::string out = "id,date,rep,product,city,customer_type,amount\n";
    for (const Transaction& t : txns) {
        out += csv_field(t.id) + "," + csv_field(t.date) + "," + csv_field(t.rep) + "," +
               csv_field(t.product) + "," + csv_field(t.city) + "," +
               (t.new_customer ? "new" : "existing") + "," + cents_to_str(t.amount_cents) + "\n";
    }
    return out;
}

inline std::vector<Transaction> parse_sales_csv(const std::string& text) {
    std::vector<Transaction> txns;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    field += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(field);
                field.clear();
            } else {
                field += c;
            }
        }
        fields.push_back(field);
        if (fields.size() != 7) throw std::runtime_error("malformed CSV row: " + line);
        Transaction t;
        t.id = fields[0];
        t.date = fields[1];
        t.rep = fields[2];
        t.product = fields[3];
        t.city = fields[4];
        t.new_customer = fields[5] == "new";
        t.amount_cents = parse_cents(fields[6]);
        txns.push_back(t);
    }
    return txns;
}

// ---------------------------------------------------------------------------
// Instance assembly
// ---------------------------------------------------------------------------

struct SalesBundle {
    SalesScenario scenario;
    BiasProfile bias;
    std::vector<Transaction> transactions;
    SalesSummary summary;
    std::vector<ConclusionQuery> pairs;
};

inline SalesBundle build_sales_bundle(const AttributeSeed& seed) {
    if (seed.task_kind != TaskKind::SR) throw std::runtime_error("seed is not SR");
    auto rng = seed.stream("sr");
    SalesBundle b;
    b.scenario = build_sales_scenario(seed, rng);
    b.bias = build_bias_profile(seed, b.scenario, rng);
    b.transactions = gen_transactions(b.scenario, b.bias, seed.knob_int("record_count"), rng);
    b.summary = analyze(b.transactions, b.scenario);
    b.pairs = derive_cq_pairs(b.summary, b.scenario, seed.knob_int("target_count"));
    return b;
}

inline std::string render_sales_answer_block(std::size_t index1, const ConclusionQuery& cq) {
    static const char* closers[4] = {
        "The figure is computed directly from the recorded transactions for the period.",
        "The underlying rows of the transaction table support this figure without adjustment.",
        "This value follows from aggregating the table exactly as recorded.",
        "No corrections were applied; the table fully accounts for this result.",
    };
    return "Q" + std::to_string(index1) + ": " + cq.query + "\nAnswer: " + cq.answer + ". " +
           cq.conclusion + " " + closers[index1 % 4] + "\n\n";
}

inline TaskInstance gen_sales(const AttributeSeed& seed) {
    SalesBundle b = build_sales_bundle(seed);

    TaskInstance inst;
    inst.id = instance_id(seed);
    inst.task_kind = seed.task_kind;
    inst.tier = seed.tier;
    inst.seed = seed;

    std::string material = "Sales scenario: region " + b.scenario.region + ", fiscal period " +
                           b.scenario.fiscal_period + ", currency " + b.scenario.currency +
                           ".\nSales target: " + cents_to_str(b.scenario.sales_target_cents) + " " +
                           b.scenario.currency + ". Prior period sales: " +
                           cents_to_str(b.scenario.prior_period_sales_cents) + " " +
                           b.scenario.currency + ".\n\nTransaction table (CSV):\n" +
                           render_sales_csv(b.transactions);
    inst.material = material;

    std::size_t target = seed.target_tokens();
    std::ostringstream instr;
    instr << "Write a sales report for this period that answers every numbered query below,\n"
          << "citing exact figures computed from the transaction table (percentages to 2 "
             "decimals).\n"
          << "Queries:\n";
    for (std::size_t i = 0; i < b.pairs.size(); ++i) {
        instr << "Q" << (i + 1) << ": " << b.pairs[i].query << "\n";
    }
    instr << "Your response must be approximately " << target << " tokens (about "
          << (target * 3) / 4 << " words) long.";
    inst.instruction = instr.str();

    std::string gold;
    for (std::size_t i = 0; i < b.pairs.size(); ++i) {
        const ConclusionQuery& cq = b.pairs[i];
        inst.constraints.push_back(Json{{"kind", "query"},
                                        {"index", i + 1},
                                        {"text", cq.query},
                                        {"conclusion", cq.conclusion}});
        inst.verifiers.push_back(Json{{"kind", "answer"},
                                      {"index", i + 1},
                                      {"text", cq.answer},
                                      {"query", cq.query},
                                      {"conclusion", cq.conclusion},
                                      {"facet", cq.facet},
                                      {"entity", cq.entity}});
        gold += render_sales_answer_block(i + 1, cq);
    }
    inst.meta["region"] = b.scenario.region;
    inst.meta["bias_achievement"] = static_cast<int>(b.bias.target_achievement);
    inst.meta["bias_growth"] = static_cast<int>(b.bias.growth);
    inst.meta["gold_tokens"] = count_tokens(gold);
    inst.check_invariants();
    return inst;
}

}  // namespace covweave
