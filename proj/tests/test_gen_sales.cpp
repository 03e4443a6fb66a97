#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "covweave/gen_sales.hpp"

using namespace covweave;

namespace {

// Independent recompute oracle: rebuilds every answer from the rendered
// instance alone (scenario lines + CSV), with its own aggregation code.
struct RecomputeOracle {
    std::int64_t target_cents = 0;
    std::int64_t prior_cents = 0;
    std::vector<Transaction> txns;

    explicit RecomputeOracle(const TaskInstance& inst) {
        const std::string& m = inst.material;
        auto grab = [&](const std::string& label) {
            std::size_t pos = m.find(label);
            REQUIRE(pos != std::string::npos);
            pos += label.size();
            std::size_t end = m.find(' ', pos);
            return parse_cents(m.substr(pos, end - pos));
        };
        target_cents = grab("Sales target: ");
        prior_cents = grab("Prior period sales: ");
        std::size_t csv_at = m.find("Transaction table (CSV):\n");
        REQUIRE(csv_at != std::string::npos);
        txns = parse_sales_csv(m.substr(csv_at + 25));
    }

    std::int64_t total() const {
        std::int64_t t = 0;
        for (const auto& x : txns) t += x.amount_cents;
        return t;
    }

    std::string answer(const std::string& facet, const std::string& entity) const {
        std::map<std::string, std::int64_t> rep_rev, product_rev, city_rev;
        std::map<std::string, std::int64_t> rep_n, city_n;
        std::int64_t new_rev = 0, new_n = 0;
        for (const auto& t : txns) {
            rep_rev[t.rep] += t.amount_cents;
            product_rev[t.product] += t.amount_cents;
            city_rev[t.city] += t.amount_cents;
            rep_n[t.rep] += 1;
            city_n[t.city] += 1;
            if (t.new_customer) {
                new_rev += t.amount_cents;
                new_n += 1;
            }
        }
        auto arg_best = [](const std::map<std::string, std::int64_t>& m, bool top) {
            std::string best;
            std::int64_t v = 0;
            bool first = true;
            for (const auto& [k, x] : m) {
                if (first || (top ? x > v : x < v)) {
                    best = k;
                    v = x;
                    first = false;
                }
            }
            return best;
        };
        double tot = static_cast<double>(total());
        std::int64_t n = static_cast<std::int64_t>(txns.size());
        if (facet == "attainment") return pct_str(100.0 * tot / static_cast<double>(target_cents));
        if (facet == "growth") {
            return pct_str(100.0 * (tot - static_cast<double>(prior_cents)) /
                           static_cast<double>(prior_cents));
        }
        if (facet == "total") return cents_to_str(total()) + " USD";
        if (facet == "avg_txn") return cents_to_str((total() + n / 2) / n) + " USD";
        if (facet == "txn_count") return std::to_string(n);
        if (facet == "top_rep") return arg_best(rep_rev, true);
        if (facet == "bottom_rep") return arg_best(rep_rev, false);
        if (facet == "top_product") return arg_best(product_rev, true);
        if (facet == "top_city") return arg_best(city_rev, true);
        if (facet == "new_txn_pct") return pct_str(100.0 * static_cast<double>(new_n) / static_cast<double>(n));
        if (facet == "new_revenue_share") return pct_str(100.0 * static_cast<double>(new_rev) / tot);
        if (facet == "rep_total") return cents_to_str(rep_rev.count(entity) ? rep_rev[entity] : 0) + " USD";
        if (facet == "rep_count") return std::to_string(rep_n.count(entity) ? rep_n[entity] : 0);
        if (facet == "product_revenue") {
            return cents_to_str(product_rev.count(entity) ? product_rev[entity] : 0) + " USD";
        }
        if (facet == "product_share") {
            double rev = product_rev.count(entity) ? static_cast<double>(product_rev[entity]) : 0.0;
            return pct_str(100.0 * rev / tot);
        }
        if (facet == "city_revenue") {
            return cents_to_str(city_rev.count(entity) ? city_rev[entity] : 0) + " USD";
        }
        if (facet == "city_count") return std::to_string(city_n.count(entity) ? city_n[entity] : 0);
        FAIL("unknown facet " << facet);
        return "";
    }
};

double pct_value(const std::string& s) { return std::stod(s.substr(0, s.size() - 1)); }

}  // namespace

TEST_CASE("money helpers") {
    CHECK(cents_to_str(123456) == "1234.56");
    CHECK(cents_to_str(100) == "1.00");
    CHECK(cents_to_str(5) == "0.05");
    CHECK(parse_cents("1234.56") == 123456);
    CHECK(parse_cents("7") == 700);
    CHECK(parse_cents("7.5") == 750);
}

TEST_CASE("analyze hand arithmetic") {
    SalesScenario sc;
    sc.sales_target_cents = 100000;
    sc.prior_period_sales_cents = 40000;
    sc.reps = {"A Rep", "B Rep"};
    sc.products = {"P1", "P2"};
    sc.cities = {"C1"};
    std::vector<Transaction> txns = {
        {"T0001", "2024-01-05", "A Rep", "P1", "C1", true, 10000},
        {"T0002", "2024-01-06", "B Rep", "P2", "C1", false, 30000},
    };
    SalesSummary s = analyze(txns, sc);
    CHECK(s.total_cents == 40000);
    CHECK(s.avg_txn_cents == 20000);  // average of 100 and 300 dollars -> 200
    CHECK(s.attainment_pct == Catch::Approx(40.0));
    CHECK(s.growth_pct == Catch::Approx(0.0));
    CHECK(s.top_rep == "B Rep");
    CHECK(s.bottom_rep == "A Rep");
    CHECK(s.new_count == 1);
    CHECK(s.new_revenue_cents == 10000);

    // order independence: reversed table gives identical totals
    std::vector<Transaction> rev(txns.rbegin(), txns.rend());
    SalesSummary s2 = analyze(rev, sc);
    CHECK(s2.total_cents == s.total_cents);
    CHECK(s2.rep_totals == s.rep_totals);

    // product shares sum to 100
    double share_sum = 0.0;
    for (const auto& [p, share] : s.product_share_pct) share_sum += share;
    CHECK(share_sum == Catch::Approx(100.0).margin(1e-9));
}

TEST_CASE("single transaction total") {
    auto seed = make_seed(TaskKind::SR, Tier::T1k, 3, {{"record_count", 1.0}});
    auto rng = seed.stream("sr");
    SalesScenario sc = build_sales_scenario(seed, rng);
    BiasProfile bias = build_bias_profile(seed, sc, rng);
    auto txns = gen_transactions(sc, bias, 1, rng);
    REQUIRE(txns.size() == 1);
    SalesSummary s = analyze(txns, sc);
    CHECK(s.total_cents == txns[0].amount_cents);
}

TEST_CASE("bias hard constraints hold on 100 random scenarios") {
    int exceed_seen = 0, miss_seen = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        auto seed = make_seed(TaskKind::SR, Tier::T1k, s);
        SalesBundle b = build_sales_bundle(seed);
        double ratio = static_cast<double>(b.summary.total_cents) /
                       static_cast<double>(b.scenario.sales_target_cents);
        INFO("seed " << s << " ratio " << ratio);
        switch (b.bias.target_achievement) {
            case TargetBias::Exceed:
                CHECK(ratio >= 1.05);
                ++exceed_seen;
                break;
            case TargetBias::Meet:
                CHECK(ratio >= 0.95);
                CHECK(ratio <= 1.05);
                break;
            case TargetBias::Miss:
                CHECK(ratio <= 0.95);
                ++miss_seen;
                break;
        }
        double growth = static_cast<double>(b.summary.total_cents) -
                        static_cast<double>(b.scenario.prior_period_sales_cents);
        switch (b.bias.growth) {
            case GrowthBias::Positive: CHECK(growth > 0); break;
            case GrowthBias::Negative: CHECK(growth < 0); break;
            case GrowthBias::Neutral:
                CHECK(std::abs(b.summary.growth_pct) <= 5.0);
                break;
        }
        for (const Transaction& t : b.transactions) CHECK(t.amount_cents > 0);
    }
    CHECK(exceed_seen > 0);
    CHECK(miss_seen > 0);
}

TEST_CASE("bias knobs pin the profile") {
    auto seed = make_seed(TaskKind::SR, Tier::T1k, 5,
                          {{"bias_achievement", 0.0}, {"bias_growth", 2.0}});
    SalesBundle b = build_sales_bundle(seed);
    CHECK(b.bias.target_achievement == TargetBias::Exceed);
    CHECK(b.bias.growth == GrowthBias::Negative);
}

TEST_CASE("CSV round-trips") {
    auto seed = make_seed(TaskKind::SR, Tier::T1k, 17);
    SalesBundle b = build_sales_bundle(seed);
    std::string csv = render_sales_csv(b.transactions);
    auto parsed = parse_sales_csv(csv);
    REQUIRE(parsed.size() == b.transactions.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].id == b.transactions[i].id);
        CHECK(parsed[i].date == b.transactions[i].date);
        CHECK(parsed[i].rep == b.transactions[i].rep);
        CHECK(parsed[i].new_customer == b.transactions[i].new_customer);
        CHECK(parsed[i].amount_cents == b.transactions[i].amount_cents);
    }
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("derive_cq_pairs priority head and cardinality") {
    auto seed = make_seed(TaskKind::SR, Tier::T1k, 23);
    SalesBundle b = build_sales_bundle(seed);

    auto one = derive_cq_pairs(b.summary, b.scenario, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].facet == "attainment");

    auto many = derive_cq_pairs(b.summary, b.scenario, 12);
    CHECK(many.size() == 12);

    CHECK_THROWS_WITH(derive_cq_pairs(b.summary, b.scenario, 100000), "target_count too large");
}

TEST_CASE("every verifier answer matches independent recomputation (100 scenarios)") {
    for (std::uint64_t s = 0; s < 100; ++s) {
        auto seed = make_seed(TaskKind::SR, Tier::T1k, 2000 + s);
        TaskInstance inst = gen_sales(seed);
        RecomputeOracle oracle(inst);
        for (const Json& v : inst.verifiers) {
            std::string facet = v.at("facet").get<std::string>();
            std::string entity = v.value("entity", "");
            std::string expected = oracle.answer(facet, entity);
            std::string actual = v.at("text").get<std::string>();
            INFO("seed " << 2000 + s << " facet " << facet << " entity " << entity);
            if (!expected.empty() && expected.back() == '%') {
                CHECK(std::abs(pct_value(expected) - pct_value(actual)) <= 0.01);
            } else {
                CHECK(expected == actual);
            }
        }
    }
}

TEST_CASE("gen_sales determinism and tier scaling") {
    auto seed = make_seed(TaskKind::SR, Tier::T1k, 8);
    TaskInstance a = gen_sales(seed);
    TaskInstance b = gen_sales(seed);
    CHECK(a.material == b.material);
    CHECK(a.verifiers == b.verifiers);

    auto t1 = make_seed(TaskKind::SR, Tier::T1k, 1);
    auto t8 = make_seed(TaskKind::SR, Tier::T8k, 1);
    CHECK(t8.knob_int("record_count") > t1.knob_int("record_count"));
    CHECK(t8.knob_int("target_count") > t1.knob_int("target_count"));

    for (Tier tier : kAllTiers) {
        auto ts = make_seed(TaskKind::SR, tier, 71);
        TaskInstance inst = gen_sales(ts);
        double tokens = inst.meta["gold_tokens"].get<double>();
        double target = static_cast<double>(tier_target_tokens(tier));
        INFO(to_string(tier) << " tokens " << tokens);
        CHECK(tokens >= 0.85 * target);
        CHECK(tokens <= 1.15 * target);
    }
}
