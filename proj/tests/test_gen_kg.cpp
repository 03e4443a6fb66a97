#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "covweave/gen_kg.hpp"

using namespace covweave;

namespace {

// Brute-force BFS oracle, queue-based over an explicit adjacency map; kept
// independent of the frontier-sweep implementation in the library.
std::set<int> bfs_oracle(const KnowledgeGraph& g, int radius) {
    std::map<int, std::set<int>> adj;
    for (const KgEdge& e : g.edges) {
        adj[e.src].insert(e.dst);
        adj[e.dst].insert(e.src);
    }
    std::set<int> seen = {g.protagonist.node_id};
    std::queue<std::pair<int, int>> q;
    q.push({g.protagonist.node_id, 0});
    while (!q.empty()) {
        auto [u, d] = q.front();
        q.pop();
        if (d == radius) continue;
        for (int v : adj[u]) {
            if (!seen.count(v)) {
                seen.insert(v);
                q.push({v, d + 1});
            }
        }
    }
    return seen;
}

}  // namespace

TEST_CASE("relation table is co-complete and round-trips through JSON") {
    RelationTable table = default_relation_table();
    CHECK_NOTHROW(validate_relation_table(table));
    CHECK(table.rules.size() >= 12);
    CHECK(table.archetypes.size() >= 3);

    RelationTable back = relation_table_from_json(relation_table_to_json(table));
    CHECK(back.rules.size() == table.rules.size());
    CHECK(back.archetypes == table.archetypes);
    CHECK(back.attr_templates == table.attr_templates);

    RelationTable broken = table;
    broken.rules[0].sentence_template.clear();
    CHECK_THROWS(validate_relation_table(broken));
}

TEST_CASE("expand_graph minimal budget") {
    auto seed = make_seed(TaskKind::BioG, Tier::T1k, 4, {{"triple_count", 1.0}});
    KnowledgeGraph g = expand_graph(seed);
    CHECK(g.edges.size() == 1);
    CHECK(g.nodes.size() == 2);
    CHECK((g.edges[0].src == g.protagonist.node_id || g.edges[0].dst == g.protagonist.node_id));
}

TEST_CASE("expand_graph determinism") {
    auto seed = make_seed(TaskKind::BioG, Tier::T1k, 77);
    KnowledgeGraph a = expand_graph(seed);
    KnowledgeGraph b = expand_graph(seed);
    REQUIRE(a.nodes.size() == b.nodes.size());
    REQUIRE(a.edges.size() == b.edges.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        CHECK(a.nodes[i].name == b.nodes[i].name);
        CHECK(a.nodes[i].kind == b.nodes[i].kind);
        CHECK(a.nodes[i].attrs == b.nodes[i].attrs);
    }
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        CHECK(a.edges[i].src == b.edges[i].src);
        CHECK(a.edges[i].dst == b.edges[i].dst);
        CHECK(a.edges[i].relation == b.edges[i].relation);
    }
}

TEST_CASE("temporal invariants hold over 100 random graphs") {
    for (std::uint64_t s = 0; s < 100; ++s) {
        auto seed = make_seed(TaskKind::BioG, Tier::T1k, s, {{"triple_count", 12.0}});
        KnowledgeGraph g = expand_graph(seed);
        INFO("seed " << s);
        CHECK(validate_temporal(g).empty());
        // person lifespans exist and phases partition them
        const KgNode& hero = g.node(g.protagonist.node_id);
        CHECK(hero.era.lo < hero.era.hi);
        CHECK(g.protagonist.phases.front().span.lo == hero.era.lo);
        CHECK(g.protagonist.phases.back().span.hi == hero.era.hi);
        for (std::size_t i = 0; i + 1 < g.protagonist.phases.size(); ++i) {
            CHECK(g.protagonist.phases[i].span.hi + 1 == g.protagonist.phases[i + 1].span.lo);
        }
    }
}

TEST_CASE("extract_subgraph radius semantics") {
    auto seed = make_seed(TaskKind::BioG, Tier::T1k, 9, {{"triple_count", 15.0}});
    KnowledgeGraph g = expand_graph(seed);

    Subgraph r0 = extract_subgraph(g, 0);
    CHECK(r0.node_ids == std::vector<int>{g.protagonist.node_id});
    CHECK(r0.edge_indices.empty());

    Subgraph all = extract_subgraph(g, 64);
    CHECK(all.node_ids.size() == g.nodes.size());
    CHECK(all.edge_indices.size() == g.edges.size());
}

TEST_CASE("extract_subgraph matches brute-force BFS on 200 random graphs") {
    for (std::uint64_t s = 0; s < 200; ++s) {
        auto seed = make_seed(TaskKind::BioG, Tier::T1k, 1000 + s, {{"triple_count", 10.0}});
        KnowledgeGraph g = expand_graph(seed);
        int radius = static_cast<int>(s % 4);
        Subgraph sub = extract_subgraph(g, radius);
        std::set<int> expected = bfs_oracle(g, radius);
        std::set<int> actual(sub.node_ids.begin(), sub.node_ids.end());
        INFO("seed " << 1000 + s << " radius " << radius);
        CHECK(actual == expected);
    }
}

TEST_CASE("verbalize counting invariant and templates") {
    auto seed = make_seed(TaskKind::BioG, Tier::T1k, 42, {{"triple_count", 8.0}});
    KnowledgeGraph g = expand_graph(seed);
    Subgraph sub = extract_subgraph(g, 2);
    auto sentences = verbalize(g, sub);

    std::size_t attr_count = 0;
    for (int id : sub.node_ids) attr_count += g.node(id).attrs.size();
    CHECK(sentences.size() == sub.edge_indices.size() + attr_count);

    // every edge sentence names both endpoints and all edge attrs
    for (std::size_t i = 0; i < sub.edge_indices.size(); ++i) {
        const KgEdge& e = g.edges[sub.edge_indices[i]];
        const TripleSentence& ts = sentences[i];
        CHECK(ts.sentence.find(g.node(e.src).name) != std::string::npos);
        CHECK(ts.sentence.find(g.node(e.dst).name) != std::string::npos);
        for (const auto& [k, v] : e.attrs) {
            INFO(ts.sentence << " / " << k);
            CHECK(ts.sentence.find(v) != std::string::npos);
        }
        CHECK(ts.sentence.find('{') == std::string::npos);
    }
}

TEST_CASE("verbalize empty subgraph") {
    KnowledgeGraph g;
    KgNode hero;
    hero.id = 0;
    hero.kind = NodeKind::Person;
    hero.name = "Solo Person";
    hero.era = {1900, 1980};
    g.nodes.push_back(hero);
    g.protagonist.node_id = 0;
    Subgraph sub = extract_subgraph(g, 0);
    CHECK(verbalize(g, sub).empty());
}

TEST_CASE("gen_biog instance shape, pairing and determinism") {
    auto seed = make_seed(TaskKind::BioG, Tier::T1k, 6);
    TaskInstance a = gen_biog(seed);
    TaskInstance b = gen_biog(seed);
    CHECK(a.material == b.material);
    CHECK(a.verifiers == b.verifiers);
    REQUIRE(a.constraints.size() == a.verifiers.size());

    // every constraint triple appears in exactly one verifier sentence pairing
    for (std::size_t i = 0; i < a.constraints.size(); ++i) {
        const std::string subject = a.constraints[i].at("subject").get<std::string>();
        const std::string sentence = a.verifiers[i].at("text").get<std::string>();
        INFO(sentence);
        CHECK(sentence.find(subject) != std::string::npos);
    }

    auto t1 = make_seed(TaskKind::BioG, Tier::T1k, 1);
    auto t8 = make_seed(TaskKind::BioG, Tier::T8k, 1);
    CHECK(t8.knob_int("triple_count") > t1.knob_int("triple_count"));
}

TEST_CASE("gen_biog gold output lands near tier targets") {
    for (Tier tier : kAllTiers) {
        for (std::uint64_t s = 0; s < 3; ++s) {
            auto seed = make_seed(TaskKind::BioG, tier, 300 + s);
            TaskInstance inst = gen_biog(seed);
            double tokens = inst.meta["gold_tokens"].get<double>();
            double target = static_cast<double>(tier_target_tokens(tier));
            INFO(to_string(tier) << " seed " << 300 + s << " tokens " << tokens);
            CHECK(tokens >= 0.85 * target);
            CHECK(tokens <= 1.15 * target);
        }
    }
}
