#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covweave/tokenizer.hpp"
#include "covweave/types.hpp"

namespace covweave {

// ===========================================================================
// Knowledge graph model (BioG)
// ===========================================================================

enum class NodeKind { Person, Organization, Place, Work, Event };

inline std::string to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Person: return "Person";
        case NodeKind::Organization: return "Organization";
        case NodeKind::Place: return "Place";
        case NodeKind::Work: return "Work";
        case NodeKind::Event: return "Event";
    }
    throw std::runtime_error("unknown node kind");
}

struct YearSpan {
    int lo = 0;
    int hi = 0;
    bool contains(int y) const { return y >= lo && y <= hi; }
};

struct KgNode {
    int id = 0;
    NodeKind kind = NodeKind::Person;
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;  // non-name attributes
    YearSpan era;  // lifespan for persons, active span otherwise
};

struct KgEdge {
    int src = 0;
    int dst = 0;
    std::string relation;
    std::vector<std::pair<std::string, std::string>> attrs;  // role/year/degree/amount

    std::string attr(const std::string& key) const {
        for (const auto& [k, v] : attrs) {
            if (k == key) return v;
        }
        return "";
    }
};

struct LifePhase {
    std::string name;
    YearSpan span;
};

struct Protagonist {
    int node_id = 0;
    std::string archetype;
    std::string background;
    std::vector<LifePhase> phases;  // partition the lifespan, in order
};

struct KnowledgeGraph {
    std::vector<KgNode> nodes;
    std::vector<KgEdge> edges;
    Protagonist protagonist;

    const KgNode& node(int id) const { return nodes[static_cast<std::size_t>(id)]; }
};

struct Subgraph {
    std::vector<int> node_ids;            // insertion order of the parent graph
    std::vector<std::size_t> edge_indices;  // indices into graph.edges, in order
};

struct TripleSentence {
    std::string subject;
    std::string predicate;
    std::string object;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::string sentence;
    std::string template_id;
};

// ===========================================================================
// Relation map and templates (versioned data table, overridable via file)
// ===========================================================================

struct RelationRule {
    std::string relation;
    NodeKind src_kind = NodeKind::Person;
    NodeKind dst_kind = NodeKind::Person;
    std::vector<std::string> phases;     // allowed life phases when src is a person
    std::vector<std::string> edge_attrs;  // subset of {role, year, degree, amount}
    std::string sentence_template;        // placeholders {src} {dst} {role} {year} {degree} {amount}
    double base_weight = 1.0;
};

struct RelationTable {
    int version = 1;
    std::vector<RelationRule> rules;
    // archetype -> relation -> weight multiplier (unlisted default to 1.0)
    std::map<std::string, std::map<std::string, double>> propensities;
    // "<Kind>.<attr>" -> sentence template with {name} and {value}
    std::map<std::string, std::string> attr_templates;
    std::vector<std::string> archetypes;
};

inline RelationTable default_relation_table() {
    RelationTable t;
    t.version = 1;
    auto P = NodeKind::Person;
    auto O = NodeKind::Organization;
    auto L = NodeKind::Place;
    auto W = NodeKind::Work;
    auto E = NodeKind::Event;
    t.rules = {
        {"born_in", P, L, {"Childhood"}, {"year"}, "{src} was born in {dst} in {year}.", 1.2},
        {"raised_in", P, L, {"Childhood"}, {"year"},
         "{src} spent formative years in {dst} from {year}.", 0.8},
        {"studied_at", P, O, {"Education"}, {"degree", "year"},
         "{src} studied at {dst}, completing a {degree} in {year}.", 1.4},
        {"mentored_by", P, P, {"Education"}, {"year"},
         "{src} trained under {dst} beginning in {year}.", 0.9},
        {"employed_by", P, O, {"EarlyCareer", "MidCareer"}, {"role", "year"},
         "{src} joined {dst} as a {role} in {year}.", 1.6},
        {"founded", P, O, {"MidCareer"}, {"year", "amount"},
         "{src} founded {dst} in {year} with initial funding of {amount}.", 0.9},
        {"collaborated_with", P, P, {"EarlyCareer", "MidCareer", "LateCareer"}, {"year"},
         "{src} collaborated with {dst} on joint work starting in {year}.", 1.2},
        {"married_to", P, P, {"EarlyCareer", "MidCareer"}, {"year"},
         "{src} married {dst} in {year}.", 0.7},
        {"created", P, W, {"MidCareer", "LateCareer"}, {"year"},
         "{src} created {dst} in {year}.", 1.3},
        {"presented_at", W, E, {}, {"year"}, "{src} was first presented at {dst} in {year}.", 1.0},
        {"held_in", E, L, {}, {}, "{src} was held in {dst}.", 1.0},
        {"headquartered_in", O, L, {}, {}, "{src} maintained its headquarters in {dst}.", 1.0},
        {"member_of", P, O, {"LateCareer"}, {"role", "year"},
         "{src} became a {role} of {dst} in {year}.", 1.0},
        {"honored_at", P, E, {"LateCareer"}, {"year"}, "{src} was honored at {dst} in {year}.", 0.9},
        {"lived_in", P, L, {"MidCareer", "LateCareer"}, {"year"},
         "{src} settled in {dst} in {year}.", 1.0},
    };
    t.archetypes = {"Scientist", "Artist", "Entrepreneur", "Engineer", "Scholar", "Diplomat"};
    t.propensities = {
        {"Scientist", {{"studied_at", 2.0}, {"employed_by", 1.5}, {"created", 1.2}}},
        {"Artist", {{"created", 2.5}, {"presented_at", 1.5}, {"honored_at", 1.3}}},
        {"Entrepreneur", {{"founded", 3.0}, {"employed_by", 0.7}, {"headquartered_in", 1.4}}},
        {"Engineer", {{"employed_by", 2.0}, {"studied_at", 1.3}}},
        {"Scholar", {{"studied_at", 2.5}, {"member_of", 1.5}, {"created", 1.3}}},
        {"Diplomat", {{"member_of", 2.0}, {"lived_in", 1.5}, {"honored_at", 1.2}}},
    };
    t.attr_templates = {
        {"Person.occupation", "{name} was known as a {value}."},
        {"Person.background", "{name} came from a {value} background."},
        {"Organization.field", "{name} operated in the field of {value}."},
        {"Place.region", "{name} lay in the {value} region."},
        {"Work.genre", "{name} took the form of a {value}."},
        {"Event.theme", "{name} centered on {value}."},
    };
    return t;
}

/// Relation map and template table must be co-complete; enforced at startup.
inline void validate_relation_table(const RelationTable& t) {
    if (t.rules.empty()) throw std::runtime_error("relation table has no rules");
    if (t.archetypes.empty()) throw std::runtime_error("relation table has no archetypes");
    for (const RelationRule& r : t.rules) {
        if (r.sentence_template.empty()) {
            throw std::runtime_error("missing template for relation: " + r.relation);
        }
        if (r.sentence_template.find("{src}") == std::string::npos ||
            r.sentence_template.find("{dst}") == std::string::npos) {
            throw std::runtime_error("template for " + r.relation + " must use {src} and {dst}");
        }
        for (const std::string& key : r.edge_attrs) {
            if (r.sentence_template.find("{" + key + "}") == std::string::npos) {
                throw std::runtime_error("template for " + r.relation + " missing {" + key + "}");
            }
        }
    }
    static const std::vector<std::pair<std::string, std::string>> required_attrs = {
        {"Person.occupation", ""}, {"Person.background", ""},   {"Organization.field", ""},
        {"Place.region", ""},      {"Work.genre", ""},          {"Event.theme", ""},
    };
    for (const auto& [key, _] : required_attrs) {
        auto it = t.attr_templates.find(key);
        if (it == t.attr_templates.end() || it->second.empty()) {
            throw std::runtime_error("missing attribute template: " + key);
        }
    }
}

inline Json relation_table_to_json(const RelationTable& t) {
    Json j;
    j["version"] = t.version;
    j["archetypes"] = t.archetypes;
    Json rules = Json::array();
    for (const RelationRule& r : t.rules) {
        rules.push_back(Json{{"relation", r.relation},
                             {"src_kind", to_string(r.src_kind)},
                             {"dst_kind", to_string(r.dst_kind)},
                             {"phases", r.phases},
                             {"edge_attrs", r.edge_attrs},
                             {"template", r.sentence_template},
                             {"weight", r.base_weight}});
    }
    j["rules"] = rules;
    Json prop = Json::object();
    for (const auto& [arch, weights] : t.propensities) {
        Json w = Json::object();
        for (const auto& [rel, mult] : weights) w[rel] = mult;
        prop[arch] = w;
    }
    j["propensities"] = prop;
    Json attrs = Json::object();
    for (const auto& [key, tpl] : t.attr_templates) attrs[key] = tpl;
    j["attr_templates"] = attrs;
    return j;
}

inline NodeKind node_kind_from_string(const std::string& s) {
    for (NodeKind k : {NodeKind::Person, NodeKind::Organization, NodeKind::Place, NodeKind::Work,
                       NodeKind::Event}) {
        if (to_string(k) == s) return k;
    }
    throw std::runtime_error("unknown node kind: " + s);
}

inline RelationTable relation_table_from_json(const Json& j) {
    RelationTable t;
    t.version = j.value("version", 1);
    t.archetypes = j.at("archetypes").get<std::vector<std::string>>();
    for (const Json& r : j.at("rules")) {
        RelationRule rule;
        rule.relation = r.at("relation").get<std::string>();
        rule.src_kind = node_kind_from_string(r.at("src_kind").get<std::string>());
        rule.dst_kind = node_kind_from_string(r.at("dst_kind").get<std::string>());
        rule.phases = r.value("phases", std::vector<std::string>{});
        rule.edge_attrs = r.value("edge_attrs", std::vector<std::string>{});
        rule.sentence_template = r.at("template").get<std::string>();
        rule.base_weight = r.value("weight", 1.0);
        t.rules.push_back(rule);
    }
    if (j.contains("propensities")) {
        for (auto it = j.at("propensities").begin(); it != j.at("propensities").end(); ++it) {
            std::map<std::string, double> weights;
            for (auto w = it.value().begin(); w != it.value().end(); ++w) {
                weights[w.key()] = w.value().get<double>();
            }
            t.propensities[it.key()] = weights;
        }
    }
    for (auto it = j.at("attr_templates").begin(); it != j.at("attr_templates").end(); ++it) {
        t.attr_templates[it.key()] = it.value().get<std::string>();
    }
    validate_relation_table(t);
    return t;
}

// ===========================================================================
// Graph expansion
// ===========================================================================

namespace kg_detail {

inline const std::vector<std::string>& first_names() {
    static const std::vector<std::string> v = {
        "Marcus", "Adele",  "Tobias", "Ingrid", "Casper", "Livia",  "Edwin", "Maren",
        "Victor", "Helena", "Rufus",  "Cora",   "Anselm", "Beatrix", "Felix", "Greta"};
    return v;
}

inline const std::vector<std::string>& last_names() {
    static const std::vector<std::string> v = {
        "Hale", "Barrow", "Linden", "Mercer", "Voss",   "Calder", "Ashworth", "Brandt",
        "Rooke", "Severin", "Thorne", "Walcott", "Ferris", "Gould", "Hartley", "Quill"};
    return v;
}

inline const std::vector<std::string>& org_prefixes() {
    static const std::vector<std::string> v = {"Northgate", "Halloway", "Eastbrook", "Stanmore",
                                               "Westfield", "Caldermoor", "Ravenholt", "Brightwater"};
    return v;
}

inline const std::vector<std::string>& org_suffixes() {
    static const std::vector<std::string> v = {"Institute", "Atelier", "Works", "Society",
                                               "College", "Foundry", "Bureau", "Observatory"};
    return v;
}

inline const std::vector<std::string>& place_names() {
    static const std::vector<std::string> v = {
        "Ashford", "Eastvale", "Merrowbrook", "Dunhollow", "Greywick", "Larkmoor",
        "Sablecross", "Thornbury", "Windmere", "Oakhaven", "Fernridge", "Stonegate"};
    return v;
}

inline const std::vector<std::string>& work_adjectives() {
    static const std::vector<std::string> v = {"Silent", "Gilded", "Northern", "Violet",
                                               "Patient", "Hollow", "Radiant", "Measured"};
    return v;
}

inline const std::vector<std::string>& work_nouns() {
    static const std::vector<std::string> v = {"Meridian", "Orchard", "Ledger", "Horizon",
                                               "Current", "Lattice", "Passage", "Arbor"};
    return v;
}

inline const std::vector<std::string>& event_types() {
    static const std::vector<std::string> v = {"Symposium", "Exhibition", "Expedition", "Fair",
                                               "Congress", "Retrospective"};
    return v;
}

inline const std::vector<std::string>& roles() {
    static const std::vector<std::string> v = {"engineer", "curator",  "researcher", "manager",
                                               "archivist", "advisor", "fellow",     "trustee"};
    return v;
}

inline const std::vector<std::string>& degrees() {
    static const std::vector<std::string> v = {"doctorate", "diploma", "bachelor's degree",
                                               "master's degree"};
    return v;
}

inline const std::vector<std::string>& occupations() {
    static const std::vector<std::string> v = {"physicist", "painter",   "engineer", "botanist",
                                               "historian", "cartographer", "composer", "chemist"};
    return v;
}

inline const std::vector<std::string>& backgrounds() {
    static const std::vector<std::string> v = {"working-class", "merchant", "farming",
                                               "academic",      "seafaring", "artisan"};
    return v;
}

inline const std::vector<std::string>& regions() {
    static const std::vector<std::string> v = {"northern", "southern", "coastal",
                                               "highland", "river",    "border"};
    return v;
}

inline const std::vector<std::string>& genres() {
    static const std::vector<std::string> v = {"novel", "symphony", "treatise",
                                               "mural", "memoir",   "atlas"};
    return v;
}

inline const std::vector<std::string>& themes() {
    static const std::vector<std::string> v = {"regional science", "modern art", "civic reform",
                                               "trade policy",     "natural history", "navigation"};
    return v;
}

inline std::vector<LifePhase> make_phases(const YearSpan& lifespan) {
    int b = lifespan.lo;
    int d = lifespan.hi;
    return {
        {"Childhood", {b, b + 17}},
        {"Education", {b + 18, b + 24}},
        {"EarlyCareer", {b + 25, b + 34}},
        {"MidCareer", {b + 35, b + 49}},
        {"LateCareer", {b + 50, d}},
    };
}

inline YearSpan phase_span(const YearSpan& lifespan, const std::string& phase) {
    for (const LifePhase& p : make_phases(lifespan)) {
        if (p.name == phase) {
            return {std::max(p.span.lo, lifespan.lo), std::min(p.span.hi, lifespan.hi)};
        }
    }
    throw std::runtime_error("unknown life phase: " + phase);
}

inline std::vector<int> bfs_distances(const KnowledgeGraph& g) {
    std::vector<int> dist(g.nodes.size(), -1);
    std::vector<int> frontier = {g.protagonist.node_id};
    dist[static_cast<std::size_t>(g.protagonist.node_id)] = 0;
    while (!frontier.empty()) {
        std::vector<int> next;
        for (int u : frontier) {
            for (const KgEdge& e : g.edges) {
                int v = -1;
                if (e.src == u) v = e.dst;
                if (e.dst == u) v = e.src;
                if (v >= 0 && dist[static_cast<std::size_t>(v)] < 0) {
                    dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                    next.push_back(v);
                }
            }
        }
        frontier = std::move(next);
    }
    return dist;
}

struct NameAllocator {
    std::set<std::string> used;
    std::string unique(std::string base) {
        std::string name = base;
        int suffix = 2;
        while (!used.insert(name).second) {
            name = base + " " + std::to_string(suffix);
            ++suffix;
        }
        return name;
    }
};

inline std::string template_fill(std::string tpl,
                                 const std::vector<std::pair<std::string, std::string>>& slots) {
    for (const auto& [key, value] : slots) {
        std::string needle = "{" + key + "}";
        std::size_t pos;
        while ((pos = tpl.find(needle)) != std::string::npos) {
            tpl.replace(pos, needle.size(), value);
        }
    }
    return tpl;
}

}  // namespace kg_detail

/// Iterative protagonist-centric expansion. Existing nodes are selected
/// weighted by inverse distance to the protagonist; relations are drawn from
/// the table weighted by archetype propensity; every edge year lies inside
/// both endpoints' lifespans/eras. Stops once the subgraph within `radius`
/// of the protagonist holds `triple_count` edges.
inline KnowledgeGraph expand_graph(const AttributeSeed& seed,
                                   const RelationTable& table = default_relation_table()) {
    if (seed.task_kind != TaskKind::BioG) throw std::runtime_error("seed is not BioG");
    validate_relation_table(table);
    using namespace kg_detail;

    std::int64_t budget = seed.knob_int("triple_count");
    int radius = static_cast<int>(seed.knob_int("radius"));
    auto rng = seed.stream("kg");

    KnowledgeGraph g;
    NameAllocator names;

    KgNode hero;
    hero.id = 0;
    hero.kind = NodeKind::Person;
    hero.name = names.unique(rng.pick(first_names()) + " " + rng.pick(last_names()));
    int birth = static_cast<int>(rng.range(1850, 1950));
    hero.era = {birth, birth + static_cast<int>(rng.range(62, 88))};
    hero.attrs = {{"occupation", rng.pick(occupations())},
                  {"background", rng.pick(backgrounds())}};
    g.nodes.push_back(hero);
    g.protagonist.node_id = 0;
    g.protagonist.archetype = rng.pick(table.archetypes);
    g.protagonist.background = hero.attrs[1].second;
    g.protagonist.phases = make_phases(hero.era);

    auto propensity = [&](const std::string& relation) {
        auto a = table.propensities.find(g.protagonist.archetype);
        if (a == table.propensities.end()) return 1.0;
        auto w = a->second.find(relation);
        return w == a->second.end() ? 1.0 : w->second;
    };

    auto new_node = [&](NodeKind kind, int year) {
        KgNode n;
        n.id = static_cast<int>(g.nodes.size());
        n.kind = kind;
        switch (kind) {
            case NodeKind::Person: {
                n.name = names.unique(rng.pick(first_names()) + " " + rng.pick(last_names()));
                int b = year - static_cast<int>(rng.range(20, 45));
                n.era = {b, b + static_cast<int>(rng.range(60, 90))};
                n.attrs = {{"occupation", rng.pick(occupations())},
                           {"background", rng.pick(backgrounds())}};
                break;
            }
            case NodeKind::Organization: {
                n.name = names.unique(rng.pick(org_prefixes()) + " " + rng.pick(org_suffixes()));
                n.era = {year - static_cast<int>(rng.range(0, 40)), 9999};
                n.attrs = {{"field", rng.pick(themes())}};
                break;
            }
            case NodeKind::Place: {
                n.name = names.unique(rng.pick(place_names()));
                n.era = {0, 9999};
                n.attrs = {{"region", rng.pick(regions())}};
                break;
            }
            case NodeKind::Work: {
                n.name = names.unique("The " + rng.pick(work_adjectives()) + " " +
                                      rng.pick(work_nouns()));
                n.era = {year, 9999};
                n.attrs = {{"genre", rng.pick(genres())}};
                break;
            }
            case NodeKind::Event: {
                n.name = names.unique("the " + std::to_string(year) + " " + rng.pick(place_names()) +
                                      " " + rng.pick(event_types()));
                n.era = {year, year};
                n.attrs = {{"theme", rng.pick(themes())}};
                break;
            }
        }
        g.nodes.push_back(n);
        return n.id;
    };

    auto subgraph_edge_count = [&]() {
        std::vector<int> dist = bfs_distances(g);
        std::int64_t count = 0;
        for (const KgEdge& e : g.edges) {
            int ds = dist[static_cast<std::size_t>(e.src)];
            int dd = dist[static_cast<std::size_t>(e.dst)];
            if (ds >= 0 && ds <= radius && dd >= 0 && dd <= radius) ++count;
        }
        return count;
    };

    int failures = 0;
    while (subgraph_edge_count() < budget) {
        if (failures >= 1000) {
            throw std::runtime_error("graph expansion exhausted: no legal expansion after 1000 attempts");
        }

        std::vector<int> dist = bfs_distances(g);
        std::vector<double> node_weights;
        for (const KgNode& n : g.nodes) {
            node_weights.push_back(1.0 / (1.0 + static_cast<double>(dist[static_cast<std::size_t>(n.id)])));
        }
        // copy: new_node below may reallocate g.nodes
        const KgNode src = g.nodes[rng.pick_weighted(node_weights)];

        std::vector<const RelationRule*> legal;
        std::vector<double> rule_weights;
        for (const RelationRule& rule : table.rules) {
            if (rule.src_kind != src.kind) continue;
            legal.push_back(&rule);
            rule_weights.push_back(rule.base_weight * propensity(rule.relation));
        }
        if (legal.empty()) {
            ++failures;
            continue;
        }
        const RelationRule& rule = *legal[rng.pick_weighted(rule_weights)];

        // year window from the source (and life phase for persons)
        YearSpan window = src.era;
        if (src.kind == NodeKind::Person && !rule.phases.empty()) {
            std::vector<YearSpan> feasible;
            for (const std::string& phase : rule.phases) {
                YearSpan span = phase_span(src.era, phase);
                if (span.lo <= span.hi) feasible.push_back(span);
            }
            if (feasible.empty()) {
                ++failures;
                continue;
            }
            window = feasible[rng.below(feasible.size())];
        }

        // destination: mostly new nodes, sometimes an existing legal one
        int dst_id = -1;
        bool reuse = rng.chance(0.25);
        if (reuse) {
            std::vector<int> candidates;
            for (const KgNode& n : g.nodes) {
                if (n.kind != rule.dst_kind || n.id == src.id) continue;
                YearSpan joint{std::max(window.lo, n.era.lo), std::min(window.hi, n.era.hi)};
                if (joint.lo > joint.hi) continue;
                bool duplicate = false;
                for (const KgEdge& e : g.edges) {
                    if (e.src == src.id && e.dst == n.id && e.relation == rule.relation) {
                        duplicate = true;
                        break;
                    }
                }
                if (!duplicate) candidates.push_back(n.id);
            }
            if (!candidates.empty()) dst_id = candidates[rng.below(candidates.size())];
        }

        int year = 0;
        if (dst_id >= 0) {
            const KgNode& dn = g.node(dst_id);
            YearSpan joint{std::max(window.lo, dn.era.lo), std::min(window.hi, dn.era.hi)};
            year = static_cast<int>(rng.range(joint.lo, joint.hi));
        } else {
            if (window.lo > window.hi) {
                ++failures;
                continue;
            }
            year = static_cast<int>(rng.range(window.lo, window.hi));
            dst_id = new_node(rule.dst_kind, year);
        }

        KgEdge edge;
        edge.src = src.id;
        edge.dst = dst_id;
        edge.relation = rule.relation;
        for (const std::string& key : rule.edge_attrs) {
            if (key == "year") {
                edge.attrs.emplace_back("year", std::to_string(year));
            } else if (key == "role") {
                edge.attrs.emplace_back("role", rng.pick(roles()));
            } else if (key == "degree") {
                edge.attrs.emplace_back("degree", rng.pick(degrees()));
            } else if (key == "amount") {
                edge.attrs.emplace_back("amount",
                                        "$" + std::to_string(rng.range(10, 900) * 1000));
            }
        }
        g.edges.push_back(edge);
        failures = 0;
    }
    return g;
}

/// Induced subgraph of nodes within `radius` hops of the protagonist.
inline Subgraph extract_subgraph(const KnowledgeGraph& g, int radius) {
    if (radius < 0) throw std::runtime_error("radius must be nonnegative");
    std::vector<int> dist = kg_detail::bfs_distances(g);
    Subgraph sub;
    for (const KgNode& n : g.nodes) {
        int d = dist[static_cast<std::size_t>(n.id)];
        if (d >= 0 && d <= radius) sub.node_ids.push_back(n.id);
    }
    std::set<int> in_sub(sub.node_ids.begin(), sub.node_ids.end());
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        if (in_sub.count(g.edges[i].src) && in_sub.count(g.edges[i].dst)) {
            sub.edge_indices.push_back(i);
        }
    }
    return sub;
}

/// Temporal validator: every dated edge lies inside both endpoints' eras.
inline std::vector<std::string> validate_temporal(const KnowledgeGraph& g) {
    std::vector<std::string> violations;
    for (const KgEdge& e : g.edges) {
        std::string y = e.attr("year");
        if (y.empty()) continue;
        int year = std::stoi(y);
        if (!g.node(e.src).era.contains(year)) {
            violations.push_back(e.relation + " year " + y + " outside era of " + g.node(e.src).name);
        }
        if (!g.node(e.dst).era.contains(year)) {
            violations.push_back(e.relation + " year " + y + " outside era of " + g.node(e.dst).name);
        }
    }
    return violations;
}

/// One sentence per subgraph edge (template keyed by relation), then one per
/// non-name node attribute; order is stable: edge insertion order, then node
/// insertion order with the node's attribute order.
inline std::vector<TripleSentence> verbalize(const KnowledgeGraph& g, const Subgraph& sub,
                                             const RelationTable& table = default_relation_table()) {
    std::vector<TripleSentence> out;
    for (std::size_t ei : sub.edge_indices) {
        const KgEdge& e = g.edges[ei];
        const RelationRule* rule = nullptr;
        for (const RelationRule& r : table.rules) {
            if (r.relation == e.relation) {
                rule = &r;
                break;
            }
        }
        if (!rule) throw std::runtime_error("missing template for relation: " + e.relation);
        TripleSentence ts;
        ts.subject = g.node(e.src).name;
        ts.predicate = e.relation;
        ts.object = g.node(e.dst).name;
        ts.attrs = e.attrs;
        std::vector<std::pair<std::string, std::string>> slots = {{"src", ts.subject},
                                                                  {"dst", ts.object}};
        for (const auto& [k, v] : e.attrs) slots.emplace_back(k, v);
        ts.sentence = kg_detail::template_fill(rule->sentence_template, slots);
        ts.template_id = "rel." + e.relation;
        out.push_back(std::move(ts));
    }
    for (int id : sub.node_ids) {
        const KgNode& n = g.node(id);
        for (const auto& [key, value] : n.attrs) {
            std::string tpl_key = to_string(n.kind) + "." + key;
            auto it = table.attr_templates.find(tpl_key);
            if (it == table.attr_templates.end()) {
                throw std::runtime_error("missing attribute template: " + tpl_key);
            }
            TripleSentence ts;
            ts.subject = n.name;
            ts.predicate = key;
            ts.object = value;
            ts.sentence = kg_detail::template_fill(it->second, {{"name", n.name}, {"value", value}});
            ts.template_id = "attr." + tpl_key;
            out.push_back(std::move(ts));
        }
    }
    return out;
}

inline std::string render_triple_line(const TripleSentence& ts) {
    std::string line = "(" + ts.subject + ", " + ts.predicate + ", " + ts.object + ")";
    if (!ts.attrs.empty()) {
        line += " [";
        for (std::size_t i = 0; i < ts.attrs.size(); ++i) {
            if (i > 0) line += "; ";
            line += ts.attrs[i].first + ": " + ts.attrs[i].second;
        }
        line += "]";
    }
    return line;
}

inline TaskInstance gen_biog(const AttributeSeed& seed,
                             const RelationTable& table = default_relation_table()) {
    KnowledgeGraph g = expand_graph(seed, table);
    int radius = static_cast<int>(seed.knob_int("radius"));
    Subgraph sub = extract_subgraph(g, radius);
    std::vector<TripleSentence> sentences = verbalize(g, sub, table);

    TaskInstance inst;
    inst.id = instance_id(seed);
    inst.task_kind = seed.task_kind;
    inst.tier = seed.tier;
    inst.seed = seed;

    const std::string& hero = g.node(g.protagonist.node_id).name;
    std::string material = "Facts about " + hero + " and their circle, one per line:\n";
    for (const TripleSentence& ts : sentences) {
        material += render_triple_line(ts);
        material += "\n";
    }
    inst.material = material;

    std::size_t target = seed.target_tokens();
    std::ostringstream instr;
    instr << "Write a biography of " << hero << " as flowing prose.\n"
          << "Incorporate every listed fact exactly once, staying faithful to names, dates and "
             "details; do not invent additional facts.\n"
          << "Your response must be approximately " << target << " tokens (about "
          << (target * 3) / 4 << " words) long.";
    inst.instruction = instr.str();

    std::string gold;
    for (const TripleSentence& ts : sentences) {
        Json attrs = Json::object();
        for (const auto& [k, v] : ts.attrs) attrs[k] = v;
        inst.constraints.push_back(Json{{"kind", "triple"},
                                        {"subject", ts.subject},
                                        {"predicate", ts.predicate},
                                        {"object", ts.object},
                                        {"attrs", attrs}});
        inst.verifiers.push_back(
            Json{{"kind", "sentence"}, {"text", ts.sentence}, {"template_id", ts.template_id}});
        if (!gold.empty()) gold += " ";
        gold += ts.sentence;
    }
    inst.meta["protagonist"] = hero;
    inst.meta["archetype"] = g.protagonist.archetype;
    inst.meta["graph_nodes"] = g.nodes.size();
    inst.meta["graph_edges"] = g.edges.size();
    inst.meta["gold_tokens"] = count_tokens(gold);
    inst.check_invariants();
    return inst;
}

}  // namespace covweave
