#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "covweave/gen_rule.hpp"

using namespace covweave;

namespace {

// Independent brute-force re-simulation: a plain map-based interpreter kept
// deliberately separate from FsmSpec's vector-index layout.
std::vector<std::array<std::string, 4>> brute_force_fsm(const FsmSpec& spec) {
    std::map<std::pair<std::string, char>, std::pair<std::string, char>> rules;
    for (int s = 0; s < spec.num_states; ++s) {
        for (std::size_t i = 0; i < spec.input_alphabet.size(); ++i) {
            const FsmTransition& t = spec.transitions[static_cast<std::size_t>(s)][i];
            rules[{spec.state_name(s), spec.input_alphabet[i]}] = {
                spec.state_name(t.next_state),
                spec.output_alphabet[static_cast<std::size_t>(t.output)]};
        }
    }
    std::vector<std::array<std::string, 4>> steps;
    std::string state = spec.state_name(spec.initial_state);
    for (char c : spec.input_string) {
        auto [next, out] = rules.at({state, c});
        steps.push_back({state, std::string(1, c), next, std::string(1, out)});
        state = next;
    }
    return steps;
}

}  // namespace

TEST_CASE("gen_kv smallest instance and determinism") {
    auto seed = make_seed(TaskKind::KVG, Tier::T1k, 7, {{"entry_count", 1.0}});
    KvSpec spec = build_kv_spec(seed);
    REQUIRE(spec.entries.size() == 1);
    CHECK(spec.target_index == 0);
    CHECK(spec.entries[0].first == spec.target_key);
    CHECK(spec.entries[0].second == spec.target_value);

    TaskInstance a = gen_kv(seed);
    TaskInstance b = gen_kv(seed);
    CHECK(a.material == b.material);
    CHECK(a.instruction == b.instruction);
    CHECK(a.meta["gold_map"] == b.meta["gold_map"]);
    CHECK(a.id == b.id);
}

TEST_CASE("gen_kv keys unique, uppercase, correct lengths") {
    auto seed = make_seed(TaskKind::KVG, Tier::T1k, 99);
    KvSpec spec = build_kv_spec(seed);
    std::set<std::string> keys;
    for (const auto& [k, v] : spec.entries) {
        CHECK(k.size() == 32);
        CHECK(v.size() == 32);
        CHECK(k.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_") == std::string::npos);
        keys.insert(k);
    }
    CHECK(keys.size() == spec.entries.size());
    CHECK(spec.target_index < static_cast<std::int64_t>(spec.entries.size()));
}

TEST_CASE("gen_kv gold serialization round-trips") {
    for (std::uint64_t s : {1ULL, 2ULL, 3ULL, 44ULL}) {
        auto seed = make_seed(TaskKind::KVG, Tier::T1k, s);
        KvSpec spec = build_kv_spec(seed);
        auto parsed = parse_kv_map(render_kv_map(spec));
        REQUIRE(parsed.size() == spec.entries.size());
        CHECK(parsed == spec.entries);
    }
}

TEST_CASE("gen_kv entry count scales across tiers") {
    auto t1 = make_seed(TaskKind::KVG, Tier::T1k, 5);
    auto t8 = make_seed(TaskKind::KVG, Tier::T8k, 5);
    CHECK(t8.knob_int("entry_count") > t1.knob_int("entry_count"));

    // Gold map lands near the tier target under the default tokenizer.
    for (Tier tier : kAllTiers) {
        auto seed = make_seed(TaskKind::KVG, tier, 11);
        TaskInstance inst = gen_kv(seed);
        double tokens = inst.meta["gold_tokens"].get<double>();
        double target = static_cast<double>(tier_target_tokens(tier));
        CHECK(tokens >= 0.85 * target);
        CHECK(tokens <= 1.15 * target);
    }
}

TEST_CASE("gen_kv tier underflow") {
    CHECK(calibration::kv_entry_count_for(4) < 1);
    auto seed = make_seed(TaskKind::KVG, Tier::T1k, 3);
    seed.knobs["key_length"] = 9000.0;
    seed.knobs["value_length"] = 9000.0;
    CHECK_THROWS_WITH(build_kv_spec(seed), "tier underflow");
}

TEST_CASE("simulate_fsm degenerate one-state machine") {
    FsmSpec spec;
    spec.num_states = 1;
    spec.input_alphabet = {'x', 'y', 'z'};
    spec.output_alphabet = {'a'};
    spec.transitions = {{{0, 0}, {0, 0}, {0, 0}}};
    spec.initial_state = 0;
    spec.input_string = "xyz";
    FsmTrace trace = simulate_fsm(spec);
    REQUIRE(trace.steps.size() == 3);
    for (const FsmStep& step : trace.steps) {
        CHECK(step.state_before == 0);
        CHECK(step.state_after == 0);
        CHECK(step.output == 'a');
    }
}

TEST_CASE("simulate_fsm two-state toggler") {
    FsmSpec spec;
    spec.num_states = 2;
    spec.input_alphabet = {'a', 'b'};
    spec.output_alphabet = {'x', 'y'};
    // every input flips the state
    spec.transitions = {{{1, 0}, {1, 1}}, {{0, 0}, {0, 1}}};
    spec.initial_state = 0;
    spec.input_string = "abab";
    FsmTrace trace = simulate_fsm(spec);
    REQUIRE(trace.steps.size() == 4);
    CHECK(trace.steps[0].state_before == 0);
    CHECK(trace.steps[1].state_before == 1);
    CHECK(trace.steps[2].state_before == 0);
    CHECK(trace.steps[3].state_before == 1);
    CHECK(trace.steps[3].state_after == 0);
}

TEST_CASE("simulate_fsm matches brute-force oracle on 500 random specs") {
    for (std::uint64_t s = 0; s < 500; ++s) {
        auto seed = make_seed(TaskKind::SMS, Tier::T1k, s, {{"step_length", 40.0}});
        FsmSpec spec = build_fsm_spec(seed);
        FsmTrace trace = simulate_fsm(spec);
        auto oracle = brute_force_fsm(spec);
        REQUIRE(trace.steps.size() == oracle.size());
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CHECK(spec.state_name(trace.steps[i].state_before) == oracle[i][0]);
            CHECK(std::string(1, trace.steps[i].input) == oracle[i][1]);
            CHECK(spec.state_name(trace.steps[i].state_after) == oracle[i][2]);
            CHECK(std::string(1, trace.steps[i].output) == oracle[i][3]);
        }
    }
}

TEST_CASE("fsm trace chaining invariant") {
    auto seed = make_seed(TaskKind::SMS, Tier::T1k, 123);
    FsmSpec spec = build_fsm_spec(seed);
    FsmTrace trace = simulate_fsm(spec);
    REQUIRE(trace.steps.size() == spec.input_string.size());
    CHECK(trace.steps.front().state_before == spec.initial_state);
    for (std::size_t i = 0; i + 1 < trace.steps.size(); ++i) {
        CHECK(trace.steps[i].state_after == trace.steps[i + 1].state_before);
    }
}

TEST_CASE("gen_fsm totality, determinism and seed separation") {
    auto seed = make_seed(TaskKind::SMS, Tier::T1k, 8);
    TaskInstance a = gen_fsm(seed);
    TaskInstance b = gen_fsm(seed);
    CHECK(a.material == b.material);
    CHECK(a.verifiers == b.verifiers);

    CHECK(a.meta["transitions"].size() == 9);  // 3 states x 3 inputs

    auto seed2 = make_seed(TaskKind::SMS, Tier::T1k, 9);
    TaskInstance c = gen_fsm(seed2);
    CHECK(a.meta["transitions"] != c.meta["transitions"]);
}

TEST_CASE("gen_fsm gold trace lands near tier target") {
    for (Tier tier : {Tier::T1k, Tier::T8k}) {
        auto seed = make_seed(TaskKind::SMS, tier, 21);
        TaskInstance inst = gen_fsm(seed);
        double tokens = inst.meta["gold_tokens"].get<double>();
        double target = static_cast<double>(tier_target_tokens(tier));
        CHECK(tokens >= 0.85 * target);
        CHECK(tokens <= 1.15 * target);
    }
    auto t1 = make_seed(TaskKind::SMS, Tier::T1k, 1);
    auto t8 = make_seed(TaskKind::SMS, Tier::T8k, 1);
    CHECK(t8.knob_int("step_length") > t1.knob_int("step_length"));
}

TEST_CASE("corpus parsing and rendering") {
    std::string text =
        "Para one line one.\nPara one line two.\n\nPara two.\n===\nDoc two para.\n";
    Corpus corpus = parse_corpus(text);
    REQUIRE(corpus.size() == 2);
    REQUIRE(corpus[0].size() == 2);
    CHECK(corpus[0][0] == "Para one line one.\nPara one line two.");
    CHECK(corpus[0][1] == "Para two.");
    CHECK(corpus[1][0] == "Doc two para.");

    Corpus again = parse_corpus(render_corpus(corpus));
    CHECK(again == corpus);
}

TEST_CASE("gen_reorder two paragraphs is exactly the swap") {
    auto seed = make_seed(TaskKind::PR, Tier::T1k, 3, {{"para_length", 2.0}});
    Corpus corpus = default_reorder_corpus(seed);
    ReorderSpec spec = build_reorder_spec(seed, corpus);
    REQUIRE(spec.shuffled_order.size() == 2);
    CHECK(spec.shuffled_order == std::vector<std::size_t>{1, 0});
    CHECK(spec.gold_labels == std::vector<std::string>{"P2", "P1"});
}

TEST_CASE("gen_reorder shuffle then gold order is the identity") {
    for (std::uint64_t s = 0; s < 30; ++s) {
        auto seed = make_seed(TaskKind::PR, Tier::T1k, s);
        Corpus corpus = default_reorder_corpus(seed);
        ReorderSpec spec = build_reorder_spec(seed, corpus);
        std::size_t n = spec.paragraphs.size();

        // paragraphs as presented
        std::vector<std::string> presented(n);
        for (std::size_t j = 0; j < n; ++j) presented[j] = spec.paragraphs[spec.shuffled_order[j]];
        // apply the gold label sequence to the presentation
        std::vector<std::string> restored;
        for (const std::string& label : spec.gold_labels) {
            std::size_t j = static_cast<std::size_t>(std::stoul(label.substr(1))) - 1;
            restored.push_back(presented[j]);
        }
        CHECK(restored == spec.paragraphs);
        // non-identity shuffle
        CHECK(!std::is_sorted(spec.shuffled_order.begin(), spec.shuffled_order.end()));
    }
}

TEST_CASE("gen_reorder corpus exhaustion") {
    auto seed = make_seed(TaskKind::PR, Tier::T1k, 3, {{"para_length", 50.0}});
    Corpus tiny = {{"only one paragraph"}};
    CHECK_THROWS_WITH(build_reorder_spec(seed, tiny), "insufficient corpus");
}

TEST_CASE("gen_reorder determinism and tier scaling") {
    auto seed = make_seed(TaskKind::PR, Tier::T1k, 17);
    Corpus corpus = default_reorder_corpus(seed);
    TaskInstance a = gen_reorder(seed, corpus);
    TaskInstance b = gen_reorder(seed, corpus);
    CHECK(a.material == b.material);
    CHECK(a.verifiers == b.verifiers);

    auto t1 = make_seed(TaskKind::PR, Tier::T1k, 1);
    auto t8 = make_seed(TaskKind::PR, Tier::T8k, 1);
    CHECK(t8.knob_int("para_length") > t1.knob_int("para_length"));

    for (Tier tier : kAllTiers) {
        auto s = make_seed(TaskKind::PR, tier, 29);
        TaskInstance inst = gen_reorder(s, default_reorder_corpus(s));
        double tokens = inst.meta["gold_tokens"].get<double>();
        double target = static_cast<double>(tier_target_tokens(tier));
        CHECK(tokens >= 0.85 * target);
        CHECK(tokens <= 1.15 * target);
    }
}
