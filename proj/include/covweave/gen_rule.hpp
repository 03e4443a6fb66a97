#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covweave/corpus.hpp"
#include "covweave/tokenizer.hpp"
#include "covweave/types.hpp"

namespace covweave {

// ===========================================================================
// KV Dictionary Generation (KVG)
// ===========================================================================

struct KvSpec {
    std::vector<std::pair<std::string, std::string>> entries;  // gold order
    std::int64_t key_length = 32;
    std::int64_t value_length = 32;
    std::int64_t target_index = 0;
    std::string target_key;
    std::string target_value;
};

namespace kv_detail {

inline std::string random_key(SeededStream& rng, std::int64_t length) {
    static const char first[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    static const char rest[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
    std::string key;
    key.reserve(static_cast<std::size_t>(length));
    key += first[rng.below(sizeof(first) - 1)];
    for (std::int64_t i = 1; i < length; ++i) key += rest[rng.below(sizeof(rest) - 1)];
    return key;
}

inline std::string random_value(SeededStream& rng, std::int64_t length) {
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::string value;
    value.reserve(static_cast<std::size_t>(length));
    for (std::int64_t i = 0; i < length; ++i) value += alphabet[rng.below(sizeof(alphabet) - 1)];
    return value;
}

}  // namespace kv_detail

inline KvSpec build_kv_spec(const AttributeSeed& seed) {
    if (seed.task_kind != TaskKind::KVG) throw std::runtime_error("seed is not KVG");
    std::int64_t key_len = seed.knob_int("key_length");
    std::int64_t value_len = seed.knob_int("value_length");
    if (calibration::kv_entry_count_for(seed.target_tokens(), key_len, value_len) < 1) {
        throw std::runtime_error("tier underflow");
    }
    std::int64_t count = seed.knob_int("entry_count");
    if (count < 1) throw std::runtime_error("tier underflow");

    KvSpec spec;
    spec.key_length = key_len;
    spec.value_length = value_len;
    auto rng = seed.stream("kv");
    std::set<std::string> used;
    spec.entries.reserve(static_cast<std::size_t>(count));
    while (static_cast<std::int64_t>(spec.entries.size()) < count) {
        std::string key = kv_detail::random_key(rng, key_len);
        if (!used.insert(key).second) continue;
        spec.entries.emplace_back(std::move(key), kv_detail::random_value(rng, value_len));
    }
    spec.target_index = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(count)));
    spec.target_key = spec.entries[static_cast<std::size_t>(spec.target_index)].first;
    spec.target_value = spec.entries[static_cast<std::size_t>(spec.target_index)].second;
    return spec;
}

/// Fixed serialization: one `"KEY": "value",` entry per line inside braces,
/// so position scoring is line-index based.
inline std::string render_kv_map(const KvSpec& spec) {
    std::string out = "{\n";
    for (const auto& [key, value] : spec.entries) {
        out += "\"" + key + "\": \"" + value + "\",\n";
    }
    out += "}\n";
    return out;
}

/// Tolerant parse of a map rendering back into ordered entries. Lines that
/// do not look like `"key": "value"` are skipped; code fences are ignored.
inline std::vector<std::pair<std::string, std::string>> parse_kv_map(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::size_t q1 = line.find('"');
        if (q1 == std::string::npos) continue;
        std::size_t q2 = line.find('"', q1 + 1);
        if (q2 == std::string::npos) continue;
        std::size_t colon = line.find(':', q2 + 1);
        if (colon == std::string::npos) continue;
        std::size_t q3 = line.find('"', colon + 1);
        if (q3 == std::string::npos) continue;
        std::size_t q4 = line.rfind('"');
        if (q4 <= q3) continue;
        entries.emplace_back(line.substr(q1 + 1, q2 - q1 - 1), line.substr(q3 + 1, q4 - q3 - 1));
    }
    return entries;
}

inline TaskInstance gen_kv(const AttributeSeed& seed) {
    KvSpec spec = build_kv_spec(seed);
    std::string gold = render_kv_map(spec);

    TaskInstance inst;
    inst.id = instance_id(seed);
    inst.task_kind = seed.task_kind;
    inst.tier = seed.tier;
    inst.seed = seed;
    inst.material =
        "Formatting rules for the dictionary you will produce:\n"
        "- Output a brace-delimited map: the first line is `{`, the last line is `}`.\n"
        "- One entry per line, formatted exactly as \"KEY\": \"value\", including the trailing comma.\n"
        "- Every key uses only uppercase letters, digits and underscores, exactly " +
        std::to_string(spec.key_length) + " characters long.\n"
        "- Every value is exactly " + std::to_string(spec.value_length) + " characters long.\n";

    std::size_t target = seed.target_tokens();
    std::ostringstream instr;
    instr << "Generate a dictionary with exactly " << spec.entries.size()
          << " entries following the formatting rules above.\n"
          << "Required pair: place key \"" << spec.target_key << "\" with value \""
          << spec.target_value << "\" at 0-based index " << spec.target_index << ".\n"
          << "Invent the remaining entries yourself; all keys must be distinct.\n"
          << "Your response must be approximately " << target << " tokens (about "
          << (target * 3) / 4 << " words) long.";
    inst.instruction = instr.str();

    inst.constraints.push_back(Json{{"kind", "kv_target"},
                                    {"key", spec.target_key},
                                    {"value", spec.target_value},
                                    {"index", spec.target_index},
                                    {"entry_count", static_cast<std::int64_t>(spec.entries.size())}});
    inst.verifiers.push_back(Json{{"kind", "kv_check"},
                                  {"key", spec.target_key},
                                  {"value", spec.target_value},
                                  {"index", spec.target_index},
                                  {"entry_count", static_cast<std::int64_t>(spec.entries.size())},
                                  {"key_format", "uppercase_underscore"}});
    inst.meta["gold_map"] = gold;
    inst.meta["gold_tokens"] = count_tokens(gold);
    inst.meta["chars_per_entry"] = spec.key_length + spec.value_length + 7;
    inst.check_invariants();
    return inst;
}

// ===========================================================================
// State Machine Simulation (SMS)
// ===========================================================================

struct FsmTransition {
    int next_state = 0;
    int output = 0;  // index into output alphabet
};

struct FsmSpec {
    int num_states = 3;
    std::vector<char> input_alphabet;
    std::vector<char> output_alphabet;
    // transitions[state][input_index]
    std::vector<std::vector<FsmTransition>> transitions;
    int initial_state = 0;
    std::string input_string;

    std::string state_name(int s) const { return "S" + std::to_string(s); }
    int input_index(char c) const {
        for (std::size_t i = 0; i < input_alphabet.size(); ++i) {
            if (input_alphabet[i] == c) return static_cast<int>(i);
        }
        throw std::runtime_error("input symbol not in alphabet");
    }
};

struct FsmStep {
    int state_before = 0;
    char input = 'a';
    int state_after = 0;
    char output = 'x';
};

struct FsmTrace {
    std::vector<FsmStep> steps;
};

/// Exact deterministic simulation; this trace is the scoring oracle.
inline FsmTrace simulate_fsm(const FsmSpec& spec) {
    FsmTrace trace;
    trace.steps.reserve(spec.input_string.size());
    int state = spec.initial_state;
    for (char c : spec.input_string) {
        const FsmTransition& t = spec.transitions[static_cast<std::size_t>(state)]
                                                 [static_cast<std::size_t>(spec.input_index(c))];
        FsmStep step;
        step.state_before = state;
        step.input = c;
        step.state_after = t.next_state;
        step.output = spec.output_alphabet[static_cast<std::size_t>(t.output)];
        trace.steps.push_back(step);
        state = t.next_state;
    }
    return trace;
}

/// Gold line format, declared in the instruction so scoring can parse
/// deterministically: "STEP i: state --input/output--> state".
inline std::string render_fsm_step(std::size_t index1, const FsmStep& step) {
    std::string line = "STEP " + std::to_string(index1) + ": S" + std::to_string(step.state_before) +
                       " --";
    line += step.input;
    line += '/';
    line += step.output;
    line += "--> S" + std::to_string(step.state_after) + "\n";
    return line;
}

inline std::string render_fsm_trace(const FsmTrace& trace) {
    std::string out;
    for (std::size_t i = 0; i < trace.steps.size(); ++i) out += render_fsm_step(i + 1, trace.steps[i]);
    return out;
}

namespace fsm_detail {

inline bool all_states_reachable(const FsmSpec& spec) {
    std::vector<bool> seen(static_cast<std::size_t>(spec.num_states), false);
    std::vector<int> queue = {spec.initial_state};
    seen[static_cast<std::size_t>(spec.initial_state)] = true;
    while (!queue.empty()) {
        int s = queue.back();
        queue.pop_back();
        for (const FsmTransition& t : spec.transitions[static_cast<std::size_t>(s)]) {
            if (!seen[static_cast<std::size_t>(t.next_state)]) {
                seen[static_cast<std::size_t>(t.next_state)] = true;
                queue.push_back(t.next_state);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

}  // namespace fsm_detail

inline FsmSpec build_fsm_spec(const AttributeSeed& seed) {
    if (seed.task_kind != TaskKind::SMS) throw std::runtime_error("seed is not SMS");
    int num_states = static_cast<int>(seed.knob_int("num_states"));
    int input_size = static_cast<int>(seed.knob_int("input_size"));
    int output_size = static_cast<int>(seed.knob_int("output_size"));
    std::int64_t steps = seed.knob_int("step_length");

    FsmSpec spec;
    spec.num_states = num_states;
    for (int i = 0; i < input_size; ++i) spec.input_alphabet.push_back(static_cast<char>('a' + i));
    for (int i = 0; i < output_size; ++i) {
        spec.output_alphabet.push_back(static_cast<char>('z' - output_size + 1 + i));
    }

    auto rng = seed.stream("fsm");
    for (int attempt = 0; attempt < 100; ++attempt) {
        spec.transitions.assign(static_cast<std::size_t>(num_states),
                                std::vector<FsmTransition>(static_cast<std::size_t>(input_size)));
        for (int s = 0; s < num_states; ++s) {
            for (int i = 0; i < input_size; ++i) {
                FsmTransition t;
                t.next_state = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_states)));
                t.output = static_cast<int>(rng.below(static_cast<std::uint64_t>(output_size)));
                spec.transitions[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)] = t;
            }
        }
        spec.initial_state = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_states)));
        if (fsm_detail::all_states_reachable(spec)) {
            spec.input_string.clear();
            for (std::int64_t i = 0; i < steps; ++i) {
                spec.input_string += spec.input_alphabet[rng.below(spec.input_alphabet.size())];
            }
            return spec;
        }
    }
    throw std::runtime_error("fsm generation failed: unreachable states after 100 attempts");
}

inline std::string render_fsm_table(const FsmSpec& spec) {
    std::string out = "States: ";
    for (int s = 0; s < spec.num_states; ++s) {
        if (s > 0) out += ", ";
        out += spec.state_name(s);
    }
    out += "\nInput alphabet: ";
    for (std::size_t i = 0; i < spec.input_alphabet.size(); ++i) {
        if (i > 0) out += ", ";
        out += spec.input_alphabet[i];
    }
    out += "\nOutput alphabet: ";
    for (std::size_t i = 0; i < spec.output_alphabet.size(); ++i) {
        if (i > 0) out += ", ";
        out += spec.output_alphabet[i];
    }
    out += "\nTransition rules, one per line as (state, input) -> (next state, output):\n";
    for (int s = 0; s < spec.num_states; ++s) {
        for (std::size_t i = 0; i < spec.input_alphabet.size(); ++i) {
            const FsmTransition& t = spec.transitions[static_cast<std::size_t>(s)][i];
            out += "(" + spec.state_name(s) + ", ";
            out += spec.input_alphabet[i];
            out += ") -> (" + spec.state_name(t.next_state) + ", ";
            out += spec.output_alphabet[static_cast<std::size_t>(t.output)];
            out += ")\n";
        }
    }
    return out;
}

inline TaskInstance gen_fsm(const AttributeSeed& seed) {
    FsmSpec spec = build_fsm_spec(seed);
    FsmTrace trace = simulate_fsm(spec);

    TaskInstance inst;
    inst.id = instance_id(seed);
    inst.task_kind = seed.task_kind;
    inst.tier = seed.tier;
    inst.seed = seed;
    inst.material = render_fsm_table(spec);

    std::size_t target = seed.target_tokens();
    std::ostringstream instr;
    instr << "Simulate the state machine step by step over the whole input string.\n"
          << "Initial state: " << spec.state_name(spec.initial_state)
          << ". Input string: " << spec.input_string << "\n"
          << "Output exactly one line per step, numbered from 1, in this exact format:\n"
          << "STEP i: state_before --input/output--> state_after\n"
          << "Example line: STEP 1: S0 --a/x--> S2\n"
          << "Produce all " << spec.input_string.size() << " steps and nothing else.\n"
          << "Your response must be approximately " << target << " tokens (about "
          << (target * 3) / 4 << " words) long.";
    inst.instruction = instr.str();

    inst.constraints.push_back(Json{{"kind", "fsm_run"},
                                    {"initial", spec.state_name(spec.initial_state)},
                                    {"input", spec.input_string}});
    Json steps = Json::array();
    for (const FsmStep& s : trace.steps) {
        steps.push_back(Json::array({"S" + std::to_string(s.state_before), std::string(1, s.input),
                                     "S" + std::to_string(s.state_after), std::string(1, s.output)}));
    }
    inst.verifiers.push_back(Json{{"kind", "fsm_trace"}, {"steps", steps}});

    Json table = Json::object();
    for (int s = 0; s < spec.num_states; ++s) {
        for (std::size_t i = 0; i < spec.input_alphabet.size(); ++i) {
            const FsmTransition& t = spec.transitions[static_cast<std::size_t>(s)][i];
            std::string key = spec.state_name(s) + "," + std::string(1, spec.input_alphabet[i]);
            table[key] = Json::array({spec.state_name(t.next_state),
                                      std::string(1, spec.output_alphabet[static_cast<std::size_t>(t.output)])});
        }
    }
    inst.meta["transitions"] = table;
    inst.meta["gold_tokens"] = count_tokens(render_fsm_trace(trace));
    inst.check_invariants();
    return inst;
}

// ===========================================================================
// Paragraph Reordering (PR)
// ===========================================================================

struct ReorderSpec {
    std::vector<std::string> paragraphs;   // gold order
    std::vector<std::size_t> shuffled_order;  // presentation j shows paragraphs[shuffled_order[j]]
    std::vector<std::string> labels;          // presentation labels P1..Pn
    std::vector<std::string> gold_labels;     // label sequence restoring gold order
};

inline ReorderSpec build_reorder_spec(const AttributeSeed& seed, const Corpus& corpus) {
    if (seed.task_kind != TaskKind::PR) throw std::runtime_error("seed is not PR");
    std::size_t n = static_cast<std::size_t>(seed.knob_int("para_length"));

    auto rng = seed.stream("reorder");
    std::vector<std::size_t> eligible;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        if (corpus[d].size() >= n) eligible.push_back(d);
    }
    if (eligible.empty()) throw std::runtime_error("insufficient corpus");

    ReorderSpec spec;
    const Document& doc = corpus[eligible[rng.below(eligible.size())]];
    std::size_t start = rng.below(doc.size() - n + 1);
    spec.paragraphs.assign(doc.begin() + static_cast<std::ptrdiff_t>(start),
                           doc.begin() + static_cast<std::ptrdiff_t>(start + n));

    spec.shuffled_order.resize(n);
    for (std::size_t i = 0; i < n; ++i) spec.shuffled_order[i] = i;
    if (n >= 2) {
        do {
            rng.shuffle(spec.shuffled_order);
        } while (std::is_sorted(spec.shuffled_order.begin(), spec.shuffled_order.end()));
    }

    for (std::size_t j = 0; j < n; ++j) spec.labels.push_back("P" + std::to_string(j + 1));
    // Gold answer: for each gold position, the presentation label holding it.
    std::vector<std::size_t> inverse(n);
    for (std::size_t j = 0; j < n; ++j) inverse[spec.shuffled_order[j]] = j;
    for (std::size_t k = 0; k < n; ++k) spec.gold_labels.push_back(spec.labels[inverse[k]]);
    return spec;
}

inline std::string render_order_line(const std::vector<std::string>& labels) {
    std::string line = "ORDER:";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        line += (i == 0 ? " " : ", ");
        line += labels[i];
    }
    return line;
}

inline TaskInstance gen_reorder(const AttributeSeed& seed, const Corpus& corpus) {
    ReorderSpec spec = build_reorder_spec(seed, corpus);
    std::size_t n = spec.paragraphs.size();

    TaskInstance inst;
    inst.id = instance_id(seed);
    inst.task_kind = seed.task_kind;
    inst.tier = seed.tier;
    inst.seed = seed;

    std::string material;
    for (std::size_t j = 0; j < n; ++j) {
        material += "[" + spec.labels[j] + "]\n";
        material += spec.paragraphs[spec.shuffled_order[j]];
        material += "\n\n";
    }
    inst.material = material;

    std::string label_list;
    for (std::size_t j = 0; j < n; ++j) {
        if (j > 0) label_list += ", ";
        label_list += spec.labels[j];
    }
    std::size_t target = seed.target_tokens();
    std::ostringstream instr;
    instr << "The paragraphs above come from one document but were shuffled.\n"
          << "Shuffled paragraph labels: " << label_list << ".\n"
          << "Determine the coherent original order. Your output must start with a single line\n"
          << "ORDER: Pi, Pj, ... listing every label exactly once in the reconstructed order,\n"
          << "followed by a blank line and the full text of the paragraphs rewritten in that order.\n"
          << "Your response must be approximately " << target << " tokens (about "
          << (target * 3) / 4 << " words) long.";
    inst.instruction = instr.str();

    Json perm = Json::array();
    for (std::size_t v : spec.shuffled_order) perm.push_back(v);
    inst.constraints.push_back(Json{{"kind", "order_shuffled"}, {"labels", spec.labels}});
    inst.verifiers.push_back(Json{{"kind", "order_gold"}, {"labels", spec.gold_labels}});
    inst.meta["shuffled_order"] = perm;

    std::string gold_text = render_order_line(spec.gold_labels) + "\n\n";
    for (std::size_t k = 0; k < n; ++k) {
        gold_text += spec.paragraphs[k];
        gold_text += k + 1 < n ? "\n\n" : "\n";
    }
    inst.meta["gold_tokens"] = count_tokens(gold_text);
    inst.check_invariants();
    return inst;
}

/// Default corpus for a PR seed when no external corpus file is configured:
/// synthesized from the seed itself, sized with slack around para_length.
inline Corpus default_reorder_corpus(const AttributeSeed& seed) {
    std::size_t n = static_cast<std::size_t>(seed.knob_int("para_length"));
    auto rng = seed.stream("corpus");
    return make_synthetic_corpus(rng, 2, n + 4);
}

}  // namespace covweave
