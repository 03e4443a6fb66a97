#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covweave/types.hpp"

namespace covweave {

// ===========================================================================
// JSONL persistence: stable field order, one record per line, lossless
// round-trips between files and domain types.
// ===========================================================================

inline Json instance_to_json(const TaskInstance& inst) {
    Json j;
    j["id"] = inst.id;
    j["task"] = to_string(inst.task_kind);
    j["tier"] = to_string(inst.tier);
    j["rng_seed"] = inst.seed.rng_seed;
    Json knobs = Json::object();
    for (const auto& [name, value] : inst.seed.knobs) knobs[name] = value;
    j["knobs"] = knobs;
    j["material"] = inst.material;
    j["instruction"] = inst.instruction;
    j["constraints"] = inst.constraints;
    j["verifiers"] = inst.verifiers;
    j["meta"] = inst.meta;
    return j;
}

inline TaskInstance instance_from_json(const Json& j) {
    TaskInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.task_kind = task_from_string(j.at("task").get<std::string>());
    inst.tier = tier_from_string(j.at("tier").get<std::string>());
    inst.seed.task_kind = inst.task_kind;
    inst.seed.tier = inst.tier;
    inst.seed.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    for (auto it = j.at("knobs").begin(); it != j.at("knobs").end(); ++it) {
        inst.seed.knobs[it.key()] = it.value().get<double>();
    }
    inst.material = j.at("material").get<std::string>();
    inst.instruction = j.at("instruction").get<std::string>();
    for (const Json& c : j.at("constraints")) inst.constraints.push_back(c);
    for (const Json& v : j.at("verifiers")) inst.verifiers.push_back(v);
    inst.meta = j.at("meta");
    inst.check_invariants();
    return inst;
}

inline Json result_to_json(const GenerationResult& r) {
    Json j;
    j["id"] = r.instance_id;
    j["output_text"] = r.output_text;
    j["truncated"] = r.truncated;
    j["output_tokens"] = r.output_tokens;
    j["latency_ms"] = r.latency_ms;
    j["error"] = r.error_note;
    return j;
}

inline GenerationResult result_from_json(const Json& j) {
    GenerationResult r;
    r.instance_id = j.at("id").get<std::string>();
    r.output_text = j.at("output_text").get<std::string>();
    r.truncated = j.at("truncated").get<bool>();
    r.output_tokens = j.at("output_tokens").get<std::size_t>();
    r.latency_ms = j.at("latency_ms").get<double>();
    r.error_note = j.value("error", "");
    return r;
}

inline Json score_to_json(const TaskScore& s) {
    Json j;
    j["id"] = s.instance_id;
    j["task"] = to_string(s.task_kind);
    j["tier"] = to_string(s.tier);
    Json subs = Json::array();
    for (const auto& [name, value] : s.sub_scores) subs.push_back(Json::array({name, value}));
    j["sub_scores"] = subs;
    j["final"] = s.final_score;
    j["notes"] = s.notes;
    return j;
}

inline TaskScore score_from_json(const Json& j) {
    TaskScore s;
    s.instance_id = j.at("id").get<std::string>();
    s.task_kind = task_from_string(j.at("task").get<std::string>());
    s.tier = tier_from_string(j.at("tier").get<std::string>());
    for (const Json& sub : j.at("sub_scores")) {
        s.sub_scores.emplace_back(sub.at(0).get<std::string>(), sub.at(1).get<double>());
    }
    s.final_score = j.at("final").get<double>();
    s.notes = j.value("notes", std::vector<std::string>{});
    return s;
}

// ---------------------------------------------------------------------------
// JSONL files
// ---------------------------------------------------------------------------

inline void append_jsonl(std::ofstream& out, const Json& record) {
    out << record.dump() << "\n";
    out.flush();  // flush-per-record keeps interrupted runs resumable
}

/// Reads a JSONL file. A torn final line (crash mid-append) is dropped and
/// the file truncated back to the last good record when `repair_tail` is set;
/// an unparseable line elsewhere is corruption and throws.
inline std::vector<Json> read_jsonl(const std::string& path, bool repair_tail = false) {
    std::vector<Json> records;
    std::ifstream in(path, std::ios::binary);
    if (!in) return records;
    std::string line;
    std::size_t good_bytes = 0;
    std::size_t line_no = 0;
    bool bad_tail = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(Json::parse(line));
            good_bytes += line.size() + 1;
        } catch (const std::exception&) {
            if (in.peek() == EOF) {
                bad_tail = true;
                break;
            }
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": unparseable JSONL record");
        }
    }
    in.close();
    if (bad_tail) {
        if (!repair_tail) {
            throw std::runtime_error(path + ": torn final record (rerun with repair to truncate)");
        }
        std::filesystem::resize_file(path, good_bytes);
    }
    return records;
}

}  // namespace covweave
