#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covweave/gen_code.hpp"
#include "covweave/gen_rule.hpp"
#include "covweave/judge.hpp"
#include "covweave/metrics.hpp"
#include "covweave/process.hpp"
#include "covweave/tokenizer.hpp"
#include "covweave/types.hpp"

namespace covweave {

// ===========================================================================
// Output parsing helpers
// ===========================================================================

/// First fenced code block, else the whole text.
inline std::string extract_fenced_block(const std::string& text) {
    std::size_t open = text.find("```");
    if (open == std::string::npos) return text;
    std::size_t body = text.find('\n', open);
    if (body == std::string::npos) return text;
    ++body;
    std::size_t close = text.find("```", body);
    if (close == std::string::npos) return text.substr(body);
    return text.substr(body, close - body);
}

// ===========================================================================
// Rule-based scorers
// ===========================================================================

/// PR: parse the ORDER line; missing or duplicate labels degrade to the worst
/// completion (missing labels appended in shuffled presentation order); no
/// parseable line at all scores 0. Final is (tau + 1) / 2.
inline TaskScore score_reorder(const std::string& output, const ReorderSpec& spec,
                               const std::string& id = "", Tier tier = Tier::T1k) {
    double final_norm = 0.0;
    std::vector<std::string> notes;
    std::size_t at = std::string::npos;
    for (const std::string& marker : {std::string("ORDER:"), std::string("Order:"),
                                      std::string("order:")}) {
        at = output.find(marker);
        if (at != std::string::npos) break;
    }
    if (at == std::string::npos) {
        notes.push_back("no ORDER line");
    } else {
        std::size_t eol = output.find('\n', at);
        std::string line = output.substr(at, eol == std::string::npos ? std::string::npos : eol - at);
        std::set<std::string> universe(spec.labels.begin(), spec.labels.end());
        std::vector<std::string> predicted;
        std::set<std::string> seen;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] != 'P' && line[i] != 'p') continue;
            std::size_t j = i + 1;
            while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
            if (j == i + 1) continue;
            std::string label = "P" + line.substr(i + 1, j - i - 1);
            i = j - 1;
            if (!universe.count(label)) continue;  // out-of-range labels ignored
            if (!seen.insert(label).second) continue;  // duplicates keep first occurrence
            predicted.push_back(label);
        }
        if (predicted.empty()) {
            notes.push_back("ORDER line carried no valid labels");
        } else {
            if (predicted.size() < spec.labels.size()) {
                notes.push_back("missing labels appended in shuffled order");
                for (const std::string& label : spec.labels) {
                    if (!seen.count(label)) predicted.push_back(label);
                }
            }
            double tau = kendall_tau(predicted, spec.gold_labels);
            final_norm = (tau + 1.0) / 2.0;
        }
    }
    TaskScore score = make_task_score(id, TaskKind::PR, tier, {{"kendall_tau", final_norm}});
    score.notes = std::move(notes);
    return score;
}

/// SMS: step i matches iff the full (state_before, input, state_after,
/// output) tuple equals the oracle's step i. Unparsed steps are mismatches.
inline TaskScore score_fsm(const std::string& output,
                           const std::vector<std::array<std::string, 4>>& trace,
                           const std::string& id = "", Tier tier = Tier::T1k) {
    std::map<std::size_t, std::array<std::string, 4>> declared;
    std::istringstream in(output);
    std::string line;
    while (std::getline(in, line)) {
        std::size_t at = line.find("STEP");
        if (at == std::string::npos) continue;
        std::istringstream ls(line.substr(at + 4));
        std::size_t index;
        std::string colon_state, arrow, state_after;
        if (!(ls >> index)) continue;
        std::string rest;
        std::getline(ls, rest);
        // expected shape: ": S0 --a/x--> S1"
        std::size_t colon = rest.find(':');
        if (colon == std::string::npos) continue;
        std::istringstream body(rest.substr(colon + 1));
        std::string before, mid, after;
        if (!(body >> before >> mid >> after)) {
            // maybe glued: "S0 --a/x--> S1" splits as 3 tokens already handled
            continue;
        }
        // mid looks like --a/x-->
        if (mid.size() < 7 || mid.rfind("--", 0) != 0 || mid.substr(mid.size() - 3) != "-->") {
            continue;
        }
        std::string inner = mid.substr(2, mid.size() - 5);
        std::size_t slash = inner.find('/');
        if (slash == std::string::npos) continue;
        if (index < 1) continue;
        if (declared.count(index - 1)) continue;  // first declaration wins
        declared[index - 1] = {before, inner.substr(0, slash), after, inner.substr(slash + 1)};
    }
    std::size_t matches = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        auto it = declared.find(i);
        if (it == declared.end()) continue;
        const auto& d = it->second;
        if (d[0] == trace[i][0] && d[1] == trace[i][1] && d[2] == trace[i][2] &&
            d[3] == trace[i][3]) {
            ++matches;
        }
    }
    double ratio = trace.empty() ? 0.0
                                 : static_cast<double>(matches) / static_cast<double>(trace.size());
    TaskScore score = make_task_score(id, TaskKind::SMS, tier, {{"step_match_ratio", ratio}});
    // overall accuracy (all steps correct) is logged, not scored
    score.notes.push_back(std::string("overall_accuracy=") +
                          (matches == trace.size() && !trace.empty() ? "1" : "0"));
    return score;
}

struct KvCheck {
    std::string key;
    std::string value;
    std::int64_t index = 0;
    std::int64_t entry_count = 0;
};

/// KVG: tolerant map parse, then existence / position / format / length.
inline TaskScore score_kv(const std::string& output, const KvCheck& check,
                          const std::string& id = "", Tier tier = Tier::T1k) {
    auto entries = parse_kv_map(output);
    double existence = 0.0, position = 0.0, format = 0.0, length = 0.0;
    std::vector<std::string> notes;
    if (entries.empty()) {
        notes.push_back("unparseable map");
    } else {
        for (const auto& [k, v] : entries) {
            if (k == check.key && v == check.value) {
                existence = 1.0;
                break;
            }
        }
        if (check.index >= 0 && check.index < static_cast<std::int64_t>(entries.size())) {
            const auto& at = entries[static_cast<std::size_t>(check.index)];
            if (at.first == check.key && at.second == check.value) position = 1.0;
        }
        std::size_t well_formed = 0;
        for (const auto& [k, v] : entries) {
            bool ok = !k.empty() && k.find_first_not_of(
                                        "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_") == std::string::npos;
            if (ok) ++well_formed;
        }
        format = static_cast<double>(well_formed) / static_cast<double>(entries.size());
        length = length_score(entries.size(), static_cast<std::size_t>(check.entry_count));
    }
    TaskScore score = make_task_score(id, TaskKind::KVG, tier,
                                      {{"existence", existence},
                                       {"position", position},
                                       {"format", format},
                                       {"length", length}});
    score.notes = std::move(notes);
    return score;
}

struct ExecConfig {
    std::string interpreter = default_interpreter();
    bool no_exec = false;
    int timeout_ms = 5000;
};

/// CF: runnability (external interpreter, or skipped and excluded from the
/// mean under no_exec), style = 1 - residual injected-category findings /
/// ledger size, length vs the tier target.
inline TaskScore score_code(const std::string& output, const std::vector<Finding>& ledger,
                            std::size_t tier_target, const ExecConfig& exec,
                            const std::string& id = "", Tier tier = Tier::T1k,
                            const Tokenizer& tok = default_tokenizer()) {
    std::vector<std::pair<std::string, double>> subs;
    std::vector<std::string> notes;

    std::string program = extract_fenced_block(output);
    if (!exec.no_exec) {
        double runnability = 0.0;
        if (!program.empty()) {
            try {
                ProcessResult r = run_source_file(exec.interpreter, program, exec.timeout_ms);
                runnability = (!r.timed_out && r.exit_code == 0) ? 1.0 : 0.0;
                if (r.timed_out) notes.push_back("execution timed out");
            } catch (const std::exception& e) {
                notes.push_back(std::string("execution unavailable: ") + e.what());
            }
        }
        subs.emplace_back("runnability", runnability);
    } else {
        notes.push_back("runnability skipped (--no-exec)");
    }

    double style = 1.0;
    if (!ledger.empty()) {
        std::set<std::string> injected;
        for (const Finding& f : ledger) injected.insert(f.code);
        auto findings = check_violations(program);
        bool parse_destroyed =
            findings.size() == 1 && findings[0].code == "PARSE";
        if (program.empty() || parse_destroyed) {
            style = 0.0;
            if (parse_destroyed) notes.push_back("repair destroyed the program (PARSE)");
        } else {
            std::size_t residual = 0;
            for (const Finding& f : findings) {
                if (injected.count(f.code)) ++residual;
            }
            style = std::max(0.0, 1.0 - static_cast<double>(residual) /
                                            static_cast<double>(ledger.size()));
        }
    } else {
        notes.push_back("empty ledger; style vacuously 1");
    }
    subs.emplace_back("style", style);
    subs.emplace_back("length", length_score(count_tokens(output, tok), tier_target));

    TaskScore score = make_task_score(id, TaskKind::CF, tier, std::move(subs));
    score.notes = std::move(notes);
    return score;
}

// ===========================================================================
// Judge-based scorers
// ===========================================================================

struct CoverageResult {
    double coverage = 1.0;
    std::vector<bool> covered;
    std::vector<std::string> warnings;
};

/// Batched judge coverage over verifier items; empty item list is vacuously
/// covered (with a warning). Judge failures count items not_covered.
inline CoverageResult judge_coverage(const std::string& output,
                                     const std::vector<JudgeItem>& items, Judge& judge,
                                     JudgeMetric metric = JudgeMetric::Coverage) {
    CoverageResult result;
    if (items.empty()) {
        result.warnings.push_back("no verifier items; coverage vacuously 1.0");
        return result;
    }
    std::vector<Verdict> verdicts;
    try {
        verdicts = judge.judge(metric, items, output);
    } catch (const std::exception& e) {
        result.warnings.push_back(std::string("judge failure: ") + e.what() +
                                  "; items counted not_covered");
        result.covered.assign(items.size(), false);
        result.coverage = 0.0;
        return result;
    }
    result.covered.assign(items.size(), false);
    std::size_t positive = 0;
    for (const Verdict& v : verdicts) {
        if (v.item_index < items.size() && v.outcome) {
            result.covered[v.item_index] = true;
            ++positive;
        }
    }
    result.coverage = static_cast<double>(positive) / static_cast<double>(items.size());
    return result;
}

/// BioG: factual coverage of the verifier sentences; the optional fabrication
/// probe is logged as a diagnostic only.
inline TaskScore score_biog(const std::string& output, const TaskInstance& inst, Judge& judge,
                            bool fabrication_probe = false) {
    std::vector<JudgeItem> items;
    for (const Json& v : inst.verifiers) {
        items.push_back({"", v.at("text").get<std::string>(), ""});
    }
    CoverageResult cov = judge_coverage(output, items, judge);
    TaskScore score = make_task_score(inst.id, inst.task_kind, inst.tier,
                                      {{"coverage", cov.coverage}});
    score.notes = cov.warnings;
    if (fabrication_probe && !items.empty()) {
        std::string subject = inst.meta.value("protagonist", "the subject");
        std::vector<JudgeItem> probe = {
            {"", "The text must not assert facts about " + subject +
                     " beyond the provided fact list.",
             ""}};
        auto verdicts = judge.judge(JudgeMetric::Fabrication, probe, output);
        std::size_t flags = 0;
        for (const Verdict& v : verdicts) {
            if (v.outcome) ++flags;
        }
        score.notes.push_back("fabrication_flags=" + std::to_string(flags));
    }
    return score;
}

/// SR: coverage = queries addressed; correctness = addressed queries whose
/// stated answer matches the gold (judge compares with gold in-prompt).
inline TaskScore score_sales(const std::string& output, const TaskInstance& inst, Judge& judge) {
    std::vector<JudgeItem> items;
    for (const Json& v : inst.verifiers) {
        items.push_back({v.at("query").get<std::string>(), v.at("text").get<std::string>(), ""});
    }
    CoverageResult cov = judge_coverage(output, items, judge);
    double correctness = 0.0;
    std::vector<std::string> notes = cov.warnings;
    if (!items.empty()) {
        std::vector<JudgeItem> addressed;
        std::vector<std::size_t> addressed_idx;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (cov.covered[i]) {
                addressed.push_back(items[i]);
                addressed_idx.push_back(i);
            }
        }
        if (!addressed.empty()) {
            CoverageResult correct =
                judge_coverage(output, addressed, judge, JudgeMetric::Correctness);
            correctness = correct.coverage;
            for (const std::string& w : correct.warnings) notes.push_back(w);
        } else {
            notes.push_back("no queries addressed");
        }
    } else {
        correctness = 1.0;
    }
    TaskScore score = make_task_score(inst.id, inst.task_kind, inst.tier,
                                      {{"coverage", cov.coverage}, {"correctness", correctness}});
    score.notes = std::move(notes);
    return score;
}

/// NW: coverage = facts present in either form; ap_style = present facts
/// rendered in the corrected form (judge sees both forms in-prompt).
inline TaskScore score_news(const std::string& output, const TaskInstance& inst, Judge& judge) {
    std::vector<JudgeItem> items;
    for (const Json& v : inst.verifiers) {
        items.push_back({"", v.at("text").get<std::string>(), v.value("flawed", "")});
    }
    CoverageResult cov = judge_coverage(output, items, judge);
    double style = 0.0;
    std::vector<std::string> notes = cov.warnings;
    if (!items.empty()) {
        std::vector<JudgeItem> present;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (cov.covered[i]) present.push_back(items[i]);
        }
        if (!present.empty()) {
            CoverageResult styled = judge_coverage(output, present, judge, JudgeMetric::StyleForm);
            style = styled.coverage;
            for (const std::string& w : styled.warnings) notes.push_back(w);
        } else {
            notes.push_back("no facts present");
        }
    } else {
        style = 1.0;
    }
    TaskScore score = make_task_score(inst.id, inst.task_kind, inst.tier,
                                      {{"coverage", cov.coverage}, {"ap_style", style}});
    score.notes = std::move(notes);
    return score;
}

// ===========================================================================
// Instance-level dispatch (works from the dataset record alone)
// ===========================================================================

struct ScoringContext {
    Judge* judge = nullptr;
    ExecConfig exec;
    bool fabrication_probe = false;
};

inline TaskScore score_instance(const TaskInstance& inst, const std::string& output,
                                const ScoringContext& ctx) {
    switch (inst.task_kind) {
        case TaskKind::KVG: {
            const Json& v = inst.verifiers.at(0);
            KvCheck check;
            check.key = v.at("key").get<std::string>();
            check.value = v.at("value").get<std::string>();
            check.index = v.at("index").get<std::int64_t>();
            check.entry_count = v.at("entry_count").get<std::int64_t>();
            return score_kv(output, check, inst.id, inst.tier);
        }
        case TaskKind::SMS: {
            std::vector<std::array<std::string, 4>> trace;
            for (const Json& s : inst.verifiers.at(0).at("steps")) {
                trace.push_back({s[0].get<std::string>(), s[1].get<std::string>(),
                                 s[2].get<std::string>(), s[3].get<std::string>()});
            }
            return score_fsm(output, trace, inst.id, inst.tier);
        }
        case TaskKind::PR: {
            ReorderSpec spec;
            spec.labels = inst.constraints.at(0).at("labels").get<std::vector<std::string>>();
            spec.gold_labels = inst.verifiers.at(0).at("labels").get<std::vector<std::string>>();
            return score_reorder(output, spec, inst.id, inst.tier);
        }
        case TaskKind::CF: {
            return score_code(output, ledger_from_instance(inst), tier_target_tokens(inst.tier),
                              ctx.exec, inst.id, inst.tier);
        }
        case TaskKind::BioG: {
            if (!ctx.judge) throw std::runtime_error("judge not configured for BioG scoring");
            return score_biog(output, inst, *ctx.judge, ctx.fabrication_probe);
        }
        case TaskKind::SR: {
            if (!ctx.judge) throw std::runtime_error("judge not configured for SR scoring");
            return score_sales(output, inst, *ctx.judge);
        }
        case TaskKind::NW: {
            if (!ctx.judge) throw std::runtime_error("judge not configured for NW scoring");
            return score_news(output, inst, *ctx.judge);
        }
    }
    throw std::runtime_error("score_instance: unknown task kind");
}

// ===========================================================================
// Aggregation (reported x100, 2 decimals)
// ===========================================================================

struct ReportTable {
    std::vector<TaskKind> tasks;  // canonical order, present tasks only
    std::vector<Tier> tiers;      // ascending, present tiers only
    std::map<std::pair<TaskKind, Tier>, double> cell;        // mean final x100
    std::map<std::pair<TaskKind, Tier>, std::size_t> count;  // instances per cell
    std::map<TaskKind, double> task_avg;  // instance mean across tiers x100
    std::map<Tier, double> tier_avg;      // mean of cell means at tier x100
    double overall = 0.0;                 // mean of all cell means x100
    std::size_t warnings = 0;             // missing results scored 0
};

inline ReportTable aggregate(const std::vector<TaskScore>& scores, std::size_t warnings = 0) {
    ReportTable table;
    table.warnings = warnings;
    std::map<std::pair<TaskKind, Tier>, std::pair<double, std::size_t>> cells;
    std::map<TaskKind, std::pair<double, std::size_t>> task_sums;
    for (const TaskScore& s : scores) {
        auto key = std::make_pair(s.task_kind, s.tier);
        cells[key].first += s.final_score;
        cells[key].second += 1;
        task_sums[s.task_kind].first += s.final_score;
        task_sums[s.task_kind].second += 1;
    }
    for (TaskKind k : kAllTasks) {
        bool present = false;
        for (Tier t : kAllTiers) {
            if (cells.count({k, t})) present = true;
        }
        if (present) table.tasks.push_back(k);
    }
    for (Tier t : kAllTiers) {
        bool present = false;
        for (TaskKind k : kAllTasks) {
            if (cells.count({k, t})) present = true;
        }
        if (present) table.tiers.push_back(t);
    }
    double overall_sum = 0.0;
    std::size_t overall_n = 0;
    for (const auto& [key, sum_n] : cells) {
        double mean = 100.0 * sum_n.first / static_cast<double>(sum_n.second);
        table.cell[key] = mean;
        table.count[key] = sum_n.second;
        overall_sum += mean;
        ++overall_n;
    }
    for (const auto& [task, sum_n] : task_sums) {
        table.task_avg[task] = 100.0 * sum_n.first / static_cast<double>(sum_n.second);
    }
    for (Tier t : table.tiers) {
        double sum = 0.0;
        std::size_t n = 0;
        for (TaskKind k : table.tasks) {
            auto it = table.cell.find({k, t});
            if (it != table.cell.end()) {
                sum += it->second;
                ++n;
            }
        }
        if (n > 0) table.tier_avg[t] = sum / static_cast<double>(n);
    }
    if (overall_n > 0) table.overall = overall_sum / static_cast<double>(overall_n);
    return table;
}

namespace report_detail {

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace report_detail

inline std::string render_report_markdown(const ReportTable& table) {
    using report_detail::fmt2;
    std::ostringstream out;
    out << "# CoV-Eval report\n\n";
    out << "| Task |";
    for (Tier t : table.tiers) out << " " << to_string(t) << " |";
    out << " Task avg |\n|---|";
    for (std::size_t i = 0; i < table.tiers.size(); ++i) out << "---|";
    out << "---|\n";
    for (TaskKind k : table.tasks) {
        out << "| " << to_string(k) << " |";
        for (Tier t : table.tiers) {
            auto it = table.cell.find({k, t});
            out << " " << (it == table.cell.end() ? "-" : fmt2(it->second)) << " |";
        }
        out << " " << fmt2(table.task_avg.at(k)) << " |\n";
    }
    out << "| Length avg |";
    for (Tier t : table.tiers) out << " " << fmt2(table.tier_avg.at(t)) << " |";
    out << " " << fmt2(table.overall) << " |\n\n";
    out << "Overall: " << fmt2(table.overall) << "\n";
    if (table.warnings > 0) {
        out << "\nWarnings: " << table.warnings << " instance(s) had no result and scored 0.\n";
    }
    return out.str();
}

inline std::string render_report_text(const ReportTable& table) {
    using report_detail::fmt2;
    std::ostringstream out;
    out << "Task scores (x100):\n";
    for (TaskKind k : table.tasks) {
        out << "  " << to_string(k) << ":";
        for (Tier t : table.tiers) {
            auto it = table.cell.find({k, t});
            out << "  " << to_string(t) << "=" << (it == table.cell.end() ? "-" : fmt2(it->second));
        }
        out << "  avg=" << fmt2(table.task_avg.at(k)) << "\n";
    }
    out << "Length scores:";
    for (Tier t : table.tiers) out << "  " << to_string(t) << "=" << fmt2(table.tier_avg.at(t));
    out << "\nOverall: " << fmt2(table.overall) << "\n";
    if (table.warnings > 0) {
        out << "Warnings: " << table.warnings << " instance(s) missing results scored 0\n";
    }
    return out.str();
}

}  // namespace covweave
