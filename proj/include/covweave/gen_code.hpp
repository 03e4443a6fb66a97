#pragma once

#include <algorithm>
#include <cctype>
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
// Built-in style violation detector
//
// Offline detector for exactly the injectable rule subset. It works at the
// line/token level: strings and comments are masked, bracket depth and
// triple-quoted strings are tracked across lines. Anything the scanner cannot
// tokenize (unterminated string, unbalanced brackets) yields the single
// finding PARSE, signaling that a repair destroyed the program.
// ===========================================================================

struct Finding {
    std::string code;
    int line = 0;    // 1-based
    int column = 0;  // 1-based
    std::string description;
};

namespace lint_detail {

struct ScanLine {
    std::string raw;
    std::string masked;   // strings blanked to 'x', comments dropped, aligned
    bool in_string = false;  // entire line inside a triple-quoted string
    int start_depth = 0;
};

struct Scan {
    std::vector<ScanLine> lines;
    bool parse_error = false;
};

inline bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline Scan scan_source(const std::string& source) {
    Scan scan;
    std::vector<std::string> raw_lines;
    std::string cur;
    for (char c : source) {
        if (c == '\n') {
            raw_lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) raw_lines.push_back(cur);

    int depth = 0;
    bool in_triple = false;
    char triple_quote = '"';
    for (const std::string& raw : raw_lines) {
        ScanLine sl;
        sl.raw = raw;
        sl.start_depth = depth;
        sl.in_string = in_triple;
        std::string& m = sl.masked;
        std::size_t i = 0;
        std::size_t n = raw.size();
        while (i < n) {
            if (in_triple) {
                if (raw.compare(i, 3, std::string(3, triple_quote)) == 0) {
                    m += "xxx";
                    i += 3;
                    in_triple = false;
                } else {
                    m += 'x';
                    ++i;
                }
                continue;
            }
            char c = raw[i];
            if (c == '#') break;  // comment: masked line ends here
            if (c == '"' || c == '\'') {
                if (raw.compare(i, 3, std::string(3, c)) == 0) {
                    in_triple = true;
                    triple_quote = c;
                    m += "xxx";
                    i += 3;
                    continue;
                }
                m += c;
                ++i;
                bool closed = false;
                while (i < n) {
                    if (raw[i] == '\\' && i + 1 < n) {
                        m += "xx";
                        i += 2;
                        continue;
                    }
                    if (raw[i] == c) {
                        m += c;
                        ++i;
                        closed = true;
                        break;
                    }
                    m += 'x';
                    ++i;
                }
                if (!closed) {
                    scan.parse_error = true;
                    return scan;
                }
                continue;
            }
            if (c == '(' || c == '[' || c == '{') ++depth;
            if (c == ')' || c == ']' || c == '}') {
                --depth;
                if (depth < 0) {
                    scan.parse_error = true;
                    return scan;
                }
            }
            m += c;
            ++i;
        }
        scan.lines.push_back(std::move(sl));
    }
    if (in_triple || depth != 0) scan.parse_error = true;
    return scan;
}

inline std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::size_t indent_of(const std::string& s) {
    std::size_t i = 0;
    while (i < s.size() && s[i] == ' ') ++i;
    return i;
}

inline bool is_blank(const std::string& raw) { return strip(raw).empty(); }

inline const std::set<std::string>& binary_ops() {
    static const std::set<std::string> ops = {"=",  "==", "!=", "<",  ">",  "<=", ">=",
                                              "+",  "-",  "*",  "/",  "%",  "**", "//",
                                              "+=", "-=", "*=", "/=", "%="};
    return ops;
}

// Simple assignment `name = ...` (not ==, not augmented, not unpacking).
// Returns the identifier or empty.
inline std::string simple_assign_target(const std::string& masked) {
    std::size_t i = indent_of(masked);
    if (i == 0 || i >= masked.size()) return "";
    std::size_t start = i;
    if (!std::isalpha(static_cast<unsigned char>(masked[i])) && masked[i] != '_') return "";
    while (i < masked.size() && ident_char(masked[i])) ++i;
    std::size_t name_end = i;
    while (i < masked.size() && masked[i] == ' ') ++i;
    if (i >= masked.size() || masked[i] != '=') return "";
    if (i + 1 < masked.size() && masked[i + 1] == '=') return "";
    return masked.substr(start, name_end - start);
}

inline bool contains_upper(const std::string& s) {
    return std::any_of(s.begin(), s.end(),
                       [](char c) { return std::isupper(static_cast<unsigned char>(c)); });
}

inline std::size_t count_word(const std::string& text, const std::string& word) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(word, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !ident_char(text[pos - 1]);
        std::size_t after = pos + word.size();
        bool right_ok = after >= text.size() || !ident_char(text[after]);
        if (left_ok && right_ok) ++count;
        pos += word.size();
    }
    return count;
}

}  // namespace lint_detail

inline std::vector<Finding> check_violations(const std::string& source) {
    using namespace lint_detail;
    std::vector<Finding> findings;
    if (source.empty()) return findings;

    Scan scan = scan_source(source);
    if (scan.parse_error) {
        return {{"PARSE", 1, 1, "source not parseable at the supported token level"}};
    }

    int blank_run = 0;
    for (std::size_t li = 0; li < scan.lines.size(); ++li) {
        const ScanLine& sl = scan.lines[li];
        int line_no = static_cast<int>(li) + 1;
        const std::string& raw = sl.raw;

        if (raw.size() > 79) {
            findings.push_back({"E501", line_no, 80,
                                "line too long (" + std::to_string(raw.size()) + " > 79 characters)"});
        }
        std::string stripped = strip(raw);
        if (stripped.empty()) {
            if (!raw.empty() && raw.find_first_not_of(" \t\r") == std::string::npos &&
                raw.find_first_of(" \t") != std::string::npos) {
                findings.push_back({"W293", line_no, 1, "whitespace on blank line"});
            }
            ++blank_run;
            continue;
        }
        if (blank_run >= 3) {
            findings.push_back({"E303", line_no, 1,
                                "too many blank lines (" + std::to_string(blank_run) + ")"});
        }
        blank_run = 0;

        std::size_t last = raw.find_last_not_of(" \t");
        if (last != std::string::npos && last + 1 < raw.size()) {
            findings.push_back({"W291", line_no, static_cast<int>(last) + 2, "trailing whitespace"});
        }
        if (sl.in_string) continue;

        const std::string& m = sl.masked;

        // E231: comma not followed by whitespace or a closer
        for (std::size_t i = 0; i + 1 < m.size(); ++i) {
            if (m[i] == ',' && m[i + 1] != ' ' && m[i + 1] != ')' && m[i + 1] != ']' &&
                m[i + 1] != '}' && m[i + 1] != '\t') {
                findings.push_back({"E231", line_no, static_cast<int>(i) + 1,
                                    "missing whitespace after ','"});
            }
        }

        // E225: operator with identifier-ish characters hard against both sides
        {
            int depth = sl.start_depth;
            std::size_t i = 0;
            auto is_op_char = [](char c) {
                return c == '+' || c == '-' || c == '*' || c == '/' || c == '%' || c == '<' ||
                       c == '>' || c == '=' || c == '!';
            };
            while (i < m.size()) {
                char c = m[i];
                if (c == '(' || c == '[' || c == '{') ++depth;
                if (c == ')' || c == ']' || c == '}') --depth;
                if (!is_op_char(c)) {
                    ++i;
                    continue;
                }
                std::size_t start = i;
                while (i < m.size() && is_op_char(m[i])) ++i;
                std::string op = m.substr(start, i - start);
                if (op == "->") continue;
                if (binary_ops().count(op) == 0) continue;
                if (start == 0 || i >= m.size()) continue;
                char before = m[start - 1];
                char after = m[i];
                bool tight_left = ident_char(before) || before == ')' || before == ']' || before == '"';
                bool tight_right = ident_char(after) || after == '(' || after == '[' || after == '"';
                if (!tight_left || !tight_right) continue;
                if (op == "=" && depth > 0) continue;  // keyword/default argument
                findings.push_back({"E225", line_no, static_cast<int>(start) + 1,
                                    "missing whitespace around operator"});
            }
        }

        // C400: generator expression wrapped in list(...)
        {
            std::size_t pos = m.find("list(");
            while (pos != std::string::npos) {
                bool word_start = pos == 0 || !ident_char(m[pos - 1]);
                if (word_start && m.find(" for ", pos) != std::string::npos) {
                    findings.push_back({"C400", line_no, static_cast<int>(pos) + 1,
                                        "unnecessary generator - rewrite as a list comprehension"});
                    break;
                }
                pos = m.find("list(", pos + 1);
            }
        }

        // SIM210
        {
            std::size_t pos = m.find("True if ");
            if (pos != std::string::npos && m.find(" else False", pos) != std::string::npos) {
                findings.push_back({"SIM210", line_no, static_cast<int>(pos) + 1,
                                    "use bool(...) instead of True if ... else False"});
            }
        }

        // def-line rules: N802, B006, B008
        if (stripped.rfind("def ", 0) == 0) {
            std::size_t name_start = m.find("def ") + 4;
            std::size_t paren = m.find('(', name_start);
            if (paren != std::string::npos) {
                std::string fn_name = strip(m.substr(name_start, paren - name_start));
                if (contains_upper(fn_name)) {
                    findings.push_back({"N802", line_no, static_cast<int>(name_start) + 1,
                                        "function name '" + fn_name + "' should be lowercase"});
                }
                for (std::size_t i = paren; i + 2 < m.size(); ++i) {
                    if (m[i] == '=' && (m[i + 1] == '[' || m[i + 1] == '{')) {
                        char open = m[i + 1];
                        char close = open == '[' ? ']' : '}';
                        if (m[i + 2] == close) {
                            findings.push_back({"B006", line_no, static_cast<int>(i) + 2,
                                                "do not use mutable data structures for argument "
                                                "defaults"});
                        }
                    }
                    if (m[i] == '=' && m[i + 1] != '=' && (i == 0 || m[i - 1] != '=') &&
                        (std::isalpha(static_cast<unsigned char>(m[i + 1])) || m[i + 1] == '_')) {
                        std::size_t j = i + 1;
                        while (j < m.size() && ident_char(m[j])) ++j;
                        if (j < m.size() && m[j] == '(') {
                            findings.push_back({"B008", line_no, static_cast<int>(i) + 2,
                                                "do not perform function calls in argument defaults"});
                        }
                    }
                }
            }
        }
    }

    // Function-scoped rules: N806, F841, SIM108
    std::vector<std::pair<std::size_t, std::size_t>> blocks;  // [start, end) line indices
    for (std::size_t li = 0; li < scan.lines.size(); ++li) {
        if (scan.lines[li].in_string) continue;
        if (scan.lines[li].masked.rfind("def ", 0) == 0) {
            std::size_t end = li + 1;
            while (end < scan.lines.size()) {
                const std::string& raw = scan.lines[end].raw;
                if (!is_blank(raw) && indent_of(raw) == 0 && !scan.lines[end].in_string) break;
                ++end;
            }
            blocks.emplace_back(li, end);
            li = end - 1;
        }
    }
    for (auto [start, end] : blocks) {
        std::string block_text;
        for (std::size_t li = start; li < end; ++li) {
            block_text += scan.lines[li].masked;
            block_text += '\n';
        }
        for (std::size_t li = start + 1; li < end; ++li) {
            const std::string& m = scan.lines[li].masked;
            if (scan.lines[li].in_string || scan.lines[li].start_depth > 0) continue;
            std::string target = simple_assign_target(m);
            if (target.empty()) continue;
            int col = static_cast<int>(indent_of(m)) + 1;
            if (contains_upper(target)) {
                findings.push_back({"N806", static_cast<int>(li) + 1, col,
                                    "variable '" + target + "' in function should be lowercase"});
            }
            if (count_word(block_text, target) == 1) {
                findings.push_back({"F841", static_cast<int>(li) + 1, col,
                                    "local variable '" + target + "' is assigned to but never used"});
            }
        }
        // SIM108: if/else whose branches assign the same variable
        for (std::size_t li = start + 1; li + 3 < end; ++li) {
            const std::string& l0 = scan.lines[li].masked;
            std::size_t ind = indent_of(l0);
            std::string s0 = strip(l0);
            if (s0.rfind("if ", 0) != 0 || s0.back() != ':') continue;
            const std::string& l1 = scan.lines[li + 1].masked;
            const std::string& l2 = scan.lines[li + 2].masked;
            const std::string& l3 = scan.lines[li + 3].masked;
            if (indent_of(l1) != ind + 4 || indent_of(l3) != ind + 4) continue;
            if (strip(l2) != "else:" || indent_of(l2) != ind) continue;
            std::string v1 = simple_assign_target(l1);
            std::string v2 = simple_assign_target(l3);
            if (!v1.empty() && v1 == v2) {
                findings.push_back({"SIM108", static_cast<int>(li) + 1, static_cast<int>(ind) + 1,
                                    "use a ternary operator instead of an if-else block"});
            }
        }
    }

    std::sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
        if (a.line != b.line) return a.line < b.line;
        if (a.column != b.column) return a.column < b.column;
        return a.code < b.code;
    });
    return findings;
}

// ===========================================================================
// Clean program generation
// ===========================================================================

struct InjectionSite {
    std::string code;
    int line = 0;  // 1-based anchor in the clean source
    std::string payload;
};

struct CleanProgram {
    std::string text;
    std::vector<std::string> lines;
    std::vector<InjectionSite> sites;
};

struct ViolationRule {
    std::string code;
    std::string category;  // whitespace | naming | logic | bugbear
};

/// The supported subset: each code has a detector above and at least one
/// injector in the polluter below.
inline const std::vector<ViolationRule>& supported_rules() {
    static const std::vector<ViolationRule> rules = {
        {"E501", "whitespace"}, {"E225", "whitespace"}, {"E231", "whitespace"},
        {"W291", "whitespace"}, {"W293", "whitespace"}, {"E303", "whitespace"},
        {"N802", "naming"},     {"N806", "naming"},     {"F841", "logic"},
        {"C400", "logic"},      {"SIM210", "logic"},    {"SIM108", "logic"},
        {"B006", "bugbear"},    {"B008", "bugbear"},
    };
    return rules;
}

namespace cf_detail {

struct Choices {
    std::string noun;
    std::string fn_load, fn_scale, fn_validate, fn_filter, fn_merge, fn_count, fn_analyze, fn_report;
    bool with_scale = false, with_filter = false, with_merge = false, with_count = false;
    std::string var_value, var_item, var_entry, var_selected, var_kept, var_combined;
    std::string var_extras, var_limit, var_factor, var_ceiling, var_counts, var_marker;
    std::string var_total, var_avg, var_flag, var_band;
    std::string main_total, main_mean, main_label;
    std::string f841_name;
    long threshold = 0, scale_factor = 0, limit = 0, ceiling = 0;
};

inline const std::vector<std::string>& cf_adjectives() {
    static const std::vector<std::string> v = {
        "amber", "brisk", "coastal", "dusty", "early", "faded", "grand", "hollow", "iron",
        "late", "mellow", "noble", "pale", "rapid", "solid", "tidal", "urban", "vivid"};
    return v;
}

inline const std::vector<std::string>& cf_nouns() {
    static const std::vector<std::string> v = {
        "harbor", "ledger", "market", "signal", "bridge", "meadow", "portal", "engine",
        "canyon", "beacon", "circuit", "garden", "anchor", "lantern", "quarry", "summit"};
    return v;
}

inline const std::vector<std::string>& cf_tags() {
    static const std::vector<std::string> v = {"north", "south", "east", "west",
                                               "core", "rim", "delta", "apex"};
    return v;
}

inline Choices draw_choices(SeededStream& rng) {
    Choices c;
    c.noun = rng.pick<std::string>({"records", "entries", "readings", "samples", "orders"});
    c.fn_load = rng.pick<std::string>({"load", "fetch", "gather", "collect"}) + "_" + c.noun;
    c.fn_scale = rng.pick<std::string>({"scale", "adjust", "boost"}) + "_" + c.noun;
    c.fn_validate = rng.pick<std::string>({"validate", "screen", "vet"}) + "_" + c.noun;
    c.fn_filter = rng.pick<std::string>({"filter_outliers", "drop_outliers", "trim_extremes"});
    c.fn_merge = rng.pick<std::string>({"merge_extras", "append_extras", "extend_batch"});
    c.fn_count = rng.pick<std::string>({"count_tags", "tally_tags", "bucket_tags"});
    c.fn_analyze = rng.pick<std::string>({"analyze", "summarize", "evaluate"}) + "_" + c.noun;
    c.fn_report = rng.pick<std::string>({"report_summary", "print_summary", "emit_summary"});

    // 4 core stages plus 0-4 optional ones
    c.with_scale = rng.chance(0.5);
    c.with_filter = rng.chance(0.5);
    c.with_merge = rng.chance(0.6);
    c.with_count = rng.chance(0.7);

    c.var_value = rng.pick<std::string>({"value", "amount", "worth"});
    c.var_item = "item";
    c.var_entry = rng.pick<std::string>({"entry_copy", "adjusted_row"});
    c.var_selected = rng.pick<std::string>({"selected", "approved", "passing"});
    c.var_kept = rng.pick<std::string>({"kept", "retained"});
    c.var_combined = rng.pick<std::string>({"combined", "merged_rows"});
    c.var_extras = rng.pick<std::string>({"extras", "additions"});
    c.var_limit = rng.pick<std::string>({"limit", "cutoff"});
    c.var_factor = rng.pick<std::string>({"factor", "multiplier"});
    c.var_ceiling = rng.pick<std::string>({"ceiling", "upper_bound"});
    c.var_counts = rng.pick<std::string>({"tag_counts", "tag_totals"});
    c.var_marker = rng.pick<std::string>({"marker", "bucket"});
    c.var_total = rng.pick<std::string>({"total_value", "running_total"});
    c.var_avg = rng.pick<std::string>({"avg_value", "mean_value", "norm_value"});
    c.var_flag = rng.pick<std::string>({"flagged", "over_line"});
    c.var_band = rng.pick<std::string>({"band_label", "grade_label"});
    c.main_total = rng.pick<std::string>({"grand_total", "final_total"});
    c.main_mean = rng.pick<std::string>({"mean_level", "average_level"});
    c.main_label = rng.pick<std::string>({"status_label", "overall_label"});
    c.f841_name = rng.pick<std::string>({"spare_margin", "unused_offset", "idle_checksum"});

    c.threshold = rng.range(1500, 6000);
    c.scale_factor = rng.range(2, 9);
    c.limit = rng.range(300000, 900000);
    c.ceiling = rng.range(500000, 900000);
    return c;
}

inline std::string make_row(SeededStream& rng) {
    std::string name = rng.pick(cf_adjectives()) + "_" + rng.pick(cf_nouns());
    long units = rng.range(1, 40);
    long price = rng.range(2, 90);
    return "    (\"" + name + "\", " + std::to_string(units) + ", " + std::to_string(price) +
           ", \"" + rng.pick(cf_tags()) + "\"),";
}

class Builder {
public:
    void add(std::string text) { lines_.push_back(std::move(text)); }
    void add(std::string text, const std::string& code, std::string payload = "") {
        lines_.push_back(std::move(text));
        site(code, std::move(payload));
    }
    void site(const std::string& code, std::string payload = "") {
        sites_.push_back({code, static_cast<int>(lines_.size()), std::move(payload)});
    }
    CleanProgram finish() const {
        CleanProgram p;
        p.lines = lines_;
        p.sites = sites_;
        for (const std::string& l : lines_) {
            p.text += l;
            p.text += '\n';
        }
        return p;
    }

private:
    std::vector<std::string> lines_;
    std::vector<InjectionSite> sites_;
};

inline CleanProgram assemble(const Choices& c, const std::vector<std::string>& rows) {
    Builder b;
    const std::string& noun = c.noun;

    b.add("DATA_ROWS = [");
    static const char* row_cycle[3] = {"E501", "E231", "W291"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        b.add(rows[i], row_cycle[i % 3]);
    }
    b.add("]");
    b.add("THRESHOLD = " + std::to_string(c.threshold));
    b.add("SCALE_FACTOR = " + std::to_string(c.scale_factor));
    b.add("");
    b.add("", "W293");
    b.add("def " + c.fn_load + "():");
    b.add("    " + noun + " = []");
    b.add("    for row in DATA_ROWS:");
    b.add("        name, units, price, tag = row");
    b.add("        " + c.var_value + " = units * price * SCALE_FACTOR", "E225", "*");
    b.add("        " + noun + ".append({\"name\": name, \"value\": " + c.var_value +
              ", \"tag\": tag})",
          "E501");
    b.add("    return " + noun);
    b.add("");
    b.add("");

    if (c.with_scale) {
        b.add("def " + c.fn_scale + "(" + noun + ", " + c.var_factor + "=SCALE_FACTOR):", "B008",
              c.var_factor);
        b.add("    adjusted = []");
        b.add("    for " + c.var_item + " in " + noun + ":");
        b.add("        " + c.var_entry + " = dict(" + c.var_item + ")");
        b.add("        " + c.var_entry + "[\"value\"] = " + c.var_entry + "[\"value\"] * " +
                  c.var_factor,
              "E225", "*");
        b.add("        adjusted.append(" + c.var_entry + ")");
        b.add("    return adjusted");
        b.add("");
        b.add("");
    }

    b.add("def " + c.fn_validate + "(" + noun + ", " + c.var_limit + "=None):");
    b.add("    if " + c.var_limit + " is None:");
    b.add("        " + c.var_limit + " = " + std::to_string(c.limit));
    b.add("    " + c.var_selected + " = [" + c.var_item + " for " + c.var_item + " in " + noun +
              " if " + c.var_item + "[\"value\"] < " + c.var_limit + "]",
          "C400");
    b.add("    return " + c.var_selected, "E303");
    b.add("");
    b.add("");

    if (c.with_filter) {
        b.add("def " + c.fn_filter + "(" + noun + ", " + c.var_ceiling + "):");
        b.add("    " + c.var_kept + " = []");
        b.add("    for " + c.var_item + " in " + noun + ":");
        b.add("        if " + c.var_item + "[\"value\"] <= " + c.var_ceiling + ":");
        b.add("            " + c.var_kept + ".append(" + c.var_item + ")", "W291");
        b.add("    return " + c.var_kept, "E303");
        b.add("");
        b.add("");
    }

    if (c.with_merge) {
        b.add("def " + c.fn_merge + "(" + noun + ", " + c.var_extras + "=None):", "B006",
              c.var_extras);
        b.add("    if " + c.var_extras + " is None:");
        b.add("        " + c.var_extras + " = []");
        b.add("    " + c.var_combined + " = []");
        b.add("    for " + c.var_item + " in " + noun + ":");
        b.add("        " + c.var_combined + ".append(" + c.var_item + ")");
        b.add("    for " + c.var_item + " in " + c.var_extras + ":");
        b.add("        " + c.var_combined + ".append(" + c.var_item + ")", "W291");
        b.add("    return " + c.var_combined);
        b.add("");
        b.add("");
    }

    if (c.with_count) {
        b.add("def " + c.fn_count + "(" + noun + "):");
        b.add("    " + c.var_counts + " = {}");
        b.add("    for " + c.var_item + " in " + noun + ":");
        b.add("        " + c.var_marker + " = " + c.var_item + "[\"tag\"]");
        b.add("        " + c.var_counts + "[" + c.var_marker + "] = " + c.var_counts + ".get(" +
                  c.var_marker + ", 0) + 1",
              "E225", "+");
        b.add("    return " + c.var_counts, "E303");
        b.add("");
        b.add("");
    }

    b.add("def " + c.fn_analyze + "(" + noun + "):");
    b.add("    " + c.var_total + " = 0");
    b.add("    for " + c.var_item + " in " + noun + ":");
    b.add("        " + c.var_total + " = " + c.var_total + " + " + c.var_item + "[\"value\"]",
          "E225", "+");
    b.add("    " + c.var_avg + " = " + c.var_total + " / max(len(" + noun + "), 1)", "N806",
          c.var_avg);
    b.add("    " + c.var_flag + " = bool(" + c.var_avg + " > THRESHOLD)", "SIM210");
    b.add("    " + c.var_band + " = \"high\" if " + c.var_flag + " else \"low\"", "SIM108");
    b.add("    return " + c.var_total + ", " + c.var_avg + ", " + c.var_band, "F841", c.f841_name);
    b.add("");
    b.add("");

    std::string report_params = c.main_total + ", " + c.main_mean + ", " + c.main_label;
    if (c.with_count) report_params += ", " + c.var_counts;
    b.add("def " + c.fn_report + "(" + report_params + "):");
    b.add("    print(\"total: \" + str(" + c.main_total + "))", "W291");
    b.add("    print(\"average: \" + str(round(" + c.main_mean + ", 2)))", "E231");
    b.add("    print(\"label: \" + " + c.main_label + ")", "E501");
    if (c.with_count) {
        b.add("    for " + c.var_marker + " in sorted(" + c.var_counts + "):");
        b.add("        print(\"tag \" + " + c.var_marker + " + \": \" + str(" + c.var_counts + "[" +
              c.var_marker + "]))");
    }
    b.add("");
    b.add("", "W293");
    b.add("def main():");
    b.add("    " + noun + " = " + c.fn_load + "()");
    if (c.with_scale) b.add("    " + noun + " = " + c.fn_scale + "(" + noun + ")", "W291");
    b.add("    " + c.var_selected + " = " + c.fn_validate + "(" + noun + ")");
    if (c.with_filter) {
        b.add("    " + c.var_selected + " = " + c.fn_filter + "(" + c.var_selected + ", " +
                  std::to_string(c.ceiling) + ")",
              "E231");
    }
    std::string pipeline_out = c.var_selected;
    if (c.with_merge) {
        b.add("    " + c.var_combined + " = " + c.fn_merge + "(" + c.var_selected + ")", "W291");
        pipeline_out = c.var_combined;
    }
    b.add("    " + c.main_total + ", " + c.main_mean + ", " + c.main_label + " = " + c.fn_analyze +
              "(" + pipeline_out + ")",
          "E231");
    if (c.with_count) {
        b.add("    " + c.var_counts + " = " + c.fn_count + "(" + pipeline_out + ")");
    }
    std::string report_args = c.main_total + ", " + c.main_mean + ", " + c.main_label;
    if (c.with_count) report_args += ", " + c.var_counts;
    b.add("    " + c.fn_report + "(" + report_args + ")", "E501");
    b.add("");
    b.add("");
    b.add("if __name__ == \"__main__\":");
    b.add("    main()");
    return b.finish();
}

/// N802 rename target: one of the defined function names.
inline std::string n802_target(const Choices& c, SeededStream& rng) {
    std::vector<std::string> candidates = {c.fn_validate, c.fn_analyze};
    if (c.with_scale) candidates.push_back(c.fn_scale);
    if (c.with_merge) candidates.push_back(c.fn_merge);
    if (c.with_filter) candidates.push_back(c.fn_filter);
    if (c.with_count) candidates.push_back(c.fn_count);
    return rng.pick(candidates);
}

inline std::string snake_to_camel(const std::string& name) {
    std::string out;
    bool up = false;
    for (char ch : name) {
        if (ch == '_') {
            up = true;
            continue;
        }
        out += up ? static_cast<char>(std::toupper(static_cast<unsigned char>(ch))) : ch;
        up = false;
    }
    return out;
}

inline void replace_word_everywhere(std::vector<std::string>& lines, const std::string& from,
                                    const std::string& to) {
    for (std::string& line : lines) {
        std::string out;
        std::size_t pos = 0;
        while (pos < line.size()) {
            std::size_t hit = line.find(from, pos);
            if (hit == std::string::npos) {
                out += line.substr(pos);
                break;
            }
            bool left_ok = hit == 0 || !lint_detail::ident_char(line[hit - 1]);
            std::size_t after = hit + from.size();
            bool right_ok = after >= line.size() || !lint_detail::ident_char(line[after]);
            out += line.substr(pos, hit - pos);
            out += (left_ok && right_ok) ? to : from;
            pos = after;
        }
        line = out;
    }
}

}  // namespace cf_detail

/// Deterministic clean program: 4-8 inter-dependent stage functions over a
/// generated data table, plus a main block. Every rendered line stays within
/// 79 columns and the built-in detector reports zero findings (asserted).
inline CleanProgram gen_clean_program(const AttributeSeed& seed) {
    if (seed.task_kind != TaskKind::CF) throw std::runtime_error("seed is not CF");
    auto rng = seed.stream("cf-clean");
    cf_detail::Choices choices = cf_detail::draw_choices(rng);

    std::size_t target_chars = 4 * seed.target_tokens();
    std::int64_t error_lines = seed.knob_int("error_lines");
    std::size_t slack = static_cast<std::size_t>(error_lines) * 12;

    CleanProgram skeleton = cf_detail::assemble(choices, {});
    std::size_t base_chars = skeleton.text.size();
    std::vector<std::string> rows;
    std::size_t row_chars = 0;
    while (base_chars + row_chars + slack < target_chars || rows.size() < 3) {
        rows.push_back(cf_detail::make_row(rng));
        row_chars += rows.back().size() + 1;
    }

    CleanProgram program = cf_detail::assemble(choices, rows);
    // N802 site anchors at the def line of the chosen function.
    std::string n802_name = cf_detail::n802_target(choices, rng);
    for (std::size_t i = 0; i < program.lines.size(); ++i) {
        if (program.lines[i].rfind("def " + n802_name + "(", 0) == 0) {
            program.sites.push_back({"N802", static_cast<int>(i) + 1, n802_name});
            break;
        }
    }

    for (const std::string& line : program.lines) {
        if (line.size() > 79) throw std::logic_error("clean program line exceeds 79 columns");
    }
    if (!check_violations(program.text).empty()) {
        throw std::logic_error("clean program is not violation-free");
    }
    return program;
}

// ===========================================================================
// Pollution
// ===========================================================================

struct CodeArtifact {
    std::string clean_source;
    std::string polluted_source;
    std::vector<Finding> ledger;
    double violation_prob = 0.85;
    std::int64_t error_lines = 0;
};

namespace cf_detail {

inline void apply_site(std::vector<std::string>& lines, const InjectionSite& site) {
    auto idx = static_cast<std::size_t>(site.line - 1);
    std::string& line = lines[idx];
    const std::string& code = site.code;
    if (code == "E501") {
        line += "  # kept inline for the quarterly summary report";
        while (line.size() <= 82) line += " notes";
    } else if (code == "E231") {
        std::size_t pos = line.find(", ");
        if (pos == std::string::npos) throw std::logic_error("E231 site without comma");
        line.erase(pos + 1, 1);
    } else if (code == "W291") {
        line += "  ";
    } else if (code == "W293") {
        line = "    ";
    } else if (code == "E225") {
        std::string spaced = " " + site.payload + " ";
        std::size_t pos = line.find(spaced);
        if (pos == std::string::npos) throw std::logic_error("E225 site without operator");
        line = line.substr(0, pos) + site.payload + line.substr(pos + spaced.size());
    } else if (code == "E303") {
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(idx), 3, std::string());
    } else if (code == "F841") {
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(idx),
                     "    " + site.payload + " = 0");
    } else if (code == "C400") {
        std::size_t open = line.find("= [");
        if (open == std::string::npos || line.empty() || line.back() != ']') {
            throw std::logic_error("C400 site shape mismatch");
        }
        line = line.substr(0, open) + "= list(" + line.substr(open + 3, line.size() - open - 4) + ")";
    } else if (code == "SIM210") {
        std::size_t open = line.find("bool(");
        if (open == std::string::npos || line.back() != ')') {
            throw std::logic_error("SIM210 site shape mismatch");
        }
        std::string inner = line.substr(open + 5, line.size() - open - 6);
        line = line.substr(0, open) + "True if " + inner + " else False";
    } else if (code == "SIM108") {
        std::size_t eq = line.find(" = ");
        std::size_t kw_if = line.find(" if ");
        std::size_t kw_else = line.find(" else ");
        if (eq == std::string::npos || kw_if == std::string::npos || kw_else == std::string::npos) {
            throw std::logic_error("SIM108 site shape mismatch");
        }
        std::string indent(lint_detail::indent_of(line), ' ');
        std::string target = line.substr(indent.size(), eq - indent.size());
        std::string val_true = line.substr(eq + 3, kw_if - eq - 3);
        std::string cond = line.substr(kw_if + 4, kw_else - kw_if - 4);
        std::string val_false = line.substr(kw_else + 6);
        std::vector<std::string> expansion = {
            indent + "if " + cond + ":",
            indent + "    " + target + " = " + val_true,
            indent + "else:",
            indent + "    " + target + " = " + val_false,
        };
        lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(idx));
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(idx), expansion.begin(),
                     expansion.end());
    } else if (code == "B006") {
        std::size_t pos = line.find(site.payload + "=None");
        if (pos == std::string::npos) throw std::logic_error("B006 site shape mismatch");
        line = line.substr(0, pos) + site.payload + "=[]" +
               line.substr(pos + site.payload.size() + 5);
        // remove the two None-guard lines that immediately follow the def
        lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(idx) + 1,
                    lines.begin() + static_cast<std::ptrdiff_t>(idx) + 3);
    } else if (code == "B008") {
        std::size_t pos = line.find(site.payload + "=");
        if (pos == std::string::npos) throw std::logic_error("B008 site shape mismatch");
        std::size_t val_start = pos + site.payload.size() + 1;
        std::size_t val_end = val_start;
        while (val_end < line.size() && lint_detail::ident_char(line[val_end])) ++val_end;
        line = line.substr(0, val_start) + "int(" + line.substr(val_start, val_end - val_start) +
               ")" + line.substr(val_end);
    } else if (code == "N802" || code == "N806") {
        replace_word_everywhere(lines, site.payload, snake_to_camel(site.payload));
    } else {
        throw std::logic_error("unknown injection site code: " + code);
    }
}

}  // namespace cf_detail

struct PollutionResult {
    std::string polluted;
    std::vector<Finding> ledger;
};

/// Walks the program's injection sites, injecting with probability
/// violation_prob until at least error_lines distinct lines carry violations.
/// Only semantics-preserving transforms are applied. The ledger carries the
/// detector's findings on the polluted text; per-rule finding counts must
/// match the selected sites exactly or generation aborts.
inline PollutionResult pollute(const CleanProgram& clean, double violation_prob,
                               std::int64_t error_lines, SeededStream& rng) {
    PollutionResult result;
    std::vector<InjectionSite> order = clean.sites;
    rng.shuffle(order);

    // The walk cycles rule codes round-robin so every artifact carries a broad
    // rule mix instead of being dominated by the plentiful data-row sites.
    std::map<std::string, std::vector<InjectionSite>> by_code;
    for (const InjectionSite& site : order) by_code[site.code].push_back(site);
    std::vector<std::string> codes;
    for (const auto& [code, pool] : by_code) codes.push_back(code);
    rng.shuffle(codes);

    std::vector<InjectionSite> selected;
    std::set<int> used_lines;
    if (error_lines > 0) {
        std::map<std::string, std::size_t> cursor;
        for (int pass = 0; pass < 200; ++pass) {
            if (static_cast<std::int64_t>(selected.size()) >= error_lines) break;
            bool any_available = false;
            for (const std::string& code : codes) {
                if (static_cast<std::int64_t>(selected.size()) >= error_lines) break;
                std::vector<InjectionSite>& pool = by_code[code];
                std::size_t& cur = cursor[code];
                while (cur < pool.size() && used_lines.count(pool[cur].line)) ++cur;
                if (cur >= pool.size()) continue;
                any_available = true;
                if (!rng.chance(violation_prob)) continue;
                used_lines.insert(pool[cur].line);
                selected.push_back(pool[cur]);
                ++cur;
            }
            if (!any_available) break;
        }
        if (static_cast<std::int64_t>(selected.size()) < error_lines) {
            throw std::runtime_error("pollution budget exceeded");
        }
    }

    std::vector<std::string> lines = clean.lines;
    std::sort(selected.begin(), selected.end(),
              [](const InjectionSite& a, const InjectionSite& b) { return a.line > b.line; });
    for (const InjectionSite& site : selected) cf_detail::apply_site(lines, site);

    for (const std::string& line : lines) {
        result.polluted += line;
        result.polluted += '\n';
    }

    result.ledger = check_violations(result.polluted);
    std::map<std::string, std::size_t> expected, actual;
    for (const InjectionSite& s : selected) ++expected[s.code];
    for (const Finding& f : result.ledger) ++actual[f.code];
    if (expected != actual) {
        throw std::logic_error("injector produced unexpected findings");
    }
    return result;
}

inline CodeArtifact build_code_artifact(const AttributeSeed& seed) {
    CleanProgram clean = gen_clean_program(seed);
    double vp = seed.knob("violation_prob");
    std::int64_t error_lines = seed.knob_int("error_lines");
    auto rng = seed.stream("cf-pollute");
    PollutionResult polluted = pollute(clean, vp, error_lines, rng);

    CodeArtifact artifact;
    artifact.clean_source = clean.text;
    artifact.polluted_source = polluted.polluted;
    artifact.ledger = std::move(polluted.ledger);
    artifact.violation_prob = vp;
    artifact.error_lines = error_lines;
    return artifact;
}

inline TaskInstance gen_code_fixing(const AttributeSeed& seed) {
    CodeArtifact artifact = build_code_artifact(seed);

    TaskInstance inst;
    inst.id = instance_id(seed);
    inst.task_kind = seed.task_kind;
    inst.tier = seed.tier;
    inst.seed = seed;
    inst.material = artifact.polluted_source;

    std::size_t target = seed.target_tokens();
    std::ostringstream instr;
    instr << "The Python program above contains injected style violations.\n"
          << "Repair all style violations while keeping the program's behavior identical.\n"
          << "Affected regions:\n";
    for (const Finding& f : artifact.ledger) {
        instr << "- line " << f.line << ": " << f.code << " (" << f.description << ")\n";
    }
    instr << "Output the complete corrected program in a single fenced code block.\n"
          << "Your response must be approximately " << target << " tokens (about "
          << (target * 3) / 4 << " words) long.";
    inst.instruction = instr.str();

    for (const Finding& f : artifact.ledger) {
        inst.constraints.push_back(Json{{"kind", "style_region"}, {"rule", f.code}, {"line", f.line}});
        inst.verifiers.push_back(Json{{"kind", "style_fix"},
                                      {"rule", f.code},
                                      {"line", f.line},
                                      {"column", f.column},
                                      {"description", f.description}});
    }
    inst.meta["clean_source"] = artifact.clean_source;
    inst.meta["violation_prob"] = artifact.violation_prob;
    inst.meta["error_lines"] = artifact.error_lines;
    std::string gold = "```python\n" + artifact.clean_source + "```\n";
    inst.meta["gold_tokens"] = count_tokens(gold);
    inst.check_invariants();
    return inst;
}

/// Rebuilds the ledger from an instance's verifier records (scoring-side).
inline std::vector<Finding> ledger_from_instance(const TaskInstance& inst) {
    std::vector<Finding> ledger;
    for (const Json& v : inst.verifiers) {
        if (v.value("kind", "") != "style_fix") continue;
        Finding f;
        f.code = v.at("rule").get<std::string>();
        f.line = v.at("line").get<int>();
        f.column = v.at("column").get<int>();
        f.description = v.value("description", "");
        ledger.push_back(f);
    }
    return ledger;
}

}  // namespace covweave
