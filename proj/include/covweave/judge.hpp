#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covweave/gen_news.hpp"  // ChatFn, ReplayCache
#include "covweave/types.hpp"

namespace covweave {

// ===========================================================================
// LLM-as-a-Judge client and offline doubles
//
// Judge prompts always embed the gold verifier item: the judge compares, it
// never recalls. Verdicts parse to a closed vocabulary; an unparseable batch
// is retried once, then missing items count negative.
// ===========================================================================

enum class JudgeMetric { Coverage, Correctness, StyleForm, Fabrication };

struct JudgeItem {
    std::string question;  // query text, or empty
    std::string gold;      // verifier item: sentence / answer / corrected form
    std::string alt;       // secondary form (NW: the flawed rendering)
};

struct Verdict {
    std::size_t item_index = 0;
    bool outcome = false;
    std::string rationale;
};

class Judge {
public:
    virtual ~Judge() = default;
    virtual std::string name() const = 0;
    // One verdict per item, in item order.
    virtual std::vector<Verdict> judge(JudgeMetric metric, const std::vector<JudgeItem>& items,
                                       const std::string& output) = 0;
};

namespace judge_detail {

inline std::string normalize(std::string s, bool fold_case) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) out += ' ';
        space = false;
        out += fold_case ? static_cast<char>(std::tolower(static_cast<unsigned char>(c))) : c;
    }
    return out;
}

inline bool contains_normalized(const std::string& haystack, const std::string& needle,
                                bool fold_case) {
    if (needle.empty()) return false;
    return normalize(haystack, fold_case).find(normalize(needle, fold_case)) != std::string::npos;
}

}  // namespace judge_detail

/// Offline judge double. Cooperative mode answers from the gold item itself:
/// an item counts covered/correct when its gold text (or, for coverage, its
/// alternate form) literally appears in the output.
class MockJudge final : public Judge {
public:
    enum class Mode { Cooperative, AlwaysYes, AlwaysNo };

    explicit MockJudge(Mode mode = Mode::Cooperative) : mode_(mode) {}
    std::string name() const override { return "mock"; }

    std::vector<Verdict> judge(JudgeMetric metric, const std::vector<JudgeItem>& items,
                               const std::string& output) override {
        std::vector<Verdict> verdicts;
        for (std::size_t i = 0; i < items.size(); ++i) {
            Verdict v;
            v.item_index = i;
            switch (mode_) {
                case Mode::AlwaysYes: v.outcome = true; break;
                case Mode::AlwaysNo: v.outcome = false; break;
                case Mode::Cooperative: {
                    using judge_detail::contains_normalized;
                    if (metric == JudgeMetric::Coverage) {
                        // presence in either rendering counts; wording case folds
                        v.outcome = contains_normalized(output, items[i].gold, true) ||
                                    contains_normalized(output, items[i].alt, true);
                    } else if (metric == JudgeMetric::Fabrication) {
                        v.outcome = false;  // cooperative: nothing flagged
                    } else {
                        // form checks are case-sensitive: capitalization rules
                        // distinguish flawed from corrected renderings
                        v.outcome = contains_normalized(output, items[i].gold, false);
                    }
                    break;
                }
            }
            verdicts.push_back(v);
        }
        return verdicts;
    }

private:
    Mode mode_;
};

/// Judge backed by a chat endpoint, batching 5-10 items per request.
class LlmJudge final : public Judge {
public:
    LlmJudge(ChatFn chat, std::size_t batch_size = 5, ReplayCache* cache = nullptr)
        : chat_(std::move(chat)), batch_size_(std::clamp<std::size_t>(batch_size, 1, 10)),
          cache_(cache) {}

    std::string name() const override { return "llm"; }

    std::vector<Verdict> judge(JudgeMetric metric, const std::vector<JudgeItem>& items,
                               const std::string& output) override {
        std::vector<Verdict> verdicts(items.size());
        for (std::size_t start = 0; start < items.size(); start += batch_size_) {
            std::size_t end = std::min(items.size(), start + batch_size_);
            judge_batch(metric, items, output, start, end, verdicts);
        }
        return verdicts;
    }

    std::size_t batch_size() const { return batch_size_; }

private:
    void judge_batch(JudgeMetric metric, const std::vector<JudgeItem>& items,
                     const std::string& output, std::size_t start, std::size_t end,
                     std::vector<Verdict>& verdicts) {
        std::string prompt = build_prompt(metric, items, output, start, end);
        std::map<std::size_t, Verdict> parsed;
        for (int attempt = 0; attempt < 2; ++attempt) {
            std::string ask = attempt == 0
                                  ? prompt
                                  : prompt + "\nYour previous reply could not be parsed. Answer "
                                             "with one line per item, nothing else.";
            std::string reply = transport(ask);
            parsed = parse_reply(reply, end - start);
            if (parsed.size() == end - start) break;
        }
        for (std::size_t i = start; i < end; ++i) {
            auto it = parsed.find(i - start);
            Verdict v;
            v.item_index = i;
            if (it != parsed.end()) {
                v.outcome = it->second.outcome;
                v.rationale = it->second.rationale;
            } else {
                v.outcome = false;  // unparseable after retry counts negative
                v.rationale = "unparseable judge verdict";
            }
            verdicts[i] = v;
        }
    }

    std::string transport(const std::string& prompt) {
        std::string key = ReplayCache::key_for(prompt);
        if (cache_ && cache_->entries.count(key)) return cache_->entries.at(key);
        if (!chat_) throw std::runtime_error("judge endpoint not configured and no replay entry");
        std::string reply = chat_(prompt);
        if (cache_ && cache_->record) cache_->entries[key] = reply;
        return reply;
    }

    static std::string vocab_positive(JudgeMetric m) {
        return m == JudgeMetric::Coverage ? "covered" : "correct";
    }
    static std::string vocab_negative(JudgeMetric m) {
        return m == JudgeMetric::Coverage ? "not_covered" : "incorrect";
    }

    static std::string build_prompt(JudgeMetric metric, const std::vector<JudgeItem>& items,
                                    const std::string& output, std::size_t start,
                                    std::size_t end) {
        std::ostringstream p;
        switch (metric) {
            case JudgeMetric::Coverage:
                p << "You check whether a text states each listed fact. Judge only whether the "
                     "fact's content is present (any wording counts; for items that show two "
                     "renderings, either rendering counts).\n";
                break;
            case JudgeMetric::Correctness:
                p << "You check whether a report answers each question with the gold answer. "
                     "Numbers must match the gold answer; allow a tolerance of 0.1 on "
                     "percentages given to 2 decimals.\n";
                break;
            case JudgeMetric::StyleForm:
                p << "You check whether a text renders each fact in its corrected form rather "
                     "than the flawed form shown.\n";
                break;
            case JudgeMetric::Fabrication:
                p << "You check whether the text asserts facts about the subject that are absent "
                     "from the provided fact list. Answer 'correct' when the text adds NO such "
                     "facts, 'incorrect' when it fabricates.\n";
                break;
        }
        p << "Reply with exactly one line per item: \"<item number>: " << vocab_positive(metric)
          << "\" or \"<item number>: " << vocab_negative(metric) << "\".\n\nText under review:\n"
          << output << "\n\nItems:\n";
        for (std::size_t i = start; i < end; ++i) {
            const JudgeItem& item = items[i];
            p << (i - start + 1) << ". ";
            if (!item.question.empty()) p << "Question: " << item.question << " ";
            switch (metric) {
                case JudgeMetric::Coverage:
                    p << "Fact: " << item.gold;
                    if (!item.alt.empty()) p << " (alternate rendering: " << item.alt << ")";
                    break;
                case JudgeMetric::Correctness: p << "Gold answer: " << item.gold; break;
                case JudgeMetric::StyleForm:
                    p << "Corrected form: " << item.gold << " Flawed form: " << item.alt;
                    break;
                case JudgeMetric::Fabrication: p << item.gold; break;
            }
            p << "\n";
        }
        return p.str();
    }

    static std::map<std::size_t, Verdict> parse_reply(const std::string& reply,
                                                      std::size_t expected) {
        std::map<std::size_t, Verdict> out;
        std::istringstream in(reply);
        std::string line;
        while (std::getline(in, line)) {
            std::size_t i = 0;
            while (i < line.size() && !std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
            if (i == line.size()) continue;
            std::size_t num_start = i;
            while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
            std::size_t number = std::stoul(line.substr(num_start, i - num_start));
            if (number < 1 || number > expected) continue;
            std::string lower;
            for (char c : line) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            Verdict v;
            bool negative = lower.find("not_covered") != std::string::npos ||
                            lower.find("not covered") != std::string::npos ||
                            lower.find("incorrect") != std::string::npos;
            bool positive = !negative && (lower.find("covered") != std::string::npos ||
                                          lower.find("correct") != std::string::npos);
            if (!negative && !positive) continue;
            v.outcome = positive;
            v.rationale = line;
            out[number - 1] = v;
        }
        return out;
    }

    ChatFn chat_;
    std::size_t batch_size_;
    ReplayCache* cache_;
};

// ---------------------------------------------------------------------------
// Replay file I/O (judge verdicts and NW statement generation share it)
// ---------------------------------------------------------------------------

inline ReplayCache load_replay_cache(const std::string& path) {
    ReplayCache cache;
    std::ifstream in(path);
    if (!in) return cache;
    Json j = Json::parse(in);
    for (auto it = j.begin(); it != j.end(); ++it) {
        cache.entries[it.key()] = it.value().get<std::string>();
    }
    return cache;
}

inline void save_replay_cache(const ReplayCache& cache, const std::string& path) {
    Json j = Json::object();
    for (const auto& [k, v] : cache.entries) j[k] = v;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write replay file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace covweave
