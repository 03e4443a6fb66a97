#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covweave/rng.hpp"

namespace covweave {

/// A corpus is a list of documents, each a list of paragraphs.
/// File format: UTF-8 text, documents separated by a line containing only
/// "===", paragraphs separated by blank lines.
using Document = std::vector<std::string>;
using Corpus = std::vector<Document>;

inline Corpus parse_corpus(const std::string& text) {
    Corpus corpus;
    Document doc;
    std::string para;
    auto flush_para = [&] {
        if (!para.empty()) {
            doc.push_back(para);
            para.clear();
        }
    };
    auto flush_doc = [&] {
        flush_para();
        if (!doc.empty()) {
            corpus.push_back(doc);
            doc.clear();
        }
    };
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == "===") {
            flush_doc();
        } else if (line.empty()) {
            flush_para();
        } else {
            if (!para.empty()) para += "\n";
            para += line;
        }
    }
    flush_doc();
    return corpus;
}

inline Corpus load_corpus_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_corpus(buf.str());
}

inline std::string render_corpus(const Corpus& corpus) {
    std::string out;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        if (d > 0) out += "===\n";
        for (std::size_t p = 0; p < corpus[d].size(); ++p) {
            if (p > 0) out += "\n";
            out += corpus[d][p];
            out += "\n";
        }
    }
    return out;
}

namespace corpus_detail {

inline const std::vector<std::string>& topic_nouns() {
    static const std::vector<std::string> v = {
        "harbor market", "botanical garden", "community archive", "railway museum",
        "riverside festival", "printing workshop", "concert hall", "observatory",
        "ferry terminal", "public library", "stone bridge", "weather station"};
    return v;
}

inline const std::vector<std::string>& subjects() {
    static const std::vector<std::string> v = {
        "the restoration committee", "local volunteers", "the city council",
        "visiting researchers", "the maintenance crew", "neighborhood residents",
        "the planning office", "a group of students", "the curators",
        "the night staff", "several merchants", "the grounds keepers"};
    return v;
}

inline const std::vector<std::string>& actions() {
    static const std::vector<std::string> v = {
        "catalogued the remaining collection in careful detail",
        "repaired the weathered facade over several weekends",
        "documented each stage of the work with photographs",
        "debated the proposed schedule late into the evening",
        "organized guided tours for the first time in years",
        "replaced the aging fixtures with restored originals",
        "traced the building's history through old ledgers",
        "drafted a modest budget for the coming season",
        "cleared the storage rooms of decades of clutter",
        "measured the foundations before approving the plan",
        "rehearsed the opening program until it ran smoothly",
        "compared the archival maps against the present layout"};
    return v;
}

inline const std::vector<std::string>& connectives() {
    static const std::vector<std::string> v = {
        "Moreover,", "However,", "In the following weeks,", "By contrast,",
        "Soon afterward,", "As a result,", "Meanwhile,", "Even so,",
        "According to the minutes,", "For the most part,", "In the end,",
        "Despite the delays,"};
    return v;
}

inline const std::vector<std::string>& codas() {
    static const std::vector<std::string> v = {
        "and the effort drew steady interest from passersby",
        "though the funding remained a point of contention",
        "which settled most of the open questions",
        "and the results were posted near the entrance",
        "while the older plans stayed under review",
        "and a short report followed within the month",
        "though a final decision was deferred again",
        "which pleased the longtime supporters"};
    return v;
}

}  // namespace corpus_detail

/// Deterministic synthetic corpus: themed documents of connective-linked
/// paragraphs, each paragraph near `approx_paragraph_chars` characters. Used
/// for offline paragraph-reordering instances and tests.
inline Corpus make_synthetic_corpus(SeededStream& rng, std::size_t doc_count,
                                    std::size_t paras_per_doc,
                                    std::size_t approx_paragraph_chars = 500) {
    using namespace corpus_detail;
    Corpus corpus;
    corpus.reserve(doc_count);
    for (std::size_t d = 0; d < doc_count; ++d) {
        Document doc;
        const std::string& topic = rng.pick(topic_nouns());
        for (std::size_t p = 0; p < paras_per_doc; ++p) {
            std::string para = "Work at the " + topic + " continued through stage " +
                               std::to_string(p + 1) + ", where " + rng.pick(subjects()) + " " +
                               rng.pick(actions()) + ".";
            while (para.size() + 60 < approx_paragraph_chars) {
                std::string sentence = " " + rng.pick(connectives()) + " " + rng.pick(subjects()) +
                                       " " + rng.pick(actions()) + ", " + rng.pick(codas()) + ".";
                if (para.size() + sentence.size() > approx_paragraph_chars + 60) break;
                para += sentence;
            }
            doc.push_back(para);
        }
        corpus.push_back(doc);
    }
    return corpus;
}

}  // namespace covweave
