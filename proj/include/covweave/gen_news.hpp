#pragma once

#include <cctype>
#include <functional>
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
// AP Style News Writing (NW)
//
// Ten rule dimensions, two rules each. Every rule carries a statement
// template with an error injector (flawed form) and a flaw detector used for
// self-validation of generated pairs; detectors never score model outputs
// (NW scoring is judge-based).
// ===========================================================================

struct ApRule {
    std::string id;         // "numerals.spell_small"
    std::string dimension;  // one of the ten dimensions
    std::string rule_text;
    std::string positive_example;
    std::string error_pattern;
};

struct StatementPair {
    std::string flawed;     // constraint C
    std::string corrected;  // verifier V
    std::string dimension;
    std::string rule_id;
    std::string rationale;
};

namespace nw_detail {

inline std::string number_words(int n) {
    static const char* ones[] = {"zero", "one", "two",   "three", "four",
                                 "five", "six", "seven", "eight", "nine"};
    static const char* teens[] = {"ten",     "eleven",  "twelve",    "thirteen", "fourteen",
                                  "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
    static const char* tens[] = {"",      "",      "twenty", "thirty", "forty",
                                 "fifty", "sixty", "seventy", "eighty", "ninety"};
    if (n < 10) return ones[n];
    if (n < 20) return teens[n - 10];
    std::string out = tens[n / 10];
    if (n % 10) out += std::string("-") + ones[n % 10];
    return out;
}

inline bool word_present(const std::string& text, const std::string& word) {
    auto boundary = [](char c) {
        return !(std::isalnum(static_cast<unsigned char>(c)) || c == '-');
    };
    std::size_t pos = 0;
    while ((pos = text.find(word, pos)) != std::string::npos) {
        bool left = pos == 0 || boundary(text[pos - 1]);
        std::size_t after = pos + word.size();
        bool right = after >= text.size() || boundary(text[after]);
        if (left && right) return true;
        pos += 1;
    }
    return false;
}

inline const std::vector<std::string>& nw_places() {
    static const std::vector<std::string> v = {"Oakdale", "Belmont", "Hargrove",
                                               "Linwood", "Ferndale", "Crestview"};
    return v;
}

inline const std::vector<std::string>& nw_streets() {
    static const std::vector<std::string> v = {"Alder", "Birchwood", "Cornell", "Duval"};
    return v;
}

inline const std::vector<std::string>& nw_names() {
    static const std::vector<std::string> v = {"Jordan Ellis", "Casey Monroe", "Avery Walsh",
                                               "Riley Donovan", "Morgan Leeds"};
    return v;
}

inline const std::vector<std::string>& nw_titles() {
    static const std::vector<std::string> v = {"mayor", "senator", "professor", "chief",
                                               "director"};
    return v;
}

struct OrgEntry {
    std::string full;
    std::string acronym;
};
inline const std::vector<OrgEntry>& nw_orgs() {
    static const std::vector<OrgEntry> v = {{"Northfield Transit Authority", "NTA"},
                                            {"Harbor Development Board", "HDB"},
                                            {"Civic Arts Council", "CAC"},
                                            {"Regional Water Commission", "RWC"}};
    return v;
}

struct StateEntry {
    std::string full;
    std::string ap;
    std::string postal;
};
inline const std::vector<StateEntry>& nw_states() {
    static const std::vector<StateEntry> v = {{"Illinois", "Ill.", "IL"},
                                              {"California", "Calif.", "CA"},
                                              {"Florida", "Fla.", "FL"},
                                              {"Minnesota", "Minn.", "MN"},
                                              {"Oregon", "Ore.", "OR"}};
    return v;
}

struct MonthEntry {
    std::string ap;
    std::string full;
};
inline const std::vector<MonthEntry>& nw_months() {
    static const std::vector<MonthEntry> v = {{"Jan.", "January"},  {"Feb.", "February"},
                                              {"Aug.", "August"},   {"Sept.", "September"},
                                              {"Oct.", "October"},  {"Nov.", "November"},
                                              {"Dec.", "December"}};
    return v;
}

inline const std::vector<std::string>& nw_quotes() {
    static const std::vector<std::string> v = {"a steady gain", "a cautious budget",
                                               "an overdue repair", "a welcome result"};
    return v;
}

inline const std::vector<std::string>& nw_seasons() {
    static const std::vector<std::string> v = {"spring", "summer", "autumn", "winter"};
    return v;
}

inline const std::vector<std::string>& nw_directions() {
    static const std::vector<std::string> v = {"west", "east", "north", "south"};
    return v;
}

inline const std::vector<std::string>& nw_triples() {
    static const std::vector<std::string> v = {"produce, flowers and tools",
                                               "permits, surveys and maps",
                                               "benches, planters and racks"};
    return v;
}

inline std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

inline std::string ordinal_suffix(int day) {
    if (day % 100 >= 11 && day % 100 <= 13) return "th";
    switch (day % 10) {
        case 1: return "st";
        case 2: return "nd";
        case 3: return "rd";
        default: return "th";
    }
}

}  // namespace nw_detail

/// The versioned rule bank: ten dimensions, two rules each.
inline const std::vector<ApRule>& ap_rule_bank() {
    static const std::vector<ApRule> bank = {
        {"numerals.spell_small", "numerals", "Spell out whole numbers below 10 in ordinary prose.",
         "The council approved seven new bus routes.", "digits used for a number below 10"},
        {"numerals.use_figures_large", "numerals", "Use figures for numbers 10 and above.",
         "City crews planted 23 oak saplings.", "a number 10 or above written out in words"},
        {"percentages.use_sign", "percentages",
         "Use figures with the % sign for percentages, not the word percent.",
         "Ridership rose 12% over the year.", "the word 'percent' written out after a figure"},
        {"percentages.no_pct_abbrev", "percentages",
         "Never abbreviate percent as 'pct.'; use the % sign with a figure.",
         "Turnout reached 38% in early voting.", "'pct.' used instead of the % sign"},
        {"money.dollar_sign", "money", "Use the $ sign with figures for amounts of money.",
         "The grant totals $450.", "an amount written as '450 dollars'"},
        {"money.million_form", "money",
         "For large round sums use the form $3 million rather than full digits.",
         "The bond package is valued at $3 million.", "a sum written with full digits and commas"},
        {"ages.numerals", "ages", "Always use figures for ages, even below 10.",
         "The title went to Casey Monroe, 9, of Oakdale.", "an age spelled out in words"},
        {"ages.hyphenate", "ages", "Hyphenate ages used as compound modifiers: the 48-year-old plan.",
         "Organizers opened the 48-year-old archive.", "a compound age without hyphens"},
        {"dates.abbrev_month", "dates",
         "Abbreviate Jan., Feb., Aug., Sept., Oct., Nov. and Dec. when used with a date.",
         "The hearing is set for Feb. 14.", "a full month name used with a specific date"},
        {"dates.no_ordinal", "dates", "Use cardinal figures in dates, never ordinals.",
         "Counting begins Oct. 14.", "an ordinal like 14th used in a date"},
        {"times.lowercase_am", "times", "Use lowercase a.m. and p.m. with periods.",
         "Doors open at 10 a.m.", "AM or PM written in capitals without periods"},
        {"times.noon", "times", "Use noon rather than 12 p.m.",
         "The ribbon cutting is set for noon.", "12 p.m. used instead of noon"},
        {"titles.cap_before_name", "titles",
         "Capitalize a formal title used directly before a name.",
         "Mayor Jordan Ellis announced the plan.", "a formal title lowercased before a name"},
        {"titles.lower_after_name", "titles",
         "Lowercase a title standing alone or set off after a name.",
         "Jordan Ellis, the mayor, said the budget holds.", "a title capitalized after a name"},
        {"abbreviations.state_ap", "abbreviations",
         "Use AP state abbreviations such as Ill. or Calif. with a city, never postal codes.",
         "The delegation traveled to Oakdale, Ill., for the summit.",
         "a two-letter postal code used in running text"},
        {"abbreviations.spell_first", "abbreviations",
         "Spell out an organization's name on first reference; do not lead with the acronym.",
         "Officials at the Northfield Transit Authority released the findings.",
         "an acronym used on first reference"},
        {"punctuation.no_serial_comma", "punctuation",
         "Do not use the serial comma in simple series.",
         "The market stocks produce, flowers and tools.", "a comma placed before the final 'and'"},
        {"punctuation.period_inside_quotes", "punctuation",
         "Periods and commas always go inside closing quotation marks.",
         "She called the results \"a steady gain.\"", "a period placed outside a closing quote"},
        {"capitalization.seasons_lower", "capitalization",
         "Lowercase the seasons unless part of a formal name.",
         "Crews will repave the plaza this spring.", "a season capitalized mid-sentence"},
        {"capitalization.directions_lower", "capitalization",
         "Lowercase compass directions when they describe areas.",
         "New lighting will line the city's west side.", "a compass direction capitalized"},
    };
    return bank;
}

inline std::vector<std::string> ap_dimensions() {
    std::vector<std::string> dims;
    for (const ApRule& r : ap_rule_bank()) {
        if (dims.empty() || dims.back() != r.dimension) dims.push_back(r.dimension);
    }
    return dims;
}

inline Json rule_bank_to_json(const std::vector<ApRule>& bank) {
    Json rules = Json::array();
    for (const ApRule& r : bank) {
        rules.push_back(Json{{"id", r.id},
                             {"dimension", r.dimension},
                             {"rule_text", r.rule_text},
                             {"positive_example", r.positive_example},
                             {"error_pattern", r.error_pattern}});
    }
    return Json{{"version", 1}, {"rules", rules}};
}

/// Loads a rule bank override. Rule ids must stay within the shipped set:
/// detectors and injectors are code, so unknown ids cannot be synthesized.
inline std::vector<ApRule> rule_bank_from_json(const Json& j) {
    std::set<std::string> known;
    for (const ApRule& r : ap_rule_bank()) known.insert(r.id);
    std::vector<ApRule> bank;
    for (const Json& r : j.at("rules")) {
        ApRule rule;
        rule.id = r.at("id").get<std::string>();
        if (!known.count(rule.id)) {
            throw std::runtime_error("rule bank override names unknown rule id: " + rule.id);
        }
        rule.dimension = r.at("dimension").get<std::string>();
        rule.rule_text = r.at("rule_text").get<std::string>();
        rule.positive_example = r.value("positive_example", "");
        rule.error_pattern = r.value("error_pattern", "");
        bank.push_back(rule);
    }
    if (bank.empty()) throw std::runtime_error("rule bank override is empty");
    return bank;
}

/// Flaw detector for a rule: true iff `text` violates it. Used for
/// self-validation of generated pairs, not for scoring model output.
inline bool trips_rule(const std::string& rule_id, const std::string& text) {
    using namespace nw_detail;
    if (rule_id == "numerals.spell_small") {
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (text[i] < '1' || text[i] > '9') continue;
            char prev = i > 0 ? text[i - 1] : ' ';
            char next = i + 1 < text.size() ? text[i + 1] : ' ';
            auto excluded = [](char c) {
                return std::isdigit(static_cast<unsigned char>(c)) || c == '$' || c == '.' ||
                       c == ',' || c == '-' || c == ':' || c == '%';
            };
            if (!excluded(prev) && !excluded(next)) return true;
        }
        return false;
    }
    if (rule_id == "numerals.use_figures_large") {
        for (int n = 10; n <= 99; ++n) {
            if (word_present(text, number_words(n))) return true;
        }
        return false;
    }
    if (rule_id == "percentages.use_sign") return text.find(" percent") != std::string::npos;
    if (rule_id == "percentages.no_pct_abbrev") return text.find(" pct.") != std::string::npos;
    if (rule_id == "money.dollar_sign") {
        std::size_t pos = text.find(" dollars");
        return pos != std::string::npos && pos > 0 &&
               std::isdigit(static_cast<unsigned char>(text[pos - 1]));
    }
    if (rule_id == "money.million_form") {
        for (std::size_t i = 0; i + 9 < text.size(); ++i) {
            if (text[i] == '$' && std::isdigit(static_cast<unsigned char>(text[i + 1])) &&
                text[i + 2] == ',' && text.compare(i + 6, 1, ",") == 0) {
                return true;
            }
        }
        return false;
    }
    if (rule_id == "ages.numerals") {
        for (int n = 2; n <= 99; ++n) {
            if (text.find(", " + number_words(n) + ",") != std::string::npos) return true;
        }
        return false;
    }
    if (rule_id == "ages.hyphenate") {
        for (std::size_t i = 0; i + 10 < text.size(); ++i) {
            if (std::isdigit(static_cast<unsigned char>(text[i])) &&
                text.compare(i + 1, 10, " year old ") == 0) {
                return true;
            }
        }
        return false;
    }
    if (rule_id == "dates.abbrev_month") {
        for (const MonthEntry& m : nw_months()) {
            std::size_t pos = text.find(m.full + " ");
            if (pos != std::string::npos && pos + m.full.size() + 1 < text.size() &&
                std::isdigit(static_cast<unsigned char>(text[pos + m.full.size() + 1]))) {
                return true;
            }
        }
        return false;
    }
    if (rule_id == "dates.no_ordinal") {
        for (std::size_t i = 0; i + 2 < text.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
            std::string suffix = text.substr(i + 1, 2);
            if (suffix == "st" || suffix == "nd" || suffix == "rd" || suffix == "th") {
                char after = i + 3 < text.size() ? text[i + 3] : ' ';
                if (!std::isalnum(static_cast<unsigned char>(after))) return true;
            }
        }
        return false;
    }
    if (rule_id == "times.lowercase_am") {
        return word_present(text, "AM") || word_present(text, "PM");
    }
    if (rule_id == "times.noon") return text.find("12 p.m.") != std::string::npos;
    if (rule_id == "titles.cap_before_name") {
        for (const std::string& title : nw_titles()) {
            std::size_t pos = 0;
            while ((pos = text.find(title + " ", pos)) != std::string::npos) {
                char after = text[pos + title.size() + 1];
                bool word_start = pos == 0 || !std::isalpha(static_cast<unsigned char>(text[pos - 1]));
                if (word_start && std::isupper(static_cast<unsigned char>(after))) return true;
                ++pos;
            }
        }
        return false;
    }
    if (rule_id == "titles.lower_after_name") {
        for (const std::string& title : nw_titles()) {
            if (text.find("the " + capitalize(title)) != std::string::npos) return true;
        }
        return false;
    }
    if (rule_id == "abbreviations.state_ap") {
        for (const StateEntry& s : nw_states()) {
            if (text.find(", " + s.postal + ",") != std::string::npos) return true;
        }
        return false;
    }
    if (rule_id == "abbreviations.spell_first") {
        std::size_t run = 0;
        for (std::size_t i = 0; i <= text.size(); ++i) {
            bool upper = i < text.size() && std::isupper(static_cast<unsigned char>(text[i]));
            if (upper) {
                ++run;
            } else {
                bool boundary = i >= text.size() ||
                                !std::isalnum(static_cast<unsigned char>(text[i]));
                if (run >= 3 && run <= 5 && boundary) return true;
                run = 0;
            }
        }
        return false;
    }
    if (rule_id == "punctuation.no_serial_comma") return text.find(", and ") != std::string::npos;
    if (rule_id == "punctuation.period_inside_quotes") return text.find("\".") != std::string::npos;
    if (rule_id == "capitalization.seasons_lower") {
        for (const std::string& s : nw_seasons()) {
            if (word_present(text, capitalize(s))) return true;
        }
        return false;
    }
    if (rule_id == "capitalization.directions_lower") {
        for (const std::string& d : nw_directions()) {
            if (word_present(text, capitalize(d))) return true;
        }
        return false;
    }
    throw std::runtime_error("no detector for rule: " + rule_id);
}

namespace nw_detail {

inline StatementPair make_pair_for_rule(const ApRule& rule, SeededStream& rng) {
    StatementPair p;
    p.dimension = rule.dimension;
    p.rule_id = rule.id;
    const std::string& id = rule.id;

    if (id == "numerals.spell_small") {
        int n = static_cast<int>(rng.range(2, 9));
        std::string place = rng.pick(nw_places());
        p.corrected = "The council approved " + number_words(n) + " new bus routes for the " +
                      place + " district.";
        p.flawed = "The council approved " + std::to_string(n) + " new bus routes for the " +
                   place + " district.";
        p.rationale = "numbers below 10 are spelled out in prose";
    } else if (id == "numerals.use_figures_large") {
        int n = static_cast<int>(rng.range(21, 99));
        std::string street = rng.pick(nw_streets());
        p.corrected = "City crews planted " + std::to_string(n) + " oak saplings along " + street +
                      " Avenue.";
        p.flawed = "City crews planted " + number_words(n) + " oak saplings along " + street +
                   " Avenue.";
        p.rationale = "numbers 10 and above take figures";
    } else if (id == "percentages.use_sign") {
        int n = static_cast<int>(rng.range(12, 48));
        p.corrected = "Transit ridership rose " + std::to_string(n) +
                      "% compared with last year, the agency reported.";
        p.flawed = "Transit ridership rose " + std::to_string(n) +
                   " percent compared with last year, the agency reported.";
        p.rationale = "percentages take the % sign with a figure";
    } else if (id == "percentages.no_pct_abbrev") {
        int n = static_cast<int>(rng.range(25, 75));
        std::string place = rng.pick(nw_places());
        p.corrected = "Voter turnout reached " + std::to_string(n) + "% across the " + place +
                      " precincts.";
        p.flawed = "Voter turnout reached " + std::to_string(n) + " pct. across the " + place +
                   " precincts.";
        p.rationale = "percent is never abbreviated as pct.";
    } else if (id == "money.dollar_sign") {
        int n = static_cast<int>(rng.range(200, 950));
        p.corrected = "The repair grant totals $" + std::to_string(n) +
                      ", according to the budget office.";
        p.flawed = "The repair grant totals " + std::to_string(n) +
                   " dollars, according to the budget office.";
        p.rationale = "money amounts take the $ sign with figures";
    } else if (id == "money.million_form") {
        int n = static_cast<int>(rng.range(2, 9));
        p.corrected = "The bond package is valued at $" + std::to_string(n) +
                      " million, officials confirmed.";
        p.flawed = "The bond package is valued at $" + std::to_string(n) +
                   ",000,000, officials confirmed.";
        p.rationale = "large round sums read better as $" + std::to_string(n) + " million";
    } else if (id == "ages.numerals") {
        int age = static_cast<int>(rng.range(7, 9));
        std::string name = rng.pick(nw_names());
        std::string place = rng.pick(nw_places());
        p.corrected = "The spelling bee title went to " + name + ", " + std::to_string(age) +
                      ", of " + place + ".";
        p.flawed = "The spelling bee title went to " + name + ", " + number_words(age) + ", of " +
                   place + ".";
        p.rationale = "ages always take figures";
    } else if (id == "ages.hyphenate") {
        int age = static_cast<int>(rng.range(30, 90));
        p.corrected = "Organizers opened the " + std::to_string(age) +
                      "-year-old archive for public tours.";
        p.flawed = "Organizers opened the " + std::to_string(age) +
                   " year old archive for public tours.";
        p.rationale = "compound ages are hyphenated";
    } else if (id == "dates.abbrev_month") {
        const MonthEntry& m = nw_months()[rng.below(nw_months().size())];
        int day = static_cast<int>(rng.range(10, 28));
        p.corrected = "The hearing is scheduled for " + m.ap + " " + std::to_string(day) +
                      ", at the county annex.";
        p.flawed = "The hearing is scheduled for " + m.full + " " + std::to_string(day) +
                   ", at the county annex.";
        p.rationale = "long month names are abbreviated with a specific date";
    } else if (id == "dates.no_ordinal") {
        const MonthEntry& m = nw_months()[rng.below(nw_months().size())];
        int day = static_cast<int>(rng.range(10, 28));
        p.corrected = "Ballot counting begins " + m.ap + " " + std::to_string(day) +
                      " and runs through the weekend.";
        p.flawed = "Ballot counting begins " + m.ap + " " + std::to_string(day) +
                   ordinal_suffix(day) + " and runs through the weekend.";
        p.rationale = "dates take cardinal figures, not ordinals";
    } else if (id == "times.lowercase_am") {
        int hour = static_cast<int>(rng.range(10, 11));
        p.corrected = "Doors open at " + std::to_string(hour) + " a.m. for the public session.";
        p.flawed = "Doors open at " + std::to_string(hour) + " AM for the public session.";
        p.rationale = "a.m. and p.m. are lowercase with periods";
    } else if (id == "times.noon") {
        std::string place = rng.pick(nw_places());
        p.corrected = "The ribbon cutting is set for noon at the " + place + " plaza.";
        p.flawed = "The ribbon cutting is set for 12 p.m. at the " + place + " plaza.";
        p.rationale = "noon replaces 12 p.m.";
    } else if (id == "titles.cap_before_name") {
        std::string title = rng.pick(nw_titles());
        std::string name = rng.pick(nw_names());
        p.corrected = capitalize(title) + " " + name + " announced the paving plan at city hall.";
        p.flawed = title + " " + name + " announced the paving plan at city hall.";
        p.rationale = "formal titles are capitalized directly before a name";
    } else if (id == "titles.lower_after_name") {
        std::string title = rng.pick(nw_titles());
        std::string name = rng.pick(nw_names());
        p.corrected = name + ", the " + title + ", said the budget request will stand.";
        p.flawed = name + ", the " + capitalize(title) + ", said the budget request will stand.";
        p.rationale = "titles are lowercase when set off after a name";
    } else if (id == "abbreviations.state_ap") {
        const StateEntry& s = nw_states()[rng.below(nw_states().size())];
        std::string place = rng.pick(nw_places());
        p.corrected = "The delegation traveled to " + place + ", " + s.ap + ", for the summit.";
        p.flawed = "The delegation traveled to " + place + ", " + s.postal + ", for the summit.";
        p.rationale = "AP state abbreviations replace postal codes in running text";
    } else if (id == "abbreviations.spell_first") {
        const OrgEntry& org = nw_orgs()[rng.below(nw_orgs().size())];
        p.corrected = "Officials at the " + org.full + " released the findings on request.";
        p.flawed = "Officials at the " + org.acronym + " released the findings on request.";
        p.rationale = "organizations are spelled out on first reference";
    } else if (id == "punctuation.no_serial_comma") {
        std::string triple = rng.pick(nw_triples());
        std::size_t and_at = triple.rfind(" and ");
        std::string serial = triple.substr(0, and_at) + "," + triple.substr(and_at);
        p.corrected = "The market stocks " + triple + " each weekend.";
        p.flawed = "The market stocks " + serial + " each weekend.";
        p.rationale = "no serial comma in a simple series";
    } else if (id == "punctuation.period_inside_quotes") {
        std::string quote = rng.pick(nw_quotes());
        p.corrected = "The superintendent called the results \"" + quote + ".\"";
        p.flawed = "The superintendent called the results \"" + quote + "\".";
        p.rationale = "periods sit inside closing quotation marks";
    } else if (id == "capitalization.seasons_lower") {
        std::string season = rng.pick(nw_seasons());
        p.corrected = "Crews will repave the plaza this " + season + ", the city said.";
        p.flawed = "Crews will repave the plaza this " + capitalize(season) + ", the city said.";
        p.rationale = "seasons are lowercase";
    } else if (id == "capitalization.directions_lower") {
        std::string dir = rng.pick(nw_directions());
        p.corrected = "New lighting will line the city's " + dir + " side by year's end.";
        p.flawed = "New lighting will line the city's " + capitalize(dir) + " side by year's end.";
        p.rationale = "compass directions are lowercase for areas";
    } else {
        throw std::runtime_error("no injector for rule: " + id);
    }
    return p;
}

}  // namespace nw_detail

/// Deterministic template mode: fact templates filled from the seeded stream,
/// one targeted rule violation per statement, dimensions round-robined.
inline std::vector<StatementPair> gen_statement_pairs_template(SeededStream& rng,
                                                               std::int64_t fact_count) {
    const std::vector<ApRule>& bank = ap_rule_bank();
    std::vector<std::string> dims = ap_dimensions();
    std::vector<StatementPair> pairs;
    for (std::int64_t i = 0; i < fact_count; ++i) {
        const std::string& dim = dims[static_cast<std::size_t>(i) % dims.size()];
        std::vector<const ApRule*> in_dim;
        for (const ApRule& r : bank) {
            if (r.dimension == dim) in_dim.push_back(&r);
        }
        const ApRule& rule =
            *in_dim[(static_cast<std::size_t>(i) / dims.size()) % in_dim.size()];
        pairs.push_back(nw_detail::make_pair_for_rule(rule, rng));
    }
    return pairs;
}

// ---------------------------------------------------------------------------
// LLM-backed mode with a replay cache
// ---------------------------------------------------------------------------

/// Chat callable: prompt in, raw model text out. Throws on transport failure.
using ChatFn = std::function<std::string(const std::string&)>;

struct ReplayCache {
    std::map<std::string, std::string> entries;  // prompt hash -> response
    bool record = false;

    static std::string key_for(const std::string& prompt) {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(prompt)));
        return buf;
    }
};

inline std::string nw_llm_prompt(const std::string& topic, std::int64_t fact_count) {
    std::ostringstream out;
    out << "You produce test data for Associated Press style checking.\n"
        << "Topic: " << topic << "\n"
        << "Produce exactly " << fact_count << " JSON objects in a JSON array. Each object has\n"
        << "fields: flawed (a factual statement violating exactly one AP style rule),\n"
        << "corrected (the same statement in correct AP style), dimension (one of: ";
    std::vector<std::string> dims = ap_dimensions();
    for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? ", " : "") << dims[i];
    out << "), rationale (one sentence naming the violated rule).\n"
        << "Reply with the JSON array only.";
    return out.str();
}

/// LLM mode: prompts the endpoint for statement pairs, validates shape, and
/// retries malformed items up to 3 times. With a warm replay cache no
/// endpoint call is made and the returned pairs are identical across runs.
inline std::vector<StatementPair> gen_statement_pairs_llm(const std::string& topic,
                                                          std::int64_t fact_count, ChatFn chat,
                                                          ReplayCache* cache = nullptr) {
    if (fact_count == 0) return {};
    std::set<std::string> dims_ok;
    for (const std::string& d : ap_dimensions()) dims_ok.insert(d);

    std::string prompt = nw_llm_prompt(topic, fact_count);
    std::string last_error;
    for (int attempt = 0; attempt < 3; ++attempt) {
        std::string attempt_prompt =
            attempt == 0 ? prompt
                         : prompt + "\nPrevious reply was rejected: " + last_error + " Try again.";
        std::string key = ReplayCache::key_for(attempt_prompt);
        std::string response;
        if (cache && cache->entries.count(key)) {
            response = cache->entries.at(key);
        } else {
            if (!chat) throw std::runtime_error("no live endpoint and no replay entry for request");
            response = chat(attempt_prompt);
            if (cache && cache->record) cache->entries[key] = response;
        }

        std::vector<StatementPair> pairs;
        std::vector<std::string> offenders;
        try {
            std::size_t open = response.find('[');
            std::size_t close = response.rfind(']');
            if (open == std::string::npos || close == std::string::npos || close < open) {
                throw std::runtime_error("no JSON array in reply");
            }
            Json arr = Json::parse(response.substr(open, close - open + 1));
            for (const Json& item : arr) {
                StatementPair p;
                p.flawed = item.value("flawed", "");
                p.corrected = item.value("corrected", "");
                p.dimension = item.value("dimension", "");
                p.rationale = item.value("rationale", "");
                p.rule_id = "llm." + p.dimension;
                if (p.flawed.empty() || p.corrected.empty() || p.flawed == p.corrected ||
                    !dims_ok.count(p.dimension)) {
                    offenders.push_back(item.dump());
                    continue;
                }
                pairs.push_back(p);
            }
        } catch (const std::exception& e) {
            last_error = e.what();
            continue;
        }
        if (offenders.empty() && static_cast<std::int64_t>(pairs.size()) == fact_count) {
            return pairs;
        }
        last_error = offenders.empty()
                         ? "expected " + std::to_string(fact_count) + " items, got " +
                               std::to_string(pairs.size())
                         : "malformed items: " + std::to_string(offenders.size());
        if (attempt == 2 && !offenders.empty()) {
            std::string msg = "malformed statement pairs beyond retry budget:";
            for (const std::string& o : offenders) msg += "\n  " + o;
            throw std::runtime_error(msg);
        }
    }
    throw std::runtime_error("statement pair generation failed after retries: " + last_error);
}

// ---------------------------------------------------------------------------
// Instance assembly
// ---------------------------------------------------------------------------

inline std::string render_ap_rubric(const std::vector<ApRule>& bank = ap_rule_bank()) {
    std::string out = "AP style rubric, by dimension:\n";
    std::string current;
    for (const ApRule& r : bank) {
        if (r.dimension != current) {
            current = r.dimension;
            out += "\n## " + current + "\n";
        }
        out += "- " + r.rule_text + " Example: " + r.positive_example + " Error to avoid: " +
               r.error_pattern + ".\n";
    }
    return out;
}

inline std::string nw_topic_for(SeededStream& rng) {
    static const std::vector<std::string> subjects = {
        "the transit extension opening", "the harbor renovation budget",
        "the library expansion vote",    "the storm drain overhaul",
        "the farmers market relocation", "the school roof repairs"};
    return nw_detail::nw_places()[rng.below(nw_detail::nw_places().size())] + ": " +
           subjects[rng.below(subjects.size())];
}

inline TaskInstance gen_news_from_pairs(const AttributeSeed& seed, const std::string& topic,
                                        const std::vector<StatementPair>& pairs,
                                        const std::string& mode,
                                        const std::vector<ApRule>& bank = ap_rule_bank()) {
    TaskInstance inst;
    inst.id = instance_id(seed);
    inst.task_kind = seed.task_kind;
    inst.tier = seed.tier;
    inst.seed = seed;

    inst.material = "News topic: " + topic + "\n\n" + render_ap_rubric(bank);

    std::size_t target = seed.target_tokens();
    std::ostringstream instr;
    instr << "Write a news article on the topic above that follows the AP style rubric.\n"
          << "Integrate the factual content of every numbered statement below. The statements\n"
          << "are given in a flawed form; render each one in its correct AP style form.\n"
          << "Statements:\n";
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        instr << (i + 1) << ". " << pairs[i].flawed << "\n";
    }
    instr << "Your response must be approximately " << target << " tokens (about "
          << (target * 3) / 4 << " words) long.";
    inst.instruction = instr.str();

    std::string gold;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const StatementPair& p = pairs[i];
        inst.constraints.push_back(Json{{"kind", "flawed_statement"},
                                        {"index", i + 1},
                                        {"text", p.flawed},
                                        {"dimension", p.dimension},
                                        {"rule_id", p.rule_id}});
        inst.verifiers.push_back(Json{{"kind", "corrected_statement"},
                                      {"index", i + 1},
                                      {"text", p.corrected},
                                      {"flawed", p.flawed},
                                      {"dimension", p.dimension},
                                      {"rule_id", p.rule_id},
                                      {"rationale", p.rationale}});
        if (!gold.empty()) gold += " ";
        gold += p.corrected;
    }
    inst.meta["topic"] = topic;
    inst.meta["mode"] = mode;
    inst.meta["gold_tokens"] = count_tokens(gold);
    inst.check_invariants();
    return inst;
}

inline TaskInstance gen_news(const AttributeSeed& seed,
                             const std::vector<ApRule>& bank = ap_rule_bank()) {
    if (seed.task_kind != TaskKind::NW) throw std::runtime_error("seed is not NW");
    auto rng = seed.stream("nw");
    std::string topic = nw_topic_for(rng);
    std::vector<StatementPair> pairs = gen_statement_pairs_template(rng, seed.knob_int("fact_count"));
    return gen_news_from_pairs(seed, topic, pairs, "template", bank);
}

}  // namespace covweave
