#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "covweave/gen_kg.hpp"
#include "covweave/gen_news.hpp"
#include "covweave/gen_rule.hpp"
#include "covweave/gen_sales.hpp"
#include "covweave/runner.hpp"
#include "covweave/scoring.hpp"

using namespace covweave;

namespace {

// O(n^2) pair-enumeration oracle for Kendall's tau.
double tau_bruteforce(const std::vector<int>& predicted, const std::vector<int>& gold) {
    std::map<int, std::size_t> rank;
    for (std::size_t i = 0; i < gold.size(); ++i) rank[gold[i]] = i;
    std::size_t concordant = 0, discordant = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        for (std::size_t j = i + 1; j < predicted.size(); ++j) {
            if (rank.at(predicted[i]) < rank.at(predicted[j])) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    return (static_cast<double>(concordant) - static_cast<double>(discordant)) /
           static_cast<double>(concordant + discordant);
}

MockJudge cooperative{MockJudge::Mode::Cooperative};
MockJudge always_yes{MockJudge::Mode::AlwaysYes};
MockJudge always_no{MockJudge::Mode::AlwaysNo};

}  // namespace

TEST_CASE("kendall_tau agrees with the pair-enumeration oracle on 1000 random pairs") {
    SeededStream rng(1234, "tau-oracle");
    for (int iter = 0; iter < 1000; ++iter) {
        std::size_t n = 2 + rng.below(7);  // n in [2, 8]
        std::vector<int> gold(n);
        for (std::size_t i = 0; i < n; ++i) gold[i] = static_cast<int>(i);
        std::vector<int> predicted = gold;
        rng.shuffle(predicted);
        std::vector<int> gold_shuffled = gold;
        rng.shuffle(gold_shuffled);
        double fast = kendall_tau(predicted, gold_shuffled);
        double brute = tau_bruteforce(predicted, gold_shuffled);
        REQUIRE(fast == Catch::Approx(brute).margin(1e-12));
    }
}

TEST_CASE("score_reorder contract") {
    ReorderSpec spec;
    spec.labels = {"P1", "P2", "P3", "P4", "P5"};
    spec.gold_labels = {"P3", "P1", "P5", "P2", "P4"};

    CHECK(score_reorder("ORDER: P3, P1, P5, P2, P4", spec).final_score == Catch::Approx(1.0));
    CHECK(score_reorder("ORDER: P4, P2, P5, P1, P3", spec).final_score == Catch::Approx(0.0));
    CHECK(score_reorder("complete garbage with no marker", spec).final_score == 0.0);
    CHECK(score_reorder("", spec).final_score == 0.0);

    // duplicates keep the first occurrence; missing labels appended in shuffled order
    auto partial = score_reorder("ORDER: P3, P3, P1", spec);
    CHECK(partial.final_score > 0.0);
    CHECK(partial.final_score < 1.0);

    // markdown-wrapped order line still parses
    CHECK(score_reorder("**ORDER:** P3, P1, P5, P2, P4\n\ntext follows", spec).final_score ==
          Catch::Approx(1.0));
}

TEST_CASE("score_fsm contract") {
    std::vector<std::array<std::string, 4>> trace;
    for (int i = 0; i < 10; ++i) {
        trace.push_back({"S" + std::to_string(i % 3), "a", "S" + std::to_string((i + 1) % 3), "x"});
    }
    std::string gold;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        gold += "STEP " + std::to_string(i + 1) + ": " + trace[i][0] + " --" + trace[i][1] + "/" +
                trace[i][3] + "--> " + trace[i][2] + "\n";
    }
    CHECK(score_fsm(gold, trace).final_score == Catch::Approx(1.0));
    CHECK(score_fsm("", trace).final_score == 0.0);

    // first half correct, rest absent -> 0.5
    std::string half;
    for (std::size_t i = 0; i < 5; ++i) {
        half += "STEP " + std::to_string(i + 1) + ": " + trace[i][0] + " --" + trace[i][1] + "/" +
                trace[i][3] + "--> " + trace[i][2] + "\n";
    }
    CHECK(score_fsm(half, trace).final_score == Catch::Approx(0.5));

    // a wrong output symbol breaks that step only
    std::string one_bad = gold;
    one_bad.replace(one_bad.find("/x"), 2, "/q");
    CHECK(score_fsm(one_bad, trace).final_score == Catch::Approx(0.9));

    auto noted = score_fsm(gold, trace);
    REQUIRE(!noted.notes.empty());
    CHECK(noted.notes[0] == "overall_accuracy=1");
}

TEST_CASE("score_kv contract") {
    auto seed = make_seed(TaskKind::KVG, Tier::T1k, 21, {{"entry_count", 10.0}});
    KvSpec spec = build_kv_spec(seed);
    KvCheck check{spec.target_key, spec.target_value, spec.target_index,
                  static_cast<std::int64_t>(spec.entries.size())};
    std::string gold = render_kv_map(spec);
    CHECK(score_kv(gold, check).final_score == Catch::Approx(1.0));

    // target pair moved one slot: existence 1, position 0, final 0
    KvSpec moved = spec;
    std::size_t i = static_cast<std::size_t>(spec.target_index);
    std::size_t j = (i + 1) % moved.entries.size();
    std::swap(moved.entries[i], moved.entries[j]);
    auto moved_score = score_kv(render_kv_map(moved), check);
    CHECK(moved_score.final_score == 0.0);
    CHECK(moved_score.sub_scores[0].second == 1.0);  // existence
    CHECK(moved_score.sub_scores[1].second == 0.0);  // position

    // one lowercase key among 10 -> format 0.9, final = HM(1,1,0.9,1)
    KvSpec lower = spec;
    std::size_t other = (i + 1) % lower.entries.size();
    std::string lowered = lower.entries[other].first;
    for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    lower.entries[other].first = lowered;
    auto lower_score = score_kv(render_kv_map(lower), check);
    CHECK(lower_score.final_score == Catch::Approx(4.0 / (3.0 + 1.0 / 0.9)));

    CHECK(score_kv("no map here at all", check).final_score == 0.0);
}

TEST_CASE("score_code contract") {
    auto seed = make_seed(TaskKind::CF, Tier::T1k, 33);
    CodeArtifact artifact = build_code_artifact(seed);
    ExecConfig exec;
    exec.no_exec = !interpreter_available(exec.interpreter);

    auto clean_score = score_code("```python\n" + artifact.clean_source + "```\n",
                                  artifact.ledger, 1000, exec);
    for (const auto& [name, value] : clean_score.sub_scores) {
        if (name == "runnability") CHECK(value == 1.0);
        if (name == "style") CHECK(value == 1.0);
    }

    auto echoed = score_code("```python\n" + artifact.polluted_source + "```\n", artifact.ledger,
                             1000, exec);
    for (const auto& [name, value] : echoed.sub_scores) {
        if (name == "style") CHECK(value == 0.0);
    }
    CHECK(echoed.final_score == 0.0);

    // no_exec runs exclude runnability from the mean and note it
    ExecConfig no_exec;
    no_exec.no_exec = true;
    auto skipped = score_code("```python\n" + artifact.clean_source + "```\n", artifact.ledger,
                              1000, no_exec);
    for (const auto& [name, value] : skipped.sub_scores) CHECK(name != "runnability");
    bool noted = false;
    for (const std::string& n : skipped.notes) {
        if (n.find("skipped") != std::string::npos) noted = true;
    }
    CHECK(noted);
}

TEST_CASE("style score monotonicity: fixing one more violation never lowers style") {
    auto seed = make_seed(TaskKind::CF, Tier::T1k, 44);
    CleanProgram clean = gen_clean_program(seed);
    auto rng = seed.stream("mono");
    PollutionResult polluted = pollute(clean, 1.0, 6, rng);

    ExecConfig no_exec;
    no_exec.no_exec = true;
    // Repair violations one line at a time by reverting polluted lines to
    // clean ones is not line-stable across inserts, so approximate the sweep
    // by scoring with synthetic outputs carrying k residual findings.
    double prev = -1.0;
    for (int fixed = 0; fixed <= 6; ++fixed) {
        // craft an output preserving (6 - fixed) E501-style long lines
        std::string program = clean.text;
        for (int k = 0; k < 6 - fixed; ++k) {
            program += "x" + std::to_string(k) + " = " + std::string(120, '1') + "\n";
        }
        auto score = score_code("```python\n" + program + "```\n", polluted.ledger, 1000, no_exec);
        double style = 0.0;
        for (const auto& [name, value] : score.sub_scores) {
            if (name == "style") style = value;
        }
        CHECK(style >= prev);
        prev = style;
    }
    CHECK(prev == 1.0);
}

TEST_CASE("judge_coverage mechanics with mock judges") {
    std::vector<JudgeItem> items = {{"", "alpha fact", ""},
                                    {"", "beta fact", ""},
                                    {"", "gamma fact", ""},
                                    {"", "delta fact", ""}};
    CHECK(judge_coverage("anything", {}, cooperative).coverage == 1.0);
    CHECK(!judge_coverage("anything", {}, cooperative).warnings.empty());

    CHECK(judge_coverage("x", items, always_yes).coverage == 1.0);
    CHECK(judge_coverage("x", items, always_no).coverage == 0.0);

    // cooperative: 3 of 4 present -> 0.75
    std::string output = "The text states alpha fact and beta fact and also gamma fact.";
    CHECK(judge_coverage(output, items, cooperative).coverage == Catch::Approx(0.75));
}

TEST_CASE("score_sales judge composition") {
    auto seed = make_seed(TaskKind::SR, Tier::T1k, 61, {{"target_count", 8.0}});
    TaskInstance inst = gen_sales(seed);

    std::string gold = oracle_respond(inst);
    CHECK(score_sales(gold, inst, cooperative).final_score == Catch::Approx(1.0));

    // half the queries answered, all correct -> HM(0.5, 1.0) = 2/3
    std::string half;
    for (std::size_t i = 0; i < 4; ++i) {
        half += "Answer: " + inst.verifiers[i].at("text").get<std::string>() + ".\n";
    }
    CHECK(score_sales(half, inst, cooperative).final_score == Catch::Approx(2.0 / 3.0));

    CHECK(score_sales("nothing relevant", inst, cooperative).final_score == 0.0);
}

TEST_CASE("score_news judge composition") {
    auto seed = make_seed(TaskKind::NW, Tier::T1k, 62, {{"fact_count", 10.0}});
    TaskInstance inst = gen_news(seed);

    std::string gold = oracle_respond(inst);
    CHECK(score_news(gold, inst, cooperative).final_score == Catch::Approx(1.0));

    // all facts present but in flawed form: coverage 1, style 0, final 0
    std::string flawed_all;
    for (const Json& c : inst.constraints) {
        flawed_all += c.at("text").get<std::string>() + " ";
    }
    auto flawed_score = score_news(flawed_all, inst, cooperative);
    CHECK(flawed_score.sub_scores[0].second == Catch::Approx(1.0));
    CHECK(flawed_score.sub_scores[1].second == 0.0);
    CHECK(flawed_score.final_score == 0.0);

    // 8 of 10 present, 6 corrected -> HM(0.8, 0.75)
    std::string partial;
    for (std::size_t i = 0; i < 6; ++i) partial += inst.verifiers[i].at("text").get<std::string>() + " ";
    for (std::size_t i = 6; i < 8; ++i) partial += inst.constraints[i].at("text").get<std::string>() + " ";
    auto partial_score = score_news(partial, inst, cooperative);
    CHECK(partial_score.sub_scores[0].second == Catch::Approx(0.8));
    CHECK(partial_score.sub_scores[1].second == Catch::Approx(0.75));
    CHECK(partial_score.final_score == Catch::Approx(harmonic_mean({0.8, 0.75})));
}

TEST_CASE("score_biog coverage and fabrication diagnostics") {
    auto seed = make_seed(TaskKind::BioG, Tier::T1k, 63, {{"triple_count", 6.0}});
    TaskInstance inst = gen_biog(seed);
    std::string gold = oracle_respond(inst);
    CHECK(score_biog(gold, inst, cooperative).final_score == Catch::Approx(1.0));
    CHECK(score_biog("unrelated text", inst, cooperative).final_score == 0.0);

    auto probed = score_biog(gold, inst, cooperative, true);
    bool diag = false;
    for (const std::string& n : probed.notes) {
        if (n == "fabrication_flags=0") diag = true;
    }
    CHECK(diag);
}

TEST_CASE("llm judge batching, parsing, retry and replay") {
    std::vector<std::string> prompts;
    ChatFn scripted = [&](const std::string& prompt) -> std::string {
        prompts.push_back(prompt);
        // count the items in this batch and answer alternately
        std::size_t items = 0;
        std::istringstream in(prompt.substr(prompt.find("Items:")));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) ++items;
        }
        std::string reply;
        for (std::size_t i = 1; i <= items; ++i) {
            reply += std::to_string(i) + ": " + (i % 2 ? "covered" : "not_covered") + "\n";
        }
        return reply;
    };
    LlmJudge judge(scripted, 5);
    std::vector<JudgeItem> items(12);
    for (std::size_t i = 0; i < items.size(); ++i) items[i].gold = "fact " + std::to_string(i);
    auto verdicts = judge.judge(JudgeMetric::Coverage, items, "text");
    REQUIRE(verdicts.size() == 12);
    CHECK(prompts.size() == 3);  // 5 + 5 + 2
    CHECK(verdicts[0].outcome);
    CHECK(!verdicts[1].outcome);

    // judge prompts embed the gold item (compare, never recall)
    CHECK(prompts[0].find("fact 0") != std::string::npos);

    // unparseable replies retry once, then count negative
    int calls = 0;
    ChatFn garbage = [&](const std::string&) {
        ++calls;
        return std::string("mumble mumble");
    };
    LlmJudge bad(garbage, 5);
    auto neg = bad.judge(JudgeMetric::Coverage, {{"", "a fact", ""}}, "text");
    CHECK(calls == 2);
    REQUIRE(neg.size() == 1);
    CHECK(!neg[0].outcome);

    // replay cache: recorded verdicts replay without endpoint calls
    ReplayCache cache;
    cache.record = true;
    int live_calls = 0;
    ChatFn live = [&](const std::string& p) {
        ++live_calls;
        return scripted(p);
    };
    LlmJudge recording(live, 5, &cache);
    recording.judge(JudgeMetric::Coverage, items, "text");
    int before = live_calls;
    LlmJudge replaying(nullptr, 5, &cache);
    auto replayed = replaying.judge(JudgeMetric::Coverage, items, "text");
    CHECK(live_calls == before);
    REQUIRE(replayed.size() == 12);
    CHECK(replayed[0].outcome);
}

TEST_CASE("every scorer certifies oracle output at 1.0 and survives garbage") {
    ScoringContext ctx;
    ctx.judge = &cooperative;
    ctx.exec.no_exec = !interpreter_available(ctx.exec.interpreter);

    std::vector<TaskInstance> all = {
        gen_code_fixing(make_seed(TaskKind::CF, Tier::T1k, 81)),
        gen_biog(make_seed(TaskKind::BioG, Tier::T1k, 81)),
        gen_sales(make_seed(TaskKind::SR, Tier::T1k, 81)),
        gen_news(make_seed(TaskKind::NW, Tier::T1k, 81)),
        gen_kv(make_seed(TaskKind::KVG, Tier::T1k, 81)),
        gen_fsm(make_seed(TaskKind::SMS, Tier::T1k, 81)),
    };
    auto pr_seed = make_seed(TaskKind::PR, Tier::T1k, 81);
    all.push_back(gen_reorder(pr_seed, default_reorder_corpus(pr_seed)));

    const std::vector<std::string> garbage = {
        "", "complete nonsense", std::string(5000, 'z'),
        "ORDER: STEP { \" unbalanced", "```python\nwhile True:!!!\n"};
    for (const TaskInstance& inst : all) {
        INFO(to_string(inst.task_kind));
        TaskScore gold = score_instance(inst, oracle_respond(inst), ctx);
        CHECK(gold.final_score >= 0.99);
        for (const std::string& g : garbage) {
            TaskScore s = score_instance(inst, g, ctx);
            CHECK(s.final_score >= 0.0);
            CHECK(s.final_score <= 1.0);
        }
        // truncated oracle output stays scoreable
        std::string truncated = oracle_respond(inst).substr(0, 100);
        TaskScore t = score_instance(inst, truncated, ctx);
        CHECK(t.final_score >= 0.0);
        CHECK(t.final_score <= 1.0);
    }
}

TEST_CASE("aggregate fixtures") {
    auto score_of = [](TaskKind k, Tier t, double final_score) {
        TaskScore s;
        s.instance_id = "x";
        s.task_kind = k;
        s.tier = t;
        s.final_score = final_score;
        return s;
    };

    // single instance: task == length == overall
    ReportTable single = aggregate({score_of(TaskKind::KVG, Tier::T1k, 0.73)});
    CHECK(single.task_avg.at(TaskKind::KVG) == Catch::Approx(73.0));
    CHECK(single.tier_avg.at(Tier::T1k) == Catch::Approx(73.0));
    CHECK(single.overall == Catch::Approx(73.0));

    // two tasks with cell means 0.2 and 0.4 at one tier -> length score 30.00
    ReportTable two = aggregate({score_of(TaskKind::KVG, Tier::T1k, 0.2),
                                 score_of(TaskKind::SMS, Tier::T1k, 0.4)});
    CHECK(two.tier_avg.at(Tier::T1k) == Catch::Approx(30.0));

    // permuting instance order leaves the table unchanged
    std::vector<TaskScore> scores = {score_of(TaskKind::KVG, Tier::T1k, 0.2),
                                     score_of(TaskKind::SMS, Tier::T1k, 0.4),
                                     score_of(TaskKind::KVG, Tier::T2k, 0.6)};
    ReportTable a = aggregate(scores);
    std::reverse(scores.begin(), scores.end());
    ReportTable b = aggregate(scores);
    CHECK(a.cell == b.cell);
    CHECK(a.overall == Catch::Approx(b.overall));

    // hand-computed 2x2 fixture
    std::vector<TaskScore> fixture = {
        score_of(TaskKind::KVG, Tier::T1k, 1.0), score_of(TaskKind::KVG, Tier::T1k, 0.5),
        score_of(TaskKind::SMS, Tier::T1k, 0.25), score_of(TaskKind::KVG, Tier::T2k, 0.8)};
    ReportTable f = aggregate(fixture);
    CHECK(f.cell.at({TaskKind::KVG, Tier::T1k}) == Catch::Approx(75.0));
    CHECK(f.task_avg.at(TaskKind::KVG) == Catch::Approx(100.0 * (1.0 + 0.5 + 0.8) / 3));
    CHECK(f.tier_avg.at(Tier::T1k) == Catch::Approx((75.0 + 25.0) / 2));
    CHECK(f.overall == Catch::Approx((75.0 + 25.0 + 80.0) / 3));

    std::string md = render_report_markdown(f);
    CHECK(md.find("| KVG |") != std::string::npos);
    CHECK(md.find("Overall:") != std::string::npos);
}
