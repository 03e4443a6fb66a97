#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <string>
#include <vector>

#include "covweave/gen_code.hpp"
#include "covweave/gen_kg.hpp"
#include "covweave/gen_news.hpp"
#include "covweave/gen_rule.hpp"
#include "covweave/gen_sales.hpp"
#include "covweave/runner.hpp"

using namespace covweave;

namespace {

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

std::vector<TaskInstance> instances_of_each_kind(std::uint64_t seed_base) {
    std::vector<TaskInstance> out;
    out.push_back(gen_code_fixing(make_seed(TaskKind::CF, Tier::T1k, seed_base)));
    out.push_back(gen_biog(make_seed(TaskKind::BioG, Tier::T1k, seed_base)));
    out.push_back(gen_sales(make_seed(TaskKind::SR, Tier::T1k, seed_base)));
    out.push_back(gen_news(make_seed(TaskKind::NW, Tier::T1k, seed_base)));
    out.push_back(gen_kv(make_seed(TaskKind::KVG, Tier::T1k, seed_base)));
    out.push_back(gen_fsm(make_seed(TaskKind::SMS, Tier::T1k, seed_base)));
    auto pr_seed = make_seed(TaskKind::PR, Tier::T1k, seed_base);
    out.push_back(gen_reorder(pr_seed, default_reorder_corpus(pr_seed)));
    return out;
}

}  // namespace

TEST_CASE("build_prompt embeds every constraint exactly once and the target length") {
    for (const TaskInstance& inst : instances_of_each_kind(51)) {
        PromptBundle p = build_prompt(inst);
        INFO(to_string(inst.task_kind));
        CHECK(p.user_text.find("approximately " +
                               std::to_string(tier_target_tokens(inst.tier)) + " tokens") !=
              std::string::npos);
        for (const std::string& rendering : constraint_renderings(inst)) {
            INFO(rendering);
            CHECK(count_occurrences(p.user_text, rendering) == 1);
        }
        PromptBundle again = build_prompt(inst);
        CHECK(p.user_text == again.user_text);
        CHECK(p.system_text == again.system_text);
    }
}

TEST_CASE("build_prompt with no constraints is material plus instruction") {
    TaskInstance inst;
    inst.id = "x";
    inst.task_kind = TaskKind::NW;
    inst.material = "just material";
    inst.instruction = "just instruction";
    PromptBundle p = build_prompt(inst);
    CHECK(p.user_text.find("just material") != std::string::npos);
    CHECK(p.user_text.find("just instruction") != std::string::npos);
}

TEST_CASE("run_batch returns results ordered by instance id at any parallelism") {
    auto instances = instances_of_each_kind(7);
    Responder echo = [](const TaskInstance& inst, const PromptBundle&) {
        ChatOutcome o;
        o.ok = true;
        o.content = "reply for " + inst.id;
        o.finish_reason = "stop";
        return o;
    };
    std::vector<std::vector<GenerationResult>> runs;
    for (int par : {1, 4, 16}) {
        runs.push_back(run_batch(instances, echo, par, {}, 8192, [](int) {}));
    }
    for (const auto& results : runs) {
        REQUIRE(results.size() == instances.size());
        for (std::size_t i = 0; i + 1 < results.size(); ++i) {
            CHECK(results[i].instance_id < results[i + 1].instance_id);
        }
    }
    for (std::size_t i = 0; i < runs[0].size(); ++i) {
        CHECK(runs[0][i].instance_id == runs[1][i].instance_id);
        CHECK(runs[0][i].output_text == runs[1][i].output_text);
        CHECK(runs[1][i].output_text == runs[2][i].output_text);
    }
    CHECK(run_batch({}, echo, 4).empty());
}

TEST_CASE("run_batch retries transient failures with backoff") {
    auto instances = instances_of_each_kind(9);
    std::atomic<int> calls{0};
    Responder flaky = [&](const TaskInstance&, const PromptBundle&) {
        ChatOutcome o;
        if (calls.fetch_add(1) % 3 != 2) {
            o.error = "http 503";
            o.retryable = true;
            return o;
        }
        o.ok = true;
        o.content = "eventually fine";
        o.finish_reason = "stop";
        return o;
    };
    std::vector<int> slept;
    RetryPolicy retry;
    retry.max_retries = 3;
    retry.backoff_base_ms = 10;
    auto results = run_batch(instances, flaky, 1, retry, 8192,
                             [&](int ms) { slept.push_back(ms); });
    for (const auto& r : results) {
        CHECK(r.error_note.empty());
        CHECK(r.output_text == "eventually fine");
    }
    REQUIRE(!slept.empty());
    CHECK(slept[0] == 10);  // exponential base
    CHECK(slept[1] == 20);
}

TEST_CASE("run_batch records exhausted failures and keeps going") {
    auto instances = instances_of_each_kind(3);
    std::atomic<int> calls{0};
    Responder dead = [&](const TaskInstance&, const PromptBundle&) {
        ++calls;
        ChatOutcome o;
        o.error = "http 500";
        o.retryable = true;
        return o;
    };
    RetryPolicy retry;
    retry.max_retries = 2;
    auto results = run_batch(instances, dead, 2, retry, 8192, [](int) {});
    REQUIRE(results.size() == instances.size());
    for (const auto& r : results) {
        CHECK(r.output_text.empty());
        CHECK(r.error_note == "http 500");
        CHECK(r.output_tokens == 0);
    }
    CHECK(calls == static_cast<int>(instances.size() * 3));  // 1 try + 2 retries each

    Responder fatal = [&](const TaskInstance&, const PromptBundle&) {
        ChatOutcome o;
        o.error = "http 401";
        o.retryable = false;
        return o;
    };
    calls = 0;
    Responder counting_fatal = [&](const TaskInstance& i, const PromptBundle& p) {
        ++calls;
        return fatal(i, p);
    };
    run_batch(instances, counting_fatal, 1, retry, 8192, [](int) {});
    CHECK(calls == static_cast<int>(instances.size()));  // non-retryable: one attempt each
}

TEST_CASE("truncation flag from finish reason and token counts") {
    auto instances = instances_of_each_kind(5);
    Responder truncating = [](const TaskInstance&, const PromptBundle&) {
        ChatOutcome o;
        o.ok = true;
        o.content = "short";
        o.finish_reason = "length";
        return o;
    };
    auto results = run_batch(instances, truncating, 1, {}, 8192, [](int) {});
    for (const auto& r : results) CHECK(r.truncated);

    Responder normal = [](const TaskInstance&, const PromptBundle&) {
        ChatOutcome o;
        o.ok = true;
        o.content = std::string(400, 'x');  // 100 tokens
        o.finish_reason = "stop";
        return o;
    };
    auto capped = run_batch(instances, normal, 1, {}, 100, [](int) {});
    for (const auto& r : capped) {
        CHECK(r.truncated);  // output tokens reached the cap
        CHECK(r.output_tokens == 100);
    }
    auto fine = run_batch(instances, normal, 1, {}, 8192, [](int) {});
    for (const auto& r : fine) {
        CHECK(!r.truncated);
        CHECK(r.output_tokens == 100);
    }
}

TEST_CASE("oracle responder emits gold outputs for every task") {
    for (const TaskInstance& inst : instances_of_each_kind(12)) {
        std::string gold = oracle_respond(inst);
        INFO(to_string(inst.task_kind));
        CHECK(!gold.empty());
        double target = static_cast<double>(tier_target_tokens(inst.tier));
        double tokens = static_cast<double>(count_tokens(gold));
        CHECK(tokens >= 0.80 * target);  // acceptance enforces the strict band per tier
        CHECK(tokens <= 1.20 * target);
    }
}

TEST_CASE("http responder against a loopback server") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
        Json body = Json::parse(req.body);
        std::string user;
        for (const Json& m : body.at("messages")) {
            if (m.at("role") == "user") user = m.at("content").get<std::string>();
        }
        Json reply = {
            {"choices",
             Json::array({Json{{"message", Json{{"role", "assistant"},
                                                {"content", "echo:" + user.substr(0, 10)}}},
                               {"finish_reason", "stop"}}})},
            {"usage", Json{{"completion_tokens", 5}}},
        };
        res.set_content(reply.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    if (port <= 0) {
        SKIP("cannot bind loopback port in this sandbox");
    }
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ModelEndpoint ep;
    ep.base_url = "http://127.0.0.1:" + std::to_string(port);
    ep.model = "test-model";
    auto respond = make_http_responder(ep);
    auto instances = instances_of_each_kind(2);
    auto results = run_batch({instances[4]}, respond, 1, {}, 8192, [](int) {});
    REQUIRE(results.size() == 1);
    CHECK(results[0].error_note.empty());
    CHECK(results[0].output_text.rfind("echo:", 0) == 0);

    server.stop();
    server_thread.join();
}

TEST_CASE("endpoint config round-trips through JSON") {
    ModelEndpoint ep;
    ep.base_url = "https://example.test";
    ep.model = "m1";
    ep.auth_env = "TOKEN_VAR";
    ep.extra_params = Json{{"presence_penalty", 1.5}};
    ModelEndpoint back = ModelEndpoint::from_json(ep.to_json());
    CHECK(back.base_url == ep.base_url);
    CHECK(back.model == ep.model);
    CHECK(back.auth_env == ep.auth_env);
    CHECK(back.temperature == 0.7);
    CHECK(back.top_p == 0.8);
    CHECK(back.max_output_tokens == 8192);
    CHECK(back.extra_params.at("presence_penalty") == 1.5);
}
