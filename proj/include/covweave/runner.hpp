#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "covweave/gen_sales.hpp"
#include "covweave/parallel.hpp"
#include "covweave/tokenizer.hpp"
#include "covweave/types.hpp"

namespace covweave {

// ===========================================================================
// Model endpoint and prompt assembly
// ===========================================================================

struct RetryPolicy {
    int max_retries = 3;
    int backoff_base_ms = 500;  // exponential: base * 2^attempt
};

struct ModelEndpoint {
    std::string base_url;  // http(s)://host[:port]; the builtin "oracle" needs none
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string auth_env;  // name of the env var holding the bearer token
    double temperature = 0.7;
    double top_p = 0.8;
    std::size_t max_output_tokens = 8192;
    bool stream = false;
    int timeout_s = 120;
    RetryPolicy retry;
    Json extra_params = Json::object();  // provider-specific decoding parameters

    static ModelEndpoint from_json(const Json& j) {
        ModelEndpoint ep;
        ep.base_url = j.value("base_url", "");
        ep.path = j.value("path", "/v1/chat/completions");
        ep.model = j.value("model", "");
        ep.auth_env = j.value("auth_env", "");
        ep.temperature = j.value("temperature", 0.7);
        ep.top_p = j.value("top_p", 0.8);
        ep.max_output_tokens = j.value("max_output_tokens", static_cast<std::size_t>(8192));
        ep.stream = j.value("stream", false);
        ep.timeout_s = j.value("timeout_s", 120);
        ep.retry.max_retries = j.value("max_retries", 3);
        ep.retry.backoff_base_ms = j.value("backoff_base_ms", 500);
        if (j.contains("extra_params")) ep.extra_params = j.at("extra_params");
        return ep;
    }

    Json to_json() const {
        return Json{{"base_url", base_url},
                    {"path", path},
                    {"model", model},
                    {"auth_env", auth_env},
                    {"temperature", temperature},
                    {"top_p", top_p},
                    {"max_output_tokens", max_output_tokens},
                    {"stream", stream},
                    {"timeout_s", timeout_s},
                    {"max_retries", retry.max_retries},
                    {"backoff_base_ms", retry.backoff_base_ms},
                    {"extra_params", extra_params}};
    }
};

struct PromptBundle {
    std::string system_text;
    std::string user_text;
};

/// Deterministic per-task prompt: material, then the instruction (which
/// already carries the enumerated constraints and the explicit target length
/// in tokens and words).
inline PromptBundle build_prompt(const TaskInstance& inst) {
    PromptBundle p;
    p.system_text = "You are completing a " + to_string(inst.task_kind) +
                    " evaluation task. Follow the output format instructions exactly.";
    if (inst.material.empty()) {
        p.user_text = inst.instruction;
    } else {
        p.user_text = "## Material\n" + inst.material + "\n\n## Task\n" + inst.instruction;
    }
    return p;
}

/// Canonical renderings of each constraint; every one must appear exactly
/// once in the assembled prompt (the instruction embeds them).
inline std::vector<std::string> constraint_renderings(const TaskInstance& inst) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < inst.constraints.size(); ++i) {
        const Json& c = inst.constraints[i];
        std::string kind = c.value("kind", "");
        if (kind == "kv_target") {
            out.push_back("Required pair: place key \"" + c.at("key").get<std::string>() +
                          "\" with value \"" + c.at("value").get<std::string>() +
                          "\" at 0-based index " + std::to_string(c.at("index").get<std::int64_t>()) +
                          ".");
        } else if (kind == "fsm_run") {
            out.push_back("Initial state: " + c.at("initial").get<std::string>() +
                          ". Input string: " + c.at("input").get<std::string>());
        } else if (kind == "order_shuffled") {
            std::string line = "Shuffled paragraph labels: ";
            auto labels = c.at("labels").get<std::vector<std::string>>();
            for (std::size_t j = 0; j < labels.size(); ++j) {
                if (j) line += ", ";
                line += labels[j];
            }
            line += ".";
            out.push_back(line);
        } else if (kind == "style_region") {
            out.push_back("- line " + std::to_string(c.at("line").get<int>()) + ": " +
                          c.at("rule").get<std::string>() + " (");
        } else if (kind == "query") {
            out.push_back("Q" + std::to_string(c.at("index").get<std::int64_t>()) + ": " +
                          c.at("text").get<std::string>());
        } else if (kind == "triple") {
            out.push_back("(" + c.at("subject").get<std::string>() + ", " +
                          c.at("predicate").get<std::string>() + ", " +
                          c.at("object").get<std::string>() + ")");
        } else if (kind == "flawed_statement") {
            // newline-anchored: "46. x" must not count as a hit for "6. x"
            out.push_back("\n" + std::to_string(c.at("index").get<std::int64_t>()) + ". " +
                          c.at("text").get<std::string>() + "\n");
        } else {
            throw std::runtime_error("unknown constraint kind: " + kind);
        }
    }
    return out;
}

// ===========================================================================
// Oracle responder: the gold-perfect answer, built from the instance
// ===========================================================================

inline std::string oracle_respond(const TaskInstance& inst) {
    switch (inst.task_kind) {
        case TaskKind::KVG:
            return inst.meta.at("gold_map").get<std::string>();
        case TaskKind::SMS: {
            std::string out;
            const Json& steps = inst.verifiers.at(0).at("steps");
            for (std::size_t i = 0; i < steps.size(); ++i) {
                const Json& s = steps[i];
                out += "STEP " + std::to_string(i + 1) + ": " + s[0].get<std::string>() + " --" +
                       s[1].get<std::string>() + "/" + s[3].get<std::string>() + "--> " +
                       s[2].get<std::string>() + "\n";
            }
            return out;
        }
        case TaskKind::PR: {
            auto gold = inst.verifiers.at(0).at("labels").get<std::vector<std::string>>();
            // recover paragraph text per label from the material blocks
            std::map<std::string, std::string> by_label;
            std::istringstream in(inst.material);
            std::string line, label, body;
            auto flush = [&] {
                if (!label.empty()) {
                    while (!body.empty() && body.back() == '\n') body.pop_back();
                    by_label[label] = body;
                }
                body.clear();
            };
            while (std::getline(in, line)) {
                if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
                    flush();
                    label = line.substr(1, line.size() - 2);
                } else if (!label.empty()) {
                    body += line;
                    body += "\n";
                }
            }
            flush();
            std::string out = "ORDER:";
            for (std::size_t i = 0; i < gold.size(); ++i) {
                out += (i == 0 ? " " : ", ") + gold[i];
            }
            out += "\n";
            for (const std::string& l : gold) {
                out += "\n" + by_label.at(l) + "\n";
            }
            return out;
        }
        case TaskKind::CF:
            return "```python\n" + inst.meta.at("clean_source").get<std::string>() + "```\n";
        case TaskKind::SR: {
            std::string out;
            for (std::size_t i = 0; i < inst.verifiers.size(); ++i) {
                const Json& v = inst.verifiers[i];
                ConclusionQuery cq;
                cq.query = v.at("query").get<std::string>();
                cq.answer = v.at("text").get<std::string>();
                cq.conclusion = v.value("conclusion", "");
                out += render_sales_answer_block(i + 1, cq);
            }
            return out;
        }
        case TaskKind::BioG:
        case TaskKind::NW: {
            std::string out;
            for (const Json& v : inst.verifiers) {
                if (!out.empty()) out += " ";
                out += v.at("text").get<std::string>();
            }
            return out;
        }
    }
    throw std::runtime_error("oracle_respond: unknown task kind");
}

// ===========================================================================
// Batched generation
// ===========================================================================

struct ChatOutcome {
    bool ok = false;
    std::string content;
    std::string finish_reason;
    long long reported_completion_tokens = -1;
    std::string error;
    bool retryable = false;
};

/// A responder answers one instance; the HTTP transport, the oracle, and all
/// test doubles implement this shape.
using Responder = std::function<ChatOutcome(const TaskInstance&, const PromptBundle&)>;
using Sleeper = std::function<void(int)>;

inline void default_sleeper(int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); }

inline Responder make_oracle_responder() {
    return [](const TaskInstance& inst, const PromptBundle&) {
        ChatOutcome o;
        o.ok = true;
        o.content = oracle_respond(inst);
        o.finish_reason = "stop";
        return o;
    };
}

/// Chat-completions HTTP transport. Provider quirks ride in extra_params;
/// the auth token is resolved from the configured env var at request time.
inline Responder make_http_responder(const ModelEndpoint& ep) {
    return [ep](const TaskInstance&, const PromptBundle& prompt) {
        ChatOutcome outcome;
        httplib::Client client(ep.base_url);
        client.set_connection_timeout(ep.timeout_s);
        client.set_read_timeout(ep.timeout_s);

        httplib::Headers headers;
        if (!ep.auth_env.empty()) {
            if (const char* token = std::getenv(ep.auth_env.c_str()); token && *token) {
                headers.emplace("Authorization", std::string("Bearer ") + token);
            }
        }

        Json body;
        body["model"] = ep.model;
        Json messages = Json::array();
        if (!prompt.system_text.empty()) {
            messages.push_back(Json{{"role", "system"}, {"content", prompt.system_text}});
        }
        messages.push_back(Json{{"role", "user"}, {"content", prompt.user_text}});
        body["messages"] = messages;
        body["temperature"] = ep.temperature;
        body["top_p"] = ep.top_p;
        body["max_tokens"] = ep.max_output_tokens;
        body["stream"] = false;
        for (auto it = ep.extra_params.begin(); it != ep.extra_params.end(); ++it) {
            body[it.key()] = it.value();
        }

        auto res = client.Post(ep.path, headers, body.dump(), "application/json");
        if (!res) {
            outcome.error = "transport error: " + httplib::to_string(res.error());
            outcome.retryable = true;
            return outcome;
        }
        if (res->status != 200) {
            outcome.error = "http " + std::to_string(res->status);
            outcome.retryable = res->status == 429 || res->status >= 500;
            return outcome;
        }
        try {
            Json j = Json::parse(res->body);
            const Json& choice = j.at("choices").at(0);
            outcome.content = choice.at("message").at("content").get<std::string>();
            outcome.finish_reason = choice.value("finish_reason", "");
            if (j.contains("usage") && j["usage"].contains("completion_tokens")) {
                outcome.reported_completion_tokens = j["usage"]["completion_tokens"].get<long long>();
            }
            outcome.ok = true;
        } catch (const std::exception& e) {
            outcome.error = std::string("malformed response: ") + e.what();
            outcome.retryable = false;
        }
        return outcome;
    };
}

/// Plain chat callable over the endpoint (judge calls, NW LLM mode). Retries
/// per the endpoint policy; throws once exhausted.
inline ChatFn make_chat_fn(const ModelEndpoint& ep, Sleeper sleep_fn = default_sleeper) {
    Responder respond = make_http_responder(ep);
    return [respond, ep, sleep_fn](const std::string& user_text) {
        TaskInstance dummy;
        PromptBundle prompt;
        prompt.user_text = user_text;
        ChatOutcome outcome;
        for (int attempt = 0; attempt <= ep.retry.max_retries; ++attempt) {
            outcome = respond(dummy, prompt);
            if (outcome.ok || !outcome.retryable || attempt == ep.retry.max_retries) break;
            sleep_fn(ep.retry.backoff_base_ms * (1 << attempt));
        }
        if (!outcome.ok) throw std::runtime_error("chat endpoint failed: " + outcome.error);
        return outcome.content;
    };
}

/// Runs all instances with at most `parallelism` in flight, per-request
/// retries with exponential backoff, results ordered by instance id. A
/// request that exhausts its retries is recorded with an empty output and an
/// error note; the run continues.
inline std::vector<GenerationResult> run_batch(const std::vector<TaskInstance>& instances,
                                               const Responder& respond, int parallelism,
                                               const RetryPolicy& retry = {},
                                               std::size_t max_output_tokens = 8192,
                                               const Sleeper& sleep_fn = default_sleeper,
                                               const Tokenizer& tok = default_tokenizer()) {
    std::vector<std::size_t> order(instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return instances[a].id < instances[b].id;
    });

    std::vector<GenerationResult> results(instances.size());
    parallel_for(order.size(), static_cast<std::size_t>(parallelism < 1 ? 1 : parallelism),
                 [&](std::size_t slot) {
                     const TaskInstance& inst = instances[order[slot]];
                     PromptBundle prompt = build_prompt(inst);
                     GenerationResult r;
                     r.instance_id = inst.id;
                     auto t0 = std::chrono::steady_clock::now();
                     ChatOutcome outcome;
                     for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
                         outcome = respond(inst, prompt);
                         if (outcome.ok || !outcome.retryable || attempt == retry.max_retries) break;
                         sleep_fn(retry.backoff_base_ms * (1 << attempt));
                     }
                     auto t1 = std::chrono::steady_clock::now();
                     r.latency_ms =
                         std::chrono::duration<double, std::milli>(t1 - t0).count();
                     if (outcome.ok) {
                         r.output_text = outcome.content;
                         r.output_tokens = count_tokens(r.output_text, tok);
                         r.truncated = outcome.finish_reason == "length" ||
                                       (outcome.reported_completion_tokens >= 0 &&
                                        static_cast<std::size_t>(outcome.reported_completion_tokens) >=
                                            max_output_tokens) ||
                                       r.output_tokens >= max_output_tokens;
                     } else {
                         r.error_note = outcome.error.empty() ? "request failed" : outcome.error;
                         r.output_tokens = 0;
                     }
                     results[slot] = std::move(r);
                 });
    return results;
}

}  // namespace covweave
