#include "aescope/assistant/assistant.hpp"
#include "aescope/core/error.hpp"

// Same configuration as the live client, so both see one httplib layout.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

using namespace aescope;
using namespace aescope::assistant;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

workflow::WorkflowPlan golden(const std::string& name) {
    return workflow::parse_plan(read_file(std::string(AESCOPE_TEST_DATA) + "/golden/" + name + ".json"));
}

std::shared_ptr<control::ControlApi> make_api() {
    return std::make_shared<control::ControlApi>(instrument::VirtualInstrument(7, {}),
                                                 std::make_shared<store::MemoryRepository>(),
                                                 std::make_shared<log::ExperimentLog>());
}

/// Replies from a fixed script, one per call, and records what it was sent.
class ScriptedClient : public LLMClient {
public:
    explicit ScriptedClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(const std::vector<ChatMessage>& conversation) override {
        seen.push_back(conversation);
        return replies_.at(std::min(calls++, replies_.size() - 1));
    }
    std::vector<std::vector<ChatMessage>> seen;
    std::size_t calls = 0;

private:
    std::vector<std::string> replies_;
};

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::invalid_value;
}

}  // namespace

TEST_CASE("mock proposals match the pinned plans", "[assistant][golden]") {
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"Move the AFM tip to (10, 5) um", "tip_move"},
        {"Set the BE amplitude to 1 V and center frequency to 380 kHz", "be_parms"},
        {"Perform a BE line scan from (1, 1) to (5, 5) um with center frequency 380 kHz", "line_scan"},
        {"Conduct a spiral scan with 5 V applied to the AFM tip", "spiral_scan"},
        {"Run a domain wall study: image the domain walls, do BEPS at the walls, then pulse them and re-image",
         "wall_study"},
    };
    MockLlmClient mock;
    for (const auto& [instruction, file] : cases) {
        INFO(instruction);
        const auto ex = propose_plan(instruction, {}, mock);
        REQUIRE(ex.proposed);
        CHECK(ex.executable);
        CHECK(*ex.proposed == golden(file));
    }
}

TEST_CASE("golden plans hold the expected steps", "[assistant][golden]") {
    const auto tip = golden("tip_move");
    REQUIRE(tip.steps.size() == 1);
    CHECK(tip.steps[0].op == "tip_control");
    CHECK(tip.steps[0].params == json{{"x_um", 10}, {"y_um", 5}});

    const auto be = golden("be_parms");
    REQUIRE(be.steps.size() == 1);
    CHECK(be.steps[0].params == json{{"amplitude_v", 1}, {"center_frequency_khz", 380}});

    const auto line = golden("line_scan");
    REQUIRE(line.steps.size() == 2);
    CHECK(line.steps[1].params == json{{"start", {1, 1}}, {"end", {5, 5}}});

    const auto wall = golden("wall_study");
    CHECK(wall.steps == workflow::wall_study_plan(workflow::WallStudyParams{}).steps);
}

TEST_CASE("the spiral request is repaired after one turn", "[assistant][repair]") {
    MockLlmClient mock;
    const auto ex = propose_plan("Conduct a spiral scan with 5 V applied to the AFM tip", {}, mock);
    CHECK(ex.repair_turns == 1);
    REQUIRE(ex.conversation.size() == 5);
    CHECK(ex.conversation[0].role == "system");
    CHECK(ex.conversation[2].content.find("tip_voltage_v") != std::string::npos);
    CHECK(ex.conversation[3].content.rfind(kRepairPrefix, 0) == 0);
    CHECK(ex.conversation[3].content.find("unknown-parameter") != std::string::npos);
    CHECK(ex.proposed->steps[1].op == "set_tip_bias");
    CHECK(ex.proposed->steps[1].params["voltage_v"] == 5);
}

TEST_CASE("a plan that never validates is kept but not executable", "[assistant][repair]") {
    ScriptedClient client({R"({"steps": [{"id": "a", "op": "teleport"}]})"});
    const auto ex = propose_plan("go somewhere", {}, client, ProposeOptions{2, {}, {}});
    CHECK(client.calls == 3);
    CHECK(ex.repair_turns == 2);
    CHECK_FALSE(ex.executable);
    REQUIRE(ex.proposed);
    auto api = make_api();
    CHECK(code_of([&] { execute_approved(ex, approve(*ex.proposed), *api); }) == ErrorCode::not_approved);
    CHECK(api->experiment_log().size() == 0);
}

TEST_CASE("replies without a plan are unparseable", "[assistant][repair]") {
    MockLlmClient mock;
    CHECK(code_of([&] { propose_plan("tell me a joke", {}, mock); }) == ErrorCode::unparseable_reply);

    ScriptedClient prose({"I would rather not.", "```json\n{\"steps\": [{\"id\": \"m\", \"op\": \"tip_control\", "
                                                 "\"params\": {\"x_um\": 1, \"y_um\": 2}}]}\n```"});
    const auto ex = propose_plan("move", {}, prose);
    CHECK(ex.executable);
    CHECK(ex.repair_turns == 1);
    CHECK(code_of([&] { propose_plan("  ", {}, prose); }) == ErrorCode::invalid_params);
}

TEST_CASE("plan documents are found in fenced blocks or braces", "[assistant]") {
    const auto a = extract_plan_document("Here you go:\n```json\n{\"name\": \"a\", \"steps\": []}\n```\nDone.");
    CHECK(a.name == "a");
    const auto b = extract_plan_document("Plan: {\"name\": \"b\", \"steps\": []} -- end");
    CHECK(b.name == "b");
    CHECK(code_of([] { extract_plan_document("{\"steps\": [}"); }) == ErrorCode::unparseable_reply);
}

TEST_CASE("execution needs an approval for the exact plan", "[assistant][approval]") {
    MockLlmClient mock;
    const auto ex = propose_plan("Move the AFM tip to (10, 5) um", {}, mock);
    auto other = *ex.proposed;
    other.steps[0].params["x_um"] = 11;
    auto api = make_api();
    CHECK(code_of([&] { execute_approved(ex, approve(other), *api); }) == ErrorCode::not_approved);
    CHECK(api->experiment_log().size() == 0);

    const auto report = execute_approved(ex, approve(*ex.proposed), *api);
    CHECK(report.ok);
    CHECK(api->instrument().state().tip_x_um == 10.0);
    CHECK(plan_digest(*ex.proposed).size() == 16);
    CHECK(plan_digest(*ex.proposed) != plan_digest(other));
}

TEST_CASE("the system prompt carries the guideline and every tool", "[assistant][prompt]") {
    const std::string prompt = build_system_prompt("Always define BE parameters first.");
    CHECK(prompt.find("Always define BE parameters first.") != std::string::npos);
    for (const auto& name : workflow::default_registry().names()) {
        INFO(name);
        CHECK(prompt.find("\"" + name + "\"") != std::string::npos);
    }
    CHECK(code_of([] { build_system_prompt(" \n\t"); }) == ErrorCode::empty_guideline);
    CHECK_FALSE(bundled_guideline().empty());
    CHECK(code_of([] { load_guideline("/nonexistent/guide.md"); }) == ErrorCode::not_found);
}

TEST_CASE("protocol extraction ties each value to its span", "[assistant][extract]") {
    const std::string text = "BE-PFM was performed with a 1 V ac drive at a center frequency of 350 kHz";
    MockLlmClient mock;
    const auto ex = extract_protocol(text, mock);
    CHECK(ex.params == json{{"amplitude_v", 1}, {"center_frequency_khz", 350}});
    REQUIRE(ex.spans.size() == 2);
    for (const auto& s : ex.spans) {
        CHECK(text.substr(s.begin, s.end - s.begin) == s.text);
    }
    CHECK(ex.spans[0].field == "amplitude_v");
    CHECK(ex.spans[0].text == "1 V");
    CHECK(ex.spans[1].text == "350 kHz");
    CHECK(workflow::plan_ok(workflow::validate_plan(ex.reproduction)));
    CHECK(ex.reproduction.steps[0].params == ex.params);
    CHECK(code_of([&] { extract_protocol("", mock); }) == ErrorCode::invalid_params);
}

TEST_CASE("extraction drops values whose span does not check out", "[assistant][extract]") {
    const std::string text = "Drive of 2 V at 300 kHz.";
    // 999 is not what the quote says, "500 ms" is not in the text, and 5000 bins is out of range.
    ScriptedClient client({R"({"amplitude_v": {"value": 2, "quote": "2 V", "begin": 9},
        "center_frequency_khz": {"value": 999, "quote": "300 kHz", "begin": 16},
        "duration_ms": {"value": 500, "quote": "500 ms"},
        "num_bins": {"value": 5000, "quote": "2"}})"});
    const auto ex = extract_protocol(text, client);
    CHECK(ex.params == json{{"amplitude_v", 2}});
    REQUIRE(ex.spans.size() == 1);
    CHECK(ex.spans[0].begin == 9);
    CHECK(ex.spans[0].end == 12);
}

TEST_CASE("the live client speaks the chat-completions format", "[assistant][live]") {
    httplib::Server srv;
    json received;
    std::string auth;
    srv.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
        received = json::parse(req.body);
        auth = req.get_header_value("Authorization");
        res.set_content(R"({"choices": [{"message": {"role": "assistant", "content": "hello"}}]})", "application/json");
    });
    srv.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();

    ::setenv("AESCOPE_TEST_KEY", "secret", 1);
    LLMClientConfig cfg;
    cfg.backend = "live";
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat";
    cfg.api_key_env = "AESCOPE_TEST_KEY";
    cfg.timeout_s = 5;
    auto client = make_client(cfg);
    CHECK(client->complete({{"user", "hi"}}) == "hello");
    CHECK(received["model"] == "gpt-4");
    CHECK(received["temperature"] == 0.0);
    CHECK(received["messages"] == json::array({{{"role", "user"}, {"content", "hi"}}}));
    CHECK(auth == "Bearer secret");

    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
    CHECK(code_of([&] { make_client(cfg)->complete({{"user", "hi"}}); }) == ErrorCode::client_unreachable);
    srv.stop();
    t.join();

    CHECK(code_of([&] { make_client(cfg)->complete({{"user", "hi"}}); }) == ErrorCode::client_unreachable);
    cfg.api_key_env = "AESCOPE_UNSET_KEY_FOR_TEST";
    CHECK(code_of([&] { make_client(cfg)->complete({{"user", "hi"}}); }) == ErrorCode::invalid_config);
    cfg.backend = "oracle";
    CHECK(code_of([&] { make_client(cfg); }) == ErrorCode::invalid_config);
}
