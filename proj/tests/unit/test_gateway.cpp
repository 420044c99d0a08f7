#include "aescope/core/error.hpp"
#include "aescope/gateway/client.hpp"
#include "aescope/gateway/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <catch_amalgamated.hpp>

#include <condition_variable>
#include <thread>

using namespace aescope;
using namespace aescope::gateway;

namespace {

std::shared_ptr<control::ControlApi> make_api(std::uint64_t seed = 7) {
    return std::make_shared<control::ControlApi>(instrument::VirtualInstrument(seed, {}),
                                                 std::make_shared<store::MemoryRepository>(),
                                                 std::make_shared<log::ExperimentLog>());
}

/// Session that collects every frame pushed to it.
struct Sink {
    std::mutex mu;
    std::condition_variable cv;
    std::vector<json> frames;
    std::shared_ptr<Session> session = std::make_shared<Session>([this](std::string f) {
        {
            std::lock_guard lock(mu);
            frames.push_back(json::parse(f));
        }
        cv.notify_all();
    });

    std::vector<json> events(const std::string& name) {
        std::lock_guard lock(mu);
        std::vector<json> out;
        for (const auto& f : frames) {
            if (f.value("event", "") == name) out.push_back(f["data"]);
        }
        return out;
    }

    bool wait_for(const std::function<bool(const json&)>& pred, std::chrono::seconds timeout = std::chrono::seconds(60)) {
        std::unique_lock lock(mu);
        return cv.wait_for(lock, timeout, [&] { return std::any_of(frames.begin(), frames.end(), pred); });
    }
};

json call(Service& svc, Session& s, std::int64_t id, const std::string& method, json params = json::object()) {
    return json::parse(svc.handle_frame(s, json{{"id", id}, {"method", method}, {"params", params}}.dump()));
}

json line_plan() {
    return json::parse(R"({"name": "line", "steps": [
        {"id": "be", "op": "define_be_parms", "params": {"num_bins": 16}},
        {"id": "line", "op": "do_line_scan", "params": {"start": [1, 1], "end": [5, 5], "num_points": 4}}]})");
}

}  // namespace

TEST_CASE("envelope errors use the reserved codes", "[gateway][envelope]") {
    Service svc(make_api(), {});
    Session s({});
    auto r = json::parse(svc.handle_frame(s, "{not json"));
    CHECK(r["id"].is_null());
    CHECK(r["ok"] == false);
    CHECK(r["error"]["code"] == kParseError);

    r = json::parse(svc.handle_frame(s, "[1, 2]"));
    CHECK(r["error"]["code"] == kInvalidParams);
    r = json::parse(svc.handle_frame(s, R"({"id": 3, "method": "get_state", "params": [1]})"));
    CHECK(r["id"] == 3);
    CHECK(r["error"]["code"] == kInvalidParams);
    r = json::parse(svc.handle_frame(s, R"({"id": 4, "method": "get_state", "extra": 1})"));
    CHECK(r["error"]["code"] == kInvalidParams);
    r = json::parse(svc.handle_frame(s, R"({"method": "get_state"})"));
    CHECK(r["error"]["code"] == kInvalidParams);

    r = call(svc, s, 5, "summon_demon");
    CHECK(r["error"]["code"] == kUnknownMethod);
    CHECK(r["id"] == 5);
}

TEST_CASE("instrument methods answer like the control api", "[gateway][envelope]") {
    Service svc(make_api(), {});
    Session s({});
    auto r = call(svc, s, 1, "define_be_parms", {{"center_frequency_khz", 380}});
    REQUIRE(r["ok"] == true);
    CHECK(r["result"].size() == 7);
    CHECK(r["result"]["center_frequency_khz"] == 380.0);

    r = call(svc, s, 2, "tip_control", {{"x_um", 40}, {"y_um", 1}});
    CHECK(r["error"]["code"] == kOpError);
    CHECK(r["error"]["data"]["code"] == "out_of_window");
    r = call(svc, s, 3, "tip_control", {{"x_um", "a"}, {"y_um", 1}});
    CHECK(r["error"]["code"] == kInvalidParams);

    r = call(svc, s, 4, "get_state");
    CHECK(r["result"]["log_records"] == 3);
    r = call(svc, s, 5, "list_tools");
    CHECK(r["result"].size() == workflow::default_registry().tools().size());
}

TEST_CASE("a token gates every method but auth", "[gateway][auth]") {
    ServiceConfig cfg;
    cfg.token = "open-sesame";
    Service svc(make_api(), cfg);
    Sink sink;
    svc.subscribe(sink.session);
    auto r = call(svc, *sink.session, 1, "get_state");
    CHECK(r["error"]["data"]["code"] == "unauthorized");
    r = call(svc, *sink.session, 2, "auth", {{"token", "open-sesam"}});
    CHECK(r["error"]["data"]["code"] == "unauthorized");
    CHECK_FALSE(sink.session->authenticated());
    r = call(svc, *sink.session, 3, "auth", {{"token", "open-sesame"}});
    CHECK(r["result"]["authenticated"] == true);
    CHECK(call(svc, *sink.session, 4, "get_state")["ok"] == true);
}

TEST_CASE("plans need approval and report steps as events", "[gateway][plan]") {
    Service svc(make_api(), {});
    Sink sink;
    svc.subscribe(sink.session);
    auto r = call(svc, *sink.session, 1, "execute_plan", {{"plan", line_plan()}});
    CHECK(r["error"]["data"]["code"] == "not_approved");

    r = call(svc, *sink.session, 2, "execute_plan", {{"plan", line_plan()}, {"approve", true}});
    REQUIRE(r["ok"] == true);
    CHECK(r["result"]["ok"] == true);
    const auto steps = sink.events("step_done");
    REQUIRE(steps.size() == 2);
    CHECK(steps[0]["step_id"] == "be");
    CHECK(steps[1]["status"] == "ok");
    CHECK(steps[1]["total"] == 2);
    CHECK(steps[1]["dataset"] == r["result"]["datasets"][0]);

    r = call(svc, *sink.session, 3, "load_dataset", {{"id", steps[1]["dataset"]}});
    CHECK(r["result"]["channels"][channels::positions]["shape"] == json::array({4, 2}));
    CHECK_FALSE(r["result"]["channels"][channels::positions].contains("data"));

    r = call(svc, *sink.session, 4, "summarize_log");
    CHECK(r["result"]["summary"].get<std::string>().rfind("Step 1", 0) == 0);
}

TEST_CASE("a second plan is refused while one runs, and cancel stops it", "[gateway][plan]") {
    Service svc(make_api(), {});
    Sink sink;
    svc.subscribe(sink.session);
    const json plan = json::parse(R"({"name": "slow", "steps": [
        {"id": "be", "op": "define_be_parms"},
        {"id": "scan", "op": "raster_scan", "params": {"region": [1, 1, 19, 19], "ny": 64, "nx": 64}}]})");
    json first;
    std::thread runner([&] { first = call(svc, *sink.session, 1, "execute_plan", {{"plan", plan}, {"approve", true}}); });
    REQUIRE(sink.wait_for([](const json& f) { return f.value("event", "") == "scan_line"; }));

    Session other({});
    const auto second = call(svc, other, 1, "execute_plan", {{"plan", line_plan()}, {"approve", true}});
    CHECK(second["error"]["data"]["code"] == "busy");
    CHECK(json::parse(svc.handle_frame(other, R"({"id": 2, "method": "cancel"})"))["result"]["cancelled"] == true);
    runner.join();

    REQUIRE(first["ok"] == true);
    CHECK(first["result"]["cancelled"] == true);
    CHECK(sink.events("scan_line").size() < 64);
    // The flag does not outlive the plan it stopped.
    CHECK(call(svc, other, 3, "execute_plan", {{"plan", line_plan()}, {"approve", true}})["result"]["ok"] == true);
}

TEST_CASE("the TCP server speaks newline-delimited envelopes", "[gateway][tcp]") {
    Service svc(make_api(), {});
    ServerOptions opt;
    opt.tcp_port = 0;
    opt.ws_port = 0;
    Server server(svc, opt);
    server.start();

    Client client("127.0.0.1", server.tcp_port());
    CHECK(client.send_raw("{oops")["error"]["code"] == kParseError);
    CHECK(client.call("nope")["error"]["code"] == kUnknownMethod);
    CHECK(client.result("define_be_parms", {{"num_bins", 16}}).size() == 7);
    try {
        client.result("tip_control", {{"x_um", -3}, {"y_um", 0}});
        FAIL("expected out_of_window");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::out_of_window);
    }
    const auto ds = client.result("raster_scan", {{"region", {1, 1, 5, 5}}, {"ny", 4}, {"nx", 4}});
    CHECK(ds["aborted"] == false);
    std::size_t lines = 0;
    for (const auto& e : client.events()) {
        if (e["event"] == "scan_line") ++lines;
    }
    CHECK(lines == 4);

    const auto port = server.tcp_port();
    server.stop();
    CHECK_THROWS_AS(Client("127.0.0.1", port), Error);
}

TEST_CASE("the WebSocket front end carries the same payloads", "[gateway][ws]") {
    namespace net = boost::asio;
    namespace websocket = boost::beast::websocket;
    Service svc(make_api(), {});
    ServerOptions opt;
    opt.tcp_port = 0;
    opt.ws_port = 0;
    Server server(svc, opt);
    server.start();

    net::io_context io;
    websocket::stream<net::ip::tcp::socket> ws(io);
    net::ip::tcp::resolver resolver(io);
    net::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(server.ws_port())));
    ws.handshake("127.0.0.1", "/");
    ws.text(true);

    auto exchange = [&](const std::string& frame) {
        ws.write(net::buffer(frame));
        for (;;) {
            boost::beast::flat_buffer buf;
            ws.read(buf);
            json j = json::parse(boost::beast::buffers_to_string(buf.data()));
            if (!j.contains("event")) return j;
        }
    };
    CHECK(exchange("][")["error"]["code"] == kParseError);
    const auto r = exchange(R"({"id": 9, "method": "define_be_parms", "params": {"amplitude_v": 2}})");
    CHECK(r["id"] == 9);
    CHECK(r["result"]["amplitude_v"] == 2.0);
    ws.close(websocket::close_code::normal);
    server.stop();
}

TEST_CASE("binding a busy port is a storage failure", "[gateway][tcp]") {
    Service svc(make_api(), {});
    ServerOptions opt;
    opt.tcp_port = 0;
    opt.enable_ws = false;
    Server a(svc, opt);
    a.start();
    CHECK(a.ws_port() == 0);
    opt.tcp_port = a.tcp_port();
    Server b(svc, opt);
    try {
        b.start();
        FAIL("expected a bind failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::storage_failure);
    }
}
