#include "aescope/control/actor.hpp"
#include "aescope/control/control.hpp"
#include "aescope/core/error.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace aescope;
using namespace aescope::control;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::shared_ptr<ControlApi> make_api(std::uint64_t seed = 7, instrument::DomainPattern pattern =
                                                                   instrument::DomainPattern::random,
                                     bool noiseless = false) {
    instrument::InstrumentConfig cfg;
    cfg.sample.pattern = pattern;
    if (noiseless) {
        cfg.sample.noise_rel = 0.0;
        cfg.sample.f0_spread_rel = 0.0;
    }
    return std::make_shared<ControlApi>(instrument::VirtualInstrument(seed, cfg),
                                        std::make_shared<store::MemoryRepository>(),
                                        std::make_shared<log::ExperimentLog>());
}

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

TEST_CASE("every call writes exactly one log record", "[control]") {
    auto api = make_api();
    auto& log = api->experiment_log();
    api->invoke("define_be_parms", {{"center_frequency_khz", 380}});
    CHECK(log.size() == 1);
    api->invoke("tip_control", {{"x_um", 3}, {"y_um", 4}});
    CHECK(log.size() == 2);
    CHECK(code_of([&] { api->invoke("tip_control", {{"x_um", 30}, {"y_um", 4}}); }) == ErrorCode::out_of_window);
    CHECK(log.size() == 3);
    CHECK(code_of([&] { api->invoke("tip_control", {{"x_um", "far"}}); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { api->invoke("set_tip_bias", {{"voltage_v", 5}, {"extra", 1}}); }) == ErrorCode::unknown_field);
    CHECK(log.size() == 5);

    const auto records = log.records();
    CHECK(records[0].params == json{{"amplitude_v", 1.0},   {"band_width_khz", 60.0}, {"center_frequency_khz", 380.0},
                                    {"duration_ms", 4.0},   {"num_bins", 256},        {"repeats", 4},
                                    {"waveform", "sinc"}});
    CHECK(records[1].params == json{{"x_um", 3.0}, {"y_um", 4.0}, {"speed_um_s", 10.0}});
    CHECK(records[2].status == "error:out_of_window");
    CHECK(records[3].status == "error:invalid_params");
    CHECK(records[3].params == json{{"x_um", "far"}});
    CHECK(records[4].status == "error:unknown_field");

    // Unknown operations are not instrument calls and leave no record.
    CHECK(code_of([&] { api->invoke("warp_drive", json::object()); }) == ErrorCode::unknown_op);
    CHECK(log.size() == 5);
}

TEST_CASE("failed moves leave the tip where it was", "[control]") {
    auto api = make_api();
    api->tip_control({3, 4, 10});
    CHECK_THROWS(api->tip_control({-1, 4, 10}));
    CHECK(api->instrument().state().tip_x_um == 3);
    CHECK(api->instrument().state().tip_y_um == 4);
    const auto t0 = api->instrument().clock().now_ms();
    const auto rep = api->tip_control({6, 8, 5});
    CHECK_THAT(rep.duration_s, WithinRel(1.0, 1e-12));
    CHECK(api->instrument().clock().now_ms() - t0 == 1000);
}

TEST_CASE("acquisitions require BE parameters", "[control]") {
    auto api = make_api();
    CHECK(code_of([&] { api->do_line_scan({{1, 1}, {5, 5}, 8}); }) == ErrorCode::be_undefined);
    CHECK(api->experiment_log().records().back().status == "error:be_undefined");
    api->define_be_parms({});
    CHECK_NOTHROW(api->do_line_scan({{1, 1}, {5, 5}, 8}));
}

TEST_CASE("tip bias is bounded by the output range", "[control]") {
    auto api = make_api();
    CHECK(api->set_tip_bias({-10.0}) == -10.0);
    CHECK(code_of([&] { api->set_tip_bias({10.5}); }) == ErrorCode::range_exceeded);
    CHECK(api->instrument().state().tip_bias_v == -10.0);
    IOConfig io;
    io.output_range_v = 20;
    api->set_io_config(io);
    CHECK(api->set_tip_bias({15}) == 15);
}

TEST_CASE("line scan samples evenly from start to end", "[control]") {
    auto api = make_api();
    BEParamsPartial be;
    be.num_bins = 32;
    api->define_be_parms(be);
    const auto ds = api->do_line_scan({{1, 1}, {5, 3}, 5});
    const auto& pos = ds.channel(channels::positions);
    CHECK(pos.shape == std::vector<std::size_t>{5, 2});
    CHECK(pos.data == std::vector<double>{1, 1, 2, 1.5, 3, 2, 4, 2.5, 5, 3});
    CHECK(ds.channel(channels::raw_spectra).shape == std::vector<std::size_t>{5, 32});
    CHECK(ds.id == "mem-000001");
    CHECK(api->repository().get(ds.id) == ds);
    CHECK(api->experiment_log().records().back().dataset_ref == ds.id);
    CHECK(ds.metadata["be"]["num_bins"] == 32);
}

TEST_CASE("raster phase separates the two domains by pi", "[control]") {
    auto api = make_api(3, instrument::DomainPattern::two_domain, true);
    BEParamsPartial be;
    be.num_bins = 64;
    api->define_be_parms(be);
    std::vector<json> events;
    api->set_event_sink([&](const std::string& name, const json& data) {
        if (name == "scan_line") events.push_back(data);
    });
    const Region region = api->instrument().sample().pixel_center_region();
    const auto ds = api->raster_scan({region, 8, 8});
    const auto& phase = ds.channel(channels::phase);
    const auto& amp = ds.channel(channels::amplitude);
    REQUIRE(phase.shape == std::vector<std::size_t>{8, 8});
    for (std::size_t r = 0; r < 8; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            CHECK_THAT(phase.data[r * 8 + c + 4] - phase.data[r * 8 + c], WithinAbs(std::numbers::pi, 1e-6));
            CHECK_THAT(amp.data[r * 8 + c], WithinRel(1.0, 1e-6));
        }
    }
    REQUIRE(events.size() == 8);
    CHECK(events[3]["line"] == 3);
    CHECK(events[3]["rows"]["phase"].size() == 8);
    CHECK_FALSE(ds.aborted());
}

TEST_CASE("raster rejects regions outside the window", "[control]") {
    auto api = make_api();
    api->define_be_parms({});
    CHECK(code_of([&] { api->raster_scan({{0, 0, 21, 5}, 4, 4}); }) == ErrorCode::invalid_region);
    CHECK(code_of([&] { api->raster_scan({{5, 5, 5, 9}, 4, 4}); }) == ErrorCode::invalid_region);
    CHECK(code_of([&] { api->raster_scan({{0, 0, 5, 5}, 1, 4}); }) == ErrorCode::invalid_params);
}

TEST_CASE("cancel stops a raster after the current pixel", "[control]") {
    auto api = make_api();
    BEParamsPartial be;
    be.num_bins = 16;
    api->define_be_parms(be);
    ControlApi* raw = api.get();
    api->set_event_sink([raw](const std::string&, const json& data) {
        if (data["line"] == 2) raw->request_cancel();
    });
    const auto ds = api->raster_scan({{1, 1, 9, 9}, 8, 8});
    CHECK(ds.aborted());
    CHECK(ds.channel(channels::phase).shape == std::vector<std::size_t>{3, 8});
    CHECK(api->experiment_log().records().back().status == "ok");

    // A stale cancel does not leak into the next acquisition.
    api->set_event_sink({});
    api->request_cancel();
    CHECK_FALSE(api->raster_scan({{1, 1, 9, 9}, 4, 4}).aborted());
}

TEST_CASE("BEPS at specific points records hysteresis", "[control]") {
    auto api = make_api();
    BEParamsPartial be;
    be.num_bins = 16;
    api->define_be_parms(be);
    const auto bias = triangle_bias(8, 2);
    const auto ds = api->do_beps_specific({{{2, 2}, {7, 7}}, bias});
    CHECK(ds.channel(channels::raw_spectra).shape == std::vector<std::size_t>{2, bias.size(), 16});
    const auto& states = ds.channel("polarization_state");
    CHECK(states.dtype == DType::i32);
    // After the negative half the state is down; after returning through zero it stays down.
    CHECK(states.data.back() == -1);
    CHECK(code_of([&] { api->do_beps_specific({{}, bias}); }) == ErrorCode::empty_locations);
    CHECK(code_of([&] { api->do_beps_specific({{{2, 2}}, {}}); }) == ErrorCode::empty_bias);
    CHECK(code_of([&] { api->do_beps_specific({{{2, 2}}, {11}}); }) == ErrorCode::range_exceeded);
}

TEST_CASE("BEPS grid covers the region", "[control]") {
    auto api = make_api();
    BEParamsPartial be;
    be.num_bins = 8;
    api->define_be_parms(be);
    const auto ds = api->do_beps_grid({{2, 2, 6, 4}, 2, 3, {1, -1}});
    CHECK(ds.channel(channels::positions).data == std::vector<double>{2, 2, 4, 2, 6, 2, 2, 4, 4, 4, 6, 4});
    CHECK(ds.channel(channels::raw_spectra).shape == std::vector<std::size_t>{2, 3, 2, 8});
}

TEST_CASE("triangle bias sweeps 0 to +peak to -peak to 0", "[control]") {
    CHECK(triangle_bias(4, 2) == std::vector<double>{2, 4, 2, 0, -2, -4, -2, 0});
    CHECK_THROWS_AS(triangle_bias(4, 0), Error);
}

TEST_CASE("pulses act at the tip position", "[control]") {
    auto api = make_api(3, instrument::DomainPattern::uniform);
    api->tip_control({10.1, 10.1, 100});
    const auto rep = api->apply_pulse({-10, 10});
    CHECK(rep.pixels_flipped >= 1);
    const auto px = api->instrument().pixel_at(10.1, 10.1);
    CHECK(api->instrument().sample().polarization(px.row, px.col) == -1);
}

TEST_CASE("trajectory scan with a biased tip writes along the path", "[control]") {
    auto api = make_api(3, instrument::DomainPattern::uniform);
    BEParamsPartial be;
    be.num_bins = 8;
    api->define_be_parms(be);
    trajectory::ScanTrajectory t;
    t.sample_rate_hz = 100;
    for (int i = 0; i <= 10; ++i) t.samples.push_back({5.0 + 0.5 * i, 5.0});

    auto unbiased = api->do_trajectory_scan({t, 2});
    CHECK(unbiased.channel(channels::positions).shape == std::vector<std::size_t>{6, 2});
    CHECK(unbiased.metadata["pixels_flipped"] == 0);

    api->set_tip_bias({-6});
    auto biased = api->do_trajectory_scan({t, 1});
    CHECK(biased.metadata["pixels_flipped"].get<int>() > 0);

    t.samples.push_back({25, 5});
    CHECK(code_of([&] { api->do_trajectory_scan({t, 1}); }) == ErrorCode::trajectory_invalid);
}

TEST_CASE("the actor runs jobs in submission order", "[control][actor]") {
    auto api = make_api();
    InstrumentActor actor(api);
    std::vector<int> order;
    std::vector<std::future<void>> futs;
    for (int i = 0; i < 20; ++i) futs.push_back(actor.submit([&order, i](ControlApi&) { order.push_back(i); }));
    for (auto& f : futs) f.get();
    std::vector<int> expected(20);
    for (int i = 0; i < 20; ++i) expected[static_cast<std::size_t>(i)] = i;
    CHECK(order == expected);

    auto failing = actor.submit([](ControlApi& a) { return a.invoke("tip_control", {{"x_um", 99}, {"y_um", 0}}); });
    CHECK_THROWS_AS(failing.get(), Error);
    CHECK(actor.read([](const ControlApi& a) { return a.experiment_log().size(); }) == 1);
}
