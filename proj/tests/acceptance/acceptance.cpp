// Acceptance gate: one PASS/FAIL line per criterion, exit status = number of failures.

#include "aescope/analysis/canny.hpp"
#include "aescope/analysis/sho_fit.hpp"
#include "aescope/analysis/spectra.hpp"
#include "aescope/assistant/assistant.hpp"
#include "aescope/core/error.hpp"
#include "aescope/gateway/client.hpp"
#include "aescope/gateway/server.hpp"
#include "aescope/trajectory/trajectory.hpp"
#include "aescope/workflow/engine.hpp"

#include "fs_compare.hpp"
#include "oracles.hpp"
#include "random_records.hpp"
#include "tmpdir.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

using namespace aescope;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && secs >= budget_s) {
        out.pass = false;
        out.note("over the time limit");
    }
    if (!out.pass) ++failures;
    std::printf("[%s] %s: %s (%.2f s", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str(), secs);
    if (budget_s > 0) std::printf(", limit %.0f s", budget_s);
    std::printf(")\n");
    std::fflush(stdout);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double wrapped_diff(double a, double b) {
    double d = std::fmod(std::abs(a - b), 2 * std::numbers::pi);
    return std::min(d, 2 * std::numbers::pi - d);
}

std::shared_ptr<control::ControlApi> make_api(std::uint64_t seed, const instrument::InstrumentConfig& cfg,
                                              std::shared_ptr<store::DatasetRepository> repo,
                                              std::shared_ptr<log::ExperimentLog> log = nullptr) {
    if (!log) log = std::make_shared<log::ExperimentLog>();
    return std::make_shared<control::ControlApi>(instrument::VirtualInstrument(seed, cfg), std::move(repo),
                                                 std::move(log));
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------

Outcome be_physics() {
    Outcome o;
    instrument::InstrumentConfig cfg;
    cfg.sample.pattern = instrument::DomainPattern::two_domain;
    cfg.sample.noise_rel = 0.0;
    cfg.sample.f0_spread_rel = 0.0;
    instrument::VirtualInstrument inst(11, cfg);
    BEParams be;
    be.num_bins = 257;  // bin 128 is the 350 kHz center
    const auto up = inst.measure_be_spectrum(2.0, 10.0, be);
    const auto down = inst.measure_be_spectrum(18.0, 10.0, be);
    const double a_err = rel(up.amplitude[128], cfg.sample.a0 * cfg.sample.q_factor);
    double phase_err = 0;
    for (std::size_t i = 0; i < up.size(); ++i) {
        phase_err = std::max(phase_err, std::abs(down.phase_rad[i] - up.phase_rad[i] - std::numbers::pi));
    }
    o.require(up.frequency_hz[128] == cfg.sample.f0_hz, "bin 128 at f0");
    o.require(a_err <= 1e-9, "A(f0) = a0*Q within 1e-9");
    o.require(phase_err <= 1e-9, "phase contrast pi within 1e-9");
    o.note("A(f0) rel err " + fmt("%.2e", a_err) + ", max |dphi - pi| " + fmt("%.2e", phase_err));
    return o;
}

Outcome sho_fit() {
    Outcome o;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ua(0.2, 5.0), uf(335e3, 365e3), uq(40.0, 300.0);
    double worst = 0;
    for (int i = 0; i < 25; ++i) {
        const double a = ua(rng), f = uf(rng), q = uq(rng);
        const auto fit = analysis::fit_sho(oracle::sho_spectrum(a, f, q, 320e3, 380e3, 256));
        worst = std::max({worst, rel(fit.params.a0, a), rel(fit.params.f0_hz, f), rel(fit.params.q_factor, q)});
    }
    o.require(worst <= 1e-6, "noiseless round trip within 1e-6");

    std::vector<double> ea, ef, eq;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 r(seed);
        auto s = oracle::sho_spectrum(1.0, 350e3, 120.0, 320e3, 380e3, 256);
        const double peak = *std::max_element(s.amplitude.begin(), s.amplitude.end());
        std::normal_distribution<double> noise(0.0, 0.02 * peak);
        for (auto& v : s.amplitude) v += noise(r);
        const auto fit = analysis::fit_sho(s);
        ea.push_back(rel(fit.params.a0, 1.0));
        ef.push_back(rel(fit.params.f0_hz, 350e3));
        eq.push_back(rel(fit.params.q_factor, 120.0));
    }
    const double med = std::max({median(ea), median(ef), median(eq)});
    o.require(med <= 0.01, "2% noise median error <= 1%");

    double jac = 0;
    const SHOParams p{1.3, 351e3, 110.0, 0.0};
    for (double f = 320e3; f <= 380e3; f += 5e3) {
        const auto g = analysis::sho_amplitude_gradient(f, p);
        auto amp = [&](SHOParams q) { return std::abs(oracle::sho_response(f, q.a0, q.f0_hz, q.q_factor)); };
        const double h[3] = {1e-6 * p.a0, 1e-6 * p.f0_hz, 1e-6 * p.q_factor};
        for (int k = 0; k < 3; ++k) {
            SHOParams hi = p, lo = p;
            double* ph = k == 0 ? &hi.a0 : k == 1 ? &hi.f0_hz : &hi.q_factor;
            double* pl = k == 0 ? &lo.a0 : k == 1 ? &lo.f0_hz : &lo.q_factor;
            *ph += h[k];
            *pl -= h[k];
            const double fd = (amp(hi) - amp(lo)) / (2 * h[k]);
            jac = std::max(jac, std::abs(g[static_cast<std::size_t>(k)] - fd) / std::max(std::abs(fd), 1e-12));
        }
    }
    o.require(jac <= 1e-5, "Jacobian vs central differences within 1e-5");
    o.note("noiseless max rel err " + fmt("%.2e", worst) + ", noisy median " + fmt("%.4f", med) + ", Jacobian " +
           fmt("%.2e", jac));
    return o;
}

Outcome trajectories() {
    Outcome o;
    auto radius = [](const Point& a, const Point& b) { return std::hypot(a.x_um - b.x_um, a.y_um - b.y_um); };
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ur(1.0, 8.0), frac(0.0, 0.9);
    std::uniform_int_distribution<int> petals(0, 12), n(16, 2000);
    double closure = 0;
    for (int i = 0; i < 50; ++i) {
        trajectory::FlowerParams p;
        p.r0_um = ur(rng);
        p.amp_um = frac(rng) * p.r0_um;
        p.petals = petals(rng);
        p.n_samples = n(rng);
        const auto t = trajectory::flower_waveform(p);
        closure = std::max(closure, radius(t.samples.front(), t.samples.back()));
    }
    o.require(closure < 1e-6, "flower closure < 1e-6 um");

    trajectory::FlowerParams circle;
    circle.amp_um = 0.0;
    double circ = 0;
    for (const auto& s : trajectory::flower_waveform(circle).samples) {
        circ = std::max(circ, std::abs(radius(s, circle.center) - circle.r0_um));
    }
    o.require(circ < 1e-9, "amp=0 radius error < 1e-9 um");

    double pitch_err = 0;
    for (double pitch : {0.1, 0.5, 1.3}) {
        trajectory::SpiralParams p;
        p.pitch_um = pitch;
        p.r_max_um = 5 * pitch;
        const auto t = trajectory::spiral_waveform(p);
        pitch_err = std::max(pitch_err, rel(radius(t.samples.at(static_cast<std::size_t>(p.samples_per_turn)), p.center), pitch));
    }
    o.require(pitch_err <= 0.01, "spiral r(2pi) = pitch within 1%");

    trajectory::SpiralParams clv;
    clv.mode = trajectory::SpiralMode::constant_linear_velocity;
    clv.pitch_um = 0.25;
    clv.r_max_um = 6.0;
    const auto t = trajectory::spiral_waveform(clv);
    std::vector<double> steps;
    for (std::size_t i = 1; i < t.samples.size(); ++i) {
        if (radius(t.samples[i - 1], clv.center) < clv.pitch_um) continue;  // first turn is angle-limited
        steps.push_back(radius(t.samples[i], t.samples[i - 1]));
    }
    double mean = 0;
    for (double s : steps) mean += s;
    mean /= static_cast<double>(steps.size());
    double var = 0;
    for (double s : steps) var += (s - mean) * (s - mean);
    const double cv = std::sqrt(var / static_cast<double>(steps.size())) / mean;
    o.require(cv < 0.05, "constant-linear spacing CV < 5%");
    o.note("closure " + fmt("%.1e", closure) + " um, circle " + fmt("%.1e", circ) + " um, pitch err " +
           fmt("%.4f", pitch_err) + ", CLV CV " + fmt("%.4f", cv));
    return o;
}

Outcome canny() {
    Outcome o;
    auto score = [](const Grid<std::int8_t>& pol) {
        const auto det = analysis::detect_domain_walls(oracle::phase_image(pol));
        oracle::PixelSet found;
        for (const auto& p : det.coordinates) found.insert({p.row, p.col});
        return oracle::f1_score(found, oracle::sign_change_walls(pol)).f1;
    };
    Grid<std::int8_t> two(64, 64, 1);
    for (std::size_t r = 0; r < 64; ++r)
        for (std::size_t c = 32; c < 64; ++c) two(r, c) = -1;
    const double f_two = score(two);
    o.require(f_two >= 0.9, "two-domain F1 >= 0.9");
    double f_min = 1.0;
    for (std::uint64_t seed : {1u, 7u, 21u}) {
        f_min = std::min(f_min, score(instrument::generate_sample(seed, {}).polarization));
    }
    o.require(f_min >= 0.9, "multi-domain F1 >= 0.9");
    o.note("two-domain F1 " + fmt("%.3f", f_two) + ", multi-domain min F1 " + fmt("%.3f", f_min));
    return o;
}

Outcome analysis_oracles() {
    Outcome o;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    Channel ch{{32, 32, 16}, "a.u.", DType::f64, {}};
    ch.data.resize(32 * 32 * 16);
    for (auto& v : ch.data) v = u(rng);
    std::vector<double> freq(16);
    for (std::size_t k = 0; k < 16; ++k) freq[k] = 1e3 * static_cast<double>(k);

    const auto m = analysis::mean_spectrum(analysis::SpectraView::of(ch), freq);
    double mean_err = 0;
    for (std::size_t k = 0; k < 16; ++k) {
        double sum = 0;
        for (std::size_t p = 0; p < 1024; ++p) sum += ch.data[p * 16 + k];
        mean_err = std::max(mean_err, std::abs(m.amplitude[k] - sum / 1024.0));
    }
    o.require(mean_err <= 1e-12, "mean spectrum within 1e-12");

    std::size_t best = 0;
    double best_peak = -1;
    for (std::size_t p = 0; p < 1024; ++p) {
        for (std::size_t k = 0; k < 16; ++k) {
            if (ch.data[p * 16 + k] > best_peak) best_peak = ch.data[p * 16 + k], best = p;
        }
    }
    const auto s = analysis::strongest_spectrum(analysis::SpectraView::of(ch));
    o.require(s.pixel == best && s.peak == best_peak, "strongest spectrum exact");

    std::vector<double> h(1024);
    std::normal_distribution<double> n(3.0, 0.7);
    for (auto& v : h) v = n(rng);
    double mu = 0;
    for (double v : h) mu += v;
    mu /= 1024;
    double var = 0;
    for (double v : h) var += (v - mu) * (v - mu);
    const double rough_err = std::abs(analysis::roughness(h) - std::sqrt(var / 1024));
    o.require(rough_err <= 1e-12, "roughness within 1e-12");
    o.require(analysis::roughness(std::vector<double>(1024, 4.2)) == 0.0, "flat roughness = 0");
    std::vector<double> alt(1024);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = static_cast<double>(i % 2);
    o.require(analysis::roughness(alt) == 0.5, "alternating 0/1 roughness = 0.5");
    o.note("mean err " + fmt("%.1e", mean_err) + ", strongest pixel " + std::to_string(best) + ", roughness err " +
           fmt("%.1e", rough_err));
    return o;
}

Outcome workflow_e2e() {
    Outcome o;
    auto api = make_api(7, {}, std::make_shared<store::MemoryRepository>());
    const auto truth = oracle::sign_change_walls(api->instrument().sample().polarization);

    const workflow::WallStudyParams params;
    const auto plan = workflow::wall_study_plan(params);
    const auto diags = workflow::validate_plan(plan);
    o.require(workflow::plan_ok(diags) && diags.empty(), "validator ok");
    const auto report = workflow::execute_plan(plan, *api);
    o.require(report.ok, "plan executed");

    std::size_t beps_points = 0, off_wall = 0;
    std::vector<Point> pulsed;
    std::string first_scan, second_scan;
    for (std::size_t i = 0; i < report.steps.size(); ++i) {
        const auto& s = report.steps[i];
        if (s.op == "do_beps_specific") {
            for (const auto& loc : s.params["locations"]) {
                ++beps_points;
                const auto px = api->instrument().pixel_at(loc[0].get<double>(), loc[1].get<double>());
                if (!oracle::near(truth, {px.row, px.col}, 1)) ++off_wall;
            }
        }
        if (s.op == "apply_pulse" && i > 0 && report.steps[i - 1].op == "tip_control") {
            const auto& mv = report.steps[i - 1].params;
            pulsed.push_back({mv["x_um"].get<double>(), mv["y_um"].get<double>()});
        }
        if (s.op == "raster_scan") (first_scan.empty() ? first_scan : second_scan) = s.outputs["dataset"];
    }
    o.require(beps_points > 0, "BEPS points selected");
    o.require(off_wall == 0, "every BEPS point within 1 px of a true wall");
    o.require(!pulsed.empty(), "pulses applied");

    const auto& before = api->repository().get(first_scan).channel(channels::phase);
    const auto& after = api->repository().get(second_scan).channel(channels::phase);
    const Region& rg = params.region;
    const int n = params.scan_res;
    std::size_t unchanged = 0;
    for (const auto& p : pulsed) {
        const long col = std::lround((p.x_um - rg.x0) / (rg.x1 - rg.x0) * (n - 1));
        const long row = std::lround((p.y_um - rg.y0) / (rg.y1 - rg.y0) * (n - 1));
        bool differs = false;
        for (long r = std::max(0L, row - 2); r <= std::min<long>(n - 1, row + 2); ++r) {
            for (long c = std::max(0L, col - 2); c <= std::min<long>(n - 1, col + 2); ++c) {
                const auto k = static_cast<std::size_t>(r * n + c);
                if (wrapped_diff(before.data[k], after.data[k]) > std::numbers::pi / 2) differs = true;
            }
        }
        if (!differs) ++unchanged;
    }
    o.require(unchanged == 0, "re-image differs within 2 px of every pulsed point");
    o.note(std::to_string(beps_points) + " BEPS points, " + std::to_string(off_wall) + " off-wall, " +
           std::to_string(pulsed.size()) + " pulses, " + std::to_string(unchanged) + " without a phase change");
    return o;
}

Outcome log_determinism() {
    Outcome o;
    TempDir first, second;
    auto log_a = std::make_shared<log::ExperimentLog>(first / "experiment.log");
    std::filesystem::create_directories(first / "data");
    std::filesystem::create_directories(second / "data");
    auto a = make_api(7, {}, std::make_shared<store::DirectoryStore>(first / "data"), log_a);
    workflow::WallStudyParams params;
    params.scan_res = 32;
    params.max_walls = 4;
    o.require(workflow::execute_plan(workflow::wall_study_plan(params), *a).ok, "first run ok");
    try {
        a->invoke("tip_control", {{"x_um", 99.0}, {"y_um", 1.0}});
    } catch (const Error&) {
        // Error records are part of the log and are skipped on replay.
    }
    a->invoke("do_line_scan", {{"start", {1, 1}}, {"end", {6, 2}}, {"num_points", 8}});

    const auto records = log::parse_log(read_file(first / "experiment.log"));
    o.require(records == log_a->records(), "log file parses back to the written records");
    const auto replay = workflow::reconstruct_plan(records);
    auto b = make_api(7, {}, std::make_shared<store::DirectoryStore>(second / "data"));
    o.require(workflow::execute_plan(replay, *b).ok, "replay ok");
    const auto ta = read_tree(first / "data");
    const auto tb = read_tree(second / "data");
    o.require(!ta.empty() && ta == tb, "containers byte-identical");

    const auto rnd = fixtures::random_records(2024, 1000);
    std::string text;
    for (const auto& r : rnd) text += log::format_record(r);
    const auto parsed = log::parse_log(text);
    std::string again;
    for (const auto& r : parsed) again += log::format_record(r);
    o.require(parsed == rnd && again == text, "parse/write identity on 1000 records");
    o.note(std::to_string(records.size()) + " records, " + std::to_string(replay.steps.size()) + " replayed steps, " +
           std::to_string(ta.size()) + " container files compared");
    return o;
}

Outcome assistant_goldens() {
    Outcome o;
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"Move the AFM tip to (10, 5) um", "tip_move"},
        {"Set the BE amplitude to 1 V and center frequency to 380 kHz", "be_parms"},
        {"Perform a BE line scan from (1, 1) to (5, 5) um with center frequency 380 kHz", "line_scan"},
        {"Conduct a spiral scan with 5 V applied to the AFM tip", "spiral_scan"},
        {"Run a domain wall study: image the domain walls, do BEPS at the walls, then pulse them and re-image",
         "wall_study"},
    };
    assistant::MockLlmClient mock;
    int matched = 0;
    for (const auto& [instruction, file] : cases) {
        const auto ex = assistant::propose_plan(instruction, {}, mock);
        const auto golden =
            workflow::parse_plan(read_file(std::string(AESCOPE_TEST_DATA) + "/golden/" + file + ".json"));
        const bool ok = ex.executable && ex.proposed && *ex.proposed == golden &&
                        workflow::plan_ok(workflow::validate_plan(*ex.proposed));
        o.require(ok, file + " golden");
        matched += ok;

        if (file == "be_parms" && ex.proposed) {
            auto api = make_api(7, {}, std::make_shared<store::MemoryRepository>());
            assistant::execute_approved(ex, assistant::approve(*ex.proposed), *api);
            const auto rec = api->experiment_log().records().at(0);
            o.require(rec.params.size() == 7 && rec.params["center_frequency_khz"] == 380.0,
                      "380 kHz with five defaults filled");
        }
        if (file == "spiral_scan" && ex.proposed) {
            bool bias_outside = false, spiral_clean = true;
            for (const auto& s : ex.proposed->steps) {
                if (s.op == "set_tip_bias" && s.params.value("voltage_v", 0.0) == 5.0) bias_outside = true;
                if (s.op == "spiral_waveform" && s.params.contains("tip_voltage_v")) spiral_clean = false;
            }
            o.require(bias_outside && spiral_clean, "spiral bias outside the spiral call");
        }
    }

    const std::string text = "BE-PFM was performed with a 1 V ac drive at a center frequency of 350 kHz";
    const auto ext = assistant::extract_protocol(text, mock);
    bool spans_ok = ext.spans.size() == 2;
    for (const auto& s : ext.spans) spans_ok = spans_ok && text.substr(s.begin, s.end - s.begin) == s.text;
    spans_ok = spans_ok && ext.spans[0].text == "1 V" && ext.spans[1].text == "350 kHz";
    o.require(ext.params == json{{"amplitude_v", 1}, {"center_frequency_khz", 350}}, "extracted parameters");
    o.require(spans_ok, "extraction spans");
    o.note(std::to_string(matched) + "/5 goldens, extraction " + ext.params.dump());
    return o;
}

Outcome gateway_wire() {
    Outcome o;
    TempDir local, remote;
    const std::vector<std::pair<std::string, json>> calls = {
        {"define_be_parms", {{"num_bins", 64}, {"center_frequency_khz", 355}}},
        {"raster_scan", {{"region", {2, 2, 8, 8}}, {"ny", 8}, {"nx", 8}}},
        {"do_line_scan", {{"start", {1, 1}}, {"end", {9, 4}}, {"num_points", 10}}},
        {"tip_control", {{"x_um", 5}, {"y_um", 5}}},
        {"apply_pulse", {{"voltage_v", -9}}},
        {"do_beps_specific", {{"locations", {{5, 5}, {6, 6}}}, {"bias_waveform", control::triangle_bias(8, 4)}}},
    };
    auto in_process = make_api(7, {}, std::make_shared<store::DirectoryStore>(local.path()));
    for (const auto& [m, p] : calls) in_process->invoke(m, p);

    gateway::Service svc(make_api(7, {}, std::make_shared<store::DirectoryStore>(remote.path())), {});
    gateway::ServerOptions opt;
    opt.tcp_port = 0;
    opt.enable_ws = false;
    gateway::Server server(svc, opt);
    server.start();
    gateway::Client client("127.0.0.1", server.tcp_port());
    for (const auto& [m, p] : calls) client.result(m, p);
    const auto ta = read_tree(local.path());
    const auto tb = read_tree(remote.path());
    o.require(!ta.empty() && ta == tb, "in-process and wire datasets byte-identical");

    // Malformed frames: broken JSON, or JSON that is not a request envelope.
    std::mt19937_64 rng(31337);
    const std::vector<std::string> seeds = {
        R"({"id": 1, "method": "get_state", "params": {}})",
        R"({"id": 2, "method": "tip_control", "params": {"x_um": 1, "y_um": 2}})",
        R"({"id": 3, "method": "raster_scan", "params": {"region": [1, 1, 2, 2], "ny": 2, "nx": 2}})"};
    const std::vector<std::string> shapes = {
        "[]", "42", "\"text\"", "null", "true", R"({"id": "x", "method": "get_state"})",
        R"({"method": "get_state"})", R"({"id": 5})", R"({"id": 5, "method": 7})",
        R"({"id": 5, "method": "get_state", "params": []})", R"({"id": 5, "method": "get_state", "params": 1})",
        R"({"id": 5, "method": "get_state", "extra": {}})", R"({"id": 1.5, "method": "get_state"})",
        R"({"id": null, "method": "nope"})"};
    auto random_frame = [&]() -> std::string {
        for (;;) {
            std::string f;
            switch (rng() % 4) {
            case 0: {  // truncation
                const auto& s = seeds[rng() % seeds.size()];
                f = s.substr(0, 1 + rng() % (s.size() - 1));
                break;
            }
            case 1: {  // byte flips
                f = seeds[rng() % seeds.size()];
                const int flips = 1 + static_cast<int>(rng() % 4);
                for (int i = 0; i < flips; ++i) f[rng() % f.size()] = static_cast<char>(1 + rng() % 255);
                break;
            }
            case 2: {  // random bytes
                f.resize(1 + rng() % 200);
                for (auto& c : f) c = static_cast<char>(1 + rng() % 255);
                break;
            }
            default:
                f = shapes[rng() % shapes.size()];
                return f;
            }
            if (f.find('\n') != std::string::npos || f.find('\r') != std::string::npos) continue;
            if (f.find_first_not_of(" \t") == std::string::npos) continue;
            if (json::accept(f)) continue;  // a mutation that still parses is not malformed JSON
            return f;
        }
    };
    std::size_t bad = 0;
    for (int i = 0; i < 10000; ++i) {
        const json r = client.send_raw(random_frame());
        const int code = r.value("/error/code"_json_pointer, 0);
        if (r.value("ok", true) || (code != gateway::kParseError && code != gateway::kInvalidParams)) ++bad;
    }
    o.require(bad == 0, "10k malformed frames answered with -32700/-32602");
    o.require(client.call("get_state")["ok"] == true, "server alive after fuzzing");
    o.require(client.call("frobnicate")["error"]["code"] == gateway::kUnknownMethod, "unknown method -32601");
    server.stop();
    o.note(std::to_string(ta.size()) + " files compared, " + std::to_string(bad) + " bad fuzz replies");
    return o;
}

Outcome performance() {
    Outcome o;
    auto api = make_api(7, {}, std::make_shared<store::MemoryRepository>());
    BEParamsPartial be;
    be.num_bins = 128;
    api->define_be_parms(be);
    const auto ds = api->raster_scan({api->instrument().sample().pixel_center_region(), 64, 64});
    o.require(ds.channel(channels::raw_spectra).shape == std::vector<std::size_t>{64, 64, 128}, "64x64x128 spectra");
    o.require(ds.channel(channels::q_factor).shape == std::vector<std::size_t>{64, 64}, "fitted maps");
    o.note("64x64 raster, 128 bins, fit included");
    return o;
}

}  // namespace

int main() {
    criterion("BE physics", 1, be_physics);
    criterion("SHO fit", 30, sho_fit);
    criterion("Trajectories", 1, trajectories);
    criterion("Canny wall detection", 5, canny);
    criterion("Analysis oracles", 0, analysis_oracles);
    criterion("Workflow end-to-end", 60, workflow_e2e);
    criterion("Log determinism", 0, log_determinism);
    criterion("Assistant goldens", 0, assistant_goldens);
    criterion("Gateway", 0, gateway_wire);
    criterion("Performance", 10, performance);
    std::printf("%d criteria failed\n", failures);
    return failures;
}
