// aescope command-line entry points: serve, run, replay, summarize, analyze,
// trajectory, assist, extract.

#include "aescope/analysis/canny.hpp"
#include "aescope/analysis/export.hpp"
#include "aescope/analysis/spectra.hpp"
#include "aescope/assistant/assistant.hpp"
#include "aescope/core/error.hpp"
#include "aescope/gateway/server.hpp"
#include "aescope/store/store.hpp"
#include "aescope/workflow/engine.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace aescope;

namespace {

struct CommonOptions {
    std::uint64_t seed = 7;
    std::string config;
    std::string store;  // empty: datasets stay in memory
    std::string log;    // empty: log stays in memory
};

// Config file: {"instrument": {...}, "llm": {...}, "guideline": "<path>", "seed": N}. Every key optional.
struct FileConfig {
    instrument::InstrumentConfig instrument;
    assistant::LLMClientConfig llm;
    std::string guideline;
    std::optional<std::uint64_t> seed;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::not_found, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FileConfig load_config(const std::string& path) {
    FileConfig cfg;
    if (path.empty()) return cfg;
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_config, path + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::invalid_config, path + ": expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "instrument" && key != "llm" && key != "guideline" && key != "seed") {
            throw Error(ErrorCode::invalid_config, path + ": unknown key '" + key + "'");
        }
    }
    if (j.contains("instrument")) cfg.instrument = j["instrument"].get<instrument::InstrumentConfig>();
    if (j.contains("llm")) cfg.llm = j["llm"].get<assistant::LLMClientConfig>();
    if (j.contains("guideline")) cfg.guideline = assistant::load_guideline(j["guideline"].get<std::string>());
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    return cfg;
}

std::shared_ptr<control::ControlApi> make_api(const CommonOptions& o, const FileConfig& cfg, bool seed_given) {
    const std::uint64_t seed = (!seed_given && cfg.seed) ? *cfg.seed : o.seed;
    std::shared_ptr<store::DatasetRepository> repo;
    if (o.store.empty()) repo = std::make_shared<store::MemoryRepository>();
    else repo = std::make_shared<store::DirectoryStore>(o.store);
    auto log = o.log.empty() ? std::make_shared<log::ExperimentLog>() : std::make_shared<log::ExperimentLog>(o.log);
    return std::make_shared<control::ControlApi>(instrument::VirtualInstrument(seed, cfg.instrument), repo, log);
}

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--sample-seed", o.seed, "Seed of the simulated sample")->capture_default_str();
    cmd->add_option("--config", o.config, "JSON config file");
    cmd->add_option("--store", o.store, "Directory for dataset containers (default: in memory)");
    cmd->add_option("--log", o.log, "Experiment log file to write (default: in memory)");
}

void print_step(const workflow::StepResult& s, std::size_t index, std::size_t total) {
    std::cerr << "[" << index + 1 << "/" << total << "] " << s.id << " " << s.op << ": " << s.status;
    if (!s.error_message.empty()) std::cerr << " (" << s.error_code << ": " << s.error_message << ")";
    std::cerr << "\n";
}

json compact_report(const workflow::RunReport& report) {
    json j = report;
    for (auto& step : j["steps"]) {
        if (!step.contains("outputs") || !step["outputs"].is_object()) continue;
        for (const char* bulky : {"phase", "amplitude", "topography", "mask", "image"}) step["outputs"].erase(bulky);
    }
    return j;
}

int report_exit(const workflow::RunReport& report) {
    std::cout << compact_report(report).dump(2) << "\n";
    return report.ok ? 0 : 1;
}

int cmd_serve(const CommonOptions& o, bool seed_given, gateway::ServerOptions server_opts) {
    FileConfig cfg = load_config(o.config);
    gateway::ServiceConfig sc;
    if (const char* token = std::getenv("AESCOPE_TOKEN")) sc.token = token;
    sc.llm = cfg.llm;
    sc.guideline = cfg.guideline;
    gateway::Service service(make_api(o, cfg, seed_given), sc);
    gateway::Server server(service, server_opts);
    server.start();
    std::cerr << "aescope: listening on " << server_opts.host << " tcp:" << server.tcp_port();
    if (server_opts.enable_ws) std::cerr << " ws:" << server.ws_port();
    std::cerr << (sc.token.empty() ? " (no token)" : " (token required)") << "\n";
    server.wait();
    return 0;
}

int cmd_run(const CommonOptions& o, bool seed_given, const std::string& plan_file, bool approve) {
    const auto plan = workflow::parse_plan(read_text(plan_file));
    const auto diagnostics = workflow::validate_plan(plan);
    for (const auto& d : diagnostics) std::cerr << json(d).dump() << "\n";
    if (!workflow::plan_ok(diagnostics)) {
        std::cerr << "plan does not validate\n";
        return 2;
    }
    if (!approve) {
        std::cout << workflow::serialize_plan(plan);
        std::cerr << "plan validated; pass --approve to execute it\n";
        return 2;
    }
    auto api = make_api(o, load_config(o.config), seed_given);
    return report_exit(workflow::execute_plan(plan, *api, workflow::default_registry(), print_step));
}

int cmd_replay(const CommonOptions& o, bool seed_given, const std::string& log_file, bool plan_only) {
    std::vector<std::string> notices;
    const auto plan = workflow::reconstruct_plan(log::parse_log_file(log_file), &notices);
    for (const auto& n : notices) std::cerr << "notice: " << n << "\n";
    if (plan_only) {
        std::cout << workflow::serialize_plan(plan);
        return 0;
    }
    auto api = make_api(o, load_config(o.config), seed_given);
    return report_exit(workflow::execute_plan(plan, *api, workflow::default_registry(), print_step));
}

Image channel_image(const Dataset& ds, const std::string& name) {
    const auto& ch = ds.channel(name);
    if (ch.shape.size() != 2) throw Error(ErrorCode::shape_mismatch, "channel " + name + " is not two-dimensional");
    return analysis::extract_channel_image(ds, name, ch.shape[0], ch.shape[1]);
}

struct AnalyzeOptions {
    std::string dir;
    std::string op;
    std::string png;
    std::string csv;
    std::string channel;
    analysis::CannyParams canny;
};

int cmd_analyze(const AnalyzeOptions& a) {
    const Dataset ds = store::read_container(a.dir);
    json result;
    std::optional<std::vector<std::uint8_t>> png;
    std::optional<std::string> csv;
    if (a.op == "roughness") {
        const std::string ch = a.channel.empty() ? channels::topography : a.channel;
        result = {{"roughness_um", analysis::roughness(ds.channel(ch).data)}, {"channel", ch}};
        if (ds.channel(ch).shape.size() == 2) {
            const Image img = channel_image(ds, ch);
            png = analysis::render_heatmap_png(img);
            csv = analysis::image_csv(img);
        }
    } else if (a.op == "mean-spectrum" || a.op == "strongest") {
        const auto view = analysis::SpectraView::of(ds.channel(channels::raw_spectra));
        const auto& freq = ds.channel(channels::frequency).data;
        if (a.op == "mean-spectrum") {
            const auto s = analysis::mean_spectrum(view, freq);
            result = {{"spectrum", s}};
            png = analysis::render_line_plot_png(s.frequency_hz, s.amplitude);
            csv = analysis::spectrum_csv(s);
        } else {
            const auto best = analysis::strongest_spectrum(view);
            result = {{"pixel", best.pixel}, {"peak", best.peak}, {"amplitude", best.amplitude}};
            png = analysis::render_line_plot_png(freq, best.amplitude);
            BESpectrum s{freq, best.amplitude, std::vector<double>(freq.size(), 0.0)};
            if (ds.has(channels::raw_phase)) {
                const auto ph = analysis::SpectraView::of(ds.channel(channels::raw_phase)).spectrum(best.pixel);
                s.phase_rad.assign(ph.begin(), ph.end());
            }
            csv = analysis::spectrum_csv(s);
        }
    } else if (a.op == "walls") {
        const std::string ch = a.channel.empty() ? channels::phase : a.channel;
        const auto det = analysis::detect_domain_walls(channel_image(ds, ch), a.canny);
        json coords = json::array();
        for (const auto& p : det.coordinates) coords.push_back({p.row, p.col});
        result = {{"count", det.coordinates.size()}, {"coordinates", coords}, {"channel", ch}};
        Image mask(det.mask.rows(), det.mask.cols());
        for (std::size_t i = 0; i < mask.size(); ++i) mask.values()[i] = det.mask.values()[i];
        png = analysis::render_heatmap_png(mask);
        csv = analysis::walls_csv(det);
    } else {
        throw Error(ErrorCode::invalid_params, "unknown op '" + a.op + "'");
    }
    if (!a.png.empty() && png) analysis::write_file(a.png, *png);
    if (!a.csv.empty() && csv) analysis::write_file(a.csv, *csv);
    std::cout << result.dump(2) << "\n";
    return 0;
}

struct TrajectoryOptions {
    std::string shape;
    std::string csv;
    std::vector<double> center{10.0, 10.0};
    trajectory::FlowerParams flower;
    trajectory::SpiralParams spiral;
    std::string spiral_mode = "cav";
    std::vector<double> region{0.0, 0.0, 1.0, 1.0};
    trajectory::RasterParams raster;
    double rate = 1000.0;
};

int cmd_trajectory(TrajectoryOptions t) {
    const Point center{t.center.at(0), t.center.at(1)};
    trajectory::ScanTrajectory traj;
    if (t.shape == "flower") {
        t.flower.center = center;
        t.flower.sample_rate_hz = t.rate;
        traj = trajectory::flower_waveform(t.flower);
    } else if (t.shape == "spiral") {
        t.spiral.center = center;
        t.spiral.sample_rate_hz = t.rate;
        t.spiral.mode = t.spiral_mode == "clv" ? trajectory::SpiralMode::constant_linear_velocity
                                               : trajectory::SpiralMode::constant_angular_velocity;
        traj = trajectory::spiral_waveform(t.spiral);
    } else {
        t.raster.region = Region{t.region.at(0), t.region.at(1), t.region.at(2), t.region.at(3)};
        t.raster.sample_rate_hz = t.rate;
        traj = trajectory::raster_waveform(t.raster);
    }
    const std::string csv = trajectory::to_csv(traj);
    if (t.csv.empty() || t.csv == "-") {
        std::cout << csv;
    } else {
        analysis::write_file(t.csv, csv);
        std::cerr << traj.samples.size() << " samples written to " << t.csv << "\n";
    }
    return 0;
}

assistant::LLMClientConfig client_config(const FileConfig& cfg, const std::string& backend) {
    auto llm = cfg.llm;
    if (!backend.empty()) llm.backend = backend;
    return llm;
}

int cmd_assist(const CommonOptions& o, bool seed_given, const std::string& instruction, const std::string& backend,
               bool approve) {
    FileConfig cfg = load_config(o.config);
    auto client = assistant::make_client(client_config(cfg, backend));
    auto api = make_api(o, cfg, seed_given);
    assistant::ProposeOptions opts;
    opts.guideline = cfg.guideline;
    const auto exchange = assistant::propose_plan(instruction, {}, *client, opts);
    for (const auto& d : exchange.diagnostics) std::cerr << json(d).dump() << "\n";
    if (exchange.proposed) std::cout << workflow::serialize_plan(*exchange.proposed);
    if (!exchange.executable) {
        std::cerr << "proposal does not validate after " << exchange.repair_turns << " repair turn(s)\n";
        return 2;
    }
    if (!approve) {
        std::cerr << "proposal validated; pass --approve to execute it\n";
        return 0;
    }
    const auto token = assistant::approve(*exchange.proposed);
    return report_exit(assistant::execute_approved(exchange, token, *api, workflow::default_registry(), print_step));
}

int cmd_extract(const std::string& config, const std::string& file, const std::string& backend) {
    FileConfig cfg = load_config(config);
    auto client = assistant::make_client(client_config(cfg, backend));
    std::cout << json(assistant::extract_protocol(read_text(file), *client)).dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aescope: simulated band-excitation PFM microscope with workflow automation"};
    app.require_subcommand(1);

    CommonOptions common;
    int code = 0;

    auto* serve = app.add_subcommand("serve", "Run the gateway (newline-delimited JSON over TCP, plus WebSocket)");
    add_common(serve, common);
    gateway::ServerOptions server_opts;
    serve->add_option("--host", server_opts.host, "Listen address")->capture_default_str();
    serve->add_option("--port", server_opts.tcp_port, "TCP port (0: any free port)")->capture_default_str();
    serve->add_option("--ws-port", server_opts.ws_port, "WebSocket port (0: any free port)")->capture_default_str();
    serve->add_flag("!--no-ws", server_opts.enable_ws, "Disable the WebSocket listener");
    serve->add_option("--workers", server_opts.workers, "Request worker threads")->capture_default_str();

    auto* run = app.add_subcommand("run", "Validate a plan file and, with --approve, execute it");
    add_common(run, common);
    std::string plan_file;
    bool approve = false;
    run->add_option("plan", plan_file, "Plan JSON file")->required()->check(CLI::ExistingFile);
    run->add_flag("--approve", approve, "Execute the plan after validation");

    auto* replay = app.add_subcommand("replay", "Rebuild the plan recorded in a log and re-execute it");
    add_common(replay, common);
    std::string log_file;
    bool plan_only = false;
    replay->add_option("logfile", log_file, "Experiment log")->required()->check(CLI::ExistingFile);
    replay->add_flag("--plan-only", plan_only, "Print the reconstructed plan without executing it");

    auto* summarize = app.add_subcommand("summarize", "Plain-English summary of an experiment log");
    std::string summary_file;
    summarize->add_option("logfile", summary_file, "Experiment log")->required()->check(CLI::ExistingFile);

    auto* analyze = app.add_subcommand("analyze", "Run an analysis on a stored dataset container");
    AnalyzeOptions an;
    analyze->add_option("dataset", an.dir, "Dataset container directory")->required()->check(CLI::ExistingDirectory);
    analyze->add_option("--op", an.op, "Analysis")
        ->required()
        ->check(CLI::IsMember({"roughness", "mean-spectrum", "strongest", "walls"}));
    analyze->add_option("--channel", an.channel, "Channel (roughness: topography, walls: phase)");
    analyze->add_option("--png", an.png, "Write a PNG rendering");
    analyze->add_option("--csv", an.csv, "Write the result as CSV");
    analyze->add_option("--sigma", an.canny.gaussian_sigma_px, "Wall detection blur (px)")->capture_default_str();
    analyze->add_option("--low", an.canny.low_ratio, "Wall detection low threshold ratio")->capture_default_str();
    analyze->add_option("--high", an.canny.high_ratio, "Wall detection high threshold ratio")->capture_default_str();

    auto* traj = app.add_subcommand("trajectory", "Generate a scan trajectory as x_um,y_um CSV");
    TrajectoryOptions tr;
    traj->add_option("--shape", tr.shape, "Trajectory shape")
        ->required()
        ->check(CLI::IsMember({"flower", "spiral", "raster"}));
    traj->add_option("--csv", tr.csv, "Output file (default: stdout)");
    traj->add_option("--center", tr.center, "Center x y (um)")->expected(2)->capture_default_str();
    traj->add_option("--rate", tr.rate, "Sample rate (Hz)")->capture_default_str();
    traj->add_option("--r0", tr.flower.r0_um, "Flower base radius (um)")->capture_default_str();
    traj->add_option("--amp", tr.flower.amp_um, "Flower petal amplitude (um)")->capture_default_str();
    traj->add_option("--petals", tr.flower.petals, "Flower petal count")->capture_default_str();
    traj->add_option("--samples", tr.flower.n_samples, "Flower sample count")->capture_default_str();
    traj->add_option("--r-max", tr.spiral.r_max_um, "Spiral outer radius (um)")->capture_default_str();
    traj->add_option("--pitch", tr.spiral.pitch_um, "Spiral pitch (um per turn)")->capture_default_str();
    traj->add_option("--samples-per-turn", tr.spiral.samples_per_turn, "Spiral samples per turn")
        ->capture_default_str();
    traj->add_option("--mode", tr.spiral_mode, "Spiral mode: cav (constant angular) or clv (constant linear)")
        ->check(CLI::IsMember({"cav", "clv"}))
        ->capture_default_str();
    traj->add_option("--region", tr.region, "Raster region x0 y0 x1 y1 (um)")->expected(4)->capture_default_str();
    traj->add_option("--lines", tr.raster.lines, "Raster line count")->capture_default_str();
    traj->add_option("--pts-per-line", tr.raster.pts_per_line, "Raster points per line")->capture_default_str();

    auto* assist = app.add_subcommand("assist", "Turn an instruction into a validated plan");
    add_common(assist, common);
    std::string instruction;
    std::string backend;
    assist->add_option("instruction", instruction, "Natural-language instruction")->required();
    assist->add_option("--client", backend, "LLM client (default: config file, else mock)")
        ->check(CLI::IsMember({"mock", "live"}));
    assist->add_flag("--approve", approve, "Execute the proposal if it validates");

    auto* extract = app.add_subcommand("extract", "Extract BE parameters from a methods-section text file");
    std::string extract_file;
    std::string extract_config;
    extract->add_option("textfile", extract_file, "Plain-text source")->required()->check(CLI::ExistingFile);
    extract->add_option("--client", backend, "LLM client")->check(CLI::IsMember({"mock", "live"}));
    extract->add_option("--config", extract_config, "JSON config file");

    CLI11_PARSE(app, argc, argv);

    auto seed_given = [&](CLI::App* cmd) { return cmd->count("--sample-seed") > 0; };
    try {
        if (*serve) code = cmd_serve(common, seed_given(serve), server_opts);
        else if (*run) code = cmd_run(common, seed_given(run), plan_file, approve);
        else if (*replay) code = cmd_replay(common, seed_given(replay), log_file, plan_only);
        else if (*summarize) std::cout << log::summarize_log(log::parse_log_file(summary_file));
        else if (*analyze) code = cmd_analyze(an);
        else if (*traj) code = cmd_trajectory(tr);
        else if (*assist) code = cmd_assist(common, seed_given(assist), instruction, backend, approve);
        else if (*extract) code = cmd_extract(extract_config, extract_file, backend);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        if (!e.data().is_null()) std::cerr << e.data().dump(2) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return code;
}
