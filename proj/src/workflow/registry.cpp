#include "aescope/workflow/registry.hpp"

#include "aescope/analysis/canny.hpp"
#include "aescope/analysis/sho_fit.hpp"
#include "aescope/analysis/spectra.hpp"
#include "aescope/core/error.hpp"
#include "aescope/core/json_util.hpp"

#include <algorithm>
#include <cmath>

namespace aescope::workflow {

namespace {

using analysis::CannyParams;
using control::ControlApi;

bool is_num(const json& v) { return v.is_number() && std::isfinite(v.get<double>()); }

bool is_point(const json& v) { return v.is_array() && v.size() == 2 && is_num(v[0]) && is_num(v[1]); }

bool is_pixel(const json& v) {
    return v.is_array() && v.size() == 2 && jsonutil::is_integral(v[0]) && jsonutil::is_integral(v[1]) &&
           v[0].get<double>() >= 0 && v[1].get<double>() >= 0;
}

bool all_of(const json& v, bool (*pred)(const json&)) {
    return v.is_array() && std::all_of(v.begin(), v.end(), pred);
}

ParamSpec param(std::string name, ParamType type, std::string description, json def = nullptr,
                std::vector<std::string> choices = {}) {
    ParamSpec p;
    p.name = std::move(name);
    p.type = type;
    p.required = def.is_null();
    p.default_value = std::move(def);
    p.description = std::move(description);
    p.choices = std::move(choices);
    return p;
}

ParamSpec optional_param(std::string name, ParamType type, std::string description) {
    ParamSpec p = param(std::move(name), type, std::move(description));
    p.required = false;
    return p;
}

OutputSpec out(std::string name, ParamType type, std::string description, bool indexed = false) {
    return {std::move(name), type, std::move(description), indexed};
}

json image_json(const Channel& ch) {
    if (ch.shape.size() != 2) throw Error(ErrorCode::shape_mismatch, "channel is not two-dimensional");
    json rows = json::array();
    for (std::size_t r = 0; r < ch.shape[0]; ++r) {
        rows.push_back(std::vector<double>(ch.data.begin() + static_cast<std::ptrdiff_t>(r * ch.shape[1]),
                                           ch.data.begin() + static_cast<std::ptrdiff_t>((r + 1) * ch.shape[1])));
    }
    return rows;
}

Image image_from_json(const json& v) {
    if (auto why = check_type(ParamType::image, v)) throw Error(ErrorCode::invalid_params, "image " + *why);
    const std::size_t rows = v.size();
    const std::size_t cols = v[0].size();
    Image img(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) img(r, c) = v[r][c].get<double>();
    }
    return img;
}

json image_json(const Image& img) {
    json rows = json::array();
    for (std::size_t r = 0; r < img.rows(); ++r) {
        rows.push_back(std::vector<double>(img.row(r).begin(), img.row(r).end()));
    }
    return rows;
}

BESpectrum spectrum_from_json(const json& v) {
    BESpectrum s;
    s.frequency_hz = v.at("frequency_hz").get<std::vector<double>>();
    s.amplitude = v.at("amplitude").get<std::vector<double>>();
    if (v.contains("phase_rad")) s.phase_rad = v.at("phase_rad").get<std::vector<double>>();
    else s.phase_rad.assign(s.frequency_hz.size(), 0.0);
    if (s.amplitude.size() != s.frequency_hz.size() || s.phase_rad.size() != s.frequency_hz.size()) {
        throw Error(ErrorCode::shape_mismatch, "spectrum arrays differ in length");
    }
    return s;
}

std::vector<double> frequency_of(const Dataset& ds) { return ds.channel(channels::frequency).data; }

// Instrument executors go through ControlApi::invoke so logging is uniform.
Executor instrument_exec(std::string op) {
    return [op](ExecContext& ctx, const json& params) { return ctx.api.invoke(op, params); };
}

json raster_exec(ExecContext& ctx, const json& params) {
    json result = ctx.api.invoke("raster_scan", params);
    const Dataset ds = ctx.api.repository().get(result["dataset"].get<std::string>());
    result["phase"] = image_json(ds.channel(channels::phase));
    result["amplitude"] = image_json(ds.channel(channels::amplitude));
    result["topography"] = image_json(ds.channel(channels::topography));
    return result;
}

const std::vector<ParamSpec>& be_param_specs(bool with_defaults) {
    static const auto make = [](bool defaults) {
        const BEParams d;
        auto p = [&](std::string name, ParamType t, std::string desc, json def, std::vector<std::string> ch = {}) {
            return defaults ? param(std::move(name), t, std::move(desc), std::move(def), std::move(ch))
                            : [&] {
                                  ParamSpec s = optional_param(std::move(name), t, std::move(desc));
                                  s.choices = std::move(ch);
                                  return s;
                              }();
        };
        return std::vector<ParamSpec>{
            p("center_frequency_khz", ParamType::number, "Center of the excitation band (kHz).",
              d.center_frequency_khz),
            p("band_width_khz", ParamType::number, "Width of the excitation band (kHz).", d.band_width_khz),
            p("amplitude_v", ParamType::number, "Drive amplitude (V).", d.amplitude_v),
            p("num_bins", ParamType::integer, "Frequency bins per spectrum (>= 8).", d.num_bins),
            p("repeats", ParamType::integer, "Averaged repeats per spectrum.", d.repeats),
            p("duration_ms", ParamType::number, "Excitation duration (ms).", d.duration_ms),
            p("waveform", ParamType::string, "Excitation waveform.", to_string(d.waveform), {"sinc", "chirp"}),
        };
    };
    static const auto with = make(true);
    static const auto without = make(false);
    return with_defaults ? with : without;
}

ToolRegistry build_registry() {
    ToolRegistry reg;
    const control::TipControlRequest tip_defaults;
    const control::PulseRequest pulse_defaults;

    // Instrument operations.
    reg.add({"define_be_parms", "instrument",
             "Set the band-excitation drive parameters. Any of the seven fields may be given; the rest take "
             "their defaults. Must run before any spectroscopic acquisition.",
             be_param_specs(true),
             {out("center_frequency_khz", ParamType::number, "Resolved center frequency (kHz)."),
              out("band_width_khz", ParamType::number, "Resolved band width (kHz)."),
              out("amplitude_v", ParamType::number, "Resolved drive amplitude (V)."),
              out("num_bins", ParamType::integer, "Resolved bin count."),
              out("repeats", ParamType::integer, "Resolved repeats."),
              out("duration_ms", ParamType::number, "Resolved duration (ms)."),
              out("waveform", ParamType::string, "Resolved waveform.")},
             false, instrument_exec("define_be_parms")});
    reg.add({"tip_control", "instrument",
             "Move the tip to (x_um, y_um) inside the scan window. Use it to position the tip before apply_pulse.",
             {param("x_um", ParamType::number, "Target x (um)."), param("y_um", ParamType::number, "Target y (um)."),
              param("speed_um_s", ParamType::number, "Travel speed (um/s).", tip_defaults.speed_um_s)},
             {out("duration_s", ParamType::number, "Simulated travel time (s)."),
              out("position", ParamType::point, "Final tip position (um).")},
             false, instrument_exec("tip_control")});
    reg.add({"set_tip_bias", "instrument",
             "Set the DC bias on the tip (V). The bias stays applied during later trajectory scans; it is not a "
             "parameter of the trajectory generators.",
             {param("voltage_v", ParamType::number, "Tip bias (V), within the output range.")},
             {out("tip_bias_v", ParamType::number, "Applied bias (V).")}, false, instrument_exec("set_tip_bias")});
    const IOConfig io;
    reg.add({"set_io_config", "instrument", "Configure the IO cluster: sample rate, output range and channel list.",
             {param("sample_rate_hz", ParamType::number, "DAQ sample rate (Hz).", io.sample_rate_hz),
              param("output_range_v", ParamType::number, "Output voltage range (V).", io.output_range_v),
              param("channels", ParamType::string_list, "Ordered, unique channel names.", io.channels)},
             {out("sample_rate_hz", ParamType::number, "Sample rate (Hz)."),
              out("output_range_v", ParamType::number, "Output range (V)."),
              out("channels", ParamType::string_list, "Channel names.")},
             false, instrument_exec("set_io_config")});
    const std::vector<OutputSpec> acq_outputs = {out("dataset", ParamType::dataset_ref, "Stored dataset id."),
                                                 out("shape", ParamType::number_list, "Shape of the main channel."),
                                                 out("aborted", ParamType::boolean, "True when cancelled.")};
    reg.add({"do_line_scan", "instrument",
             "Band-excitation line scan: num_points spectra evenly spaced from start to end. Requires "
             "define_be_parms first.",
             {param("start", ParamType::point, "Start point [x, y] (um)."),
              param("end", ParamType::point, "End point [x, y] (um)."),
              param("num_points", ParamType::integer, "Points along the line (>= 2).", 64)},
             acq_outputs, true, instrument_exec("do_line_scan")});
    auto raster_outputs = acq_outputs;
    raster_outputs.push_back(out("phase", ParamType::image, "Fitted phase map (rad)."));
    raster_outputs.push_back(out("amplitude", ParamType::image, "Fitted amplitude map."));
    raster_outputs.push_back(out("topography", ParamType::image, "Height map (um)."));
    reg.add({"raster_scan", "instrument",
             "Band-excitation raster image over region with ny x nx points; fits every spectrum and returns "
             "amplitude, phase and topography maps. Requires define_be_parms first.",
             {param("region", ParamType::region, "Scan rectangle [x0, y0, x1, y1] (um)."),
              param("ny", ParamType::integer, "Lines (>= 2).", 64),
              param("nx", ParamType::integer, "Points per line (>= 2).", 64)},
             raster_outputs, true, raster_exec});
    reg.add({"do_beps_grid", "instrument",
             "BEPS hysteresis loops on an ny x nx grid of points over region. Requires define_be_parms first.",
             {param("region", ParamType::region, "Grid rectangle [x0, y0, x1, y1] (um)."),
              param("ny", ParamType::integer, "Grid rows.", 2), param("nx", ParamType::integer, "Grid columns.", 2),
              param("bias_waveform", ParamType::number_list, "DC bias steps (V).")},
             acq_outputs, true, instrument_exec("do_beps_grid")});
    reg.add({"do_beps_specific", "instrument",
             "BEPS hysteresis loops at the listed locations, in order, duplicates included. Requires "
             "define_be_parms first.",
             {param("locations", ParamType::points, "Points [[x, y], ...] (um)."),
              param("bias_waveform", ParamType::number_list, "DC bias steps (V).")},
             acq_outputs, true, instrument_exec("do_beps_specific")});
    reg.add({"apply_pulse", "instrument",
             "Apply a DC voltage pulse at the current tip position. Takes no coordinates: move the tip with "
             "tip_control first.",
             {param("voltage_v", ParamType::number, "Pulse amplitude (V)."),
              param("duration_ms", ParamType::number, "Pulse length (ms).", pulse_defaults.duration_ms)},
             {out("radius_um", ParamType::number, "Switching radius (um)."),
              out("pixels_flipped", ParamType::integer, "Pixels whose polarization changed.")},
             false, instrument_exec("apply_pulse")});
    reg.add({"do_trajectory_scan", "instrument",
             "Drive the tip along a generated trajectory and acquire a spectrum every measure_every samples. The "
             "tip bias set by set_tip_bias stays applied. Requires define_be_parms first.",
             {param("trajectory", ParamType::trajectory, "Output of a *_waveform tool."),
              param("measure_every", ParamType::integer, "Acquire at every n-th sample.", 1)},
             acq_outputs, true, instrument_exec("do_trajectory_scan")});

    // Trajectory generators: positions only.
    const trajectory::FlowerParams fl;
    reg.add({"flower_waveform", "trajectory",
             "Closed path shaped like a circle with oscillating radius r0 + amp*sin(petals*theta).",
             {param("center", ParamType::point, "Center [x, y] (um).", fl.center),
              param("r0_um", ParamType::number, "Base radius (um).", fl.r0_um),
              param("amp_um", ParamType::number, "Radius oscillation amplitude (um), < r0_um.", fl.amp_um),
              param("petals", ParamType::integer, "Oscillations per revolution.", fl.petals),
              param("n_samples", ParamType::integer, "Samples (>= 16).", fl.n_samples),
              param("sample_rate_hz", ParamType::number, "Sample rate (Hz).", fl.sample_rate_hz)},
             {out("trajectory", ParamType::trajectory, "Generated path."),
              out("num_samples", ParamType::integer, "Sample count.")},
             false, [](ExecContext&, const json& p) {
                 const auto t = trajectory::flower_waveform(p.get<trajectory::FlowerParams>());
                 return json{{"trajectory", t}, {"num_samples", t.samples.size()}};
             }});
    const trajectory::SpiralParams sp;
    reg.add({"spiral_waveform", "trajectory",
             "Archimedean spiral r = pitch*theta/(2*pi) out to r_max_um. Positions only: it has no voltage "
             "parameter; set the tip bias with set_tip_bias.",
             {param("center", ParamType::point, "Center [x, y] (um).", sp.center),
              param("r_max_um", ParamType::number, "Outer radius (um).", sp.r_max_um),
              param("pitch_um", ParamType::number, "Radial growth per turn (um).", sp.pitch_um),
              param("mode", ParamType::string, "Angular stepping.", trajectory::to_string(sp.mode),
                    {"constant_angular_velocity", "constant_linear_velocity"}),
              param("sample_rate_hz", ParamType::number, "Sample rate (Hz).", sp.sample_rate_hz),
              param("samples_per_turn", ParamType::integer, "Samples per turn (>= 8).", sp.samples_per_turn)},
             {out("trajectory", ParamType::trajectory, "Generated path."),
              out("num_samples", ParamType::integer, "Sample count.")},
             false, [](ExecContext&, const json& p) {
                 const auto t = trajectory::spiral_waveform(p.get<trajectory::SpiralParams>());
                 return json{{"trajectory", t}, {"num_samples", t.samples.size()}};
             }});
    reg.add({"raster_waveform", "trajectory", "Serpentine raster path over region.",
             {param("region", ParamType::region, "Rectangle [x0, y0, x1, y1] (um)."),
              param("lines", ParamType::integer, "Lines (>= 1).", 64),
              param("pts_per_line", ParamType::integer, "Points per line (>= 2).", 64),
              param("sample_rate_hz", ParamType::number, "Sample rate (Hz).", 1000.0)},
             {out("trajectory", ParamType::trajectory, "Generated path."),
              out("num_samples", ParamType::integer, "Sample count.")},
             false, [](ExecContext& ctx, const json& p) {
                 trajectory::RasterParams rp;
                 rp.region = p.at("region").get<Region>();
                 rp.lines = static_cast<int>(jsonutil::integer(p, "lines"));
                 rp.pts_per_line = static_cast<int>(jsonutil::integer(p, "pts_per_line"));
                 rp.sample_rate_hz = jsonutil::number(p, "sample_rate_hz");
                 rp.window = ctx.api.window();
                 const auto t = trajectory::raster_waveform(rp);
                 return json{{"trajectory", t}, {"num_samples", t.samples.size()}};
             }});
    reg.add({"validate_trajectory", "trajectory",
             "Check a trajectory against the scan window and a speed limit; returns every violation.",
             {param("trajectory", ParamType::trajectory, "Path to check."),
              optional_param("max_speed_um_s", ParamType::number, "Speed limit (um/s); instrument limit if omitted."),
              optional_param("window", ParamType::region, "Window [x0, y0, x1, y1]; instrument window if omitted.")},
             {out("ok", ParamType::boolean, "No violations."),
              out("violations", ParamType::object, "List of {index, kind, speed_um_s}.")},
             false, [](ExecContext& ctx, const json& p) {
                 const auto t = p.at("trajectory").get<trajectory::ScanTrajectory>();
                 const Region w = p.contains("window") ? p["window"].get<Region>() : ctx.api.window();
                 const double vmax = p.contains("max_speed_um_s") ? p["max_speed_um_s"].get<double>()
                                                                  : ctx.api.instrument().config().max_scan_speed_um_s;
                 const auto v = trajectory::validate_trajectory(t, w, vmax);
                 return json{{"ok", v.empty()}, {"violations", v}};
             }});

    // Analysis.
    const CannyParams cp;
    reg.add({"detect_domain_walls", "analysis",
             "Canny edge detection on an image (typically the phase map of raster_scan); returns wall pixels.",
             {param("image", ParamType::image, "2-D field, rows of numbers."),
              param("gaussian_sigma_px", ParamType::number, "Blur sigma (px).", cp.gaussian_sigma_px),
              param("low_ratio", ParamType::number, "Low threshold / max gradient.", cp.low_ratio),
              param("high_ratio", ParamType::number, "High threshold / max gradient.", cp.high_ratio)},
             {out("coordinates", ParamType::pixels, "Wall pixels [[row, col], ...]."),
              out("count", ParamType::integer, "Number of wall pixels."),
              out("mask", ParamType::image, "1 on wall pixels, 0 elsewhere.")},
             false, [](ExecContext&, const json& p) {
                 const CannyParams c{p.at("gaussian_sigma_px").get<double>(), p.at("low_ratio").get<double>(),
                                     p.at("high_ratio").get<double>()};
                 const auto d = analysis::detect_domain_walls(image_from_json(p.at("image")), c);
                 json coords = json::array();
                 for (const auto& px : d.coordinates) coords.push_back({px.row, px.col});
                 Image mask(d.mask.rows(), d.mask.cols());
                 for (std::size_t i = 0; i < mask.size(); ++i) mask.values()[i] = d.mask.values()[i];
                 return json{{"coordinates", coords}, {"count", d.coordinates.size()}, {"mask", image_json(mask)}};
             }});
    reg.add({"select_wall_points", "analysis",
             "Subsample up to max_walls wall pixels with a uniform stride and convert them to raster positions "
             "(um) for a scan of region with ny x nx points. Fewer walls than max_walls repeat cyclically. "
             "Outputs x_<k>/y_<k> for binding into tip_control.",
             {param("pixels", ParamType::pixels, "Wall pixels [[row, col], ...]."),
              param("region", ParamType::region, "Region of the raster that produced the pixels."),
              param("ny", ParamType::integer, "Raster lines."), param("nx", ParamType::integer, "Raster points per line."),
              param("max_walls", ParamType::integer, "Maximum number of points.", 8)},
             {out("points", ParamType::points, "Selected positions [[x, y], ...] (um)."),
              out("count", ParamType::integer, "Number of selected points."),
              out("x_", ParamType::number, "x of the k-th point (um).", true),
              out("y_", ParamType::number, "y of the k-th point (um).", true)},
             false, [](ExecContext&, const json& p) {
                 std::vector<PixelIndex> pixels;
                 for (const auto& px : p.at("pixels")) {
                     pixels.push_back({px[0].get<std::size_t>(), px[1].get<std::size_t>()});
                 }
                 const auto ny = static_cast<int>(jsonutil::integer(p, "ny"));
                 const auto nx = static_cast<int>(jsonutil::integer(p, "nx"));
                 const auto max_walls = jsonutil::integer(p, "max_walls");
                 if (ny < 2 || nx < 2 || max_walls < 0) {
                     throw Error(ErrorCode::invalid_params, "select_wall_points needs ny, nx >= 2 and max_walls >= 0");
                 }
                 for (const auto& px : pixels) {
                     if (px.row >= static_cast<std::size_t>(ny) || px.col >= static_cast<std::size_t>(nx)) {
                         throw Error(ErrorCode::invalid_params, "wall pixel outside the ny x nx raster");
                     }
                 }
                 const auto positions = pixels_to_um(pixels, p.at("region").get<Region>(), ny, nx);
                 json result{{"points", json::array()}};
                 std::size_t k = 0;
                 for (auto i : uniform_stride(positions.size(), static_cast<std::size_t>(max_walls))) {
                     result["points"].push_back(positions[i]);
                     result["x_" + std::to_string(k)] = positions[i].x_um;
                     result["y_" + std::to_string(k)] = positions[i].y_um;
                     ++k;
                 }
                 result["count"] = k;
                 return result;
             }});
    reg.add({"fit_sho", "analysis", "Fit the damped harmonic oscillator model to one spectrum.",
             {param("spectrum", ParamType::spectrum, "{frequency_hz, amplitude, phase_rad}.")},
             {out("a0", ParamType::number, "Response amplitude."), out("f0_hz", ParamType::number, "Resonance (Hz)."),
              out("q_factor", ParamType::number, "Quality factor."),
              out("phase_rad", ParamType::number, "Phase at resonance (rad)."),
              out("residual_rms", ParamType::number, "RMS amplitude residual."),
              out("converged", ParamType::boolean, "Tolerance reached."),
              out("iterations", ParamType::integer, "Iterations used.")},
             false, [](ExecContext&, const json& p) {
                 const auto fit = analysis::fit_sho(spectrum_from_json(p.at("spectrum")));
                 return json{{"a0", fit.params.a0},
                             {"f0_hz", fit.params.f0_hz},
                             {"q_factor", fit.params.q_factor},
                             {"phase_rad", fit.params.phase_offset_rad},
                             {"residual_rms", fit.residual_rms},
                             {"converged", fit.converged},
                             {"iterations", fit.iterations}};
             }});
    reg.add({"mean_spectrum", "analysis", "Per-bin mean of every raw spectrum in a dataset.",
             {param("dataset", ParamType::dataset_ref, "Dataset id with raw_spectra.")},
             {out("spectrum", ParamType::spectrum, "Mean spectrum (phase zero-filled).")}, false,
             [](ExecContext& ctx, const json& p) {
                 const Dataset ds = ctx.api.repository().get(p.at("dataset").get<std::string>());
                 const auto view = analysis::SpectraView::of(ds.channel(channels::raw_spectra));
                 return json{{"spectrum", analysis::mean_spectrum(view, frequency_of(ds))}};
             }});
    reg.add({"strongest_spectrum", "analysis",
             "Spectrum with the largest peak amplitude; ties go to the first pixel in row-major order.",
             {param("dataset", ParamType::dataset_ref, "Dataset id with raw_spectra.")},
             {out("pixel", ParamType::integer, "Row-major pixel index."),
              out("peak", ParamType::number, "Peak amplitude."),
              out("spectrum", ParamType::spectrum, "The selected spectrum.")},
             false, [](ExecContext& ctx, const json& p) {
                 const Dataset ds = ctx.api.repository().get(p.at("dataset").get<std::string>());
                 const auto view = analysis::SpectraView::of(ds.channel(channels::raw_spectra));
                 const auto best = analysis::strongest_spectrum(view);
                 BESpectrum s;
                 s.frequency_hz = frequency_of(ds);
                 s.amplitude = best.amplitude;
                 if (ds.has(channels::raw_phase)) {
                     const auto ph = analysis::SpectraView::of(ds.channel(channels::raw_phase)).spectrum(best.pixel);
                     s.phase_rad.assign(ph.begin(), ph.end());
                 } else {
                     s.phase_rad.assign(s.frequency_hz.size(), 0.0);
                 }
                 return json{{"pixel", best.pixel}, {"peak", best.peak}, {"spectrum", s}};
             }});
    reg.add({"roughness", "analysis", "Population standard deviation of a height channel, no plane removal.",
             {param("dataset", ParamType::dataset_ref, "Dataset id."),
              param("channel", ParamType::string, "Height channel.", channels::topography)},
             {out("roughness_um", ParamType::number, "Standard deviation of heights (um).")}, false,
             [](ExecContext& ctx, const json& p) {
                 const Dataset ds = ctx.api.repository().get(p.at("dataset").get<std::string>());
                 return json{{"roughness_um", analysis::roughness(ds.channel(p.at("channel").get<std::string>()).data)}};
             }});
    auto exc_params = be_param_specs(false);
    exc_params.push_back(
        optional_param("sample_rate_hz", ParamType::number, "Sample rate (Hz); the IO sample rate if omitted."));
    reg.add({"excitation_waveform", "analysis",
             "Time series of the band-excitation drive. Omitted BE fields come from the current BE parameters, "
             "or defaults when none are defined.",
             exc_params,
             {out("t_s", ParamType::number_list, "Sample times (s)."),
              out("volts", ParamType::number_list, "Drive voltage (V).")},
             false, [](ExecContext& ctx, const json& p) {
                 json fields = p;
                 fields.erase("sample_rate_hz");
                 const auto& st = ctx.api.instrument().state();
                 json base = st.be ? json(*st.be) : json(BEParams{});
                 base.update(fields);
                 const double rate = p.contains("sample_rate_hz") ? p["sample_rate_hz"].get<double>()
                                                                  : st.io.sample_rate_hz;
                 const auto ts = analysis::excitation_waveform(base.get<BEParams>(), rate);
                 return json{{"t_s", ts.t_s}, {"volts", ts.volts}};
             }});
    reg.add({"extract_channel_image", "analysis", "Row-major reshape of a dataset channel to rows x cols.",
             {param("dataset", ParamType::dataset_ref, "Dataset id."),
              param("channel", ParamType::string, "Channel name."), param("rows", ParamType::integer, "Rows."),
              param("cols", ParamType::integer, "Columns.")},
             {out("image", ParamType::image, "Reshaped field.")}, false, [](ExecContext& ctx, const json& p) {
                 const Dataset ds = ctx.api.repository().get(p.at("dataset").get<std::string>());
                 const auto rows = jsonutil::integer(p, "rows");
                 const auto cols = jsonutil::integer(p, "cols");
                 if (rows < 1 || cols < 1) throw Error(ErrorCode::invalid_params, "rows and cols must be >= 1");
                 return json{{"image", image_json(analysis::extract_channel_image(
                                           ds, p.at("channel").get<std::string>(), static_cast<std::size_t>(rows),
                                           static_cast<std::size_t>(cols)))}};
             }});
    return reg;
}

}  // namespace

std::string_view to_string(ParamType t) {
    switch (t) {
    case ParamType::number: return "number";
    case ParamType::integer: return "integer";
    case ParamType::string: return "string";
    case ParamType::boolean: return "boolean";
    case ParamType::point: return "point";
    case ParamType::points: return "points";
    case ParamType::region: return "region";
    case ParamType::image: return "image";
    case ParamType::pixels: return "pixels";
    case ParamType::number_list: return "number_list";
    case ParamType::string_list: return "string_list";
    case ParamType::trajectory: return "trajectory";
    case ParamType::spectrum: return "spectrum";
    case ParamType::dataset_ref: return "dataset_ref";
    case ParamType::object: return "object";
    }
    return "object";
}

std::optional<std::string> check_type(ParamType t, const json& v) {
    switch (t) {
    case ParamType::number:
        if (is_num(v)) return std::nullopt;
        return "must be a finite number";
    case ParamType::integer:
        if (jsonutil::is_integral(v)) return std::nullopt;
        return "must be an integer";
    case ParamType::string:
        if (v.is_string()) return std::nullopt;
        return "must be a string";
    case ParamType::boolean:
        if (v.is_boolean()) return std::nullopt;
        return "must be true or false";
    case ParamType::point:
        if (is_point(v)) return std::nullopt;
        return "must be a point [x_um, y_um]";
    case ParamType::points:
        if (all_of(v, is_point)) return std::nullopt;
        return "must be a list of points [[x_um, y_um], ...]";
    case ParamType::region:
        if (v.is_array() && v.size() == 4 && std::all_of(v.begin(), v.end(), is_num)) return std::nullopt;
        return "must be a region [x0, y0, x1, y1]";
    case ParamType::image: {
        if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty()) {
            return "must be a non-empty list of equal-length rows";
        }
        const std::size_t cols = v[0].size();
        for (const auto& row : v) {
            if (!row.is_array() || row.size() != cols || !std::all_of(row.begin(), row.end(), is_num)) {
                return "must be a non-empty list of equal-length numeric rows";
            }
        }
        return std::nullopt;
    }
    case ParamType::pixels:
        if (all_of(v, is_pixel)) return std::nullopt;
        return "must be a list of [row, col] pixel indices";
    case ParamType::number_list:
        if (all_of(v, is_num)) return std::nullopt;
        return "must be a list of numbers";
    case ParamType::string_list:
        if (all_of(v, [](const json& e) { return e.is_string(); })) return std::nullopt;
        return "must be a list of strings";
    case ParamType::trajectory:
        if (v.is_object() && v.contains("samples") && all_of(v["samples"], is_point) && v.contains("sample_rate_hz") &&
            is_num(v["sample_rate_hz"])) {
            return std::nullopt;
        }
        return "must be a trajectory {samples, sample_rate_hz, closed}";
    case ParamType::spectrum:
        if (v.is_object() && v.contains("frequency_hz") && all_of(v["frequency_hz"], is_num) &&
            v.contains("amplitude") && all_of(v["amplitude"], is_num)) {
            return std::nullopt;
        }
        return "must be a spectrum {frequency_hz, amplitude, phase_rad}";
    case ParamType::dataset_ref:
        if (v.is_string() && !v.get<std::string>().empty()) return std::nullopt;
        return "must be a dataset id";
    case ParamType::object:
        return std::nullopt;
    }
    return std::nullopt;
}

bool assignable(ParamType from, ParamType to) {
    if (from == to || to == ParamType::object) return true;
    if (from == ParamType::integer && to == ParamType::number) return true;
    return false;
}

const ParamSpec* ToolSpec::param(std::string_view n) const {
    for (const auto& p : params) {
        if (p.name == n) return &p;
    }
    return nullptr;
}

const OutputSpec* ToolSpec::output(std::string_view n) const {
    for (const auto& o : outputs) {
        if (!o.indexed && o.name == n) return &o;
        if (o.indexed && n.size() > o.name.size() && n.substr(0, o.name.size()) == o.name &&
            std::all_of(n.begin() + static_cast<std::ptrdiff_t>(o.name.size()), n.end(),
                        [](char c) { return c >= '0' && c <= '9'; })) {
            return &o;
        }
    }
    return nullptr;
}

void ToolRegistry::add(ToolSpec spec) {
    if (find(spec.name)) throw Error(ErrorCode::duplicate_id, "tool '" + spec.name + "' registered twice");
    tools_.push_back(std::move(spec));
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
    for (const auto& t : tools_) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

std::vector<std::string> ToolRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& t : tools_) out.push_back(t.name);
    return out;
}

const ToolRegistry& default_registry() {
    static const ToolRegistry reg = build_registry();
    return reg;
}

json with_defaults(const ToolSpec& spec, const json& params) {
    json out = params.is_object() ? params : json::object();
    for (const auto& p : spec.params) {
        if (!out.contains(p.name) && !p.default_value.is_null()) out[p.name] = p.default_value;
    }
    return out;
}

json run_tool(const ToolSpec& spec, ExecContext& ctx, const json& params) {
    if (!params.is_object()) throw Error(ErrorCode::invalid_params, spec.name + ": params must be an object");
    const json full = with_defaults(spec, params);
    // Instrument ops check their own parameters so that rejected calls are logged.
    if (!spec.is_instrument_op()) {
        for (const auto& [k, v] : params.items()) {
            if (!spec.param(k)) {
                throw Error(ErrorCode::invalid_params, spec.name + ": unknown parameter '" + k + "'",
                            json{{"param", k}, {"reason", "unknown-parameter"}});
            }
        }
        for (const auto& ps : spec.params) {
            if (!full.contains(ps.name)) {
                if (ps.required) {
                    throw Error(ErrorCode::invalid_params, spec.name + ": missing parameter '" + ps.name + "'",
                                json{{"param", ps.name}, {"reason", "missing-parameter"}});
                }
                continue;
            }
            if (auto why = check_type(ps.type, full[ps.name])) {
                throw Error(ErrorCode::invalid_params, spec.name + ": parameter '" + ps.name + "' " + *why,
                            json{{"param", ps.name}, {"reason", "type-mismatch"}});
            }
            if (!ps.choices.empty() &&
                std::find(ps.choices.begin(), ps.choices.end(), full[ps.name].get<std::string>()) == ps.choices.end()) {
                throw Error(ErrorCode::invalid_params, spec.name + ": parameter '" + ps.name + "' has an unknown value",
                            json{{"param", ps.name}, {"reason", "type-mismatch"}});
            }
        }
    }
    try {
        return spec.exec(ctx, full);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_params, spec.name + ": " + e.what());
    }
}

json tool_schema(const ToolSpec& spec) {
    json props = json::object();
    json required = json::array();
    for (const auto& p : spec.params) {
        json d{{"type", to_string(p.type)}, {"description", p.description}};
        if (!p.default_value.is_null()) d["default"] = p.default_value;
        if (!p.choices.empty()) d["enum"] = p.choices;
        props[p.name] = d;
        if (p.required) required.push_back(p.name);
    }
    json outputs = json::object();
    for (const auto& o : spec.outputs) {
        outputs[o.indexed ? o.name + "<k>" : o.name] = json{{"type", to_string(o.type)}, {"description", o.description}};
    }
    return json{{"name", spec.name},
                {"category", spec.category},
                {"description", spec.description},
                {"parameters", {{"properties", props}, {"required", required}}},
                {"outputs", outputs}};
}

std::vector<Point> pixels_to_um(const std::vector<PixelIndex>& pixels, const Region& region, int ny, int nx) {
    std::vector<Point> out;
    out.reserve(pixels.size());
    const double sx = region.width() / static_cast<double>(nx - 1);
    const double sy = region.height() / static_cast<double>(ny - 1);
    for (const auto& p : pixels) {
        out.push_back({region.x0 + static_cast<double>(p.col) * sx, region.y0 + static_cast<double>(p.row) * sy});
    }
    return out;
}

std::vector<std::size_t> uniform_stride(std::size_t n, std::size_t max_count) {
    std::vector<std::size_t> out;
    if (n == 0) return out;
    for (std::size_t k = 0; k < max_count; ++k) out.push_back(n >= max_count ? k * n / max_count : k % n);
    return out;
}

}  // namespace aescope::workflow
