#include "aescope/control/control.hpp"

#include "aescope/analysis/sho_fit.hpp"
#include "aescope/core/error.hpp"
#include "aescope/core/json_util.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <type_traits>

namespace aescope::control {

namespace {

using namespace jsonutil;

int positive_int(const json& j, std::string_view key, int fallback, int minimum) {
    const auto v = optional_integer(j, key);
    if (!v) return fallback;
    if (*v < minimum || *v > 1'000'000) {
        throw Error(ErrorCode::invalid_params,
                    "parameter '" + std::string(key) + "' must be >= " + std::to_string(minimum),
                    json{{"param", std::string(key)}});
    }
    return static_cast<int>(*v);
}

std::vector<double> number_list(const json& j, std::string_view key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_array()) {
        throw Error(ErrorCode::invalid_params, "parameter '" + std::string(key) + "' must be a list of numbers",
                    json{{"param", std::string(key)}});
    }
    std::vector<double> out;
    for (const auto& v : *it) {
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            throw Error(ErrorCode::invalid_params, "parameter '" + std::string(key) + "' must be a list of numbers",
                        json{{"param", std::string(key)}});
        }
        out.push_back(v.get<double>());
    }
    return out;
}

template <typename T>
T required(const json& j, std::string_view key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        throw Error(ErrorCode::invalid_params, "parameter '" + std::string(key) + "' is required",
                    json{{"param", std::string(key)}});
    }
    return it->get<T>();
}

bool finite(const Point& p) { return std::isfinite(p.x_um) && std::isfinite(p.y_um); }

Channel make_channel(std::vector<std::size_t> shape, std::string units, std::vector<double> data,
                     DType dtype = DType::f64) {
    Channel ch;
    ch.shape = std::move(shape);
    ch.units = std::move(units);
    ch.dtype = dtype;
    ch.data = std::move(data);
    return ch;
}

std::vector<double> flatten(const std::vector<Point>& pts) {
    std::vector<double> out;
    out.reserve(pts.size() * 2);
    for (const auto& p : pts) {
        out.push_back(p.x_um);
        out.push_back(p.y_um);
    }
    return out;
}

double wrap_pi(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);
    return a;
}

}  // namespace

void to_json(json& j, const TipControlRequest& r) {
    j = json{{"x_um", r.x_um}, {"y_um", r.y_um}, {"speed_um_s", r.speed_um_s}};
}

void from_json(const json& j, TipControlRequest& r) {
    reject_unknown_keys(j, {"x_um", "y_um", "speed_um_s"}, "tip_control");
    TipControlRequest out;
    out.x_um = number(j, "x_um");
    out.y_um = number(j, "y_um");
    if (auto v = optional_number(j, "speed_um_s")) out.speed_um_s = *v;
    r = out;
}

void to_json(json& j, const TipBiasRequest& r) { j = json{{"voltage_v", r.voltage_v}}; }

void from_json(const json& j, TipBiasRequest& r) {
    reject_unknown_keys(j, {"voltage_v"}, "set_tip_bias");
    r.voltage_v = number(j, "voltage_v");
}

void to_json(json& j, const LineScanRequest& r) {
    j = json{{"start", r.start}, {"end", r.end}, {"num_points", r.num_points}};
}

void from_json(const json& j, LineScanRequest& r) {
    reject_unknown_keys(j, {"start", "end", "num_points"}, "do_line_scan");
    LineScanRequest out;
    out.start = required<Point>(j, "start");
    out.end = required<Point>(j, "end");
    out.num_points = positive_int(j, "num_points", out.num_points, 2);
    r = out;
}

void to_json(json& j, const RasterScanRequest& r) { j = json{{"region", r.region}, {"ny", r.ny}, {"nx", r.nx}}; }

void from_json(const json& j, RasterScanRequest& r) {
    reject_unknown_keys(j, {"region", "ny", "nx"}, "raster_scan");
    RasterScanRequest out;
    out.region = required<Region>(j, "region");
    out.ny = positive_int(j, "ny", out.ny, 2);
    out.nx = positive_int(j, "nx", out.nx, 2);
    r = out;
}

void to_json(json& j, const BepsGridRequest& r) {
    j = json{{"region", r.region}, {"ny", r.ny}, {"nx", r.nx}, {"bias_waveform", r.bias_waveform}};
}

void from_json(const json& j, BepsGridRequest& r) {
    reject_unknown_keys(j, {"region", "ny", "nx", "bias_waveform"}, "do_beps_grid");
    BepsGridRequest out;
    out.region = required<Region>(j, "region");
    out.ny = positive_int(j, "ny", out.ny, 1);
    out.nx = positive_int(j, "nx", out.nx, 1);
    out.bias_waveform = number_list(j, "bias_waveform");
    r = out;
}

void to_json(json& j, const BepsSpecificRequest& r) {
    j = json{{"locations", r.locations}, {"bias_waveform", r.bias_waveform}};
}

void from_json(const json& j, BepsSpecificRequest& r) {
    reject_unknown_keys(j, {"locations", "bias_waveform"}, "do_beps_specific");
    BepsSpecificRequest out;
    auto it = j.find("locations");
    if (it == j.end() || !it->is_array()) {
        throw Error(ErrorCode::invalid_params, "parameter 'locations' must be a list of [x_um, y_um]",
                    json{{"param", "locations"}});
    }
    for (const auto& p : *it) out.locations.push_back(p.get<Point>());
    out.bias_waveform = number_list(j, "bias_waveform");
    r = out;
}

void to_json(json& j, const PulseRequest& r) { j = json{{"voltage_v", r.voltage_v}, {"duration_ms", r.duration_ms}}; }

void from_json(const json& j, PulseRequest& r) {
    reject_unknown_keys(j, {"voltage_v", "duration_ms"}, "apply_pulse");
    PulseRequest out;
    out.voltage_v = number(j, "voltage_v");
    if (auto v = optional_number(j, "duration_ms")) out.duration_ms = *v;
    r = out;
}

void to_json(json& j, const TrajectoryScanRequest& r) {
    j = json{{"trajectory", r.trajectory}, {"measure_every", r.measure_every}};
}

void from_json(const json& j, TrajectoryScanRequest& r) {
    reject_unknown_keys(j, {"trajectory", "measure_every"}, "do_trajectory_scan");
    TrajectoryScanRequest out;
    out.trajectory = required<ScanTrajectory>(j, "trajectory");
    out.measure_every = positive_int(j, "measure_every", out.measure_every, 1);
    r = out;
}

void to_json(json& j, const MoveReport& r) { j = json{{"duration_s", r.duration_s}, {"position", r.position}}; }

std::vector<double> triangle_bias(double peak_v, int steps_per_quarter) {
    if (steps_per_quarter < 1) throw Error(ErrorCode::invalid_params, "steps_per_quarter must be >= 1");
    std::vector<double> out;
    const int n = 4 * steps_per_quarter;
    for (int i = 1; i <= n; ++i) {
        const double phase = static_cast<double>(i) / steps_per_quarter;  // quarter cycles elapsed
        double v;
        if (phase <= 1.0) v = phase;
        else if (phase <= 3.0) v = 2.0 - phase;
        else v = phase - 4.0;
        out.push_back(peak_v * v);
    }
    return out;
}

const std::vector<std::string>& instrument_ops() {
    static const std::vector<std::string> ops = {
        "define_be_parms",  "tip_control", "set_tip_bias", "set_io_config",     "do_line_scan",
        "raster_scan",      "do_beps_grid", "do_beps_specific", "apply_pulse", "do_trajectory_scan",
    };
    return ops;
}

bool ControlApi::is_instrument_op(const std::string& op) {
    const auto& ops = instrument_ops();
    return std::find(ops.begin(), ops.end(), op) != ops.end();
}

ControlApi::ControlApi(VirtualInstrument instrument, std::shared_ptr<store::DatasetRepository> repo,
                       std::shared_ptr<log::ExperimentLog> log)
    : instrument_(std::move(instrument)), repo_(std::move(repo)), log_(std::move(log)) {
    if (!repo_) repo_ = std::make_shared<store::MemoryRepository>();
    if (!log_) log_ = std::make_shared<log::ExperimentLog>();
}

Region ControlApi::window() const {
    const double e = instrument_.sample().config.extent_um;
    return {0.0, 0.0, e, e};
}

template <typename Fn>
auto ControlApi::logged(const std::string& op, const json& params, Fn&& fn) {
    last_dataset_.reset();
    std::optional<decltype(fn())> result;
    try {
        result.emplace(fn());
    } catch (const Error& e) {
        log_->append(op, params, "error:" + std::string(to_string(e.code())), std::nullopt,
                     instrument_.clock().now_iso());
        throw;
    }
    log_->append(op, params, "ok", last_dataset_, instrument_.clock().now_iso());
    return std::move(*result);
}

const BEParams& ControlApi::require_be() const {
    if (!instrument_.state().be) {
        throw Error(ErrorCode::be_undefined, "band-excitation parameters are not defined; call define_be_parms first");
    }
    return *instrument_.state().be;
}

json ControlApi::base_metadata(const std::string& op, const json& params, const std::string& started) const {
    return json{{"op", op},
                {"params", params},
                {"be", instrument_.state().be ? json(*instrument_.state().be) : json(nullptr)},
                {"seed", instrument_.seed()},
                {"started_at", started},
                {"aborted", false}};
}

std::string ControlApi::store_dataset(Dataset& ds) {
    ds.metadata["finished_at"] = instrument_.clock().now_iso();
    ds.id = repo_->put(ds);
    last_dataset_ = ds.id;
    return ds.id;
}

BEParams ControlApi::define_be_parms(const BEParamsPartial& partial) {
    const BEParams be = partial.resolve();
    return logged("define_be_parms", json(be), [&] {
        validate(be);
        instrument_.state().be = be;
        return be;
    });
}

MoveReport ControlApi::tip_control(const TipControlRequest& r) {
    return logged("tip_control", json(r), [&] {
        if (!(r.speed_um_s > 0.0) || !std::isfinite(r.speed_um_s)) {
            throw Error(ErrorCode::invalid_value, "speed_um_s must be > 0", json{{"param", "speed_um_s"}});
        }
        instrument_.pixel_at(r.x_um, r.y_um);
        auto& st = instrument_.state();
        MoveReport rep;
        rep.duration_s = std::hypot(r.x_um - st.tip_x_um, r.y_um - st.tip_y_um) / r.speed_um_s;
        rep.position = {r.x_um, r.y_um};
        st.tip_x_um = r.x_um;
        st.tip_y_um = r.y_um;
        instrument_.clock().advance_seconds(rep.duration_s);
        return rep;
    });
}

double ControlApi::set_tip_bias(const TipBiasRequest& r) {
    return logged("set_tip_bias", json(r), [&] {
        const double range = instrument_.state().io.output_range_v;
        if (!std::isfinite(r.voltage_v) || std::abs(r.voltage_v) > range) {
            throw Error(ErrorCode::range_exceeded,
                        "tip bias " + std::to_string(r.voltage_v) + " V exceeds output range +/-" +
                            std::to_string(range) + " V",
                        json{{"volts", r.voltage_v}, {"output_range_v", range}});
        }
        instrument_.state().tip_bias_v = r.voltage_v;
        return r.voltage_v;
    });
}

IOConfig ControlApi::set_io_config(const IOConfig& io) {
    return logged("set_io_config", json(io), [&] {
        validate(io);
        instrument_.state().io = io;
        return io;
    });
}

Dataset ControlApi::do_line_scan(const LineScanRequest& r) {
    const json params = r;
    return logged("do_line_scan", params, [&] {
        const BEParams be = require_be();
        if (r.num_points < 2) throw Error(ErrorCode::invalid_params, "num_points must be >= 2");
        if (!finite(r.start) || !finite(r.end)) throw Error(ErrorCode::invalid_params, "endpoints must be finite");
        instrument_.pixel_at(r.start.x_um, r.start.y_um);
        instrument_.pixel_at(r.end.x_um, r.end.y_um);
        take_cancel();

        const std::string started = instrument_.clock().now_iso();
        const auto n = static_cast<std::size_t>(r.num_points);
        const auto bins = static_cast<std::size_t>(be.num_bins);
        std::vector<Point> positions;
        std::vector<double> amp, phase;
        bool aborted = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (take_cancel()) {
                aborted = true;
                break;
            }
            const double t = static_cast<double>(i) / static_cast<double>(n - 1);
            const Point p = i + 1 == n ? r.end
                                       : Point{r.start.x_um + t * (r.end.x_um - r.start.x_um),
                                               r.start.y_um + t * (r.end.y_um - r.start.y_um)};
            auto& st = instrument_.state();
            st.tip_x_um = p.x_um;
            st.tip_y_um = p.y_um;
            const BESpectrum s = instrument_.measure_be_spectrum(p.x_um, p.y_um, be);
            positions.push_back(p);
            amp.insert(amp.end(), s.amplitude.begin(), s.amplitude.end());
            phase.insert(phase.end(), s.phase_rad.begin(), s.phase_rad.end());
        }
        const std::size_t m = positions.size();
        Dataset ds;
        ds.name = "do_line_scan";
        ds.metadata = base_metadata("do_line_scan", params, started);
        ds.metadata["aborted"] = aborted;
        ds.channels[channels::positions] = make_channel({m, 2}, "um", flatten(positions));
        ds.channels[channels::raw_spectra] = make_channel({m, bins}, "a.u.", std::move(amp));
        ds.channels[channels::raw_phase] = make_channel({m, bins}, "rad", std::move(phase));
        ds.channels[channels::frequency] = make_channel({bins}, "Hz", frequency_axis(be));
        store_dataset(ds);
        return ds;
    });
}

Dataset ControlApi::raster_scan(const RasterScanRequest& r) {
    const json params = r;
    return logged("raster_scan", params, [&] {
        const BEParams be = require_be();
        const Region& g = r.region;
        if (r.ny < 2 || r.nx < 2) throw Error(ErrorCode::invalid_params, "ny and nx must be >= 2");
        if (!(g.x0 < g.x1 && g.y0 < g.y1) || !instrument_.inside(g.x0, g.y0) || !instrument_.inside(g.x1, g.y1)) {
            throw Error(ErrorCode::invalid_region, "raster region must be a non-empty rectangle inside the window",
                        json{{"region", g}});
        }
        take_cancel();

        const std::string started = instrument_.clock().now_iso();
        const auto ny = static_cast<std::size_t>(r.ny);
        const auto nx = static_cast<std::size_t>(r.nx);
        const auto bins = static_cast<std::size_t>(be.num_bins);
        std::vector<double> topo(ny * nx), amp(ny * nx), phase(ny * nx), f0(ny * nx), q(ny * nx);
        std::vector<double> raw(ny * nx * bins), raw_phase(ny * nx * bins);
        std::size_t rows_done = 0;
        bool aborted = false;
        for (std::size_t row = 0; row < ny && !aborted; ++row) {
            const double y = g.y0 + static_cast<double>(row) * g.height() / static_cast<double>(ny - 1);
            for (std::size_t k = 0; k < nx; ++k) {
                if (take_cancel()) {
                    aborted = true;
                    break;
                }
                const std::size_t col = row % 2 == 0 ? k : nx - 1 - k;  // serpentine
                const double x = g.x0 + static_cast<double>(col) * g.width() / static_cast<double>(nx - 1);
                auto& st = instrument_.state();
                st.tip_x_um = x;
                st.tip_y_um = y;
                const BESpectrum s = instrument_.measure_be_spectrum(x, y, be);
                const std::size_t idx = row * nx + col;
                topo[idx] = instrument_.topography_at(x, y);
                std::copy(s.amplitude.begin(), s.amplitude.end(), raw.begin() + static_cast<std::ptrdiff_t>(idx * bins));
                std::copy(s.phase_rad.begin(), s.phase_rad.end(),
                          raw_phase.begin() + static_cast<std::ptrdiff_t>(idx * bins));
                try {
                    const auto fit = analysis::fit_sho(s);
                    amp[idx] = fit.params.a0;
                    phase[idx] = fit.params.phase_offset_rad;
                    f0[idx] = fit.params.f0_hz;
                    q[idx] = fit.params.q_factor;
                } catch (const Error&) {
                    // Zero drive or a flat response: no resonance to fit.
                    amp[idx] = 0.0;
                    phase[idx] = wrap_pi(s.phase_rad[bins / 2]);
                    f0[idx] = 0.0;
                    q[idx] = 0.0;
                }
            }
            if (aborted) break;
            ++rows_done;
            json event{{"op", "raster_scan"},
                       {"line", row},
                       {"lines", ny},
                       {"cols", nx},
                       {"rows",
                        {{channels::topography, std::vector<double>(topo.begin() + row * nx, topo.begin() + (row + 1) * nx)},
                         {channels::amplitude, std::vector<double>(amp.begin() + row * nx, amp.begin() + (row + 1) * nx)},
                         {channels::phase, std::vector<double>(phase.begin() + row * nx, phase.begin() + (row + 1) * nx)}}}};
            emit("scan_line", event);
        }
        const std::size_t m = rows_done;
        auto keep = [&](std::vector<double>& v, std::size_t per_pixel) {
            v.resize(m * nx * per_pixel);
            return std::move(v);
        };
        Dataset ds;
        ds.name = "raster_scan";
        ds.metadata = base_metadata("raster_scan", params, started);
        ds.metadata["aborted"] = aborted;
        ds.metadata["region"] = g;
        ds.channels[channels::topography] = make_channel({m, nx}, "um", keep(topo, 1));
        ds.channels[channels::amplitude] = make_channel({m, nx}, "a.u.", keep(amp, 1));
        ds.channels[channels::phase] = make_channel({m, nx}, "rad", keep(phase, 1));
        ds.channels[channels::resonance] = make_channel({m, nx}, "Hz", keep(f0, 1));
        ds.channels[channels::q_factor] = make_channel({m, nx}, "", keep(q, 1));
        ds.channels[channels::raw_spectra] = make_channel({m, nx, bins}, "a.u.", keep(raw, bins));
        ds.channels[channels::raw_phase] = make_channel({m, nx, bins}, "rad", keep(raw_phase, bins));
        ds.channels[channels::frequency] = make_channel({bins}, "Hz", frequency_axis(be));
        store_dataset(ds);
        return ds;
    });
}

namespace {

void check_bias(const VirtualInstrument& inst, const std::vector<double>& bias) {
    if (bias.empty()) throw Error(ErrorCode::empty_bias, "BEPS bias waveform is empty");
    const double range = inst.state().io.output_range_v;
    for (double v : bias) {
        if (!std::isfinite(v) || std::abs(v) > range) {
            throw Error(ErrorCode::range_exceeded,
                        "bias " + std::to_string(v) + " V exceeds output range +/-" + std::to_string(range) + " V",
                        json{{"volts", v}, {"output_range_v", range}});
        }
    }
}

struct BepsAccumulator {
    std::vector<Point> positions;
    std::vector<double> amp, phase, states;

    void add(const Point& p, const instrument::BepsLoop& loop) {
        positions.push_back(p);
        for (const auto& s : loop.spectra) {
            amp.insert(amp.end(), s.amplitude.begin(), s.amplitude.end());
            phase.insert(phase.end(), s.phase_rad.begin(), s.phase_rad.end());
        }
        for (auto st : loop.states) states.push_back(st);
    }
};

}  // namespace

Dataset ControlApi::do_beps_grid(const BepsGridRequest& r) {
    const json params = r;
    return logged("do_beps_grid", params, [&] {
        const BEParams be = require_be();
        const Region& g = r.region;
        if (r.ny < 1 || r.nx < 1) throw Error(ErrorCode::invalid_params, "ny and nx must be >= 1");
        if (!(g.x0 <= g.x1 && g.y0 <= g.y1)) {
            throw Error(ErrorCode::invalid_region, "grid region corners are out of order", json{{"region", g}});
        }
        const auto ny = static_cast<std::size_t>(r.ny);
        const auto nx = static_cast<std::size_t>(r.nx);
        auto coord = [](double a, double b, std::size_t i, std::size_t n) {
            return n == 1 ? (a + b) / 2.0 : a + static_cast<double>(i) * (b - a) / static_cast<double>(n - 1);
        };
        std::vector<Point> grid;
        for (std::size_t row = 0; row < ny; ++row) {
            for (std::size_t col = 0; col < nx; ++col) {
                grid.push_back({coord(g.x0, g.x1, col, nx), coord(g.y0, g.y1, row, ny)});
            }
        }
        for (const auto& p : grid) instrument_.pixel_at(p.x_um, p.y_um);
        check_bias(instrument_, r.bias_waveform);
        take_cancel();

        const std::string started = instrument_.clock().now_iso();
        const std::size_t steps = r.bias_waveform.size();
        const auto bins = static_cast<std::size_t>(be.num_bins);
        BepsAccumulator acc;
        std::size_t rows_done = 0;
        bool aborted = false;
        for (std::size_t row = 0; row < ny && !aborted; ++row) {
            BepsAccumulator line;
            for (std::size_t col = 0; col < nx; ++col) {
                if (take_cancel()) {
                    aborted = true;
                    break;
                }
                const Point p = grid[row * nx + col];
                auto& st = instrument_.state();
                st.tip_x_um = p.x_um;
                st.tip_y_um = p.y_um;
                line.add(p, instrument_.beps_at(p.x_um, p.y_um, r.bias_waveform, be));
            }
            if (aborted) break;
            ++rows_done;
            acc.positions.insert(acc.positions.end(), line.positions.begin(), line.positions.end());
            acc.amp.insert(acc.amp.end(), line.amp.begin(), line.amp.end());
            acc.phase.insert(acc.phase.end(), line.phase.begin(), line.phase.end());
            acc.states.insert(acc.states.end(), line.states.begin(), line.states.end());
            emit("scan_line", json{{"op", "do_beps_grid"}, {"line", row}, {"lines", ny}, {"cols", nx},
                                   {"rows", {{"polarization_state", line.states}}}});
        }
        const std::size_t m = rows_done;
        Dataset ds;
        ds.name = "do_beps_grid";
        ds.metadata = base_metadata("do_beps_grid", params, started);
        ds.metadata["aborted"] = aborted;
        ds.metadata["region"] = g;
        ds.channels[channels::positions] = make_channel({m * nx, 2}, "um", flatten(acc.positions));
        ds.channels[channels::raw_spectra] = make_channel({m, nx, steps, bins}, "a.u.", std::move(acc.amp));
        ds.channels[channels::raw_phase] = make_channel({m, nx, steps, bins}, "rad", std::move(acc.phase));
        ds.channels["polarization_state"] = make_channel({m, nx, steps}, "", std::move(acc.states), DType::i32);
        ds.channels[channels::bias] = make_channel({steps}, "V", r.bias_waveform);
        ds.channels[channels::frequency] = make_channel({bins}, "Hz", frequency_axis(be));
        store_dataset(ds);
        return ds;
    });
}

Dataset ControlApi::do_beps_specific(const BepsSpecificRequest& r) {
    const json params = r;
    return logged("do_beps_specific", params, [&] {
        const BEParams be = require_be();
        if (r.locations.empty()) throw Error(ErrorCode::empty_locations, "no BEPS locations given");
        for (const auto& p : r.locations) instrument_.pixel_at(p.x_um, p.y_um);
        check_bias(instrument_, r.bias_waveform);
        take_cancel();

        const std::string started = instrument_.clock().now_iso();
        const std::size_t steps = r.bias_waveform.size();
        const auto bins = static_cast<std::size_t>(be.num_bins);
        BepsAccumulator acc;
        bool aborted = false;
        for (const auto& p : r.locations) {
            if (take_cancel()) {
                aborted = true;
                break;
            }
            auto& st = instrument_.state();
            st.tip_x_um = p.x_um;
            st.tip_y_um = p.y_um;
            acc.add(p, instrument_.beps_at(p.x_um, p.y_um, r.bias_waveform, be));
        }
        const std::size_t m = acc.positions.size();
        Dataset ds;
        ds.name = "do_beps_specific";
        ds.metadata = base_metadata("do_beps_specific", params, started);
        ds.metadata["aborted"] = aborted;
        ds.channels[channels::positions] = make_channel({m, 2}, "um", flatten(acc.positions));
        ds.channels[channels::raw_spectra] = make_channel({m, steps, bins}, "a.u.", std::move(acc.amp));
        ds.channels[channels::raw_phase] = make_channel({m, steps, bins}, "rad", std::move(acc.phase));
        ds.channels["polarization_state"] = make_channel({m, steps}, "", std::move(acc.states), DType::i32);
        ds.channels[channels::bias] = make_channel({steps}, "V", r.bias_waveform);
        ds.channels[channels::frequency] = make_channel({bins}, "Hz", frequency_axis(be));
        store_dataset(ds);
        return ds;
    });
}

instrument::SwitchReport ControlApi::apply_pulse(const PulseRequest& r) {
    return logged("apply_pulse", json(r), [&] {
        const auto& st = instrument_.state();
        return instrument_.apply_dc_pulse_at(st.tip_x_um, st.tip_y_um, r.voltage_v, r.duration_ms);
    });
}

Dataset ControlApi::do_trajectory_scan(const TrajectoryScanRequest& r) {
    const json params = r;
    return logged("do_trajectory_scan", params, [&] {
        const BEParams be = require_be();
        if (r.measure_every < 1) throw Error(ErrorCode::invalid_params, "measure_every must be >= 1");
        const auto& t = r.trajectory;
        if (t.samples.size() < 2 || !(t.sample_rate_hz > 0.0)) {
            throw Error(ErrorCode::trajectory_invalid, "trajectory needs >= 2 samples and a positive sample rate");
        }
        const auto violations =
            trajectory::validate_trajectory(t, window(), instrument_.config().max_scan_speed_um_s);
        if (!violations.empty()) {
            throw Error(ErrorCode::trajectory_invalid,
                        std::to_string(violations.size()) + " trajectory violation(s), first at sample " +
                            std::to_string(violations.front().index),
                        json{{"violations", violations}});
        }
        take_cancel();

        const std::string started = instrument_.clock().now_iso();
        const auto bins = static_cast<std::size_t>(be.num_bins);
        const double bias = instrument_.state().tip_bias_v;
        const bool writing = std::abs(bias) > instrument_.sample().config.coercive_v;
        const double period_ms = 1e3 / t.sample_rate_hz;
        std::vector<Point> positions;
        std::vector<double> amp, phase;
        std::size_t flipped = 0;
        bool aborted = false;
        for (std::size_t i = 0; i < t.samples.size(); ++i) {
            if (take_cancel()) {
                aborted = true;
                break;
            }
            const Point& p = t.samples[i];
            auto& st = instrument_.state();
            st.tip_x_um = p.x_um;
            st.tip_y_um = p.y_um;
            // A biased tip above the coercive voltage writes domains along its path.
            if (writing) {
                flipped += instrument_.apply_dc_pulse_at(p.x_um, p.y_um, bias, period_ms).pixels_flipped;
            } else {
                instrument_.clock().advance_seconds(period_ms * 1e-3);
            }
            if (i % static_cast<std::size_t>(r.measure_every) != 0) continue;
            const BESpectrum s = instrument_.measure_be_spectrum(p.x_um, p.y_um, be);
            positions.push_back(p);
            amp.insert(amp.end(), s.amplitude.begin(), s.amplitude.end());
            phase.insert(phase.end(), s.phase_rad.begin(), s.phase_rad.end());
        }
        const std::size_t m = positions.size();
        Dataset ds;
        ds.name = "do_trajectory_scan";
        ds.metadata = base_metadata("do_trajectory_scan", params, started);
        ds.metadata["aborted"] = aborted;
        ds.metadata["tip_bias_v"] = bias;
        ds.metadata["pixels_flipped"] = flipped;
        ds.channels[channels::positions] = make_channel({m, 2}, "um", flatten(positions));
        ds.channels[channels::raw_spectra] = make_channel({m, bins}, "a.u.", std::move(amp));
        ds.channels[channels::raw_phase] = make_channel({m, bins}, "rad", std::move(phase));
        ds.channels[channels::frequency] = make_channel({bins}, "Hz", frequency_axis(be));
        store_dataset(ds);
        return ds;
    });
}

namespace {

json acquisition_result(const Dataset& ds, const std::string& main_channel) {
    return json{{"dataset", ds.id}, {"shape", ds.channel(main_channel).shape}, {"aborted", ds.aborted()}};
}

}  // namespace

json ControlApi::invoke(const std::string& op, const json& params) {
    if (!is_instrument_op(op)) {
        throw Error(ErrorCode::unknown_op, "unknown instrument operation '" + op + "'", json{{"op", op}});
    }
    // Parse failures still count as an attempted call and are logged with the raw parameters.
    auto parse = [&]<typename Req>(std::type_identity<Req>) {
        try {
            if (!params.is_object()) throw Error(ErrorCode::invalid_params, op + ": params must be an object");
            return params.get<Req>();
        } catch (const Error& e) {
            log_->append(op, params.is_object() ? params : json::object(),
                         "error:" + std::string(to_string(e.code())), std::nullopt, instrument_.clock().now_iso());
            throw;
        } catch (const json::exception& e) {
            log_->append(op, params.is_object() ? params : json::object(), "error:invalid_params", std::nullopt,
                         instrument_.clock().now_iso());
            throw Error(ErrorCode::invalid_params, op + ": " + e.what());
        }
    };
    if (op == "define_be_parms") return define_be_parms(parse(std::type_identity<BEParamsPartial>{}));
    if (op == "tip_control") return tip_control(parse(std::type_identity<TipControlRequest>{}));
    if (op == "set_tip_bias") {
        return json{{"tip_bias_v", set_tip_bias(parse(std::type_identity<TipBiasRequest>{}))}};
    }
    if (op == "set_io_config") return set_io_config(parse(std::type_identity<IOConfig>{}));
    if (op == "do_line_scan") {
        return acquisition_result(do_line_scan(parse(std::type_identity<LineScanRequest>{})), channels::raw_spectra);
    }
    if (op == "raster_scan") {
        return acquisition_result(raster_scan(parse(std::type_identity<RasterScanRequest>{})), channels::phase);
    }
    if (op == "do_beps_grid") {
        return acquisition_result(do_beps_grid(parse(std::type_identity<BepsGridRequest>{})), channels::raw_spectra);
    }
    if (op == "do_beps_specific") {
        return acquisition_result(do_beps_specific(parse(std::type_identity<BepsSpecificRequest>{})),
                                  channels::raw_spectra);
    }
    if (op == "apply_pulse") return apply_pulse(parse(std::type_identity<PulseRequest>{}));
    return acquisition_result(do_trajectory_scan(parse(std::type_identity<TrajectoryScanRequest>{})),
                              channels::raw_spectra);
}

}  // namespace aescope::control
