#pragma once

#include "aescope/core/dataset.hpp"
#include "aescope/instrument/instrument.hpp"
#include "aescope/log/log.hpp"
#include "aescope/store/store.hpp"
#include "aescope/trajectory/trajectory.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace aescope::control {

using instrument::VirtualInstrument;
using trajectory::ScanTrajectory;

// Request types. Each has a strict JSON form; to_json always emits every field,
// which is what lands in the log as the resolved parameter set.

struct TipControlRequest {
    double x_um = 0.0;
    double y_um = 0.0;
    double speed_um_s = 10.0;
};

struct TipBiasRequest {
    double voltage_v = 0.0;
};

struct LineScanRequest {
    Point start;
    Point end;
    int num_points = 64;
};

struct RasterScanRequest {
    Region region;
    int ny = 64;
    int nx = 64;
};

struct BepsGridRequest {
    Region region;
    int ny = 2;
    int nx = 2;
    std::vector<double> bias_waveform;
};

struct BepsSpecificRequest {
    std::vector<Point> locations;
    std::vector<double> bias_waveform;
};

struct PulseRequest {
    double voltage_v = 0.0;
    double duration_ms = 10.0;
};

struct TrajectoryScanRequest {
    ScanTrajectory trajectory;
    int measure_every = 1;
};

struct MoveReport {
    double duration_s = 0.0;
    Point position;
};

void to_json(json& j, const TipControlRequest& r);
void from_json(const json& j, TipControlRequest& r);
void to_json(json& j, const TipBiasRequest& r);
void from_json(const json& j, TipBiasRequest& r);
void to_json(json& j, const LineScanRequest& r);
void from_json(const json& j, LineScanRequest& r);
void to_json(json& j, const RasterScanRequest& r);
void from_json(const json& j, RasterScanRequest& r);
void to_json(json& j, const BepsGridRequest& r);
void from_json(const json& j, BepsGridRequest& r);
void to_json(json& j, const BepsSpecificRequest& r);
void from_json(const json& j, BepsSpecificRequest& r);
void to_json(json& j, const PulseRequest& r);
void from_json(const json& j, PulseRequest& r);
void to_json(json& j, const TrajectoryScanRequest& r);
void from_json(const json& j, TrajectoryScanRequest& r);
void to_json(json& j, const MoveReport& r);

/// Progress notifications: `scan_line` (line index and row data) during long acquisitions.
using EventSink = std::function<void(const std::string& event, const json& data)>;

/// Triangle bias sweep 0 -> +peak -> -peak -> 0 with `steps_per_quarter` steps per quarter cycle.
/// The starting 0 V is implied; the result holds 4 * steps_per_quarter values ending at 0.
std::vector<double> triangle_bias(double peak_v, int steps_per_quarter);

/// Names of every instrument operation, in registry order.
const std::vector<std::string>& instrument_ops();

/// The operation surface over one virtual instrument. Every call emits exactly one
/// log record (error status included) before returning; acquisitions put their
/// dataset in the repository and return it with its id set. Not thread-safe on its
/// own: serialize calls through InstrumentActor.
class ControlApi {
public:
    ControlApi(VirtualInstrument instrument, std::shared_ptr<store::DatasetRepository> repo,
               std::shared_ptr<log::ExperimentLog> log);

    BEParams define_be_parms(const BEParamsPartial& partial);
    MoveReport tip_control(const TipControlRequest& r);
    double set_tip_bias(const TipBiasRequest& r);
    IOConfig set_io_config(const IOConfig& io);
    Dataset do_line_scan(const LineScanRequest& r);
    Dataset raster_scan(const RasterScanRequest& r);
    Dataset do_beps_grid(const BepsGridRequest& r);
    Dataset do_beps_specific(const BepsSpecificRequest& r);
    instrument::SwitchReport apply_pulse(const PulseRequest& r);
    Dataset do_trajectory_scan(const TrajectoryScanRequest& r);

    /// JSON entry point used by the workflow engine and the gateway. Parameter
    /// parse failures are logged as error records too. Acquisitions return
    /// {"dataset": id, "shape": [...], "aborted": bool}.
    json invoke(const std::string& op, const json& params);
    static bool is_instrument_op(const std::string& op);

    /// Asks a running acquisition to stop after the current pixel. Thread-safe.
    void request_cancel() { cancel_.store(true); }
    void set_event_sink(EventSink sink) { sink_ = std::move(sink); }

    const VirtualInstrument& instrument() const { return instrument_; }
    VirtualInstrument& instrument() { return instrument_; }
    store::DatasetRepository& repository() const { return *repo_; }
    std::shared_ptr<store::DatasetRepository> repository_ptr() const { return repo_; }
    log::ExperimentLog& experiment_log() const { return *log_; }
    std::shared_ptr<log::ExperimentLog> log_ptr() const { return log_; }
    Region window() const;

private:
    template <typename Fn>
    auto logged(const std::string& op, const json& params, Fn&& fn);

    const BEParams& require_be() const;
    json base_metadata(const std::string& op, const json& params, const std::string& started) const;
    std::string store_dataset(Dataset& ds);
    bool take_cancel() { return cancel_.exchange(false); }
    void emit(const std::string& event, const json& data) const {
        if (sink_) sink_(event, data);
    }

    VirtualInstrument instrument_;
    std::shared_ptr<store::DatasetRepository> repo_;
    std::shared_ptr<log::ExperimentLog> log_;
    EventSink sink_;
    std::atomic<bool> cancel_{false};
    std::optional<std::string> last_dataset_;
};

}  // namespace aescope::control
