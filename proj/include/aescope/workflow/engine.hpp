#pragma once

#include "aescope/analysis/canny.hpp"
#include "aescope/workflow/plan.hpp"

#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace aescope::workflow {

struct StepResult {
    std::string id;
    std::string op;
    std::string status = "skipped";  // ok | failed | skipped
    json params = json::object();    // resolved parameters as passed to the tool
    json outputs = json::object();
    std::string error_code;
    std::string error_message;
};

struct RunReport {
    std::vector<StepResult> steps;
    std::vector<std::string> datasets;
    std::vector<log::LogRecord> records;  // records appended during the run
    bool ok = true;
    bool cancelled = false;
    /// Set when a step aborted the run: {code: "step_failed", step_id, cause, message}.
    json failure;
};

void to_json(json& j, const StepResult& s);
void to_json(json& j, const RunReport& r);

using StepCallback = std::function<void(const StepResult&, std::size_t index, std::size_t total)>;

/// Runs the steps strictly in order against `api`. A failing step aborts the run
/// unless it sets continue_on_error; later steps are reported as skipped. An
/// acquisition that comes back aborted (cancel) ends the run as cancelled, as
/// does `cancel` when it is set before a step starts.
/// Throws Error(invalid_params) with data {diagnostics} when the plan does not validate.
RunReport execute_plan(const WorkflowPlan& plan, control::ControlApi& api,
                       const ToolRegistry& registry = default_registry(), const StepCallback& on_step = {},
                       const std::atomic<bool>* cancel = nullptr);

struct WallStudyParams {
    Region region{4.0, 4.0, 16.0, 16.0};
    int scan_res = 64;
    analysis::CannyParams canny;
    std::vector<double> bias_waveform = control::triangle_bias(8.0, 8);
    double pulse_v = 10.0;
    double pulse_duration_ms = 10.0;
    int max_walls = 8;
    json be = json::object();  // define_be_parms fields; empty means defaults
};

/// Raster scan, wall detection on the phase map, uniform-stride subsample, BEPS at
/// the selected points, a move and pulse per point, then a second raster scan.
/// max_walls = 0 leaves only the BE setup, the scan and the detection.
/// Throws Error(invalid_params).
WorkflowPlan wall_study_plan(const WallStudyParams& p);

/// One step per successful record, parameters verbatim, ids "s<seq>". Error
/// records are skipped; a notice per skipped record goes to `notices` when given.
WorkflowPlan reconstruct_plan(const std::vector<log::LogRecord>& records, std::vector<std::string>* notices = nullptr);

}  // namespace aescope::workflow
