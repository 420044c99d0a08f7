#include "aescope/workflow/engine.hpp"

#include "aescope/core/error.hpp"

#include <cmath>
#include <map>

namespace aescope::workflow {

namespace {

json resolve_params(const Step& s, const std::map<std::string, json, std::less<>>& outputs) {
    json params = s.params;
    for (const auto& [name, b] : s.bindings) {
        auto it = outputs.find(b.step);
        if (it == outputs.end()) {
            throw Error(ErrorCode::binding_error, "'" + name + "' is bound to step '" + b.step + "', which produced no outputs",
                        json{{"param", name}, {"step", b.step}});
        }
        if (!it->second.contains(b.output)) {
            throw Error(ErrorCode::binding_error, "step '" + b.step + "' did not produce output '" + b.output + "'",
                        json{{"param", name}, {"step", b.step}, {"output", b.output}});
        }
        params[name] = it->second[b.output];
    }
    return params;
}

Step make_step(std::string id, std::string op, json params, std::map<std::string, Binding> bindings = {}) {
    Step s;
    s.id = std::move(id);
    s.op = std::move(op);
    s.params = std::move(params);
    s.bindings = std::move(bindings);
    return s;
}

}  // namespace

void to_json(json& j, const StepResult& s) {
    j = json{{"id", s.id}, {"op", s.op}, {"status", s.status}, {"params", s.params}, {"outputs", s.outputs}};
    if (!s.error_code.empty()) j["error"] = json{{"code", s.error_code}, {"message", s.error_message}};
}

void to_json(json& j, const RunReport& r) {
    json records = json::array();
    for (const auto& rec : r.records) {
        records.push_back(json{{"seq", rec.seq},
                               {"ts", rec.ts},
                               {"op", rec.op},
                               {"params", rec.params},
                               {"status", rec.status},
                               {"dataset_ref", rec.dataset_ref ? json(*rec.dataset_ref) : json(nullptr)}});
    }
    j = json{{"ok", r.ok},      {"cancelled", r.cancelled}, {"steps", r.steps},
             {"datasets", r.datasets}, {"records", records}, {"failure", r.failure}};
}

RunReport execute_plan(const WorkflowPlan& plan, control::ControlApi& api, const ToolRegistry& registry,
                       const StepCallback& on_step, const std::atomic<bool>* cancel) {
    ValidateOptions options;
    options.assume_be_defined = api.instrument().state().be.has_value();
    const auto diagnostics = validate_plan(plan, registry, options);
    if (!plan_ok(diagnostics)) {
        throw Error(ErrorCode::invalid_params, "plan '" + plan.name + "' does not validate",
                    json{{"diagnostics", diagnostics}});
    }

    const std::int64_t first_seq = api.experiment_log().last_seq();
    RunReport report;
    for (const auto& s : plan.steps) {
        StepResult r;
        r.id = s.id;
        r.op = s.op;
        r.params = s.params;
        report.steps.push_back(std::move(r));
    }

    std::map<std::string, json, std::less<>> outputs;
    ExecContext ctx{api};
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const Step& s = plan.steps[i];
        StepResult& r = report.steps[i];
        const ToolSpec& tool = *registry.find(s.op);
        if (cancel && cancel->load()) {
            report.cancelled = true;
            break;
        }
        try {
            const json params = resolve_params(s, outputs);
            r.params = with_defaults(tool, params);
            json result = run_tool(tool, ctx, params);
            r.status = "ok";
            if (result.contains("dataset") && result["dataset"].is_string()) {
                report.datasets.push_back(result["dataset"].get<std::string>());
            }
            const bool aborted = result.value("aborted", false);
            r.outputs = result;
            outputs.emplace(s.id, std::move(result));
            if (aborted) report.cancelled = true;
        } catch (const Error& e) {
            r.status = "failed";
            r.error_code = std::string(to_string(e.code()));
            r.error_message = e.what();
            report.ok = false;
            if (!s.continue_on_error) {
                report.failure = json{{"code", "step_failed"},
                                      {"step_id", s.id},
                                      {"cause", r.error_code},
                                      {"message", "step '" + s.id + "' (" + s.op + ") failed: " + e.what()}};
            }
        }
        if (on_step) on_step(r, i, plan.steps.size());
        if (report.cancelled || !report.failure.is_null()) break;
    }

    for (auto& rec : api.experiment_log().records()) {
        if (rec.seq > first_seq) report.records.push_back(std::move(rec));
    }
    if (report.cancelled) report.ok = false;
    return report;
}

WorkflowPlan wall_study_plan(const WallStudyParams& p) {
    const Region& g = p.region;
    if (!(std::isfinite(g.x0) && std::isfinite(g.y0) && std::isfinite(g.x1) && std::isfinite(g.y1)) || g.x1 <= g.x0 ||
        g.y1 <= g.y0) {
        throw Error(ErrorCode::invalid_params, "wall study region must have x1 > x0 and y1 > y0");
    }
    if (p.scan_res < 8 || p.scan_res > 1024) {
        throw Error(ErrorCode::invalid_params, "wall study scan_res must be in [8, 1024]");
    }
    if (p.max_walls < 0 || p.max_walls > 1000) {
        throw Error(ErrorCode::invalid_params, "wall study max_walls must be in [0, 1000]");
    }
    if (p.bias_waveform.empty()) throw Error(ErrorCode::invalid_params, "wall study bias_waveform is empty");
    for (double v : p.bias_waveform) {
        if (!std::isfinite(v)) throw Error(ErrorCode::invalid_params, "wall study bias_waveform has a non-finite value");
    }
    if (!std::isfinite(p.pulse_v) || !std::isfinite(p.pulse_duration_ms) || p.pulse_duration_ms <= 0) {
        throw Error(ErrorCode::invalid_params, "wall study pulse needs a finite voltage and a positive duration");
    }
    if (!p.be.is_object()) throw Error(ErrorCode::invalid_params, "wall study be must be an object");
    analysis::validate(p.canny);

    WorkflowPlan plan;
    plan.name = "wall_study";
    plan.metadata.author = "aescope";
    const json region = g;
    const json scan{{"region", region}, {"ny", p.scan_res}, {"nx", p.scan_res}};

    plan.steps.push_back(make_step("be", "define_be_parms", p.be));
    plan.steps.push_back(make_step("scan", "raster_scan", scan));
    plan.steps.push_back(make_step("walls", "detect_domain_walls",
                                   {{"gaussian_sigma_px", p.canny.gaussian_sigma_px},
                                    {"low_ratio", p.canny.low_ratio},
                                    {"high_ratio", p.canny.high_ratio}},
                                   {{"image", {"scan", "phase"}}}));
    if (p.max_walls == 0) return plan;

    plan.steps.push_back(make_step("targets", "select_wall_points",
                                   {{"region", region}, {"ny", p.scan_res}, {"nx", p.scan_res}, {"max_walls", p.max_walls}},
                                   {{"pixels", {"walls", "coordinates"}}}));
    plan.steps.push_back(make_step("beps", "do_beps_specific", {{"bias_waveform", p.bias_waveform}},
                                   {{"locations", {"targets", "points"}}}));
    for (int k = 0; k < p.max_walls; ++k) {
        const std::string ks = std::to_string(k);
        plan.steps.push_back(make_step("move_" + ks, "tip_control", json::object(),
                                       {{"x_um", {"targets", "x_" + ks}}, {"y_um", {"targets", "y_" + ks}}}));
        plan.steps.push_back(make_step("pulse_" + ks, "apply_pulse",
                                       {{"voltage_v", p.pulse_v}, {"duration_ms", p.pulse_duration_ms}}));
    }
    plan.steps.push_back(make_step("rescan", "raster_scan", scan));
    return plan;
}

WorkflowPlan reconstruct_plan(const std::vector<log::LogRecord>& records, std::vector<std::string>* notices) {
    WorkflowPlan plan;
    plan.name = "replay";
    plan.metadata.source = "log-replay";
    for (const auto& r : records) {
        if (!r.ok()) {
            if (notices) {
                notices->push_back("record " + std::to_string(r.seq) + " (" + r.op + ") was skipped: status " +
                                   r.status);
            }
            continue;
        }
        plan.steps.push_back(make_step("s" + std::to_string(r.seq), r.op, r.params));
    }
    if (!records.empty()) plan.metadata.created_at = records.back().ts;
    return plan;
}

}  // namespace aescope::workflow
