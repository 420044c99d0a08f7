#include "aescope/workflow/plan.hpp"

#include "aescope/core/error.hpp"

#include <algorithm>
#include <set>

namespace aescope::workflow {

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t end = std::min(byte == 0 ? 0 : byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

[[noreturn]] void structure_error(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::syntax_error, "plan field " + path + ": " + what, json{{"path", path}});
}

void check_fields(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& path) {
    for (const auto& [k, v] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            const std::string where = path.empty() ? k : path + "." + k;
            throw Error(ErrorCode::unknown_field, "unknown plan field " + where, json{{"path", where}});
        }
    }
}

std::string string_field(const json& obj, const char* key, const std::string& path, bool required) {
    if (!obj.contains(key)) {
        if (required) structure_error(path + "." + key, "is required");
        return {};
    }
    if (!obj[key].is_string()) structure_error(path + "." + key, "must be a string");
    return obj[key].get<std::string>();
}

Step step_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) structure_error(path, "a step must be an object");
    check_fields(j, {"id", "op", "params", "bindings", "continue_on_error"}, path);
    Step s;
    s.id = string_field(j, "id", path, true);
    s.op = string_field(j, "op", path, true);
    if (s.id.empty()) structure_error(path + ".id", "must be non-empty");
    if (j.contains("params")) {
        if (!j["params"].is_object()) structure_error(path + ".params", "must be an object");
        s.params = j["params"];
    }
    if (j.contains("bindings")) {
        if (!j["bindings"].is_object()) structure_error(path + ".bindings", "must be an object");
        for (const auto& [param, b] : j["bindings"].items()) {
            const std::string bpath = path + ".bindings." + param;
            if (!b.is_object()) structure_error(bpath, "must be {step, output}");
            check_fields(b, {"step", "output"}, bpath);
            s.bindings[param] = Binding{string_field(b, "step", bpath, true), string_field(b, "output", bpath, true)};
        }
    }
    if (j.contains("continue_on_error")) {
        if (!j["continue_on_error"].is_boolean()) structure_error(path + ".continue_on_error", "must be a boolean");
        s.continue_on_error = j["continue_on_error"].get<bool>();
    }
    return s;
}

const std::set<std::string, std::less<>> kSources = {"human", "assistant", "log-replay"};

Diagnostic diag(const std::string& step, const char* code, std::string message, const char* severity = "error") {
    return Diagnostic{step, code, std::move(message), severity};
}

}  // namespace

WorkflowPlan plan_from_json(const json& j) {
    if (!j.is_object()) structure_error("$", "a plan must be an object");
    check_fields(j, {"name", "metadata", "steps"}, "");
    WorkflowPlan plan;
    plan.name = string_field(j, "name", "$", false);
    if (j.contains("metadata")) {
        const json& m = j["metadata"];
        if (!m.is_object()) structure_error("metadata", "must be an object");
        check_fields(m, {"author", "created_at", "source"}, "metadata");
        plan.metadata.author = string_field(m, "author", "metadata", false);
        plan.metadata.created_at = string_field(m, "created_at", "metadata", false);
        if (m.contains("source")) {
            plan.metadata.source = string_field(m, "source", "metadata", true);
            if (!kSources.count(plan.metadata.source)) {
                structure_error("metadata.source", "must be human, assistant or log-replay");
            }
        }
    }
    if (!j.contains("steps")) structure_error("steps", "is required");
    if (!j["steps"].is_array()) structure_error("steps", "must be an array");
    std::set<std::string, std::less<>> seen;
    for (std::size_t i = 0; i < j["steps"].size(); ++i) {
        Step s = step_from_json(j["steps"][i], "steps[" + std::to_string(i) + "]");
        if (!seen.insert(s.id).second) {
            throw Error(ErrorCode::duplicate_id, "duplicate step id '" + s.id + "'", json{{"id", s.id}});
        }
        for (const auto& [param, b] : s.bindings) {
            if (!seen.count(b.step) || b.step == s.id) {
                throw Error(ErrorCode::binding_error,
                            "step '" + s.id + "' binds " + param + " to '" + b.step + "', which is not an earlier step",
                            json{{"step", s.id}, {"ref", b.step}});
            }
        }
        plan.steps.push_back(std::move(s));
    }
    return plan;
}

WorkflowPlan parse_plan(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        throw Error(ErrorCode::syntax_error,
                    "plan is not valid JSON at line " + std::to_string(line) + ", column " + std::to_string(col),
                    json{{"line", line}, {"column", col}});
    }
    return plan_from_json(j);
}

nlohmann::ordered_json plan_to_json(const WorkflowPlan& plan) {
    nlohmann::ordered_json out;
    out["name"] = plan.name;
    out["metadata"] = {{"author", plan.metadata.author},
                       {"created_at", plan.metadata.created_at},
                       {"source", plan.metadata.source}};
    out["steps"] = nlohmann::ordered_json::array();
    for (const auto& s : plan.steps) {
        nlohmann::ordered_json step;
        step["id"] = s.id;
        step["op"] = s.op;
        step["params"] = nlohmann::ordered_json::parse(s.params.dump());
        if (!s.bindings.empty()) {
            nlohmann::ordered_json b = nlohmann::ordered_json::object();
            for (const auto& [param, src] : s.bindings) b[param] = {{"step", src.step}, {"output", src.output}};
            step["bindings"] = b;
        }
        if (s.continue_on_error) step["continue_on_error"] = true;
        out["steps"].push_back(std::move(step));
    }
    return out;
}

std::string serialize_plan(const WorkflowPlan& plan) { return plan_to_json(plan).dump(2) + "\n"; }

void to_json(json& j, const Diagnostic& d) {
    j = json{{"step_id", d.step_id}, {"code", d.code}, {"message", d.message}, {"severity", d.severity}};
}

std::vector<Diagnostic> validate_plan(const WorkflowPlan& plan, const ToolRegistry& registry,
                                      const ValidateOptions& options) {
    std::vector<Diagnostic> out;
    std::map<std::string, const ToolSpec*, std::less<>> earlier;  // id -> tool (null for unknown ops)
    bool be_defined = options.assume_be_defined;
    bool tip_moved = false;

    for (const auto& s : plan.steps) {
        if (earlier.count(s.id)) out.push_back(diag(s.id, "duplicate-id", "step id '" + s.id + "' is used twice"));
        const ToolSpec* tool = registry.find(s.op);
        if (!tool) {
            out.push_back(diag(s.id, "unknown-op", "'" + s.op + "' is not a registered operation"));
            earlier[s.id] = nullptr;
            continue;
        }
        if (!s.params.is_object()) {
            out.push_back(diag(s.id, "type-mismatch", "params must be an object"));
            earlier[s.id] = tool;
            continue;
        }

        for (const auto& [name, value] : s.params.items()) {
            const ParamSpec* ps = tool->param(name);
            if (!ps) {
                out.push_back(diag(s.id, "unknown-parameter", s.op + " has no parameter '" + name + "'"));
                continue;
            }
            if (s.bindings.count(name)) {
                out.push_back(diag(s.id, "binding-conflict", "'" + name + "' is both given and bound"));
            }
            if (auto why = check_type(ps->type, value)) {
                out.push_back(diag(s.id, "type-mismatch", "'" + name + "' " + *why));
            } else if (!ps->choices.empty() &&
                       std::find(ps->choices.begin(), ps->choices.end(), value.get<std::string>()) == ps->choices.end()) {
                out.push_back(diag(s.id, "type-mismatch", "'" + name + "' has an unsupported value"));
            }
        }

        for (const auto& [name, b] : s.bindings) {
            const ParamSpec* ps = tool->param(name);
            if (!ps) {
                out.push_back(diag(s.id, "unknown-parameter", s.op + " has no parameter '" + name + "' to bind"));
                continue;
            }
            auto src = earlier.find(b.step);
            if (src == earlier.end()) {
                out.push_back(diag(s.id, "binding-error", "'" + name + "' is bound to '" + b.step +
                                                              "', which is not an earlier step"));
                continue;
            }
            if (!src->second) continue;  // already reported as unknown-op
            const OutputSpec* os = src->second->output(b.output);
            if (!os) {
                out.push_back(diag(s.id, "binding-error",
                                   "step '" + b.step + "' (" + src->second->name + ") has no output '" + b.output + "'"));
                continue;
            }
            if (!assignable(os->type, ps->type)) {
                out.push_back(diag(s.id, "type-mismatch",
                                   "'" + name + "' expects " + std::string(to_string(ps->type)) + " but " + b.step +
                                       "." + b.output + " is " + std::string(to_string(os->type))));
            }
        }

        for (const auto& ps : tool->params) {
            if (ps.required && !s.params.contains(ps.name) && !s.bindings.count(ps.name)) {
                out.push_back(diag(s.id, "missing-parameter", s.op + " needs '" + ps.name + "'"));
            }
        }

        if (tool->requires_be && !be_defined) {
            out.push_back(diag(s.id, "ordering-violation", s.op + " needs an earlier define_be_parms step"));
        }
        if (s.op == "apply_pulse" && !tip_moved) {
            out.push_back(diag(s.id, "pulse-without-move",
                               "apply_pulse acts at the current tip position; no earlier tip_control step", "warning"));
        }
        if (s.op == "define_be_parms") be_defined = true;
        if (s.op == "tip_control") tip_moved = true;
        earlier.emplace(s.id, tool);
    }
    return out;
}

bool plan_ok(const std::vector<Diagnostic>& diagnostics) {
    return std::none_of(diagnostics.begin(), diagnostics.end(),
                        [](const Diagnostic& d) { return d.severity == "error"; });
}

}  // namespace aescope::workflow
