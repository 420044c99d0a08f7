#pragma once

#include "aescope/workflow/registry.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace aescope::workflow {

/// Feeds a parameter from an earlier step's output.
struct Binding {
    std::string step;
    std::string output;
    friend bool operator==(const Binding&, const Binding&) = default;
};

struct Step {
    std::string id;
    std::string op;
    json params = json::object();
    std::map<std::string, Binding> bindings;  // param name -> source
    bool continue_on_error = false;
    friend bool operator==(const Step&, const Step&) = default;
};

struct PlanMetadata {
    std::string author;
    std::string created_at;
    std::string source = "human";  // human | assistant | log-replay
    friend bool operator==(const PlanMetadata&, const PlanMetadata&) = default;
};

struct WorkflowPlan {
    std::string name;
    PlanMetadata metadata;
    std::vector<Step> steps;
    friend bool operator==(const WorkflowPlan&, const WorkflowPlan&) = default;
};

/// Parses a JSON plan document. Errors: syntax_error (data: line, column or path),
/// unknown_field (data: path), duplicate_id (data: id), binding_error for a binding
/// to an undeclared or later step (data: step, ref).
WorkflowPlan parse_plan(std::string_view text);
WorkflowPlan plan_from_json(const json& j);

/// Stable field order: name, metadata, steps[id, op, params, bindings, continue_on_error].
/// Empty bindings and a false continue_on_error are omitted.
std::string serialize_plan(const WorkflowPlan& plan);
nlohmann::ordered_json plan_to_json(const WorkflowPlan& plan);

struct Diagnostic {
    std::string step_id;
    std::string code;  // unknown-op, unknown-parameter, missing-parameter, type-mismatch, ...
    std::string message;
    std::string severity = "error";  // error | warning
};

void to_json(json& j, const Diagnostic& d);

struct ValidateOptions {
    /// Treat BE parameters as already defined (the instrument has them).
    bool assume_be_defined = false;
};

/// Checks ops, parameter names and types, binding sources and types, and step
/// ordering. Never touches an instrument.
std::vector<Diagnostic> validate_plan(const WorkflowPlan& plan, const ToolRegistry& registry = default_registry(),
                                      const ValidateOptions& options = {});

/// True when no diagnostic has error severity.
bool plan_ok(const std::vector<Diagnostic>& diagnostics);

}  // namespace aescope::workflow
