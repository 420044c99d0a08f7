#pragma once

#include "aescope/assistant/llm_client.hpp"
#include "aescope/workflow/engine.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aescope::assistant {

/// The bundled operator guide (docs/guideline.md), compiled in.
std::string_view bundled_guideline();
/// Reads a guideline file; throws Error(not_found).
std::string load_guideline(const std::filesystem::path& path);

/// Role preamble, guideline, one schema per tool, and the reply contract.
/// Throws Error(empty_guideline) for blank guideline text.
std::string build_system_prompt(std::string_view guideline,
                                const workflow::ToolRegistry& registry = workflow::default_registry());

struct AssistantExchange {
    std::vector<ChatMessage> conversation;
    std::optional<workflow::WorkflowPlan> proposed;
    std::vector<workflow::Diagnostic> diagnostics;
    bool executable = false;  // only set when validation returned no errors
    int repair_turns = 0;
};

void to_json(json& j, const AssistantExchange& e);

struct ProposeOptions {
    int max_repairs = 2;
    std::string guideline;  // empty: the bundled guideline
    workflow::ValidateOptions validate;
};

/// Plan document from a reply: the first fenced block if any, else the outermost
/// braces. Throws Error(unparseable_reply) with the parse error in data.
workflow::WorkflowPlan extract_plan_document(std::string_view reply);

/// Sends the instruction, parses and validates the reply, and feeds diagnostics
/// back for up to max_repairs further turns. Never executes anything. A plan
/// that still fails validation is kept with executable = false. Throws
/// Error(unparseable_reply) when no reply held a plan document, and whatever the
/// client throws (client_unreachable).
AssistantExchange propose_plan(std::string_view instruction, AssistantExchange exchange, LLMClient& client,
                               const ProposeOptions& options = {},
                               const workflow::ToolRegistry& registry = workflow::default_registry());

/// Explicit human consent for one exact plan. Execution checks the digest.
struct ApprovalToken {
    std::string plan_digest;
};

std::string plan_digest(const workflow::WorkflowPlan& plan);
ApprovalToken approve(const workflow::WorkflowPlan& plan);

/// Runs an executable proposal. Throws Error(not_approved) when the exchange is
/// not executable or the token was issued for a different plan.
workflow::RunReport execute_approved(const AssistantExchange& exchange, const ApprovalToken& token,
                                     control::ControlApi& api,
                                     const workflow::ToolRegistry& registry = workflow::default_registry(),
                                     const workflow::StepCallback& on_step = {});

struct SourceSpan {
    std::string field;
    std::size_t begin = 0;  // byte offsets into the source text, [begin, end)
    std::size_t end = 0;
    std::string text;
};

struct ProtocolExtraction {
    json params = json::object();  // subset of the define_be_parms fields
    std::vector<SourceSpan> spans;
    workflow::WorkflowPlan reproduction;  // define_be_parms(params) + raster_scan
};

void to_json(json& j, const ProtocolExtraction& e);

/// BE parameters stated in the text, each tied to the span it came from. Values
/// the client reports without a verifiable span are dropped. Throws
/// Error(invalid_params) for empty text.
ProtocolExtraction extract_protocol(std::string_view source, LLMClient& client);

}  // namespace aescope::assistant
