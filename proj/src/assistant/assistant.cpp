#include "aescope/assistant/assistant.hpp"

#include "aescope/core/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <regex>

namespace aescope::assistant {

namespace {

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

const char* kPreamble =
    "You are the planning assistant of aescope, a band-excitation piezoresponse force microscope. You turn the "
    "operator's instructions into plan documents that call the operations listed below. Use only those operations "
    "and only their documented parameters. Respect the ordering rules: define_be_parms before any spectroscopic "
    "acquisition, tip_control before apply_pulse, set_tip_bias for any voltage that should be on the tip during a "
    "trajectory scan.\n";

const char* kContract =
    "Reply format: respond with a plan document only, one JSON object inside a ```json fenced block, of the form "
    "{\"name\": ..., \"metadata\": {\"author\": ..., \"created_at\": ..., \"source\": \"assistant\"}, \"steps\": [{\"id\": "
    "..., \"op\": ..., \"params\": {...}, \"bindings\": {\"<param>\": {\"step\": \"<earlier id>\", \"output\": "
    "\"<output>\"}}}]}. Omit parameters that should keep their defaults. When a reply is rejected you will receive "
    "the problems found; answer with the corrected plan document.\n";

const char* kExtractionPrompt =
    " from the text the user sends. Report only values the text states explicitly. Reply with one JSON object "
    "mapping define_be_parms field names (center_frequency_khz, band_width_khz, amplitude_v, num_bins, repeats, "
    "duration_ms, waveform) to {\"value\": <value in the field's unit>, \"quote\": \"<exact substring of the text "
    "stating it>\"}. Reply {} when the text states none.";

std::string fenced_or_braced(std::string_view reply) {
    const auto fence = reply.find("```");
    if (fence != std::string_view::npos) {
        const auto body = reply.find('\n', fence);
        const auto close = body == std::string_view::npos ? body : reply.find("```", body);
        if (close != std::string_view::npos) return std::string(reply.substr(body + 1, close - body - 1));
    }
    const auto open = reply.find('{');
    const auto shut = reply.rfind('}');
    if (open == std::string_view::npos || shut == std::string_view::npos || shut < open) return {};
    return std::string(reply.substr(open, shut - open + 1));
}

std::string diagnostics_text(const std::vector<workflow::Diagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) {
        if (d.severity != "error") continue;
        out += "- step '" + d.step_id + "': " + d.code + ": " + d.message + "\n";
    }
    return out;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// True when a number in the quote equals the value, directly or after a kHz/MHz or ms/s change of unit.
bool quote_supports(const std::string& quote, double value) {
    static const std::regex number(R"(-?\d+(?:\.\d+)?)");
    for (auto it = std::sregex_iterator(quote.begin(), quote.end(), number); it != std::sregex_iterator(); ++it) {
        const double q = std::stod(it->str());
        for (double scale : {1.0, 1e3, 1e-3}) {
            if (std::abs(q * scale - value) <= 1e-9 * std::max(1.0, std::abs(value))) return true;
        }
    }
    return false;
}

}  // namespace

std::string load_guideline(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::not_found, "cannot read guideline " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string build_system_prompt(std::string_view guideline, const workflow::ToolRegistry& registry) {
    if (blank(guideline)) throw Error(ErrorCode::empty_guideline, "the guideline document is empty");
    std::string out = kPreamble;
    out += "\n# Guideline\n\n";
    out += guideline;
    if (out.back() != '\n') out += '\n';
    out += "\n# Operations\n\n";
    for (const auto& tool : registry.tools()) out += workflow::tool_schema(tool).dump() + "\n";
    out += "\n# Reply format\n\n";
    out += kContract;
    return out;
}

void to_json(json& j, const AssistantExchange& e) {
    j = json{{"conversation", e.conversation},
             {"proposed", e.proposed ? json::parse(workflow::plan_to_json(*e.proposed).dump()) : json(nullptr)},
             {"diagnostics", e.diagnostics},
             {"executable", e.executable},
             {"repair_turns", e.repair_turns}};
}

workflow::WorkflowPlan extract_plan_document(std::string_view reply) {
    const std::string doc = fenced_or_braced(reply);
    if (doc.empty()) {
        throw Error(ErrorCode::unparseable_reply, "the reply contains no plan document",
                    json{{"reason", "no JSON object found"}});
    }
    try {
        return workflow::parse_plan(doc);
    } catch (const Error& e) {
        throw Error(ErrorCode::unparseable_reply, std::string("the reply is not a valid plan document: ") + e.what(),
                    json{{"reason", e.what()}, {"cause", std::string(to_string(e.code()))}});
    }
}

AssistantExchange propose_plan(std::string_view instruction, AssistantExchange exchange, LLMClient& client,
                               const ProposeOptions& options, const workflow::ToolRegistry& registry) {
    if (blank(instruction)) throw Error(ErrorCode::invalid_params, "instruction is empty");
    if (exchange.conversation.empty()) {
        const std::string guideline = options.guideline.empty() ? std::string(bundled_guideline()) : options.guideline;
        exchange.conversation.push_back({"system", build_system_prompt(guideline, registry)});
    }
    exchange.conversation.push_back({"user", std::string(instruction)});
    exchange.proposed.reset();
    exchange.diagnostics.clear();
    exchange.executable = false;
    exchange.repair_turns = 0;

    std::string last_problem;
    for (int attempt = 0;; ++attempt) {
        const std::string reply = client.complete(exchange.conversation);
        exchange.conversation.push_back({"assistant", reply});
        std::string repair;
        try {
            auto plan = extract_plan_document(reply);
            plan.metadata.source = "assistant";
            auto diags = workflow::validate_plan(plan, registry, options.validate);
            exchange.proposed = std::move(plan);
            exchange.diagnostics = std::move(diags);
            if (workflow::plan_ok(exchange.diagnostics)) {
                exchange.executable = true;
                return exchange;
            }
            repair = "The plan did not validate. Fix these problems and reply with the corrected plan document "
                     "only:\n" +
                     diagnostics_text(exchange.diagnostics);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::unparseable_reply) throw;
            last_problem = e.what();
            repair = "Your reply did not contain a valid plan document (" + last_problem +
                     "). Reply with a plan document only.";
        }
        if (attempt >= options.max_repairs) break;
        exchange.conversation.push_back({"user", kRepairPrefix + repair});
        ++exchange.repair_turns;
    }
    if (!exchange.proposed) {
        throw Error(ErrorCode::unparseable_reply,
                    "no plan document after " + std::to_string(exchange.repair_turns) + " repair turns: " + last_problem,
                    json{{"repair_turns", exchange.repair_turns}, {"conversation", exchange.conversation}});
    }
    return exchange;
}

std::string plan_digest(const workflow::WorkflowPlan& plan) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(workflow::serialize_plan(plan))));
    return buf;
}

ApprovalToken approve(const workflow::WorkflowPlan& plan) { return ApprovalToken{plan_digest(plan)}; }

workflow::RunReport execute_approved(const AssistantExchange& exchange, const ApprovalToken& token,
                                     control::ControlApi& api, const workflow::ToolRegistry& registry,
                                     const workflow::StepCallback& on_step) {
    if (!exchange.proposed || !exchange.executable) {
        throw Error(ErrorCode::not_approved, "the proposal is not executable", json{{"diagnostics", exchange.diagnostics}});
    }
    if (token.plan_digest != plan_digest(*exchange.proposed)) {
        throw Error(ErrorCode::not_approved, "the approval was given for a different plan");
    }
    return workflow::execute_plan(*exchange.proposed, api, registry, on_step);
}

void to_json(json& j, const ProtocolExtraction& e) {
    json spans = json::array();
    for (const auto& s : e.spans) {
        spans.push_back(json{{"field", s.field}, {"begin", s.begin}, {"end", s.end}, {"text", s.text}});
    }
    j = json{{"params", e.params},
             {"spans", spans},
             {"reproduction", json::parse(workflow::plan_to_json(e.reproduction).dump())}};
}

ProtocolExtraction extract_protocol(std::string_view source, LLMClient& client) {
    if (blank(source)) throw Error(ErrorCode::invalid_params, "protocol text is empty");
    const std::vector<ChatMessage> conversation{{"system", std::string(kExtractionMarker) + kExtractionPrompt},
                                                {"user", std::string(source)}};
    const std::string reply = client.complete(conversation);
    json found;
    try {
        found = json::parse(fenced_or_braced(reply));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::unparseable_reply, std::string("extraction reply is not JSON: ") + e.what());
    }
    if (!found.is_object()) throw Error(ErrorCode::unparseable_reply, "extraction reply is not a JSON object");

    static const std::vector<std::string> fields = {"center_frequency_khz", "band_width_khz", "amplitude_v", "num_bins",
                                                    "repeats",              "duration_ms",    "waveform"};
    ProtocolExtraction out;
    const std::string text(source);
    for (const auto& field : fields) {
        if (!found.contains(field) || !found[field].is_object()) continue;
        const json& item = found[field];
        if (!item.contains("value") || !item.contains("quote") || !item["quote"].is_string()) continue;
        const std::string quote = item["quote"].get<std::string>();
        if (quote.empty()) continue;

        std::size_t begin = std::string::npos;
        if (item.contains("begin") && item["begin"].is_number_unsigned()) {
            const auto b = item["begin"].get<std::size_t>();
            if (b <= text.size() && text.compare(b, quote.size(), quote) == 0) begin = b;
        }
        if (begin == std::string::npos) begin = text.find(quote);
        if (begin == std::string::npos) continue;

        const json& value = item["value"];
        if (field == "waveform") {
            if (!value.is_string() || lower(quote).find(lower(value.get<std::string>())) == std::string::npos) continue;
        } else if (!value.is_number() || !quote_supports(quote, value.get<double>())) {
            continue;
        }
        try {
            BEParamsPartial check = json{{field, value}}.get<BEParamsPartial>();
            validate(check.resolve());
        } catch (const Error&) {
            continue;
        }
        out.params[field] = value;
        out.spans.push_back({field, begin, begin + quote.size(), quote});
    }
    std::sort(out.spans.begin(), out.spans.end(),
              [](const SourceSpan& a, const SourceSpan& b) { return a.begin < b.begin; });

    out.reproduction.name = "reproduction";
    out.reproduction.metadata.source = "assistant";
    workflow::Step be;
    be.id = "be";
    be.op = "define_be_parms";
    be.params = out.params;
    workflow::Step scan;
    scan.id = "scan";
    scan.op = "raster_scan";
    scan.params = json{{"region", workflow::WallStudyParams{}.region}};
    out.reproduction.steps = {be, scan};
    return out;
}

}  // namespace aescope::assistant
