#include "aescope/assistant/llm_client.hpp"

#include "aescope/control/control.hpp"
#include "aescope/core/error.hpp"
#include "aescope/workflow/engine.hpp"

#include <cmath>
#include <optional>
#include <regex>

namespace aescope::assistant {

namespace {

using workflow::Binding;
using workflow::Step;
using workflow::WorkflowPlan;

const std::string kNum = R"((-?\d+(?:\.\d+)?))";
const std::string kPoint = R"(\(\s*)" + kNum + R"(\s*,\s*)" + kNum + R"(\s*\))";

constexpr auto kFlags = std::regex::ECMAScript | std::regex::icase;

json num(double v) {
    if (std::abs(v) < 1e15 && v == std::floor(v)) return static_cast<std::int64_t>(v);
    return v;
}

std::optional<std::smatch> find(const std::string& text, const std::string& pattern) {
    std::smatch m;
    if (std::regex_search(text, m, std::regex(pattern, kFlags))) return m;
    return std::nullopt;
}

bool contains(const std::string& text, const std::string& pattern) { return find(text, pattern).has_value(); }

std::vector<json> points(const std::string& text) {
    std::vector<json> out;
    const std::regex re(kPoint, kFlags);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        out.push_back(json::array({num(std::stod((*it)[1])), num(std::stod((*it)[2]))}));
    }
    return out;
}

Step step(std::string id, std::string op, json params, std::map<std::string, Binding> bindings = {}) {
    Step s;
    s.id = std::move(id);
    s.op = std::move(op);
    s.params = std::move(params);
    s.bindings = std::move(bindings);
    return s;
}

json be_fields(const std::string& text) {
    json be = json::object();
    if (auto m = find(text, R"(band\s?width\s+(?:to\s+|of\s+)?)" + kNum + R"(\s*khz)")) {
        be["band_width_khz"] = num(std::stod((*m)[1]));
    }
    if (auto m = find(text, R"(center frequency\s+(?:to\s+|of\s+|at\s+)?)" + kNum + R"(\s*khz)")) {
        be["center_frequency_khz"] = num(std::stod((*m)[1]));
    } else if (auto m2 = find(text, kNum + R"(\s*khz)"); m2 && !be.contains("band_width_khz")) {
        be["center_frequency_khz"] = num(std::stod((*m2)[1]));
    }
    if (auto m = find(text, R"(amplitude\s+(?:to\s+|of\s+)?)" + kNum + R"(\s*v\b)")) {
        be["amplitude_v"] = num(std::stod((*m)[1]));
    }
    if (auto m = find(text, R"((\d+)\s+(?:frequency\s+)?bins)")) be["num_bins"] = num(std::stod((*m)[1]));
    if (contains(text, R"(\bchirp\b)")) be["waveform"] = "chirp";
    return be;
}

Region region_from(const std::vector<json>& pts) {
    if (pts.size() >= 2) {
        return Region{pts[0][0].get<double>(), pts[0][1].get<double>(), pts[1][0].get<double>(),
                      pts[1][1].get<double>()};
    }
    return workflow::WallStudyParams{}.region;
}

WorkflowPlan plan_named(std::string name, std::vector<Step> steps) {
    WorkflowPlan p;
    p.name = std::move(name);
    p.metadata.author = "mock-assistant";
    p.metadata.source = "assistant";
    p.steps = std::move(steps);
    return p;
}

/// `attempt` counts repair turns already requested for this instruction.
std::optional<WorkflowPlan> plan_for(const std::string& text, int attempt) {
    const auto pts = points(text);

    if (contains(text, R"(domain\s+wall)")) {
        workflow::WallStudyParams p;
        if (auto m = find(text, R"((\d+)\s+(?:walls|points|locations))")) p.max_walls = std::stoi((*m)[1]);
        if (pts.size() >= 2) p.region = region_from(pts);
        auto plan = workflow::wall_study_plan(p);
        plan.metadata.author = "mock-assistant";
        plan.metadata.source = "assistant";
        return plan;
    }

    if (contains(text, R"(\bspiral\b)")) {
        const auto volts = find(text, kNum + R"(\s*v\b)");
        const std::map<std::string, Binding> traj{{"trajectory", {"spiral", "trajectory"}}};
        if (volts && attempt == 0) {
            // First answer repeats the classic mistake: the bias is passed to the generator.
            return plan_named("spiral_scan", {step("spiral", "spiral_waveform", {{"tip_voltage_v", num(std::stod((*volts)[1]))}}),
                                              step("scan", "do_trajectory_scan", json::object(), traj)});
        }
        std::vector<Step> steps{step("be", "define_be_parms", json::object())};
        if (volts) steps.push_back(step("bias", "set_tip_bias", {{"voltage_v", num(std::stod((*volts)[1]))}}));
        steps.push_back(step("spiral", "spiral_waveform", json::object()));
        steps.push_back(step("scan", "do_trajectory_scan", json::object(), traj));
        return plan_named("spiral_scan", std::move(steps));
    }

    if (contains(text, R"(line\s+scan)") && pts.size() >= 2) {
        json line{{"start", pts[0]}, {"end", pts[1]}};
        if (auto m = find(text, R"((\d+)\s+points)")) line["num_points"] = num(std::stod((*m)[1]));
        return plan_named("line_scan", {step("be", "define_be_parms", be_fields(text)), step("line", "do_line_scan", line)});
    }

    if (contains(text, R"(\bbeps\b)")) {
        json bias = control::triangle_bias(8.0, 8);
        if (auto m = find(text, R"((?:to|of|±|\+/-)\s*)" + kNum + R"(\s*v\b)")) {
            bias = control::triangle_bias(std::abs(std::stod((*m)[1])), 8);
        }
        if (contains(text, R"(\bgrid\b)")) {
            json grid{{"region", region_from(pts)}, {"bias_waveform", bias}};
            if (auto m = find(text, R"((\d+)\s*(?:x|by)\s*(\d+))")) {
                grid["ny"] = std::stoi((*m)[1]);
                grid["nx"] = std::stoi((*m)[2]);
            }
            return plan_named("beps_grid", {step("be", "define_be_parms", be_fields(text)), step("beps", "do_beps_grid", grid)});
        }
        if (!pts.empty()) {
            return plan_named("beps_points", {step("be", "define_be_parms", be_fields(text)),
                                              step("beps", "do_beps_specific", {{"locations", pts}, {"bias_waveform", bias}})});
        }
    }

    if (contains(text, R"(\b(?:raster|image)\b)")) {
        json scan{{"region", region_from(pts)}};
        if (auto m = find(text, R"((\d+)\s*(?:x|by)\s*(\d+))")) {
            scan["ny"] = std::stoi((*m)[1]);
            scan["nx"] = std::stoi((*m)[2]);
        }
        return plan_named("raster_scan", {step("be", "define_be_parms", be_fields(text)), step("scan", "raster_scan", scan)});
    }

    if (contains(text, R"(\bpulse\b)") && !pts.empty()) {
        const auto volts = find(text, kNum + R"(\s*v\b)");
        if (volts) {
            json pulse{{"voltage_v", num(std::stod((*volts)[1]))}};
            if (auto m = find(text, kNum + R"(\s*ms\b)")) pulse["duration_ms"] = num(std::stod((*m)[1]));
            return plan_named("pulse", {step("move", "tip_control", {{"x_um", pts[0][0]}, {"y_um", pts[0][1]}}),
                                        step("pulse", "apply_pulse", pulse)});
        }
    }

    if (contains(text, R"(center frequency|amplitude|band\s?width|\bbe\s+param)")) {
        return plan_named("be_parameters", {step("be", "define_be_parms", be_fields(text))});
    }

    if (contains(text, R"((?:move|position|place)\b.*\btip\b|\btip\b.*\b(?:to|at)\b)") && !pts.empty()) {
        return plan_named("tip_move", {step("move", "tip_control", {{"x_um", pts[0][0]}, {"y_um", pts[0][1]}})});
    }
    return std::nullopt;
}

struct FieldRule {
    const char* field;
    std::string pattern;  // group 1: the value; group 2: optional unit
    double scale_mhz = 1.0;
};

std::string extraction_reply(const std::string& text) {
    const std::vector<FieldRule> rules = {
        {"center_frequency_khz", R"(center frequency\s+(?:of\s+|at\s+|=\s*)?()" + kNum.substr(1, kNum.size() - 2) + R"(\s*(khz|mhz)))", 1e3},
        {"band_width_khz", R"(band\s?width\s+(?:of\s+|=\s*)?()" + kNum.substr(1, kNum.size() - 2) + R"(\s*(khz|mhz)))", 1e3},
        {"amplitude_v", R"(()" + kNum.substr(1, kNum.size() - 2) + R"(\s*V)\s+(?:ac\s+)?(?:drive|excitation))"},
        {"amplitude_v", R"(amplitude\s+(?:of\s+|=\s*)?()" + kNum.substr(1, kNum.size() - 2) + R"(\s*V)\b)"},
        {"num_bins", R"(((\d+))\s+(?:frequency\s+)?bins)"},
        {"repeats", R"(((\d+))\s+(?:repeats|repetitions|averages))"},
        {"duration_ms", R"(()" + kNum.substr(1, kNum.size() - 2) + R"(\s*ms)\s+(?:excitation|duration|long))"},
        {"waveform", R"(((chirp|sinc)))"},
    };
    json out = json::object();
    for (const auto& rule : rules) {
        if (out.contains(rule.field)) continue;
        std::smatch m;
        if (!std::regex_search(text, m, std::regex(rule.pattern, kFlags))) continue;
        // Group 1 is the quoted span; the value is its leading number.
        const std::string quote = m[1];
        json value;
        if (std::string(rule.field) == "waveform") {
            std::string w = quote;
            for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            value = w;
        } else {
            double v = std::stod(quote);
            if (m.size() > 2 && m[2].matched) {
                std::string unit = m[2];
                for (auto& c : unit) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                if (unit == "mhz") v *= rule.scale_mhz;
            }
            value = num(v);
        }
        out[rule.field] = json{{"value", value}, {"quote", quote}, {"begin", m.position(1)}};
    }
    return out.dump();
}

bool is_repair(const ChatMessage& m) { return m.role == "user" && m.content.rfind(kRepairPrefix, 0) == 0; }

}  // namespace

std::string MockLlmClient::complete(const std::vector<ChatMessage>& conversation) {
    if (!conversation.empty() && conversation.front().role == "system" &&
        conversation.front().content.rfind(kExtractionMarker, 0) == 0) {
        for (auto it = conversation.rbegin(); it != conversation.rend(); ++it) {
            if (it->role == "user") return extraction_reply(it->content);
        }
        return "{}";
    }

    int attempt = 0;
    const ChatMessage* instruction = nullptr;
    for (auto it = conversation.rbegin(); it != conversation.rend(); ++it) {
        if (it->role != "user") continue;
        if (is_repair(*it)) {
            ++attempt;
            continue;
        }
        instruction = &*it;
        break;
    }
    if (!instruction) return "There is no instruction to plan for.";

    const auto plan = plan_for(instruction->content, attempt);
    if (!plan) {
        return "I could not map this instruction onto the available operations. Please describe the measurement "
               "in terms of scans, spectroscopy, tip moves or pulses.";
    }
    std::string reply = attempt == 0 ? "Here is a plan for the request.\n\n" : "Here is the corrected plan.\n\n";
    reply += "```json\n" + workflow::serialize_plan(*plan) + "```\n";
    return reply;
}

}  // namespace aescope::assistant
