#include "aescope/gateway/service.hpp"

#include "aescope/core/error.hpp"
#include "aescope/core/json_util.hpp"
#include "aescope/log/log.hpp"

namespace aescope::gateway {

namespace {

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

bool is_id(const json& v) { return v.is_number_integer() || v.is_number_unsigned(); }

int envelope_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_params:
    case ErrorCode::syntax_error:
    case ErrorCode::unknown_field:
    case ErrorCode::duplicate_id:
    case ErrorCode::binding_error:
        return kInvalidParams;
    default:
        return kOpError;
    }
}

json error_data(const Error& e) {
    json data = e.data().is_object() ? e.data() : json::object();
    if (!e.data().is_null() && !e.data().is_object()) data["detail"] = e.data();
    data["code"] = std::string(to_string(e.code()));
    return data;
}

workflow::WorkflowPlan plan_param(const json& params) {
    if (params.contains("plan") && params.contains("text")) {
        throw Error(ErrorCode::invalid_params, "give either plan or text, not both");
    }
    if (params.contains("plan")) return workflow::plan_from_json(params["plan"]);
    if (params.contains("text")) return workflow::parse_plan(jsonutil::string(params, "text"));
    throw Error(ErrorCode::invalid_params, "missing plan (object) or text (plan document)");
}

json plan_json(const workflow::WorkflowPlan& plan) { return json::parse(workflow::plan_to_json(plan).dump()); }

std::vector<log::LogRecord> records_param(const json& params, const control::ControlApi& api) {
    if (params.contains("text")) return log::parse_log(jsonutil::string(params, "text"));
    return api.experiment_log().records();
}

}  // namespace

bool Session::begin_request(const std::string& id) {
    std::lock_guard lock(mu_);
    return in_flight_.insert(id).second;
}

void Session::end_request(const std::string& id) {
    std::lock_guard lock(mu_);
    in_flight_.erase(id);
}

json ok_response(const json& id, json result) {
    return json{{"id", id}, {"ok", true}, {"result", std::move(result)}};
}

json error_response(const json& id, int code, const std::string& message, json data) {
    json err{{"code", code}, {"message", message}};
    if (!data.is_null()) err["data"] = std::move(data);
    return json{{"id", id}, {"ok", false}, {"error", std::move(err)}};
}

json dataset_json(const Dataset& ds, bool include_data) {
    json channels = json::object();
    for (const auto& [name, ch] : ds.channels) {
        json c{{"shape", ch.shape}, {"dtype", to_string(ch.dtype)}, {"units", ch.units}};
        if (include_data) c["data"] = ch.data;
        channels[name] = std::move(c);
    }
    return json{{"id", ds.id}, {"name", ds.name}, {"metadata", ds.metadata}, {"channels", channels}};
}

Service::Service(std::shared_ptr<control::ControlApi> api, ServiceConfig config)
    : api_(std::move(api)), config_(std::move(config)), actor_(api_) {
    api_->set_event_sink([this](const std::string& event, const json& data) { broadcast(event, data); });
    register_methods();
}

Service::~Service() = default;

void Service::subscribe(const std::shared_ptr<Session>& session) {
    std::lock_guard lock(subs_mu_);
    subscribers_.push_back(session);
}

void Service::unsubscribe(const Session* session) {
    std::lock_guard lock(subs_mu_);
    std::erase_if(subscribers_, [session](const std::weak_ptr<Session>& w) {
        auto s = w.lock();
        return !s || s.get() == session;
    });
}

void Service::broadcast(const std::string& event, const json& data) {
    const std::string frame = dump(json{{"event", event}, {"data", data}});
    std::vector<std::shared_ptr<Session>> targets;
    {
        std::lock_guard lock(subs_mu_);
        for (const auto& w : subscribers_) {
            if (auto s = w.lock(); s && (config_.token.empty() || s->authenticated())) targets.push_back(s);
        }
    }
    for (const auto& s : targets) s->send(frame);
}

std::vector<std::string> Service::methods() const {
    std::vector<std::string> out;
    for (const auto& [name, h] : handlers_) out.push_back(name);
    return out;
}

bool Service::is_inline(std::string_view frame) {
    if (frame.size() > 4096) return false;
    const json j = json::parse(frame, nullptr, false);
    if (!j.is_object() || !j.contains("method") || !j["method"].is_string()) return false;
    const auto& m = j["method"].get_ref<const std::string&>();
    return m == "cancel" || m == "auth";
}

std::string Service::handle_frame(Session& session, std::string_view frame) {
    json request;
    try {
        request = json::parse(frame);
    } catch (const json::exception& e) {
        return dump(error_response(nullptr, kParseError, std::string("parse error: ") + e.what()));
    }
    return dump(handle(session, request));
}

json Service::handle(Session& session, const json& request) {
    const json id = request.is_object() && request.contains("id") && is_id(request["id"]) ? request["id"] : json(nullptr);
    if (!request.is_object()) return error_response(id, kInvalidParams, "request must be an object {id, method, params}");
    for (const auto& [k, v] : request.items()) {
        if (k != "id" && k != "method" && k != "params") {
            return error_response(id, kInvalidParams, "unknown envelope field '" + k + "'");
        }
    }
    if (id.is_null()) return error_response(id, kInvalidParams, "request id must be an integer");
    if (!request.contains("method") || !request["method"].is_string()) {
        return error_response(id, kInvalidParams, "request method must be a string");
    }
    const json params = request.contains("params") ? request["params"] : json::object();
    if (!params.is_object()) return error_response(id, kInvalidParams, "request params must be an object");

    const std::string key = id.dump();
    if (!session.begin_request(key)) return error_response(id, kInvalidParams, "request id is already in flight");
    struct Done {
        Session& s;
        std::string k;
        ~Done() { s.end_request(k); }
    } done{session, key};

    const auto& method = request["method"].get_ref<const std::string&>();
    if (!config_.token.empty() && !session.authenticated() && method != "auth") {
        return error_response(id, kOpError, "not authenticated; call auth first", json{{"code", "unauthorized"}});
    }
    auto it = handlers_.find(method);
    if (it == handlers_.end()) {
        return error_response(id, kUnknownMethod, "unknown method '" + method + "'", json{{"method", method}});
    }
    try {
        return ok_response(id, it->second(session, params));
    } catch (const Error& e) {
        return error_response(id, envelope_code(e.code()), e.what(), error_data(e));
    } catch (const json::exception& e) {
        return error_response(id, kInvalidParams, e.what(), json{{"code", "invalid_params"}});
    } catch (const std::exception& e) {
        return error_response(id, kOpError, e.what(), json{{"code", "internal"}});
    }
}

json Service::run_plan(const json& params) {
    jsonutil::reject_unknown_keys(params, {"plan", "text", "approve", "queue"}, "execute_plan");
    const auto plan = plan_param(params);
    if (!jsonutil::boolean(params, "approve", false)) {
        throw Error(ErrorCode::not_approved, "execute_plan runs only with approve: true");
    }
    const bool queue = jsonutil::boolean(params, "queue", false);
    {
        std::lock_guard lock(plan_mu_);
        if (plans_active_ > 0 && !queue) {
            throw Error(ErrorCode::busy, "a plan is already running; pass queue: true to wait for it");
        }
        ++plans_active_;
    }
    struct Release {
        Service& s;
        ~Release() {
            std::lock_guard lock(s.plan_mu_);
            --s.plans_active_;
        }
    } release{*this};

    auto on_step = [this, &plan](const workflow::StepResult& r, std::size_t index, std::size_t total) {
        json data{{"plan", plan.name}, {"step_id", r.id}, {"op", r.op}, {"status", r.status},
                  {"index", index},    {"total", total}};
        if (r.outputs.contains("dataset")) data["dataset"] = r.outputs["dataset"];
        if (!r.error_code.empty()) data["error"] = json{{"code", r.error_code}, {"message", r.error_message}};
        broadcast("step_done", data);
    };
    auto report = actor_
                      .submit([&](control::ControlApi& api) {
                          plan_cancel_.store(false);
                          return workflow::execute_plan(plan, api, workflow::default_registry(), on_step,
                                                        &plan_cancel_);
                      })
                      .get();
    json out = report;
    // Images and masks stay server-side; datasets hold them.
    for (auto& step : out["steps"]) {
        for (const char* big : {"phase", "amplitude", "topography", "mask", "image"}) step["outputs"].erase(big);
    }
    return out;
}

void Service::register_methods() {
    handlers_["auth"] = [this](Session& s, const json& p) {
        jsonutil::reject_unknown_keys(p, {"token"}, "auth");
        const std::string token = p.contains("token") ? jsonutil::string(p, "token") : "";
        if (!config_.token.empty()) {
            unsigned diff = token.size() ^ config_.token.size();
            for (std::size_t i = 0; i < config_.token.size(); ++i) {
                diff |= static_cast<unsigned char>(config_.token[i]) ^
                        static_cast<unsigned char>(i < token.size() ? token[i] : 0);
            }
            if (diff != 0) throw Error(ErrorCode::unauthorized, "invalid token");
        }
        s.set_authenticated();
        return json{{"authenticated", true}};
    };
    handlers_["cancel"] = [this](Session&, const json& p) {
        jsonutil::reject_unknown_keys(p, {}, "cancel");
        plan_cancel_.store(true);
        actor_.cancel();
        return json{{"cancelled", true}};
    };
    handlers_["get_state"] = [this](Session&, const json& p) {
        jsonutil::reject_unknown_keys(p, {}, "get_state");
        return actor_.read([](const control::ControlApi& api) {
            return json{{"state", api.instrument().state()},
                        {"seed", api.instrument().seed()},
                        {"clock", api.instrument().clock().now_iso()},
                        {"window", api.window()},
                        {"log_records", api.experiment_log().size()}};
        });
    };
    handlers_["list_tools"] = [](Session&, const json& p) {
        jsonutil::reject_unknown_keys(p, {}, "list_tools");
        json tools = json::array();
        for (const auto& t : workflow::default_registry().tools()) tools.push_back(workflow::tool_schema(t));
        return tools;
    };

    for (const auto& tool : workflow::default_registry().tools()) {
        const std::string name = tool.name;
        if (tool.is_instrument_op()) {
            handlers_[name] = [this, name](Session&, const json& p) {
                return actor_.submit([&](control::ControlApi& api) { return api.invoke(name, p); }).get();
            };
        } else {
            const workflow::ToolSpec* spec = &tool;
            handlers_[name] = [this, spec](Session&, const json& p) {
                return actor_
                    .submit([&](control::ControlApi& api) {
                        workflow::ExecContext ctx{api};
                        return workflow::run_tool(*spec, ctx, p);
                    })
                    .get();
            };
        }
    }

    handlers_["parse_plan"] = [](Session&, const json& p) {
        jsonutil::reject_unknown_keys(p, {"text"}, "parse_plan");
        return plan_json(workflow::parse_plan(jsonutil::string(p, "text")));
    };
    handlers_["validate_plan"] = [this](Session&, const json& p) {
        jsonutil::reject_unknown_keys(p, {"plan", "text", "assume_be_defined"}, "validate_plan");
        const auto plan = plan_param(p);
        workflow::ValidateOptions options;
        options.assume_be_defined = p.contains("assume_be_defined")
                                        ? jsonutil::boolean(p, "assume_be_defined", false)
                                        : actor_.read([](const control::ControlApi& api) {
                                              return api.instrument().state().be.has_value();
                                          });
        const auto diags = workflow::validate_plan(plan, workflow::default_registry(), options);
        return json{{"ok", workflow::plan_ok(diags)}, {"diagnostics", diags}};
    };
    handlers_["execute_plan"] = [this](Session&, const json& p) { return run_plan(p); };
    handlers_["propose_plan"] = [this](Session&, const json& p) {
        jsonutil::reject_unknown_keys(p, {"instruction", "conversation"}, "propose_plan");
        assistant::AssistantExchange exchange;
        if (p.contains("conversation")) exchange.conversation = p["conversation"].get<std::vector<assistant::ChatMessage>>();
        assistant::ProposeOptions options;
        options.guideline = config_.guideline;
        options.validate.assume_be_defined =
            actor_.read([](const control::ControlApi& api) { return api.instrument().state().be.has_value(); });
        auto client = assistant::make_client(config_.llm);
        return json(assistant::propose_plan(jsonutil::string(p, "instruction"), std::move(exchange), *client, options));
    };
    handlers_["extract_protocol"] = [this](Session&, const json& p) {
        jsonutil::reject_unknown_keys(p, {"text"}, "extract_protocol");
        auto client = assistant::make_client(config_.llm);
        return json(assistant::extract_protocol(jsonutil::string(p, "text"), *client));
    };
    handlers_["load_dataset"] = [this](Session&, const json& p) {
        jsonutil::reject_unknown_keys(p, {"id", "include_data"}, "load_dataset");
        const std::string id = jsonutil::string(p, "id");
        const bool include = jsonutil::boolean(p, "include_data", false);
        return actor_.read([&](const control::ControlApi& api) { return dataset_json(api.repository().get(id), include); });
    };
    handlers_["list_datasets"] = [this](Session&, const json& p) {
        jsonutil::reject_unknown_keys(p, {}, "list_datasets");
        return json(actor_.read([](const control::ControlApi& api) { return api.repository().ids(); }));
    };
    handlers_["summarize_log"] = [this](Session&, const json& p) {
        jsonutil::reject_unknown_keys(p, {"text"}, "summarize_log");
        const auto records = actor_.read([&](const control::ControlApi& api) { return records_param(p, api); });
        return json{{"summary", log::summarize_log(records)}};
    };
    handlers_["reconstruct_plan"] = [this](Session&, const json& p) {
        jsonutil::reject_unknown_keys(p, {"text"}, "reconstruct_plan");
        const auto records = actor_.read([&](const control::ControlApi& api) { return records_param(p, api); });
        std::vector<std::string> notices;
        const auto plan = workflow::reconstruct_plan(records, &notices);
        return json{{"plan", plan_json(plan)}, {"notices", notices}};
    };
    handlers_["get_log"] = [this](Session&, const json& p) {
        jsonutil::reject_unknown_keys(p, {}, "get_log");
        return actor_.read([](const control::ControlApi& api) {
            return json{{"text", api.experiment_log().text()}, {"records", api.experiment_log().size()}};
        });
    };
}

}  // namespace aescope::gateway
