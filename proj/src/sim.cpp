#include "rgate/sim.hpp"

#include <algorithm>

namespace rgate {

const char* to_string(GateMode m) {
    return m == GateMode::reconstructive ? "reconstructive" : "snapshot-baseline";
}

std::optional<GateMode> gate_mode_from_string(const std::string& s) {
    if (s == "reconstructive") return GateMode::reconstructive;
    if (s == "snapshot-baseline") return GateMode::snapshot_baseline;
    return std::nullopt;
}

namespace {

ScenarioEvent event_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("tick") || !j.contains("type"))
        throw ParseError("event requires tick and type: " + j.dump());
    ScenarioEvent e;
    e.tick = j["tick"].get<Tick>();
    std::string type = j["type"].get<std::string>();
    auto need_var = [&]() {
        if (!j.contains("var")) throw ParseError("event " + type + " requires var");
        auto var = VariableId::make(j["var"].get<std::string>());
        if (!var) throw ParseError("malformed variable name in event: " + j["var"].dump());
        return *var;
    };
    if (type == "set_value") {
        e.kind = ScenarioEvent::Kind::set_value;
        e.var = need_var();
        if (!j.contains("value")) throw ParseError("set_value requires value");
        try {
            e.value = VariableValue::from_json(j["value"]);
        } catch (const std::invalid_argument& err) {
            throw ParseError(std::string("set_value: ") + err.what());
        }
    } else if (type == "set_uncertainty") {
        e.kind = ScenarioEvent::Kind::set_uncertainty;
        e.var = need_var();
        if (!j.contains("u") || !j["u"].is_number()) throw ParseError("set_uncertainty requires u");
        e.uncertainty = j["u"].get<double>();
        if (e.uncertainty < 0.0 || e.uncertainty > 1.0)
            throw ParseError("set_uncertainty u must lie in [0,1]");
    } else if (type == "set_observable") {
        e.kind = ScenarioEvent::Kind::set_observable;
        e.var = need_var();
    } else if (type == "set_unobservable") {
        e.kind = ScenarioEvent::Kind::set_unobservable;
        e.var = need_var();
    } else if (type == "submit_action") {
        e.kind = ScenarioEvent::Kind::submit_action;
        if (!j.contains("action_id") || !j.contains("action_class"))
            throw ParseError("submit_action requires action_id and action_class");
        e.action.action_id = j["action_id"].get<std::string>();
        e.action.action_class = j["action_class"].get<std::string>();
        if (j.contains("scope_label")) e.action.scope_label = j["scope_label"].get<std::string>();
        e.execute_at = j.contains("execute_at") ? j["execute_at"].get<Tick>() : e.tick;
        if (e.execute_at < e.tick) throw ParseError("execute_at must not precede the submit tick");
    } else {
        throw ParseError("unknown event type: " + type);
    }
    return e;
}

nlohmann::json event_to_json(const ScenarioEvent& e) {
    nlohmann::json j;
    j["tick"] = e.tick;
    switch (e.kind) {
        case ScenarioEvent::Kind::set_value:
            j["type"] = "set_value";
            j["var"] = e.var->str();
            j["value"] = e.value->to_json();
            break;
        case ScenarioEvent::Kind::set_uncertainty:
            j["type"] = "set_uncertainty";
            j["var"] = e.var->str();
            j["u"] = e.uncertainty;
            break;
        case ScenarioEvent::Kind::set_observable:
            j["type"] = "set_observable";
            j["var"] = e.var->str();
            break;
        case ScenarioEvent::Kind::set_unobservable:
            j["type"] = "set_unobservable";
            j["var"] = e.var->str();
            break;
        case ScenarioEvent::Kind::submit_action:
            j["type"] = "submit_action";
            j["action_id"] = e.action.action_id;
            j["action_class"] = e.action.action_class;
            if (e.action.scope_label) j["scope_label"] = *e.action.scope_label;
            j["execute_at"] = e.execute_at;
            break;
    }
    return j;
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("scenario must be a JSON object");
    Scenario sc;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) throw ParseError("seed must be an integer");
        sc.seed = j["seed"].get<std::int64_t>();
    }
    if (!j.contains("horizon") || !j["horizon"].is_number_integer())
        throw ParseError("scenario requires an integer horizon");
    sc.horizon = j["horizon"].get<Tick>();
    if (sc.horizon < 0) throw ParseError("horizon must be non-negative");

    if (j.contains("initial_state")) {
        if (!j["initial_state"].is_object()) throw ParseError("initial_state must be an object");
        for (const auto& [name, entry] : j["initial_state"].items()) {
            auto var = VariableId::make(name);
            if (!var) throw ParseError("malformed variable name: " + name);
            if (!entry.is_object() || !entry.contains("value"))
                throw ParseError("initial_state entry for " + name + " requires value");
            ScenarioVar v = [&] {
                try {
                    return ScenarioVar{VariableValue::from_json(entry["value"]),
                                       entry.value("u", 0.0), entry.value("observable", true)};
                } catch (const std::invalid_argument& err) {
                    throw ParseError("initial_state entry for " + name + ": " + err.what());
                }
            }();
            if (v.uncertainty < 0.0 || v.uncertainty > 1.0)
                throw ParseError("initial uncertainty for " + name + " must lie in [0,1]");
            sc.initial_state.emplace(*var, std::move(v));
        }
    }

    if (j.contains("events")) {
        if (!j["events"].is_array()) throw ParseError("events must be an array");
        Tick last = -1;
        for (const auto& e : j["events"]) {
            ScenarioEvent ev = event_from_json(e);
            if (ev.tick < last) throw ParseError("events must be sorted by tick");
            if (ev.tick > sc.horizon || ev.execute_at > sc.horizon)
                throw ParseError("event ticks must not exceed the horizon");
            last = ev.tick;
            sc.events.push_back(std::move(ev));
        }
    }

    if (!j.contains("policies")) throw ParseError("scenario requires an embedded policy document");
    sc.policies = parse_policy(j["policies"].dump());
    sc.consistency_rules = sc.policies.consistency_rules;
    if (j.contains("consistency_rules")) {
        if (!j["consistency_rules"].is_array())
            throw ParseError("consistency_rules must be an array");
        for (const auto& r : j["consistency_rules"])
            sc.consistency_rules.push_back(consistency_rule_from_json(r));
    }

    double theta = 0.2;
    int max_attempts = 5;
    double rate = 1.0;
    if (j.contains("config")) {
        const auto& cfg = j["config"];
        theta = cfg.value("theta", theta);
        max_attempts = cfg.value("max_recovery_attempts", max_attempts);
        rate = cfg.value("sample_rate", rate);
    }
    try {
        sc.config = GateConfig(theta, max_attempts, SamplingPolicy(rate));
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("config: ") + e.what());
    }

    for (const auto& ev : sc.events) {
        if (ev.kind != ScenarioEvent::Kind::submit_action) continue;
        if (!sc.policies.find_policy(ev.action.action_class))
            throw ParseError("no policy for submitted action class " + ev.action.action_class);
    }
    return sc;
}

Scenario parse_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("scenario parse error: ") + e.what());
    }
    return scenario_from_json(j);
}

nlohmann::json scenario_to_json(const Scenario& sc) {
    nlohmann::json j;
    j["seed"] = sc.seed;
    j["horizon"] = sc.horizon;
    nlohmann::json init = nlohmann::json::object();
    for (const auto& [var, v] : sc.initial_state)
        init[var.str()] = nlohmann::json{
            {"value", v.value.to_json()}, {"u", v.uncertainty}, {"observable", v.observable}};
    j["initial_state"] = init;
    auto events = nlohmann::json::array();
    for (const auto& e : sc.events) events.push_back(event_to_json(e));
    j["events"] = events;
    j["policies"] = nlohmann::json::parse(serialize_policy(sc.policies));
    j["config"] = nlohmann::json{{"theta", sc.config.theta_auth},
                                 {"max_recovery_attempts", sc.config.max_recovery_attempts},
                                 {"sample_rate", sc.config.audit_sampling.rate}};
    return j;
}

std::string snapshot_digest(const StateSnapshot& snapshot) {
    std::string payload = snapshot_to_json(snapshot).dump();
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : payload) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[hash & 0xf];
        hash >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

SimEnvironment::SimEnvironment(const Scenario& scenario)
    : horizon_(scenario.horizon), truth_(scenario.initial_state) {
    for (const auto& e : scenario.events)
        if (e.kind != ScenarioEvent::Kind::submit_action) state_events_.push_back(e);
    open_tick_record();
}

StateSnapshot SimEnvironment::current() {
    std::map<VariableId, Observation> obs;
    for (const auto& [var, v] : truth_)
        if (v.observable) obs.emplace(var, Observation(v.value, v.uncertainty));
    return StateSnapshot(tick_, std::move(obs));
}

void SimEnvironment::apply_state_events_at(Tick tick) {
    for (const auto& e : state_events_) {
        if (e.tick != tick) continue;
        auto it = truth_.find(*e.var);
        switch (e.kind) {
            case ScenarioEvent::Kind::set_value:
                if (it == truth_.end())
                    truth_.emplace(*e.var, ScenarioVar{*e.value, 0.0, true});
                else
                    it->second.value = *e.value;
                break;
            case ScenarioEvent::Kind::set_uncertainty:
                if (it != truth_.end()) it->second.uncertainty = e.uncertainty;
                break;
            case ScenarioEvent::Kind::set_observable:
                if (it != truth_.end()) it->second.observable = true;
                break;
            case ScenarioEvent::Kind::set_unobservable:
                if (it != truth_.end()) it->second.observable = false;
                break;
            default: break;
        }
        if (!tick_records_.empty()) tick_records_.back()["applied_events"].push_back(event_to_json(e));
    }
}

void SimEnvironment::open_tick_record() {
    nlohmann::json rec;
    rec["kind"] = "tick";
    rec["tick"] = tick_;
    rec["applied_events"] = nlohmann::json::array();
    rec["admissions"] = nlohmann::json::array();
    rec["decisions"] = nlohmann::json::array();
    rec["effects"] = nlohmann::json::array();
    rec["notes"] = nlohmann::json::array();
    rec["terminals"] = nlohmann::json::array();
    tick_records_.push_back(std::move(rec));
    apply_state_events_at(tick_);
    tick_records_.back()["digest"] = snapshot_digest(current());
}

bool SimEnvironment::advance() {
    if (tick_ >= horizon_) return false;
    ++tick_;
    open_tick_record();
    return true;
}

bool SimEnvironment::request_augmentation(const AugmentationRequest& request) {
    auto focus = nlohmann::json::array();
    for (const auto& var : request.focus) focus.push_back(var.str());
    push_tick_entry("notes", {{"kind", "augmentation_request"},
                              {"focus", focus},
                              {"tick", request.tick},
                              {"accepted", !refuse_augmentation}});
    return !refuse_augmentation;
}

void SimEnvironment::apply_effect(const std::string& action_id) {
    nlohmann::json entry{{"action_id", action_id}, {"tick", tick_}};
    if (effect_probe_) entry["fresh_outcome"] = effect_probe_(current());
    push_tick_entry("effects", std::move(entry));
}

void SimEnvironment::note(const std::string& kind, const nlohmann::json& payload) {
    nlohmann::json entry = payload;
    entry["kind"] = kind;
    push_tick_entry("notes", std::move(entry));
}

void SimEnvironment::push_tick_entry(const char* section, nlohmann::json entry) {
    tick_records_.back()[section].push_back(std::move(entry));
}

void SimEnvironment::set_effect_probe(std::function<nlohmann::json(const StateSnapshot&)> probe) {
    effect_probe_ = std::move(probe);
}

std::vector<nlohmann::json> SimEnvironment::take_tick_records() { return std::move(tick_records_); }

namespace {

// Forwards artifacts to the configured audit sink while echoing compact
// summaries into the trace, unsampled.
class TeeAuditSink : public AuditSink {
public:
    TeeAuditSink(AuditSink& primary, SimEnvironment& env)
        : AuditSink(primary.policy()), primary_(primary), env_(env) {}

    RecordStatus record(const AuditArtifact& artifact, std::optional<ExecState> prev) override {
        nlohmann::json summary{{"action_id", artifact.action_id},
                               {"exec_state", to_string(artifact.exec_state)},
                               {"tick", artifact.tick}};
        if (artifact.code) summary["code"] = to_string(*artifact.code);
        if (artifact.recovery_attempt) summary["recovery_attempt"] = *artifact.recovery_attempt;
        if (artifact.scope_label) summary["scope"] = *artifact.scope_label;
        auto rationale = nlohmann::json::array();
        for (const auto& r : artifact.rationale) rationale.push_back(reason_to_json(r));
        summary["rationale"] = rationale;
        env_.push_tick_entry("decisions", std::move(summary));
        return primary_.record(artifact, prev);
    }

    RecordStatus record_event(const std::string& kind, nlohmann::json fields) override {
        nlohmann::json copy = fields;
        copy["kind"] = kind;
        env_.push_tick_entry("notes", std::move(copy));
        return primary_.record_event(kind, std::move(fields));
    }

private:
    AuditSink& primary_;
    SimEnvironment& env_;
};

struct ActionSchedule {
    ActionRequest req;
    Tick submit = 0;
    Tick execute_at = 0;
};

bool advance_to(SimEnvironment& env, Tick target) {
    while (env.current_tick() < target)
        if (!env.advance()) return false;
    return true;
}

nlohmann::json fresh_probe(const AuthoritySpec& spec, std::span<const ConsistencyRule> rules,
                           double theta, const StateSnapshot& snapshot) {
    try {
        return to_string(oracle_decide(spec.root, snapshot, rules, theta));
    } catch (const std::invalid_argument&) {
        return nullptr;  // beyond the oracle's enumeration budget
    }
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, GateMode mode, const SimOptions& options) {
    GateConfig cfg = scenario.config;
    if (options.sampling_override) cfg.audit_sampling = *options.sampling_override;

    SimEnvironment env(scenario);
    AuditSink audit(cfg.audit_sampling);
    TeeAuditSink tee(audit, env);
    ExecutionGate gate(cfg, &tee);

    std::vector<ActionSchedule> schedule;
    for (const auto& e : scenario.events)
        if (e.kind == ScenarioEvent::Kind::submit_action)
            schedule.push_back(ActionSchedule{e.action, e.tick, e.execute_at});

    RunResult result;
    result.header = nlohmann::json{{"v", 1},
                                   {"kind", "header"},
                                   {"seed", scenario.seed},
                                   {"mode", to_string(mode)},
                                   {"horizon", scenario.horizon},
                                   {"drift_monitoring", options.drift_monitoring}};

    const auto rules = std::span<const ConsistencyRule>(scenario.consistency_rules);

    for (const auto& item : schedule) {
        const AuthoritySpec* spec = scenario.policies.find_policy(item.req.action_class);
        PolicyPrior prior = scenario.policies.prior_for(item.req.action_class);
        env.set_effect_probe([spec, rules, &cfg](const StateSnapshot& snap) {
            return fresh_probe(*spec, rules, cfg.theta_auth, snap);
        });

        ActionTerminal terminal;
        terminal.action_id = item.req.action_id;

        if (!advance_to(env, item.submit)) {
            terminal.outcome = "escalated";
            result.any_escalated = true;
            result.terminals.push_back(terminal);
            continue;
        }

        if (mode == GateMode::reconstructive) {
            EnforceOptions opts;
            opts.drift_monitoring = options.drift_monitoring;
            if (item.execute_at > item.submit) {
                // Deferred execution: evaluate at admission so the window
                // between admission and execution can be re-validated.
                AuthorityOutcome admission = reconstruct_authority(
                    *spec, env.current(), prior, rules, cfg.theta_auth);
                env.push_tick_entry("admissions",
                                    {{"action_id", item.req.action_id},
                                     {"authority", to_string(admission.state)},
                                     {"execute_at", item.execute_at}});
                if (admission.state == AuthorityState::truthy) {
                    opts.baseline_snapshot = env.current();
                    opts.baseline_authority_set = admission.resolution.authority_defining;
                }
                if (!advance_to(env, item.execute_at)) {
                    terminal.outcome = "escalated";
                    result.any_escalated = true;
                    result.terminals.push_back(terminal);
                    continue;
                }
            }
            TerminalOutcome out = enforce(gate, item.req, env, *spec, prior, rules, opts);
            terminal.decision_cycles = out.decision_cycles;
            switch (out.kind) {
                case TerminalOutcome::Kind::executed: terminal.outcome = "executed"; break;
                case TerminalOutcome::Kind::denied: terminal.outcome = "denied"; break;
                case TerminalOutcome::Kind::escalated:
                    terminal.outcome = "escalated";
                    terminal.attempts = out.halt ? out.halt->attempts : 0;
                    result.any_escalated = true;
                    break;
            }
        } else {
            // Snapshot-baseline gate: admit once, cache the first True
            // outcome, execute later without recomputation.
            std::optional<Decision> cached;
            while (true) {
                StateSnapshot snap = env.current();
                AuthorityOutcome outcome =
                    reconstruct_authority(*spec, snap, prior, rules, cfg.theta_auth);
                env.push_tick_entry("admissions", {{"action_id", item.req.action_id},
                                                   {"authority", to_string(outcome.state)},
                                                   {"execute_at", item.execute_at}});
                if (outcome.state == AuthorityState::truthy) {
                    Decision d;
                    d.exec_state = ExecState::execute;
                    d.code = DecisionCode::admit_authority_constructible;
                    d.artifact = build_artifact(item.req, snap, prior, outcome, d.exec_state, d.code,
                                                cfg.theta_auth, std::nullopt);
                    d.outcome = std::move(outcome);
                    cached = std::move(d);
                    break;
                }
                if (env.current_tick() >= item.execute_at) break;
                if (!env.advance()) break;
            }

            if (cached) {
                if (!advance_to(env, item.execute_at)) {
                    terminal.outcome = "escalated";
                    result.any_escalated = true;
                    result.terminals.push_back(terminal);
                    continue;
                }
                // Stale replay: no recomputation at execution time.
                tee.record(cached->artifact, std::nullopt);
                env.push_tick_entry("notes", {{"kind", "stale_replay"},
                                              {"action_id", item.req.action_id},
                                              {"admitted_at", cached->artifact.tick}});
                env.apply_effect(item.req.action_id);
                terminal.outcome = "executed";
            } else {
                // Never admitted before the execution tick: follow the
                // fresh outcome, waiting out halts until the horizon.
                terminal.outcome = "escalated";
                while (true) {
                    StateSnapshot snap = env.current();
                    Decision d = gate.decide(item.req, snap, *spec, prior, rules);
                    if (d.exec_state == ExecState::execute) {
                        env.apply_effect(item.req.action_id);
                        terminal.outcome = "executed";
                        break;
                    }
                    if (d.exec_state == ExecState::deny) {
                        terminal.outcome = "denied";
                        break;
                    }
                    if (!env.advance()) break;
                }
                if (terminal.outcome == "escalated") result.any_escalated = true;
            }
        }
        env.push_tick_entry("terminals", {{"action_id", terminal.action_id},
                                          {"outcome", terminal.outcome},
                                          {"decision_cycles", terminal.decision_cycles}});
        result.terminals.push_back(terminal);
    }

    result.ticks = env.take_tick_records();
    result.audit_text = audit.dump();
    return result;
}

std::string RunResult::trace_jsonl() const {
    std::string out = header.dump();
    out += '\n';
    for (const auto& t : ticks) {
        out += t.dump();
        out += '\n';
    }
    return out;
}

}  // namespace rgate
