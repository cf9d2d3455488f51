#include "rgate/gate.hpp"

#include <algorithm>

namespace rgate {

namespace {

bool has_reason(const AuthorityOutcome& outcome, Reason::Kind kind) {
    return std::any_of(outcome.reasons.begin(), outcome.reasons.end(),
                       [kind](const Reason& r) { return r.kind == kind; });
}

}  // namespace

std::pair<ExecState, std::optional<DecisionCode>> map_code(const AuthorityOutcome& outcome,
                                                           const DriftSignal& drift,
                                                           bool narrowing_available) {
    switch (outcome.state) {
        case AuthorityState::truthy:
            if (!drift.empty() && !drift.touches_authority())
                return {ExecState::execute, DecisionCode::continue_bounded_non_authority_drift};
            if (drift.empty())
                return {ExecState::execute, DecisionCode::admit_authority_constructible};
            return {ExecState::halt, DecisionCode::halt_reattestation_required};
        case AuthorityState::falsy:
            return {ExecState::deny, std::nullopt};
        case AuthorityState::undefined:
            if (has_reason(outcome, Reason::Kind::open_guard))
                return {ExecState::halt, DecisionCode::halt_missing_required_signal};
            if (has_reason(outcome, Reason::Kind::uncertain_dependency))
                return {ExecState::halt, narrowing_available
                                             ? DecisionCode::narrow_privilege_reevaluate
                                             : DecisionCode::halt_authority_undefined_uncertainty};
            return {ExecState::halt,
                    narrowing_available ? DecisionCode::narrow_privilege_reevaluate
                                        : DecisionCode::halt_authority_undefined_required_dependency};
    }
    return {ExecState::halt, DecisionCode::halt_authority_undefined_required_dependency};
}

AuditArtifact build_artifact(const ActionRequest& req, const StateSnapshot& snapshot,
                             const PolicyPrior& prior, const AuthorityOutcome& outcome,
                             ExecState exec_state, std::optional<DecisionCode> code, double theta,
                             std::optional<int> recovery_attempt) {
    AuditArtifact artifact;
    artifact.tick = snapshot.timestamp();
    artifact.action_id = req.action_id;
    artifact.action_class = req.action_class;
    artifact.prior_candidates = prior.candidates;
    artifact.resolution = outcome.resolution;
    for (const auto& var : outcome.resolution.authority_defining) {
        auto status = snapshot.lookup(var);
        AuditArtifact::UncertaintyEntry entry{var, std::nullopt, is_resolved(status, theta)};
        if (status.is_observed()) entry.u = status.observation().uncertainty;
        artifact.uncertainty_status.push_back(std::move(entry));
    }
    artifact.exec_state = exec_state;
    artifact.code = code;
    artifact.rationale = outcome.reasons;
    artifact.recovery_attempt = recovery_attempt;
    artifact.scope_label = req.scope_label;
    return artifact;
}

ExecutionGate::ExecutionGate(GateConfig cfg, AuditSink* sink) : cfg_(cfg), sink_(sink) {}

Decision ExecutionGate::decide(const ActionRequest& req, const StateSnapshot& snapshot,
                               const AuthoritySpec& spec, const PolicyPrior& prior,
                               std::span<const ConsistencyRule> rules, const DriftSignal& drift,
                               std::optional<int> recovery_attempt) {
    if (spec.action_class != req.action_class) {
        if (sink_)
            sink_->record_event("error", {{"action_id", req.action_id},
                                          {"detail", "policy does not cover action class " +
                                                         req.action_class}});
        throw GateError("no policy for action class " + req.action_class);
    }
    const RuleNode* scope = spec.scope_node(req.scope_label);
    if (!scope) {
        if (sink_)
            sink_->record_event("error", {{"action_id", req.action_id},
                                          {"detail", "unknown scope label " + *req.scope_label}});
        throw GateError("unknown scope label " + *req.scope_label);
    }
    const PolicyPrior& effective_prior =
        prior.action_class == req.action_class ? prior : PolicyPrior{req.action_class, {}};

    AuthorityOutcome outcome =
        reconstruct_authority(*scope, snapshot, effective_prior, rules, cfg_.theta_auth);

    bool narrowing_available = spec.next_scope(req.scope_label).has_value();
    auto [exec_state, code] = map_code(outcome, drift, narrowing_available);

    Decision decision;
    decision.exec_state = exec_state;
    decision.code = code;
    if (code == DecisionCode::narrow_privilege_reevaluate)
        decision.narrowed_to = spec.next_scope(req.scope_label);
    decision.artifact = build_artifact(req, snapshot, effective_prior, outcome, exec_state, code,
                                       cfg_.theta_auth, recovery_attempt);
    decision.outcome = std::move(outcome);

    // Write-ahead: the artifact lands in the log before the decision is
    // reported. A failing sink degrades the log, never the decision.
    if (sink_) {
        RecordStatus status = sink_->record(decision.artifact, last_state_);
        if (status == RecordStatus::failed) audit_degraded_ = true;
    }
    last_state_ = exec_state;
    return decision;
}

Decision ExecutionGate::decide_cycle(const ActionRequest& req, const StateSnapshot& snapshot,
                                     const AuthoritySpec& spec, const PolicyPrior& prior,
                                     std::span<const ConsistencyRule> rules, const DriftSignal& drift,
                                     std::optional<int> recovery_attempt) {
    ActionRequest current = req;
    while (true) {
        Decision d = decide(current, snapshot, spec, prior, rules, drift, recovery_attempt);
        if (d.code != DecisionCode::narrow_privilege_reevaluate || !d.narrowed_to) return d;
        current.scope_label = d.narrowed_to;
    }
}

nlohmann::json decision_to_json(const Decision& decision) {
    nlohmann::json j;
    j["exec_state"] = to_string(decision.exec_state);
    if (decision.code) j["code"] = to_string(*decision.code);
    j["authority"] = to_string(decision.outcome.state);
    auto reasons = nlohmann::json::array();
    for (const auto& r : decision.outcome.reasons) reasons.push_back(reason_to_json(r));
    j["reasons"] = reasons;
    if (decision.narrowed_to) j["narrowed_to"] = *decision.narrowed_to;
    j["artifact"] = artifact_to_json(decision.artifact);
    return j;
}

}  // namespace rgate
