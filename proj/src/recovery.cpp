#include "rgate/recovery.hpp"

#include <algorithm>
#include <stdexcept>

namespace rgate {

const char* to_string(HaltCause c) {
    switch (c) {
        case HaltCause::unobserved: return "unobserved";
        case HaltCause::uncertain: return "uncertain";
        case HaltCause::open_guard: return "open-guard";
        case HaltCause::inconsistent: return "inconsistent";
    }
    return "?";
}

std::vector<std::pair<VariableId, HaltCause>> extract_unresolved(const AuthorityOutcome& outcome) {
    if (outcome.state != AuthorityState::undefined)
        throw std::logic_error("extract_unresolved requires an Undefined outcome");
    std::vector<std::pair<VariableId, HaltCause>> out;
    auto seen = [&out](const VariableId& var) {
        return std::any_of(out.begin(), out.end(), [&](const auto& e) { return e.first == var; });
    };
    for (const auto& reason : outcome.reasons) {
        std::optional<HaltCause> cause;
        switch (reason.kind) {
            case Reason::Kind::unobserved_dependency: cause = HaltCause::unobserved; break;
            case Reason::Kind::uncertain_dependency: cause = HaltCause::uncertain; break;
            case Reason::Kind::open_guard: cause = HaltCause::open_guard; break;
            case Reason::Kind::inconsistent_dependency: cause = HaltCause::inconsistent; break;
            case Reason::Kind::constraint_failed: break;
        }
        if (!cause || !reason.var || seen(*reason.var)) continue;
        out.emplace_back(*reason.var, *cause);
    }
    return out;
}

namespace {

HaltContext context_from(const ActionRequest& action, const Decision& d, int attempts) {
    HaltContext ctx;
    ctx.action = action;
    ctx.halt_code = d.code;
    ctx.halt_tick = d.outcome.snapshot_timestamp;
    ctx.attempts = attempts;
    ctx.authority_defining = d.outcome.resolution.authority_defining;
    if (d.outcome.state == AuthorityState::undefined) ctx.unresolved = extract_unresolved(d.outcome);
    return ctx;
}

void note_escalation(ExecutionGate& gate, const HaltContext& ctx, Tick tick) {
    if (!gate.sink()) return;
    auto unresolved = nlohmann::json::array();
    for (const auto& [var, cause] : ctx.unresolved)
        unresolved.push_back(nlohmann::json{{"var", var.str()}, {"cause", to_string(cause)}});
    gate.sink()->record_event("escalation", {{"action_id", ctx.action.action_id},
                                             {"tick", tick},
                                             {"attempts", ctx.attempts},
                                             {"unresolved", unresolved}});
}

}  // namespace

RecoveryOutcome recovery_step(ExecutionGate& gate, const HaltContext& ctx, EnvironmentHandle& env,
                              const AuthoritySpec& spec, const PolicyPrior& prior,
                              std::span<const ConsistencyRule> rules, bool drift_monitoring) {
    if (ctx.attempts >= gate.config().max_recovery_attempts) {
        note_escalation(gate, ctx, env.current_tick());
        return RecoveryOutcome{RecoveryOutcome::Kind::escalated, std::nullopt, ctx};
    }

    bool accepted = true;
    if (!ctx.unresolved.empty()) {
        AugmentationRequest request;
        for (const auto& [var, cause] : ctx.unresolved) request.focus.push_back(var);
        request.tick = env.current_tick();
        accepted = env.request_augmentation(request);
        if (!accepted) {
            // Stage-3 fallback hook: revert to the last atomically
            // consistent state. Modeled as a recorded no-op.
            env.note("revert_hook", {{"action_id", ctx.action.action_id}, {"tick", request.tick}});
            if (gate.sink())
                gate.sink()->record_event("revert_hook", {{"action_id", ctx.action.action_id},
                                                          {"tick", request.tick}});
        }
    }

    StateSnapshot before = env.current();
    if (!env.advance()) {
        note_escalation(gate, ctx, env.current_tick());
        return RecoveryOutcome{RecoveryOutcome::Kind::escalated, std::nullopt, ctx};
    }

    if (!accepted) {
        HaltContext next = ctx;
        next.attempts += 1;
        return RecoveryOutcome{RecoveryOutcome::Kind::still_halted, std::nullopt, std::move(next)};
    }

    StateSnapshot snap = env.current();
    if (drift_monitoring) {
        std::vector<VariableId> unresolved_vars;
        for (const auto& [var, cause] : ctx.unresolved) unresolved_vars.push_back(var);
        DriftSignal signal = detect_drift(before, snap, ctx.authority_defining);
        if (auto trigger = emit_trigger(signal, true, unresolved_vars))
            env.note("recovery_trigger", trigger_to_json(*trigger));
    }

    // Full reconstruction on the fresh snapshot. Drift relative to the
    // halted state is the recovery happening, not grounds for
    // re-attestation, so the decision sees no drift signal.
    Decision d = gate.decide_cycle(ctx.action, snap, spec, prior, rules, DriftSignal{},
                                   ctx.attempts + 1);
    if (d.exec_state != ExecState::halt)
        return RecoveryOutcome{RecoveryOutcome::Kind::resumed, std::move(d), ctx};

    HaltContext next = context_from(ctx.action, d, ctx.attempts + 1);
    return RecoveryOutcome{RecoveryOutcome::Kind::still_halted, std::nullopt, std::move(next)};
}

TerminalOutcome enforce(ExecutionGate& gate, const ActionRequest& req, EnvironmentHandle& env,
                        const AuthoritySpec& spec, const PolicyPrior& prior,
                        std::span<const ConsistencyRule> rules, const EnforceOptions& opts) {
    std::optional<std::pair<StateSnapshot, std::vector<VariableId>>> valid_baseline;
    if (opts.baseline_snapshot)
        valid_baseline = {*opts.baseline_snapshot, opts.baseline_authority_set};

    int cycles = 0;
    while (true) {
        StateSnapshot snap = env.current();
        DriftSignal drift;
        if (opts.drift_monitoring && valid_baseline &&
            valid_baseline->first.timestamp() < snap.timestamp())
            drift = detect_drift(valid_baseline->first, snap, valid_baseline->second);
        if (!drift.empty()) env.note("drift_signal", drift_to_json(drift));

        Decision d = gate.decide_cycle(req, snap, spec, prior, rules, drift);
        ++cycles;

        if (d.exec_state == ExecState::execute) {
            // Same tick as the decision; the environment admits no
            // mutation in between.
            env.apply_effect(req.action_id);
            if (opts.drift_monitoring) {
                StateSnapshot after = env.current();
                if (after.timestamp() > snap.timestamp()) {
                    DriftSignal post = detect_drift(snap, after, d.outcome.resolution.authority_defining);
                    if (auto trigger = emit_trigger(post, false, {}))
                        env.note("recovery_trigger", trigger_to_json(*trigger));
                }
            }
            return TerminalOutcome{TerminalOutcome::Kind::executed, std::move(d), std::nullopt, cycles};
        }
        if (d.exec_state == ExecState::deny)
            return TerminalOutcome{TerminalOutcome::Kind::denied, std::move(d), std::nullopt, cycles};

        if (d.code == DecisionCode::halt_reattestation_required) {
            // Authority held but the state moved underneath it; the next
            // cycle re-validates against the snapshot we just saw.
            valid_baseline = {snap, d.outcome.resolution.authority_defining};
            if (!env.advance()) {
                HaltContext ctx = context_from(req, d, 0);
                note_escalation(gate, ctx, env.current_tick());
                return TerminalOutcome{TerminalOutcome::Kind::escalated, std::nullopt, std::move(ctx),
                                       cycles};
            }
            continue;
        }

        // Undefined-rooted halt: hand the action to the recovery loop.
        valid_baseline.reset();
        HaltContext ctx = context_from(req, d, 0);
        while (true) {
            RecoveryOutcome out =
                recovery_step(gate, ctx, env, spec, prior, rules, opts.drift_monitoring);
            if (out.kind == RecoveryOutcome::Kind::resumed) {
                ++cycles;
                Decision resumed = std::move(*out.decision);
                if (resumed.exec_state == ExecState::execute) {
                    env.apply_effect(req.action_id);
                    return TerminalOutcome{TerminalOutcome::Kind::executed, std::move(resumed),
                                           std::nullopt, cycles};
                }
                return TerminalOutcome{TerminalOutcome::Kind::denied, std::move(resumed), std::nullopt,
                                       cycles};
            }
            if (out.kind == RecoveryOutcome::Kind::escalated)
                return TerminalOutcome{TerminalOutcome::Kind::escalated, std::nullopt,
                                       std::move(out.context), cycles};
            ++cycles;
            ctx = std::move(out.context);
        }
    }
}

}  // namespace rgate
