#pragma once

#include "rgate/environment.hpp"
#include "rgate/gate.hpp"

namespace rgate {

enum class HaltCause { unobserved, uncertain, open_guard, inconsistent };

const char* to_string(HaltCause c);

struct HaltContext {
    ActionRequest action;
    std::vector<std::pair<VariableId, HaltCause>> unresolved;  // deduplicated by variable
    std::optional<DecisionCode> halt_code;
    Tick halt_tick = 0;
    int attempts = 0;
    std::vector<VariableId> authority_defining;  // from the halting outcome's resolution
};

// The variables responsible for an Undefined outcome, deduplicated by
// variable. Throws std::logic_error on a True/False outcome.
std::vector<std::pair<VariableId, HaltCause>> extract_unresolved(const AuthorityOutcome& outcome);

struct RecoveryOutcome {
    enum class Kind { resumed, still_halted, escalated };
    Kind kind;
    std::optional<Decision> decision;  // for resumed (EXECUTE or DENY)
    HaltContext context;               // updated for still_halted / escalated
};

// One recovery attempt: one augmentation request focused on the halt's
// unresolved variables, one tick of the environment, one full fresh
// reconstruction. Old outcomes are never patched or reused.
RecoveryOutcome recovery_step(ExecutionGate& gate, const HaltContext& ctx, EnvironmentHandle& env,
                              const AuthoritySpec& spec, const PolicyPrior& prior,
                              std::span<const ConsistencyRule> rules, bool drift_monitoring = true);

struct TerminalOutcome {
    enum class Kind { executed, denied, escalated };
    Kind kind;
    std::optional<Decision> final_decision;  // executed / denied
    std::optional<HaltContext> halt;         // escalated
    int decision_cycles = 0;                 // loop iterations consumed
};

struct EnforceOptions {
    // Snapshot and authority set from a previous valid (True) evaluation
    // of this action; drives pre-execution re-validation.
    std::optional<StateSnapshot> baseline_snapshot;
    std::vector<VariableId> baseline_authority_set;
    bool drift_monitoring = true;
};

// The enforcement loop: observe, resolve, check constructibility,
// evaluate authority, re-validate against drift, execute, monitor.
// HALT enters the recovery loop, one attempt per tick, bounded by
// cfg.max_recovery_attempts. The effect is applied in the same tick as
// the decision that authorized it.
TerminalOutcome enforce(ExecutionGate& gate, const ActionRequest& req, EnvironmentHandle& env,
                        const AuthoritySpec& spec, const PolicyPrior& prior,
                        std::span<const ConsistencyRule> rules, const EnforceOptions& opts = {});

}  // namespace rgate
