#pragma once

#include <span>
#include <string>

#include "rgate/audit.hpp"
#include "rgate/authority.hpp"
#include "rgate/codes.hpp"
#include "rgate/drift.hpp"

namespace rgate {

struct ActionRequest {
    std::string action_id;
    std::string action_class;
    std::optional<std::string> scope_label;  // selects a policy-authored narrowed scope
};

struct Decision {
    ExecState exec_state;
    std::optional<DecisionCode> code;  // absent for DENY: denial carries its reasons directly
    AuthorityOutcome outcome;
    AuditArtifact artifact;
    std::optional<std::string> narrowed_to;  // next scope to re-enter with, for NARROW decisions
};

// Table-driven mapping from an authority outcome plus drift context to
// the ternary execution state and decision code. First match wins:
//   1. True, drift only outside the authority set  -> EXECUTE / CONTINUE_BOUNDED
//   2. True, no drift                              -> EXECUTE / ADMIT
//   3. True, drift inside the authority set        -> HALT / REATTESTATION
//   4. False                                       -> DENY (no code)
//   5. Undefined with an open guard                -> HALT / MISSING_REQUIRED_SIGNAL
//   6. Undefined, uncertain (no open guard)        -> HALT / NARROW or UNCERTAINTY
//   7. Undefined otherwise                         -> HALT / NARROW or REQUIRED_DEPENDENCY
std::pair<ExecState, std::optional<DecisionCode>> map_code(const AuthorityOutcome& outcome,
                                                           const DriftSignal& drift,
                                                           bool narrowing_available);

// Raised for malformed requests (unknown action class or scope label).
// No decision is emitted; the event is still audited.
struct GateError : std::runtime_error {
    explicit GateError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

// One gate instance serializes decision-to-effect binding per action and
// owns the write-ahead audit ordering. Decisions are pure functions of
// their inputs; the sink never influences them.
class ExecutionGate {
public:
    ExecutionGate(GateConfig cfg, AuditSink* sink = nullptr);

    // Single decision cycle on exactly one snapshot. The audit artifact
    // is fully populated and recorded before the decision is returned.
    Decision decide(const ActionRequest& req, const StateSnapshot& snapshot, const AuthoritySpec& spec,
                    const PolicyPrior& prior, std::span<const ConsistencyRule> rules,
                    const DriftSignal& drift = {}, std::optional<int> recovery_attempt = std::nullopt);

    // decide(), followed by explicit re-entry while the gate proposes
    // narrower scopes. Each re-entry is its own audited decision cycle.
    Decision decide_cycle(const ActionRequest& req, const StateSnapshot& snapshot,
                          const AuthoritySpec& spec, const PolicyPrior& prior,
                          std::span<const ConsistencyRule> rules, const DriftSignal& drift = {},
                          std::optional<int> recovery_attempt = std::nullopt);

    const GateConfig& config() const { return cfg_; }
    AuditSink* sink() const { return sink_; }
    bool audit_degraded() const { return audit_degraded_; }

private:
    GateConfig cfg_;
    AuditSink* sink_;
    std::optional<ExecState> last_state_;
    bool audit_degraded_ = false;
};

AuditArtifact build_artifact(const ActionRequest& req, const StateSnapshot& snapshot,
                             const PolicyPrior& prior, const AuthorityOutcome& outcome,
                             ExecState exec_state, std::optional<DecisionCode> code, double theta,
                             std::optional<int> recovery_attempt);

nlohmann::json decision_to_json(const Decision& decision);

}  // namespace rgate
