#pragma once

#include <map>
#include <span>
#include <vector>

#include "rgate/state.hpp"

namespace rgate {

enum class DriftKind { value_changed, uncertainty_changed, became_unobserved, became_observed };

const char* to_string(DriftKind k);

// Variable-level difference between two snapshots, classified against a
// given authority-defining set.
struct DriftSignal {
    std::map<VariableId, DriftKind> changed;
    std::vector<VariableId> authority_defining_changed;  // subset of changed
    Tick tick = 0;                                       // timestamp of the newer snapshot

    bool empty() const { return changed.empty(); }
    bool touches_authority() const { return !authority_defining_changed.empty(); }
};

struct RecoveryTrigger {
    enum class Cause { drift, observability_gap };
    Cause cause;
    std::vector<VariableId> focus;  // non-empty
    Tick tick;
};

// Deterministic differ. Throws std::invalid_argument when cur does not
// strictly follow prev. If a variable changed in more than one way,
// presence changes win over value changes, value over uncertainty.
DriftSignal detect_drift(const StateSnapshot& prev, const StateSnapshot& cur,
                         std::span<const VariableId> authority_set);

// Emits a trigger when the signal touches a currently-unresolved
// variable during a halt, or touches the authority-defining set at any
// time. Focus is the overlap that justified emission.
std::optional<RecoveryTrigger> emit_trigger(const DriftSignal& signal, bool halted,
                                            std::span<const VariableId> unresolved_vars);

nlohmann::json drift_to_json(const DriftSignal& signal);
nlohmann::json trigger_to_json(const RecoveryTrigger& trigger);

}  // namespace rgate
