#include "rgate/drift.hpp"

#include <algorithm>
#include <stdexcept>

namespace rgate {

const char* to_string(DriftKind k) {
    switch (k) {
        case DriftKind::value_changed: return "value-changed";
        case DriftKind::uncertainty_changed: return "uncertainty-changed";
        case DriftKind::became_unobserved: return "became-unobserved";
        case DriftKind::became_observed: return "became-observed";
    }
    return "?";
}

DriftSignal detect_drift(const StateSnapshot& prev, const StateSnapshot& cur,
                         std::span<const VariableId> authority_set) {
    if (prev.timestamp() >= cur.timestamp())
        throw std::invalid_argument("drift detection requires strictly increasing timestamps");

    DriftSignal signal;
    signal.tick = cur.timestamp();

    for (const auto& [var, obs] : prev.observations()) {
        auto it = cur.observations().find(var);
        if (it == cur.observations().end()) {
            signal.changed.emplace(var, DriftKind::became_unobserved);
        } else if (!(it->second.value == obs.value)) {
            signal.changed.emplace(var, DriftKind::value_changed);
        } else if (it->second.uncertainty != obs.uncertainty) {
            signal.changed.emplace(var, DriftKind::uncertainty_changed);
        }
    }
    for (const auto& [var, obs] : cur.observations()) {
        if (!prev.observations().contains(var)) signal.changed.emplace(var, DriftKind::became_observed);
    }

    for (const auto& var : authority_set)
        if (signal.changed.contains(var)) signal.authority_defining_changed.push_back(var);

    return signal;
}

std::optional<RecoveryTrigger> emit_trigger(const DriftSignal& signal, bool halted,
                                            std::span<const VariableId> unresolved_vars) {
    std::vector<VariableId> focus;
    if (halted) {
        for (const auto& var : unresolved_vars)
            if (signal.changed.contains(var)) focus.push_back(var);
    }
    for (const auto& var : signal.authority_defining_changed)
        if (std::find(focus.begin(), focus.end(), var) == focus.end()) focus.push_back(var);

    if (focus.empty()) return std::nullopt;
    auto cause = signal.touches_authority() ? RecoveryTrigger::Cause::drift
                                            : RecoveryTrigger::Cause::observability_gap;
    return RecoveryTrigger{cause, std::move(focus), signal.tick};
}

nlohmann::json drift_to_json(const DriftSignal& signal) {
    nlohmann::json changed = nlohmann::json::object();
    for (const auto& [var, kind] : signal.changed) changed[var.str()] = to_string(kind);
    auto auth = nlohmann::json::array();
    for (const auto& var : signal.authority_defining_changed) auth.push_back(var.str());
    return nlohmann::json{{"changed", changed}, {"authority_defining_changed", auth}, {"tick", signal.tick}};
}

nlohmann::json trigger_to_json(const RecoveryTrigger& trigger) {
    auto focus = nlohmann::json::array();
    for (const auto& var : trigger.focus) focus.push_back(var.str());
    return nlohmann::json{
        {"cause", trigger.cause == RecoveryTrigger::Cause::drift ? "drift" : "observability-gap"},
        {"focus", focus},
        {"tick", trigger.tick}};
}

}  // namespace rgate
