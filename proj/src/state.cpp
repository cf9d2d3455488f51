#include "rgate/state.hpp"

#include <cmath>
#include <stdexcept>

namespace rgate {

Observation::Observation(VariableValue v, double u) : value(std::move(v)), uncertainty(u) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("uncertainty must lie in [0,1]");
}

bool is_resolved(const ObservationStatus& status, double theta) {
    if (!status.is_observed()) return false;
    return status.observation().uncertainty <= theta;
}

StateSnapshot::StateSnapshot(Tick timestamp, std::map<VariableId, Observation> observations)
    : timestamp_(timestamp), observations_(std::move(observations)) {}

ObservationStatus StateSnapshot::lookup(const VariableId& var) const {
    auto it = observations_.find(var);
    if (it == observations_.end()) return ObservationStatus::unobserved();
    return ObservationStatus::observed(it->second);
}

StateSnapshot StateSnapshot::apply_mutation(
    Tick new_timestamp, std::span<const std::pair<VariableId, ObservationStatus>> delta) const {
    if (new_timestamp <= timestamp_)
        throw std::invalid_argument("snapshot timestamps must be strictly increasing");
    std::map<VariableId, Observation> next = observations_;
    for (const auto& [var, status] : delta) {
        if (status.is_observed()) {
            next.insert_or_assign(var, status.observation());
        } else {
            next.erase(var);
        }
    }
    return StateSnapshot(new_timestamp, std::move(next));
}

SamplingPolicy::SamplingPolicy(double r, bool compress) : rate(r), compress_discovery(compress) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("sampling rate must lie in (0,1]");
}

GateConfig::GateConfig(double theta, int max_attempts, SamplingPolicy sampling)
    : theta_auth(theta), max_recovery_attempts(max_attempts), audit_sampling(sampling) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("theta_auth must lie in [0,1]");
    if (max_attempts <= 0) throw std::invalid_argument("max_recovery_attempts must be positive");
}

nlohmann::json snapshot_to_json(const StateSnapshot& snapshot) {
    nlohmann::json j;
    j["t"] = snapshot.timestamp();
    for (const auto& [var, obs] : snapshot.observations()) {
        j[var.str()] = nlohmann::json{{"value", obs.value.to_json()}, {"u", obs.uncertainty}};
    }
    return j;
}

StateSnapshot snapshot_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("state must be a JSON object");
    if (!j.contains("t") || !j["t"].is_number_integer())
        throw std::invalid_argument("state requires an integer timestamp field \"t\"");
    Tick t = j["t"].get<Tick>();
    std::map<VariableId, Observation> obs;
    for (const auto& [key, entry] : j.items()) {
        if (key == "t") continue;
        auto var = VariableId::make(key);
        if (!var) throw std::invalid_argument("malformed variable name: " + key);
        if (!entry.is_object() || !entry.contains("value"))
            throw std::invalid_argument("variable " + key + " requires a {value, u} object");
        double u = 0.0;
        if (entry.contains("u")) {
            if (!entry["u"].is_number()) throw std::invalid_argument("variable " + key + ": u must be a number");
            u = entry["u"].get<double>();
        }
        obs.emplace(*var, Observation(VariableValue::from_json(entry["value"]), u));
    }
    return StateSnapshot(t, std::move(obs));
}

StateSnapshot parse_state(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("state parse error: ") + e.what());
    }
    return snapshot_from_json(j);
}

std::string serialize_state(const StateSnapshot& snapshot) {
    return snapshot_to_json(snapshot).dump(2);
}

}  // namespace rgate
