#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "rgate/values.hpp"

namespace rgate {

// One observed variable: a value plus its uncertainty in [0,1].
struct Observation {
    Observation(VariableValue v, double u);

    VariableValue value;
    double uncertainty;

    bool operator==(const Observation&) const = default;
};

// Result of looking a variable up in a snapshot. Absence from the
// observation map is the only "unobservable" encoding.
class ObservationStatus {
public:
    static ObservationStatus observed(Observation obs) { return ObservationStatus(std::move(obs)); }
    static ObservationStatus unobserved() { return ObservationStatus(); }

    bool is_observed() const { return obs_.has_value(); }
    const Observation& observation() const { return *obs_; }

    bool operator==(const ObservationStatus&) const = default;

private:
    ObservationStatus() = default;
    explicit ObservationStatus(Observation obs) : obs_(std::move(obs)) {}
    std::optional<Observation> obs_;
};

// true iff the variable is observed and its uncertainty does not exceed
// theta. Equality with theta counts as resolved: only a strictly greater
// uncertainty defeats resolution.
bool is_resolved(const ObservationStatus& status, double theta);

// Immutable view of the observable state at one tick.
class StateSnapshot {
public:
    StateSnapshot(Tick timestamp, std::map<VariableId, Observation> observations);

    Tick timestamp() const { return timestamp_; }
    const std::map<VariableId, Observation>& observations() const { return observations_; }

    ObservationStatus lookup(const VariableId& var) const;

    // Produces a new snapshot at a strictly later tick. Setting a
    // variable Unobserved removes it. Throws std::invalid_argument on a
    // non-monotone timestamp.
    StateSnapshot apply_mutation(Tick new_timestamp,
                                 std::span<const std::pair<VariableId, ObservationStatus>> delta) const;

    bool operator==(const StateSnapshot&) const = default;

private:
    Tick timestamp_;
    std::map<VariableId, Observation> observations_;
};

// Deterministic counter-based audit sampling. Records a HALT or an
// EXECUTE<->HALT boundary unconditionally; otherwise every
// ceil(1/rate)-th eligible record.
struct SamplingPolicy {
    double rate = 1.0;                 // in (0, 1]
    bool compress_discovery = false;   // drop discovery paths, keep codes and uncertainty

    SamplingPolicy() = default;
    explicit SamplingPolicy(double r, bool compress = false);
};

struct GateConfig {
    double theta_auth = 0.2;
    int max_recovery_attempts = 5;
    SamplingPolicy audit_sampling{};

    GateConfig() = default;
    GateConfig(double theta, int max_attempts, SamplingPolicy sampling = {});
};

// State file: {"t": <tick>, "<var>": {"value": ..., "u": ...}, ...}.
// Absent variables are unobservable; "u" defaults to 0. The key "t" is
// reserved for the timestamp. Throws std::invalid_argument with a
// located message on malformed input.
StateSnapshot parse_state(const std::string& text);
std::string serialize_state(const StateSnapshot& snapshot);

nlohmann::json snapshot_to_json(const StateSnapshot& snapshot);
StateSnapshot snapshot_from_json(const nlohmann::json& j);

}  // namespace rgate
