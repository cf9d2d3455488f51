#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rgate/oracle.hpp"
#include "rgate/recovery.hpp"

namespace rgate {

enum class GateMode { reconstructive, snapshot_baseline };

const char* to_string(GateMode m);
std::optional<GateMode> gate_mode_from_string(const std::string& s);

struct ScenarioVar {
    VariableValue value;
    double uncertainty = 0.0;
    bool observable = true;
};

struct ScenarioEvent {
    enum class Kind { set_value, set_uncertainty, set_observable, set_unobservable, submit_action };
    Tick tick = 0;
    Kind kind;
    // state events
    std::optional<VariableId> var;
    std::optional<VariableValue> value;
    double uncertainty = 0.0;
    // submit_action
    ActionRequest action;
    Tick execute_at = 0;
};

// Scripted ground truth: the full variable map S_r(t), an observability
// and uncertainty schedule, and the action attempts. Snapshots handed to
// the gate contain only the observable subset.
struct Scenario {
    std::int64_t seed = 0;
    Tick horizon = 0;
    std::map<VariableId, ScenarioVar> initial_state;
    std::vector<ScenarioEvent> events;  // sorted by tick
    PolicyDocument policies;
    std::vector<ConsistencyRule> consistency_rules;  // merged with the policy document's
    GateConfig config;
};

Scenario parse_scenario(const std::string& text);
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& sc);

// Deterministic single-threaded environment over a scenario. Mutations
// apply only on advance(); within a tick the snapshot is frozen, which
// is the atomic decision-to-effect contract the gate relies on.
class SimEnvironment : public EnvironmentHandle {
public:
    explicit SimEnvironment(const Scenario& scenario);

    Tick current_tick() const override { return tick_; }
    StateSnapshot current() override;
    bool advance() override;
    bool request_augmentation(const AugmentationRequest& request) override;
    void apply_effect(const std::string& action_id) override;
    void note(const std::string& kind, const nlohmann::json& payload) override;

    // Trace hooks used by the runner.
    void push_tick_entry(const char* section, nlohmann::json entry);
    void set_effect_probe(std::function<nlohmann::json(const StateSnapshot&)> probe);
    std::vector<nlohmann::json> take_tick_records();
    Tick horizon() const { return horizon_; }
    bool refuse_augmentation = false;  // test hook

private:
    void open_tick_record();
    void apply_state_events_at(Tick tick);

    Tick tick_ = 0;
    Tick horizon_;
    std::map<VariableId, ScenarioVar> truth_;
    std::vector<ScenarioEvent> state_events_;
    std::size_t next_event_ = 0;
    std::vector<nlohmann::json> tick_records_;
    std::function<nlohmann::json(const StateSnapshot&)> effect_probe_;
};

struct ActionTerminal {
    std::string action_id;
    std::string outcome;  // "executed" | "denied" | "escalated"
    int attempts = 0;
    int decision_cycles = 0;
};

struct RunResult {
    nlohmann::json header;
    std::vector<nlohmann::json> ticks;
    std::string audit_text;
    std::vector<ActionTerminal> terminals;
    bool any_escalated = false;

    std::string trace_jsonl() const;
};

struct SimOptions {
    bool drift_monitoring = true;
    std::optional<SamplingPolicy> sampling_override;
};

// Runs every scripted action attempt through the selected gate mode.
// Reconstructive mode drives the full enforcement loop; the
// snapshot-baseline mode caches the first True outcome per action and
// replays it at execution time without recomputing, which is exactly the
// stale-authority failure it exists to exhibit. Effect applications are
// annotated with an independently recomputed fresh outcome.
RunResult run_scenario(const Scenario& scenario, GateMode mode, const SimOptions& options = {});

std::string snapshot_digest(const StateSnapshot& snapshot);

}  // namespace rgate
