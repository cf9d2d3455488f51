#pragma once

#include <string>
#include <vector>

#include "rgate/state.hpp"

namespace rgate {

struct AugmentationRequest {
    std::vector<VariableId> focus;  // subset of the halt context's unresolved variables
    Tick tick;
};

// What the gate and the recovery loop need from the world: fresh
// snapshots on demand and a tick clock. Within one tick the observable
// state is stable; mutations only apply on advance(). That contract is
// what binds a decision atomically to its effect.
class EnvironmentHandle {
public:
    virtual ~EnvironmentHandle() = default;

    virtual Tick current_tick() const = 0;
    virtual StateSnapshot current() = 0;

    // Moves to the next tick, applying any scheduled mutations. Returns
    // false when the environment has no more ticks to give.
    virtual bool advance() = 0;

    // Asks the acquisition layer to concentrate on the given variables.
    // Returning false means the request was refused.
    virtual bool request_augmentation(const AugmentationRequest& request) = 0;

    // Applies the action's effect at the current tick.
    virtual void apply_effect(const std::string& action_id) = 0;

    // Out-of-band observability note (triggers, hooks); best effort.
    virtual void note(const std::string& kind, const nlohmann::json& payload) {
        (void)kind;
        (void)payload;
    }
};

}  // namespace rgate
