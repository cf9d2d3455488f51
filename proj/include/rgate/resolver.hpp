#pragma once

#include <string>
#include <vector>

#include "rgate/policy.hpp"
#include "rgate/state.hpp"

namespace rgate {

enum class DiscoveryOrigin { prior_candidate, leaf_visit, guard_visit };

const char* to_string(DiscoveryOrigin origin);

struct VarStatus {
    enum class Kind { resolved, unobserved, uncertain };
    Kind kind = Kind::resolved;
    double u = 0.0;  // meaningful for resolved/uncertain

    bool operator==(const VarStatus&) const = default;
};

VarStatus status_of(const ObservationStatus& status, double theta);

struct DiscoveryStep {
    VariableId var;
    DiscoveryOrigin origin;
    std::vector<int> node_path;  // child indices from the root; empty for prior candidates
    VarStatus status_at_discovery;

    bool operator==(const DiscoveryStep&) const = default;
};

enum class UnresolvedCause { unobserved, uncertain };

struct UnresolvedVar {
    VariableId var;
    UnresolvedCause cause;
    double u = 0.0;  // for uncertain

    bool operator==(const UnresolvedVar&) const = default;
};

struct TypeConflict {
    VariableId var;
    std::string detail;
    std::vector<int> node_path;

    bool operator==(const TypeConflict&) const = default;
};

// Everything the walk of the rule tree learned: the runtime required set
// R(t), the authority-defining set A_d(t), the discovery log, and which
// required variables could not be resolved. Plain data, deterministic
// field ordering; no failure modes.
struct ResolutionResult {
    std::vector<VariableId> required;            // first-visit order
    std::vector<VariableId> authority_defining;  // promoted set; prior-only candidates excluded
    std::vector<DiscoveryStep> discovery;
    std::vector<std::pair<VariableId, std::string>> promotions;
    std::vector<VariableId> open_guards;      // guard selectors that blocked descent
    std::vector<UnresolvedVar> unresolved;    // deduplicated by variable, first-visit order
    std::vector<TypeConflict> type_conflicts; // ordering op applied to non-numeric observation

    bool operator==(const ResolutionResult&) const = default;
};

// Walks `scope` against the snapshot, seeding discovery from the prior.
// Prior candidates are logged but only enter the authority-defining set
// if the walk itself visits them. A guard whose selector is unresolved
// becomes an open guard and its branches stay undiscovered.
ResolutionResult resolve(const RuleNode& scope, const StateSnapshot& snapshot, const PolicyPrior& prior,
                         double theta);

ResolutionResult resolve(const AuthoritySpec& spec, const StateSnapshot& snapshot,
                         const PolicyPrior& prior, double theta);

struct ClosureStatus {
    bool closed = true;
    std::vector<VariableId> open;  // blocking guard selectors when not closed
};

ClosureStatus closure_status(const ResolutionResult& res);

nlohmann::json resolution_to_json(const ResolutionResult& res);

std::string node_path_string(const std::vector<int>& path);

}  // namespace rgate
