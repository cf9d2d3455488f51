#pragma once

#include <span>
#include <string>
#include <vector>

#include "rgate/resolver.hpp"

namespace rgate {

enum class AuthorityState { truthy, falsy, undefined };

const char* to_string(AuthorityState s);

// Why an outcome is what it is. The first four kinds mark
// non-constructibility (state undefined); constraint_failed marks a
// definite denial.
struct Reason {
    enum class Kind {
        unobserved_dependency,
        uncertain_dependency,
        open_guard,
        inconsistent_dependency,
        constraint_failed,
    };

    Kind kind;
    std::optional<VariableId> var;  // failing variable when one is implicated
    double u = 0.0;                 // for uncertain_dependency
    std::string detail;             // rule id or conflict description
    std::vector<int> node_path;     // failing node for constraint_failed

    bool operator==(const Reason&) const = default;
};

const char* to_string(Reason::Kind k);
nlohmann::json reason_to_json(const Reason& r);

struct AuthorityOutcome {
    AuthorityState state;
    std::vector<Reason> reasons;
    ResolutionResult resolution;
    Tick snapshot_timestamp;
};

struct Constructibility {
    bool constructible;
    std::vector<Reason> reasons;  // empty iff constructible
};

// Definition-level check: every required variable resolved, no open
// guards, no fired consistency rule whose scope lies inside the required
// set, no type conflicts.
Constructibility check_constructible(const ResolutionResult& res, const StateSnapshot& snapshot,
                                     std::span<const ConsistencyRule> rules, double theta);

// Full reconstruction for one scope node: resolve, check
// constructibility, and only then evaluate the tree to a definite
// True/False. Exactly one snapshot is consulted and its timestamp is
// recorded on the outcome.
AuthorityOutcome reconstruct_authority(const RuleNode& scope, const StateSnapshot& snapshot,
                                       const PolicyPrior& prior, std::span<const ConsistencyRule> rules,
                                       double theta);

AuthorityOutcome reconstruct_authority(const AuthoritySpec& spec, const StateSnapshot& snapshot,
                                       const PolicyPrior& prior, std::span<const ConsistencyRule> rules,
                                       double theta);

}  // namespace rgate
