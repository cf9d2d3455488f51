#pragma once

#include <span>

#include "rgate/policy.hpp"
#include "rgate/state.hpp"

namespace rgate {

enum class OracleVerdict { exec, deny, halt };

const char* to_string(OracleVerdict v);

// Independent re-derivation of the execution state for one scope node:
// expands guard branches against the snapshot, collects the touched
// variable set, checks observability, closure, and consistency over it,
// then evaluates the tree three-valued. Implemented apart from the
// resolver and the authority engine on purpose; shares only the data
// types. Refuses (std::invalid_argument) above eight reachable
// variables.
OracleVerdict oracle_decide(const RuleNode& scope, const StateSnapshot& snapshot,
                            std::span<const ConsistencyRule> rules, double theta);

OracleVerdict oracle_decide(const AuthoritySpec& spec, const StateSnapshot& snapshot,
                            std::span<const ConsistencyRule> rules, double theta);

}  // namespace rgate
