#pragma once

#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "rgate/state.hpp"
#include "rgate/values.hpp"

namespace rgate {

enum class PredicateOp { eq, neq, lt, le, gt, ge, in_set };

const char* to_string(PredicateOp op);

// Atomic constraint over a single variable against a literal (or a
// literal set for in-set). Ordering ops require a numeric rhs; in-set
// requires a non-empty set. No cross-variable comparison.
struct Predicate {
    Predicate(VariableId v, PredicateOp o, std::vector<VariableValue> r);

    VariableId var;
    PredicateOp op;
    std::vector<VariableValue> rhs;  // exactly one element unless op == in_set

    const VariableValue& single_rhs() const { return rhs.front(); }
};

enum class PredicateResult { truthy, falsy, type_conflict };

// Evaluates the predicate against an observed value. Equality across
// kinds is plain inequality; an ordering op applied to a non-numeric
// observation is a type conflict, surfaced as an inconsistency rather
// than a denial.
PredicateResult eval_predicate(const Predicate& pred, const VariableValue& observed);

// Guard branch key: the raw key string, interpreted as a JSON literal
// when it parses as one (true/false/number), otherwise matching string
// or tag content.
struct GuardKey {
    explicit GuardKey(std::string raw_key);

    std::string raw;
    std::optional<VariableValue> scalar;

    bool matches(const VariableValue& v) const;
    bool operator==(const GuardKey& other) const { return raw == other.raw; }
};

struct RuleNode;

struct LeafNode {
    Predicate pred;
};

struct AllNode {
    std::vector<RuleNode> children;  // non-empty
};

struct AnyNode {
    std::vector<RuleNode> children;  // non-empty
};

// Value switch: the selected branch's subtree only becomes required once
// the guard variable itself resolves. Branches are kept in sorted key
// order; the default branch, when present, is addressed as child index
// branches.size().
struct GuardNode {
    VariableId var;
    std::vector<std::pair<GuardKey, RuleNode>> branches;  // non-empty, keys distinct
    std::shared_ptr<const RuleNode> default_branch;       // may be null
};

struct RuleNode {
    std::variant<LeafNode, AllNode, AnyNode, GuardNode> node;

    static RuleNode leaf(Predicate p);
    static RuleNode all(std::vector<RuleNode> children);
    static RuleNode any(std::vector<RuleNode> children);
    static RuleNode guard(VariableId var, std::vector<std::pair<std::string, RuleNode>> branches,
                          std::optional<RuleNode> default_branch = std::nullopt);
};

// The construction function F for one action class, as a guarded rule
// tree, plus optional policy-authored narrowed scopes ordered widest to
// narrowest.
struct AuthoritySpec {
    std::string action_class;
    RuleNode root;
    std::vector<std::pair<std::string, RuleNode>> narrowed;

    // Node for a scope label; nullptr when the label is unknown. Empty
    // label selects the root.
    const RuleNode* scope_node(const std::optional<std::string>& label) const;

    // Label of the next narrower scope after `label`, if any.
    std::optional<std::string> next_scope(const std::optional<std::string>& label) const;
};

// Candidate variables proposed ahead of resolution. Candidates cannot
// authorize or halt anything on their own.
struct PolicyPrior {
    std::string action_class;
    std::vector<VariableId> candidates;
};

// Invariant pair: the two predicates must not both hold over resolved
// observations. Scope lists every variable the rule reads.
struct ConsistencyRule {
    ConsistencyRule(std::string rule_id, std::vector<VariableId> rule_scope, Predicate a, Predicate b);

    std::string id;
    std::vector<VariableId> scope;  // non-empty
    Predicate first;
    Predicate second;
};

struct PolicyDocument {
    std::vector<AuthoritySpec> policies;
    std::vector<PolicyPrior> priors;
    std::vector<ConsistencyRule> consistency_rules;

    const AuthoritySpec* find_policy(const std::string& action_class) const;
    PolicyPrior prior_for(const std::string& action_class) const;  // empty prior when absent
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t line = 0, std::size_t column = 0);
    std::size_t line;    // 0 when the error is structural, not positional
    std::size_t column;
    std::string located() const;
};

// Total: either returns a document or throws ParseError. Syntax errors
// carry line/column.
PolicyDocument parse_policy(const std::string& text);
std::string serialize_policy(const PolicyDocument& doc);

nlohmann::json rule_node_to_json(const RuleNode& node);
RuleNode rule_node_from_json(const nlohmann::json& j);
nlohmann::json predicate_to_json(const Predicate& p);
Predicate predicate_from_json(const nlohmann::json& j);
nlohmann::json consistency_rule_to_json(const ConsistencyRule& r);
ConsistencyRule consistency_rule_from_json(const nlohmann::json& j);

// Static over-approximation of every variable a walk of `node` could
// visit, on any snapshot. Used for validation and audit only, never for
// gating.
std::set<VariableId> reachable_vars(const RuleNode& node);
std::set<VariableId> reachable_vars(const AuthoritySpec& spec);

}  // namespace rgate
