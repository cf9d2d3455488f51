#include "rgate/authority.hpp"

#include <algorithm>
#include <cassert>

namespace rgate {

const char* to_string(AuthorityState s) {
    switch (s) {
        case AuthorityState::truthy: return "True";
        case AuthorityState::falsy: return "False";
        case AuthorityState::undefined: return "Undefined";
    }
    return "?";
}

const char* to_string(Reason::Kind k) {
    switch (k) {
        case Reason::Kind::unobserved_dependency: return "unobserved-dependency";
        case Reason::Kind::uncertain_dependency: return "uncertain-dependency";
        case Reason::Kind::open_guard: return "open-guard";
        case Reason::Kind::inconsistent_dependency: return "inconsistent-dependency";
        case Reason::Kind::constraint_failed: return "constraint-failed";
    }
    return "?";
}

nlohmann::json reason_to_json(const Reason& r) {
    nlohmann::json j;
    j["kind"] = to_string(r.kind);
    if (r.var) j["var"] = r.var->str();
    if (r.kind == Reason::Kind::uncertain_dependency) j["u"] = r.u;
    if (!r.detail.empty()) j["detail"] = r.detail;
    if (r.kind == Reason::Kind::constraint_failed) j["path"] = r.node_path;
    return j;
}

namespace {

bool rule_in_scope(const ConsistencyRule& rule, const std::vector<VariableId>& required) {
    return std::all_of(rule.scope.begin(), rule.scope.end(), [&](const VariableId& v) {
        return std::find(required.begin(), required.end(), v) != required.end();
    });
}

bool predicate_holds(const Predicate& pred, const StateSnapshot& snapshot, double theta) {
    auto status = snapshot.lookup(pred.var);
    if (!is_resolved(status, theta)) return false;
    return eval_predicate(pred, status.observation().value) == PredicateResult::truthy;
}

// Definite evaluation of a constructible tree. Every required variable
// is resolved here, so the only outcomes are truthy/falsy; failing
// leaves and unmatched guards are collected by path.
bool eval_definite(const RuleNode& node, const StateSnapshot& snapshot, std::vector<int>& path,
                   std::vector<Reason>& failures) {
    return std::visit(
        [&](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, LeafNode>) {
                auto result =
                    eval_predicate(n.pred, snapshot.lookup(n.pred.var).observation().value);
                assert(result != PredicateResult::type_conflict);
                if (result == PredicateResult::falsy) {
                    failures.push_back(Reason{Reason::Kind::constraint_failed, n.pred.var, 0.0,
                                              std::string("predicate ") + to_string(n.pred.op) +
                                                  " failed",
                                              path});
                    return false;
                }
                return true;
            } else if constexpr (std::is_same_v<T, AllNode>) {
                bool ok = true;
                for (std::size_t i = 0; i < n.children.size(); ++i) {
                    path.push_back(static_cast<int>(i));
                    ok &= eval_definite(n.children[i], snapshot, path, failures);
                    path.pop_back();
                }
                return ok;
            } else if constexpr (std::is_same_v<T, AnyNode>) {
                std::vector<Reason> branch_failures;
                for (std::size_t i = 0; i < n.children.size(); ++i) {
                    path.push_back(static_cast<int>(i));
                    bool ok = eval_definite(n.children[i], snapshot, path, branch_failures);
                    path.pop_back();
                    if (ok) return true;
                }
                failures.insert(failures.end(), branch_failures.begin(), branch_failures.end());
                return false;
            } else {
                const ObservationStatus selector = snapshot.lookup(n.var);
                const VariableValue& value = selector.observation().value;
                for (std::size_t i = 0; i < n.branches.size(); ++i) {
                    if (n.branches[i].first.matches(value)) {
                        path.push_back(static_cast<int>(i));
                        bool ok = eval_definite(n.branches[i].second, snapshot, path, failures);
                        path.pop_back();
                        return ok;
                    }
                }
                if (n.default_branch) {
                    path.push_back(static_cast<int>(n.branches.size()));
                    bool ok = eval_definite(*n.default_branch, snapshot, path, failures);
                    path.pop_back();
                    return ok;
                }
                failures.push_back(Reason{Reason::Kind::constraint_failed, n.var, 0.0,
                                          "no guard branch matches " + value.canonical(), path});
                return false;
            }
        },
        node.node);
}

}  // namespace

Constructibility check_constructible(const ResolutionResult& res, const StateSnapshot& snapshot,
                                     std::span<const ConsistencyRule> rules, double theta) {
    std::vector<Reason> reasons;

    for (const auto& u : res.unresolved) {
        bool guard = std::find(res.open_guards.begin(), res.open_guards.end(), u.var) !=
                     res.open_guards.end();
        if (guard) {
            reasons.push_back(Reason{Reason::Kind::open_guard, u.var, u.u,
                                     u.cause == UnresolvedCause::unobserved ? "unobserved selector"
                                                                            : "uncertain selector",
                                     {}});
        } else if (u.cause == UnresolvedCause::unobserved) {
            reasons.push_back(Reason{Reason::Kind::unobserved_dependency, u.var, 0.0, "", {}});
        } else {
            reasons.push_back(Reason{Reason::Kind::uncertain_dependency, u.var, u.u, "", {}});
        }
    }

    for (const auto& conflict : res.type_conflicts)
        reasons.push_back(Reason{Reason::Kind::inconsistent_dependency, conflict.var, 0.0,
                                 conflict.detail, conflict.node_path});

    for (const auto& rule : rules) {
        if (!rule_in_scope(rule, res.required)) continue;
        if (predicate_holds(rule.first, snapshot, theta) &&
            predicate_holds(rule.second, snapshot, theta)) {
            for (const auto& var : rule.scope)
                reasons.push_back(
                    Reason{Reason::Kind::inconsistent_dependency, var, 0.0, rule.id, {}});
        }
    }

    return Constructibility{reasons.empty(), std::move(reasons)};
}

AuthorityOutcome reconstruct_authority(const RuleNode& scope, const StateSnapshot& snapshot,
                                       const PolicyPrior& prior, std::span<const ConsistencyRule> rules,
                                       double theta) {
    ResolutionResult res = resolve(scope, snapshot, prior, theta);
    Constructibility c = check_constructible(res, snapshot, rules, theta);
    if (!c.constructible)
        return AuthorityOutcome{AuthorityState::undefined, std::move(c.reasons), std::move(res),
                                snapshot.timestamp()};

    std::vector<Reason> failures;
    std::vector<int> path;
    bool ok = eval_definite(scope, snapshot, path, failures);
    if (ok)
        return AuthorityOutcome{AuthorityState::truthy, {}, std::move(res), snapshot.timestamp()};
    return AuthorityOutcome{AuthorityState::falsy, std::move(failures), std::move(res),
                            snapshot.timestamp()};
}

AuthorityOutcome reconstruct_authority(const AuthoritySpec& spec, const StateSnapshot& snapshot,
                                       const PolicyPrior& prior, std::span<const ConsistencyRule> rules,
                                       double theta) {
    return reconstruct_authority(spec.root, snapshot, prior, rules, theta);
}

}  // namespace rgate
