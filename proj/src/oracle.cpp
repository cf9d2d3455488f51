#include "rgate/oracle.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace rgate {

const char* to_string(OracleVerdict v) {
    switch (v) {
        case OracleVerdict::exec: return "EXECUTE";
        case OracleVerdict::deny: return "DENY";
        case OracleVerdict::halt: return "HALT";
    }
    return "?";
}

namespace {

// Kleene values as integers: -1 false, 0 unknown, +1 true.
struct Probe {
    std::set<VariableId> touched;
    std::set<VariableId> unresolved;
    std::set<VariableId> open_selectors;
    bool conflict = false;
    int value = 0;

    void absorb(const Probe& other) {
        touched.insert(other.touched.begin(), other.touched.end());
        unresolved.insert(other.unresolved.begin(), other.unresolved.end());
        open_selectors.insert(other.open_selectors.begin(), other.open_selectors.end());
        conflict |= other.conflict;
    }
};

struct ObservedVar {
    bool present = false;
    bool reliable = false;
    const VariableValue* value = nullptr;
};

ObservedVar inspect(const StateSnapshot& snapshot, const VariableId& var, double theta) {
    auto it = snapshot.observations().find(var);
    if (it == snapshot.observations().end()) return {};
    return ObservedVar{true, it->second.uncertainty <= theta, &it->second.value};
}

// The oracle's own predicate check, kept apart from eval_predicate.
// Returns +1/-1, or 0 for an ordering op on a non-numeric value.
int check_pred(const Predicate& pred, const VariableValue& value, bool& conflict) {
    auto equal_any = [&]() {
        return std::any_of(pred.rhs.begin(), pred.rhs.end(),
                           [&](const VariableValue& rhs) { return value == rhs; });
    };
    switch (pred.op) {
        case PredicateOp::eq: return value == pred.rhs.front() ? 1 : -1;
        case PredicateOp::neq: return value == pred.rhs.front() ? -1 : 1;
        case PredicateOp::in_set: return equal_any() ? 1 : -1;
        default: break;
    }
    if (value.kind() != ValueKind::number) {
        conflict = true;
        return 0;
    }
    double a = value.as_number(), b = pred.rhs.front().as_number();
    switch (pred.op) {
        case PredicateOp::lt: return a < b ? 1 : -1;
        case PredicateOp::le: return a <= b ? 1 : -1;
        case PredicateOp::gt: return a > b ? 1 : -1;
        case PredicateOp::ge: return a >= b ? 1 : -1;
        default: return -1;
    }
}

bool key_matches(const GuardKey& key, const VariableValue& value) {
    if (key.scalar) return value == *key.scalar;
    return (value.kind() == ValueKind::text || value.kind() == ValueKind::tag) &&
           value.as_string() == key.raw;
}

Probe probe(const RuleNode& node, const StateSnapshot& snapshot, double theta) {
    return std::visit(
        [&](const auto& n) -> Probe {
            using T = std::decay_t<decltype(n)>;
            Probe p;
            if constexpr (std::is_same_v<T, LeafNode>) {
                p.touched.insert(n.pred.var);
                ObservedVar v = inspect(snapshot, n.pred.var, theta);
                if (!v.present || !v.reliable) {
                    p.unresolved.insert(n.pred.var);
                    p.value = 0;
                    return p;
                }
                p.value = check_pred(n.pred, *v.value, p.conflict);
                return p;
            } else if constexpr (std::is_same_v<T, AllNode>) {
                p.value = 1;
                for (const auto& child : n.children) {
                    Probe cp = probe(child, snapshot, theta);
                    p.absorb(cp);
                    p.value = std::min(p.value, cp.value);
                }
                return p;
            } else if constexpr (std::is_same_v<T, AnyNode>) {
                p.value = -1;
                for (const auto& child : n.children) {
                    Probe cp = probe(child, snapshot, theta);
                    p.absorb(cp);
                    p.value = std::max(p.value, cp.value);
                    if (cp.value == 1) break;  // later disjuncts stay untouched
                }
                return p;
            } else {
                p.touched.insert(n.var);
                ObservedVar v = inspect(snapshot, n.var, theta);
                if (!v.present || !v.reliable) {
                    p.unresolved.insert(n.var);
                    p.open_selectors.insert(n.var);
                    p.value = 0;
                    return p;
                }
                for (const auto& [key, child] : n.branches) {
                    if (key_matches(key, *v.value)) {
                        Probe cp = probe(child, snapshot, theta);
                        p.absorb(cp);
                        p.value = cp.value;
                        return p;
                    }
                }
                if (n.default_branch) {
                    Probe cp = probe(*n.default_branch, snapshot, theta);
                    p.absorb(cp);
                    p.value = cp.value;
                    return p;
                }
                p.value = -1;
                return p;
            }
        },
        node.node);
}

}  // namespace

OracleVerdict oracle_decide(const RuleNode& scope, const StateSnapshot& snapshot,
                            std::span<const ConsistencyRule> rules, double theta) {
    if (reachable_vars(scope).size() > 8)
        throw std::invalid_argument("oracle enumeration budget is eight variables");

    Probe p = probe(scope, snapshot, theta);

    bool observable = p.unresolved.empty();
    bool closed = p.open_selectors.empty();

    bool consistent = !p.conflict;
    for (const auto& rule : rules) {
        bool in_scope = std::all_of(rule.scope.begin(), rule.scope.end(),
                                    [&](const VariableId& v) { return p.touched.contains(v); });
        if (!in_scope) continue;
        bool both = true;
        for (const Predicate* pred : {&rule.first, &rule.second}) {
            ObservedVar v = inspect(snapshot, pred->var, theta);
            bool ignored = false;
            if (!v.present || !v.reliable || check_pred(*pred, *v.value, ignored) != 1) {
                both = false;
                break;
            }
        }
        if (both) consistent = false;
    }

    if (!observable || !closed || !consistent) return OracleVerdict::halt;
    return p.value == 1 ? OracleVerdict::exec : OracleVerdict::deny;
}

OracleVerdict oracle_decide(const AuthoritySpec& spec, const StateSnapshot& snapshot,
                            std::span<const ConsistencyRule> rules, double theta) {
    return oracle_decide(spec.root, snapshot, rules, theta);
}

}  // namespace rgate
