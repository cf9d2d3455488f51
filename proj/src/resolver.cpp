#include "rgate/resolver.hpp"

#include <algorithm>

namespace rgate {

const char* to_string(DiscoveryOrigin origin) {
    switch (origin) {
        case DiscoveryOrigin::prior_candidate: return "prior-candidate";
        case DiscoveryOrigin::leaf_visit: return "leaf-visit";
        case DiscoveryOrigin::guard_visit: return "guard-visit";
    }
    return "?";
}

VarStatus status_of(const ObservationStatus& status, double theta) {
    if (!status.is_observed()) return VarStatus{VarStatus::Kind::unobserved, 0.0};
    double u = status.observation().uncertainty;
    if (u > theta) return VarStatus{VarStatus::Kind::uncertain, u};
    return VarStatus{VarStatus::Kind::resolved, u};
}

std::string node_path_string(const std::vector<int>& path) {
    if (path.empty()) return "/";
    std::string out;
    for (int i : path) out += "/" + std::to_string(i);
    return out;
}

namespace {

// Three-valued node result used only to drive Any short-circuiting
// during discovery. Unresolved or conflicting observations are never
// truthy, so they can never select a disjunct.
enum class WalkValue { truthy, falsy, undecided };

class Walker {
public:
    Walker(const StateSnapshot& snapshot, double theta, ResolutionResult& out)
        : snapshot_(snapshot), theta_(theta), out_(out) {}

    WalkValue walk(const RuleNode& node, std::vector<int>& path) {
        return std::visit([&](const auto& n) { return visit(n, path); }, node.node);
    }

private:
    WalkValue visit(const LeafNode& leaf, std::vector<int>& path) {
        VarStatus status = record_visit(leaf.pred.var, DiscoveryOrigin::leaf_visit, path);
        if (status.kind != VarStatus::Kind::resolved) {
            note_unresolved(leaf.pred.var, status, false);
            return WalkValue::undecided;
        }
        auto result = eval_predicate(leaf.pred, snapshot_.lookup(leaf.pred.var).observation().value);
        if (result == PredicateResult::type_conflict) {
            note_conflict(leaf.pred, path);
            return WalkValue::undecided;
        }
        return result == PredicateResult::truthy ? WalkValue::truthy : WalkValue::falsy;
    }

    WalkValue visit(const AllNode& all, std::vector<int>& path) {
        // Conjunctive dependencies are structural: every child is
        // discovered regardless of sibling outcomes.
        bool any_falsy = false, any_undecided = false;
        for (std::size_t i = 0; i < all.children.size(); ++i) {
            path.push_back(static_cast<int>(i));
            WalkValue v = walk(all.children[i], path);
            path.pop_back();
            any_falsy |= v == WalkValue::falsy;
            any_undecided |= v == WalkValue::undecided;
        }
        if (any_undecided) return WalkValue::undecided;
        return any_falsy ? WalkValue::falsy : WalkValue::truthy;
    }

    WalkValue visit(const AnyNode& any, std::vector<int>& path) {
        // Document order; a truthy child stops discovery so later
        // siblings never become required.
        bool any_undecided = false;
        for (std::size_t i = 0; i < any.children.size(); ++i) {
            path.push_back(static_cast<int>(i));
            WalkValue v = walk(any.children[i], path);
            path.pop_back();
            if (v == WalkValue::truthy) return WalkValue::truthy;
            any_undecided |= v == WalkValue::undecided;
        }
        return any_undecided ? WalkValue::undecided : WalkValue::falsy;
    }

    WalkValue visit(const GuardNode& guard, std::vector<int>& path) {
        VarStatus status = record_visit(guard.var, DiscoveryOrigin::guard_visit, path);
        if (status.kind != VarStatus::Kind::resolved) {
            note_unresolved(guard.var, status, true);
            return WalkValue::undecided;
        }
        const ObservationStatus selector = snapshot_.lookup(guard.var);
        const VariableValue& value = selector.observation().value;
        for (std::size_t i = 0; i < guard.branches.size(); ++i) {
            if (guard.branches[i].first.matches(value)) {
                path.push_back(static_cast<int>(i));
                WalkValue v = walk(guard.branches[i].second, path);
                path.pop_back();
                return v;
            }
        }
        if (guard.default_branch) {
            path.push_back(static_cast<int>(guard.branches.size()));
            WalkValue v = walk(*guard.default_branch, path);
            path.pop_back();
            return v;
        }
        // Resolved selector with no matching branch: evaluable, not
        // granted.
        return WalkValue::falsy;
    }

    VarStatus record_visit(const VariableId& var, DiscoveryOrigin origin, const std::vector<int>& path) {
        VarStatus status = status_of(snapshot_.lookup(var), theta_);
        out_.discovery.push_back(DiscoveryStep{var, origin, path, status});
        if (std::find(out_.required.begin(), out_.required.end(), var) == out_.required.end()) {
            out_.required.push_back(var);
            out_.authority_defining.push_back(var);
            const char* kind = origin == DiscoveryOrigin::guard_visit ? "guard" : "leaf";
            out_.promotions.emplace_back(var, std::string(kind) + "@" + node_path_string(path));
        }
        return status;
    }

    void note_unresolved(const VariableId& var, const VarStatus& status, bool guard) {
        bool seen = std::any_of(out_.unresolved.begin(), out_.unresolved.end(),
                                [&](const UnresolvedVar& u) { return u.var == var; });
        if (!seen) {
            UnresolvedCause cause = status.kind == VarStatus::Kind::unobserved
                                        ? UnresolvedCause::unobserved
                                        : UnresolvedCause::uncertain;
            out_.unresolved.push_back(UnresolvedVar{var, cause, status.u});
        }
        if (guard &&
            std::find(out_.open_guards.begin(), out_.open_guards.end(), var) == out_.open_guards.end())
            out_.open_guards.push_back(var);
    }

    void note_conflict(const Predicate& pred, const std::vector<int>& path) {
        out_.type_conflicts.push_back(TypeConflict{
            pred.var,
            std::string("op ") + to_string(pred.op) + " expects a number, observed " +
                snapshot_.lookup(pred.var).observation().value.canonical(),
            path});
    }

    const StateSnapshot& snapshot_;
    double theta_;
    ResolutionResult& out_;
};

}  // namespace

ResolutionResult resolve(const RuleNode& scope, const StateSnapshot& snapshot, const PolicyPrior& prior,
                         double theta) {
    ResolutionResult out;
    for (const auto& candidate : prior.candidates) {
        out.discovery.push_back(DiscoveryStep{candidate, DiscoveryOrigin::prior_candidate, {},
                                              status_of(snapshot.lookup(candidate), theta)});
    }
    Walker walker(snapshot, theta, out);
    std::vector<int> path;
    walker.walk(scope, path);
    return out;
}

ResolutionResult resolve(const AuthoritySpec& spec, const StateSnapshot& snapshot,
                         const PolicyPrior& prior, double theta) {
    return resolve(spec.root, snapshot, prior, theta);
}

ClosureStatus closure_status(const ResolutionResult& res) {
    if (res.open_guards.empty()) return ClosureStatus{true, {}};
    return ClosureStatus{false, res.open_guards};
}

nlohmann::json resolution_to_json(const ResolutionResult& res) {
    nlohmann::json j;
    auto names = [](const std::vector<VariableId>& vars) {
        auto arr = nlohmann::json::array();
        for (const auto& v : vars) arr.push_back(v.str());
        return arr;
    };
    j["required"] = names(res.required);
    j["authority_defining"] = names(res.authority_defining);
    auto discovery = nlohmann::json::array();
    for (const auto& step : res.discovery) {
        nlohmann::json s;
        s["var"] = step.var.str();
        s["origin"] = to_string(step.origin);
        s["path"] = step.node_path;
        switch (step.status_at_discovery.kind) {
            case VarStatus::Kind::resolved:
                s["status"] = nlohmann::json{{"kind", "resolved"}, {"u", step.status_at_discovery.u}};
                break;
            case VarStatus::Kind::unobserved:
                s["status"] = nlohmann::json{{"kind", "unobserved"}};
                break;
            case VarStatus::Kind::uncertain:
                s["status"] = nlohmann::json{{"kind", "uncertain"}, {"u", step.status_at_discovery.u}};
                break;
        }
        discovery.push_back(s);
    }
    j["discovery"] = discovery;
    auto promotions = nlohmann::json::array();
    for (const auto& [var, reason] : res.promotions)
        promotions.push_back(nlohmann::json::array({var.str(), reason}));
    j["promotions"] = promotions;
    j["open_guards"] = names(res.open_guards);
    auto unresolved = nlohmann::json::array();
    for (const auto& u : res.unresolved) {
        nlohmann::json e;
        e["var"] = u.var.str();
        e["cause"] = u.cause == UnresolvedCause::unobserved ? "unobserved" : "uncertain";
        if (u.cause == UnresolvedCause::uncertain) e["u"] = u.u;
        unresolved.push_back(e);
    }
    j["unresolved"] = unresolved;
    return j;
}

}  // namespace rgate
