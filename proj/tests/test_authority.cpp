#include <doctest.h>

#include "generators.hpp"
#include "helpers.hpp"
#include "rgate/authority.hpp"
#include "rgate/oracle.hpp"

using namespace rgate;
using namespace rgate::testing;

namespace {

AuthorityOutcome run_worked(char which, const std::vector<ConsistencyRule>& rules = {}) {
    auto doc = worked_example_policy();
    return reconstruct_authority(*doc.find_policy("transfer"), worked_example_state(which),
                                 doc.prior_for("transfer"), rules, 0.2);
}

bool has_kind(const AuthorityOutcome& o, Reason::Kind kind) {
    return std::any_of(o.reasons.begin(), o.reasons.end(),
                       [kind](const Reason& r) { return r.kind == kind; });
}

void check_reason_invariants(const AuthorityOutcome& o) {
    bool undefined_reason =
        has_kind(o, Reason::Kind::unobserved_dependency) ||
        has_kind(o, Reason::Kind::uncertain_dependency) || has_kind(o, Reason::Kind::open_guard) ||
        has_kind(o, Reason::Kind::inconsistent_dependency);
    bool failed = has_kind(o, Reason::Kind::constraint_failed);
    switch (o.state) {
        case AuthorityState::undefined:
            CHECK(undefined_reason);
            CHECK_FALSE(failed);
            break;
        case AuthorityState::falsy:
            CHECK(failed);
            CHECK_FALSE(undefined_reason);
            break;
        case AuthorityState::truthy:
            CHECK(o.reasons.empty());
            break;
    }
}

}  // namespace

TEST_CASE("constructibility over the worked example") {
    auto doc = worked_example_policy();
    const auto& spec = *doc.find_policy("transfer");

    auto a = worked_example_state('a');
    auto res_a = resolve(spec, a, doc.prior_for("transfer"), 0.2);
    CHECK(check_constructible(res_a, a, {}, 0.2).constructible);

    auto c = worked_example_state('c');
    auto res_c = resolve(spec, c, doc.prior_for("transfer"), 0.2);
    auto not_c = check_constructible(res_c, c, {}, 0.2);
    CHECK_FALSE(not_c.constructible);
    REQUIRE(not_c.reasons.size() == 1);
    CHECK(not_c.reasons[0].kind == Reason::Kind::uncertain_dependency);
    CHECK(not_c.reasons[0].var->str() == "x3");
    CHECK(not_c.reasons[0].u == doctest::Approx(0.35));
}

TEST_CASE("empty required set is vacuously constructible") {
    ResolutionResult empty;
    auto snap = make_snapshot(1, {});
    CHECK(check_constructible(empty, snap, {}, 0.2).constructible);
}

TEST_CASE("worked example trichotomy") {
    auto a = run_worked('a');
    CHECK(a.state == AuthorityState::truthy);
    CHECK(a.reasons.empty());
    CHECK(a.snapshot_timestamp == 1);

    auto b = run_worked('b');
    CHECK(b.state == AuthorityState::falsy);
    REQUIRE(b.reasons.size() == 1);
    CHECK(b.reasons[0].kind == Reason::Kind::constraint_failed);
    CHECK(b.reasons[0].node_path == std::vector<int>{1});  // the limit leaf

    auto c = run_worked('c');
    CHECK(c.state == AuthorityState::undefined);
    CHECK(has_kind(c, Reason::Kind::uncertain_dependency));
}

TEST_CASE("consistency violations yield undefined, not denial") {
    auto doc = worked_example_policy();
    // Contradiction: the limit can not be both under 1000 and over 100.
    ConsistencyRule rule("limits_disagree",
                         {VariableId::require("x2")},
                         Predicate(VariableId::require("x2"), PredicateOp::lt,
                                   {VariableValue::number(1000)}),
                         Predicate(VariableId::require("x2"), PredicateOp::gt,
                                   {VariableValue::number(100)}));
    auto outcome = run_worked('a', {rule});
    CHECK(outcome.state == AuthorityState::undefined);
    REQUIRE(has_kind(outcome, Reason::Kind::inconsistent_dependency));
    CHECK(outcome.reasons[0].detail == "limits_disagree");

    // Scope outside the required set: the rule stays silent.
    ConsistencyRule unrelated("elsewhere",
                              {VariableId::require("q")},
                              Predicate(VariableId::require("q"), PredicateOp::gt,
                                        {VariableValue::number(0)}),
                              Predicate(VariableId::require("q"), PredicateOp::lt,
                                        {VariableValue::number(0)}));
    CHECK(run_worked('a', {unrelated}).state == AuthorityState::truthy);
}

TEST_CASE("consistency rules can arrive through the policy document") {
    auto doc = parse_policy(R"({
        "policies": [{"action_class": "transfer",
                      "root": {"leaf": {"var": "x2", "op": "le", "rhs": 1000}}}],
        "priors": [],
        "consistency_rules": [{
            "id": "limits_disagree",
            "scope": ["x2"],
            "first": {"var": "x2", "op": "lt", "rhs": 1000},
            "second": {"var": "x2", "op": "gt", "rhs": 100}}]})");
    REQUIRE(doc.consistency_rules.size() == 1);
    auto snap = make_snapshot(1, {{"x2", num_obs(500)}});
    auto outcome = reconstruct_authority(*doc.find_policy("transfer"), snap, {"transfer", {}},
                                         doc.consistency_rules, 0.2);
    CHECK(outcome.state == AuthorityState::undefined);
    // The document round-trips with its rules attached.
    auto again = parse_policy(serialize_policy(doc));
    CHECK(serialize_policy(again) == serialize_policy(doc));
}

TEST_CASE("ordering against a non-numeric observation is an inconsistency") {
    auto node = RuleNode::leaf(
        Predicate(VariableId::require("x"), PredicateOp::lt, {VariableValue::number(5)}));
    auto snap = make_snapshot(1, {{"x", text_obs("banana")}});
    auto outcome = reconstruct_authority(node, snap, PolicyPrior{"t", {}}, {}, 0.2);
    CHECK(outcome.state == AuthorityState::undefined);
    CHECK(has_kind(outcome, Reason::Kind::inconsistent_dependency));
}

TEST_CASE("denials list every failing node on the walk") {
    auto leaf = [](const char* v, double rhs) {
        return RuleNode::leaf(
            Predicate(VariableId::require(v), PredicateOp::le, {VariableValue::number(rhs)}));
    };
    auto tree = RuleNode::all({leaf("a", 10), leaf("b", 10), leaf("c", 10)});
    auto snap = make_snapshot(1, {{"a", num_obs(99)}, {"b", num_obs(1)}, {"c", num_obs(99)}});
    auto outcome = reconstruct_authority(tree, snap, PolicyPrior{"t", {}}, {}, 0.2);
    REQUIRE(outcome.state == AuthorityState::falsy);
    REQUIRE(outcome.reasons.size() == 2);
    CHECK(outcome.reasons[0].node_path == std::vector<int>{0});
    CHECK(outcome.reasons[1].node_path == std::vector<int>{2});
}

TEST_CASE("a guard value with no branch and no default denies") {
    auto inner = RuleNode::leaf(
        Predicate(VariableId::require("x"), PredicateOp::eq, {VariableValue::number(1)}));
    auto guard = RuleNode::guard(VariableId::require("g"), {{"known", std::move(inner)}});
    auto snap = make_snapshot(1, {{"g", text_obs("surprise")}});
    auto outcome = reconstruct_authority(guard, snap, PolicyPrior{"t", {}}, {}, 0.2);
    CHECK(outcome.state == AuthorityState::falsy);
    REQUIRE(outcome.reasons.size() == 1);
    CHECK(outcome.reasons[0].kind == Reason::Kind::constraint_failed);
}

TEST_CASE("trichotomy and reason invariants hold on random inputs") {
    Rng rng(808);
    for (int i = 0; i < 500; ++i) {
        auto profiles = make_profiles(2 + pick(rng, 4));
        auto spec = gen_spec(rng, profiles);
        auto snapshot = gen_snapshot(rng, profiles);
        auto outcome = reconstruct_authority(spec, snapshot, PolicyPrior{"generated", {}}, {}, 0.2);
        check_reason_invariants(outcome);
        CHECK(outcome.snapshot_timestamp == snapshot.timestamp());
    }
}

TEST_CASE("oracle equivalence on random small inputs") {
    Rng rng(31337);
    for (int i = 0; i < 500; ++i) {
        auto profiles = make_profiles(2 + pick(rng, 3));
        auto spec = gen_spec(rng, profiles);
        auto snapshot = gen_snapshot(rng, profiles);
        auto outcome = reconstruct_authority(spec, snapshot, PolicyPrior{"generated", {}}, {}, 0.2);
        auto verdict = oracle_decide(spec, snapshot, {}, 0.2);
        switch (outcome.state) {
            case AuthorityState::truthy: CHECK(verdict == OracleVerdict::exec); break;
            case AuthorityState::falsy: CHECK(verdict == OracleVerdict::deny); break;
            case AuthorityState::undefined: CHECK(verdict == OracleVerdict::halt); break;
        }
    }
}

TEST_CASE("monotone recovery: resolving the blamed variables clears those reasons") {
    Rng rng(606);
    int exercised = 0;
    for (int i = 0; i < 400 && exercised < 150; ++i) {
        auto profiles = make_profiles(2 + pick(rng, 4));
        auto spec = gen_spec(rng, profiles);
        auto snapshot = gen_snapshot(rng, profiles);
        auto outcome = reconstruct_authority(spec, snapshot, PolicyPrior{"generated", {}}, {}, 0.2);
        if (outcome.state != AuthorityState::undefined) continue;
        ++exercised;

        std::vector<std::pair<VariableId, ObservationStatus>> delta;
        std::vector<std::pair<VariableId, Reason::Kind>> blamed;
        for (const auto& reason : outcome.reasons) {
            if (!reason.var) continue;
            if (reason.kind == Reason::Kind::inconsistent_dependency) continue;
            blamed.emplace_back(*reason.var, reason.kind);
            const VarProfile* profile = nullptr;
            for (const auto& p : profiles)
                if (p.id == *reason.var) profile = &p;
            REQUIRE(profile);
            auto existing = snapshot.lookup(*reason.var);
            VariableValue value =
                existing.is_observed() ? existing.observation().value : profile->pool.front();
            delta.emplace_back(*reason.var, ObservationStatus::observed(Observation(value, 0.0)));
        }
        if (delta.empty()) continue;
        auto next =
            snapshot.apply_mutation(snapshot.timestamp() + 1, delta);
        auto after = reconstruct_authority(spec, next, PolicyPrior{"generated", {}}, {}, 0.2);
        for (const auto& [var, kind] : blamed) {
            bool same_reason =
                std::any_of(after.reasons.begin(), after.reasons.end(), [&](const Reason& r) {
                    return r.kind == kind && r.var && *r.var == var;
                });
            CHECK_FALSE(same_reason);
        }
    }
    CHECK(exercised > 50);
}
