#include "rgate/policy.hpp"

#include <algorithm>
#include <stdexcept>

namespace rgate {

const char* to_string(PredicateOp op) {
    switch (op) {
        case PredicateOp::eq: return "eq";
        case PredicateOp::neq: return "neq";
        case PredicateOp::lt: return "lt";
        case PredicateOp::le: return "le";
        case PredicateOp::gt: return "gt";
        case PredicateOp::ge: return "ge";
        case PredicateOp::in_set: return "in-set";
    }
    return "?";
}

namespace {

std::optional<PredicateOp> op_from_string(const std::string& s) {
    if (s == "eq") return PredicateOp::eq;
    if (s == "neq") return PredicateOp::neq;
    if (s == "lt") return PredicateOp::lt;
    if (s == "le") return PredicateOp::le;
    if (s == "gt") return PredicateOp::gt;
    if (s == "ge") return PredicateOp::ge;
    if (s == "in-set") return PredicateOp::in_set;
    return std::nullopt;
}

bool is_ordering(PredicateOp op) {
    return op == PredicateOp::lt || op == PredicateOp::le || op == PredicateOp::gt ||
           op == PredicateOp::ge;
}

}  // namespace

Predicate::Predicate(VariableId v, PredicateOp o, std::vector<VariableValue> r)
    : var(std::move(v)), op(o), rhs(std::move(r)) {
    if (op == PredicateOp::in_set) {
        if (rhs.empty()) throw std::invalid_argument("in-set requires a non-empty value set");
    } else {
        if (rhs.size() != 1) throw std::invalid_argument("comparison ops take exactly one rhs literal");
        if (is_ordering(op) && !rhs.front().is_number())
            throw std::invalid_argument("ordering ops require a numeric rhs");
    }
}

PredicateResult eval_predicate(const Predicate& pred, const VariableValue& observed) {
    switch (pred.op) {
        case PredicateOp::eq:
            return observed == pred.single_rhs() ? PredicateResult::truthy : PredicateResult::falsy;
        case PredicateOp::neq:
            return observed != pred.single_rhs() ? PredicateResult::truthy : PredicateResult::falsy;
        case PredicateOp::in_set:
            for (const auto& candidate : pred.rhs)
                if (observed == candidate) return PredicateResult::truthy;
            return PredicateResult::falsy;
        default:
            break;
    }
    if (!observed.is_number()) return PredicateResult::type_conflict;
    double lhs = observed.as_number();
    double rhs = pred.single_rhs().as_number();
    bool ok = false;
    switch (pred.op) {
        case PredicateOp::lt: ok = lhs < rhs; break;
        case PredicateOp::le: ok = lhs <= rhs; break;
        case PredicateOp::gt: ok = lhs > rhs; break;
        case PredicateOp::ge: ok = lhs >= rhs; break;
        default: break;
    }
    return ok ? PredicateResult::truthy : PredicateResult::falsy;
}

GuardKey::GuardKey(std::string raw_key) : raw(std::move(raw_key)) {
    auto parsed = nlohmann::json::parse(raw, nullptr, false);
    if (!parsed.is_discarded() && (parsed.is_boolean() || parsed.is_number()))
        scalar = VariableValue::from_json(parsed);
}

bool GuardKey::matches(const VariableValue& v) const {
    if (scalar) return v == *scalar;
    return (v.kind() == ValueKind::text || v.kind() == ValueKind::tag) && v.as_string() == raw;
}

RuleNode RuleNode::leaf(Predicate p) { return RuleNode{LeafNode{std::move(p)}}; }

RuleNode RuleNode::all(std::vector<RuleNode> children) {
    if (children.empty()) throw std::invalid_argument("all requires at least one child");
    return RuleNode{AllNode{std::move(children)}};
}

RuleNode RuleNode::any(std::vector<RuleNode> children) {
    if (children.empty()) throw std::invalid_argument("any requires at least one child");
    return RuleNode{AnyNode{std::move(children)}};
}

RuleNode RuleNode::guard(VariableId var, std::vector<std::pair<std::string, RuleNode>> branches,
                         std::optional<RuleNode> default_branch) {
    if (branches.empty()) throw std::invalid_argument("guard requires at least one branch");
    GuardNode g{std::move(var), {}, nullptr};
    for (auto& [key, node] : branches) g.branches.emplace_back(GuardKey(key), std::move(node));
    std::sort(g.branches.begin(), g.branches.end(),
              [](const auto& a, const auto& b) { return a.first.raw < b.first.raw; });
    for (std::size_t i = 1; i < g.branches.size(); ++i)
        if (g.branches[i].first.raw == g.branches[i - 1].first.raw)
            throw std::invalid_argument("guard branch keys must be pairwise distinct");
    if (default_branch) g.default_branch = std::make_shared<const RuleNode>(std::move(*default_branch));
    return RuleNode{std::move(g)};
}

const RuleNode* AuthoritySpec::scope_node(const std::optional<std::string>& label) const {
    if (!label) return &root;
    for (const auto& [name, node] : narrowed)
        if (name == *label) return &node;
    return nullptr;
}

std::optional<std::string> AuthoritySpec::next_scope(const std::optional<std::string>& label) const {
    if (narrowed.empty()) return std::nullopt;
    if (!label) return narrowed.front().first;
    for (std::size_t i = 0; i + 1 < narrowed.size(); ++i)
        if (narrowed[i].first == *label) return narrowed[i + 1].first;
    return std::nullopt;
}

ConsistencyRule::ConsistencyRule(std::string rule_id, std::vector<VariableId> rule_scope, Predicate a,
                                 Predicate b)
    : id(std::move(rule_id)), scope(std::move(rule_scope)), first(std::move(a)), second(std::move(b)) {
    if (scope.empty()) throw std::invalid_argument("consistency rule scope must be non-empty");
    for (const auto* p : {&first, &second})
        if (std::find(scope.begin(), scope.end(), p->var) == scope.end())
            throw std::invalid_argument("consistency rule predicates must stay within scope");
}

const AuthoritySpec* PolicyDocument::find_policy(const std::string& action_class) const {
    for (const auto& p : policies)
        if (p.action_class == action_class) return &p;
    return nullptr;
}

PolicyPrior PolicyDocument::prior_for(const std::string& action_class) const {
    for (const auto& p : priors)
        if (p.action_class == action_class) return p;
    return PolicyPrior{action_class, {}};
}

ParseError::ParseError(const std::string& msg, std::size_t l, std::size_t c)
    : std::runtime_error(msg), line(l), column(c) {}

std::string ParseError::located() const {
    if (line == 0) return what();
    return std::to_string(line) + ":" + std::to_string(column) + ": " + what();
}

namespace {

VariableId parse_var(const nlohmann::json& j, const char* context) {
    if (!j.is_string()) throw ParseError(std::string(context) + ": variable name must be a string");
    auto var = VariableId::make(j.get<std::string>());
    if (!var) throw ParseError(std::string(context) + ": malformed variable name: " + j.dump());
    return *var;
}

std::pair<std::size_t, std::size_t> locate(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

Predicate predicate_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("var") || !j.contains("op") || !j.contains("rhs"))
        throw ParseError("leaf predicate requires var, op, rhs: " + j.dump());
    auto var = parse_var(j["var"], "predicate");
    if (!j["op"].is_string()) throw ParseError("predicate op must be a string");
    auto op = op_from_string(j["op"].get<std::string>());
    if (!op) throw ParseError("unknown predicate op: " + j["op"].dump());
    std::vector<VariableValue> rhs;
    try {
        if (*op == PredicateOp::in_set) {
            if (!j["rhs"].is_array()) throw ParseError("in-set rhs must be an array");
            for (const auto& e : j["rhs"]) rhs.push_back(VariableValue::from_json(e));
        } else {
            rhs.push_back(VariableValue::from_json(j["rhs"]));
        }
        return Predicate(std::move(var), *op, std::move(rhs));
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("predicate: ") + e.what());
    }
}

nlohmann::json predicate_to_json(const Predicate& p) {
    nlohmann::json j;
    j["var"] = p.var.str();
    j["op"] = to_string(p.op);
    if (p.op == PredicateOp::in_set) {
        auto arr = nlohmann::json::array();
        for (const auto& v : p.rhs) arr.push_back(v.to_json());
        j["rhs"] = arr;
    } else {
        j["rhs"] = p.single_rhs().to_json();
    }
    return j;
}

RuleNode rule_node_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.size() != 1)
        throw ParseError("rule node must be a single-key tagged object: " + j.dump());
    const auto it = j.begin();
    const std::string& tag = it.key();
    const nlohmann::json& body = it.value();
    if (tag == "leaf") return RuleNode::leaf(predicate_from_json(body));
    if (tag == "all" || tag == "any") {
        if (!body.is_array() || body.empty())
            throw ParseError(tag + " requires a non-empty child array");
        std::vector<RuleNode> children;
        for (const auto& c : body) children.push_back(rule_node_from_json(c));
        return tag == "all" ? RuleNode::all(std::move(children)) : RuleNode::any(std::move(children));
    }
    if (tag == "guard") {
        if (!body.is_object() || !body.contains("var") || !body.contains("branches"))
            throw ParseError("guard requires var and branches");
        auto var = parse_var(body["var"], "guard");
        if (!body["branches"].is_object() || body["branches"].empty())
            throw ParseError("guard branches must be a non-empty object");
        std::vector<std::pair<std::string, RuleNode>> branches;
        for (const auto& [key, node] : body["branches"].items())
            branches.emplace_back(key, rule_node_from_json(node));
        std::optional<RuleNode> def;
        if (body.contains("default")) def = rule_node_from_json(body["default"]);
        try {
            return RuleNode::guard(std::move(var), std::move(branches), std::move(def));
        } catch (const std::invalid_argument& e) {
            throw ParseError(std::string("guard: ") + e.what());
        }
    }
    throw ParseError("unknown rule node tag: " + tag);
}

nlohmann::json rule_node_to_json(const RuleNode& node) {
    return std::visit(
        [](const auto& n) -> nlohmann::json {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, LeafNode>) {
                return nlohmann::json{{"leaf", predicate_to_json(n.pred)}};
            } else if constexpr (std::is_same_v<T, AllNode> || std::is_same_v<T, AnyNode>) {
                auto arr = nlohmann::json::array();
                for (const auto& c : n.children) arr.push_back(rule_node_to_json(c));
                return nlohmann::json{{std::is_same_v<T, AllNode> ? "all" : "any", arr}};
            } else {
                nlohmann::json g;
                g["var"] = n.var.str();
                nlohmann::json branches = nlohmann::json::object();
                for (const auto& [key, child] : n.branches) branches[key.raw] = rule_node_to_json(child);
                g["branches"] = branches;
                if (n.default_branch) g["default"] = rule_node_to_json(*n.default_branch);
                return nlohmann::json{{"guard", g}};
            }
        },
        node.node);
}

ConsistencyRule consistency_rule_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("id") || !j.contains("scope") || !j.contains("first") ||
        !j.contains("second"))
        throw ParseError("consistency rule requires id, scope, first, second");
    std::vector<VariableId> scope;
    if (!j["scope"].is_array()) throw ParseError("consistency rule scope must be an array");
    for (const auto& v : j["scope"]) scope.push_back(parse_var(v, "consistency rule"));
    try {
        return ConsistencyRule(j["id"].get<std::string>(), std::move(scope),
                               predicate_from_json(j["first"]), predicate_from_json(j["second"]));
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("consistency rule: ") + e.what());
    }
}

nlohmann::json consistency_rule_to_json(const ConsistencyRule& r) {
    nlohmann::json j;
    j["id"] = r.id;
    auto scope = nlohmann::json::array();
    for (const auto& v : r.scope) scope.push_back(v.str());
    j["scope"] = scope;
    j["first"] = predicate_to_json(r.first);
    j["second"] = predicate_to_json(r.second);
    return j;
}

PolicyDocument parse_policy(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        auto [line, col] = locate(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError(e.what(), line, col);
    }
    if (!j.is_object()) throw ParseError("policy document must be a JSON object");

    PolicyDocument doc;
    if (j.contains("policies")) {
        if (!j["policies"].is_array()) throw ParseError("\"policies\" must be an array");
        for (const auto& p : j["policies"]) {
            if (!p.is_object() || !p.contains("action_class") || !p.contains("root"))
                throw ParseError("policy entry requires action_class and root");
            AuthoritySpec spec{p["action_class"].get<std::string>(), rule_node_from_json(p["root"]), {}};
            if (spec.action_class.empty()) throw ParseError("action_class must be non-empty");
            if (doc.find_policy(spec.action_class))
                throw ParseError("duplicate action_class: " + spec.action_class);
            if (p.contains("narrowed")) {
                if (!p["narrowed"].is_array() || p["narrowed"].empty())
                    throw ParseError("narrowed, when present, must be a non-empty array");
                auto full = reachable_vars(spec.root);
                for (const auto& n : p["narrowed"]) {
                    if (!n.is_object() || !n.contains("label") || !n.contains("node"))
                        throw ParseError("narrowed entry requires label and node");
                    std::string label = n["label"].get<std::string>();
                    RuleNode node = rule_node_from_json(n["node"]);
                    auto vars = reachable_vars(node);
                    bool strict_subset = vars.size() < full.size() &&
                                         std::includes(full.begin(), full.end(), vars.begin(), vars.end());
                    if (!strict_subset)
                        throw ParseError("narrowed scope \"" + label +
                                         "\" must use a strict subset of the root's variables");
                    for (const auto& [existing, _] : spec.narrowed)
                        if (existing == label)
                            throw ParseError("duplicate narrowed scope label: " + label);
                    spec.narrowed.emplace_back(std::move(label), std::move(node));
                }
            }
            doc.policies.push_back(std::move(spec));
        }
    }
    if (j.contains("priors")) {
        if (!j["priors"].is_array()) throw ParseError("\"priors\" must be an array");
        for (const auto& p : j["priors"]) {
            if (!p.is_object() || !p.contains("action_class") || !p.contains("candidates"))
                throw ParseError("prior entry requires action_class and candidates");
            PolicyPrior prior{p["action_class"].get<std::string>(), {}};
            if (!p["candidates"].is_array()) throw ParseError("prior candidates must be an array");
            for (const auto& c : p["candidates"]) prior.candidates.push_back(parse_var(c, "prior"));
            for (const auto& existing : doc.priors)
                if (existing.action_class == prior.action_class)
                    throw ParseError("duplicate prior for action_class: " + prior.action_class);
            doc.priors.push_back(std::move(prior));
        }
    }
    if (j.contains("consistency_rules")) {
        if (!j["consistency_rules"].is_array()) throw ParseError("\"consistency_rules\" must be an array");
        for (const auto& r : j["consistency_rules"])
            doc.consistency_rules.push_back(consistency_rule_from_json(r));
    }
    return doc;
}

std::string serialize_policy(const PolicyDocument& doc) {
    nlohmann::json j;
    auto policies = nlohmann::json::array();
    for (const auto& spec : doc.policies) {
        nlohmann::json p;
        p["action_class"] = spec.action_class;
        p["root"] = rule_node_to_json(spec.root);
        if (!spec.narrowed.empty()) {
            auto narrowed = nlohmann::json::array();
            for (const auto& [label, node] : spec.narrowed)
                narrowed.push_back(nlohmann::json{{"label", label}, {"node", rule_node_to_json(node)}});
            p["narrowed"] = narrowed;
        }
        policies.push_back(p);
    }
    j["policies"] = policies;
    auto priors = nlohmann::json::array();
    for (const auto& prior : doc.priors) {
        auto candidates = nlohmann::json::array();
        for (const auto& c : prior.candidates) candidates.push_back(c.str());
        priors.push_back(nlohmann::json{{"action_class", prior.action_class}, {"candidates", candidates}});
    }
    j["priors"] = priors;
    if (!doc.consistency_rules.empty()) {
        auto rules = nlohmann::json::array();
        for (const auto& r : doc.consistency_rules) rules.push_back(consistency_rule_to_json(r));
        j["consistency_rules"] = rules;
    }
    return j.dump(2);
}

namespace {

void collect_vars(const RuleNode& node, std::set<VariableId>& out) {
    std::visit(
        [&out](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, LeafNode>) {
                out.insert(n.pred.var);
            } else if constexpr (std::is_same_v<T, AllNode> || std::is_same_v<T, AnyNode>) {
                for (const auto& c : n.children) collect_vars(c, out);
            } else {
                out.insert(n.var);
                for (const auto& [key, child] : n.branches) collect_vars(child, out);
                if (n.default_branch) collect_vars(*n.default_branch, out);
            }
        },
        node.node);
}

}  // namespace

std::set<VariableId> reachable_vars(const RuleNode& node) {
    std::set<VariableId> out;
    collect_vars(node, out);
    return out;
}

std::set<VariableId> reachable_vars(const AuthoritySpec& spec) { return reachable_vars(spec.root); }

}  // namespace rgate
