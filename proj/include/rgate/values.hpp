#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace rgate {

using Tick = std::int64_t;

// Identifier for an observable state variable. Dot-separated segments,
// each matching [a-zA-Z_][a-zA-Z0-9_]*.
class VariableId {
public:
    static std::optional<VariableId> make(std::string name);

    // Throws std::invalid_argument on a malformed name. For call sites
    // where the name is known-good (literals, generated ids).
    static VariableId require(std::string name);

    const std::string& str() const { return name_; }

    auto operator<=>(const VariableId&) const = default;

private:
    explicit VariableId(std::string name) : name_(std::move(name)) {}
    std::string name_;
};

enum class ValueKind { boolean, number, text, tag };

// A concrete variable value. Numbers are finite doubles and compare
// exactly; any tolerance belongs in the policy, not here. Enum tags are
// distinct from plain strings and serialize as {"enum": "..."}.
class VariableValue {
public:
    static VariableValue boolean(bool b);
    static VariableValue number(double n);  // throws on NaN/infinity
    static VariableValue text(std::string s);
    static VariableValue tag(std::string s);

    ValueKind kind() const;
    bool as_bool() const { return std::get<bool>(v_); }
    double as_number() const { return std::get<double>(v_); }
    const std::string& as_string() const;  // text or tag content

    bool is_number() const { return kind() == ValueKind::number; }

    bool operator==(const VariableValue& other) const;
    bool operator!=(const VariableValue& other) const { return !(*this == other); }

    // Stable textual rendering; used for digests, guard keys, and trace
    // output. Numbers use shortest round-trip form.
    std::string canonical() const;

    nlohmann::json to_json() const;
    // Throws std::invalid_argument on unsupported json (null, arrays,
    // objects other than {"enum": str}, non-finite numbers).
    static VariableValue from_json(const nlohmann::json& j);

private:
    struct TagBox {
        std::string s;
        bool operator==(const TagBox&) const = default;
    };
    std::variant<bool, double, std::string, TagBox> v_;
};

std::string render_number(double n);

}  // namespace rgate
