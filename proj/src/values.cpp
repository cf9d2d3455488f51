#include "rgate/values.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace rgate {

namespace {

bool segment_ok(std::string_view seg) {
    if (seg.empty()) return false;
    auto head = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9'); };
    if (!head(seg.front())) return false;
    for (char c : seg.substr(1))
        if (!tail(c)) return false;
    return true;
}

bool name_ok(std::string_view name) {
    if (name.empty()) return false;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = name.find('.', start);
        std::string_view seg = name.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
        if (!segment_ok(seg)) return false;
        if (dot == std::string_view::npos) return true;
        start = dot + 1;
    }
}

}  // namespace

std::optional<VariableId> VariableId::make(std::string name) {
    if (!name_ok(name)) return std::nullopt;
    return VariableId(std::move(name));
}

VariableId VariableId::require(std::string name) {
    auto id = make(std::move(name));
    if (!id) throw std::invalid_argument("malformed variable name");
    return *id;
}

VariableValue VariableValue::boolean(bool b) {
    VariableValue v;
    v.v_ = b;
    return v;
}

VariableValue VariableValue::number(double n) {
    if (!std::isfinite(n)) throw std::invalid_argument("variable values must be finite numbers");
    VariableValue v;
    v.v_ = n;
    return v;
}

VariableValue VariableValue::text(std::string s) {
    VariableValue v;
    v.v_ = std::move(s);
    return v;
}

VariableValue VariableValue::tag(std::string s) {
    VariableValue v;
    v.v_ = TagBox{std::move(s)};
    return v;
}

ValueKind VariableValue::kind() const {
    switch (v_.index()) {
        case 0: return ValueKind::boolean;
        case 1: return ValueKind::number;
        case 2: return ValueKind::text;
        default: return ValueKind::tag;
    }
}

const std::string& VariableValue::as_string() const {
    if (kind() == ValueKind::text) return std::get<std::string>(v_);
    return std::get<TagBox>(v_).s;
}

bool VariableValue::operator==(const VariableValue& other) const {
    return v_ == other.v_;
}

std::string render_number(double n) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), n);
    (void)ec;
    return std::string(buf, ptr);
}

std::string VariableValue::canonical() const {
    switch (kind()) {
        case ValueKind::boolean: return as_bool() ? "true" : "false";
        case ValueKind::number: return render_number(as_number());
        case ValueKind::text:
        case ValueKind::tag: return as_string();
    }
    return {};
}

nlohmann::json VariableValue::to_json() const {
    switch (kind()) {
        case ValueKind::boolean: return as_bool();
        case ValueKind::number: return as_number();
        case ValueKind::text: return as_string();
        case ValueKind::tag: return nlohmann::json{{"enum", as_string()}};
    }
    return {};
}

VariableValue VariableValue::from_json(const nlohmann::json& j) {
    if (j.is_boolean()) return boolean(j.get<bool>());
    if (j.is_number()) return number(j.get<double>());
    if (j.is_string()) return text(j.get<std::string>());
    if (j.is_object() && j.size() == 1 && j.contains("enum") && j["enum"].is_string())
        return tag(j["enum"].get<std::string>());
    throw std::invalid_argument("unsupported value literal: " + j.dump());
}

}  // namespace rgate
