#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "rgate/policy.hpp"
#include "rgate/state.hpp"

namespace rgate::testing {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline std::string fixture_path(const std::string& name) {
    return std::string(RGATE_FIXTURE_DIR) + "/" + name;
}

inline std::string fixture(const std::string& name) { return read_file(fixture_path(name)); }

// The worked example: account status, transaction limit, risk indicator,
// theta 0.2.
inline PolicyDocument worked_example_policy() {
    return parse_policy(fixture("worked_example_policy.json"));
}

inline StateSnapshot worked_example_state(char which) {
    switch (which) {
        case 'a': return parse_state(fixture("state_a.json"));
        case 'b': return parse_state(fixture("state_b.json"));
        default: return parse_state(fixture("state_c.json"));
    }
}

inline StateSnapshot make_snapshot(Tick t,
                                   std::initializer_list<std::pair<const char*, Observation>> vars) {
    std::map<VariableId, Observation> obs;
    for (const auto& [name, o] : vars) obs.emplace(VariableId::require(name), o);
    return StateSnapshot(t, std::move(obs));
}

inline Observation num_obs(double value, double u = 0.0) {
    return Observation(VariableValue::number(value), u);
}

inline Observation text_obs(const char* value, double u = 0.0) {
    return Observation(VariableValue::text(value), u);
}

}  // namespace rgate::testing
