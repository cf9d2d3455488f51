#pragma once

#include <optional>
#include <string>

namespace rgate {

enum class ExecState { execute, deny, halt };

enum class DecisionCode {
    admit_authority_constructible,
    halt_authority_undefined_required_dependency,
    halt_authority_undefined_uncertainty,
    halt_missing_required_signal,
    halt_reattestation_required,
    continue_bounded_non_authority_drift,
    narrow_privilege_reevaluate,
};

const char* to_string(ExecState s);
const char* to_string(DecisionCode c);
std::optional<ExecState> exec_state_from_string(const std::string& s);
std::optional<DecisionCode> decision_code_from_string(const std::string& s);

}  // namespace rgate
