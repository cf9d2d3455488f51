#include "rgate/audit.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace rgate {

const char* to_string(ExecState s) {
    switch (s) {
        case ExecState::execute: return "EXECUTE";
        case ExecState::deny: return "DENY";
        case ExecState::halt: return "HALT";
    }
    return "?";
}

const char* to_string(DecisionCode c) {
    switch (c) {
        case DecisionCode::admit_authority_constructible: return "ADMIT_AUTHORITY_CONSTRUCTIBLE";
        case DecisionCode::halt_authority_undefined_required_dependency:
            return "HALT_AUTHORITY_UNDEFINED_REQUIRED_DEPENDENCY";
        case DecisionCode::halt_authority_undefined_uncertainty:
            return "HALT_AUTHORITY_UNDEFINED_UNCERTAINTY";
        case DecisionCode::halt_missing_required_signal: return "HALT_MISSING_REQUIRED_SIGNAL";
        case DecisionCode::halt_reattestation_required: return "HALT_REATTESTATION_REQUIRED";
        case DecisionCode::continue_bounded_non_authority_drift:
            return "CONTINUE_BOUNDED_NON_AUTHORITY_DRIFT";
        case DecisionCode::narrow_privilege_reevaluate: return "NARROW_PRIVILEGE_REEVALUATE";
    }
    return "?";
}

std::optional<ExecState> exec_state_from_string(const std::string& s) {
    if (s == "EXECUTE") return ExecState::execute;
    if (s == "DENY") return ExecState::deny;
    if (s == "HALT") return ExecState::halt;
    return std::nullopt;
}

std::optional<DecisionCode> decision_code_from_string(const std::string& s) {
    for (auto c : {DecisionCode::admit_authority_constructible,
                   DecisionCode::halt_authority_undefined_required_dependency,
                   DecisionCode::halt_authority_undefined_uncertainty,
                   DecisionCode::halt_missing_required_signal,
                   DecisionCode::halt_reattestation_required,
                   DecisionCode::continue_bounded_non_authority_drift,
                   DecisionCode::narrow_privilege_reevaluate})
        if (s == to_string(c)) return c;
    return std::nullopt;
}

nlohmann::json artifact_to_json(const AuditArtifact& artifact, bool compress_discovery) {
    nlohmann::json j;
    j["v"] = 1;
    j["event"] = "decision";
    j["tick"] = artifact.tick;
    j["action_id"] = artifact.action_id;
    j["action_class"] = artifact.action_class;
    auto priors = nlohmann::json::array();
    for (const auto& v : artifact.prior_candidates) priors.push_back(v.str());
    j["prior_candidates"] = priors;

    nlohmann::json resolution = resolution_to_json(artifact.resolution);
    if (compress_discovery) {
        resolution["discovery"] = nlohmann::json{{"compressed", true},
                                                 {"steps", artifact.resolution.discovery.size()}};
    }
    j["resolution"] = resolution;

    nlohmann::json ustatus = nlohmann::json::object();
    for (const auto& entry : artifact.uncertainty_status) {
        nlohmann::json e;
        e["u"] = entry.u ? nlohmann::json(*entry.u) : nlohmann::json(nullptr);
        e["resolved"] = entry.resolved;
        ustatus[entry.var.str()] = e;
    }
    j["uncertainty_status"] = ustatus;

    j["exec_state"] = to_string(artifact.exec_state);
    if (artifact.code) j["code"] = to_string(*artifact.code);
    auto rationale = nlohmann::json::array();
    for (const auto& r : artifact.rationale) rationale.push_back(reason_to_json(r));
    j["rationale"] = rationale;
    if (artifact.recovery_attempt) j["recovery_attempt"] = *artifact.recovery_attempt;
    if (artifact.scope_label) j["scope"] = *artifact.scope_label;
    return j;
}

AuditSink::AuditSink(SamplingPolicy policy)
    : policy_(policy), period_(static_cast<std::uint64_t>(std::ceil(1.0 / policy.rate))) {}

void AuditSink::ensure_open() {
    if (opened_) return;
    opened_ = true;
    nlohmann::json meta{{"v", 1},
                        {"event", "log_open"},
                        {"rate", policy_.rate},
                        {"compress_discovery", policy_.compress_discovery}};
    if (!write_line(meta.dump())) degraded_ = true;
}

RecordStatus AuditSink::record(const AuditArtifact& artifact, std::optional<ExecState> prev_state) {
    std::lock_guard lock(mutex_);
    ensure_open();
    bool unconditional = artifact.exec_state == ExecState::halt;
    if (prev_state && *prev_state != artifact.exec_state &&
        (*prev_state == ExecState::halt || artifact.exec_state == ExecState::halt))
        unconditional = true;  // boundary transition into or out of HALT

    if (!unconditional) {
        ++eligible_count_;
        if ((eligible_count_ - 1) % period_ != 0) return RecordStatus::sampled_out;
    }

    std::string line = artifact_to_json(artifact, policy_.compress_discovery).dump();
    if (!write_line(line)) {
        degraded_ = true;
        return RecordStatus::failed;
    }
    return RecordStatus::recorded;
}

RecordStatus AuditSink::record_event(const std::string& kind, nlohmann::json fields) {
    std::lock_guard lock(mutex_);
    ensure_open();
    fields["v"] = 1;
    fields["event"] = kind;
    if (!write_line(fields.dump())) {
        degraded_ = true;
        return RecordStatus::failed;
    }
    return RecordStatus::recorded;
}

bool AuditSink::write_line(const std::string& line) {
    lines_.push_back(line);
    return true;
}

std::string AuditSink::dump() const {
    std::string out;
    for (const auto& line : lines_) {
        out += line;
        out += '\n';
    }
    return out;
}

FileAuditSink::FileAuditSink(std::string path, SamplingPolicy policy)
    : AuditSink(policy), path_(std::move(path)) {
    std::ofstream truncate(path_, std::ios::trunc);
}

bool FileAuditSink::write_line(const std::string& line) {
    AuditSink::write_line(line);
    std::ofstream out(path_, std::ios::app);
    if (!out) return false;
    out << line << '\n';
    out.flush();
    return static_cast<bool>(out);
}

VerificationReport verify_log(const std::string& log_text) {
    VerificationReport report;
    std::istringstream in(log_text);
    std::string line;
    std::size_t offset = 0;
    std::size_t last_record_offset = 0;

    struct Trail {
        std::string last_kind;  // "HALT", "EXECUTE", "DENY", "ESCALATED"
        std::size_t last_offset = 0;
    };
    std::map<std::string, Trail> trails;

    auto violation = [&](std::size_t off, std::string kind, std::string detail) {
        report.violations.push_back(LogViolation{off, std::move(kind), std::move(detail)});
    };

    while (std::getline(in, line)) {
        ++offset;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("v") || j["v"] != 1 ||
            !j.contains("event")) {
            violation(offset, "corrupt", "unparseable or missing v/event fields");
            report.safety_ok = false;
            continue;
        }
        std::string event = j["event"].get<std::string>();
        if (event == "log_open") {
            if (j.contains("rate")) report.sample_rate = j["rate"].get<double>();
            continue;
        }
        if (event == "escalation") {
            if (j.contains("action_id"))
                trails[j["action_id"].get<std::string>()] = Trail{"ESCALATED", offset};
            last_record_offset = offset;
            continue;
        }
        if (event != "decision") continue;
        last_record_offset = offset;

        if (!j.contains("exec_state") || !j.contains("action_id") ||
            !j.contains("uncertainty_status") || !j.contains("rationale")) {
            violation(offset, "corrupt", "decision record missing required fields");
            report.safety_ok = false;
            continue;
        }
        auto exec = exec_state_from_string(j["exec_state"].get<std::string>());
        if (!exec) {
            violation(offset, "corrupt", "unknown exec_state");
            report.safety_ok = false;
            continue;
        }
        std::string action = j["action_id"].get<std::string>();
        trails[action] = Trail{j["exec_state"].get<std::string>(), offset};

        if (*exec == ExecState::execute) {
            ++report.execute_records;
            if (!j["rationale"].empty()) {
                violation(offset, "safety", "EXECUTE record carries a rationale");
                report.safety_ok = false;
            }
            for (const auto& [var, st] : j["uncertainty_status"].items()) {
                if (!st.contains("resolved") || st["resolved"] != true) {
                    violation(offset, "safety",
                              "EXECUTE record with unresolved authority-defining variable " + var);
                    report.safety_ok = false;
                }
            }
        } else if (*exec == ExecState::deny) {
            ++report.deny_records;
        } else {
            ++report.halt_records;
        }
    }

    // Lineage: an action left halted is only legal when the log itself
    // ends at that halt; otherwise a resumption or escalation record
    // must exist.
    for (const auto& [action, trail] : trails) {
        if (trail.last_kind == "HALT" && trail.last_offset != last_record_offset) {
            report.lineage_ok = false;
            violation(trail.last_offset, "lineage",
                      "HALT for " + action + " has no subsequent resumption or escalation");
        }
    }
    return report;
}

}  // namespace rgate
