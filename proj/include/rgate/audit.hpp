#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rgate/authority.hpp"
#include "rgate/codes.hpp"

namespace rgate {

// The per-attempt audit record: timestamp and action, prior candidates,
// runtime required set with discovery path, promotions, per-variable
// uncertainty status, final code and rationale.
struct AuditArtifact {
    Tick tick = 0;
    std::string action_id;
    std::string action_class;
    std::vector<VariableId> prior_candidates;
    ResolutionResult resolution;  // required set, discovery path, promotions
    struct UncertaintyEntry {
        VariableId var;
        std::optional<double> u;  // absent when unobserved
        bool resolved;
    };
    std::vector<UncertaintyEntry> uncertainty_status;  // one per authority-defining variable
    ExecState exec_state = ExecState::halt;
    std::optional<DecisionCode> code;
    std::vector<Reason> rationale;
    std::optional<int> recovery_attempt;
    std::optional<std::string> scope_label;
};

nlohmann::json artifact_to_json(const AuditArtifact& artifact, bool compress_discovery = false);

enum class RecordStatus { recorded, sampled_out, failed };

// Append-only JSON Lines sink. One structured record per line, "v":1 on
// every record. HALT artifacts and transitions into or out of HALT
// bypass sampling; other records pass a deterministic counter. Escalation
// and log-open events are written unconditionally. Single serialized
// writer; safe for concurrent gates.
class AuditSink {
public:
    explicit AuditSink(SamplingPolicy policy = {});
    virtual ~AuditSink() = default;

    virtual RecordStatus record(const AuditArtifact& artifact, std::optional<ExecState> prev_state);
    virtual RecordStatus record_event(const std::string& kind, nlohmann::json fields);

    const std::vector<std::string>& lines() const { return lines_; }
    std::string dump() const;
    bool degraded() const { return degraded_; }
    const SamplingPolicy& policy() const { return policy_; }

protected:
    // Returns false on write failure (sink degraded, decision unaffected).
    virtual bool write_line(const std::string& line);

private:
    SamplingPolicy policy_;
    std::uint64_t eligible_count_ = 0;
    std::uint64_t period_;
    bool opened_ = false;
    bool degraded_ = false;
    std::vector<std::string> lines_;
    std::mutex mutex_;

    void ensure_open();
};

// Sink that also appends every line to a file, flushing per record
// (write-ahead: the record is durable before the decision is reported).
class FileAuditSink : public AuditSink {
public:
    FileAuditSink(std::string path, SamplingPolicy policy = {});

protected:
    bool write_line(const std::string& line) override;

private:
    std::string path_;
};

struct LogViolation {
    std::size_t record_offset;  // 1-based line number
    std::string kind;
    std::string detail;
};

struct VerificationReport {
    bool safety_ok = true;
    bool lineage_ok = true;
    std::vector<LogViolation> violations;
    std::size_t halt_records = 0;
    std::size_t execute_records = 0;
    std::size_t deny_records = 0;
    std::optional<double> sample_rate;  // from the log-open record, when present
};

// Post-hoc log verification: safety (no EXECUTE record carries a
// rationale or an unresolved authority-defining variable) and lineage
// (every HALT is eventually followed, per action, by a definite decision
// or an escalation, unless the action's log ends in HALT). Corrupt lines
// are violations with their offsets.
VerificationReport verify_log(const std::string& log_text);

}  // namespace rgate
