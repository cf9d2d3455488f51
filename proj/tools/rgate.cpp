#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rgate/gate.hpp"
#include "rgate/recovery.hpp"
#include "rgate/sim.hpp"

namespace {

constexpr int kExitExecute = 0;
constexpr int kExitDeny = 1;
constexpr int kExitHalt = 2;
constexpr int kExitEscalated = 3;
constexpr int kExitVerifyFailed = 4;
constexpr int kExitParse = 64;
constexpr int kExitUsage = 65;
constexpr int kExitIo = 66;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot write " + path);
    out << text;
}

double resolve_theta(const CLI::Option* theta_opt, double theta_flag, double fallback) {
    if (theta_opt->count() > 0) return theta_flag;
    if (const char* env = std::getenv("RGATE_THETA")) {
        try {
            return std::stod(env);
        } catch (const std::exception&) {
            throw std::invalid_argument("RGATE_THETA is not a number");
        }
    }
    return fallback;
}

void maybe_stamp(nlohmann::json& j, bool timestamp) {
    if (!timestamp) return;
    j["generated_at"] = static_cast<std::int64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
}

int run_evaluate(const std::string& policy_path, const std::string& state_path,
                 const std::string& action_class, const CLI::Option* theta_opt, double theta_flag,
                 int max_recovery, double sample_rate, const std::string& audit_out,
                 bool timestamp) {
    auto doc = rgate::parse_policy(read_file(policy_path));
    auto snapshot = rgate::parse_state(read_file(state_path));
    const auto* spec = doc.find_policy(action_class);
    if (!spec) {
        std::cerr << "error: no policy for action class " << action_class << "\n";
        return kExitUsage;
    }
    double theta = resolve_theta(theta_opt, theta_flag, 0.2);
    rgate::GateConfig cfg(theta, max_recovery, rgate::SamplingPolicy(sample_rate));

    std::unique_ptr<rgate::FileAuditSink> sink;
    if (!audit_out.empty())
        sink = std::make_unique<rgate::FileAuditSink>(audit_out, cfg.audit_sampling);

    rgate::ExecutionGate gate(cfg, sink.get());
    rgate::ActionRequest req{"cli-evaluate", action_class, std::nullopt};
    auto decision = gate.decide_cycle(req, snapshot, *spec, doc.prior_for(action_class),
                                      doc.consistency_rules);

    auto out = rgate::decision_to_json(decision);
    maybe_stamp(out, timestamp);
    std::cout << out.dump() << "\n";
    switch (decision.exec_state) {
        case rgate::ExecState::execute: return kExitExecute;
        case rgate::ExecState::deny: return kExitDeny;
        case rgate::ExecState::halt: return kExitHalt;
    }
    return kExitUsage;
}

int run_simulate(const std::string& scenario_path, const std::string& mode_name,
                 const std::string& audit_out, const std::string& trace_out,
                 const CLI::Option* theta_opt, double theta_flag, const CLI::Option* rate_opt,
                 double sample_rate, const CLI::Option* recovery_opt, int max_recovery,
                 bool no_drift_monitor, bool timestamp) {
    auto scenario = rgate::parse_scenario(read_file(scenario_path));
    auto mode = rgate::gate_mode_from_string(mode_name);
    if (!mode) {
        std::cerr << "error: unknown mode " << mode_name << "\n";
        return kExitUsage;
    }
    double theta = resolve_theta(theta_opt, theta_flag, scenario.config.theta_auth);
    int attempts = recovery_opt->count() > 0 ? max_recovery : scenario.config.max_recovery_attempts;
    double rate = rate_opt->count() > 0 ? sample_rate : scenario.config.audit_sampling.rate;
    scenario.config = rgate::GateConfig(theta, attempts, rgate::SamplingPolicy(rate));

    rgate::SimOptions options;
    options.drift_monitoring = !no_drift_monitor;
    auto run = rgate::run_scenario(scenario, *mode, options);

    if (!audit_out.empty()) write_file(audit_out, run.audit_text);
    if (!trace_out.empty()) write_file(trace_out, run.trace_jsonl());

    nlohmann::json summary;
    summary["mode"] = rgate::to_string(*mode);
    auto terminals = nlohmann::json::array();
    for (const auto& t : run.terminals)
        terminals.push_back(nlohmann::json{{"action_id", t.action_id},
                                           {"outcome", t.outcome},
                                           {"decision_cycles", t.decision_cycles}});
    summary["terminals"] = terminals;
    summary["escalated"] = run.any_escalated;
    maybe_stamp(summary, timestamp);
    std::cout << summary.dump() << "\n";
    return run.any_escalated ? kExitEscalated : kExitExecute;
}

int run_replay_verify(const std::string& log_path, bool timestamp) {
    auto report = rgate::verify_log(read_file(log_path));
    nlohmann::json out;
    out["safety_ok"] = report.safety_ok;
    out["lineage_ok"] = report.lineage_ok;
    out["halt_records"] = report.halt_records;
    out["execute_records"] = report.execute_records;
    out["deny_records"] = report.deny_records;
    if (report.sample_rate && *report.sample_rate < 1.0) {
        out["sampled"] = true;
        out["sample_rate"] = *report.sample_rate;
    }
    auto violations = nlohmann::json::array();
    for (const auto& v : report.violations)
        violations.push_back(nlohmann::json{
            {"offset", v.record_offset}, {"kind", v.kind}, {"detail", v.detail}});
    out["violations"] = violations;
    maybe_stamp(out, timestamp);
    std::cout << out.dump() << "\n";
    bool ok = report.safety_ok && report.lineage_ok && report.violations.empty();
    return ok ? kExitExecute : kExitVerifyFailed;
}

std::string status_line(const nlohmann::json& status) {
    if (!status.is_object()) return "?";
    std::string kind = status.value("kind", "?");
    if (kind == "resolved" || kind == "uncertain") {
        double u = status.value("u", 0.0);
        return kind + " (u=" + rgate::render_number(u) + ")";
    }
    return kind;
}

int run_explain(const std::string& audit_path, int index) {
    std::istringstream in(read_file(audit_path));
    std::string line;
    std::vector<nlohmann::json> decisions;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (!j.is_discarded() && j.value("event", "") == "decision") decisions.push_back(j);
    }
    if (decisions.empty()) {
        std::cerr << "error: no decision records in " << audit_path << "\n";
        return kExitUsage;
    }
    std::size_t i = index < 0 ? decisions.size() - 1 : static_cast<std::size_t>(index);
    if (i >= decisions.size()) {
        std::cerr << "error: record index out of range (log has " << decisions.size()
                  << " decisions)\n";
        return kExitUsage;
    }
    const auto& rec = decisions[i];

    std::ostringstream out;
    out << "action " << rec.value("action_id", "?") << " (" << rec.value("action_class", "?")
        << ") @ tick " << rec.value("tick", 0) << " -> " << rec.value("exec_state", "?");
    if (rec.contains("code")) out << " [" << rec["code"].get<std::string>() << "]";
    if (rec.contains("scope")) out << " scope=" << rec["scope"].get<std::string>();
    if (rec.contains("recovery_attempt")) out << " (recovery attempt " << rec["recovery_attempt"] << ")";
    out << "\n";

    out << "  prior candidates:";
    if (rec["prior_candidates"].empty()) out << " (none)";
    for (const auto& c : rec["prior_candidates"]) out << " " << c.get<std::string>();
    out << "\n";

    const auto& resolution = rec["resolution"];
    out << "  discovery:\n";
    if (resolution["discovery"].is_array()) {
        for (const auto& step : resolution["discovery"]) {
            std::string path = "/";
            for (const auto& p : step["path"]) path += std::to_string(p.get<int>()) + "/";
            if (path.size() > 1) path.pop_back();
            out << "    " << step["var"].get<std::string>() << "  " << step["origin"].get<std::string>()
                << " @ " << path << "  " << status_line(step["status"]) << "\n";
        }
    } else {
        out << "    (compressed: " << resolution["discovery"].value("steps", 0) << " steps)\n";
    }

    out << "  promoted into the authority-defining set:\n";
    for (const auto& p : resolution["promotions"])
        out << "    " << p[0].get<std::string>() << "  because " << p[1].get<std::string>() << "\n";

    out << "  uncertainty status:\n";
    for (const auto& [var, st] : rec["uncertainty_status"].items()) {
        out << "    " << var << "  ";
        if (st["u"].is_null())
            out << "unobserved";
        else
            out << "u=" << rgate::render_number(st["u"].get<double>());
        out << (st["resolved"].get<bool>() ? "  resolved" : "  UNRESOLVED") << "\n";
    }

    out << "  rationale:";
    if (rec["rationale"].empty()) out << " (none: authority constructible and valid)";
    out << "\n";
    for (const auto& r : rec["rationale"]) {
        out << "    " << r["kind"].get<std::string>();
        if (r.contains("var")) out << " " << r["var"].get<std::string>();
        if (r.contains("u")) out << " (u=" << rgate::render_number(r["u"].get<double>()) << ")";
        if (r.contains("detail")) out << ": " << r["detail"].get<std::string>();
        if (r.contains("path")) {
            out << " at /";
            for (std::size_t k = 0; k < r["path"].size(); ++k) {
                if (k) out << "/";
                out << r["path"][k].get<int>();
            }
        }
        out << "\n";
    }
    std::cout << out.str();
    return kExitExecute;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rgate: runtime authority enforcement gate"};
    app.require_subcommand(1);

    std::string policy_path, state_path, action_class, scenario_path, audit_path;
    std::string mode_name = "reconstructive";
    std::string audit_out, trace_out;
    double theta = 0.2, sample_rate = 1.0;
    int max_recovery = 5, explain_index = -1;
    bool no_drift_monitor = false, timestamp = false;

    app.add_flag("--timestamp", timestamp, "attach a wall-clock timestamp to the output");

    auto* evaluate = app.add_subcommand("evaluate", "decide one action against one state snapshot");
    evaluate->add_option("--policy", policy_path, "policy document")->required();
    evaluate->add_option("--state", state_path, "state snapshot file")->required();
    evaluate->add_option("--action", action_class, "action class to evaluate")->required();
    auto* eval_theta = evaluate->add_option("--theta", theta, "authority-resolution threshold");
    evaluate->add_option("--max-recovery", max_recovery, "recovery attempt bound");
    evaluate->add_option("--sample-rate", sample_rate, "audit sampling rate");
    evaluate->add_option("--audit-out", audit_out, "append-only audit log path");

    auto* simulate = app.add_subcommand("simulate", "run a scripted scenario");
    simulate->add_option("scenario", scenario_path, "scenario file")->required();
    simulate->add_option("--mode", mode_name, "reconstructive | snapshot-baseline");
    simulate->add_option("--audit-out", audit_out, "write the audit log here");
    simulate->add_option("--trace-out", trace_out, "write the tick trace here");
    auto* sim_theta = simulate->add_option("--theta", theta, "override the scenario threshold");
    auto* sim_rate = simulate->add_option("--sample-rate", sample_rate, "override audit sampling");
    auto* sim_recovery =
        simulate->add_option("--max-recovery", max_recovery, "override the attempt bound");
    simulate->add_flag("--no-drift-monitor", no_drift_monitor,
                       "disable drift signals and recovery triggers");

    auto* verify = app.add_subcommand("replay-verify", "verify an audit log post hoc");
    verify->add_option("audit_log", audit_path, "audit log (JSON lines)")->required();

    auto* explain = app.add_subcommand("explain", "render one audit record as a narrative");
    explain->add_option("--audit", audit_path, "audit log (JSON lines)")->required();
    explain->add_option("--index", explain_index, "decision record index (default: last)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (evaluate->parsed())
            return run_evaluate(policy_path, state_path, action_class, eval_theta, theta,
                                max_recovery, sample_rate, audit_out, timestamp);
        if (simulate->parsed())
            return run_simulate(scenario_path, mode_name, audit_out, trace_out, sim_theta, theta,
                                sim_rate, sample_rate, sim_recovery, max_recovery, no_drift_monitor,
                                timestamp);
        if (verify->parsed()) return run_replay_verify(audit_path, timestamp);
        if (explain->parsed()) return run_explain(audit_path, explain_index);
    } catch (const rgate::ParseError& e) {
        std::cerr << "parse error: " << e.located() << "\n";
        return kExitParse;
    } catch (const rgate::GateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
    return kExitUsage;
}
