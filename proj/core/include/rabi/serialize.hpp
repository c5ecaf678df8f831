#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rabi/certify.hpp"
#include "rabi/floer.hpp"
#include "rabi/ledger.hpp"
#include "rabi/loop.hpp"
#include "rabi/psh.hpp"
#include "rabi/tube.hpp"

namespace rabi {

inline constexpr int kSchemaVersion = 1;

nlohmann::json loop_to_json(const Loop& v);
Loop loop_from_json(const nlohmann::json& j);

/// CSV rows (t_j, x^1 ... x^{2n}).
std::string loop_to_csv(const Loop& v);
Loop loop_from_csv(const std::string& text);

nlohmann::json state_to_json(const LoopMultiplier& u);
LoopMultiplier state_from_json(const nlohmann::json& j);

nlohmann::json trajectory_to_json(const FloerTrajectory& traj);
FloerTrajectory trajectory_from_json(const nlohmann::json& j);
/// Plot-ready rows (s, action, grad_norm, eta, v_l2, v_linf).
std::string trajectory_to_csv(const FloerTrajectory& traj);

nlohmann::json certificate_to_json(const AdmissibilityCertificate& cert,
                                   const SamplingPlan& plan);
AdmissibilityCertificate certificate_from_json(const nlohmann::json& j);

/// Every constant with its formula string, numeric inputs and a derivation
/// label naming what it controls.
nlohmann::json ledger_to_json(const BoundLedger& ledger);
BoundLedger ledger_from_json(const nlohmann::json& j);

nlohmann::json oscillation_to_json(const OscillationAudit& a);
nlohmann::json global_bound_to_json(const GlobalBoundAudit& a);
nlohmann::json monitors_to_json(const MonitorAudit& a);
nlohmann::json drift_to_json(const DriftAudit& a);
nlohmann::json elliptic_to_json(const EllipticAudit& a);

void write_text_file(const std::filesystem::path& path,
                     const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace rabi
