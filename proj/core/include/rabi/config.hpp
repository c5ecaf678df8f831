#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rabi/certify.hpp"
#include "rabi/floer.hpp"
#include "rabi/hamiltonian.hpp"
#include "rabi/ledger.hpp"

namespace rabi {

/// Raised for malformed configs; the CLI maps it to its own exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A validated experiment configuration. Unknown keys anywhere in the tree
/// are rejected; every default the run actually used is recorded back into
/// the effective config stored with the outputs.
class ExperimentConfig {
 public:
  static ExperimentConfig from_file(const std::filesystem::path& path);
  static ExperimentConfig from_json(nlohmann::json j);

  /// Apply a --set override "path.to.key=json-literal".
  void set_override(const std::string& spec);
  void set_seed(std::uint64_t seed);

  /// Validation happens on access; this re-checks the whole tree.
  void validate() const;

  HamiltonianPtr make_model() const;
  SamplingPlan sampling_plan() const;
  HomotopySpec make_homotopy() const;
  SolveBvpOptions solver_options() const;
  LedgerOverrides ledger_overrides() const;

  std::uint64_t seed() const;
  int n_samples() const;
  double window_a() const;
  double window_b() const;
  double j_norm_inf() const;
  double ng() const;
  double v_radius() const;
  double k_radius() const;
  double n_radius() const;
  bool perturbation_ball_enabled() const;
  std::vector<int> orbit_covers() const;
  double po_window() const;
  struct FlowPair {
    std::string from, to;
  };
  std::vector<FlowPair> flow_pairs() const;
  double audit_k_inf_radius() const;  // <= 0: measure from the batch

  /// The effective configuration with defaults filled in.
  nlohmann::json effective() const;

 private:
  ExperimentConfig() = default;
  nlohmann::json j_;
};

}  // namespace rabi
