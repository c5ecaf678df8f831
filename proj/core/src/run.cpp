#include "rabi/run.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "rabi/orbit.hpp"
#include "rabi/serialize.hpp"

namespace rabi {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_run_meta(const fs::path& out, const std::string& command) {
  // wall-clock data lives in a sidecar so the main artifacts stay
  // byte-reproducible
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  json meta{{"command", command},
            {"unix_time",
             std::chrono::duration_cast<std::chrono::seconds>(now).count()}};
  write_json_file(out / ("run_meta_" + command + ".json"), meta);
}

AdmissibilityCertificate ensure_certificate(const ExperimentConfig& cfg,
                                            const fs::path& out) {
  const fs::path path = out / "certificate.json";
  if (fs::exists(path)) return certificate_from_json(read_json_file(path));
  const auto model = cfg.make_model();
  const SamplingPlan plan = cfg.sampling_plan();
  const double k_for_theta =
      cfg.perturbation_ball_enabled() ? cfg.k_radius() : 0.0;
  AdmissibilityCertificate cert = certify_model(*model, plan, k_for_theta);
  write_json_file(path, certificate_to_json(cert, plan));
  return cert;
}

struct OrbitArtifacts {
  std::vector<CriticalComponent> orbits;
  CriticalComponent sigma;
  double v3 = 0.0;
  PoWindowResult po;
};

json orbit_artifacts_to_json(const OrbitArtifacts& art) {
  json orbits = json::array();
  for (const auto& comp : art.orbits)
    orbits.push_back(json{{"eta", comp.representative.eta},
                          {"action", comp.action_value},
                          {"state", state_to_json(comp.representative)}});
  return json{{"schema_version", kSchemaVersion},
              {"orbits", std::move(orbits)},
              {"sigma_point", state_to_json(art.sigma.representative)},
              {"v3", art.v3},
              {"po_window",
               {{"radius", art.po.radius},
                {"vacuous", art.po.vacuous},
                {"status", art.po.status}}}};
}

OrbitArtifacts orbit_artifacts_from_json(const json& j) {
  OrbitArtifacts art;
  for (const auto& o : j.at("orbits")) {
    CriticalComponent comp;
    comp.kind = CriticalComponent::Kind::nontrivial_orbit;
    comp.representative = state_from_json(o.at("state"));
    comp.action_value = o.at("action").get<double>();
    art.orbits.push_back(std::move(comp));
  }
  art.sigma.kind = CriticalComponent::Kind::constant_on_sigma;
  art.sigma.representative = state_from_json(j.at("sigma_point"));
  art.sigma.action_value = 0.0;
  art.v3 = j.at("v3").get<double>();
  art.po.radius = j.at("po_window").at("radius").get<double>();
  art.po.vacuous = j.at("po_window").at("vacuous").get<bool>();
  art.po.status = j.at("po_window").at("status").get<std::string>();
  return art;
}

int compute_orbits(const ExperimentConfig& cfg, const fs::path& out,
                   OrbitArtifacts& art) {
  const auto model = cfg.make_model();
  const int n = cfg.n_samples();

  // deterministic on-Sigma representative for the constant component
  Eigen::VectorXd probe = Eigen::VectorXd::Zero(model->dim());
  probe(0) = 1.0;
  const Eigen::VectorXd on_sigma = closest_point_on_sigma(*model, probe);
  art.sigma.kind = CriticalComponent::Kind::constant_on_sigma;
  art.sigma.representative = {Loop::constant(on_sigma, n), 0.0};
  art.sigma.action_value = 0.0;

  bool all_converged = true;
  const double radius_guess = on_sigma.norm();
  for (int k : cfg.orbit_covers()) {
    Loop seed = Loop::from_function(model->half_dim(), n, [&](double t) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(model->dim());
      x(0) = radius_guess * std::cos(2 * M_PI * k * t);
      x(1) = radius_guess * std::sin(2 * M_PI * k * t);
      return x;
    });
    const FindOrbitResult res =
        find_orbit(*model, {seed, 2 * M_PI * k});
    if (!res.converged || !res.component ||
        res.component->kind != CriticalComponent::Kind::nontrivial_orbit) {
      all_converged = false;
      continue;
    }
    art.orbits.push_back(*res.component);
  }

  // empirical orbit-family radius over the window [a, max(2b, 1)]
  const double window_hi = std::max(2.0 * cfg.window_b(), 1.0);
  double v3 = std::min(cfg.n_radius(), radius_guess);
  std::vector<LoopMultiplier> states;
  for (const auto& comp : art.orbits) {
    states.push_back(comp.representative);
    if (comp.action_value >= cfg.window_a() && comp.action_value <= window_hi)
      v3 = std::max(v3, comp.representative.loop.linf_norm());
  }
  art.v3 = v3;
  art.po = po_window_check(*model, cfg.po_window(), states);

  // csv table plus the full states
  std::ostringstream csv;
  csv.precision(17);
  csv << "index,eta,action,v_l2,v_linf\n";
  for (size_t i = 0; i < art.orbits.size(); ++i) {
    const auto& comp = art.orbits[i];
    csv << i << "," << comp.representative.eta << "," << comp.action_value
        << "," << comp.representative.loop.l2_norm() << ","
        << comp.representative.loop.linf_norm() << "\n";
  }
  write_text_file(out / "orbits.csv", csv.str());
  write_json_file(out / "orbits.json", orbit_artifacts_to_json(art));
  return all_converged ? kOk : kNoConvergence;
}

OrbitArtifacts ensure_orbits(const ExperimentConfig& cfg, const fs::path& out) {
  const fs::path path = out / "orbits.json";
  if (fs::exists(path)) return orbit_artifacts_from_json(read_json_file(path));
  OrbitArtifacts art;
  const int rc = compute_orbits(cfg, out, art);
  if (rc != kOk)
    throw std::runtime_error("orbit finder failed for a configured seed");
  return art;
}

BoundLedger ensure_ledger(const ExperimentConfig& cfg, const fs::path& out) {
  const fs::path path = out / "ledger.json";
  if (fs::exists(path)) return ledger_from_json(read_json_file(path));
  const AdmissibilityCertificate cert = ensure_certificate(cfg, out);
  if (!cert.admissible())
    throw std::runtime_error("certificate is falsified; no ledger");
  const OrbitArtifacts art = ensure_orbits(cfg, out);
  const BoundLedger led = compute_ledger(
      cert, cfg.window_a(), cfg.window_b(), cfg.j_norm_inf(), cfg.ng(),
      cfg.v_radius(), cfg.k_radius(), cfg.n_radius(), art.v3,
      cfg.ledger_overrides());
  write_json_file(path, ledger_to_json(led));
  return led;
}

std::vector<fs::path> trajectory_files(const fs::path& out) {
  std::vector<fs::path> files;
  for (int i = 0;; ++i) {
    fs::path p = out / ("traj_" + std::to_string(i) + ".json");
    if (!fs::exists(p)) break;
    files.push_back(p);
  }
  return files;
}

int run_certify(const ExperimentConfig& cfg, const fs::path& out) {
  const AdmissibilityCertificate cert = ensure_certificate(cfg, out);
  return cert.admissible() ? kOk : kFinding;
}

int run_ledger(const ExperimentConfig& cfg, const fs::path& out) {
  const BoundLedger led = ensure_ledger(cfg, out);
  if (!ledger_reproduces(led)) {
    write_json_file(out / "error.json",
                    json{{"error", "ledger failed to reproduce"}});
    return kFinding;
  }
  return kOk;
}

int run_orbits_cmd(const ExperimentConfig& cfg, const fs::path& out) {
  OrbitArtifacts art;
  return compute_orbits(cfg, out, art);
}

int run_flow(const ExperimentConfig& cfg, const fs::path& out) {
  const OrbitArtifacts art = ensure_orbits(cfg, out);
  const HomotopySpec gamma = cfg.make_homotopy();
  SolveBvpOptions opts = cfg.solver_options();

  auto resolve = [&](const std::string& name,
                     bool end_side) -> EndpointSpec {
    if (name == "sigma") {
      CriticalComponent c = art.sigma;
      if (end_side && !gamma.constant_homotopy()) {
        // re-anchor on the perturbed level set
        const auto h1 = gamma.h_end();
        const Eigen::VectorXd p = closest_point_on_sigma(
            *h1, c.representative.loop.samples().col(0));
        c.representative = {Loop::constant(p, cfg.n_samples()), 0.0};
      }
      return EndpointSpec::sigma(c);
    }
    if (name.rfind("orbit:", 0) != 0)
      throw ConfigError("flow pair endpoint must be 'sigma' or 'orbit:<i>'");
    const size_t index = std::stoul(name.substr(6));
    if (index >= art.orbits.size())
      throw ConfigError("flow pair references a missing orbit index");
    CriticalComponent comp = art.orbits[index];
    if (end_side && !gamma.constant_homotopy()) {
      const auto h1 = gamma.h_end();
      const FindOrbitResult res = find_orbit(*h1, comp.representative);
      if (!res.converged || !res.component)
        throw std::runtime_error("endpoint orbit lost under the homotopy");
      comp = *res.component;
    }
    return comp.kind == CriticalComponent::Kind::constant_on_sigma
               ? EndpointSpec::sigma(comp)
               : EndpointSpec::fixed(comp);
  };

  bool all_converged = true;
  int index = 0;
  for (const auto& pair : cfg.flow_pairs()) {
    const EndpointSpec lo = resolve(pair.from, false);
    const EndpointSpec hi = resolve(pair.to, true);
    const BvpResult res = solve_bvp(gamma, lo, hi, opts);
    all_converged &= res.converged;
    json traj_json = trajectory_to_json(res.trajectory);
    traj_json["converged"] = res.converged;
    traj_json["message"] = res.message;
    traj_json["from"] = pair.from;
    traj_json["to"] = pair.to;
    write_json_file(out / ("traj_" + std::to_string(index) + ".json"),
                    traj_json);
    write_text_file(out / ("traj_" + std::to_string(index) + ".csv"),
                    trajectory_to_csv(res.trajectory));
    ++index;
  }
  return all_converged ? kOk : kNoConvergence;
}

int run_audit(const ExperimentConfig& cfg, const fs::path& out) {
  const BoundLedger led = ensure_ledger(cfg, out);
  const HomotopySpec gamma = cfg.make_homotopy();
  const auto files = trajectory_files(out);

  std::vector<FloerTrajectory> batch;
  for (const auto& f : files) {
    FloerTrajectory traj = trajectory_from_json(read_json_file(f));
    fill_trajectory_diagnostics(traj, gamma);
    batch.push_back(std::move(traj));
  }

  double k_inf = cfg.audit_k_inf_radius();
  if (k_inf <= 0.0) k_inf = k_infinity_radius(batch, gamma, led, led.eps);

  json trajectories = json::array();
  bool pass = true;
  for (size_t i = 0; i < batch.size(); ++i) {
    const auto& traj = batch[i];
    const MonitorAudit monitors = bounds1_monitors(traj, gamma, led);
    const OscillationAudit osc =
        oscillation_audit(traj, gamma, led, led.eps, led.delta);
    const GlobalBoundAudit global = l2_global_bound(traj, led, led.eps);
    const DriftAudit drift =
        drift_audit(*gamma.h_start(), traj.states, led.delta, led.m_hat);
    EllipticAuditOptions eopts;
    eopts.v_bound = global.bound;
    const EllipticAudit elliptic =
        elliptic_audit(traj, gamma, k_inf, led, eopts);
    const bool traj_pass = monitors.pass && osc.pass && global.pass &&
                           (!drift.applicable || drift.pass) && elliptic.pass;
    pass &= traj_pass;
    trajectories.push_back(json{{"index", i},
                                {"monitors", monitors_to_json(monitors)},
                                {"oscillation", oscillation_to_json(osc)},
                                {"global_bound", global_bound_to_json(global)},
                                {"drift", drift_to_json(drift)},
                                {"elliptic", elliptic_to_json(elliptic)},
                                {"pass", traj_pass}});
  }

  write_json_file(out / "audit.json",
                  json{{"schema_version", kSchemaVersion},
                       {"k_inf_radius", k_inf},
                       {"vacuous", batch.empty()},
                       {"trajectories", std::move(trajectories)},
                       {"pass", pass}});

  // per-s monitor margins for downstream plots
  for (size_t i = 0; i < batch.size(); ++i) {
    const auto& traj = batch[i];
    std::ostringstream csv;
    csv.precision(17);
    csv << "s,eta_margin,action_margin,grad_norm\n";
    for (int k = 0; k < traj.nodes(); ++k)
      csv << traj.s_grid(k) << ","
          << led.frak_y - std::abs(traj.eta_trace(k)) << ","
          << led.frak_a - std::abs(traj.action_trace(k)) << ","
          << traj.grad_norm_trace(k) << "\n";
    write_text_file(out / ("audit_margins_" + std::to_string(i) + ".csv"),
                    csv.str());
  }
  return pass ? kOk : kFinding;
}

int run_report(const ExperimentConfig& cfg, const fs::path& out) {
  json report{{"schema_version", kSchemaVersion},
              {"config", cfg.effective()}};
  for (const char* name :
       {"certificate.json", "ledger.json", "orbits.json", "audit.json"}) {
    const fs::path p = out / name;
    if (fs::exists(p)) report[fs::path(name).stem().string()] =
        read_json_file(p);
  }

  const auto files = trajectory_files(out);
  json trajs = json::array();
  const HomotopySpec gamma = cfg.make_homotopy();
  for (size_t i = 0; i < files.size(); ++i) {
    FloerTrajectory traj = trajectory_from_json(read_json_file(files[i]));
    fill_trajectory_diagnostics(traj, gamma);
    trajs.push_back(json{{"index", i},
                         {"nodes", traj.nodes()},
                         {"residual", traj.residual},
                         {"action_start", traj.action_trace(0)},
                         {"action_end", traj.action_trace(traj.nodes() - 1)},
                         {"eta_end", traj.eta_trace(traj.nodes() - 1)}});
    // two-column plot data
    std::ostringstream action_csv, eta_csv;
    action_csv.precision(17);
    eta_csv.precision(17);
    action_csv << "s,action\n";
    eta_csv << "s,eta\n";
    for (int k = 0; k < traj.nodes(); ++k) {
      action_csv << traj.s_grid(k) << "," << traj.action_trace(k) << "\n";
      eta_csv << traj.s_grid(k) << "," << traj.eta_trace(k) << "\n";
    }
    write_text_file(out / "plots" /
                        ("traj_" + std::to_string(i) + "_action.csv"),
                    action_csv.str());
    write_text_file(out / "plots" / ("traj_" + std::to_string(i) + "_eta.csv"),
                    eta_csv.str());
  }
  report["trajectories"] = std::move(trajs);
  write_json_file(out / "report.json", report);
  return kOk;
}

}  // namespace

int run_subcommand(const std::string& command, const ExperimentConfig& cfg,
                   const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_json_file(out_dir / "effective_config.json", cfg.effective());
  write_run_meta(out_dir, command);
  if (command == "certify") return run_certify(cfg, out_dir);
  if (command == "ledger") return run_ledger(cfg, out_dir);
  if (command == "orbits") return run_orbits_cmd(cfg, out_dir);
  if (command == "flow") return run_flow(cfg, out_dir);
  if (command == "audit") return run_audit(cfg, out_dir);
  if (command == "report") return run_report(cfg, out_dir);
  throw ConfigError("unknown subcommand '" + command + "'");
}

}  // namespace rabi
