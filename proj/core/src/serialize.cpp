#include "rabi/serialize.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rabi {

using nlohmann::json;

json loop_to_json(const Loop& v) {
  json samples = json::array();
  for (int j = 0; j < v.n_samples(); ++j) {
    json point = json::array();
    for (int r = 0; r < v.dim(); ++r) point.push_back(v.samples()(r, j));
    samples.push_back(std::move(point));
  }
  return json{{"schema_version", kSchemaVersion},
              {"n", v.half_dim()},
              {"N", v.n_samples()},
              {"samples", std::move(samples)}};
}

Loop loop_from_json(const json& j) {
  const int n = j.at("n").get<int>();
  const int big_n = j.at("N").get<int>();
  Eigen::MatrixXd samples(2 * n, big_n);
  const auto& arr = j.at("samples");
  if (static_cast<int>(arr.size()) != big_n)
    throw std::invalid_argument("loop json: sample count mismatch");
  for (int col = 0; col < big_n; ++col)
    for (int r = 0; r < 2 * n; ++r)
      samples(r, col) = arr.at(col).at(r).get<double>();
  return Loop(n, std::move(samples));
}

std::string loop_to_csv(const Loop& v) {
  std::ostringstream out;
  out.precision(17);
  out << "t";
  for (int r = 0; r < v.dim(); ++r) out << ",x" << (r + 1);
  out << "\n";
  for (int j = 0; j < v.n_samples(); ++j) {
    out << static_cast<double>(j) / v.n_samples();
    for (int r = 0; r < v.dim(); ++r) out << "," << v.samples()(r, j);
    out << "\n";
  }
  return out.str();
}

Loop loop_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty loop csv");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("loop csv without samples");
  const int dim = static_cast<int>(rows.front().size()) - 1;
  Eigen::MatrixXd samples(dim, static_cast<int>(rows.size()));
  for (size_t j = 0; j < rows.size(); ++j)
    for (int r = 0; r < dim; ++r)
      samples(r, static_cast<int>(j)) = rows[j][static_cast<size_t>(r) + 1];
  return Loop(dim / 2, std::move(samples));
}

json state_to_json(const LoopMultiplier& u) {
  return json{{"eta", u.eta}, {"loop", loop_to_json(u.loop)}};
}

LoopMultiplier state_from_json(const json& j) {
  return {loop_from_json(j.at("loop")), j.at("eta").get<double>()};
}

json trajectory_to_json(const FloerTrajectory& traj) {
  json states = json::array();
  for (const auto& u : traj.states) states.push_back(state_to_json(u));
  json s = json::array();
  for (int i = 0; i < traj.s_grid.size(); ++i) s.push_back(traj.s_grid(i));
  return json{{"schema_version", kSchemaVersion},
              {"s_grid", std::move(s)},
              {"stencil_order", traj.stencil_order},
              {"residual", traj.residual},
              {"endpoint_gap_lo", traj.endpoint_gap_lo},
              {"endpoint_gap_hi", traj.endpoint_gap_hi},
              {"states", std::move(states)}};
}

FloerTrajectory trajectory_from_json(const json& j) {
  FloerTrajectory traj;
  const auto& s = j.at("s_grid");
  traj.s_grid.resize(static_cast<int>(s.size()));
  for (int i = 0; i < traj.s_grid.size(); ++i) traj.s_grid(i) = s.at(i);
  for (const auto& st : j.at("states"))
    traj.states.push_back(state_from_json(st));
  traj.stencil_order = j.at("stencil_order").get<int>();
  traj.residual = j.at("residual").get<double>();
  traj.endpoint_gap_lo = j.at("endpoint_gap_lo").get<double>();
  traj.endpoint_gap_hi = j.at("endpoint_gap_hi").get<double>();
  return traj;
}

std::string trajectory_to_csv(const FloerTrajectory& traj) {
  std::ostringstream out;
  out.precision(17);
  out << "s,action,grad_norm,eta,v_l2,v_linf\n";
  for (int i = 0; i < traj.nodes(); ++i) {
    const auto& u = traj.states[static_cast<size_t>(i)];
    out << traj.s_grid(i) << "," << traj.action_trace(i) << ","
        << traj.grad_norm_trace(i) << "," << traj.eta_trace(i) << ","
        << u.loop.l2_norm() << "," << u.loop.linf_norm() << "\n";
  }
  return out.str();
}

namespace {

json report_to_json(const ConditionReport& rep) {
  json witness = json::array();
  for (int i = 0; i < rep.witness.size(); ++i) witness.push_back(rep.witness(i));
  return json{{"status", to_string(rep.status)},
              {"slack", rep.slack},
              {"witness", std::move(witness)}};
}

ConditionReport report_from_json(const json& j) {
  ConditionReport rep;
  const std::string s = j.at("status").get<std::string>();
  rep.status = s == "verified"
                   ? CertStatus::verified
                   : (s == "falsified" ? CertStatus::falsified
                                       : CertStatus::sampled_only);
  rep.slack = j.at("slack").get<double>();
  const auto& w = j.at("witness");
  rep.witness.resize(static_cast<int>(w.size()));
  for (int i = 0; i < rep.witness.size(); ++i) rep.witness(i) = w.at(i);
  return rep;
}

}  // namespace

json certificate_to_json(const AdmissibilityCertificate& cert,
                         const SamplingPlan& plan) {
  return json{{"schema_version", kSchemaVersion},
              {"model", cert.model},
              {"half_dim", cert.half_dim},
              {"constants",
               {{"c1", cert.c1},
                {"c2", cert.c2},
                {"c3", cert.c3},
                {"c4", cert.c4},
                {"c5", cert.c5},
                {"nu", cert.nu},
                {"L", cert.L},
                {"M", cert.M},
                {"h0", cert.h0},
                {"h1", cert.h1},
                {"h1_prime", cert.h1_prime},
                {"theta", cert.theta},
                {"k_radius", cert.k_radius},
                {"inf_grad_sigma", cert.inf_grad_sigma}}},
              {"conditions",
               {{"growth_of_global_field", report_to_json(cert.h1_report)},
                {"quadratic_behavior", report_to_json(cert.h2_report)},
                {"banded_field", report_to_json(cert.h3_report)}}},
              {"sampling",
               {{"r_max", plan.r_max},
                {"shell_step", plan.shell_step},
                {"dirs_per_shell", plan.dirs_per_shell},
                {"seed", plan.seed}}}};
}

AdmissibilityCertificate certificate_from_json(const json& j) {
  AdmissibilityCertificate cert;
  cert.model = j.at("model").get<std::string>();
  cert.half_dim = j.at("half_dim").get<int>();
  const auto& c = j.at("constants");
  cert.c1 = c.at("c1");
  cert.c2 = c.at("c2");
  cert.c3 = c.at("c3");
  cert.c4 = c.at("c4");
  cert.c5 = c.at("c5");
  cert.nu = c.at("nu");
  cert.L = c.at("L");
  cert.M = c.at("M");
  cert.h0 = c.at("h0");
  cert.h1 = c.at("h1");
  cert.h1_prime = c.at("h1_prime");
  cert.theta = c.at("theta");
  cert.k_radius = c.at("k_radius");
  cert.inf_grad_sigma = c.at("inf_grad_sigma");
  const auto& cond = j.at("conditions");
  cert.h1_report = report_from_json(cond.at("growth_of_global_field"));
  cert.h2_report = report_from_json(cond.at("quadratic_behavior"));
  cert.h3_report = report_from_json(cond.at("banded_field"));
  return cert;
}

namespace {

json entry(const std::string& name, double value, const std::string& formula,
           const std::string& derivation, json inputs) {
  return json{{"name", name},
              {"value", value},
              {"formula", formula},
              {"derivation", derivation},
              {"inputs", std::move(inputs)}};
}

}  // namespace

json ledger_to_json(const BoundLedger& led) {
  const auto& c = led.cert;
  json entries = json::array();
  entries.push_back(entry(
      "v0", led.v0,
      "smallest v with 1/(c2 v^2 - c3 - c5/2) <= 2/c5 and "
      "c1 c5 (v+1)/(2 c2 v^2 - 2 c3 - c5) <= c4",
      "radius splitting the near and far regime of the eta-action estimate",
      {{"c1", c.c1}, {"c2", c.c2}, {"c3", c.c3}, {"c4", c.c4}, {"c5", c.c5}}));
  entries.push_back(entry(
      "eps0", led.eps0, "min(c5/2, (nu/2) min(1, 1/(M v0 + h1)))",
      "gradient threshold below which |eta| is linear in the action",
      {{"c5", c.c5}, {"nu", c.nu}, {"M", c.M}, {"h1", c.h1}, {"v0", led.v0}}));
  entries.push_back(entry(
      "c_tilde", led.c_tilde, "max(2/c5, c4 (v0^2 + 1))",
      "slope of the eta-action linearity estimate",
      {{"c4", c.c4}, {"c5", c.c5}, {"v0", led.v0}}));
  entries.push_back(entry(
      "frak_y", led.frak_y,
      "(8/7) (c_tilde (max(|a|,|b|) + 1) + ((b - a)/eps0) Jinf^(3/2))",
      "uniform bound on |eta| along trajectories",
      {{"a", led.a}, {"b", led.b}, {"c_tilde", led.c_tilde},
       {"eps0", led.eps0}, {"j_norm_inf", led.j_norm_inf}}));
  entries.push_back(entry(
      "frak_a", led.frak_a, "(8 max(|a|,|b|) + 1 + |b - a|) / 7",
      "uniform bound on the action along trajectories",
      {{"a", led.a}, {"b", led.b}}));
  entries.push_back(entry(
      "frak_e", led.frak_e, "Jinf (8 |b - a| + max(|a|,|b|) + 1) / 7",
      "uniform bound on the total energy",
      {{"a", led.a}, {"b", led.b}, {"j_norm_inf", led.j_norm_inf}}));
  entries.push_back(entry(
      "delta0", led.delta0, "inf_Sigma |grad H| / (3 M)",
      "uniform embedding radius of the level set",
      {{"inf_grad_sigma", c.inf_grad_sigma}, {"M", c.M}}));
  entries.push_back(entry(
      "delta", led.delta, "0.9 min(ng, 1/(6 M), delta0/2) unless overridden",
      "tube radius used by every neighborhood argument",
      {{"ng", led.ng}, {"M", c.M}, {"delta0", led.delta0}}));
  entries.push_back(entry(
      "eps1(delta)", led.eps1_delta, "(delta/2) min(c2/(2 M c1), 1)",
      "gradient threshold of the far-field derivative bound",
      {{"delta", led.delta}, {"c1", c.c1}, {"c2", c.c2}, {"M", c.M}}));
  entries.push_back(entry(
      "v1(delta)", led.v1_delta,
      "smallest v with (frak_a + eps1 c1 (v+1))/(c2 v^2 - c3 - eps1) <= delta "
      "and eps1 + fraction (h1 + M v) <= delta",
      "radius past which eta and the loop derivative drop below delta",
      {{"delta", led.delta}, {"frak_a", led.frak_a}, {"c1", c.c1},
       {"c2", c.c2}, {"c3", c.c3}, {"M", c.M}, {"h1", c.h1}}));
  entries.push_back(entry(
      "mu(delta)", led.mu_delta,
      "min(nu, delta inf_r max((c2 r^2 - c3)/(c1 (r+1)), c5/(c4 (r^2+1))))",
      "level width collapsing into the delta-neighborhood of Sigma",
      {{"delta", led.delta}, {"nu", c.nu}, {"c1", c.c1}, {"c2", c.c2},
       {"c3", c.c3}, {"c4", c.c4}, {"c5", c.c5}}));
  entries.push_back(entry(
      "eps2(delta/2,Jinf)", led.eps2_half,
      "min(eps0, eps1(delta/8), mu(delta/8)) / Jinf",
      "gradient threshold of the partition of the action-derivation set",
      {{"delta", led.delta}, {"j_norm_inf", led.j_norm_inf}}));
  entries.push_back(entry(
      "v2(delta/2,r)", led.v2_half, "max(v1(delta/8), r + delta/8)",
      "splitting radius of the partition",
      {{"delta", led.delta}, {"r_kv", led.r_kv}}));
  entries.push_back(entry(
      "v3", led.v3,
      "sup of |v|_inf over the found critical family in the window",
      "empirical orbit-family radius (evidence, not a proof)",
      {{"a", led.a}, {"b", led.b}, {"n_radius", led.n_radius}}));
  entries.push_back(entry(
      "v4", led.v4, "max(r_grad_floor, v3, k_radius, v2(delta/2, r_kv))",
      "core radius of the oscillation accounting",
      {{"r_grad_floor", led.r_grad_floor}, {"v3", led.v3},
       {"k_radius", led.k_radius}, {"v2_half", led.v2_half}}));
  entries.push_back(entry(
      "eps", led.eps, "0.9 eps2(delta/2, Jinf) unless overridden",
      "gradient threshold used by the audits",
      {{"eps2_half", led.eps2_half}}));
  entries.push_back(entry(
      "k_max", led.k_max, "2 frak_e / (delta eps) + 1",
      "bound on the number of oscillations",
      {{"frak_e", led.frak_e}, {"delta", led.delta}, {"eps", led.eps}}));
  entries.push_back(entry(
      "m_hat", led.m_hat, "72 M",
      "projection drift constant along the tube",
      {{"M", c.M}}));
  entries.push_back(entry(
      "r_grad_floor", led.r_grad_floor, "smallest r with (c2/c1)(r - h1') >= 1/2",
      "radius past which the gradient floor 1/2 holds",
      {{"c1", c.c1}, {"c2", c.c2}, {"h1_prime", c.h1_prime}}));
  entries.push_back(entry(
      "alpha1", led.alpha1, "max(2 M, (2/3) h1)^2",
      "quadratic growth of the radial-field interaction term",
      {{"M", c.M}, {"h1", c.h1}}));
  entries.push_back(entry(
      "alpha2", led.alpha2, "(1/2) max(M, h1^2/(4 M))",
      "quadratic growth of the angular interaction term",
      {{"M", c.M}, {"h1", c.h1}}));
  entries.push_back(entry(
      "alpha3", led.alpha3, "max(M (8 M + (5/2) L), (1/2) h1 (7 M + 3 L))",
      "linear growth of the first interaction gradient",
      {{"M", c.M}, {"h1", c.h1}, {"L", c.L}}));
  entries.push_back(entry(
      "alpha4", led.alpha4, "max(M, h1/2)",
      "linear growth of the second interaction gradient",
      {{"M", c.M}, {"h1", c.h1}}));

  json inputs{{"a", led.a},
              {"b", led.b},
              {"j_norm_inf", led.j_norm_inf},
              {"ng", led.ng},
              {"v_radius", led.v_radius},
              {"k_radius", led.k_radius},
              {"n_radius", led.n_radius},
              {"v3", led.v3}};
  return json{{"schema_version", kSchemaVersion},
              {"inputs", std::move(inputs)},
              {"certificate",
               certificate_to_json(led.cert, SamplingPlan{})["constants"]},
              {"constants", std::move(entries)},
              {"values",
               {{"eps0", led.eps0}, {"c_tilde", led.c_tilde}, {"v0", led.v0},
                {"frak_y", led.frak_y}, {"frak_a", led.frak_a},
                {"frak_e", led.frak_e}, {"delta0", led.delta0},
                {"delta", led.delta}, {"eps1_delta", led.eps1_delta},
                {"v1_delta", led.v1_delta}, {"mu_delta", led.mu_delta},
                {"eps2_half", led.eps2_half}, {"v2_half", led.v2_half},
                {"r_kv", led.r_kv}, {"v3", led.v3}, {"v4", led.v4},
                {"eps", led.eps}, {"k_max", led.k_max}, {"m_hat", led.m_hat},
                {"r_grad_floor", led.r_grad_floor}, {"alpha1", led.alpha1},
                {"alpha2", led.alpha2}, {"alpha3", led.alpha3},
                {"alpha4", led.alpha4}}}};
}

BoundLedger ledger_from_json(const json& j) {
  BoundLedger led;
  const auto& in = j.at("inputs");
  led.a = in.at("a");
  led.b = in.at("b");
  led.j_norm_inf = in.at("j_norm_inf");
  led.ng = in.at("ng");
  led.v_radius = in.at("v_radius");
  led.k_radius = in.at("k_radius");
  led.n_radius = in.at("n_radius");
  led.v3 = in.at("v3");
  const auto& c = j.at("certificate");
  led.cert.c1 = c.at("c1");
  led.cert.c2 = c.at("c2");
  led.cert.c3 = c.at("c3");
  led.cert.c4 = c.at("c4");
  led.cert.c5 = c.at("c5");
  led.cert.nu = c.at("nu");
  led.cert.L = c.at("L");
  led.cert.M = c.at("M");
  led.cert.h0 = c.at("h0");
  led.cert.h1 = c.at("h1");
  led.cert.h1_prime = c.at("h1_prime");
  led.cert.theta = c.at("theta");
  led.cert.k_radius = c.at("k_radius");
  led.cert.inf_grad_sigma = c.at("inf_grad_sigma");
  const auto& v = j.at("values");
  led.eps0 = v.at("eps0");
  led.c_tilde = v.at("c_tilde");
  led.v0 = v.at("v0");
  led.frak_y = v.at("frak_y");
  led.frak_a = v.at("frak_a");
  led.frak_e = v.at("frak_e");
  led.delta0 = v.at("delta0");
  led.delta = v.at("delta");
  led.eps1_delta = v.at("eps1_delta");
  led.v1_delta = v.at("v1_delta");
  led.mu_delta = v.at("mu_delta");
  led.eps2_half = v.at("eps2_half");
  led.v2_half = v.at("v2_half");
  led.r_kv = v.at("r_kv");
  led.v4 = v.at("v4");
  led.eps = v.at("eps");
  led.k_max = v.at("k_max");
  led.m_hat = v.at("m_hat");
  led.r_grad_floor = v.at("r_grad_floor");
  led.alpha1 = v.at("alpha1");
  led.alpha2 = v.at("alpha2");
  led.alpha3 = v.at("alpha3");
  led.alpha4 = v.at("alpha4");
  return led;
}

json oscillation_to_json(const OscillationAudit& a) {
  return json{{"tau", a.tau},
              {"oscillations", a.oscillations},
              {"k_bound", a.k_bound},
              {"gap_sum", a.gap_sum},
              {"gap_sum_quad", a.gap_sum_quad},
              {"gap_bound", a.gap_bound},
              {"dwell_outside_b", a.dwell_outside_b},
              {"dwell_bound", a.dwell_bound},
              {"pass", a.pass},
              {"finding", a.finding}};
}

json global_bound_to_json(const GlobalBoundAudit& a) {
  return json{{"bound", a.bound},
              {"worst_norm", a.worst_norm},
              {"worst_node", a.worst_node},
              {"slack_ratio", a.slack_ratio},
              {"pass", a.pass}};
}

json monitors_to_json(const MonitorAudit& a) {
  return json{{"sup_eta", a.sup_eta},
              {"sup_action", a.sup_action},
              {"total_energy", a.total_energy},
              {"hs2_lhs", a.hs2_lhs},
              {"eta_ok", a.eta_ok},
              {"action_ok", a.action_ok},
              {"energy_ok", a.energy_ok},
              {"hs2_ok", a.hs2_ok},
              {"pass", a.pass}};
}

json drift_to_json(const DriftAudit& a) {
  return json{{"applicable", a.applicable},
              {"first_node", a.first_node},
              {"last_node", a.last_node},
              {"lhs", a.lhs},
              {"rhs", a.rhs},
              {"pass", a.pass},
              {"note", a.note}};
}

json elliptic_to_json(const EllipticAudit& a) {
  json patches = json::array();
  for (const auto& p : a.patches) {
    patches.push_back(json{{"id", p.id},
                           {"node_count", p.node_count},
                           {"interior_count", p.interior_count},
                           {"s_min", p.s_min},
                           {"s_max", p.s_max},
                           {"worst_defect", p.worst_defect},
                           {"inequality_ok", p.inequality_ok},
                           {"sup_interior", p.sup_interior},
                           {"sup_boundary", p.sup_boundary},
                           {"f_l1", p.f_l1},
                           {"f_l1_budget", p.f_l1_budget},
                           {"ft_l1", p.ft_l1},
                           {"ft_l1_budget", p.ft_l1_budget},
                           {"fs_l1", p.fs_l1},
                           {"fs_l1_budget", p.fs_l1_budget},
                           {"budget_ok", p.budget_ok},
                           {"dwell", p.dwell},
                           {"dwell_bound", p.dwell_bound},
                           {"dwell_ok", p.dwell_ok},
                           {"finding", p.finding}});
  }
  return json{{"k_inf_radius", a.k_inf_radius},
              {"tol_disc", a.tol_disc},
              {"patches", std::move(patches)},
              {"pass", a.pass}};
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& contents) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << contents;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

json read_json_file(const std::filesystem::path& path) {
  return json::parse(read_text_file(path));
}

}  // namespace rabi
