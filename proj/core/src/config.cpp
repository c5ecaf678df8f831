#include "rabi/config.hpp"

#include <cmath>
#include <set>

#include "rabi/serialize.hpp"

namespace rabi {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object())
    throw ConfigError(where + " must be an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

double number_or(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number())
    throw ConfigError("'" + key + "' must be a number");
  return obj.at(key).get<double>();
}

Eigen::VectorXd vector_field(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty())
    throw ConfigError(where + " must be a nonempty array");
  Eigen::VectorXd v(static_cast<int>(arr.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = arr.at(i).get<double>();
  return v;
}

RadialBump bump_from(const json& b, const std::string& where) {
  require_keys(b, where, {"center", "width", "amplitude"});
  RadialBump bump;
  bump.center = vector_field(b.at("center"), where + ".center");
  bump.width = b.at("width").get<double>();
  bump.amplitude = b.at("amplitude").get<double>();
  if (bump.width <= 0) throw ConfigError(where + ".width must be positive");
  return bump;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(
    const std::filesystem::path& path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  return from_json(std::move(j));
}

ExperimentConfig ExperimentConfig::from_json(json j) {
  ExperimentConfig cfg;
  cfg.j_ = std::move(j);
  cfg.validate();
  return cfg;
}

void ExperimentConfig::set_override(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects key.path=value");
  const std::string path = spec.substr(0, eq);
  const std::string value = spec.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // plain string
  }
  json* node = &j_;
  size_t pos = 0;
  while (true) {
    const size_t dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot - pos);
    if (key.empty()) throw ConfigError("empty key in --set path");
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      break;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
  validate();
}

void ExperimentConfig::set_seed(std::uint64_t seed) {
  j_["seed"] = seed;
}

void ExperimentConfig::validate() const {
  require_keys(j_, "config",
               {"schema_version", "model", "discretization", "window",
                "j_structure", "ledger", "perturbation_ball", "homotopy",
                "orbits", "flow", "audit", "seed"});
  if (!j_.contains("schema_version") ||
      j_.at("schema_version").get<int>() != kSchemaVersion)
    throw ConfigError("config schema_version must be 1");
  if (!j_.contains("model")) throw ConfigError("config needs a model");

  const json& model = j_.at("model");
  require_keys(model, "model",
               {"name", "center", "radius", "half_dim", "level", "matrix",
                "bump"});
  const std::string name = model.at("name").get<std::string>();
  if (name != "shifted_sphere" && name != "hyperbola" &&
      name != "quadratic_form" && name != "sphere_plus_bump")
    throw ConfigError("unknown model '" + name + "'");

  if (j_.contains("discretization"))
    require_keys(j_.at("discretization"), "discretization",
                 {"n_samples", "s_nodes", "s_span", "stencil_order"});
  if (j_.contains("window"))
    require_keys(j_.at("window"), "window", {"a", "b"});
  if (j_.contains("j_structure"))
    require_keys(j_.at("j_structure"), "j_structure",
                 {"norm_inf", "ng", "v_radius"});
  if (j_.contains("ledger"))
    require_keys(j_.at("ledger"), "ledger",
                 {"k_radius", "n_radius", "delta", "eps", "v3"});
  if (j_.contains("perturbation_ball"))
    require_keys(j_.at("perturbation_ball"), "perturbation_ball", {"enabled"});
  if (j_.contains("homotopy"))
    require_keys(j_.at("homotopy"), "homotopy", {"bump"});
  if (j_.contains("orbits"))
    require_keys(j_.at("orbits"), "orbits", {"covers", "window_n"});
  if (j_.contains("flow")) {
    require_keys(j_.at("flow"), "flow", {"pairs", "solver"});
    if (j_.at("flow").contains("solver"))
      require_keys(j_.at("flow").at("solver"), "flow.solver",
                   {"residual_tol", "max_outer", "ncg_warmup", "max_inner",
                    "inner_tol", "endpoint_weight", "endpoint_weight_final",
                    "verbose"});
    if (j_.at("flow").contains("pairs")) {
      for (const auto& p : j_.at("flow").at("pairs"))
        require_keys(p, "flow.pairs[]", {"from", "to"});
    }
  }
  if (j_.contains("audit"))
    require_keys(j_.at("audit"), "audit", {"k_inf_radius"});

  if (window_a() > window_b())
    throw ConfigError("window must satisfy a <= b");
  const int n = n_samples();
  if (n < 8 || n % 2 != 0)
    throw ConfigError("n_samples must be even and at least 8");
}

HamiltonianPtr ExperimentConfig::make_model() const {
  const json& model = j_.at("model");
  const std::string name = model.at("name").get<std::string>();
  if (name == "shifted_sphere") {
    const Eigen::VectorXd center =
        model.contains("center") ? vector_field(model.at("center"), "center")
                                 : Eigen::VectorXd::Zero(2);
    const double radius = number_or(model, "radius", std::sqrt(2.0));
    return std::make_shared<ShiftedSphere>(center, radius);
  }
  if (name == "hyperbola") {
    const int hd = model.contains("half_dim") ? model.at("half_dim").get<int>()
                                              : 1;
    return std::make_shared<Hyperbola>(hd, number_or(model, "level", 1.0));
  }
  if (name == "quadratic_form") {
    const auto& rows = model.at("matrix");
    const int d = static_cast<int>(rows.size());
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) a(i, k) = rows.at(i).at(k).get<double>();
    return std::make_shared<QuadraticForm>(a, number_or(model, "level", 1.0));
  }
  // sphere_plus_bump
  const Eigen::VectorXd center =
      model.contains("center") ? vector_field(model.at("center"), "center")
                               : Eigen::VectorXd::Zero(2);
  const double radius = number_or(model, "radius", std::sqrt(2.0));
  auto base = std::make_shared<ShiftedSphere>(center, radius);
  return std::make_shared<PerturbedModel>(
      base, bump_from(model.at("bump"), "model.bump"));
}

SamplingPlan ExperimentConfig::sampling_plan() const {
  SamplingPlan plan;
  plan.seed = seed();
  return plan;
}

HomotopySpec ExperimentConfig::make_homotopy() const {
  HomotopySpec gamma;
  gamma.base = make_model();
  if (j_.contains("homotopy") && j_.at("homotopy").contains("bump"))
    gamma.bump = bump_from(j_.at("homotopy").at("bump"), "homotopy.bump");
  return gamma;
}

SolveBvpOptions ExperimentConfig::solver_options() const {
  SolveBvpOptions opts;
  const json disc = j_.value("discretization", json::object());
  opts.nodes = static_cast<int>(number_or(disc, "s_nodes", 200));
  opts.s_span = number_or(disc, "s_span", 7.5);
  opts.stencil_order = static_cast<int>(number_or(disc, "stencil_order", 6));
  if (j_.contains("flow") && j_.at("flow").contains("solver")) {
    const json& s = j_.at("flow").at("solver");
    opts.residual_tol = number_or(s, "residual_tol", opts.residual_tol);
    opts.max_outer = static_cast<int>(number_or(s, "max_outer", opts.max_outer));
    opts.ncg_warmup =
        static_cast<int>(number_or(s, "ncg_warmup", opts.ncg_warmup));
    opts.max_inner =
        static_cast<int>(number_or(s, "max_inner", opts.max_inner));
    opts.inner_tol = number_or(s, "inner_tol", opts.inner_tol);
    opts.endpoint_weight =
        number_or(s, "endpoint_weight", opts.endpoint_weight);
    opts.endpoint_weight_final =
        number_or(s, "endpoint_weight_final", opts.endpoint_weight_final);
    opts.verbose = s.value("verbose", false);
  }
  return opts;
}

LedgerOverrides ExperimentConfig::ledger_overrides() const {
  LedgerOverrides ov;
  const json led = j_.value("ledger", json::object());
  if (led.contains("delta")) ov.delta = led.at("delta").get<double>();
  if (led.contains("eps")) ov.eps = led.at("eps").get<double>();
  return ov;
}

std::uint64_t ExperimentConfig::seed() const {
  return j_.value("seed", std::uint64_t{42});
}

int ExperimentConfig::n_samples() const {
  return static_cast<int>(
      number_or(j_.value("discretization", json::object()), "n_samples", 128));
}

double ExperimentConfig::window_a() const {
  return number_or(j_.value("window", json::object()), "a", 0.0);
}

double ExperimentConfig::window_b() const {
  return number_or(j_.value("window", json::object()), "b", 2.0 * M_PI);
}

double ExperimentConfig::j_norm_inf() const {
  return number_or(j_.value("j_structure", json::object()), "norm_inf", 1.0);
}

double ExperimentConfig::ng() const {
  return number_or(j_.value("j_structure", json::object()), "ng", 1.0);
}

double ExperimentConfig::v_radius() const {
  return number_or(j_.value("j_structure", json::object()), "v_radius", 1.0);
}

double ExperimentConfig::k_radius() const {
  return number_or(j_.value("ledger", json::object()), "k_radius", 2.0);
}

double ExperimentConfig::n_radius() const {
  return number_or(j_.value("ledger", json::object()), "n_radius", k_radius());
}

bool ExperimentConfig::perturbation_ball_enabled() const {
  return j_.value("perturbation_ball", json::object())
      .value("enabled", false);
}

std::vector<int> ExperimentConfig::orbit_covers() const {
  std::vector<int> covers;
  const json orb = j_.value("orbits", json::object());
  if (orb.contains("covers"))
    for (const auto& k : orb.at("covers")) covers.push_back(k.get<int>());
  return covers;
}

double ExperimentConfig::po_window() const {
  return number_or(j_.value("orbits", json::object()), "window_n", 7.0);
}

std::vector<ExperimentConfig::FlowPair> ExperimentConfig::flow_pairs() const {
  std::vector<FlowPair> pairs;
  if (!j_.contains("flow") || !j_.at("flow").contains("pairs")) return pairs;
  for (const auto& p : j_.at("flow").at("pairs"))
    pairs.push_back({p.at("from").get<std::string>(),
                     p.at("to").get<std::string>()});
  return pairs;
}

double ExperimentConfig::audit_k_inf_radius() const {
  const json audit = j_.value("audit", json::object());
  if (!audit.contains("k_inf_radius") || audit.at("k_inf_radius").is_null())
    return 0.0;
  return audit.at("k_inf_radius").get<double>();
}

nlohmann::json ExperimentConfig::effective() const {
  json out = j_;
  out["schema_version"] = kSchemaVersion;
  out["seed"] = seed();
  out["discretization"] = {{"n_samples", n_samples()},
                           {"s_nodes", solver_options().nodes},
                           {"s_span", solver_options().s_span},
                           {"stencil_order", solver_options().stencil_order}};
  out["window"] = {{"a", window_a()}, {"b", window_b()}};
  out["j_structure"] = {{"norm_inf", j_norm_inf()},
                        {"ng", ng()},
                        {"v_radius", v_radius()}};
  json led = j_.value("ledger", json::object());
  led["k_radius"] = k_radius();
  led["n_radius"] = n_radius();
  out["ledger"] = led;
  return out;
}

}  // namespace rabi
