#include "rmdp/instance_io.hpp"

#include <fstream>
#include <sstream>

namespace rmdp {
namespace {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols,
                        const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw InvalidInput(std::string(what) + ": expected " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InvalidInput(std::string(what) + ": row " + std::to_string(r) +
                         " should have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

Json vector_to_json(const Vector& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Json points_to_json(const std::vector<Eigen::Vector2d>& points) {
  Json out = Json::array();
  for (const auto& p : points) out.push_back({p.x(), p.y()});
  return out;
}

std::vector<Eigen::Vector2d> points_from_json(const Json& j) {
  std::vector<Eigen::Vector2d> out;
  for (const auto& p : j) {
    const auto xy = p.get<std::vector<double>>();
    if (xy.size() != 2) throw InvalidInput("expected a 2-vector");
    out.emplace_back(xy[0], xy[1]);
  }
  return out;
}

Json set_to_json(const AmbiguitySet& set) {
  Json j{{"kind", to_string(set.kind())}};
  if (const auto* sa = std::get_if<AmbiguitySet::SaRectL1>(&set.variant())) {
    j["kappa"] = vector_to_json(sa->kappa);
  } else if (const auto* s = std::get_if<AmbiguitySet::SRectL1>(&set.variant())) {
    j["kappa"] = vector_to_json(s->kappa);
  }
  return j;
}

}  // namespace

Json mdp_to_json(const TabularRmdp& mdp) {
  return Json{
      {"states", mdp.num_states()},
      {"actions", mdp.num_actions()},
      {"gamma", mdp.gamma()},
      {"initial_dist", vector_to_json(mdp.initial_dist())},
      {"kernel", matrix_to_json(mdp.nominal().matrix())},
      {"cost", matrix_to_json(mdp.cost())},
  };
}

TabularRmdp mdp_from_json(const Json& j) {
  const int S = j.at("states").get<int>();
  const int A = j.at("actions").get<int>();
  if (S <= 0 || A <= 0) throw InvalidInput("mdp: states and actions must be positive");
  Matrix kernel = matrix_from_json(j.at("kernel"), S * A, S, "kernel");
  Matrix cost = matrix_from_json(j.at("cost"), S * A, S, "cost");
  return TabularRmdp(S, A, std::move(cost), j.at("gamma").get<double>(),
                     vector_from_json(j.at("initial_dist")),
                     TransitionKernel(A, std::move(kernel)));
}

Json spec_to_json(const InventorySpec& spec) {
  return Json{
      {"states", points_to_json(spec.states)},
      {"actions", spec.actions},
      {"branching", spec.branching},
      {"gamma", spec.gamma},
      {"theta_center", vector_to_json(spec.theta_center)},
      {"lambda_center", vector_to_json(spec.lambda_center)},
      {"kappa_theta", spec.kappa_theta},
      {"kappa_lambda", spec.kappa_lambda},
      {"theta_feature_centers", points_to_json(spec.theta_feature_centers)},
      {"lambda_state_centers", points_to_json(spec.lambda_state_centers)},
      {"lambda_action_centers", spec.lambda_action_centers},
      {"sigma_theta", spec.sigma_theta},
      {"sigma_lambda", spec.sigma_lambda},
      {"cost_range", {spec.cost_lo, spec.cost_hi}},
  };
}

InventorySpec spec_from_json(const Json& j) {
  InventorySpec spec = InventorySpec::defaults();
  if (j.contains("states")) spec.states = points_from_json(j["states"]);
  if (j.contains("actions")) spec.actions = j["actions"].get<std::vector<double>>();
  spec.branching = j.value("branching", spec.branching);
  spec.gamma = j.value("gamma", spec.gamma);
  if (j.contains("theta_center")) spec.theta_center = vector_from_json(j["theta_center"]);
  if (j.contains("lambda_center")) spec.lambda_center = vector_from_json(j["lambda_center"]);
  spec.kappa_theta = j.value("kappa_theta", spec.kappa_theta);
  spec.kappa_lambda = j.value("kappa_lambda", spec.kappa_lambda);
  if (j.contains("theta_feature_centers")) {
    spec.theta_feature_centers = points_from_json(j["theta_feature_centers"]);
  }
  if (j.contains("lambda_state_centers")) {
    spec.lambda_state_centers = points_from_json(j["lambda_state_centers"]);
  }
  if (j.contains("lambda_action_centers")) {
    spec.lambda_action_centers = j["lambda_action_centers"].get<std::vector<double>>();
  }
  spec.sigma_theta = j.value("sigma_theta", spec.sigma_theta);
  spec.sigma_lambda = j.value("sigma_lambda", spec.sigma_lambda);
  if (j.contains("cost_range")) {
    const auto range = j["cost_range"].get<std::vector<double>>();
    if (range.size() != 2) throw InvalidInput("cost_range must have two entries");
    spec.cost_lo = range[0];
    spec.cost_hi = range[1];
  }
  spec.validate();
  return spec;
}

Instance make_garnet_instance(TabularRmdp mdp, AmbiguitySet set) {
  if (!set.is_tabular()) throw InvalidInput("garnet instances need a tabular set");
  auto shared = std::make_shared<const TabularRmdp>(std::move(mdp));
  return Instance{"garnet", std::move(shared), nullptr, std::move(set)};
}

Instance make_inventory_instance(InventoryModel model) {
  auto shared = std::make_shared<const InventoryModel>(std::move(model));
  auto mdp = std::make_shared<const TabularRmdp>(shared->mdp());
  AmbiguitySet set = AmbiguitySet::param_xi(shared);
  return Instance{"inventory", std::move(mdp), std::move(shared), std::move(set)};
}

Json instance_to_json(const Instance& instance) {
  Json j{{"format", kInstanceFormat},
         {"version", kInstanceVersion},
         {"problem", instance.problem},
         {"mdp", mdp_to_json(*instance.mdp)},
         {"ambiguity", set_to_json(instance.set)}};
  if (instance.inventory) j["inventory"] = spec_to_json(instance.inventory->spec());
  return j;
}

Instance instance_from_json(const Json& j) {
  if (j.value("format", std::string()) != kInstanceFormat) {
    throw InvalidInput("not an rmdp-instance file");
  }
  if (j.value("version", 0) != kInstanceVersion) {
    throw InvalidInput("unsupported instance version");
  }
  TabularRmdp mdp = mdp_from_json(j.at("mdp"));
  const std::string problem = j.at("problem").get<std::string>();
  if (problem == "inventory") {
    return make_inventory_instance(
        InventoryModel(spec_from_json(j.at("inventory")), std::move(mdp)));
  }
  if (problem != "garnet") throw InvalidInput("unknown problem '" + problem + "'");

  const Json& amb = j.at("ambiguity");
  const SetKind kind = set_kind_from_string(amb.at("kind").get<std::string>());
  switch (kind) {
    case SetKind::kSingleton: {
      AmbiguitySet set = AmbiguitySet::singleton(mdp.nominal());
      return make_garnet_instance(std::move(mdp), std::move(set));
    }
    case SetKind::kSRect: {
      AmbiguitySet set = AmbiguitySet::s_rect(mdp.nominal(), vector_from_json(amb.at("kappa")));
      return make_garnet_instance(std::move(mdp), std::move(set));
    }
    case SetKind::kSaRect: {
      AmbiguitySet set = AmbiguitySet::sa_rect(mdp.nominal(), vector_from_json(amb.at("kappa")));
      return make_garnet_instance(std::move(mdp), std::move(set));
    }
    case SetKind::kParamXi:
      break;
  }
  throw InvalidInput("param_xi sets require an inventory instance");
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

Instance load_instance(const std::filesystem::path& path) {
  return instance_from_json(read_json_file(path));
}

void save_instance(const Instance& instance, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << instance_to_json(instance).dump(2) << '\n';
}

Policy policy_from_json(const Json& j, const Instance& instance) {
  const TabularRmdp& mdp = *instance.mdp;
  if (j.contains("policy")) {
    return Policy(matrix_from_json(j["policy"], mdp.num_states(), mdp.num_actions(), "policy"));
  }
  if (j.contains("w")) {
    if (!instance.inventory) throw InvalidInput("softmax weights need an inventory instance");
    return policy_from_w(*instance.inventory, vector_from_json(j["w"]));
  }
  throw InvalidInput("policy file needs a \"policy\" matrix or \"w\" weights");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace rmdp
