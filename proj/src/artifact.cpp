#include "copvi/artifact.hpp"

#include "copvi/errors.hpp"

#include <fstream>
#include <sstream>

namespace copvi {

using nlohmann::json;

json to_json(const FitArtifact& a) {
  const VariationalParams& lam = a.lambda;
  json transforms = json::array();
  for (const auto& t : lam.transforms) transforms.push_back(std::string(to_string(t.kind)));
  const Eigen::VectorXd flat = lam.flatten();
  json j;
  j["format_version"] = a.format_version;
  j["config"] = a.config;
  j["model"] = {{"m", lam.dim()},
                {"factors", lam.factors()},
                {"family", std::string(to_string(lam.family.kind))},
                {"transforms", transforms},
                {"r", a.r},
                {"column_labels", a.column_labels}};
  j["lambda"] = std::vector<double>(flat.data(), flat.data() + flat.size());
  j["lb_bar"] = a.lb_bar;
  j["lb_bar_short"] = a.lb_bar_short;
  j["steps"] = a.steps;
  j["seed"] = a.seed;
  j["wall_seconds"] = a.wall_seconds;
  return j;
}

FitArtifact artifact_from_json(const json& j) {
  try {
    FitArtifact a;
    a.format_version = j.at("format_version").get<int>();
    if (a.format_version != kArtifactFormatVersion) {
      throw DataError("artifact format version " + std::to_string(a.format_version) +
                      " is not supported (expected " +
                      std::to_string(kArtifactFormatVersion) + ")");
    }
    a.config = j.value("config", json::object());
    const json& model = j.at("model");
    const auto m = model.at("m").get<Eigen::Index>();
    const auto K = model.at("factors").get<Eigen::Index>();
    const auto kinds = model.at("transforms").get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(kinds.size()) != m) {
      throw DataError("artifact: transform list does not match m");
    }
    VariationalParams& lam = a.lambda;
    for (const auto& k : kinds) {
      TransformParams p;
      p.kind = transform_kind_from_string(k);
      lam.transforms.push_back(p);
    }
    lam.scale.tau = Eigen::MatrixXd::Zero(m, K);
    lam.family.kind = family_kind_from_string(model.at("family").get<std::string>());
    const auto flat = j.at("lambda").get<std::vector<double>>();
    lam.unflatten(Eigen::Map<const Eigen::VectorXd>(flat.data(),
                                                    static_cast<Eigen::Index>(flat.size())));
    a.r = model.value("r", Eigen::Index{0});
    a.column_labels = model.value("column_labels", std::vector<std::string>{});
    a.lb_bar = j.value("lb_bar", 0.0);
    a.lb_bar_short = j.value("lb_bar_short", false);
    a.steps = j.value("steps", std::size_t{0});
    a.seed = j.value("seed", std::uint64_t{0});
    a.wall_seconds = j.value("wall_seconds", 0.0);
    return a;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed artifact: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed artifact: ") + e.what());
  }
}

std::string artifact_to_string(const FitArtifact& a) { return to_json(a).dump(2) + "\n"; }

FitArtifact artifact_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("artifact is not valid JSON: ") + e.what());
  }
  return artifact_from_json(j);
}

void save_artifact(const std::string& path, const FitArtifact& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << artifact_to_string(a);
  if (!out) throw DataError("failed writing " + path);
}

FitArtifact load_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return artifact_from_string(ss.str());
}

}  // namespace copvi
