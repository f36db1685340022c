#pragma once

#include "copvi/copula_va.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace copvi {

inline constexpr int kArtifactFormatVersion = 1;

struct FitArtifact {
  int format_version = kArtifactFormatVersion;
  nlohmann::json config = nlohmann::json::object();
  VariationalParams lambda;
  double lb_bar = 0.0;
  bool lb_bar_short = false;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  // Correlation model metadata; r = 0 for other targets.
  Eigen::Index r = 0;
  std::vector<std::string> column_labels;
};

nlohmann::json to_json(const FitArtifact& a);

// Throws DataError on a version mismatch or malformed content.
FitArtifact artifact_from_json(const nlohmann::json& j);

std::string artifact_to_string(const FitArtifact& a);
FitArtifact artifact_from_string(const std::string& text);

void save_artifact(const std::string& path, const FitArtifact& a);
FitArtifact load_artifact(const std::string& path);

}  // namespace copvi
