#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace hlasdi {

/// On-disk container used by datasets and checkpoints: a JSON header
/// followed by named little-endian float64 arrays in declared order.
struct Container {
  nlohmann::json header;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> arrays;

  void add(const std::string& name, const Eigen::MatrixXd& m);
  bool has(const std::string& name) const;
  const Eigen::MatrixXd& get(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  static Container load(const std::filesystem::path& path);
};

}  // namespace hlasdi
