#pragma once

#include <string>
#include <utility>
#include <vector>

#include "factorlab/dataset.hpp"
#include "factorlab/rng.hpp"

namespace factorlab::fixture {

/// Frame from named columns; adds term = 1..n and panel = 1 when absent.
inline FactorFrame frame_of(std::vector<std::pair<std::string, Vector>> cols, std::string response = "y") {
  const std::size_t n = cols.front().second.size();
  bool has_term = false, has_panel = false;
  for (const auto& [name, _] : cols) {
    has_term = has_term || name == "term";
    has_panel = has_panel || name == "panel";
  }
  if (!has_term) {
    Vector t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i + 1);
    cols.emplace_back("term", t);
  }
  if (!has_panel) cols.emplace_back("panel", Vector(n, 1.0));
  std::vector<std::string> names;
  std::vector<double> data(n * cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    names.push_back(cols[j].first);
    for (std::size_t i = 0; i < n; ++i) data[i * cols.size() + j] = cols[j].second.at(i);
  }
  FrameRoles roles;
  roles.response = std::move(response);
  return FactorFrame(std::move(names), Matrix(n, cols.size(), std::move(data)), roles);
}

inline Vector normal_vector(Rng& rng, std::size_t n, double mean = 0.0, double sd = 1.0) {
  Vector v(n);
  for (auto& x : v) x = rng.normal(mean, sd);
  return v;
}

}  // namespace factorlab::fixture
