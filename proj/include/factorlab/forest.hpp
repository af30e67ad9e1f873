#pragma once

// Random forest regression: bootstrap-aggregated CART trees with a random
// subset of candidate features at every split.
//
// Reproducibility: tree t draws all of its randomness (bootstrap sample and
// per-node feature order) from Rng::stream(config.seed, t), so a forest is a
// pure function of (data, config) whatever the number of training threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "factorlab/dataset.hpp"
#include "factorlab/error.hpp"
#include "factorlab/numkernel.hpp"
#include "factorlab/rng.hpp"

namespace factorlab {

struct ForestConfig {
  std::size_t n_trees = 500;
  std::size_t m_try = 0;      // 0 selects round(sqrt(p))
  std::size_t min_leaf = 5;
  std::size_t max_depth = 0;  // 0 means unlimited
  std::uint64_t seed = 0;
  bool bootstrap = true;
  std::size_t threads = 1;    // 0 selects hardware concurrency; never affects results
};

inline std::size_t default_m_try(std::size_t n_features) noexcept {
  const auto m = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n_features))));
  return std::max<std::size_t>(1, m);
}

/// Validates `config` against the feature count and fills in m_try.
inline ForestConfig resolve_config(ForestConfig config, std::size_t n_features) {
  if (n_features == 0) throw Error(ErrorKind::ConfigInvalid, "forest needs at least one feature");
  if (config.n_trees == 0) throw Error(ErrorKind::ConfigInvalid, "n_trees must be >= 1");
  if (config.min_leaf == 0) throw Error(ErrorKind::ConfigInvalid, "min_leaf must be >= 1");
  if (config.m_try == 0) config.m_try = default_m_try(n_features);
  if (config.m_try > n_features) {
    throw Error(ErrorKind::ConfigInvalid, "m_try " + std::to_string(config.m_try) + " exceeds the " +
                                              std::to_string(n_features) + " available features");
  }
  return config;
}

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // rows with x <= threshold go left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double value = 0.0;         // mean training response under this node
  std::uint32_t count = 0;    // training samples (with bootstrap multiplicity)
  double gain = 0.0;          // SSE reduction achieved by the split

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw Error(ErrorKind::InvalidArgument, "tree has no nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& nd = nodes_[i];
      if (!nd.is_leaf() && (nd.left <= i || nd.right <= i || nd.left >= nodes_.size() ||
                            nd.right >= nodes_.size())) {
        throw Error(ErrorKind::InvalidArgument, "tree node " + std::to_string(i) + " has invalid children");
      }
    }
  }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

  double predict(std::span<const double> row) const noexcept {
    std::size_t at = 0;
    while (!nodes_[at].is_leaf()) {
      const auto& nd = nodes_[at];
      at = row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[at].value;
  }

  std::size_t depth() const { return depth_from(0); }

  std::size_t leaf_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
  }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::size_t depth_from(std::size_t at) const {
    const auto& nd = nodes_[at];
    if (nd.is_leaf()) return 0;
    return 1 + std::max(depth_from(nd.left), depth_from(nd.right));
  }

  std::vector<TreeNode> nodes_;
};

namespace detail {

/// Grows one tree over a (possibly bootstrapped) multiset of row indices.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const ForestConfig& cfg, Rng& rng)
      : x_(x), y_(y), cfg_(cfg), rng_(rng), order_(x.cols()) {}

  RegressionTree build(std::vector<std::size_t> sample) {
    sample_ = std::move(sample);
    grow(0, sample_.size(), 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  struct Split {
    double sse = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
    bool found = false;
  };

  static bool better(const Split& cand, const Split& best) noexcept {
    if (!best.found) return true;
    return std::tie(cand.sse, cand.feature, cand.threshold) < std::tie(best.sse, best.feature, best.threshold);
  }

  std::uint32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t count = end - begin;
    double sum = 0.0;
    for (std::size_t k = begin; k < end; ++k) sum += y_[sample_[k]];
    const double mean = sum / static_cast<double>(count);
    double sse = 0.0;
    bool pure = true;
    const double first = y_[sample_[begin]];
    for (std::size_t k = begin; k < end; ++k) {
      const double d = y_[sample_[k]] - mean;
      sse += d * d;
      pure = pure && y_[sample_[k]] == first;
    }

    const auto id = static_cast<std::uint32_t>(nodes_.size());
    TreeNode node;
    node.value = mean;
    node.count = static_cast<std::uint32_t>(count);
    nodes_.push_back(node);

    const bool depth_capped = cfg_.max_depth != 0 && depth >= cfg_.max_depth;
    if (pure || depth_capped || count < 2 * cfg_.min_leaf) return id;

    const Split split = find_split(begin, end, mean);
    if (!split.found) return id;

    const auto mid = std::stable_partition(
        sample_.begin() + static_cast<std::ptrdiff_t>(begin), sample_.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::size_t row) { return x_(row, split.feature) <= split.threshold; });
    const auto cut = static_cast<std::size_t>(mid - sample_.begin());

    const std::uint32_t left = grow(begin, cut, depth + 1);
    const std::uint32_t right = grow(cut, end, depth + 1);
    TreeNode& self = nodes_[id];
    self.feature = static_cast<std::int32_t>(split.feature);
    self.threshold = split.threshold;
    self.left = left;
    self.right = right;
    self.gain = std::max(0.0, sse - split.sse);
    return id;
  }

  // Visits features in a random order, skipping ones that are constant on
  // this node, until m_try informative candidates have been scored.
  Split find_split(std::size_t begin, std::size_t end, double mean) {
    for (std::size_t j = 0; j < order_.size(); ++j) order_[j] = j;
    rng_.shuffle(std::span<std::size_t>(order_));

    Split best;
    std::size_t scored = 0;
    const std::size_t count = end - begin;
    pairs_.resize(count);
    for (std::size_t feature : order_) {
      if (scored == cfg_.m_try) break;
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t row = sample_[begin + k];
        pairs_[k] = {x_(row, feature), y_[row] - mean};
      }
      std::sort(pairs_.begin(), pairs_.end());
      if (pairs_.front().first == pairs_.back().first) continue;
      ++scored;

      double total = 0.0, total_sq = 0.0;
      for (const auto& [xv, yv] : pairs_) {
        total += yv;
        total_sq += yv * yv;
      }
      double left_sum = 0.0, left_sq = 0.0;
      for (std::size_t k = 0; k + 1 < count; ++k) {
        left_sum += pairs_[k].second;
        left_sq += pairs_[k].second * pairs_[k].second;
        if (pairs_[k].first == pairs_[k + 1].first) continue;
        const std::size_t n_left = k + 1;
        const std::size_t n_right = count - n_left;
        if (n_left < cfg_.min_leaf || n_right < cfg_.min_leaf) continue;
        const double right_sum = total - left_sum;
        const double right_sq = total_sq - left_sq;
        const double child_sse = (left_sq - left_sum * left_sum / static_cast<double>(n_left)) +
                                 (right_sq - right_sum * right_sum / static_cast<double>(n_right));
        double threshold = 0.5 * (pairs_[k].first + pairs_[k + 1].first);
        if (!(threshold < pairs_[k + 1].first)) threshold = pairs_[k].first;
        const Split cand{child_sse, feature, threshold, true};
        if (better(cand, best)) best = cand;
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const ForestConfig& cfg_;
  Rng& rng_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> sample_;
  std::vector<std::pair<double, double>> pairs_;
  std::vector<TreeNode> nodes_;
};

inline RegressionTree train_tree(const Matrix& x, std::span<const double> y, const ForestConfig& cfg,
                                 std::size_t tree_index) {
  Rng rng = Rng::stream(cfg.seed, tree_index);
  const std::size_t n = x.rows();
  std::vector<std::size_t> sample(n);
  if (cfg.bootstrap) {
    for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
  } else {
    for (std::size_t i = 0; i < n; ++i) sample[i] = i;
  }
  return TreeBuilder(x, y, cfg, rng).build(std::move(sample));
}

}  // namespace detail

struct ForestModel {
  std::vector<RegressionTree> trees;
  ForestConfig config;  // resolved (m_try filled in)
  std::vector<std::string> feature_names;
  std::string response_name;

  /// Arithmetic mean of the tree predictions, summed in tree order.
  Vector predict(const Matrix& rows) const {
    if (rows.cols() != feature_names.size()) {
      throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(feature_names.size()) +
                                                    " feature columns, got " + std::to_string(rows.cols()));
    }
    Vector out(rows.rows(), 0.0);
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      const auto row = rows.row(i);
      double acc = 0.0;
      for (const auto& tree : trees) acc += tree.predict(row);
      out[i] = acc / static_cast<double>(trees.size());
    }
    return out;
  }

  friend bool operator==(const ForestModel& a, const ForestModel& b) {
    return a.trees == b.trees && a.feature_names == b.feature_names && a.response_name == b.response_name &&
           a.config.n_trees == b.config.n_trees && a.config.m_try == b.config.m_try &&
           a.config.min_leaf == b.config.min_leaf && a.config.max_depth == b.config.max_depth &&
           a.config.seed == b.config.seed && a.config.bootstrap == b.config.bootstrap;
  }
};

inline std::size_t resolve_threads(std::size_t requested) noexcept {
  if (requested != 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Trains on an explicit feature matrix.
inline ForestModel train_forest(const Matrix& x, std::span<const double> y,
                                std::vector<std::string> feature_names, ForestConfig config) {
  if (x.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "feature rows != response length");
  if (feature_names.size() != x.cols()) throw Error(ErrorKind::DimensionMismatch, "feature name count != columns");
  if (x.rows() < 2) throw Error(ErrorKind::InsufficientRows, "forest needs at least two rows");
  require_finite(y, "response");
  ForestModel model;
  model.config = resolve_config(config, x.cols());
  model.feature_names = std::move(feature_names);
  model.trees.resize(model.config.n_trees);

  const std::size_t threads = std::min(resolve_threads(model.config.threads), model.config.n_trees);
  if (threads <= 1) {
    for (std::size_t t = 0; t < model.trees.size(); ++t) model.trees[t] = detail::train_tree(x, y, model.config, t);
  } else {
    std::vector<std::exception_ptr> failures(threads);
    {
      std::vector<std::jthread> workers;
      for (std::size_t w = 0; w < threads; ++w) {
        workers.emplace_back([&, w] {
          try {
            for (std::size_t t = w; t < model.trees.size(); t += threads)
              model.trees[t] = detail::train_tree(x, y, model.config, t);
          } catch (...) {
            failures[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& f : failures)
      if (f) std::rethrow_exception(f);
  }
  return model;
}

inline ForestModel train_forest(const FactorFrame& frame, std::span<const std::string> predictors,
                                const std::string& response, const ForestConfig& config) {
  for (const auto& p : predictors) {
    if (p == response) {
      throw Error(ErrorKind::InvalidArgument, "response " + response + " cannot also be a feature", p);
    }
  }
  const Vector y = frame.column(response);
  ForestModel model = train_forest(frame.select(predictors), y,
                                   std::vector<std::string>(predictors.begin(), predictors.end()), config);
  model.response_name = response;
  return model;
}

inline ForestModel train_forest(const FactorFrame& frame, const std::vector<std::string>& predictors,
                                const std::string& response, const ForestConfig& config) {
  return train_forest(frame, std::span<const std::string>(predictors), response, config);
}

inline Vector predict_forest(const ForestModel& model, const Matrix& rows) { return model.predict(rows); }

struct FeatureImportance {
  std::string feature;
  double value = 0.0;
};

/// Total SSE reduction credited to each feature, normalised to sum to one
/// (all zeros when no tree ever split).
inline std::vector<FeatureImportance> feature_importance(const ForestModel& model) {
  Vector totals(model.feature_names.size(), 0.0);
  for (const auto& tree : model.trees)
    for (const auto& node : tree.nodes())
      if (!node.is_leaf()) totals[static_cast<std::size_t>(node.feature)] += node.gain;
  double sum = 0.0;
  for (double t : totals) sum += t;
  std::vector<FeatureImportance> out;
  out.reserve(totals.size());
  for (std::size_t j = 0; j < totals.size(); ++j) {
    out.push_back({model.feature_names[j], sum > 0.0 ? totals[j] / sum : 0.0});
  }
  return out;
}

}  // namespace factorlab
