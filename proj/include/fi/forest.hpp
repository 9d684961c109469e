// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <string>
#include <vector>

#include "fi/tree.hpp"

namespace fi {

enum class Method { bagging, random_subspace, random_patches, extra_trees, totally_randomized };

inline Method parse_method(const std::string& s) {
  if (s == "bagging" || s == "random_forest") return Method::bagging;
  if (s == "random_subspace" || s == "subspace") return Method::random_subspace;
  if (s == "random_patches" || s == "patches") return Method::random_patches;
  if (s == "extra_trees" || s == "et") return Method::extra_trees;
  if (s == "totally_randomized" || s == "trt") return Method::totally_randomized;
  throw ParameterError("unknown method '" + s + "'");
}

inline const char* to_string(Method m) {
  switch (m) {
    case Method::bagging: return "bagging";
    case Method::random_subspace: return "random_subspace";
    case Method::random_patches: return "random_patches";
    case Method::extra_trees: return "extra_trees";
    case Method::totally_randomized: return "totally_randomized";
  }
  return "?";
}

struct ForestConfig {
  Method method = Method::extra_trees;
  int n_trees = 100;
  TreeConfig tree;
  std::uint64_t seed = 0;
  int q = 0;           // features per tree (subspace, patches)
  std::size_t l = 0;   // rows per tree (patches)
  unsigned threads = 0;
};

struct Forest {
  std::vector<Tree> trees;
  std::vector<std::vector<int>> bags;      // per tree: row multiplicities, empty if every row is used once
  std::vector<std::vector<int>> features;  // per tree: candidate columns
  ForestConfig config;

  bool has_oob() const { return !bags.empty() && !bags[0].empty(); }
  bool out_of_bag(std::size_t t, std::size_t row) const { return !bags[t].empty() && bags[t][row] == 0; }
};

inline Forest build_forest(const Dataset& ds, const ForestConfig& cfg) {
  ds.validate();
  if (cfg.n_trees < 1) throw ParameterError("need at least one tree");
  std::vector<int> inputs = ds.input_columns();
  int p = static_cast<int>(inputs.size());
  std::size_t n = ds.n_rows();
  bool subspace = cfg.method == Method::random_subspace || cfg.method == Method::random_patches;
  if (subspace && (cfg.q < 1 || cfg.q > p)) throw ParameterError("subspace size q must lie in [1, p]");
  if (cfg.method == Method::random_patches && (cfg.l < 1 || cfg.l > n))
    throw ParameterError("patch size l must lie in [1, N]");

  if (cfg.tree.K < 1 || cfg.tree.K > p) throw ParameterError("K must lie in [1, p]");
  TreeConfig tc = cfg.tree;
  if (cfg.method == Method::extra_trees) tc.strategy = SplitStrategy::random;
  if (cfg.method == Method::totally_randomized) {
    tc.K = 1;
    tc.strategy = SplitStrategy::random;
  }

  Forest f;
  f.config = cfg;
  f.config.tree = tc;
  f.trees.resize(cfg.n_trees);
  f.bags.resize(cfg.n_trees);
  f.features.resize(cfg.n_trees);
  parallel_for(cfg.n_trees, cfg.threads, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t));
    std::vector<int> feats = subspace ? sample_without_replacement(inputs, cfg.q, rng) : inputs;
    std::sort(feats.begin(), feats.end());
    std::vector<int> bag;
    if (cfg.method == Method::bagging) {
      bag.assign(n, 0);
      for (std::size_t k = 0; k < n; ++k) ++bag[uniform_index(rng, n)];
    } else if (cfg.method == Method::random_patches) {
      bag.assign(n, 0);
      std::vector<int> idx(n);
      for (std::size_t k = 0; k < n; ++k) idx[k] = static_cast<int>(k);
      for (int r : sample_without_replacement(idx, cfg.l, rng)) bag[r] = 1;
    }
    std::vector<double> w(n);
    for (std::size_t r = 0; r < n; ++r) w[r] = ds.weight(r) * (bag.empty() ? 1 : bag[r]);
    TreeConfig local = tc;
    local.K = std::min<int>(local.K, static_cast<int>(feats.size()));
    f.trees[t] = grow_tree(ds, local, rng, &feats, &w);
    f.bags[t] = std::move(bag);
    f.features[t] = std::move(feats);
  });
  return f;
}

namespace detail {
inline double aggregate(const Forest& f, const std::vector<double>& outputs) {
  if (f.trees[0].classification) {
    std::vector<int> votes(f.trees[0].n_classes, 0);
    for (double o : outputs) ++votes[static_cast<int>(o)];
    return static_cast<double>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  std::vector<double> sorted = outputs;
  std::sort(sorted.begin(), sorted.end());
  double s = 0;
  for (double o : sorted) s += o;
  return s / static_cast<double>(sorted.size());
}
}  // namespace detail

inline double forest_predict(const Forest& f, const std::vector<double>& x) {
  std::vector<double> out;
  for (auto& t : f.trees) out.push_back(t.predict(x));
  return detail::aggregate(f, out);
}

inline double forest_predict(const Forest& f, const Dataset& ds, std::size_t row) {
  std::vector<double> out;
  for (auto& t : f.trees) out.push_back(t.predict(ds, row));
  return detail::aggregate(f, out);
}

enum class Loss { zero_one, mse };

inline Loss parse_loss(const std::string& s) {
  if (s == "zero_one" || s == "01") return Loss::zero_one;
  if (s == "mse") return Loss::mse;
  throw ParameterError("unknown loss '" + s + "'");
}

inline double loss_of(Loss loss, double pred, double truth) {
  return loss == Loss::zero_one ? (pred != truth ? 1.0 : 0.0) : (pred - truth) * (pred - truth);
}

struct OobResult {
  double error = 0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;  // rows in-bag for every tree
};

inline OobResult oob_error(const Forest& f, const Dataset& ds, Loss loss) {
  if (!f.has_oob()) throw ParameterError("forest has no out-of-bag samples");
  OobResult res;
  double num = 0, den = 0;
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    std::vector<double> out;
    for (std::size_t t = 0; t < f.trees.size(); ++t)
      if (f.out_of_bag(t, r)) out.push_back(f.trees[t].predict(ds, r));
    if (out.empty()) {
      ++res.n_excluded;
      continue;
    }
    ++res.n_used;
    num += ds.weight(r) * loss_of(loss, detail::aggregate(f, out), ds.value(r, ds.output));
    den += ds.weight(r);
  }
  res.error = den > 0 ? num / den : 0.0;
  return res;
}

inline nlohmann::json to_json(const Forest& f, const Dataset* ds = nullptr) {
  nlohmann::json trees = nlohmann::json::array();
  for (std::size_t t = 0; t < f.trees.size(); ++t) {
    auto j = to_json(f.trees[t], ds);
    j["features"] = f.features[t];
    trees.push_back(j);
  }
  return {{"method", to_string(f.config.method)}, {"seed", f.config.seed}, {"trees", trees}};
}

}  // namespace fi
