// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fi/common.hpp"
#include "fi/distributions.hpp"
#include "fi/infotheory.hpp"
#include "json.hpp"

namespace fi {

enum class Impurity { shannon, gini, variance };
enum class SplitFamily { multiway, binary_ordered, binary_unordered, one_vs_all };
enum class SplitStrategy { best, random };

inline Impurity parse_impurity(const std::string& s) {
  if (s == "shannon" || s == "entropy") return Impurity::shannon;
  if (s == "gini") return Impurity::gini;
  if (s == "variance") return Impurity::variance;
  throw ParameterError("unknown impurity '" + s + "'");
}

inline SplitFamily parse_split_family(const std::string& s) {
  if (s == "multiway" || s == "multiway_exhaustive") return SplitFamily::multiway;
  if (s == "binary_ordered" || s == "ordered") return SplitFamily::binary_ordered;
  if (s == "binary_unordered" || s == "unordered") return SplitFamily::binary_unordered;
  if (s == "one_vs_all" || s == "binary_one_vs_all") return SplitFamily::one_vs_all;
  throw ParameterError("unknown split family '" + s + "'");
}

struct TreeConfig {
  int K = 1;
  int max_depth = -1;  // negative: unlimited
  int n_min = 2;
  std::optional<Impurity> impurity;  // default: shannon or variance by output type
  SplitFamily family = SplitFamily::multiway;
  SplitStrategy strategy = SplitStrategy::best;
  std::uint64_t seed = 0;
};

enum class RuleKind { none, multiway, threshold, subset };

struct Node {
  int var = -1;
  RuleKind rule = RuleKind::none;
  double threshold = 0;        // threshold: value <= threshold goes to child 0
  Mask left = 0, right = 0;    // subset: observed codes of each child
  std::vector<int> value_child;  // multiway: code -> child slot, -1 if unseen
  int default_child = 0;       // slot used for codes unseen in training
  std::vector<int> children;   // node ids
  int parent = -1;
  int depth = 0;
  std::size_t n = 0;           // rows reaching the node
  double weight = 0;           // their total weight
  double p = 0;                // weight / root weight
  double impurity = 0;
  double delta = 0;            // p * impurity decrease, internal nodes only
  std::vector<double> dist;    // class distribution at leaves (classification)
  double mean = 0;             // regression output
  int label = 0;               // most frequent class, lowest id on ties

  bool leaf() const { return children.empty(); }
};

struct Tree {
  std::vector<Node> nodes;
  TreeConfig config;
  Impurity impurity = Impurity::shannon;
  int output = -1;
  bool classification = true;
  int n_classes = 0;
  std::vector<double> importance;  // per column: sum of node deltas
  std::vector<int> split_count;    // per column

  std::size_t internal_nodes() const {
    std::size_t k = 0;
    for (auto& nd : nodes) k += nd.leaf() ? 0 : 1;
    return k;
  }

  // get(col) returns the value of column col for the query point.
  template <typename Get>
  const Node& leaf_for(Get&& get) const {
    const Node* nd = &nodes[0];
    while (!nd->leaf()) {
      double v = get(nd->var);
      int slot = nd->default_child;
      switch (nd->rule) {
        case RuleKind::threshold:
          slot = v <= nd->threshold ? 0 : 1;
          break;
        case RuleKind::multiway: {
          int code = static_cast<int>(v);
          if (code >= 0 && code < static_cast<int>(nd->value_child.size()) && nd->value_child[code] >= 0)
            slot = nd->value_child[code];
          break;
        }
        case RuleKind::subset: {
          int code = static_cast<int>(v);
          if (code >= 0 && code < 64) {
            if (nd->left >> code & 1U)
              slot = 0;
            else if (nd->right >> code & 1U)
              slot = 1;
          }
          break;
        }
        case RuleKind::none:
          break;
      }
      nd = &nodes[nd->children[slot]];
    }
    return *nd;
  }

  double predict(const Dataset& ds, std::size_t row) const {
    const Node& lf = leaf_for([&](int c) { return ds.value(row, c); });
    return classification ? lf.label : lf.mean;
  }

  double predict(const std::vector<double>& x) const {
    const Node& lf = leaf_for([&](int c) { return x.at(c); });
    return classification ? lf.label : lf.mean;
  }

  // i(root) - sum over leaves of p(t) i(t); equals the sum of deltas.
  double root_minus_leaves() const {
    double s = nodes[0].impurity;
    for (auto& nd : nodes)
      if (nd.leaf()) s -= nd.p * nd.impurity;
    return s;
  }

  double total_delta() const {
    double s = 0;
    for (auto& nd : nodes) s += nd.delta;
    return s;
  }
};

namespace detail {

// Sufficient statistics of the output over a set of rows.
struct Stats {
  std::vector<double> cls;  // classification
  double w = 0, wy = 0, wy2 = 0;
  std::size_t n = 0;

  void reset(int n_classes) {
    cls.assign(n_classes, 0.0);
    w = wy = wy2 = 0;
    n = 0;
  }
  void add(double y, double wt, bool classification) {
    if (classification) cls[static_cast<int>(y)] += wt;
    w += wt;
    wy += wt * y;
    wy2 += wt * y * y;
    ++n;
  }
  void add(const Stats& o) {
    for (std::size_t k = 0; k < cls.size(); ++k) cls[k] += o.cls[k];
    w += o.w;
    wy += o.wy;
    wy2 += o.wy2;
    n += o.n;
  }
  void sub(const Stats& o) {
    for (std::size_t k = 0; k < cls.size(); ++k) cls[k] -= o.cls[k];
    w -= o.w;
    wy -= o.wy;
    wy2 -= o.wy2;
    n -= o.n;
  }
};

inline double impurity_of(const Stats& s, Impurity kind) {
  if (s.w <= 0) return 0;
  switch (kind) {
    case Impurity::shannon:
      return entropy_of_weights(s.cls);
    case Impurity::gini: {
      double g = 1;
      for (double c : s.cls) g -= (c / s.w) * (c / s.w);
      return g < 0 ? 0 : g;
    }
    case Impurity::variance: {
      double m = s.wy / s.w;
      double v = s.wy2 / s.w - m * m;
      return v < 0 ? 0 : v;
    }
  }
  return 0;
}

struct Candidate {
  int var = -1;
  RuleKind rule = RuleKind::none;
  double threshold = 0;
  Mask left = 0, right = 0;
  double gain = -1;  // impurity decrease at the node
};

}  // namespace detail

inline double impurity(const std::vector<double>& class_weights, Impurity kind) {
  if (class_weights.empty()) throw ParameterError("impurity of an empty sample");
  detail::Stats s;
  s.cls = class_weights;
  for (double c : class_weights) s.w += c;
  if (s.w <= 0) throw ParameterError("impurity of an empty sample");
  if (kind == Impurity::variance) throw ParameterError("variance impurity needs output values");
  return detail::impurity_of(s, kind);
}

inline double variance_impurity(const std::vector<double>& values) {
  if (values.empty()) throw ParameterError("impurity of an empty sample");
  detail::Stats s;
  for (double v : values) s.add(v, 1.0, false);
  return detail::impurity_of(s, Impurity::variance);
}

struct SplitRule {
  RuleKind rule = RuleKind::none;
  double threshold = 0;
  Mask left = 0, right = 0;
};

// Candidate binary or multiway rules over the distinct observed codes.
inline std::vector<SplitRule> enumerate_candidate_splits(std::vector<int> values, SplitFamily family) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<SplitRule> out;
  int m = static_cast<int>(values.size());
  if (m < 2) return out;
  Mask all = 0;
  for (int v : values) {
    if (v < 0 || v >= 64) throw ParameterError("codes must lie in 0..63");
    all |= Mask{1} << v;
  }
  switch (family) {
    case SplitFamily::multiway:
      out.push_back({RuleKind::multiway, 0, 0, 0});
      break;
    case SplitFamily::binary_ordered:
      for (int i = 0; i + 1 < m; ++i) {
        Mask left = 0;
        for (int j = 0; j <= i; ++j) left |= Mask{1} << values[j];
        out.push_back({RuleKind::threshold, 0.5 * (values[i] + values[i + 1]), left, all & ~left});
      }
      break;
    case SplitFamily::binary_unordered: {
      if (m > 24) throw ParameterError("too many values for unordered splits");
      // Subsets containing the first value, excluding the full set.
      std::uint64_t count = (std::uint64_t{1} << (m - 1)) - 1;
      for (std::uint64_t s = 0; s < count; ++s) {
        Mask left = Mask{1} << values[0];
        for (int j = 1; j < m; ++j)
          if (s >> (j - 1) & 1U) left |= Mask{1} << values[j];
        out.push_back({RuleKind::subset, 0, left, all & ~left});
      }
      break;
    }
    case SplitFamily::one_vs_all:
      for (int v : values) {
        Mask left = Mask{1} << v;
        out.push_back({RuleKind::subset, 0, left, all & ~left});
      }
      break;
  }
  return out;
}

namespace detail {

class TreeGrower {
 public:
  TreeGrower(const Dataset& ds, const TreeConfig& cfg, Rng& rng, const std::vector<int>& features,
             const std::vector<double>& w)
      : ds_(ds), cfg_(cfg), rng_(rng), features_(features), w_(w) {
    tree_.config = cfg;
    tree_.output = ds.output;
    tree_.classification = ds.columns[ds.output].categorical();
    tree_.n_classes = tree_.classification ? ds.columns[ds.output].cardinality : 0;
    tree_.impurity = cfg.impurity ? *cfg.impurity : (tree_.classification ? Impurity::shannon : Impurity::variance);
    if (!tree_.classification && tree_.impurity != Impurity::variance)
      throw ParameterError("numeric output requires variance impurity");
    if (tree_.classification && tree_.impurity == Impurity::variance)
      throw ParameterError("variance impurity needs a numeric output");
    if (cfg.K < 1 || cfg.K > static_cast<int>(features_.size()))
      throw ParameterError("K must lie in [1, number of features]");
    if (cfg.n_min < 2) throw ParameterError("n_min must be at least 2");
    for (int f : features_) {
      if (f == ds.output) throw ParameterError("output column used as feature");
      if (cfg.family == SplitFamily::multiway && !ds.columns[f].categorical())
        throw ParameterError("multiway splits need categorical inputs");
      if (ds.columns[f].categorical() && ds.columns[f].cardinality > 64 &&
          cfg.family != SplitFamily::binary_ordered)
        throw ParameterError("cardinality above 64 needs ordered splits");
    }
    tree_.importance.assign(ds.n_columns(), 0.0);
    tree_.split_count.assign(ds.n_columns(), 0);
  }

  Tree grow() {
    std::vector<int> rows;
    for (std::size_t r = 0; r < ds_.n_rows(); ++r)
      if (w_[r] > 0) rows.push_back(static_cast<int>(r));
    if (rows.empty()) throw ParameterError("no rows with positive weight");
    root_weight_ = 0;
    for (int r : rows) root_weight_ += w_[r];
    used_.assign(ds_.n_columns(), 0);
    build(std::move(rows), -1, 0);
    return std::move(tree_);
  }

 private:
  double y(int r) const { return ds_.value(r, ds_.output); }

  Stats stats_of(const std::vector<int>& rows) const {
    Stats s;
    s.reset(tree_.n_classes);
    for (int r : rows) s.add(y(r), w_[r], tree_.classification);
    return s;
  }

  bool pure(const Stats& s) const {
    if (tree_.classification) {
      int nonzero = 0;
      for (double c : s.cls) nonzero += c > 0;
      return nonzero <= 1;
    }
    return impurity_of(s, Impurity::variance) <= 1e-14 * std::max(1.0, s.wy2 / s.w);
  }

  bool splittable(int f, const std::vector<int>& rows) const {
    if (cfg_.family == SplitFamily::multiway && used_[f]) return false;
    double first = ds_.value(rows[0], f);
    for (int r : rows)
      if (ds_.value(r, f) != first) return true;
    return false;
  }

  double children_impurity(const std::vector<Stats>& parts, double total) const {
    double s = 0;
    for (auto& pt : parts)
      if (pt.w > 0) s += pt.w / total * impurity_of(pt, tree_.impurity);
    return s;
  }

  // Evaluates one variable: the best rule or one drawn at random.
  Candidate evaluate(int f, const std::vector<int>& rows, const Stats& node, double node_imp) {
    Candidate best;
    best.var = f;
    const Column& col = ds_.columns[f];
    bool ordered_numeric = !col.categorical() || col.cardinality > 64;
    if (ordered_numeric || (cfg_.family == SplitFamily::binary_ordered && cfg_.strategy == SplitStrategy::random) ||
        (cfg_.family == SplitFamily::binary_ordered && col.cardinality > 64))
      return evaluate_ordered(f, rows, node, node_imp);

    // Per-code statistics.
    int m = col.cardinality;
    std::vector<Stats> per(m);
    for (auto& s : per) s.reset(tree_.n_classes);
    for (int r : rows) per[ds_.code(r, f)].add(y(r), w_[r], tree_.classification);
    std::vector<int> observed;
    for (int v = 0; v < m; ++v)
      if (per[v].n > 0) observed.push_back(v);

    auto rules = enumerate_candidate_splits(observed, cfg_.family);
    if (rules.empty()) return best;
    if (cfg_.strategy == SplitStrategy::random) {
      SplitRule pick = rules[uniform_index(rng_, rules.size())];
      rules.assign(1, pick);
    }
    int ties = 0;
    for (auto& rule : rules) {
      double child_imp;
      if (rule.rule == RuleKind::multiway) {
        std::vector<Stats> parts;
        for (int v : observed) parts.push_back(per[v]);
        child_imp = children_impurity(parts, node.w);
      } else {
        std::vector<Stats> parts(2);
        parts[0].reset(tree_.n_classes);
        parts[1].reset(tree_.n_classes);
        for (int v : observed) parts[(rule.left >> v & 1U) ? 0 : 1].add(per[v]);
        child_imp = children_impurity(parts, node.w);
      }
      double gain = std::max(0.0, node_imp - child_imp);
      if (consider(best.gain, gain, ties)) {
        best.gain = gain;
        best.rule = rule.rule;
        best.threshold = rule.threshold;
        best.left = rule.left;
        best.right = rule.right;
      }
    }
    return best;
  }

  Candidate evaluate_ordered(int f, const std::vector<int>& rows, const Stats& node, double node_imp) {
    Candidate best;
    best.var = f;
    best.rule = RuleKind::threshold;
    if (cfg_.strategy == SplitStrategy::random) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int r : rows) {
        lo = std::min(lo, ds_.value(r, f));
        hi = std::max(hi, ds_.value(r, f));
      }
      double thr = lo + (hi - lo) * uniform01(rng_);
      if (thr >= hi) thr = std::nextafter(hi, lo);
      std::vector<Stats> parts(2);
      parts[0].reset(tree_.n_classes);
      parts[1].reset(tree_.n_classes);
      for (int r : rows) parts[ds_.value(r, f) <= thr ? 0 : 1].add(y(r), w_[r], tree_.classification);
      best.threshold = thr;
      best.gain = std::max(0.0, node_imp - children_impurity(parts, node.w));
      return best;
    }
    std::vector<std::pair<double, int>> order;
    order.reserve(rows.size());
    for (int r : rows) order.emplace_back(ds_.value(r, f), r);
    std::sort(order.begin(), order.end());
    std::vector<Stats> parts(2);
    parts[0].reset(tree_.n_classes);
    parts[1] = node;
    int ties = 0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      Stats one;
      one.reset(tree_.n_classes);
      one.add(y(order[i].second), w_[order[i].second], tree_.classification);
      parts[0].add(one);
      parts[1].sub(one);
      if (order[i].first == order[i + 1].first) continue;
      double gain = std::max(0.0, node_imp - children_impurity(parts, node.w));
      if (consider(best.gain, gain, ties)) {
        best.gain = gain;
        best.threshold = 0.5 * (order[i].first + order[i + 1].first);
      }
    }
    return best;
  }

  // Reservoir-style tie breaking: returns true when `gain` should replace the
  // current best.
  bool consider(double current, double gain, int& ties) {
    const double tol = 1e-12;
    if (gain > current + tol) {
      ties = 1;
      return true;
    }
    if (gain >= current - tol) {
      ++ties;
      return uniform_index(rng_, ties) == 0;
    }
    return false;
  }

  void make_leaf(Node& nd, const Stats& s) {
    if (tree_.classification) {
      nd.dist.assign(tree_.n_classes, 0.0);
      for (int k = 0; k < tree_.n_classes; ++k) nd.dist[k] = s.cls[k] / s.w;
      nd.label = static_cast<int>(std::max_element(s.cls.begin(), s.cls.end()) - s.cls.begin());
    }
    nd.mean = s.wy / s.w;
  }

  int build(std::vector<int> rows, int parent, int depth) {
    int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    Stats s = stats_of(rows);
    {
      Node& nd = tree_.nodes[id];
      nd.parent = parent;
      nd.depth = depth;
      nd.n = rows.size();
      nd.weight = s.w;
      nd.p = s.w / root_weight_;
      nd.impurity = impurity_of(s, tree_.impurity);
      make_leaf(nd, s);
    }
    double node_imp = tree_.nodes[id].impurity;
    if (pure(s) || static_cast<int>(rows.size()) < cfg_.n_min || (cfg_.max_depth >= 0 && depth >= cfg_.max_depth))
      return id;

    std::vector<int> candidates;
    for (int f : features_)
      if (splittable(f, rows)) candidates.push_back(f);
    if (candidates.empty()) return id;
    auto drawn = sample_without_replacement(candidates, static_cast<std::size_t>(cfg_.K), rng_);

    Candidate best;
    int ties = 0;
    for (int f : drawn) {
      Candidate c = evaluate(f, rows, s, node_imp);
      if (c.rule == RuleKind::none) continue;
      if (consider(best.gain, c.gain, ties)) best = c;
    }
    if (best.rule == RuleKind::none) return id;

    // Partition rows.
    std::vector<std::vector<int>> parts;
    std::vector<int> value_child;
    if (best.rule == RuleKind::multiway) {
      int m = ds_.columns[best.var].cardinality;
      value_child.assign(m, -1);
      for (int r : rows) {
        int v = ds_.code(r, best.var);
        if (value_child[v] < 0) {
          value_child[v] = 0;
        }
      }
      int slot = 0;
      for (int v = 0; v < m; ++v)
        if (value_child[v] >= 0) value_child[v] = slot++;
      parts.resize(slot);
      for (int r : rows) parts[value_child[ds_.code(r, best.var)]].push_back(r);
    } else {
      parts.resize(2);
      for (int r : rows) {
        double v = ds_.value(r, best.var);
        bool go_left = best.rule == RuleKind::threshold ? v <= best.threshold
                                                        : (best.left >> static_cast<int>(v) & 1U) != 0;
        parts[go_left ? 0 : 1].push_back(r);
      }
    }
    for (auto& pt : parts)
      if (pt.empty()) return id;

    std::vector<double> part_w(parts.size(), 0.0);
    for (std::size_t k = 0; k < parts.size(); ++k)
      for (int r : parts[k]) part_w[k] += w_[r];
    int default_child = static_cast<int>(std::max_element(part_w.begin(), part_w.end()) - part_w.begin());

    {
      Node& nd = tree_.nodes[id];
      nd.var = best.var;
      nd.rule = best.rule;
      nd.threshold = best.threshold;
      nd.left = best.left;
      nd.right = best.right;
      nd.value_child = value_child;
      nd.default_child = default_child;
    }
    std::vector<int> children;
    double child_imp = 0;
    if (best.rule == RuleKind::multiway) used_[best.var] += 1;
    for (auto& pt : parts) {
      int c = build(std::move(pt), id, depth + 1);
      children.push_back(c);
      child_imp += tree_.nodes[c].weight / s.w * tree_.nodes[c].impurity;
    }
    if (best.rule == RuleKind::multiway) used_[best.var] -= 1;
    Node& nd = tree_.nodes[id];
    nd.children = children;
    nd.delta = nd.p * (node_imp - child_imp);
    tree_.importance[best.var] += nd.delta;
    tree_.split_count[best.var] += 1;
    return id;
  }

  const Dataset& ds_;
  const TreeConfig& cfg_;
  Rng& rng_;
  const std::vector<int>& features_;
  const std::vector<double>& w_;
  Tree tree_;
  double root_weight_ = 0;
  std::vector<int> used_;
};

}  // namespace detail

// Grows one tree. features defaults to all inputs (context excluded);
// row_weights defaults to the dataset weights, zero entries drop rows.
inline Tree grow_tree(const Dataset& ds, const TreeConfig& cfg, Rng& rng, const std::vector<int>* features = nullptr,
                      const std::vector<double>* row_weights = nullptr) {
  std::vector<int> feats = features ? *features : ds.input_columns();
  std::vector<double> w;
  if (row_weights) {
    w = *row_weights;
    if (w.size() != ds.n_rows()) throw ParameterError("row weight count mismatch");
  } else {
    w.resize(ds.n_rows());
    for (std::size_t r = 0; r < ds.n_rows(); ++r) w[r] = ds.weight(r);
  }
  detail::TreeGrower g(ds, cfg, rng, feats, w);
  return g.grow();
}

inline Tree grow_tree(const Dataset& ds, const TreeConfig& cfg) {
  Rng rng(cfg.seed);
  return grow_tree(ds, cfg, rng);
}

inline nlohmann::json to_json(const Tree& t, const Dataset* ds = nullptr) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const Node& nd = t.nodes[i];
    nlohmann::json j = {{"id", i}, {"parent", nd.parent}, {"n", nd.n}, {"p", nd.p}, {"impurity", nd.impurity}};
    if (nd.leaf()) {
      if (t.classification)
        j["dist"] = nd.dist;
      else
        j["mean"] = nd.mean;
    } else {
      j["var"] = ds ? nlohmann::json(ds->columns[nd.var].name) : nlohmann::json(nd.var);
      j["delta"] = nd.delta;
      j["children"] = nd.children;
      switch (nd.rule) {
        case RuleKind::threshold: j["threshold"] = nd.threshold; break;
        case RuleKind::subset: j["left"] = cols_of(nd.left); j["right"] = cols_of(nd.right); break;
        case RuleKind::multiway: j["value_child"] = nd.value_child; break;
        case RuleKind::none: break;
      }
    }
    nodes.push_back(j);
  }
  return {{"nodes", nodes}};
}

}  // namespace fi
