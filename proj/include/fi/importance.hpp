// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fi/forest.hpp"
#include "fi/infotheory.hpp"

namespace fi {

struct ImportanceReport {
  std::string measure;
  std::vector<std::string> names;
  std::vector<double> scores;
  std::vector<std::vector<double>> per_degree;  // optional, rows per variable
  std::vector<bool> flagged;                    // sentinel scores (z-score with zero spread)
  std::map<std::string, std::string> params;
  std::vector<std::string> notes;

  std::size_t size() const { return scores.size(); }
};

namespace detail {
inline ImportanceReport report_for(const Dataset& ds, const std::vector<int>& cols, const std::string& measure) {
  ImportanceReport rep;
  rep.measure = measure;
  for (int c : cols) rep.names.push_back(ds.columns[c].name);
  rep.scores.assign(cols.size(), 0.0);
  rep.flagged.assign(cols.size(), false);
  return rep;
}

inline void forest_params(ImportanceReport& rep, const Forest& f) {
  rep.params["method"] = to_string(f.config.method);
  rep.params["trees"] = std::to_string(f.trees.size());
  rep.params["K"] = std::to_string(f.config.tree.K);
  rep.params["depth"] = std::to_string(f.config.tree.max_depth);
  rep.params["seed"] = std::to_string(f.config.seed);
}
}  // namespace detail

inline ImportanceReport mdi(const Forest& f, const Dataset& ds) {
  auto cols = ds.input_columns();
  auto rep = detail::report_for(ds, cols, "mdi");
  detail::forest_params(rep, f);
  for (auto& t : f.trees)
    for (std::size_t i = 0; i < cols.size(); ++i) rep.scores[i] += t.importance[cols[i]];
  for (double& s : rep.scores) s /= static_cast<double>(f.trees.size());
  return rep;
}

inline ImportanceReport selection_frequency(const Forest& f, const Dataset& ds) {
  auto cols = ds.input_columns();
  auto rep = detail::report_for(ds, cols, "selection_frequency");
  detail::forest_params(rep, f);
  double total = 0;
  for (auto& t : f.trees)
    for (std::size_t i = 0; i < cols.size(); ++i) {
      rep.scores[i] += t.split_count[cols[i]];
      total += t.split_count[cols[i]];
    }
  if (total == 0) throw ParameterError("forest has no internal nodes");
  for (double& s : rep.scores) s /= total;
  return rep;
}

struct MdaResult {
  ImportanceReport report;
  std::vector<std::vector<double>> per_tree;  // [tree][variable]
};

// Per-tree out-of-bag permutation importance, averaged over trees.
inline MdaResult mda_per_tree(const Forest& f, const Dataset& ds, Loss loss, int n_repeats = 10,
                              std::uint64_t seed = 0, unsigned threads = 0) {
  if (!f.has_oob()) throw ParameterError("MDA needs a forest with out-of-bag samples");
  if (n_repeats < 1) throw ParameterError("n_repeats must be positive");
  auto cols = ds.input_columns();
  MdaResult res;
  res.report = detail::report_for(ds, cols, "mda");
  detail::forest_params(res.report, f);
  res.report.params["repeats"] = std::to_string(n_repeats);
  res.report.params["loss"] = loss == Loss::zero_one ? "zero_one" : "mse";
  res.per_tree.assign(f.trees.size(), std::vector<double>(cols.size(), 0.0));
  std::vector<int> has_oob(f.trees.size(), 0);
  parallel_for(f.trees.size(), threads, [&](std::size_t t) {
    const Tree& tree = f.trees[t];
    std::vector<std::size_t> oob;
    for (std::size_t r = 0; r < ds.n_rows(); ++r)
      if (f.out_of_bag(t, r)) oob.push_back(r);
    if (oob.empty()) return;
    has_oob[t] = 1;
    Rng rng(derive_seed(seed, t));
    double wsum = 0, base = 0;
    for (std::size_t r : oob) {
      wsum += ds.weight(r);
      base += ds.weight(r) * loss_of(loss, tree.predict(ds, r), ds.value(r, ds.output));
    }
    base /= wsum;
    std::vector<double> shuffled(oob.size());
    for (std::size_t i = 0; i < cols.size(); ++i) {
      int c = cols[i];
      if (tree.split_count[c] == 0) continue;
      double acc = 0;
      for (int rep = 0; rep < n_repeats; ++rep) {
        for (std::size_t k = 0; k < oob.size(); ++k) shuffled[k] = ds.value(oob[k], c);
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        double l = 0;
        for (std::size_t k = 0; k < oob.size(); ++k) {
          std::size_t r = oob[k];
          const Node& lf = tree.leaf_for([&](int col) { return col == c ? shuffled[k] : ds.value(r, col); });
          double pred = tree.classification ? lf.label : lf.mean;
          l += ds.weight(r) * loss_of(loss, pred, ds.value(r, ds.output));
        }
        acc += l / wsum - base;
      }
      res.per_tree[t][i] = acc / n_repeats;
    }
  });
  bool any = false;
  for (int h : has_oob) any = any || h;
  if (!any) throw ParameterError("no tree has out-of-bag samples");
  for (auto& row : res.per_tree)
    for (std::size_t i = 0; i < cols.size(); ++i) res.report.scores[i] += row[i];
  for (double& s : res.report.scores) s /= static_cast<double>(f.trees.size());
  return res;
}

inline ImportanceReport mda(const Forest& f, const Dataset& ds, Loss loss, int n_repeats = 10, std::uint64_t seed = 0) {
  return mda_per_tree(f, ds, loss, n_repeats, seed).report;
}

struct ZScore {
  double z = 0;
  bool flagged = false;  // zero spread across trees; z holds +inf
};

// mean / (sd / sqrt(n)) with the sample standard deviation.
inline ZScore zscore(const std::vector<double>& per_tree) {
  if (per_tree.size() < 2) throw ParameterError("z-score needs at least two trees");
  double n = static_cast<double>(per_tree.size());
  double mean = 0;
  for (double v : per_tree) mean += v;
  mean /= n;
  double ss = 0;
  for (double v : per_tree) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / (n - 1));
  if (sd == 0) return {std::numeric_limits<double>::infinity(), true};
  return {mean / (sd / std::sqrt(n)), false};
}

inline ImportanceReport mda_zscore(const Forest& f, const Dataset& ds, Loss loss, int n_repeats = 10,
                                   std::uint64_t seed = 0) {
  if (f.trees.size() < 2) throw ParameterError("z-score needs at least two trees");
  auto res = mda_per_tree(f, ds, loss, n_repeats, seed);
  ImportanceReport rep = res.report;
  rep.measure = "mda_zscore";
  for (std::size_t i = 0; i < rep.size(); ++i) {
    std::vector<double> col;
    for (auto& row : res.per_tree) col.push_back(row[i]);
    ZScore z = zscore(col);
    rep.scores[i] = z.z;
    rep.flagged[i] = z.flagged;
    if (z.flagged) rep.notes.push_back(rep.names[i] + ": zero spread across trees");
  }
  return rep;
}

// ---- asymptotic oracle ----

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

struct OracleResult {
  double score = 0;
  std::vector<double> per_degree;  // k = 0 .. q-1
};

namespace detail {
template <typename Weight>
OracleResult oracle_sum(EntropyOracle& o, int m, int q, Weight&& weight) {
  const JointDistribution& d = o.dist();
  int p = d.p();
  Mask y = bit(d.output_column());
  auto pool = others(d, m);
  OracleResult res;
  res.per_degree.assign(q, 0.0);
  for (int k = 0; k < q; ++k) {
    double sum = 0;
    for_each_subset_of_size(pool, k, [&](Mask b) {
      sum += o.I(bit(m), y, b);
      return true;
    });
    res.per_degree[k] = weight(p, k) * sum;
    res.score += res.per_degree[k];
  }
  return res;
}

inline void check_oracle_query(const JointDistribution& d, int m, int q, int pmax) {
  check_oracle_p(d, pmax);
  check_input(d, m);
  if (q < 1 || q > d.p()) throw ParameterError("depth q must lie in [1, p]");
}

inline double mdi_weight(int p, int k) { return 1.0 / (binomial(p, k) * (p - k)); }
}  // namespace detail

// Importance of X_m for totally randomized trees grown to depth q on the
// distribution itself (q = p: fully developed).
inline OracleResult asymptotic_mdi(EntropyOracle& o, int m, int q) {
  detail::check_oracle_query(o.dist(), m, q, 20);
  return detail::oracle_sum(o, m, q, detail::mdi_weight);
}

inline OracleResult asymptotic_mdi(const JointDistribution& d, int m, int q) {
  EntropyOracle o(d);
  return asymptotic_mdi(o, m, q);
}

inline ImportanceReport asymptotic_mdi_table(const JointDistribution& d, int q) {
  EntropyOracle o(d);
  ImportanceReport rep;
  rep.measure = "asymptotic_mdi";
  rep.params["depth"] = std::to_string(q);
  for (int m = 0; m < d.p(); ++m) {
    auto r = asymptotic_mdi(o, m, q);
    rep.names.push_back(d.variables[m].name);
    rep.scores.push_back(r.score);
    rep.per_degree.push_back(r.per_degree);
    rep.flagged.push_back(false);
  }
  return rep;
}

// Importance of X_j once an exact copy of it joins the inputs.
inline double asymptotic_mdi_redundant_closed_form(const JointDistribution& d, int j) {
  detail::check_oracle_query(d, j, d.p(), 19);
  EntropyOracle o(d);
  return detail::oracle_sum(o, j, d.p(), [](int p, int k) {
           return static_cast<double>(p - k) / (p + 1) * detail::mdi_weight(p, k);
         }).score;
}

// C(p-1,k) / (C(p,k)(p-k)) == 1/p for every k, in exact integer arithmetic.
inline bool weight_identity_check(int p) {
  if (p < 1 || p > 60) throw ParameterError("p must lie in [1, 60]");
  using u128 = unsigned __int128;
  auto C = [](int n, int k) {
    u128 r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<u128>(n - k + i) / static_cast<u128>(i);
    return r;
  };
  for (int k = 0; k < p; ++k)
    if (C(p - 1, k) * static_cast<u128>(p) != C(p, k) * static_cast<u128>(p - k)) return false;
  return true;
}

inline std::vector<double> weight_series(int p) {
  std::vector<double> w;
  for (int k = 0; k < p; ++k) w.push_back(binomial(p - 1, k) / (binomial(p, k) * (p - k)));
  return w;
}

}  // namespace fi
