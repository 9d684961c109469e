// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "fi/forest.hpp"
#include "fi/importance.hpp"

namespace fi {

enum class ContextLabel { independent, complementary, redundant, mixed };

inline const char* to_string(ContextLabel l) {
  switch (l) {
    case ContextLabel::independent: return "independent";
    case ContextLabel::complementary: return "complementary";
    case ContextLabel::redundant: return "redundant";
    case ContextLabel::mixed: return "mixed";
  }
  return "?";
}

struct ContextEntry {
  double imp = 0;                  // Imp(X_m)
  double imp_xc = 0;               // Imp^{X_c}(X_m)
  std::vector<double> given;       // Imp(X_m | X_c = x_c)
  std::vector<double> signed_diff; // Imp_s^{x_c}
  std::vector<double> abs_diff;    // Imp^{|x_c|}
  std::vector<double> pvalue;      // NaN when not computed
  std::vector<std::size_t> skipped;  // empirical: nodes skipped per x_c
};

struct ContextReport {
  std::vector<std::string> names;
  std::string context_name;
  int n_context = 0;
  std::vector<ContextEntry> entries;
  std::vector<std::string> notes;
};

namespace detail {
inline ContextEntry empty_entry(int n_context) {
  ContextEntry e;
  e.given.assign(n_context, 0.0);
  e.signed_diff.assign(n_context, 0.0);
  e.abs_diff.assign(n_context, 0.0);
  e.pvalue.assign(n_context, std::numeric_limits<double>::quiet_NaN());
  e.skipped.assign(n_context, 0);
  return e;
}

// I(X;Y) from a dense joint weight table [x][y].
inline double table_mi(const std::vector<double>& joint, int cx, int cy) {
  std::vector<double> px(cx, 0.0), py(cy, 0.0);
  for (int a = 0; a < cx; ++a)
    for (int b = 0; b < cy; ++b) {
      px[a] += joint[a * cy + b];
      py[b] += joint[a * cy + b];
    }
  double v = entropy_of_weights(px) + entropy_of_weights(py) - entropy_of_weights(joint);
  return v < 0 ? 0.0 : v;
}
}  // namespace detail

// Exact contextual importances over all B, b and x_c. A pair (b, x_c) of
// probability zero contributes I(Y;X_m|B=b,X_c=x_c) = 0.
inline ContextReport asymptotic_contextual(const JointDistribution& d) {
  if (!d.context) throw ParameterError("distribution has no context variable");
  detail::check_oracle_p(d, 16);
  int p = d.p(), cc = d.context_column(), yc = d.output_column();
  int nc = d.context->cardinality, ny = d.output.cardinality;
  ContextReport rep;
  rep.context_name = d.context->name;
  rep.n_context = nc;

  JointDistribution marginal = d.without_context();
  EntropyOracle all(marginal);
  std::vector<std::unique_ptr<EntropyOracle>> cond;
  std::vector<JointDistribution> cond_dist;
  for (int xc = 0; xc < nc; ++xc)
    cond_dist.push_back(d.prob_of(cc, xc) > 0 ? d.conditioned(cc, xc).without_context() : JointDistribution{});
  for (int xc = 0; xc < nc; ++xc)
    cond.push_back(d.prob_of(cc, xc) > 0 ? std::make_unique<EntropyOracle>(cond_dist[xc]) : nullptr);

  for (int m = 0; m < p; ++m) {
    rep.names.push_back(d.variables[m].name);
    ContextEntry e = detail::empty_entry(nc);
    e.imp = asymptotic_mdi(all, m, p).score;
    for (int xc = 0; xc < nc; ++xc)
      if (cond[xc]) e.given[xc] = asymptotic_mdi(*cond[xc], m, p).score;
    int cm = d.variables[m].cardinality;
    std::size_t cell = static_cast<std::size_t>(cm) * ny;
    auto pool = detail::others(d, m);
    for (int k = 0; k < p; ++k) {
      double w = detail::mdi_weight(p, k);
      detail::for_each_subset_of_size(pool, k, [&](Mask bmask) {
        auto bcols = cols_of(bmask);
        // Per b: joint weights over (x_c, x_m, y).
        std::unordered_map<std::uint64_t, std::vector<double>> groups;
        for (std::size_t i = 0; i < d.configs.size(); ++i) {
          const auto& cfg = d.configs[i];
          std::uint64_t key = 0;
          for (int c : bcols) key = key * d.variables[c].cardinality + cfg[c];
          auto& g = groups[key];
          if (g.empty()) g.assign(nc * cell, 0.0);
          g[cfg[cc] * cell + static_cast<std::size_t>(cfg[m]) * ny + cfg[yc]] += d.probs[i];
        }
        for (auto& [key, g] : groups) {
          std::vector<double> joint(cell, 0.0);
          double pb = 0;
          for (std::size_t j = 0; j < g.size(); ++j) {
            joint[j % cell] += g[j];
            pb += g[j];
          }
          if (pb <= 0) continue;
          double ib = detail::table_mi(joint, cm, ny);
          double avg = 0;
          for (int xc = 0; xc < nc; ++xc) {
            std::vector<double> slice(g.begin() + xc * cell, g.begin() + (xc + 1) * cell);
            double pbc = 0;
            for (double v : slice) pbc += v;
            double ibc = pbc > 0 ? detail::table_mi(slice, cm, ny) : 0.0;
            avg += pbc / pb * ibc;
            e.signed_diff[xc] += w * pb * (ib - ibc);
            e.abs_diff[xc] += w * pb * std::abs(ib - ibc);
          }
          e.imp_xc += w * pb * (ib - avg);
        }
        return true;
      });
    }
    rep.entries.push_back(e);
  }
  return rep;
}

struct CharacterizeResult {
  std::vector<std::vector<ContextLabel>> per_context;  // [variable][x_c]
  std::vector<std::string> summary;                    // per variable
};

// Per (variable, x_c): independent when Imp^{|x_c|} <= tol; complementary or
// redundant when |Imp_s^{x_c}| matches Imp^{|x_c|} within tol (sign decides);
// mixed otherwise. With p-values present, dependence additionally requires
// pvalue < alpha.
inline CharacterizeResult characterize(const ContextReport& rep, double tol = 1e-9, double alpha = 0.05) {
  CharacterizeResult out;
  for (std::size_t m = 0; m < rep.entries.size(); ++m) {
    const ContextEntry& e = rep.entries[m];
    std::vector<ContextLabel> labels;
    std::string comp, red, mixed;
    for (int xc = 0; xc < rep.n_context; ++xc) {
      double a = e.abs_diff[xc], s = e.signed_diff[xc];
      bool dependent = a > tol;
      if (!std::isnan(e.pvalue[xc])) dependent = dependent && e.pvalue[xc] < alpha;
      ContextLabel l = ContextLabel::independent;
      if (dependent) {
        if (std::abs(std::abs(s) - a) <= tol)
          l = s < 0 ? ContextLabel::complementary : ContextLabel::redundant;
        else
          l = ContextLabel::mixed;
      }
      labels.push_back(l);
      std::string v = std::to_string(xc);
      auto append = [&](std::string& acc) { acc += (acc.empty() ? "" : ",") + v; };
      if (l == ContextLabel::complementary) append(comp);
      if (l == ContextLabel::redundant) append(red);
      if (l == ContextLabel::mixed) append(mixed);
    }
    std::string summary;
    auto add = [&](const std::string& name, const std::string& set) {
      if (set.empty()) return;
      summary += (summary.empty() ? "" : ";") + name + "{" + set + "}";
    };
    add("complementary", comp);
    add("redundant", red);
    add("mixed", mixed);
    out.per_context.push_back(labels);
    out.summary.push_back(summary.empty() ? "independent" : summary);
  }
  return out;
}

struct ContextOptions {
  Impurity impurity = Impurity::shannon;
  std::size_t min_stratum = 5;  // strata with fewer rows at a node are skipped
  unsigned threads = 0;
};

namespace detail {

// Impurity decrease of a node partition restricted to the given rows.
inline double partition_gain(const Dataset& ds, const std::vector<int>& rows, const std::vector<int>& slot,
                             int n_slots, Impurity kind, double* total_w) {
  int ncls = ds.columns[ds.output].categorical() ? ds.columns[ds.output].cardinality : 0;
  bool cls = kind != Impurity::variance;
  if (cls && ncls == 0) throw ParameterError("class impurity needs a categorical output");
  Stats node;
  node.reset(ncls);
  std::vector<Stats> parts(n_slots);
  for (auto& s : parts) s.reset(ncls);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double y = ds.value(rows[i], ds.output), w = ds.weight(rows[i]);
    node.add(y, w, cls);
    parts[slot[i]].add(y, w, cls);
  }
  *total_w = node.w;
  if (node.w <= 0) return 0;
  double child = 0;
  for (auto& s : parts)
    if (s.w > 0) child += s.w / node.w * impurity_of(s, kind);
  return std::max(0.0, impurity_of(node, kind) - child);
}

inline int route_slot(const Node& nd, double v) {
  switch (nd.rule) {
    case RuleKind::threshold: return v <= nd.threshold ? 0 : 1;
    case RuleKind::multiway: {
      int code = static_cast<int>(v);
      if (code >= 0 && code < static_cast<int>(nd.value_child.size()) && nd.value_child[code] >= 0)
        return nd.value_child[code];
      return nd.default_child;
    }
    case RuleKind::subset: {
      int code = static_cast<int>(v);
      if (code >= 0 && code < 64) {
        if (nd.left >> code & 1U) return 0;
        if (nd.right >> code & 1U) return 1;
      }
      return nd.default_child;
    }
    case RuleKind::none: break;
  }
  return 0;
}

struct ContextAccum {
  std::vector<ContextEntry> entries;
};

inline void accumulate_tree(const Tree& tree, const Dataset& ds, const std::vector<int>& cols,
                            const std::vector<int>& col_pos, const ContextOptions& opt, double W,
                            const std::vector<double>& Wc, ContextAccum& acc) {
  int nc = ds.columns[ds.context].cardinality;
  std::vector<std::pair<int, std::vector<int>>> stack;
  std::vector<int> all(ds.n_rows());
  for (std::size_t r = 0; r < ds.n_rows(); ++r) all[r] = static_cast<int>(r);
  stack.emplace_back(0, std::move(all));
  while (!stack.empty()) {
    auto [id, rows] = std::move(stack.back());
    stack.pop_back();
    const Node& nd = tree.nodes[id];
    if (nd.leaf() || rows.empty()) continue;
    std::vector<int> slot(rows.size());
    std::vector<std::vector<int>> child_rows(nd.children.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      slot[i] = route_slot(nd, ds.value(rows[i], nd.var));
      child_rows[slot[i]].push_back(rows[i]);
    }
    int n_slots = static_cast<int>(nd.children.size());
    int pos = col_pos[nd.var];
    if (pos >= 0) {
      ContextEntry& e = acc.entries[pos];
      double wt = 0;
      double g_all = partition_gain(ds, rows, slot, n_slots, opt.impurity, &wt);
      double pt = wt / W;
      e.imp += pt * g_all;
      double avg = 0, avg_w = 0;
      for (int xc = 0; xc < nc; ++xc) {
        std::vector<int> sub, sub_slot;
        for (std::size_t i = 0; i < rows.size(); ++i)
          if (ds.code(rows[i], ds.context) == xc) {
            sub.push_back(rows[i]);
            sub_slot.push_back(slot[i]);
          }
        if (sub.empty() || sub.size() < opt.min_stratum) {
          ++e.skipped[xc];
          continue;
        }
        double wc = 0;
        double g_c = partition_gain(ds, sub, sub_slot, n_slots, opt.impurity, &wc);
        e.given[xc] += wc / Wc[xc] * g_c;
        e.signed_diff[xc] += pt * (g_all - g_c);
        e.abs_diff[xc] += pt * std::abs(g_all - g_c);
        avg += wc * g_c;
        avg_w += wc;
      }
      if (avg_w > 0) e.imp_xc += pt * (g_all - avg / avg_w);
    }
    for (std::size_t k = 0; k < child_rows.size(); ++k) stack.emplace_back(nd.children[k], std::move(child_rows[k]));
  }
}
}  // namespace detail

// Node-by-node contextual importances from a forest grown without the
// context column.
inline ContextReport contextual_importances(const Forest& f, const Dataset& ds, const ContextOptions& opt = {}) {
  if (ds.context < 0) throw ParameterError("dataset has no context column");
  if (!ds.columns[ds.context].categorical()) throw ParameterError("context column must be categorical");
  for (auto& feats : f.features)
    for (int c : feats)
      if (c == ds.context) throw ParameterError("forest must be grown without the context column");
  auto cols = ds.input_columns();
  std::vector<int> col_pos(ds.n_columns(), -1);
  for (std::size_t i = 0; i < cols.size(); ++i) col_pos[cols[i]] = static_cast<int>(i);
  int nc = ds.columns[ds.context].cardinality;
  double W = 0;
  std::vector<double> Wc(nc, 0.0);
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    W += ds.weight(r);
    Wc[ds.code(r, ds.context)] += ds.weight(r);
  }
  for (int xc = 0; xc < nc; ++xc)
    if (Wc[xc] == 0) Wc[xc] = 1;  // empty context value: all its nodes are skipped

  std::vector<detail::ContextAccum> per_tree(f.trees.size());
  parallel_for(f.trees.size(), opt.threads, [&](std::size_t t) {
    per_tree[t].entries.assign(cols.size(), detail::empty_entry(nc));
    detail::accumulate_tree(f.trees[t], ds, cols, col_pos, opt, W, Wc, per_tree[t]);
  });

  ContextReport rep;
  rep.context_name = ds.columns[ds.context].name;
  rep.n_context = nc;
  double nt = static_cast<double>(f.trees.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    rep.names.push_back(ds.columns[cols[i]].name);
    ContextEntry e = detail::empty_entry(nc);
    for (auto& pt : per_tree) {
      const ContextEntry& s = pt.entries[i];
      e.imp += s.imp / nt;
      e.imp_xc += s.imp_xc / nt;
      for (int xc = 0; xc < nc; ++xc) {
        e.given[xc] += s.given[xc] / nt;
        e.signed_diff[xc] += s.signed_diff[xc] / nt;
        e.abs_diff[xc] += s.abs_diff[xc] / nt;
        e.skipped[xc] += s.skipped[xc];
      }
    }
    rep.entries.push_back(e);
  }
  if (f.config.method != Method::totally_randomized)
    rep.notes.push_back("forest is not totally randomized; asymptotic guarantees do not apply");
  return rep;
}

// Permutation p-values of Imp^{|x_c|}: the context column alone is shuffled,
// the forest (grown without it) is reused.
inline ContextReport ctx_pvalues(const Forest& f, const Dataset& ds, int n_permutations, std::uint64_t seed,
                                 const ContextOptions& opt = {}) {
  if (n_permutations < 1) throw ParameterError("n_permutations must be positive");
  ContextReport obs = contextual_importances(f, ds, opt);
  std::size_t nv = obs.entries.size();
  int nc = obs.n_context;
  std::vector<std::vector<int>> exceed(n_permutations, std::vector<int>(nv * nc, 0));
  ContextOptions inner = opt;
  inner.threads = 1;
  parallel_for(n_permutations, opt.threads, [&](std::size_t k) {
    Dataset perm = ds;
    Rng rng(derive_seed(seed, k));
    auto& col = perm.data[perm.context];
    std::vector<std::size_t> idx(col.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> shuffled(col.size());
    for (std::size_t i = 0; i < idx.size(); ++i) shuffled[i] = col[idx[i]];
    col = shuffled;
    ContextReport r = contextual_importances(f, perm, inner);
    for (std::size_t m = 0; m < nv; ++m)
      for (int xc = 0; xc < nc; ++xc)
        exceed[k][m * nc + xc] = r.entries[m].abs_diff[xc] >= obs.entries[m].abs_diff[xc] - 1e-12;
  });
  for (std::size_t m = 0; m < nv; ++m)
    for (int xc = 0; xc < nc; ++xc) {
      int c = 0;
      for (auto& e : exceed) c += e[m * nc + xc];
      obs.entries[m].pvalue[xc] = static_cast<double>(c) / n_permutations;
    }
  return obs;
}

}  // namespace fi
