// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "fi/forest.hpp"
#include "json.hpp"

namespace fi {

struct SrsConfig {
  int q = 10;
  int T = 100;
  double alpha = 1.0;
  int K = 1;
  int L = 10;
  double beta = 0.95;
  bool exact = false;          // relevance rule: importance > tol instead of the probe test
  double tol = 1e-9;
  TreeConfig tree;             // family, impurity, depth; K is taken from this config
  std::uint64_t seed = 0;
};

struct SrsIteration {
  std::vector<int> subset;     // Q
  std::vector<int> reused;     // R
  std::vector<int> found;      // features added to F at this iteration
  int probe_source = -1;
  std::size_t f_size = 0;
};

struct FeatureStats {
  int evaluations = 0;
  int beats = 0;               // importance strictly above the probe's
};

struct SrsTrace {
  std::vector<SrsIteration> iterations;
  std::vector<int> F;          // in order of discovery
  std::map<int, FeatureStats> stats;
};

struct SrsResult {
  Forest forest;
  SrsTrace trace;
};

inline bool probe_test(const FeatureStats& s, int L, double beta) {
  if (s.evaluations < L || s.evaluations == 0) return false;
  return static_cast<double>(s.beats) >= beta * s.evaluations - 1e-12;
}

namespace detail {

inline void check_srs(const SrsConfig& cfg, int p) {
  if (cfg.q < 1 || cfg.q > p) throw ParameterError("q must lie in [1, p]");
  if (cfg.T < 1) throw ParameterError("T must be positive");
  if (!(cfg.alpha >= 0 && cfg.alpha <= 1)) throw ParameterError("alpha must lie in [0,1]");
  if (cfg.K < 1) throw ParameterError("K must be positive");
  if (cfg.L < 1) throw ParameterError("L must be positive");
  if (!(cfg.beta > 0 && cfg.beta <= 1)) throw ParameterError("beta must lie in (0,1]");
}

// Shared loop; draw(F, rng) returns (R, Q).
template <typename Draw>
SrsResult run_selection(const Dataset& ds, const SrsConfig& cfg, Draw&& draw) {
  ds.validate();
  std::vector<int> V = ds.input_columns();
  check_srs(cfg, static_cast<int>(V.size()));
  Dataset work = ds;
  int probe = -1;
  if (!cfg.exact) {
    work.columns.push_back({"@probe", 0, true});
    work.data.emplace_back(ds.n_rows(), 0.0);
    probe = work.n_columns() - 1;
  }
  SrsResult res;
  res.forest.config.method = Method::random_subspace;
  res.forest.config.tree = cfg.tree;
  res.forest.config.tree.K = cfg.K;
  res.forest.config.seed = cfg.seed;
  res.forest.config.q = cfg.q;
  std::set<int> inF;
  Rng rng(cfg.seed);
  for (int it = 0; it < cfg.T; ++it) {
    SrsIteration rec;
    auto [R, Q] = draw(res.trace.F, V, rng);
    rec.reused = R;
    rec.subset = Q;
    std::vector<int> feats = Q;
    if (probe >= 0) {
      int src = Q[uniform_index(rng, Q.size())];
      rec.probe_source = src;
      work.columns[probe] = ds.columns[src];
      work.columns[probe].name = "@probe";
      work.data[probe] = ds.data[src];
      std::shuffle(work.data[probe].begin(), work.data[probe].end(), rng);
      feats.push_back(probe);
    }
    std::sort(feats.begin(), feats.end());
    TreeConfig tc = cfg.tree;
    tc.K = std::min<int>(cfg.K, static_cast<int>(feats.size()));
    Tree tree = grow_tree(work, tc, rng, &feats);
    for (int f : Q) {
      if (inF.count(f)) continue;
      bool pass;
      if (probe >= 0) {
        FeatureStats& s = res.trace.stats[f];
        ++s.evaluations;
        if (tree.importance[f] > tree.importance[probe]) ++s.beats;
        pass = probe_test(s, cfg.L, cfg.beta);
      } else {
        pass = tree.importance[f] > cfg.tol;
      }
      if (pass) rec.found.push_back(f);
    }
    for (int f : rec.found) {
      inF.insert(f);
      res.trace.F.push_back(f);
    }
    rec.f_size = res.trace.F.size();
    if (probe >= 0) {
      tree.importance.resize(ds.n_columns());
      tree.split_count.resize(ds.n_columns());
    }
    res.forest.trees.push_back(std::move(tree));
    res.forest.bags.emplace_back();
    res.forest.features.push_back(Q);
    res.trace.iterations.push_back(std::move(rec));
  }
  return res;
}
}  // namespace detail

// Sequential random subspace: each subset reuses min(floor(alpha q), |F|)
// features of F and fills the rest from V minus those. Features never leave F.
inline SrsResult srs_run(const Dataset& ds, const SrsConfig& cfg) {
  return detail::run_selection(ds, cfg, [&](const std::vector<int>& F, const std::vector<int>& V, Rng& rng) {
    std::size_t nr = std::min<std::size_t>(static_cast<std::size_t>(std::floor(cfg.alpha * cfg.q)), F.size());
    std::vector<int> R = sample_without_replacement(F, nr, rng);
    std::set<int> rs(R.begin(), R.end());
    std::vector<int> rest;
    for (int v : V)
      if (!rs.count(v)) rest.push_back(v);
    std::vector<int> Q = R;
    for (int c : sample_without_replacement(rest, cfg.q - R.size(), rng)) Q.push_back(c);
    return std::pair{R, Q};
  });
}

// Plain random subspace selection with the same relevance rule.
inline SrsResult rs_run(const Dataset& ds, const SrsConfig& cfg) {
  return detail::run_selection(ds, cfg, [&](const std::vector<int>&, const std::vector<int>& V, Rng& rng) {
    return std::pair{std::vector<int>{}, sample_without_replacement(V, cfg.q, rng)};
  });
}

inline nlohmann::json to_json(const SrsIteration& it, int index) {
  return {{"iteration", index}, {"subset", it.subset}, {"reused", it.reused},
          {"found", it.found},  {"F_size", it.f_size}, {"probe_source", it.probe_source}};
}

// ---- convergence theory ----

enum class Scenario { chaining, clique, marginal_only };
enum class Selector { RS, SRS };

inline Scenario parse_scenario(const std::string& s) {
  if (s == "chaining" || s == "chain") return Scenario::chaining;
  if (s == "clique") return Scenario::clique;
  if (s == "marginal_only" || s == "marginal") return Scenario::marginal_only;
  throw ParameterError("unknown scenario '" + s + "'");
}

struct ScenarioModel {
  Scenario scenario = Scenario::chaining;
  Selector method = Selector::RS;
  double p = 100, q = 10;
  int r = 1;
};

inline double log_binomial(double n, double k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

// log of prod_{l=a}^{b-1} (p-l)/(q-l)
inline double log_ratio_product(double p, double q, int a, int b) {
  if (b <= a) return 0;
  return (std::lgamma(p - a + 1) - std::lgamma(p - b + 1)) - (std::lgamma(q - a + 1) - std::lgamma(q - b + 1));
}

namespace detail {
inline void check_model(const ScenarioModel& m) {
  if (m.r < 1 || m.r > m.q || m.q > m.p) throw ParameterError("need 1 <= r <= q <= p");
}
inline double safe_exp(double x) { return x > 709 ? std::numeric_limits<double>::infinity() : std::exp(x); }
}  // namespace detail

// Expected number of iterations to find i relevant features (K = q, one
// variable selected per tree level).
inline double expected_time(const ScenarioModel& m, int i) {
  detail::check_model(m);
  if (i < 1 || i > m.r) throw ParameterError("i must lie in [1, r]");
  double p = m.p, q = m.q;
  int r = m.r;
  switch (m.scenario) {
    case Scenario::chaining:
      if (m.method == Selector::RS) return detail::safe_exp(log_ratio_product(p, q, 0, i));
      {
        double s = 0;
        for (int l = 0; l < i; ++l) s += (p - l) / (q - l);
        return s - (i - 1);
      }
    case Scenario::clique: {
      double s = 0;
      if (m.method == Selector::RS) {
        for (int l = 0; l < i; ++l) s += static_cast<double>(r) / (r - l);
        return s * detail::safe_exp(log_ratio_product(p, q, 0, r));
      }
      for (int l = 0; l < i; ++l) s += static_cast<double>(r) / (r - l) * detail::safe_exp(log_ratio_product(p, q, l, r));
      return s;
    }
    case Scenario::marginal_only:
      throw ParameterError("no closed form for the marginal-only scenario; use markov_expected_time");
  }
  return 0;
}

// Row-stochastic transition matrix over the number of relevant features
// found (0..r); state r is absorbing.
inline Eigen::MatrixXd markov_transition_matrix(const ScenarioModel& m) {
  detail::check_model(m);
  double p = m.p, q = m.q;
  int r = m.r;
  bool srs = m.method == Selector::SRS;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(r + 1, r + 1);
  for (int l = 0; l < r; ++l) {
    // Subsets are drawn from p - l candidates with q - l free slots under SRS
    // (found features are always re-injected), from p with q slots under RS.
    double pool = srs ? p - l : p, slots = srs ? q - l : q;
    double log_den = log_binomial(pool, slots);
    switch (m.scenario) {
      case Scenario::chaining:
        // Reach l1 > l: X_{l+1..l1} drawn (and X_1..X_l too under RS), X_{l1+1} not.
        for (int l1 = l + 1; l1 <= r; ++l1) {
          double lc = l1 < r ? log_binomial(p - l1 - 1, q - l1) : log_binomial(p - r, q - r);
          P(l, l1) = detail::safe_exp(lc - log_den);
        }
        break;
      case Scenario::clique: {
        double all_in = detail::safe_exp(log_binomial(p - r, q - r) - log_den);
        P(l, l + 1) = all_in * (r - l) / r;
        break;
      }
      case Scenario::marginal_only: {
        // Hypergeometric number of the r - l missing features in the free slots.
        int missing = r - l;
        double others = srs ? p - r : p - missing;
        for (int s = 1; s <= missing; ++s)
          P(l, l + s) = detail::safe_exp(log_binomial(missing, s) + log_binomial(others, slots - s) - log_den);
        break;
      }
    }
    double off = 0;
    for (int j = l + 1; j <= r; ++j) off += P(l, j);
    P(l, l) = std::max(0.0, 1.0 - off);
  }
  P(r, r) = 1;
  for (int l = 0; l < r; ++l)
    if (!std::isfinite(P.row(l).sum())) throw ParameterError("non-finite transition probability");
  return P;
}

// Expected steps to absorption from state 0. The last state must be the
// only absorbing one.
inline double markov_expected_time(const Eigen::MatrixXd& P) {
  int n = static_cast<int>(P.rows());
  if (n < 1 || P.cols() != n) throw ParameterError("transition matrix must be square");
  if (std::abs(P(n - 1, n - 1) - 1.0) > 1e-12) throw ParameterError("last state is not absorbing");
  if (n == 1) return 0;
  Eigen::MatrixXd Q = P.topLeftCorner(n - 1, n - 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n - 1, n - 1) - Q;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw ParameterError("chain is not absorbing");
  Eigen::VectorXd t = lu.solve(Eigen::VectorXd::Ones(n - 1));
  if (!t.allFinite() || (t.array() < 0).any()) throw ParameterError("chain is not absorbing");
  return t(0);
}

// curve[t] = expected state index after t steps from state 0, t = 0..T.
inline std::vector<double> expected_found_curve(const Eigen::MatrixXd& P, int T) {
  int n = static_cast<int>(P.rows());
  Eigen::RowVectorXd dist = Eigen::RowVectorXd::Zero(n);
  dist(0) = 1;
  Eigen::VectorXd idx = Eigen::VectorXd::LinSpaced(n, 0, n - 1);
  std::vector<double> out;
  for (int t = 0; t <= T; ++t) {
    out.push_back(dist.dot(idx));
    dist = dist * P;
  }
  return out;
}

// Monte-Carlo estimate of the expected time to find i features under the
// idealized selection process behind the Markov chains.
inline double simulate_selection(const ScenarioModel& m, int i, int runs, std::uint64_t seed,
                                 std::int64_t max_steps = 100000000) {
  detail::check_model(m);
  if (i < 1 || i > m.r) throw ParameterError("i must lie in [1, r]");
  Rng rng(seed);
  std::int64_t p = static_cast<std::int64_t>(m.p), q = static_cast<std::int64_t>(m.q);
  int r = m.r;
  bool srs = m.method == Selector::SRS;
  double total = 0;
  std::vector<char> found(r), in(r);
  for (int run = 0; run < runs; ++run) {
    std::fill(found.begin(), found.end(), 0);
    int n_found = 0;
    std::int64_t steps = 0;
    while (n_found < i) {
      if (++steps > max_steps) throw ParameterError("simulation did not converge");
      // Membership of the relevant features in the subset, drawn sequentially
      // (exact hypergeometric sampling of a q-subset).
      std::int64_t slots = srs ? q - n_found : q, pool = srs ? p - n_found : p;
      for (int j = 0; j < r; ++j) {
        if (srs && found[j]) {
          in[j] = 1;
          continue;
        }
        in[j] = uniform01(rng) * static_cast<double>(pool) < static_cast<double>(slots);
        if (in[j]) --slots;
        --pool;
      }
      switch (m.scenario) {
        case Scenario::chaining: {
          int prefix = 0;
          while (prefix < r && in[prefix]) ++prefix;
          for (int j = 0; j < prefix; ++j)
            if (!found[j]) {
              found[j] = 1;
              ++n_found;
            }
          break;
        }
        case Scenario::clique: {
          bool all = true;
          for (int j = 0; j < r; ++j) all = all && in[j];
          if (all) {
            int j = static_cast<int>(uniform_index(rng, r));
            if (!found[j]) {
              found[j] = 1;
              ++n_found;
            }
          }
          break;
        }
        case Scenario::marginal_only:
          for (int j = 0; j < r; ++j)
            if (in[j] && !found[j]) {
              found[j] = 1;
              ++n_found;
            }
          break;
      }
    }
    total += static_cast<double>(steps);
  }
  return total / runs;
}

// Markov chain for the time to find i of r features: states beyond i merge.
inline double markov_expected_time(const ScenarioModel& m, int i) {
  Eigen::MatrixXd P = markov_transition_matrix(m);
  if (i == m.r) return markov_expected_time(P);
  Eigen::MatrixXd Pi = Eigen::MatrixXd::Zero(i + 1, i + 1);
  for (int a = 0; a < i; ++a) {
    for (int b = 0; b < i; ++b) Pi(a, b) = P(a, b);
    for (int b = i; b <= m.r; ++b) Pi(a, i) += P(a, b);
  }
  Pi(i, i) = 1;
  return markov_expected_time(Pi);
}

}  // namespace fi
