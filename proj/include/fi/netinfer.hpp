// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fi/importance.hpp"

namespace fi {

struct TimeSeries {
  Eigen::MatrixXd values;  // T x p
  std::vector<std::string> names;

  int T() const { return static_cast<int>(values.rows()); }
  int p() const { return static_cast<int>(values.cols()); }
};

enum class LowPass { f1, f2, f3, f4 };
enum class Regularizer { none, w, w_star };

inline LowPass parse_low_pass(const std::string& s) {
  if (s == "f1") return LowPass::f1;
  if (s == "f2") return LowPass::f2;
  if (s == "f3") return LowPass::f3;
  if (s == "f4") return LowPass::f4;
  throw ParameterError("unknown low-pass filter '" + s + "'");
}

struct FilterSpec {
  LowPass low_pass = LowPass::f1;
  double tau = 0.11;
  bool use_low_pass = true;
  bool use_diff = true;
  bool use_threshold = true;
  bool use_r = false;
  double c = 0.9;
  Regularizer regularizer = Regularizer::w;
  std::vector<std::pair<double, double>> k_knots;  // (activity, k); empty means k = 1
};

// Piecewise-linear interpolation, constant beyond the end knots.
inline double piecewise_linear(const std::vector<std::pair<double, double>>& knots, double x) {
  if (knots.empty()) return 1.0;
  if (x <= knots.front().first) return knots.front().second;
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (x <= knots[i].first) {
      auto [x0, y0] = knots[i - 1];
      auto [x1, y1] = knots[i];
      return x1 == x0 ? y1 : y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    }
  return knots.back().second;
}

inline Eigen::MatrixXd low_pass(const Eigen::MatrixXd& x, LowPass f) {
  int T = static_cast<int>(x.rows());
  // (first valid t, last valid t) and taps (offset, weight)
  std::vector<std::pair<int, double>> taps;
  switch (f) {
    case LowPass::f1: taps = {{-1, 1}, {0, 1}, {1, 1}}; break;
    case LowPass::f2: taps = {{-3, 0.4}, {-2, 0.8}, {-1, 1}, {0, 1}}; break;
    case LowPass::f3: taps = {{-1, 1}, {0, 1}, {1, 1}, {2, 1}}; break;
    case LowPass::f4: taps = {{0, 1}, {1, 1}, {2, 1}, {3, 1}}; break;
  }
  int lo = 0, hi = 0;
  for (auto& [o, w] : taps) {
    lo = std::min(lo, o);
    hi = std::max(hi, o);
  }
  int n = T - (hi - lo);
  if (n < 1) throw ParameterError("series too short for the low-pass filter");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, x.cols());
  for (auto& [o, w] : taps) out += w * x.middleRows(-lo + o, n);
  return out;
}

inline Eigen::MatrixXd backward_difference(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw ParameterError("series too short for differencing");
  return x.bottomRows(x.rows() - 1) - x.topRows(x.rows() - 1);
}

inline Eigen::MatrixXd hard_threshold(const Eigen::MatrixXd& x, double tau) {
  return (x.array() >= tau).select(x, 0.0);
}

inline Eigen::MatrixXd magnify(const Eigen::MatrixXd& x, const std::vector<std::pair<double, double>>& knots = {}) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (int t = 0; t < x.rows(); ++t) {
    double s = x.row(t).sum();
    if (s == 0) {
      out.row(t).setOnes();
      continue;
    }
    double e = (1.0 + 1.0 / s) * piecewise_linear(knots, s);
    for (int j = 0; j < x.cols(); ++j) out(t, j) = std::pow(x(t, j) + 1.0, e);
  }
  return out;
}

// w o r o h o g o f, each stage optional; boundary rows are dropped.
inline TimeSeries preprocess(const TimeSeries& s, const FilterSpec& spec) {
  if (spec.use_threshold && !(spec.tau > 0)) throw ParameterError("tau must be positive");
  if (spec.use_r && !(spec.c > 0 && spec.c <= 1)) throw ParameterError("c must lie in (0,1]");
  if (s.T() < 4) throw ParameterError("series needs at least 4 time steps");
  Eigen::MatrixXd x = s.values;
  if (spec.use_low_pass) x = low_pass(x, spec.low_pass);
  if (spec.use_diff) x = backward_difference(x);
  if (spec.use_threshold) x = hard_threshold(x, spec.tau);
  if (spec.use_r) x = x.array().max(0.0).pow(spec.c).matrix();
  if (spec.regularizer == Regularizer::w) x = magnify(x);
  if (spec.regularizer == Regularizer::w_star) x = magnify(x, spec.k_knots);
  return {x, s.names};
}

struct ScoreMatrix {
  Eigen::MatrixXd s;
  bool directed = false;

  int p() const { return static_cast<int>(s.rows()); }

  void set_diagonal_to_min() {
    double mn = std::numeric_limits<double>::infinity();
    for (int i = 0; i < p(); ++i)
      for (int j = 0; j < p(); ++j)
        if (i != j) mn = std::min(mn, s(i, j));
    if (!std::isfinite(mn)) mn = 0;
    for (int i = 0; i < p(); ++i) s(i, i) = mn;
  }
};

inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw ParameterError("need at least two observations");
  Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

// Inverse covariance; with M > 0, built from the M leading eigenpairs.
inline Eigen::MatrixXd precision_matrix(const Eigen::MatrixXd& cov, int M = 0) {
  int p = static_cast<int>(cov.rows());
  if (M <= 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
    if (lu.rank() < p || ldlt.info() != Eigen::Success)
      throw ParameterError("covariance is singular; use a truncated inverse (n_components < p)");
    return lu.inverse();
  }
  if (M > p) throw ParameterError("n_components exceeds p");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(p, p);
  for (int k = p - 1; k >= p - M; --k) {
    double lambda = es.eigenvalues()(k);
    if (!(lambda > 0)) throw ParameterError("non-positive eigenvalue among the leading components");
    prec += es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose() / lambda;
  }
  return prec;
}

inline ScoreMatrix partial_correlation(const Eigen::MatrixXd& x, int n_components = 0) {
  int p = static_cast<int>(x.cols());
  if (n_components <= 0 && x.rows() <= p) throw ParameterError("exact inverse needs T > p; set n_components");
  Eigen::MatrixXd P = precision_matrix(covariance(x), n_components);
  ScoreMatrix out;
  out.s.resize(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      double d = P(i, i) * P(j, j);
      out.s(i, j) = d > 0 ? -P(i, j) / std::sqrt(d) : 0.0;
    }
  out.set_diagonal_to_min();
  return out;
}

inline ScoreMatrix pearson_correlation(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd c = covariance(x);
  int p = static_cast<int>(c.cols());
  ScoreMatrix out;
  out.s.resize(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      double d = c(i, i) * c(j, j);
      out.s(i, j) = d > 0 ? c(i, j) / std::sqrt(d) : 0.0;
    }
  out.set_diagonal_to_min();
  return out;
}

// Weighted mean of per-spec scores; score(x) maps a preprocessed series to
// a score matrix (partial correlation by default).
template <typename Score>
ScoreMatrix averaged_scores(const TimeSeries& s, const std::vector<FilterSpec>& grid, const std::vector<double>& weights,
                            Score&& score, unsigned threads = 0) {
  if (grid.empty()) throw ParameterError("empty filter grid");
  if (grid.size() != weights.size()) throw ParameterError("one weight per filter spec is required");
  double total = 0;
  for (double w : weights) total += w;
  if (std::abs(total - 1.0) > 1e-9) throw ParameterError("weights must sum to 1");
  std::vector<Eigen::MatrixXd> parts(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) { parts[k] = score(preprocess(s, grid[k]).values).s; });
  ScoreMatrix out;
  out.s = Eigen::MatrixXd::Zero(s.p(), s.p());
  for (std::size_t k = 0; k < grid.size(); ++k) out.s += weights[k] * parts[k];
  out.set_diagonal_to_min();
  return out;
}

inline ScoreMatrix averaged_partial_correlation(const TimeSeries& s, const std::vector<FilterSpec>& grid,
                                                const std::vector<double>& weights, int n_components = 0,
                                                unsigned threads = 0) {
  return averaged_scores(
      s, grid, weights, [&](const Eigen::MatrixXd& x) { return partial_correlation(x, n_components); }, threads);
}

// tau in {0.100, ..., 0.210} crossed with f1..f4; each filter's weight is
// spread evenly over its tau values.
inline std::pair<std::vector<FilterSpec>, std::vector<double>> default_challenge_grid(const FilterSpec& base = {}) {
  const LowPass filters[] = {LowPass::f1, LowPass::f2, LowPass::f3, LowPass::f4};
  const double filter_weight[] = {0.383, 0.345, 0.004, 0.268};
  std::vector<FilterSpec> grid;
  std::vector<double> weights;
  const int n_tau = 111;
  for (int f = 0; f < 4; ++f)
    for (int k = 0; k < n_tau; ++k) {
      FilterSpec spec = base;
      spec.low_pass = filters[f];
      spec.tau = (100 + k) / 1000.0;
      grid.push_back(spec);
      weights.push_back(filter_weight[f] / n_tau);
    }
  return {grid, weights};
}

// q = weight * p + (1 - weight) * (s - s^T), with s_ij counting steps where
// x_j^{t+1} - x_i^t falls in [phi1, phi2].
inline ScoreMatrix directivity_adjust(const Eigen::MatrixXd& x, const ScoreMatrix& scores, double phi1 = 0.2,
                                      double phi2 = 0.5, double weight = 0.997) {
  if (!(phi1 < phi2)) throw ParameterError("phi1 must be below phi2");
  if (!(weight >= 0 && weight <= 1)) throw ParameterError("weight must lie in [0,1]");
  int p = static_cast<int>(x.cols()), T = static_cast<int>(x.rows());
  if (scores.p() != p) throw ParameterError("score matrix size mismatch");
  Eigen::MatrixXd cnt = Eigen::MatrixXd::Zero(p, p);
  for (int t = 0; t + 1 < T; ++t)
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        double d = x(t + 1, j) - x(t, i);
        if (d >= phi1 && d <= phi2) cnt(i, j) += 1;
      }
  ScoreMatrix out;
  out.directed = true;
  out.s = weight * scores.s + (1 - weight) * (cnt - cnt.transpose());
  out.set_diagonal_to_min();
  return out;
}

struct Genie3Result {
  ScoreMatrix scores;  // s(i, j): importance of i for target j
  std::vector<std::string> warnings;
};

// One forest per target column; importances are divided by the target's
// variance (numeric) or entropy (categorical).
inline Genie3Result genie3_scores(const Dataset& data, const ForestConfig& cfg) {
  int p = data.n_columns();
  if (p < 2) throw ParameterError("need at least two variables");
  Genie3Result res;
  res.scores.directed = true;
  res.scores.s = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    Dataset ds = data;
    ds.output = j;
    ds.context = -1;
    double norm;
    std::vector<double> w(ds.n_rows());
    for (std::size_t r = 0; r < ds.n_rows(); ++r) w[r] = ds.weight(r);
    if (ds.columns[j].categorical()) {
      std::vector<double> counts(ds.columns[j].cardinality, 0.0);
      for (std::size_t r = 0; r < ds.n_rows(); ++r) counts[ds.code(r, j)] += w[r];
      norm = entropy_of_weights(counts);
    } else {
      std::vector<double> ys(ds.data[j]);
      detail::Stats st;
      st.reset(0);
      for (std::size_t r = 0; r < ds.n_rows(); ++r) st.add(ys[r], w[r], false);
      norm = detail::impurity_of(st, Impurity::variance);
    }
    if (!(norm > 0)) {
      res.warnings.push_back("target '" + ds.columns[j].name + "' is constant; scores set to 0");
      continue;
    }
    ForestConfig fc = cfg;
    fc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(j));
    if (!ds.columns[j].categorical()) fc.tree.impurity = Impurity::variance;
    if (fc.tree.family == SplitFamily::multiway)
      for (int c : ds.input_columns())
        if (!ds.columns[c].categorical()) fc.tree.family = SplitFamily::binary_ordered;
    Forest f = build_forest(ds, fc);
    auto rep = mdi(f, ds);
    auto cols = ds.input_columns();
    for (std::size_t k = 0; k < cols.size(); ++k) res.scores.s(cols[k], j) = rep.scores[k] / norm;
  }
  res.scores.set_diagonal_to_min();
  return res;
}

inline Dataset series_to_dataset(const TimeSeries& s) {
  Dataset ds;
  for (int j = 0; j < s.p(); ++j) {
    ds.columns.push_back({j < static_cast<int>(s.names.size()) ? s.names[j] : "N" + std::to_string(j), 0, true});
    std::vector<double> col(s.T());
    for (int t = 0; t < s.T(); ++t) col[t] = s.values(t, j);
    ds.data.push_back(std::move(col));
  }
  ds.output = s.p() - 1;
  return ds;
}

inline Genie3Result genie3_scores(const TimeSeries& s, const ForestConfig& cfg) {
  return genie3_scores(series_to_dataset(s), cfg);
}

using Edge = std::pair<int, int>;

struct EvalResult {
  double auroc = 0;
  double auprc = 0;
  std::size_t positives = 0;
  std::size_t candidates = 0;
};

// Mann-Whitney AUROC with midranks; AUPRC sums recall steps times the
// precision at the end of each tie group.
inline EvalResult evaluate_ranking(const std::vector<double>& score, const std::vector<int>& label) {
  std::size_t n = score.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  EvalResult res;
  res.candidates = n;
  for (int l : label) res.positives += l != 0;
  std::size_t P = res.positives, N = n - P;
  if (P == 0) throw ParameterError("no positive edges among the candidates");
  if (N == 0) throw ParameterError("no negative edges among the candidates");
  // Ascending midranks.
  double rank_sum = 0;
  std::size_t tp = 0, fp = 0;
  double prev_recall = 0, auprc = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && score[order[j]] == score[order[i]]) ++j;
    // Positions i..j-1 in descending order hold ranks n-j+1 .. n-i.
    double mid = 0.5 * (static_cast<double>(n - j + 1) + static_cast<double>(n - i));
    for (std::size_t k = i; k < j; ++k) {
      if (label[order[k]]) {
        rank_sum += mid;
        ++tp;
      } else {
        ++fp;
      }
    }
    double recall = static_cast<double>(tp) / P;
    double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    auprc += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  res.auroc = (rank_sum - 0.5 * P * (P + 1.0)) / (static_cast<double>(P) * N);
  res.auprc = auprc;
  return res;
}

inline EvalResult evaluate(const ScoreMatrix& scores, const std::vector<Edge>& truth, bool directed = true) {
  int p = scores.p();
  std::set<Edge> edges;
  for (auto [a, b] : truth) {
    if (a < 0 || b < 0 || a >= p || b >= p) throw ParameterError("truth edge outside node range");
    if (a == b) continue;
    edges.insert(directed ? Edge{a, b} : Edge{std::min(a, b), std::max(a, b)});
  }
  if (edges.empty()) throw ParameterError("empty truth network");
  std::vector<double> sc;
  std::vector<int> lab;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      if (i == j || (!directed && j < i)) continue;
      sc.push_back(directed ? scores.s(i, j) : std::max(scores.s(i, j), scores.s(j, i)));
      lab.push_back(edges.count({i, j}) ? 1 : 0);
    }
  return evaluate_ranking(sc, lab);
}

enum class Dynamics { gaussian, spiking };

struct SynthNetwork {
  TimeSeries series;
  std::vector<Edge> edges;
};

// Random DAG over a random node order, each forward pair linked with
// probability `density`. gaussian: every time step is an independent draw of
// a linear-Gaussian model along the DAG. spiking: lagged self-exciting
// spikes read through a decaying, noisy fluorescence-like trace.
inline SynthNetwork synth_network(int p, double density, int T, std::uint64_t seed,
                                  Dynamics dyn = Dynamics::gaussian) {
  if (p < 2 || T < 2) throw ParameterError("need p >= 2 and T >= 2");
  if (!(density >= 0 && density < 1)) throw ParameterError("density must lie in [0,1)");
  Rng rng(seed);
  std::vector<int> order(p);
  for (int i = 0; i < p; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  SynthNetwork out;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b)
      if (uniform01(rng) < density) {
        int i = order[a], j = order[b];
        double mag = 0.5 + 0.5 * uniform01(rng);
        W(i, j) = mag;
        out.edges.emplace_back(i, j);
      }
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd X(T, p);
  if (dyn == Dynamics::gaussian) {
    // Excitatory links only, so that larger scores mean likelier edges.
    for (int t = 0; t < T; ++t)
      for (int b = 0; b < p; ++b) {
        int j = order[b];
        double v = normal(rng);
        for (int a = 0; a < b; ++a) v += W(order[a], j) * X(t, order[a]);
        X(t, j) = v;
      }
  } else {
    Eigen::VectorXd spikes = Eigen::VectorXd::Zero(p), calcium = Eigen::VectorXd::Zero(p);
    const double base = 0.02, gain = 0.6, decay = 0.6, noise = 0.03;
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXd drive = W.transpose() * spikes;
      Eigen::VectorXd next(p);
      for (int j = 0; j < p; ++j) next(j) = uniform01(rng) < std::min(0.95, base + gain * drive(j)) ? 1.0 : 0.0;
      spikes = next;
      calcium = decay * calcium + spikes;
      for (int j = 0; j < p; ++j) X(t, j) = calcium(j) + noise * normal(rng);
    }
  }
  out.series.values = X;
  for (int j = 0; j < p; ++j) out.series.names.push_back("N" + std::to_string(j + 1));
  return out;
}

// ---- IO ----

inline TimeSeries load_series(const std::string& path) {
  Dataset ds = load_csv(path);
  TimeSeries s;
  s.values.resize(static_cast<Eigen::Index>(ds.n_rows()), ds.n_columns());
  for (int j = 0; j < ds.n_columns(); ++j) {
    s.names.push_back(ds.columns[j].name);
    for (std::size_t t = 0; t < ds.n_rows(); ++t) s.values(static_cast<Eigen::Index>(t), j) = ds.value(t, j);
  }
  return s;
}

inline void save_series(const TimeSeries& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out.precision(10);
  for (int j = 0; j < s.p(); ++j) out << (j ? "," : "") << s.names[j] << ":real";
  out << "\n";
  for (int t = 0; t < s.T(); ++t) {
    for (int j = 0; j < s.p(); ++j) out << (j ? "," : "") << s.values(t, j);
    out << "\n";
  }
}

inline std::vector<Edge> load_edges(const std::string& path, const std::vector<std::string>& names = {}) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::string line;
  std::vector<Edge> edges;
  std::size_t lineno = 0;
  auto node = [&](const std::string& tok, std::size_t ln) {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == tok) return static_cast<int>(k);
    try {
      std::size_t used = 0;
      int v = std::stoi(tok, &used);
      if (used == tok.size()) return v;
    } catch (const std::exception&) {
    }
    throw FormatError("line " + std::to_string(ln) + ": unknown node '" + tok + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto cells = detail::split_csv_line(line);
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (lineno == 1 && cells[0] == "src") continue;
    if (cells.size() < 2 || cells.size() > 3) throw FormatError("line " + std::to_string(lineno) + ": expected src,dst[,weight]");
    edges.emplace_back(node(cells[0], lineno), node(cells[1], lineno));
  }
  return edges;
}

inline void save_edges(const std::vector<Edge>& edges, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << "src,dst\n";
  for (auto [a, b] : edges) out << a << "," << b << "\n";
}

// Triples (src, dst, score) sorted by decreasing score.
inline void save_scores(const ScoreMatrix& m, const std::vector<std::string>& names, std::ostream& out) {
  std::vector<std::tuple<double, int, int>> rows;
  for (int i = 0; i < m.p(); ++i)
    for (int j = 0; j < m.p(); ++j) {
      if (i == j || (!m.directed && j < i)) continue;
      rows.emplace_back(m.s(i, j), i, j);
    }
  std::stable_sort(rows.begin(), rows.end(), [](auto& a, auto& b) { return std::get<0>(a) > std::get<0>(b); });
  out << "src,dst,score\n";
  out.precision(10);
  for (auto& [s, i, j] : rows) out << names[i] << "," << names[j] << "," << s << "\n";
}

inline ScoreMatrix load_scores(const std::string& path, const std::vector<std::string>& names, bool directed = true) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  int p = static_cast<int>(names.size());
  ScoreMatrix m;
  m.directed = directed;
  m.s = Eigen::MatrixXd::Constant(p, p, -std::numeric_limits<double>::infinity());
  std::string line;
  std::size_t lineno = 0;
  auto idx = [&](const std::string& tok) {
    for (int k = 0; k < p; ++k)
      if (names[k] == tok) return k;
    throw FormatError("line " + std::to_string(lineno) + ": unknown node '" + tok + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto cells = detail::split_csv_line(line);
    if (lineno == 1 && cells[0] == "src") continue;
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (cells.size() != 3) throw FormatError("line " + std::to_string(lineno) + ": expected src,dst,score");
    int i = idx(cells[0]), j = idx(cells[1]);
    m.s(i, j) = std::stod(cells[2]);
    if (!directed) m.s(j, i) = m.s(i, j);
  }
  double mn = std::numeric_limits<double>::infinity();
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (std::isfinite(m.s(i, j))) mn = std::min(mn, m.s(i, j));
  if (!std::isfinite(mn)) mn = 0;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (!std::isfinite(m.s(i, j))) m.s(i, j) = mn;
  return m;
}

}  // namespace fi
