// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "fi/distributions.hpp"

namespace fi {

using Mask = std::uint64_t;

inline Mask mask_of(const std::vector<int>& cols) {
  Mask m = 0;
  for (int c : cols) {
    if (c < 0 || c >= 64) throw ParameterError("column index out of range");
    m |= Mask{1} << c;
  }
  return m;
}

inline std::vector<int> cols_of(Mask m) {
  std::vector<int> out;
  while (m) {
    out.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  return out;
}

// Shannon entropy in bits of a weight vector; zero entries contribute nothing.
inline double entropy_of_weights(const std::vector<double>& w) {
  double total = 0;
  for (double x : w) total += x;
  if (total <= 0) return 0;
  double h = 0;
  for (double x : w)
    if (x > 0) {
      double q = x / total;
      h -= q * std::log2(q);
    }
  return h;
}

// Memoized joint entropies of column subsets of one distribution.
class EntropyOracle {
 public:
  explicit EntropyOracle(const JointDistribution& d) : d_(d) {
    if (d.n_columns() > 62) throw ParameterError("too many columns");
  }

  const JointDistribution& dist() const { return d_; }

  double H(Mask m) {
    if (m == 0) return 0;
    auto it = memo_.find(m);
    if (it != memo_.end()) return it->second;
    double h = compute(m);
    memo_.emplace(m, h);
    return h;
  }

  // I(X;Y|B) with X, Y, B given as column masks.
  double I(Mask x, Mask y, Mask b) {
    double v = H(x | b) + H(y | b) - H(x | y | b) - H(b);
    return v < 0 ? 0.0 : v;
  }

 private:
  double compute(Mask m) {
    std::vector<int> cols = cols_of(m);
    double range = 1;
    for (int c : cols) range *= d_.column(c).cardinality;
    std::size_t n = d_.configs.size();
    if (range <= static_cast<double>(std::max<std::size_t>(4 * n, 1 << 16))) {
      std::size_t size = static_cast<std::size_t>(range);
      if (dense_.size() < size) dense_.assign(size, 0.0);
      touched_.clear();
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t key = 0;
        for (int c : cols) key = key * d_.column(c).cardinality + d_.configs[i][c];
        if (dense_[key] == 0) touched_.push_back(key);
        dense_[key] += d_.probs[i];
      }
      double h = 0;
      for (std::size_t k : touched_) {
        double q = dense_[k];
        if (q > 0) h -= q * std::log2(q);
        dense_[k] = 0;
      }
      return h;
    }
    std::map<std::vector<int>, double> acc;
    std::vector<int> key(cols.size());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < cols.size(); ++j) key[j] = d_.configs[i][cols[j]];
      acc[key] += d_.probs[i];
    }
    double h = 0;
    for (auto& [k, q] : acc)
      if (q > 0) h -= q * std::log2(q);
    return h;
  }

  const JointDistribution& d_;
  std::unordered_map<Mask, double> memo_;
  std::vector<double> dense_;
  std::vector<std::size_t> touched_;
};

namespace detail {
inline void check_disjoint(const std::vector<Mask>& sets) {
  Mask seen = 0;
  for (Mask s : sets) {
    if (seen & s) throw ParameterError("variable sets must be disjoint");
    seen |= s;
  }
}
inline void check_columns(const JointDistribution& d, const std::vector<int>& cols) {
  for (int c : cols)
    if (c < 0 || c >= d.n_columns()) throw ParameterError("unknown variable index " + std::to_string(c));
}
inline Mask input_mask(const JointDistribution& d) { return (Mask{1} << d.p()) - 1; }
inline Mask bit(int c) { return Mask{1} << c; }
}  // namespace detail

inline double entropy(const JointDistribution& d, const std::vector<int>& cols) {
  if (cols.empty()) throw ParameterError("entropy needs at least one variable");
  detail::check_columns(d, cols);
  EntropyOracle o(d);
  return o.H(mask_of(cols));
}

inline double cond_mutual_information(const JointDistribution& d, const std::vector<int>& x, const std::vector<int>& y,
                                      const std::vector<int>& b = {}) {
  detail::check_columns(d, x);
  detail::check_columns(d, y);
  detail::check_columns(d, b);
  Mask mx = mask_of(x), my = mask_of(y), mb = mask_of(b);
  detail::check_disjoint({mx, my, mb});
  EntropyOracle o(d);
  return o.I(mx, my, mb);
}

// I(X;Y;Z|B) = I(X;Y|B) - I(X;Y|B,Z). Signed.
inline double multivariate_mi(const JointDistribution& d, const std::vector<int>& x, const std::vector<int>& y,
                              const std::vector<int>& z, const std::vector<int>& b = {}) {
  for (auto* s : {&x, &y, &z, &b}) detail::check_columns(d, *s);
  Mask mx = mask_of(x), my = mask_of(y), mz = mask_of(z), mb = mask_of(b);
  detail::check_disjoint({mx, my, mz, mb});
  EntropyOracle o(d);
  auto raw = [&](Mask bb) { return o.H(mx | bb) + o.H(my | bb) - o.H(mx | my | bb) - o.H(bb); };
  return raw(mb) - raw(mb | mz);
}

inline double redundancy_score(const JointDistribution& d, const std::vector<int>& vars) {
  if (vars.size() < 2) throw ParameterError("redundancy needs at least two variables");
  detail::check_columns(d, vars);
  EntropyOracle o(d);
  double s = 0;
  for (int v : vars) s += o.H(detail::bit(v));
  return s - o.H(mask_of(vars));
}

enum class Relevance { irrelevant, weakly_relevant, strongly_relevant };

inline const char* to_string(Relevance r) {
  switch (r) {
    case Relevance::irrelevant: return "irrelevant";
    case Relevance::weakly_relevant: return "weakly_relevant";
    case Relevance::strongly_relevant: return "strongly_relevant";
  }
  return "?";
}

struct RelevanceLabel {
  Relevance label = Relevance::irrelevant;
  std::optional<std::vector<int>> witness;
};

inline constexpr double kIndependenceTol = 1e-12;
inline constexpr double kStrongTol = 1e-9;

namespace detail {
inline void check_oracle_p(const JointDistribution& d, int limit) {
  if (d.p() > limit) throw ParameterError("exhaustive search limited to p <= " + std::to_string(limit));
}

// Calls fn(B) for every subset of `pool` of size k (as masks).
template <typename Fn>
bool for_each_subset_of_size(const std::vector<int>& pool, int k, Fn&& fn) {
  int n = static_cast<int>(pool.size());
  if (k > n) return true;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    Mask b = 0;
    for (int i : idx) b |= Mask{1} << pool[i];
    if (!fn(b)) return false;
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return true;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline std::vector<int> others(const JointDistribution& d, int m) {
  std::vector<int> out;
  for (int j = 0; j < d.p(); ++j)
    if (j != m) out.push_back(j);
  return out;
}

inline void check_input(const JointDistribution& d, int m) {
  if (m < 0 || m >= d.p()) throw ParameterError("input index out of range");
}
}  // namespace detail

// Smallest B with I(X_m;Y|B) > 0, searched by ascending size.
inline std::optional<std::vector<int>> minimal_witness(EntropyOracle& o, int m) {
  const JointDistribution& d = o.dist();
  Mask y = detail::bit(d.output_column());
  auto pool = detail::others(d, m);
  std::optional<std::vector<int>> found;
  for (int k = 0; k <= static_cast<int>(pool.size()) && !found; ++k)
    detail::for_each_subset_of_size(pool, k, [&](Mask b) {
      if (o.I(detail::bit(m), y, b) > kIndependenceTol) {
        found = cols_of(b);
        return false;
      }
      return true;
    });
  return found;
}

inline RelevanceLabel classify_relevance(const JointDistribution& d, int m) {
  detail::check_oracle_p(d, 20);
  detail::check_input(d, m);
  EntropyOracle o(d);
  RelevanceLabel out;
  Mask rest = detail::input_mask(d) & ~detail::bit(m);
  if (o.I(detail::bit(m), detail::bit(d.output_column()), rest) > kStrongTol) {
    out.label = Relevance::strongly_relevant;
    out.witness = cols_of(rest);
    return out;
  }
  auto w = minimal_witness(o, m);
  if (w) {
    out.label = Relevance::weakly_relevant;
    out.witness = w;
  }
  return out;
}

inline std::optional<int> degree(const JointDistribution& d, int m) {
  detail::check_oracle_p(d, 20);
  detail::check_input(d, m);
  EntropyOracle o(d);
  auto w = minimal_witness(o, m);
  if (!w) return std::nullopt;
  return static_cast<int>(w->size());
}

// All minimal M with Y independent of the remaining inputs given M.
inline std::vector<std::vector<int>> markov_boundaries(const JointDistribution& d) {
  detail::check_oracle_p(d, 16);
  EntropyOracle o(d);
  Mask all = detail::input_mask(d);
  Mask y = detail::bit(d.output_column());
  std::vector<int> pool(d.p());
  for (int j = 0; j < d.p(); ++j) pool[j] = j;
  std::vector<Mask> found;
  for (int k = 0; k <= d.p(); ++k)
    detail::for_each_subset_of_size(pool, k, [&](Mask mset) {
      for (Mask f : found)
        if ((f & mset) == f) return true;
      Mask rest = all & ~mset;
      if (rest == 0 || o.I(rest, y, mset) <= kIndependenceTol) found.push_back(mset);
      return true;
    });
  std::vector<std::vector<int>> out;
  for (Mask f : found) out.push_back(cols_of(f));
  return out;
}

// Mean of the gamma law followed by the plug-in estimate of I(X;Y|Z) under
// independence; N may be +inf.
inline double finite_sample_mi_bias(int card_x, int card_y, int card_z, double n) {
  if (card_x < 1 || card_y < 1 || card_z < 1 || !(n >= 1)) throw ParameterError("invalid bias arguments");
  if (std::isinf(n)) return 0.0;
  return static_cast<double>(card_z) * (card_x - 1) * (card_y - 1) / (2.0 * n * std::log(2.0));
}

// Gamma shape and scale matching finite_sample_mi_bias.
inline std::pair<double, double> finite_sample_mi_gamma(int card_x, int card_y, int card_z, double n) {
  double shape = 0.5 * card_z * (card_x - 1) * (card_y - 1);
  return {shape, 1.0 / (n * std::log(2.0))};
}

// Plug-in I(X;Y) from weighted samples of two categorical codes.
inline double plugin_mi(const std::vector<int>& x, const std::vector<int>& y, int card_x, int card_y,
                        const std::vector<double>* w = nullptr) {
  std::vector<double> joint(static_cast<std::size_t>(card_x) * card_y, 0.0), px(card_x, 0.0), py(card_y, 0.0);
  double total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double wi = w ? (*w)[i] : 1.0;
    joint[static_cast<std::size_t>(x[i]) * card_y + y[i]] += wi;
    px[x[i]] += wi;
    py[y[i]] += wi;
    total += wi;
  }
  if (total <= 0) return 0;
  double v = entropy_of_weights(px) + entropy_of_weights(py) - entropy_of_weights(joint);
  return v < 0 ? 0.0 : v;
}

}  // namespace fi
