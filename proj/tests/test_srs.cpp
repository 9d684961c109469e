// Apache License, Version 2.0, refer to LICENSE.txt
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fi/distributions.hpp"
#include "fi/infotheory.hpp"
#include "fi/srs.hpp"

using namespace fi;

namespace {

ScenarioModel model(Scenario s, Selector m, double p, double q, int r) {
  ScenarioModel out;
  out.scenario = s;
  out.method = m;
  out.p = p;
  out.q = q;
  out.r = r;
  return out;
}

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

std::set<int> relevant_of(const JointDistribution& d) {
  std::set<int> out;
  for (int m = 0; m < d.p(); ++m)
    if (classify_relevance(d, m).label != Relevance::irrelevant) out.insert(m);
  return out;
}

// Sampled chain problem with r relevant inputs followed by p - r noise inputs.
Dataset sampled_chain(int p, int r, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  for (int j = 0; j < p; ++j) ds.columns.push_back({"X" + std::to_string(j + 1), 2, false});
  ds.columns.push_back({"Y", 2 * r, false});
  ds.data.assign(p + 1, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) ds.data[j][i] = static_cast<double>(uniform_index(rng, 2));
    int level = static_cast<int>(uniform_index(rng, r)), parity = 0;
    for (int j = 0; j <= level; ++j) parity ^= static_cast<int>(ds.data[j][i]);
    ds.data[p][i] = 2 * level + parity;
  }
  ds.output = p;
  return ds;
}

}  // namespace

TEST(ClosedForm, ChainingTable) {
  auto rs = [](double p, double q, int r, int i) {
    return expected_time(model(Scenario::chaining, Selector::RS, p, q, r), i);
  };
  auto srs = [](double p, double q, int r, int i) {
    return expected_time(model(Scenario::chaining, Selector::SRS, p, q, r), i);
  };
  EXPECT_NEAR(rs(1e4, 100, 1, 1), 100, 1e-9);
  EXPECT_NEAR(srs(1e4, 100, 1, 1), 100, 1e-9);
  EXPECT_NEAR(rs(1e4, 100, 2, 2), 10100, 1e-6);
  EXPECT_NEAR(srs(1e4, 100, 2, 2), 200, 1e-9);
  EXPECT_NEAR(srs(1e4, 100, 5, 5), 506.207, 1e-3);
  EXPECT_NEAR(srs(1e5, 100, 3, 3), 3028.48, 1e-2);
}

TEST(ClosedForm, CliqueTable) {
  auto m = [](Selector s, double p, double q, int r) {
    return expected_time(model(Scenario::clique, s, p, q, r), r);
  };
  EXPECT_NEAR(m(Selector::RS, 1e4, 100, 2), 30300, 1e-6);
  EXPECT_NEAR(m(Selector::SRS, 1e4, 100, 2), 10302, 1e-6);
  EXPECT_NEAR(m(Selector::RS, 1e4, 1e3, 4), 83785.1, 0.1);
  EXPECT_NEAR(m(Selector::SRS, 1e4, 1e3, 4), 11635.8, 0.1);
}

TEST(ClosedForm, OverflowIsInfinite) {
  double t = expected_time(model(Scenario::chaining, Selector::RS, 1e12, 40, 40), 40);
  EXPECT_TRUE(std::isinf(t));
}

TEST(ClosedForm, Errors) {
  EXPECT_THROW(expected_time(model(Scenario::marginal_only, Selector::RS, 100, 10, 3), 3), ParameterError);
  EXPECT_THROW(expected_time(model(Scenario::chaining, Selector::RS, 100, 10, 11), 3), ParameterError);
  EXPECT_THROW(expected_time(model(Scenario::chaining, Selector::RS, 100, 10, 3), 4), ParameterError);
}

TEST(ClosedForm, SrsNotSlowerOnChainingAndClique) {
  struct P { double p, q; int r; };
  for (auto [p, q, r] : {P{1e4, 100, 1}, P{1e4, 100, 2}, P{1e4, 100, 5}, P{1e5, 100, 3}, P{1e4, 1e3, 4}}) {
    for (auto s : {Scenario::chaining, Scenario::clique}) {
      if (s == Scenario::clique && r < 2) continue;
      double a = expected_time(model(s, Selector::SRS, p, q, r), r);
      double b = expected_time(model(s, Selector::RS, p, q, r), r);
      EXPECT_LE(a, b * (1 + 1e-12) + 1e-9);
    }
  }
}

TEST(Markov, RowsAreStochasticAndAbsorbing) {
  for (auto s : {Scenario::chaining, Scenario::clique, Scenario::marginal_only})
    for (auto m : {Selector::RS, Selector::SRS}) {
      auto P = markov_transition_matrix(model(s, m, 100, 10, 4));
      for (int a = 0; a < P.rows(); ++a) {
        EXPECT_NEAR(P.row(a).sum(), 1.0, 1e-12);
        for (int b = 0; b < P.cols(); ++b) EXPECT_GE(P(a, b), 0.0);
      }
      EXPECT_DOUBLE_EQ(P(4, 4), 1.0);
    }
}

TEST(Markov, TwoStateChain) {
  Eigen::MatrixXd P(2, 2);
  P << 0.5, 0.5, 0, 1;
  EXPECT_NEAR(markov_expected_time(P), 2.0, 1e-12);
}

TEST(Markov, NonAbsorbingRejected) {
  Eigen::MatrixXd P(2, 2);
  P << 1, 0, 0, 1;
  EXPECT_THROW(markov_expected_time(P), ParameterError);
}

TEST(Markov, MatchesClosedForms) {
  for (auto s : {Scenario::chaining, Scenario::clique})
    for (auto m : {Selector::RS, Selector::SRS}) {
      auto mod = model(s, m, 100, 10, 3);
      for (int i = 1; i <= 3; ++i) EXPECT_NEAR(markov_expected_time(mod, i), expected_time(mod, i), 1e-6);
    }
}

TEST(Markov, MarginalOnlyTable) {
  EXPECT_NEAR(markov_expected_time(model(Scenario::marginal_only, Selector::RS, 1e4, 100, 10), 10), 291, 1);
  EXPECT_NEAR(markov_expected_time(model(Scenario::marginal_only, Selector::SRS, 1e4, 100, 10), 10), 312, 1);
  EXPECT_NEAR(markov_expected_time(model(Scenario::marginal_only, Selector::SRS, 1e4, 100, 100), 100), 16187, 1);
}

TEST(Markov, MarginalOnlySrsSlower) {
  for (int r : {2, 5, 9}) {
    auto rs = markov_expected_time(model(Scenario::marginal_only, Selector::RS, 1e3, 10, r), r);
    auto srs = markov_expected_time(model(Scenario::marginal_only, Selector::SRS, 1e3, 10, r), r);
    EXPECT_GE(srs, rs);
  }
}

TEST(Markov, FoundCurveNondecreasing) {
  auto P = markov_transition_matrix(model(Scenario::chaining, Selector::SRS, 100, 10, 3));
  auto c = expected_found_curve(P, 200);
  ASSERT_EQ(c.size(), 201u);
  EXPECT_DOUBLE_EQ(c[0], 0.0);
  for (std::size_t t = 1; t < c.size(); ++t) EXPECT_GE(c[t] + 1e-12, c[t - 1]);
  EXPECT_NEAR(c.back(), 3.0, 1e-3);
}

TEST(MonteCarlo, ChainingSrsIdentity) {
  struct P { double p, q; int i; };
  for (auto [p, q, i] : {P{100, 10, 3}, P{1000, 50, 4}}) {
    auto mod = model(Scenario::chaining, Selector::SRS, p, q, i);
    double sim = simulate_selection(mod, i, 10000, 11);
    double exact = expected_time(mod, i);
    EXPECT_NEAR(sim / exact, 1.0, 0.02) << p << "," << q;
  }
}

TEST(MonteCarlo, AllScenarios) {
  for (auto s : {Scenario::chaining, Scenario::clique, Scenario::marginal_only})
    for (auto m : {Selector::RS, Selector::SRS}) {
      auto mod = model(s, m, 100, 10, 3);
      double sim = simulate_selection(mod, 3, 10000, 5);
      EXPECT_NEAR(sim / markov_expected_time(mod, 3), 1.0, 0.03);
    }
}

TEST(Probe, Rule) {
  EXPECT_FALSE(probe_test({5, 5}, 10, 0.95));
  EXPECT_TRUE(probe_test({10, 10}, 10, 0.95));
  EXPECT_FALSE(probe_test({20, 18}, 10, 0.95));
  EXPECT_TRUE(probe_test({20, 19}, 10, 0.95));
  EXPECT_FALSE(probe_test({0, 0}, 0, 0.95));
}

TEST(Srs, RejectsBadConfig) {
  auto ds = exact_frequency(generate(Problem::chain, {0.8, 6, 3}));
  SrsConfig cfg;
  cfg.q = 7;
  EXPECT_THROW(srs_run(ds, cfg), ParameterError);
  cfg.q = 3;
  cfg.alpha = 1.5;
  EXPECT_THROW(srs_run(ds, cfg), ParameterError);
  cfg.alpha = 1;
  cfg.beta = 0;
  EXPECT_THROW(srs_run(ds, cfg), ParameterError);
}

TEST(Srs, AlphaZeroIsRandomSubspace) {
  auto ds = exact_frequency(generate(Problem::chain, {0.8, 10, 3}));
  SrsConfig cfg;
  cfg.q = 4;
  cfg.T = 300;
  cfg.alpha = 0;
  cfg.exact = true;
  cfg.seed = 17;
  auto a = srs_run(ds, cfg);
  auto b = rs_run(ds, cfg);
  ASSERT_EQ(a.trace.iterations.size(), b.trace.iterations.size());
  for (std::size_t t = 0; t < a.trace.iterations.size(); ++t) {
    EXPECT_EQ(a.trace.iterations[t].subset, b.trace.iterations[t].subset);
    EXPECT_EQ(a.trace.iterations[t].f_size, b.trace.iterations[t].f_size);
  }
  EXPECT_EQ(a.trace.F, b.trace.F);
}

TEST(Srs, TraceInvariants) {
  auto ds = exact_frequency(generate(Problem::chain, {0.8, 10, 3}));
  SrsConfig cfg;
  cfg.q = 5;
  cfg.T = 200;
  cfg.alpha = 0.6;
  cfg.exact = true;
  cfg.seed = 3;
  auto res = srs_run(ds, cfg);
  std::size_t f = 0;
  for (auto& it : res.trace.iterations) {
    EXPECT_EQ(it.subset.size(), 5u);
    EXPECT_EQ(as_set(it.subset).size(), 5u);
    EXPECT_EQ(it.reused.size(), std::min<std::size_t>(3, f));
    f = it.f_size;
  }
  EXPECT_EQ(res.forest.trees.size(), 200u);
}

TEST(Srs, FoundFeaturesStayInMemory) {
  auto ds = exact_frequency(generate(Problem::chain, {0.8, 10, 3}));
  SrsConfig cfg;
  cfg.q = 4;
  cfg.T = 400;
  cfg.alpha = 1;
  cfg.exact = true;
  cfg.seed = 8;
  auto res = srs_run(ds, cfg);
  std::vector<int> F;
  for (auto& it : res.trace.iterations) {
    if (F.size() <= static_cast<std::size_t>(cfg.q)) {
      auto s = as_set(it.subset);
      for (int f : F) EXPECT_TRUE(s.count(f));
    }
    F.insert(F.end(), it.found.begin(), it.found.end());
  }
}

TEST(Srs, SoundOnExactData) {
  std::vector<JointDistribution> problems = {generate(Problem::chain, {0.8, 8, 3}),
                                             generate(Problem::clique, {0.8, 8, 2}),
                                             generate(Problem::marginal_only, {0.8, 8, 3}),
                                             generate(Problem::xor_strongweak)};
  for (auto& d : problems) {
    auto ds = exact_frequency(d);
    SrsConfig cfg;
    cfg.q = std::min(4, d.p());
    cfg.K = 1;
    cfg.T = 2000;
    cfg.alpha = 1;
    cfg.exact = true;
    cfg.seed = 21;
    auto res = srs_run(ds, cfg);
    EXPECT_EQ(as_set(res.trace.F), relevant_of(d));
  }
}

TEST(Srs, StronglyRelevantAlwaysFound) {
  auto d = generate(Problem::xor_strongweak);
  std::set<int> strong;
  for (int m = 0; m < d.p(); ++m)
    if (classify_relevance(d, m).label == Relevance::strongly_relevant) strong.insert(m);
  ASSERT_FALSE(strong.empty());
  auto ds = exact_frequency(d.with_noise_variable("N1").with_noise_variable("N2"));
  for (double alpha : {0.0, 0.5, 1.0})
    for (int K : {1, 3})
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SrsConfig cfg;
        cfg.q = 3;
        cfg.K = K;
        cfg.T = 300;
        cfg.alpha = alpha;
        cfg.exact = true;
        cfg.seed = seed;
        auto F = as_set(srs_run(ds, cfg).trace.F);
        for (int m : strong) EXPECT_TRUE(F.count(m)) << alpha << " " << K << " " << seed;
      }
}

TEST(Srs, ProbeRuleRejectsNoise) {
  // Y = X1 with 10% flips; everything else is noise.
  int passed = 0, noise_total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Dataset ds;
    int p = 12;
    std::size_t n = 300;
    for (int j = 0; j < p; ++j) ds.columns.push_back({"X" + std::to_string(j + 1), 2, false});
    ds.columns.push_back({"Y", 2, false});
    ds.data.assign(p + 1, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) ds.data[j][i] = static_cast<double>(uniform_index(rng, 2));
      ds.data[p][i] = uniform01(rng) < 0.1 ? 1 - ds.data[0][i] : ds.data[0][i];
    }
    ds.output = p;
    SrsConfig cfg;
    cfg.q = 4;
    cfg.K = 1;
    cfg.T = 300;
    cfg.alpha = 0.5;
    cfg.seed = seed;
    auto res = srs_run(ds, cfg);
    auto F = as_set(res.trace.F);
    EXPECT_TRUE(F.count(0));
    for (int j = 1; j < p; ++j) {
      ++noise_total;
      passed += F.count(j) ? 1 : 0;
    }
  }
  EXPECT_LE(static_cast<double>(passed) / noise_total, 2 * (1 - 0.95));
}

// A 200-input exact-frequency table is out of reach, so the inputs are
// sampled and the threshold rule is used with a tolerance above the
// finite-sample noise level. The probe rule cannot admit X3 here: its
// evaluations before X1 and X2 are in memory are coin flips.
TEST(Srs, LargeChainFindsAllRelevant) {
  std::vector<int> hits;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto ds = sampled_chain(200, 3, 1000, 100 + seed);
    SrsConfig cfg;
    cfg.q = 20;
    cfg.K = 1;
    cfg.T = 5000;
    cfg.alpha = 1;
    cfg.tree.max_depth = 6;
    cfg.exact = true;
    cfg.tol = 0.05;
    cfg.seed = seed;
    auto F = as_set(srs_run(ds, cfg).trace.F);
    hits.push_back(F.count(0) + F.count(1) + F.count(2) == 3);
  }
  std::sort(hits.begin(), hits.end());
  EXPECT_EQ(hits[hits.size() / 2], 1);
}
