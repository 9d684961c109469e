// Apache License, Version 2.0, refer to LICENSE.txt
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fi/distributions.hpp"
#include "fi/infotheory.hpp"

using namespace fi;

namespace {

// Y = X1 xor X2 over uniform inputs.
JointDistribution xor_pair() {
  JointDistribution d;
  d.variables = {{"X1", 2, false}, {"X2", 2, false}};
  d.output = {"Y", 2, false};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      d.configs.push_back({a, b, a ^ b});
      d.probs.push_back(0.25);
    }
  return d;
}

// Y = X1, with X2 a copy of X1 and X3 uniform noise.
JointDistribution copy_pair() {
  JointDistribution d;
  d.variables = {{"X1", 2, false}, {"X2", 2, false}, {"X3", 2, false}};
  d.output = {"Y", 2, false};
  for (int a = 0; a < 2; ++a)
    for (int n = 0; n < 2; ++n) {
      d.configs.push_back({a, a, n, a});
      d.probs.push_back(0.25);
    }
  return d;
}

JointDistribution random_distribution(std::uint64_t seed, int p, int card) {
  Rng rng(seed);
  JointDistribution d;
  for (int i = 0; i < p; ++i) d.variables.push_back({"X" + std::to_string(i + 1), card, false});
  d.output = {"Y", card, false};
  int n = p + 1;
  std::size_t combos = 1;
  for (int i = 0; i < n; ++i) combos *= card;
  double s = 0;
  for (std::size_t k = 0; k < combos; ++k) {
    std::vector<int> cfg(n);
    std::size_t x = k;
    for (int i = n - 1; i >= 0; --i) {
      cfg[i] = static_cast<int>(x % card);
      x /= card;
    }
    double w = uniform01(rng);
    d.configs.push_back(cfg);
    d.probs.push_back(w);
    s += w;
  }
  for (double& w : d.probs) w /= s;
  return d;
}

}  // namespace

TEST(Entropy, Basics) {
  auto d = xor_pair();
  EXPECT_NEAR(entropy(d, {0}), 1.0, 1e-12);
  auto digit = generate(Problem::digit);
  EXPECT_NEAR(entropy(digit, {digit.output_column()}), 3.3219, 1e-4);
  JointDistribution c;
  c.variables = {{"A", 3, false}};
  c.output = {"Y", 2, false};
  c.configs = {{2, 1}};
  c.probs = {1.0};
  EXPECT_EQ(entropy(c, {0}), 0.0);
}

TEST(Entropy, UnknownColumn) {
  auto d = xor_pair();
  EXPECT_THROW(entropy(d, {7}), ParameterError);
}

TEST(ConditionalMI, CopyAndXor) {
  auto c = copy_pair();
  EXPECT_NEAR(cond_mutual_information(c, {0}, {c.output_column()}), 1.0, 1e-12);
  auto d = xor_pair();
  EXPECT_NEAR(cond_mutual_information(d, {0}, {2}), 0.0, 1e-12);
  EXPECT_NEAR(cond_mutual_information(d, {0}, {2}, {1}), 1.0, 1e-12);
}

TEST(ConditionalMI, DigitFirstSegment) {
  auto d = generate(Problem::digit);
  EXPECT_NEAR(cond_mutual_information(d, {0}, {d.output_column()}), 7 * 0.103, 0.005);
}

TEST(ConditionalMI, OverlapRejected) {
  auto d = xor_pair();
  EXPECT_THROW(cond_mutual_information(d, {0}, {0}), ParameterError);
  EXPECT_THROW(cond_mutual_information(d, {0}, {2}, {0}), ParameterError);
}

TEST(MultivariateMI, Examples) {
  auto d = xor_pair();
  EXPECT_NEAR(multivariate_mi(d, {0}, {1}, {2}), -1.0, 1e-12);
  auto c = copy_pair();
  EXPECT_NEAR(multivariate_mi(c, {0}, {c.output_column()}, {2}), 0.0, 1e-12);
  EXPECT_NEAR(multivariate_mi(c, {0}, {1}, {c.output_column()}), 1.0, 1e-12);
}

TEST(Redundancy, Examples) {
  auto d = xor_pair();
  EXPECT_NEAR(redundancy_score(d, {0, 1}), 0.0, 1e-12);
  EXPECT_NEAR(redundancy_score(d, {0, 1, 2}), 1.0, 1e-12);
  auto c = copy_pair();
  EXPECT_NEAR(redundancy_score(c, {0, 1}), 1.0, 1e-12);
  EXPECT_THROW(redundancy_score(c, {0}), ParameterError);
}

TEST(Relevance, XorStrongWeak) {
  auto d = generate(Problem::xor_strongweak, {0.8});
  EXPECT_EQ(classify_relevance(d, 0).label, Relevance::strongly_relevant);
  EXPECT_EQ(classify_relevance(d, 1).label, Relevance::strongly_relevant);
  EXPECT_EQ(classify_relevance(d, 2).label, Relevance::weakly_relevant);
}

TEST(Relevance, ChainNoiseIsIrrelevant) {
  auto d = generate(Problem::chain, {0.8, 5, 2});
  for (int m = 2; m < 5; ++m) {
    auto lab = classify_relevance(d, m);
    EXPECT_EQ(lab.label, Relevance::irrelevant);
    EXPECT_FALSE(lab.witness.has_value());
    EXPECT_FALSE(degree(d, m).has_value());
  }
}

TEST(Relevance, CopiesAreWeak) {
  auto c = copy_pair();
  EXPECT_EQ(classify_relevance(c, 0).label, Relevance::weakly_relevant);
  EXPECT_EQ(classify_relevance(c, 1).label, Relevance::weakly_relevant);
  EXPECT_EQ(classify_relevance(c, 2).label, Relevance::irrelevant);
}

TEST(Degree, Scenarios) {
  EXPECT_EQ(degree(xor_pair(), 0), 1);
  auto m = generate(Problem::marginal_only, {0.8, 6, 4});
  for (int i = 0; i < 4; ++i) EXPECT_EQ(degree(m, i), 0);
  auto c = generate(Problem::clique, {0.8, 5, 3});
  for (int i = 0; i < 3; ++i) EXPECT_EQ(degree(c, i), 2);
  auto ch = generate(Problem::chain, {0.8, 6, 4});
  for (int i = 0; i < 4; ++i) EXPECT_EQ(degree(ch, i), i);
}

TEST(MarkovBoundaries, Examples) {
  JointDistribution d;
  d.variables = {{"X1", 2, false}, {"X2", 2, false}, {"X3", 2, false}};
  d.output = {"Y", 2, false};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        d.configs.push_back({a, b, c, a});
        d.probs.push_back(0.125);
      }
  EXPECT_EQ(markov_boundaries(d), (std::vector<std::vector<int>>{{0}}));
  EXPECT_EQ(markov_boundaries(copy_pair()), (std::vector<std::vector<int>>{{0}, {1}}));
  EXPECT_EQ(markov_boundaries(generate(Problem::xor_strongweak)), (std::vector<std::vector<int>>{{0, 1}}));
}

TEST(MarkovBoundaries, ContainStrongExcludeIrrelevant) {
  for (auto d : {generate(Problem::xor_strongweak), generate(Problem::chain, {0.8, 5, 3}), copy_pair(),
                 generate(Problem::marginal_only, {0.8, 5, 3})}) {
    auto bounds = markov_boundaries(d);
    ASSERT_FALSE(bounds.empty());
    for (int m = 0; m < d.p(); ++m) {
      auto lab = classify_relevance(d, m).label;
      for (auto& b : bounds) {
        bool in = std::find(b.begin(), b.end(), m) != b.end();
        if (lab == Relevance::strongly_relevant) EXPECT_TRUE(in);
        if (lab == Relevance::irrelevant) EXPECT_FALSE(in);
      }
    }
  }
}

TEST(MarkovBoundaries, SizeGuard) {
  auto d = generate(Problem::clique, {0.8, 17, 2});
  EXPECT_THROW(markov_boundaries(d), ParameterError);
}

TEST(Witness, OnlyRelevantVariables) {
  std::vector<JointDistribution> problems = {generate(Problem::xor_strongweak), generate(Problem::chain, {0.8, 6, 3}),
                                             generate(Problem::clique, {0.8, 5, 3}), generate(Problem::digit),
                                             generate(Problem::marginal_only, {0.8, 6, 3})};
  for (auto& d : problems) {
    std::vector<Relevance> labels;
    for (int m = 0; m < d.p(); ++m) labels.push_back(classify_relevance(d, m).label);
    EntropyOracle o(d);
    for (int m = 0; m < d.p(); ++m) {
      auto w = minimal_witness(o, m);
      if (!w) continue;
      for (int b : *w) EXPECT_NE(labels[b], Relevance::irrelevant);
    }
  }
}

TEST(FiniteSampleBias, Values) {
  EXPECT_NEAR(finite_sample_mi_bias(2, 2, 1, 1000), 7.21e-4, 1e-6);
  EXPECT_EQ(finite_sample_mi_bias(2, 2, 1, std::numeric_limits<double>::infinity()), 0.0);
  EXPECT_NEAR(finite_sample_mi_bias(4, 2, 1, 500), 3 * finite_sample_mi_bias(2, 2, 1, 500), 1e-15);
  auto [k, theta] = finite_sample_mi_gamma(2, 2, 1, 1000);
  EXPECT_NEAR(k * theta, finite_sample_mi_bias(2, 2, 1, 1000), 1e-15);
}

TEST(FiniteSampleBias, MonteCarlo) {
  Rng rng(11);
  const int trials = 2000, n = 1000;
  double sum = 0;
  std::vector<int> x(n), y(n);
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < n; ++i) {
      x[i] = static_cast<int>(uniform_index(rng, 2));
      y[i] = static_cast<int>(uniform_index(rng, 2));
    }
    sum += plugin_mi(x, y, 2, 2);
  }
  EXPECT_NEAR(sum / trials, finite_sample_mi_bias(2, 2, 1, n), 0.15 * finite_sample_mi_bias(2, 2, 1, n));
}

TEST(Properties, ChainRuleAndSymmetry) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto d = random_distribution(seed, 3, 2 + static_cast<int>(seed % 2));
    int y = d.output_column();
    double lhs = cond_mutual_information(d, {0, 1}, {y}, {2});
    double rhs = cond_mutual_information(d, {0}, {y}, {2}) + cond_mutual_information(d, {1}, {y}, {0, 2});
    EXPECT_NEAR(lhs, rhs, 1e-10);
    EXPECT_NEAR(cond_mutual_information(d, {0}, {y}, {1}), cond_mutual_information(d, {y}, {0}, {1}), 1e-12);
    EXPECT_GE(cond_mutual_information(d, {1}, {y}, {0}), 0.0);
    double h = entropy(d, {0, 1});
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log2(static_cast<double>(d.variables[0].cardinality * d.variables[1].cardinality)) + 1e-12);
  }
}

TEST(Properties, StrongImpliesEveryBoundary) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto d = random_distribution(seed, 3, 2);
    auto bounds = markov_boundaries(d);
    for (int m = 0; m < d.p(); ++m)
      if (classify_relevance(d, m).label == Relevance::strongly_relevant)
        for (auto& b : bounds) EXPECT_NE(std::find(b.begin(), b.end(), m), b.end());
  }
}
