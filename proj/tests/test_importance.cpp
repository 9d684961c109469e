// Apache License, Version 2.0, refer to LICENSE.txt
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fi/distributions.hpp"
#include "fi/forest.hpp"
#include "fi/importance.hpp"
#include "fi/infotheory.hpp"

using namespace fi;

namespace {

const double kDigitTotals[7] = {0.413, 0.582, 0.531, 0.542, 0.657, 0.226, 0.372};

Dataset binary_copy_data(std::size_t n, std::uint64_t seed, int noise_columns) {
  Rng rng(seed);
  Dataset ds;
  ds.columns.push_back({"X1", 2, false});
  for (int k = 0; k < noise_columns; ++k) ds.columns.push_back({"N" + std::to_string(k + 1), 2, false});
  ds.columns.push_back({"Y", 2, false});
  ds.data.assign(ds.columns.size(), {});
  for (std::size_t r = 0; r < n; ++r) {
    int x = static_cast<int>(uniform_index(rng, 2));
    ds.data[0].push_back(x);
    for (int k = 0; k < noise_columns; ++k) ds.data[1 + k].push_back(static_cast<double>(uniform_index(rng, 2)));
    ds.data.back().push_back(x);
  }
  ds.output = static_cast<int>(ds.columns.size()) - 1;
  return ds;
}

ForestConfig totally_randomized(int trees, std::uint64_t seed) {
  ForestConfig cfg;
  cfg.method = Method::totally_randomized;
  cfg.n_trees = trees;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(Mdi, UnusedVariableIsZeroAndFullTreeSumsToEntropy) {
  auto ds = binary_copy_data(200, 1, 1);
  ForestConfig cfg;
  cfg.method = Method::bagging;
  cfg.tree.K = 2;
  cfg.n_trees = 1;
  cfg.tree.max_depth = 1;
  auto rep = mdi(build_forest(ds, cfg), ds);
  EXPECT_EQ(rep.scores[1], 0.0);

  auto digit = exact_frequency(generate(Problem::digit));
  auto one = mdi(build_forest(digit, totally_randomized(1, 4)), digit);
  EXPECT_NEAR(std::accumulate(one.scores.begin(), one.scores.end(), 0.0), std::log2(10.0), 1e-9);
}

TEST(Mdi, DigitConvergesToOracle) {
  auto d = generate(Problem::digit);
  auto ds = exact_frequency(d);
  auto oracle = asymptotic_mdi_table(d, 7);
  double prev = 1e9;
  for (int n : {100, 1000, 10000}) {
    auto rep = mdi(build_forest(ds, totally_randomized(n, 11)), ds);
    double dev = 0;
    for (int m = 0; m < 7; ++m) dev = std::max(dev, std::abs(rep.scores[m] - oracle.scores[m]));
    EXPECT_LT(dev, prev) << "N_T=" << n;
    prev = dev;
    if (n == 10000) {
      EXPECT_LE(dev, 0.01);
      EXPECT_NEAR(rep.scores[0], 0.413, 0.01);
    }
  }
}

TEST(Mdi, PositiveImportanceImpliesRelevant) {
  for (auto d : {generate(Problem::chain, {0.8, 6, 3}), generate(Problem::xor_strongweak),
                 generate(Problem::clique, {0.8, 5, 2})}) {
    auto ds = exact_frequency(d);
    for (auto method : {Method::totally_randomized, Method::extra_trees}) {
      auto cfg = totally_randomized(100, 2);
      cfg.method = method;
      cfg.tree.K = method == Method::extra_trees ? 2 : 1;
      auto rep = mdi(build_forest(ds, cfg), ds);
      for (int m = 0; m < d.p(); ++m)
        if (rep.scores[m] > 1e-12) EXPECT_NE(classify_relevance(d, m).label, Relevance::irrelevant);
    }
  }
}

TEST(SelectionFrequency, Examples) {
  Dataset ds;
  ds.columns = {{"X1", 2, false}, {"X2", 2, false}, {"X3", 2, false}, {"Y", 4, false}};
  ds.data = {{0, 0, 1, 1}, {0, 1, 0, 1}, {0, 0, 0, 0}, {0, 0, 1, 2}};
  ds.output = 3;
  // Y depends on X2 only inside X1 = 1; a best-split tree with K = 3 splits X1 then X2.
  ForestConfig cfg;
  cfg.method = Method::bagging;
  cfg.n_trees = 1;
  cfg.tree.K = 3;
  Forest f = build_forest(ds, cfg);
  f.trees[0] = grow_tree(ds, cfg.tree);
  auto rep = selection_frequency(f, ds);
  EXPECT_NEAR(rep.scores[0], 0.5, 1e-12);
  EXPECT_NEAR(rep.scores[1], 0.5, 1e-12);
  EXPECT_EQ(rep.scores[2], 0.0);

  cfg.tree.max_depth = 1;
  f.trees[0] = grow_tree(ds, cfg.tree);
  auto stump = selection_frequency(f, ds);
  EXPECT_NEAR(stump.scores[0], 1.0, 1e-12);

  cfg.tree.max_depth = 0;
  f.trees[0] = grow_tree(ds, cfg.tree);
  EXPECT_THROW(selection_frequency(f, ds), ParameterError);
}

TEST(Mda, NoiseNearZeroAndCopyNearHalf) {
  auto ds = binary_copy_data(2000, 5, 1);
  ForestConfig cfg;
  cfg.method = Method::bagging;
  cfg.n_trees = 200;
  cfg.tree.K = 2;
  cfg.seed = 3;
  auto f = build_forest(ds, cfg);
  auto rep = mda(f, ds, Loss::zero_one, 10, 7);
  EXPECT_NEAR(rep.scores[1], 0.0, 0.02);
  EXPECT_NEAR(rep.scores[0], 0.5, 0.05);
}

TEST(Mda, StumpsOnCopy) {
  auto ds = binary_copy_data(2000, 6, 0);
  ForestConfig cfg;
  cfg.method = Method::bagging;
  cfg.n_trees = 50;
  cfg.tree.max_depth = 1;
  auto rep = mda(build_forest(ds, cfg), ds, Loss::zero_one, 10, 1);
  EXPECT_NEAR(rep.scores[0], 0.5, 0.05);
}

TEST(Mda, DuplicatesShareCredit) {
  auto single = binary_copy_data(1000, 7, 0);
  Dataset dup = single;
  dup.columns.insert(dup.columns.begin() + 1, Column{"X2", 2, false});
  dup.data.insert(dup.data.begin() + 1, dup.data[0]);
  dup.output = 2;
  ForestConfig cfg;
  cfg.method = Method::bagging;
  cfg.n_trees = 100;
  cfg.tree.K = 1;
  double one = mda(build_forest(single, cfg), single, Loss::zero_one, 5, 2).scores[0];
  auto two = mda(build_forest(dup, cfg), dup, Loss::zero_one, 5, 2);
  EXPECT_LT(two.scores[0], one);
  EXPECT_LT(two.scores[1], one);
}

TEST(Mda, RequiresOutOfBagRows) {
  auto ds = binary_copy_data(50, 8, 0);
  ForestConfig cfg;
  cfg.n_trees = 5;
  EXPECT_THROW(mda(build_forest(ds, cfg), ds, Loss::zero_one), ParameterError);
}

TEST(ZScore, Examples) {
  auto z = zscore({0, 2});
  EXPECT_FALSE(z.flagged);
  EXPECT_NEAR(z.z, 1.0, 1e-12);
  auto f = zscore({1, 1, 1, 1});
  EXPECT_TRUE(f.flagged);
  EXPECT_TRUE(std::isinf(f.z));
  EXPECT_TRUE(zscore({0, 0, 0}).flagged);
  EXPECT_THROW(zscore({1.0}), ParameterError);
}

TEST(Oracle, DigitTable) {
  auto d = generate(Problem::digit);
  auto rep = asymptotic_mdi_table(d, 7);
  double grand = 0;
  for (int m = 0; m < 7; ++m) {
    EXPECT_NEAR(rep.scores[m], kDigitTotals[m], 1e-3);
    double row = std::accumulate(rep.per_degree[m].begin(), rep.per_degree[m].end(), 0.0);
    EXPECT_NEAR(row, rep.scores[m], 1e-9);
    grand += rep.scores[m];
  }
  EXPECT_NEAR(grand, std::log2(10.0), 1e-10);
  EXPECT_NEAR(asymptotic_mdi(d, 0, 1).score, 0.103, 1e-3);
}

TEST(Oracle, XorStrongWeakMatchesDirectSum) {
  // Direct three-variable expansion, written out term by term.
  for (double alpha : {0.2, 0.8}) {
    auto d = generate(Problem::xor_strongweak, {alpha});
    int y = d.output_column();
    for (int m = 0; m < 3; ++m) {
      int a = (m + 1) % 3, b = (m + 2) % 3;
      double direct = cond_mutual_information(d, {m}, {y}) / 3 +
                      (cond_mutual_information(d, {m}, {y}, {a}) + cond_mutual_information(d, {m}, {y}, {b})) / 6 +
                      cond_mutual_information(d, {m}, {y}, {a, b}) / 3;
      EXPECT_NEAR(asymptotic_mdi(d, m, 3).score, direct, 1e-12);
    }
  }
  auto lo = generate(Problem::xor_strongweak, {0.2});
  EXPECT_LT(asymptotic_mdi(lo, 2, 3).score, asymptotic_mdi(lo, 0, 3).score);
  EXPECT_NEAR(asymptotic_mdi(lo, 0, 3).score, asymptotic_mdi(lo, 1, 3).score, 1e-12);
}

TEST(Oracle, ZeroIffIrrelevant) {
  std::vector<JointDistribution> problems = {
      generate(Problem::digit), generate(Problem::xor_strongweak), generate(Problem::chain, {0.8, 6, 3}),
      generate(Problem::clique, {0.8, 6, 3}), generate(Problem::marginal_only, {0.8, 6, 3})};
  for (auto& d : problems) {
    EntropyOracle o(d);
    for (int m = 0; m < d.p(); ++m) {
      bool zero = asymptotic_mdi(o, m, d.p()).score <= 1e-9;
      EXPECT_EQ(zero, classify_relevance(d, m).label == Relevance::irrelevant);
    }
  }
}

TEST(Oracle, IrrelevantVariableChangesNothing) {
  for (auto d : {generate(Problem::digit), generate(Problem::xor_strongweak), generate(Problem::chain, {0.8, 5, 3})}) {
    auto base = asymptotic_mdi_table(d, d.p());
    auto aug = d.with_noise_variable("noise");
    auto ext = asymptotic_mdi_table(aug, aug.p());
    for (int m = 0; m < d.p(); ++m) EXPECT_NEAR(ext.scores[m], base.scores[m], 1e-10);
    EXPECT_NEAR(ext.scores[d.p()], 0.0, 1e-12);
  }
}

TEST(Oracle, RedundantClosedForm) {
  JointDistribution single;
  single.variables = {{"X1", 2, false}};
  single.output = {"Y", 2, false};
  single.configs = {{0, 0}, {1, 1}};
  single.probs = {0.5, 0.5};
  EXPECT_NEAR(asymptotic_mdi_redundant_closed_form(single, 0), 0.5, 1e-12);

  auto d = generate(Problem::digit);
  auto dup = d.with_duplicate(0);
  EXPECT_NEAR(asymptotic_mdi_redundant_closed_form(d, 0), asymptotic_mdi(dup, 0, dup.p()).score, 1e-9);
  for (int m = 0; m < d.p(); ++m)
    EXPECT_LT(asymptotic_mdi_redundant_closed_form(d, m), asymptotic_mdi(d, m, d.p()).score);
}

TEST(Oracle, Guards) {
  auto d = generate(Problem::digit);
  EXPECT_THROW(asymptotic_mdi(d, 0, 0), ParameterError);
  EXPECT_THROW(asymptotic_mdi(d, 0, 8), ParameterError);
  EXPECT_THROW(asymptotic_mdi(d, 9, 3), ParameterError);
}

TEST(Weights, Identity) {
  for (int p : {1, 2, 3, 6, 7, 8, 10, 30}) EXPECT_TRUE(weight_identity_check(p)) << p;
  for (double w : weight_series(10)) EXPECT_NEAR(w, 0.1, 1e-15);
}

TEST(Masking, NoisyCopy) {
  JointDistribution m;
  m.variables = {{"X1", 2, false}, {"X2", 2, false}};
  m.output = {"Y", 2, false};
  const double e = 0.1;
  m.configs = {{0, 0, 0}, {0, 1, 0}, {1, 1, 1}, {1, 0, 1}};
  m.probs = {0.5 * (1 - e), 0.5 * e, 0.5 * (1 - e), 0.5 * e};
  auto ds = exact_frequency(m);
  ForestConfig cfg;
  cfg.n_trees = 2000;
  cfg.tree.K = 2;
  EXPECT_LE(mdi(build_forest(ds, cfg), ds).scores[1], 0.01);
  cfg.tree.K = 1;
  double half = cond_mutual_information(m, {1}, {2}) / 2;
  EXPECT_NEAR(mdi(build_forest(ds, cfg), ds).scores[1], half, 0.02);
}
