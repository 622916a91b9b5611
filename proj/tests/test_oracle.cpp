#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace maxent;

namespace {

std::vector<std::vector<BucketIndex>> sample_instance() {
  std::vector<std::vector<BucketIndex>> inst{{0, 0, 0}};
  for (int i = 0; i < 9; ++i) inst.push_back({0, 1, 1});
  return inst;
}

}  // namespace

TEST(NaiveExpand, BinaryCube) {
  const auto p = oracle::naive_expand(fixtures::binary_cube());
  ASSERT_EQ(p.monomials.size(), 8u);
  for (const auto& m : p.monomials) EXPECT_EQ(m.vars.size(), 3u);
  EXPECT_EQ(p.monomials[5].vars, (std::vector<StatId>{1, 2, 5}));  // (a2, b1, c2)
}

TEST(NaiveExpand, BinaryCubePairsCarriesTwoDimensionalVariables) {
  const auto p = oracle::naive_expand(fixtures::binary_cube_pairs());
  // (a2, b2, c1) is tuple 6 and carries [ab]_{2,2} (id 7) and [bc]_{2,1} (id 9).
  EXPECT_EQ(p.monomials[6].vars, (std::vector<StatId>{1, 3, 4, 7, 9}));
  // (a1, b1, c1) carries [ab]_{1,1} and [bc]_{1,1}.
  EXPECT_EQ(p.monomials[0].vars, (std::vector<StatId>{0, 2, 4, 6, 8}));
}

TEST(NaiveExpand, SingleTupleDomain) {
  const auto p = oracle::naive_expand(fixtures::make_stats({{4}, {4}}, 4));
  EXPECT_EQ(p.monomials.size(), 1u);
}

TEST(InstanceProbability, BinaryCubeFormula) {
  std::mt19937_64 rng(1);
  const auto stats = fixtures::binary_cube();
  const auto a = fixtures::random_alpha(rng, stats.size(), 0.3, 1.7);
  const double P = (a[0] + a[1]) * (a[2] + a[3]) * (a[4] + a[5]);
  const double want = std::pow(a[0], 10) * a[2] * std::pow(a[3], 9) * a[4] * std::pow(a[5], 9) / std::pow(P, 10);
  EXPECT_LE(fixtures::rel_err(oracle::instance_probability(stats, a, sample_instance()), want), 1e-12);
}

TEST(InstanceProbability, BinaryCubePairsExtraFactor) {
  std::mt19937_64 rng(2);
  const auto stats = fixtures::binary_cube_pairs();
  const auto a = fixtures::random_alpha(rng, stats.size(), 0.3, 1.7);
  const double P = oracle::evaluate(oracle::naive_expand(stats), a);
  const double want = std::pow(a[0], 10) * a[2] * std::pow(a[3], 9) * a[4] * std::pow(a[5], 9) * a[6] * a[8] /
                      std::pow(P, 10);
  EXPECT_LE(fixtures::rel_err(oracle::instance_probability(stats, a, sample_instance()), want), 1e-12);
}

TEST(InstanceProbability, UniformModel) {
  const auto stats = fixtures::binary_cube_pairs();
  const std::vector<double> ones(stats.size(), 1.0);
  EXPECT_NEAR(oracle::instance_probability(stats, ones, sample_instance()), std::pow(8.0, -10), 1e-25);
}

TEST(BruteExpectation, UniformPointQuery) {
  const auto stats = fixtures::binary_cube();
  const std::vector<double> ones(stats.size(), 1.0);
  EXPECT_NEAR(oracle::brute_expectation(stats, ones, fixtures::point(3, {{0, 1}, {1, 0}, {2, 1}}), 1), 1.0 / 8, 1e-15);
}

TEST(BruteExpectation, PointQueriesSumToN) {
  std::mt19937_64 rng(3);
  const auto stats = fixtures::binary_cube_pairs();
  const auto a = fixtures::random_alpha(rng, stats.size());
  double total = 0;
  for (std::uint64_t t = 0; t < 8; ++t) {
    const auto tup = oracle::tuple_at(stats.domain_sizes(), t);
    total += oracle::brute_expectation(stats, a, fixtures::point(3, {{0, tup[0]}, {1, tup[1]}, {2, tup[2]}}), 3);
  }
  EXPECT_NEAR(total, 3.0, 1e-12);
}

TEST(Partition, UniformBinaryCube) {
  const auto stats = fixtures::binary_cube();
  const std::vector<double> ones(stats.size(), 1.0);
  EXPECT_EQ(oracle::partition_function(stats, ones, 2), 64.0);
  EXPECT_TRUE(oracle::verify_partition(stats, ones, 2));
}

TEST(Partition, SingleTupleDomain) {
  const auto stats = fixtures::make_stats({{3}, {3}}, 3);
  const std::vector<double> a{0.7, 1.9};
  EXPECT_NEAR(oracle::partition_function(stats, a, 3), std::pow(0.7 * 1.9, 3), 1e-15);
}

TEST(Partition, RandomFixtures) {
  std::mt19937_64 rng(4);
  fixtures::RandomSpec spec;
  spec.max_tuples = 8;
  spec.max_size = 4;
  spec.n = 3;
  for (int trial = 0; trial < 25; ++trial) {
    const auto stats = fixtures::random_stats(rng, spec);
    const auto a = fixtures::random_alpha(rng, stats.size(), 1e-3, 2.0);
    for (std::int64_t n = 1; n <= 3; ++n) EXPECT_TRUE(oracle::verify_partition(stats, a, n)) << trial;
  }
}

TEST(Expectation, StatisticDerivativeMatchesEnumeration) {
  std::mt19937_64 rng(5);
  fixtures::RandomSpec spec;
  spec.max_tuples = 8;
  spec.max_size = 4;
  spec.n = 3;
  for (int trial = 0; trial < 15; ++trial) {
    const auto stats = fixtures::random_stats(rng, spec);
    const auto naive = oracle::naive_expand(stats);
    const auto a = fixtures::random_alpha(rng, stats.size(), 0.1, 2.0);
    const double P = oracle::evaluate(naive, a);
    for (const auto& st : stats.all()) {
      const double model = 3.0 / P * a[st.id] * oracle::derivative(naive, a, st.id);
      EXPECT_LE(fixtures::rel_err(model, oracle::brute_expectation(stats, a, st.ranges, 3)), 1e-9);
    }
  }
}

TEST(Expectation, IteratedDerivativeEqualsZeroingOnNaive) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto stats = fixtures::random_stats(rng);
    const auto naive = oracle::naive_expand(stats);
    const auto a = fixtures::random_alpha(rng, stats.size());
    const auto q = fixtures::random_query(rng, stats.domain_sizes(), /*points=*/true);
    std::vector<StatId> ids;
    auto zeroed = a;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (!q[i]) continue;
      ids.push_back(stats.one_d_id(i, q[i]->lo));
      for (BucketIndex v = 0; v < stats.domain_sizes()[i]; ++v) {
        if (v != q[i]->lo) zeroed[stats.one_d_id(i, v)] = 0.0;
      }
    }
    const double iterated = oracle::iterated_derivative(naive, a, ids);
    EXPECT_LE(fixtures::rel_err(iterated, oracle::evaluate(naive, zeroed)), 1e-12);
    EXPECT_LE(fixtures::rel_err(oracle::extended_beta_derivative(naive, a, q), iterated), 1e-12);
  }
}
