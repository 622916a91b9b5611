#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fixtures.hpp"

using namespace maxent;

namespace {

double eval_at(const CompressedPolynomial& poly, const std::vector<double>& alpha) {
  return evaluate(poly, Assignment(std::span<const double>(alpha)));
}

std::set<std::vector<StatId>> stat_sets(const CompressedPolynomial& poly) {
  std::set<std::vector<StatId>> out;
  for (const auto& c : poly.components()) {
    for (const auto& t : c.terms) out.insert(t.stat_set);
  }
  return out;
}

}  // namespace

TEST(Compressed, BinaryCubeIsSingleProduct) {
  const auto stats = fixtures::binary_cube();
  const auto poly = build_compressed(stats);
  EXPECT_EQ(poly.term_count(), 1u);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = fixtures::random_alpha(rng, stats.size());
    const double want = (a[0] + a[1]) * (a[2] + a[3]) * (a[4] + a[5]);
    EXPECT_LE(fixtures::rel_err(eval_at(poly, a), want), 1e-14);
  }
}

TEST(Compressed, BinaryCubePairsTerms) {
  const auto poly = build_compressed(fixtures::binary_cube_pairs());
  // AB stats are 6, 7; BC stats are 8, 9. {6, 9} and {7, 8} disagree on B.
  const std::set<std::vector<StatId>> want{{6}, {7}, {8}, {9}, {6, 8}, {7, 9}};
  EXPECT_EQ(stat_sets(poly), want);
  EXPECT_EQ(poly.term_count(), 7u);
}

TEST(Compressed, BinaryCubePairsAllOnesIsEight) {
  const auto stats = fixtures::binary_cube_pairs();
  const auto poly = build_compressed(stats);
  EXPECT_EQ(eval_at(poly, std::vector<double>(stats.size(), 1.0)), 8.0);
}

TEST(Compressed, OneDimensionalAllOnesIsTupleCount) {
  const auto stats = fixtures::make_stats({{1, 1, 1}, {2, 2, 0, 0}, {4, 0, 0, 0, 0}}, 4);
  const auto poly = build_compressed(stats);
  EXPECT_EQ(eval_at(poly, std::vector<double>(stats.size(), 1.0)), 60.0);
}

TEST(Compressed, ThousandDomainSlotCounts) {
  const auto stats = fixtures::thousand_domain();
  const auto poly = build_compressed(stats);
  ASSERT_EQ(poly.components().size(), 1u);
  std::map<std::vector<std::size_t>, std::size_t> per_set;
  const auto& comp = poly.components()[0];
  for (const auto& t : comp.terms) {
    auto& slots = per_set[t.attrs];
    if (slots == 0) {
      for (auto a : comp.attrs) {
        if (std::find(t.attrs.begin(), t.attrs.end(), a) == t.attrs.end()) slots += 1000;
      }
    }
    for (const auto& iv : t.restricted) slots += iv.length();
  }
  EXPECT_EQ(per_set.at({0, 1}), 1200u);
  EXPECT_EQ(per_set.at({1, 2}), 1350u);
  EXPECT_EQ(per_set.at({0, 1, 2}), 250u);
  const auto report = size_report(poly);
  EXPECT_EQ(report.slot_count, 3000u + 1200 + 1350 + 250);
  EXPECT_EQ(report.attribute_sets, 2u);
  EXPECT_EQ(report.max_coverings, 2u);
  // {AB, BC[650,699]} is absent: the B ranges [500,599] and [650,699] are disjoint.
  EXPECT_EQ(stat_sets(poly), (std::set<std::vector<StatId>>{{3000}, {3001}, {3002}, {3000, 3001}}));
}

TEST(Compressed, OneDimensionalSizeReport) {
  const auto r = size_report(build_compressed(fixtures::binary_cube()));
  EXPECT_EQ(r.term_count, 1u);
  EXPECT_EQ(r.attribute_sets, 0u);
  EXPECT_EQ(r.max_coverings, 0u);
  EXPECT_EQ(r.slot_count, 6u);
}

TEST(Compressed, EquivalentToNaiveExpansion) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    const auto stats = fixtures::random_stats(rng);
    const auto poly = build_compressed(stats);
    const auto naive = oracle::naive_expand(stats);
    for (int k = 0; k < 5; ++k) {
      auto a = fixtures::random_alpha(rng, stats.size(), 0.0, 2.0);
      if (k == 4) {
        for (auto& x : a) x = std::bernoulli_distribution(0.3)(rng) ? 0.0 : x;
      }
      EXPECT_LE(fixtures::rel_err(eval_at(poly, a), oracle::evaluate(naive, a)), 1e-12) << "trial " << trial;
    }
  }
}

TEST(Compressed, DroppingAnIntersectionTermBreaksEquivalence) {
  const auto stats = fixtures::binary_cube_pairs();
  const auto poly = build_compressed(stats);
  const auto naive = oracle::naive_expand(stats);
  std::mt19937_64 rng(5);
  const auto a = fixtures::random_alpha(rng, stats.size(), 0.2, 2.0);
  ASSERT_LE(fixtures::rel_err(eval_at(poly, a), oracle::evaluate(naive, a)), 1e-12);
  auto comps = poly.components();
  auto& terms = comps[0].terms;
  const auto it = std::find_if(terms.begin(), terms.end(), [](const CompressionTerm& t) { return t.stat_set.size() == 2; });
  ASSERT_NE(it, terms.end());
  terms.erase(it);
  const CompressedPolynomial mutant(poly.domain_sizes(), poly.variable_count(), comps);
  EXPECT_GT(fixtures::rel_err(eval_at(mutant, a), oracle::evaluate(naive, a)), 1e-6);
}

TEST(Compressed, Multilinear) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto stats = fixtures::random_stats(rng);
    const auto poly = build_compressed(stats);
    auto a = fixtures::random_alpha(rng, stats.size());
    for (StatId j = 0; j < stats.size(); ++j) {
      auto b = a;
      b[j] = 0.5;
      const double f0 = eval_at(poly, b);
      b[j] = 1.0;
      const double f1 = eval_at(poly, b);
      b[j] = 1.5;
      const double f2 = eval_at(poly, b);
      EXPECT_LE(std::abs(f2 - 2 * f1 + f0), 1e-12 * std::max(1.0, std::abs(f1)));
    }
  }
}

TEST(Compressed, ZeroSetMatchesOverride) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto stats = fixtures::random_stats(rng);
    const auto poly = build_compressed(stats);
    const auto a = fixtures::random_alpha(rng, stats.size());
    Assignment z{std::span<const double>(a)}, o{std::span<const double>(a)};
    for (StatId j = 0; j < stats.one_d_count(); ++j) {
      if (rng() % 3 == 0) {
        z.zero(j);
        o.set(j, 0.0);
      }
    }
    EXPECT_EQ(evaluate(poly, z), evaluate(poly, o));
  }
}

TEST(Derivative, WeightedOneDimensionalAllOnes) {
  const auto stats = fixtures::make_stats({{1, 1, 1}, {2, 2, 0, 0}, {4, 0, 0, 0, 0}}, 4);
  const auto poly = build_compressed(stats);
  const std::vector<double> ones(stats.size(), 1.0);
  EXPECT_EQ(derivative_weighted(poly, Assignment(std::span<const double>(ones)), 0), 20.0);
  EXPECT_EQ(derivative_weighted(poly, Assignment(std::span<const double>(ones)), 4), 15.0);
}

TEST(Derivative, WeightedSumsToPolynomialPerAttribute) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto stats = fixtures::random_stats(rng);
    const auto poly = build_compressed(stats);
    const auto a = fixtures::random_alpha(rng, stats.size());
    const Assignment as{std::span<const double>(a)};
    const double p = evaluate(poly, as);
    for (std::size_t i = 0; i < stats.arity(); ++i) {
      double total = 0;
      for (BucketIndex v = 0; v < stats.domain_sizes()[i]; ++v) total += derivative_weighted(poly, as, stats.one_d_id(i, v));
      EXPECT_LE(fixtures::rel_err(total, p), 1e-12);
    }
  }
}

TEST(Derivative, WeightedMatchesMultilinearDifference) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const auto stats = fixtures::random_stats(rng);
    const auto poly = build_compressed(stats);
    const auto a = fixtures::random_alpha(rng, stats.size());
    for (StatId j = 0; j < stats.one_d_count(); ++j) {
      auto b = a;
      b[j] = 1.0;
      const double p1 = eval_at(poly, b);
      b[j] = 0.0;
      const double p0 = eval_at(poly, b);
      const double want = a[j] * (p1 - p0);
      EXPECT_LE(std::abs(derivative_weighted(poly, Assignment(std::span<const double>(a)), j) - want),
                1e-12 * std::max(1.0, std::abs(eval_at(poly, a))));
    }
  }
}

TEST(Derivative, GeneralMatchesSymbolic) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto stats = fixtures::random_stats(rng);
    const auto poly = build_compressed(stats);
    const auto naive = oracle::naive_expand(stats);
    const auto a = fixtures::random_alpha(rng, stats.size());
    for (StatId j = 0; j < stats.size(); ++j) {
      const double want = oracle::derivative(naive, a, j);
      EXPECT_LE(std::abs(derivative_general(poly, Assignment(std::span<const double>(a)), j) - want),
                1e-11 * std::max(1.0, std::abs(oracle::evaluate(naive, a))));
    }
  }
}

TEST(Derivative, TwoDimensionalVariableAtAllOnes) {
  const auto stats = fixtures::binary_cube_pairs();
  const auto poly = build_compressed(stats);
  const std::vector<double> ones(stats.size(), 1.0);
  EXPECT_NEAR(derivative_general(poly, Assignment(std::span<const double>(ones)), 6), 2.0, 1e-15);
}

TEST(Derivative, ZeroedContext) {
  const auto stats = fixtures::binary_cube_pairs();
  const auto poly = build_compressed(stats);
  std::vector<double> a(stats.size(), 1.0);
  a[0] = 0.0;  // alpha_1 = 0 removes every monomial carrying [ab]_{1,1}
  EXPECT_EQ(derivative_general(poly, Assignment(std::span<const double>(a)), 6), 0.0);
}

TEST(Evaluate, LogFallbackAgrees) {
  // Values large enough that the direct product overflows the guard.
  std::vector<std::vector<std::int64_t>> one_d(40, std::vector<std::int64_t>(3, 1));
  one_d[0] = {1, 1, 1};
  const auto stats = fixtures::make_stats(one_d, 3, {{fixtures::point(40, {{0, 0}, {1, 0}}), 1}});
  const auto poly = build_compressed(stats);
  std::vector<double> a(stats.size(), 1e9);
  a.back() = 0.5;
  const Assignment as{std::span<const double>(a)};
  const auto lv = evaluate_log(poly, as);
  EXPECT_EQ(lv.sign, 1);
  // log P = 40 log(3e9) + log(1 + (0.5 - 1) / 9)
  const double want = 40 * std::log(3e9) + std::log1p(-0.5 / 9);
  EXPECT_NEAR(lv.log_abs, want, 1e-9 * want);
  EXPECT_TRUE(std::isinf(evaluate(poly, as)) || evaluate(poly, as) > 1e300);
}

TEST(Evaluate, AssignmentSizeChecked) {
  const auto poly = build_compressed(fixtures::binary_cube());
  const std::vector<double> a(3, 1.0);
  EXPECT_THROW(evaluate(poly, Assignment(std::span<const double>(a))), PolynomialError);
}

TEST(Evaluate, TermCapEnforced) {
  EXPECT_THROW(build_compressed(fixtures::binary_cube_pairs(), 3), PolynomialError);
}

TEST(Summation, PairwiseMatchesLongDouble) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(100'000);
  long double ref = 0;
  for (auto& x : v) ref += (x = u(rng));
  EXPECT_NEAR(pairwise_sum(v), static_cast<double>(ref), 1e-10);
}
