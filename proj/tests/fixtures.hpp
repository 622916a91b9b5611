#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "maxent/maxent.hpp"

namespace fixtures {

using maxent::BucketIndex;
using maxent::Interval;
using maxent::RangePredicate;
using maxent::Statistic;
using maxent::StatisticSet;

inline std::string data_path(const std::string& name) { return std::string(MAXENT_DATA_DIR) + "/" + name; }

/// 1D point statistics from per-attribute counts, then the given multi-d ones.
inline StatisticSet make_stats(const std::vector<std::vector<std::int64_t>>& one_d, std::int64_t n,
                               const std::vector<std::pair<RangePredicate, std::int64_t>>& multi = {}) {
  std::vector<std::uint32_t> sizes;
  for (const auto& c : one_d) sizes.push_back(static_cast<std::uint32_t>(c.size()));
  std::vector<Statistic> stats;
  for (std::size_t a = 0; a < one_d.size(); ++a) {
    for (BucketIndex v = 0; v < one_d[a].size(); ++v) {
      Statistic st;
      st.id = static_cast<maxent::StatId>(stats.size());
      st.ranges = maxent::all_true(one_d.size());
      st.ranges[a] = Interval{v, v};
      st.s = one_d[a][v];
      stats.push_back(st);
    }
  }
  for (const auto& [ranges, s] : multi) {
    Statistic st;
    st.id = static_cast<maxent::StatId>(stats.size());
    st.ranges = ranges;
    st.s = s;
    stats.push_back(st);
  }
  return StatisticSet(sizes, n, std::move(stats));
}

inline RangePredicate box(std::size_t m, std::initializer_list<std::pair<std::size_t, Interval>> ranges) {
  auto p = maxent::all_true(m);
  for (const auto& [a, r] : ranges) p[a] = r;
  return p;
}

inline RangePredicate point(std::size_t m, std::initializer_list<std::pair<std::size_t, BucketIndex>> values) {
  auto p = maxent::all_true(m);
  for (const auto& [a, v] : values) p[a] = Interval{v, v};
  return p;
}

// R(A, B, C), two values each, n = 10.
inline StatisticSet binary_cube() { return make_stats({{3, 7}, {8, 2}, {6, 4}}, 10); }

// Example 1 plus AB(a1,b1)=2, AB(a2,b2)=1, BC(b1,c1)=5, BC(b2,c1)=1.
inline StatisticSet binary_cube_pairs() {
  return make_stats({{3, 7}, {8, 2}, {6, 4}}, 10,
                    {{point(3, {{0, 0}, {1, 0}}), 2},
                     {point(3, {{0, 1}, {1, 1}}), 1},
                     {point(3, {{1, 0}, {2, 0}}), 5},
                     {point(3, {{1, 1}, {2, 0}}), 1}});
}

// Three 1000-value attributes with AB [100,199]x[500,599], BC [550,649]x[800,899]
// and BC [650,699]x[700,799] (zero-based).
inline StatisticSet thousand_domain() {
  std::vector<std::vector<std::int64_t>> one_d(3, std::vector<std::int64_t>(1000, 1));
  return make_stats(one_d, 1000,
                    {{box(3, {{0, {100, 199}}, {1, {500, 599}}}), 10},
                     {box(3, {{1, {550, 649}}, {2, {800, 899}}}), 10},
                     {box(3, {{1, {650, 699}}, {2, {700, 799}}}), 10}});
}

/// Splits [0,N1) x ... into `pieces` disjoint boxes over `attrs` by random cuts.
inline std::vector<std::vector<Interval>> random_partition(std::mt19937_64& rng, const std::vector<std::uint32_t>& sizes,
                                                           std::size_t pieces) {
  std::vector<std::vector<Interval>> boxes{{}};
  for (auto n : sizes) boxes[0].push_back({0, n - 1});
  for (std::size_t tries = 0; boxes.size() < pieces && tries < 10 * pieces; ++tries) {
    std::uniform_int_distribution<std::size_t> pick_box(0, boxes.size() - 1), pick_dim(0, sizes.size() - 1);
    const auto b = pick_box(rng);
    const auto dim = pick_dim(rng);
    const auto iv = boxes[b][dim];
    if (iv.length() < 2) continue;
    std::uniform_int_distribution<BucketIndex> cut(iv.lo, iv.hi - 1);
    const auto c = cut(rng);
    auto other = boxes[b];
    boxes[b][dim].hi = c;
    other[dim].lo = c + 1;
    boxes.push_back(other);
  }
  return boxes;
}

/// Random counts over `size` values summing to n.
inline std::vector<std::int64_t> random_counts(std::mt19937_64& rng, std::size_t size, std::int64_t n) {
  std::vector<std::int64_t> c(size, 0);
  std::uniform_int_distribution<std::size_t> pick(0, size - 1);
  for (std::int64_t i = 0; i < n; ++i) ++c[pick(rng)];
  return c;
}

struct RandomSpec {
  std::size_t min_attrs = 2, max_attrs = 4;
  std::uint32_t max_size = 6;
  std::uint64_t max_tuples = 10'000;
  std::size_t max_sets = 3;        // attribute sets carrying multi-d statistics
  std::size_t max_per_set = 4;     // statistics per attribute set
  bool allow_three_d = true;
  std::int64_t n = 20;
};

/// Random statistic set: random domains, random disjoint boxes per attribute set.
inline StatisticSet random_stats(std::mt19937_64& rng, const RandomSpec& spec = {}) {
  std::uniform_int_distribution<std::size_t> pick_m(spec.min_attrs, spec.max_attrs);
  const auto m = pick_m(rng);
  std::vector<std::uint32_t> sizes;
  std::uint64_t d = 1;
  for (std::size_t a = 0; a < m; ++a) {
    const auto cap = static_cast<std::uint32_t>(std::min<std::uint64_t>(spec.max_size, spec.max_tuples / d));
    std::uniform_int_distribution<std::uint32_t> pick(1, std::max<std::uint32_t>(1, cap));
    sizes.push_back(pick(rng));
    d *= sizes.back();
  }
  std::vector<std::vector<std::int64_t>> one_d;
  for (auto s : sizes) one_d.push_back(random_counts(rng, s, spec.n));

  std::vector<std::pair<RangePredicate, std::int64_t>> multi;
  std::uniform_int_distribution<std::size_t> pick_sets(0, spec.max_sets);
  const auto sets = m >= 2 ? pick_sets(rng) : 0;
  std::vector<std::vector<std::size_t>> used;
  for (std::size_t k = 0; k < sets; ++k) {
    std::vector<std::size_t> attrs(m);
    std::iota(attrs.begin(), attrs.end(), 0);
    std::shuffle(attrs.begin(), attrs.end(), rng);
    std::size_t width = 2;
    if (spec.allow_three_d && m >= 3 && std::bernoulli_distribution(0.25)(rng)) width = 3;
    attrs.resize(width);
    std::sort(attrs.begin(), attrs.end());
    if (std::find(used.begin(), used.end(), attrs) != used.end()) continue;
    used.push_back(attrs);
    std::vector<std::uint32_t> sub;
    for (auto a : attrs) sub.push_back(sizes[a]);
    std::uniform_int_distribution<std::size_t> pick_count(1, spec.max_per_set);
    auto boxes = random_partition(rng, sub, pick_count(rng) + 1);
    std::shuffle(boxes.begin(), boxes.end(), rng);
    boxes.resize(std::min(boxes.size(), pick_count(rng)));
    std::uniform_int_distribution<std::int64_t> pick_s(0, spec.n);
    for (const auto& b : boxes) {
      auto pred = maxent::all_true(m);
      for (std::size_t i = 0; i < attrs.size(); ++i) pred[attrs[i]] = b[i];
      multi.push_back({pred, pick_s(rng)});
    }
  }
  return make_stats(one_d, spec.n, multi);
}

inline std::vector<double> random_alpha(std::mt19937_64& rng, std::size_t count, double lo = 0.05, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> a(count);
  for (auto& x : a) x = u(rng);
  return a;
}

inline double rel_err(double got, double want) {
  if (want == 0.0) return std::abs(got);
  return std::abs(got - want) / std::abs(want);
}

/// Random range predicate over the given domain sizes; each attribute is
/// left open with probability 1/3.
inline RangePredicate random_query(std::mt19937_64& rng, const std::vector<std::uint32_t>& sizes, bool points = false) {
  RangePredicate p = maxent::all_true(sizes.size());
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) continue;
    std::uniform_int_distribution<BucketIndex> v(0, sizes[a] - 1);
    BucketIndex x = v(rng), y = points ? x : v(rng);
    if (x > y) std::swap(x, y);
    p[a] = Interval{x, y};
  }
  return p;
}

/// Dataset from explicit rows over a schema whose attributes are unit-bucket numerics.
inline maxent::DatasetHandle dataset(const maxent::Schema& schema, const std::vector<std::vector<BucketIndex>>& rows) {
  std::vector<std::vector<BucketIndex>> cols(schema.arity());
  for (const auto& r : rows) {
    for (std::size_t a = 0; a < r.size(); ++a) cols[a].push_back(r[a]);
  }
  return maxent::DatasetHandle(schema, std::move(cols), "rows");
}

inline maxent::Schema unit_schema(const std::vector<std::uint32_t>& sizes) {
  std::vector<maxent::AttributeDomain> attrs;
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    attrs.push_back(maxent::AttributeDomain::numeric(std::string(1, static_cast<char>('A' + a)), 0.0, sizes[a], sizes[a]));
  }
  return maxent::Schema(std::move(attrs));
}

/// Dense MaxEnt fit over the naive expansion by damped Newton ascent on
/// sum_j s_j theta_j - n log sum_t exp(<c_j, t> theta). Statistics with s = 0
/// remove their tuples. Returns the tuple distribution in row-major order.
inline std::vector<double> dense_maxent(const StatisticSet& stats, int max_iter = 200) {
  const auto p = maxent::oracle::naive_expand(stats);
  const auto n = static_cast<double>(stats.cardinality());
  std::vector<bool> alive(p.monomials.size(), true);
  std::vector<maxent::StatId> free;
  for (const auto& st : stats.all()) {
    if (st.s == 0) {
      for (std::size_t t = 0; t < alive.size(); ++t) {
        if (maxent::oracle::contains(p.monomials[t], st.id)) alive[t] = false;
      }
    } else {
      free.push_back(st.id);
    }
  }
  const auto k = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p.monomials.size()), k);
  Eigen::VectorXd s(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    s(j) = static_cast<double>(stats.at(free[static_cast<std::size_t>(j)]).s);
    for (std::size_t t = 0; t < alive.size(); ++t) {
      if (maxent::oracle::contains(p.monomials[t], free[static_cast<std::size_t>(j)])) C(static_cast<Eigen::Index>(t), j) = 1.0;
    }
  }
  auto dist = [&](const Eigen::VectorXd& theta) {
    Eigen::VectorXd logits = C * theta;
    double mx = -INFINITY;
    for (std::size_t t = 0; t < alive.size(); ++t) {
      if (alive[t]) mx = std::max(mx, logits(static_cast<Eigen::Index>(t)));
    }
    Eigen::VectorXd q = Eigen::VectorXd::Zero(logits.size());
    double z = 0;
    for (std::size_t t = 0; t < alive.size(); ++t) {
      if (alive[t]) z += q(static_cast<Eigen::Index>(t)) = std::exp(logits(static_cast<Eigen::Index>(t)) - mx);
    }
    return Eigen::VectorXd(q / z);
  };
  auto objective = [&](const Eigen::VectorXd& theta) {
    Eigen::VectorXd logits = C * theta;
    double mx = -INFINITY;
    for (std::size_t t = 0; t < alive.size(); ++t) {
      if (alive[t]) mx = std::max(mx, logits(static_cast<Eigen::Index>(t)));
    }
    double z = 0;
    for (std::size_t t = 0; t < alive.size(); ++t) {
      if (alive[t]) z += std::exp(logits(static_cast<Eigen::Index>(t)) - mx);
    }
    return s.dot(theta) - n * (mx + std::log(z));
  };
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(k);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd q = dist(theta);
    const Eigen::VectorXd mean = C.transpose() * q;
    const Eigen::VectorXd grad = s - n * mean;
    if (grad.cwiseAbs().maxCoeff() < 1e-11 * n) break;
    Eigen::MatrixXd H = n * (C.transpose() * q.asDiagonal() * C - mean * mean.transpose());
    H.diagonal().array() += 1e-10 * n;
    Eigen::VectorXd step = H.ldlt().solve(grad);
    double t = 1.0;
    const double f0 = objective(theta);
    while (t > 1e-12 && objective(theta + t * step) < f0 + 1e-4 * t * grad.dot(step)) t *= 0.5;
    theta += t * step;
  }
  const Eigen::VectorXd q = dist(theta);
  return std::vector<double>(q.data(), q.data() + q.size());
}

inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double tv = 0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return tv / 2;
}

}  // namespace fixtures
