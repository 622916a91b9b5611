#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "maxent/error.hpp"
#include "maxent/predicate.hpp"
#include "maxent/statistics.hpp"
#include "maxent/summation.hpp"

// Desk-scale ground truth: one monomial per possible tuple, and direct
// enumeration of ordered instances. Nothing here touches the factorized form.
namespace maxent::oracle {

inline constexpr std::uint64_t kDefaultTupleCap = 100'000;
inline constexpr std::uint64_t kDefaultWorldCap = 1'000'000;

struct Monomial {
  std::vector<BucketIndex> tuple;
  std::vector<StatId> vars;  // ascending; exactly one 1D id per attribute
};

struct NaivePolynomial {
  std::vector<std::uint32_t> sizes;
  std::vector<Monomial> monomials;
};

inline std::vector<BucketIndex> tuple_at(const std::vector<std::uint32_t>& sizes, std::uint64_t idx) {
  std::vector<BucketIndex> t(sizes.size());
  for (std::size_t i = sizes.size(); i-- > 0;) {
    t[i] = static_cast<BucketIndex>(idx % sizes[i]);
    idx /= sizes[i];
  }
  return t;
}

inline NaivePolynomial naive_expand(const StatisticSet& stats, std::uint64_t cap = kDefaultTupleCap) {
  NaivePolynomial p;
  p.sizes = stats.domain_sizes();
  std::uint64_t d = 1;
  for (auto n : p.sizes) {
    d *= n;
    if (d > cap) throw Error("naive expansion exceeds " + std::to_string(cap) + " tuples");
  }
  p.monomials.reserve(d);
  for (std::uint64_t idx = 0; idx < d; ++idx) {
    Monomial mono;
    mono.tuple = tuple_at(p.sizes, idx);
    for (const auto& st : stats.all()) {
      if (satisfies(st.ranges, mono.tuple)) mono.vars.push_back(st.id);
    }
    p.monomials.push_back(std::move(mono));
  }
  return p;
}

inline double monomial_value(const Monomial& m, std::span<const double> alpha) {
  double v = 1.0;
  for (auto j : m.vars) v *= alpha[j];
  return v;
}

inline bool contains(const Monomial& m, StatId j) { return std::binary_search(m.vars.begin(), m.vars.end(), j); }

inline double evaluate(const NaivePolynomial& p, std::span<const double> alpha) {
  std::vector<double> terms;
  terms.reserve(p.monomials.size());
  for (const auto& m : p.monomials) terms.push_back(monomial_value(m, alpha));
  return pairwise_sum(terms);
}

/// Symbolic dP/dalpha_j: sum of the monomials containing j, with j removed.
inline double derivative(const NaivePolynomial& p, std::span<const double> alpha, StatId j) {
  std::vector<double> terms;
  for (const auto& m : p.monomials) {
    if (!contains(m, j)) continue;
    double v = 1.0;
    for (auto k : m.vars) {
      if (k != j) v *= alpha[k];
    }
    terms.push_back(v);
  }
  return pairwise_sum(terms);
}

/// alpha_{j1}...alpha_{jl} d^l P / d alpha_{j1}...d alpha_{jl} for distinct ids:
/// the monomials that contain every listed variable.
inline double iterated_derivative(const NaivePolynomial& p, std::span<const double> alpha,
                                  const std::vector<StatId>& ids) {
  std::vector<double> terms;
  for (const auto& m : p.monomials) {
    bool all = true;
    for (auto j : ids) all = all && contains(m, j);
    if (all) terms.push_back(monomial_value(m, alpha));
  }
  return pairwise_sum(terms);
}

/// dP_q/dbeta at beta = 1, where P_q tags each monomial satisfying the query
/// with a fresh variable beta.
inline double extended_beta_derivative(const NaivePolynomial& p, std::span<const double> alpha,
                                       const RangePredicate& query) {
  std::vector<double> terms;
  for (const auto& m : p.monomials) {
    const double beta_exponent = satisfies(query, m.tuple) ? 1.0 : 0.0;
    if (beta_exponent > 0) terms.push_back(monomial_value(m, alpha));
  }
  return pairwise_sum(terms);
}

/// Naive-path expected answer (n / P) * dP_q/dbeta.
inline double naive_expectation(const NaivePolynomial& p, std::span<const double> alpha, const RangePredicate& query,
                                std::int64_t n) {
  return static_cast<double>(n) / evaluate(p, alpha) * extended_beta_derivative(p, alpha, query);
}

/// Calls visit(instance) for every ordered n-tuple of tuple indices.
template <typename Visit>
void for_each_world(std::uint64_t d, std::int64_t n, std::uint64_t cap, Visit&& visit) {
  double worlds = std::pow(static_cast<double>(d), static_cast<double>(n));
  if (worlds > static_cast<double>(cap)) throw Error("world enumeration exceeds " + std::to_string(cap) + " instances");
  std::vector<std::uint64_t> inst(static_cast<std::size_t>(n), 0);
  while (true) {
    visit(static_cast<const std::vector<std::uint64_t>&>(inst));
    std::size_t k = inst.size();
    while (k > 0) {
      --k;
      if (++inst[k] < d) break;
      inst[k] = 0;
      if (k == 0) return;
    }
    if (inst.empty()) return;
  }
}

/// Unnormalized weight prod_j alpha_j^<c_j, I> of an instance given as tuple indices.
inline double instance_weight(const NaivePolynomial& p, std::span<const double> alpha,
                              const std::vector<std::uint64_t>& instance) {
  double w = 1.0;
  for (auto t : instance) w *= monomial_value(p.monomials[t], alpha);
  return w;
}

/// Pr(I) = prod_j alpha_j^<c_j, I> / P^n.
inline double instance_probability(const StatisticSet& stats, std::span<const double> alpha,
                                   const std::vector<std::vector<BucketIndex>>& instance) {
  const auto p = naive_expand(stats);
  std::vector<std::uint64_t> idx;
  for (const auto& t : instance) {
    std::uint64_t k = 0;
    for (std::size_t i = 0; i < t.size(); ++i) k = k * p.sizes[i] + t[i];
    idx.push_back(k);
  }
  return instance_weight(p, alpha, idx) / std::pow(evaluate(p, alpha), static_cast<double>(instance.size()));
}

/// E[|sigma_query(I)|] by summing over every ordered instance of size n.
inline double brute_expectation(const StatisticSet& stats, std::span<const double> alpha, const RangePredicate& query,
                                std::int64_t n, std::uint64_t cap = kDefaultWorldCap) {
  const auto p = naive_expand(stats);
  std::vector<bool> hit(p.monomials.size());
  for (std::size_t t = 0; t < hit.size(); ++t) hit[t] = satisfies(query, p.monomials[t].tuple);
  double z = 0.0, weighted = 0.0;
  for_each_world(p.monomials.size(), n, cap, [&](const std::vector<std::uint64_t>& inst) {
    const double w = instance_weight(p, alpha, inst);
    std::int64_t count = 0;
    for (auto t : inst) count += hit[t] ? 1 : 0;
    z += w;
    weighted += w * static_cast<double>(count);
  });
  return weighted / z;
}

/// Sum of instance weights over all ordered instances (the partition function).
inline double partition_function(const StatisticSet& stats, std::span<const double> alpha, std::int64_t n,
                                 std::uint64_t cap = kDefaultWorldCap) {
  const auto p = naive_expand(stats);
  double z = 0.0;
  for_each_world(p.monomials.size(), n, cap,
                 [&](const std::vector<std::uint64_t>& inst) { z += instance_weight(p, alpha, inst); });
  return z;
}

/// Checks Z == P^n within `rel_tol`.
inline bool verify_partition(const StatisticSet& stats, std::span<const double> alpha, std::int64_t n,
                             double rel_tol = 1e-9) {
  const double z = partition_function(stats, alpha, n);
  const double pn = std::pow(evaluate(naive_expand(stats), alpha), static_cast<double>(n));
  return std::abs(z - pn) <= rel_tol * std::abs(pn);
}

/// Per-tuple probabilities monomial / P, in row-major tuple order.
inline std::vector<double> tuple_distribution(const NaivePolynomial& p, std::span<const double> alpha) {
  const double total = evaluate(p, alpha);
  std::vector<double> dist;
  for (const auto& m : p.monomials) dist.push_back(monomial_value(m, alpha) / total);
  return dist;
}

}  // namespace maxent::oracle
