#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "maxent/error.hpp"
#include "maxent/predicate.hpp"
#include "maxent/statistics.hpp"
#include "maxent/summation.hpp"

namespace maxent {

/// Values of every statistic variable alpha_j, indexed by statistic id.
class VariableStore {
 public:
  VariableStore() = default;
  explicit VariableStore(std::vector<double> values) : values_(std::move(values)) {}

  /// All variables at `init`, except zero-count statistics which are pinned at 0.
  static VariableStore initial(const StatisticSet& stats, double init = 1.0) {
    std::vector<double> v(stats.size(), init);
    for (const auto& st : stats.all()) {
      if (st.s == 0) v[st.id] = 0.0;
    }
    return VariableStore(std::move(v));
  }

  static VariableStore ones(std::size_t k) { return VariableStore(std::vector<double>(k, 1.0)); }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](StatId j) const { return values_[j]; }
  double& operator[](StatId j) { return values_[j]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

/// Variable values for one evaluation: base values, 1D ids forced to zero,
/// and per-id overrides.
struct Assignment {
  std::span<const double> base;
  std::vector<StatId> zero_set;
  std::vector<std::pair<StatId, double>> overrides;

  Assignment() = default;
  Assignment(const VariableStore& store) : base(store.values()) {}  // NOLINT(google-explicit-constructor)
  explicit Assignment(std::span<const double> values) : base(values) {}

  Assignment& zero(StatId j) {
    zero_set.push_back(j);
    return *this;
  }
  Assignment& set(StatId j, double v) {
    overrides.emplace_back(j, v);
    return *this;
  }
};

/// One summand of the factorized polynomial: the variables of `stat_set`
/// enter as (alpha_j - 1); attributes in `attrs` contribute the sum of their
/// 1D variables inside `restricted`, the component's other attributes their
/// full sums.
struct CompressionTerm {
  std::vector<std::size_t> attrs;
  std::vector<StatId> stat_set;
  std::vector<Interval> restricted;      // parallel to attrs
  std::vector<std::uint32_t> sum_slots;  // parallel to attrs, into the component interval table
};

/// Attributes linked by multi-dimensional statistics. Its polynomial is the
/// base product of full sums plus the inclusion-exclusion terms.
struct PolynomialComponent {
  std::vector<std::size_t> attrs;
  std::vector<StatId> stats;
  std::vector<CompressionTerm> terms;
  std::vector<std::pair<std::size_t, Interval>> intervals;  // distinct restricted ranges
};

struct SizeReport {
  std::size_t term_count = 0;
  std::size_t slot_count = 0;    // 1D-variable slots
  std::size_t factor_count = 0;  // slots plus (alpha - 1) factors
  std::size_t attribute_sets = 0;  // B_a
  std::size_t max_coverings = 0;   // R
};

inline constexpr std::size_t kDefaultTermCap = 20'000'000;

/// Factorized partition polynomial over a StatisticSet.
///
/// Statistics split the attributes into connected components. The polynomial
/// is the product of the full 1D sums of untouched attributes and one
/// inclusion-exclusion sum per component; a term exists for every set of the
/// component's statistics whose ranges intersect.
class CompressedPolynomial {
 public:
  CompressedPolynomial() = default;

  CompressedPolynomial(std::vector<std::uint32_t> sizes, std::size_t stat_count,
                       std::vector<PolynomialComponent> components)
      : sizes_(std::move(sizes)), stat_count_(stat_count), components_(std::move(components)) {
    offsets_.assign(sizes_.size() + 1, 0);
    for (std::size_t i = 0; i < sizes_.size(); ++i) offsets_[i + 1] = offsets_[i] + sizes_[i];
    component_of_attr_.assign(sizes_.size(), kFree);
    component_of_stat_.assign(stat_count_, kFree);
    for (std::size_t c = 0; c < components_.size(); ++c) {
      for (auto a : components_[c].attrs) component_of_attr_[a] = c;
      for (auto j : components_[c].stats) component_of_stat_[j] = c;
    }
    for (StatId j = 0; j < offsets_.back(); ++j) component_of_stat_[j] = component_of_attr_[attribute_of(j)];
  }

  static constexpr std::size_t kFree = static_cast<std::size_t>(-1);

  std::size_t arity() const noexcept { return sizes_.size(); }
  std::size_t variable_count() const noexcept { return stat_count_; }
  std::size_t one_d_count() const noexcept { return offsets_.back(); }
  const std::vector<std::uint32_t>& domain_sizes() const noexcept { return sizes_; }
  std::size_t offset(std::size_t attr) const { return offsets_[attr]; }
  const std::vector<PolynomialComponent>& components() const noexcept { return components_; }
  std::size_t component_of_attribute(std::size_t a) const { return component_of_attr_[a]; }
  std::size_t component_of_statistic(StatId j) const { return component_of_stat_[j]; }

  bool is_one_d(StatId j) const noexcept { return j < offsets_.back(); }
  std::size_t attribute_of(StatId j) const {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), static_cast<std::size_t>(j));
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
  }

  /// All terms in a flat list, base first.
  std::size_t term_count() const noexcept {
    std::size_t t = 1;
    for (const auto& c : components_) t += c.terms.size();
    return t;
  }

 private:
  std::vector<std::uint32_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t stat_count_ = 0;
  std::vector<PolynomialComponent> components_;
  std::vector<std::size_t> component_of_attr_;
  std::vector<std::size_t> component_of_stat_;
};

namespace detail {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace detail

/// Builds the factorized polynomial. Terms within a component are ordered by
/// (|S|, lexicographic ids).
inline CompressedPolynomial build_compressed(const StatisticSet& stats, std::size_t term_cap = kDefaultTermCap) {
  const auto m = stats.arity();
  const auto multi = stats.multi_d_ids();

  detail::UnionFind uf(m);
  for (auto id : multi) {
    const auto d = stats.at(id).dims();
    for (std::size_t k = 1; k < d.size(); ++k) uf.unite(d[0], d[k]);
  }
  std::map<std::size_t, std::size_t> root_to_comp;
  std::vector<PolynomialComponent> comps;
  for (auto id : multi) {
    const auto root = uf.find(stats.at(id).dims()[0]);
    auto [it, fresh] = root_to_comp.emplace(root, comps.size());
    if (fresh) comps.emplace_back();
    comps[it->second].stats.push_back(id);
  }
  for (std::size_t a = 0; a < m; ++a) {
    auto it = root_to_comp.find(uf.find(a));
    if (it != root_to_comp.end()) comps[it->second].attrs.push_back(a);
  }

  std::size_t total_terms = 0;
  for (auto& comp : comps) {
    const auto& ids = comp.stats;
    // Depth-first enumeration of every statistic set with a non-empty
    // intersection; ranges are intervals, so pairwise overlap suffices.
    std::vector<StatId> current;
    std::vector<RangePredicate> boxes{all_true(m)};
    auto record = [&] {
      CompressionTerm t;
      t.stat_set = current;
      const auto& box = boxes.back();
      for (std::size_t a = 0; a < m; ++a) {
        if (box[a]) {
          t.attrs.push_back(a);
          t.restricted.push_back(*box[a]);
        }
      }
      comp.terms.push_back(std::move(t));
      if (++total_terms > term_cap) {
        throw PolynomialError("compressed polynomial exceeds " + std::to_string(term_cap) +
                              " terms; reduce the statistic budget");
      }
    };
    auto extend = [&](auto&& self, std::size_t start) -> void {
      for (std::size_t k = start; k < ids.size(); ++k) {
        const auto& st = stats.at(ids[k]);
        const auto& box = boxes.back();
        bool ok = true;
        for (std::size_t a = 0; a < m && ok; ++a) {
          if (st.ranges[a] && box[a]) ok = box[a]->overlaps(*st.ranges[a]);
        }
        if (!ok) continue;
        RangePredicate next = box;
        for (std::size_t a = 0; a < m; ++a) {
          if (st.ranges[a]) next[a] = box[a] ? box[a]->intersect(*st.ranges[a]) : *st.ranges[a];
        }
        current.push_back(ids[k]);
        boxes.push_back(std::move(next));
        record();
        self(self, k + 1);
        boxes.pop_back();
        current.pop_back();
      }
    };
    extend(extend, 0);
    std::stable_sort(comp.terms.begin(), comp.terms.end(), [](const CompressionTerm& a, const CompressionTerm& b) {
      if (a.stat_set.size() != b.stat_set.size()) return a.stat_set.size() < b.stat_set.size();
      return a.stat_set < b.stat_set;
    });
    std::map<std::pair<std::size_t, Interval>, std::uint32_t> slot_of;
    for (auto& t : comp.terms) {
      for (std::size_t k = 0; k < t.attrs.size(); ++k) {
        auto key = std::make_pair(t.attrs[k], t.restricted[k]);
        auto [it, fresh] = slot_of.emplace(key, static_cast<std::uint32_t>(comp.intervals.size()));
        if (fresh) comp.intervals.push_back(key);
        t.sum_slots.push_back(it->second);
      }
    }
  }
  return CompressedPolynomial(stats.domain_sizes(), stats.size(), std::move(comps));
}

/// Slot accounting: per attribute set I, the full sums of the component's
/// attributes outside I are counted once, plus the restricted sums of every
/// statistic set over I.
inline SizeReport size_report(const CompressedPolynomial& poly) {
  SizeReport r;
  r.term_count = poly.term_count();
  for (auto n : poly.domain_sizes()) r.slot_count += n;
  std::size_t delta_factors = 0;
  for (const auto& comp : poly.components()) {
    std::map<std::vector<std::size_t>, std::vector<const CompressionTerm*>> groups;
    for (const auto& t : comp.terms) groups[t.attrs].push_back(&t);
    for (const auto& [attrs, terms] : groups) {
      for (auto a : comp.attrs) {
        if (std::find(attrs.begin(), attrs.end(), a) == attrs.end()) r.slot_count += poly.domain_sizes()[a];
      }
      for (const auto* t : terms) {
        for (const auto& iv : t->restricted) r.slot_count += iv.length();
        delta_factors += t->stat_set.size();
      }
      r.max_coverings = std::max(r.max_coverings, terms.size());
    }
    std::vector<std::vector<std::size_t>> singles;
    for (const auto& t : comp.terms) {
      if (t.stat_set.size() == 1 && std::find(singles.begin(), singles.end(), t.attrs) == singles.end()) {
        singles.push_back(t.attrs);
      }
    }
    r.attribute_sets += singles.size();
  }
  r.factor_count = r.slot_count + delta_factors;
  return r;
}

/// Stateful evaluator over a fixed vector of effective variable values.
/// Component values are cached and only recomputed when one of their
/// variables changes.
class Evaluator {
 public:
  static constexpr double kOverflowGuard = 1e300;

  Evaluator(const CompressedPolynomial& poly, std::vector<double> values)
      : poly_(&poly), values_(std::move(values)) {
    if (values_.size() != poly.variable_count()) {
      throw PolynomialError("assignment has " + std::to_string(values_.size()) + " values, polynomial has " +
                            std::to_string(poly.variable_count()) + " variables");
    }
    full_.resize(poly.arity());
    for (std::size_t a = 0; a < poly.arity(); ++a) full_[a] = full_sum(a);
    const auto& comps = poly.components();
    sums_.resize(comps.size());
    intervals_of_.resize(poly.arity());
    for (std::size_t c = 0; c < comps.size(); ++c) {
      sums_[c].resize(comps[c].intervals.size());
      for (std::size_t k = 0; k < sums_[c].size(); ++k) {
        sums_[c][k] = interval_sum(c, k);
        intervals_of_[comps[c].intervals[k].first].push_back(k);
      }
    }
    terms_of_.resize(poly.variable_count());
    for (std::size_t c = 0; c < comps.size(); ++c) {
      for (std::size_t t = 0; t < comps[c].terms.size(); ++t) {
        for (auto j : comps[c].terms[t].stat_set) terms_of_[j].push_back(t);
      }
    }
    comp_value_.resize(comps.size());
    for (std::size_t c = 0; c < comp_value_.size(); ++c) comp_value_[c] = component_value(c, full_, sums_[c]);
  }

  const std::vector<double>& values() const noexcept { return values_; }
  double value_of(StatId j) const { return values_[j]; }

  /// Current polynomial value.
  double value() const { return combine(full_, comp_value_, kNone, 0.0, kNone, 0.0); }

  /// Polynomial value with alpha_j replaced by v; state is left unchanged.
  double value_with(StatId j, double v) {
    const double saved = values_[j];
    values_[j] = v;
    double result = 0.0;
    const auto c = poly_->component_of_statistic(j);
    if (poly_->is_one_d(j)) {
      const auto a = poly_->attribute_of(j);
      const double f = full_sum(a);
      if (c == CompressedPolynomial::kFree) {
        result = combine(full_, comp_value_, a, f, kNone, 0.0);
      } else {
        auto full = full_;
        full[a] = f;
        auto sums = sums_[c];
        refresh_sums(c, j, sums);
        result = combine(full_, comp_value_, a, f, c, component_value(c, full, sums));
      }
    } else {
      // The component is linear in a multi-dimensional variable: only its terms move.
      double delta = 0.0;
      for (auto t : terms_of_[j]) delta += term_value(c, t, full_, sums_[c]);
      values_[j] = saved;
      for (auto t : terms_of_[j]) delta -= term_value(c, t, full_, sums_[c]);
      result = combine(full_, comp_value_, kNone, 0.0, c, guard(comp_value_[c] + delta));
    }
    values_[j] = saved;
    return result;
  }

  void set(StatId j, double v) {
    values_[j] = v;
    const auto c = poly_->component_of_statistic(j);
    if (poly_->is_one_d(j)) full_[poly_->attribute_of(j)] = full_sum(poly_->attribute_of(j));
    if (c == CompressedPolynomial::kFree) return;
    if (poly_->is_one_d(j)) refresh_sums(c, j, sums_[c]);
    comp_value_[c] = component_value(c, full_, sums_[c]);
  }

  /// True when an intermediate exceeded the overflow guard since construction.
  bool overflowed() const noexcept { return overflow_; }

  /// Polynomial value computed entirely in signed log space.
  LogValue log_value() const {
    const auto& poly = *poly_;
    std::vector<LogValue> full(poly.arity());
    for (std::size_t a = 0; a < poly.arity(); ++a) full[a] = log_range(a, 0, poly.domain_sizes()[a] - 1);
    LogValue result{1, 0.0};
    for (std::size_t a = 0; a < poly.arity(); ++a) {
      const auto c = poly.component_of_attribute(a);
      if (c == CompressedPolynomial::kFree) {
        result = result * full[a];
      } else if (poly.components()[c].attrs.front() == a) {
        result = result * log_component(c, full);
      }
    }
    return result;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  double full_sum(std::size_t a) const {
    const auto off = poly_->offset(a);
    return guard(pairwise_sum(std::span<const double>(values_).subspan(off, poly_->domain_sizes()[a])));
  }

  double guard(double x) const {
    if (!std::isfinite(x) || std::abs(x) > kOverflowGuard) overflow_ = true;
    return x;
  }

  double interval_sum(std::size_t c, std::size_t k) const {
    const auto& [a, iv] = poly_->components()[c].intervals[k];
    return pairwise_sum(std::span<const double>(values_).subspan(poly_->offset(a) + iv.lo, iv.length()));
  }

  // Re-sums the restricted intervals of component c that contain 1D variable j.
  void refresh_sums(std::size_t c, StatId j, std::vector<double>& sums) const {
    const auto a = poly_->attribute_of(j);
    const auto v = static_cast<BucketIndex>(j - poly_->offset(a));
    for (auto k : intervals_of_[a]) {
      const auto& iv = poly_->components()[c].intervals[k].second;
      if (iv.lo <= v && v <= iv.hi) sums[k] = interval_sum(c, k);
    }
  }

  double component_value(std::size_t c, const std::vector<double>& full, const std::vector<double>& sums) const {
    const auto& comp = poly_->components()[c];
    std::vector<double> terms;
    terms.reserve(comp.terms.size() + 1);
    double base = 1.0;
    for (auto a : comp.attrs) base *= full[a];
    terms.push_back(guard(base));
    for (std::size_t t = 0; t < comp.terms.size(); ++t) terms.push_back(guard(term_value(c, t, full, sums)));
    return guard(pairwise_sum(terms));
  }

  double term_value(std::size_t c, std::size_t index, const std::vector<double>& full,
                    const std::vector<double>& sums) const {
    const auto& comp = poly_->components()[c];
    const auto& t = comp.terms[index];
    double v = 1.0;
    std::size_t k = 0;
    for (auto a : comp.attrs) {
      if (k < t.attrs.size() && t.attrs[k] == a) {
        v *= sums[t.sum_slots[k++]];
      } else {
        v *= full[a];
      }
    }
    for (auto j : t.stat_set) v *= values_[j] - 1.0;
    return v;
  }

  double combine(const std::vector<double>& full, const std::vector<double>& comps, std::size_t swap_attr,
                 double swap_full, std::size_t swap_comp, double swap_value) const {
    double result = 1.0;
    for (std::size_t a = 0; a < poly_->arity(); ++a) {
      const auto c = poly_->component_of_attribute(a);
      if (c == CompressedPolynomial::kFree) {
        result *= a == swap_attr ? swap_full : full[a];
      } else if (poly_->components()[c].attrs.front() == a) {
        result *= c == swap_comp ? swap_value : comps[c];
      }
    }
    return guard(result);
  }

  LogValue log_range(std::size_t a, BucketIndex lo, BucketIndex hi) const {
    std::vector<double> logs;
    const auto off = poly_->offset(a);
    for (auto v = lo; v <= hi; ++v) logs.push_back(std::log(values_[off + v]));
    const double l = log_sum_exp(logs);
    return std::isfinite(l) ? LogValue{1, l} : LogValue{};
  }

  LogValue log_component(std::size_t c, const std::vector<LogValue>& full) const {
    const auto& comp = poly_->components()[c];
    std::vector<LogValue> terms;
    LogValue base{1, 0.0};
    for (auto a : comp.attrs) base = base * full[a];
    terms.push_back(base);
    for (const auto& t : comp.terms) {
      LogValue v{1, 0.0};
      std::size_t k = 0;
      for (auto a : comp.attrs) {
        if (k < t.attrs.size() && t.attrs[k] == a) {
          v = v * log_range(a, t.restricted[k].lo, t.restricted[k].hi);
          ++k;
        } else {
          v = v * full[a];
        }
      }
      for (auto j : t.stat_set) v = v * LogValue::of(values_[j] - 1.0);
      terms.push_back(v);
    }
    return log_signed_sum(terms);
  }

  const CompressedPolynomial* poly_;
  std::vector<double> values_;
  std::vector<double> full_;
  std::vector<double> comp_value_;
  std::vector<std::vector<double>> sums_;               // per component, per restricted interval
  std::vector<std::vector<std::size_t>> intervals_of_;  // per attribute, interval indices in its component
  std::vector<std::vector<std::size_t>> terms_of_;      // per variable, terms whose stat_set holds it
  mutable bool overflow_ = false;
};

/// Resolves an Assignment to one value per variable.
inline std::vector<double> effective_values(const CompressedPolynomial& poly, const Assignment& assign) {
  if (assign.base.size() != poly.variable_count()) {
    throw PolynomialError("assignment covers " + std::to_string(assign.base.size()) + " of " +
                          std::to_string(poly.variable_count()) + " variables");
  }
  std::vector<double> v(assign.base.begin(), assign.base.end());
  for (auto j : assign.zero_set) {
    if (j >= v.size()) throw PolynomialError("zero-set id " + std::to_string(j) + " out of range");
    v[j] = 0.0;
  }
  for (const auto& [j, x] : assign.overrides) {
    if (j >= v.size()) throw PolynomialError("override id " + std::to_string(j) + " out of range");
    if (std::find(assign.zero_set.begin(), assign.zero_set.end(), j) != assign.zero_set.end()) {
      throw PolynomialError("variable " + std::to_string(j) + " is both zeroed and overridden");
    }
    v[j] = x;
  }
  return v;
}

/// Exact value of the polynomial; falls back to log space when an
/// intermediate exceeds the overflow guard (the result may then be inf).
inline double evaluate(const CompressedPolynomial& poly, const Assignment& assign) {
  Evaluator ev(poly, effective_values(poly, assign));
  const double v = ev.value();
  if (!ev.overflowed()) return v;
  return ev.log_value().value();
}

inline LogValue evaluate_log(const CompressedPolynomial& poly, const Assignment& assign) {
  return Evaluator(poly, effective_values(poly, assign)).log_value();
}

/// alpha_j * dP/dalpha_j for a 1D variable: P with the other values of the
/// same attribute set to zero.
inline double derivative_weighted(const CompressedPolynomial& poly, const Assignment& assign, StatId j) {
  if (!poly.is_one_d(j)) throw PolynomialError("statistic " + std::to_string(j) + " is not one-dimensional");
  auto v = effective_values(poly, assign);
  const auto a = poly.attribute_of(j);
  for (std::size_t k = poly.offset(a); k < poly.offset(a) + poly.domain_sizes()[a]; ++k) {
    if (k != j) v[k] = 0.0;
  }
  Evaluator ev(poly, std::move(v));
  const double r = ev.value();
  return ev.overflowed() ? ev.log_value().value() : r;
}

/// dP/dalpha_j for any variable, using multilinearity: P[alpha_j=1] - P[alpha_j=0].
inline double derivative_general(const CompressedPolynomial& poly, const Assignment& assign, StatId j) {
  if (j >= poly.variable_count()) throw PolynomialError("unknown variable " + std::to_string(j));
  Evaluator ev(poly, effective_values(poly, assign));
  return ev.value_with(j, 1.0) - ev.value_with(j, 0.0);
}

}  // namespace maxent
