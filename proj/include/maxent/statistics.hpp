#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "maxent/dataset.hpp"
#include "maxent/error.hpp"
#include "maxent/predicate.hpp"

namespace maxent {

/// A conjunctive range predicate with its observed count.
struct Statistic {
  StatId id = 0;
  RangePredicate ranges;
  std::int64_t s = 0;

  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      if (ranges[i]) d.push_back(i);
    }
    return d;
  }
};

using AttributePair = std::pair<std::size_t, std::size_t>;

enum class Heuristic { Large, Zero, Composite };
enum class PairStrategy { Correlation, Cover };

inline std::string to_string(Heuristic h) {
  switch (h) {
    case Heuristic::Large: return "large";
    case Heuristic::Zero: return "zero";
    case Heuristic::Composite: return "composite";
  }
  return "?";
}

inline std::string to_string(PairStrategy s) { return s == PairStrategy::Cover ? "cover" : "correlation"; }

inline Heuristic parse_heuristic(const std::string& s) {
  if (s == "large") return Heuristic::Large;
  if (s == "zero") return Heuristic::Zero;
  if (s == "composite") return Heuristic::Composite;
  throw StatisticsError("unknown heuristic '" + s + "'");
}

inline PairStrategy parse_strategy(const std::string& s) {
  if (s == "cover") return PairStrategy::Cover;
  if (s == "correlation") return PairStrategy::Correlation;
  throw StatisticsError("unknown pair strategy '" + s + "'");
}

/// Complete 1D statistics plus multi-dimensional range statistics.
///
/// Ids are dense: 1D statistics first, ordered by (attribute, value), so the
/// id of value v of attribute i is offset(i) + v; multi-dimensional statistics
/// follow in the order given.
class StatisticSet {
 public:
  StatisticSet() = default;

  StatisticSet(std::vector<std::uint32_t> domain_sizes, std::int64_t n, std::vector<Statistic> stats)
      : sizes_(std::move(domain_sizes)), n_(n), stats_(std::move(stats)) {
    offsets_.resize(sizes_.size() + 1, 0);
    for (std::size_t i = 0; i < sizes_.size(); ++i) offsets_[i + 1] = offsets_[i] + sizes_[i];
    validate();
  }

  std::size_t arity() const noexcept { return sizes_.size(); }
  const std::vector<std::uint32_t>& domain_sizes() const noexcept { return sizes_; }
  std::int64_t cardinality() const noexcept { return n_; }
  std::size_t size() const noexcept { return stats_.size(); }
  std::size_t one_d_count() const noexcept { return offsets_.back(); }
  const std::vector<Statistic>& all() const noexcept { return stats_; }
  const Statistic& at(StatId id) const { return stats_.at(id); }

  StatId one_d_id(std::size_t attr, BucketIndex v) const { return static_cast<StatId>(offsets_[attr] + v); }
  std::size_t offset(std::size_t attr) const { return offsets_[attr]; }
  bool is_one_d(StatId id) const noexcept { return id < offsets_.back(); }

  /// Attribute of a 1D statistic.
  std::size_t attribute_of(StatId id) const {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), static_cast<std::size_t>(id));
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
  }

  std::vector<StatId> multi_d_ids() const {
    std::vector<StatId> ids;
    for (auto id = static_cast<StatId>(one_d_count()); id < stats_.size(); ++id) ids.push_back(id);
    return ids;
  }

  /// Distinct attribute sets of the multi-dimensional statistics, in first-seen order.
  std::vector<std::vector<std::size_t>> attribute_sets() const {
    std::vector<std::vector<std::size_t>> sets;
    for (auto id : multi_d_ids()) {
      auto d = stats_[id].dims();
      if (std::find(sets.begin(), sets.end(), d) == sets.end()) sets.push_back(std::move(d));
    }
    return sets;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& st : stats_) {
      nlohmann::json ranges = nlohmann::json::array();
      for (const auto& r : st.ranges) ranges.push_back(r ? nlohmann::json::array({r->lo, r->hi}) : nlohmann::json());
      arr.push_back({{"id", st.id}, {"ranges", ranges}, {"s", st.s}});
    }
    return arr;
  }

  static StatisticSet from_json(const nlohmann::json& arr, std::vector<std::uint32_t> domain_sizes, std::int64_t n) {
    std::vector<Statistic> stats;
    try {
      for (const auto& j : arr) {
        Statistic st;
        st.id = j.at("id").get<StatId>();
        st.s = j.at("s").get<std::int64_t>();
        for (const auto& r : j.at("ranges")) {
          if (r.is_null()) {
            st.ranges.emplace_back();
          } else {
            st.ranges.emplace_back(Interval{r.at(0).get<BucketIndex>(), r.at(1).get<BucketIndex>()});
          }
        }
        stats.push_back(std::move(st));
      }
    } catch (const nlohmann::json::exception& e) {
      throw StatisticsError(std::string("malformed statistics array: ") + e.what());
    }
    return StatisticSet(std::move(domain_sizes), n, std::move(stats));
  }

 private:
  void validate() const {
    const auto m = sizes_.size();
    if (stats_.size() < one_d_count()) throw StatisticsError("missing 1D statistics");
    for (std::size_t k = 0; k < stats_.size(); ++k) {
      const auto& st = stats_[k];
      if (st.id != k) throw StatisticsError("statistic ids must be dense and ordered");
      if (st.ranges.size() != m) throw StatisticsError("statistic " + std::to_string(k) + " has wrong arity");
      if (st.s < 0 || st.s > n_) throw StatisticsError("statistic " + std::to_string(k) + " has s outside [0, n]");
      for (std::size_t i = 0; i < m; ++i) {
        if (st.ranges[i] && (st.ranges[i]->lo > st.ranges[i]->hi || st.ranges[i]->hi >= sizes_[i])) {
          throw StatisticsError("statistic " + std::to_string(k) + " range outside the domain");
        }
      }
      const auto d = st.dims();
      if (k < one_d_count()) {
        const auto attr = attribute_of(static_cast<StatId>(k));
        const auto v = static_cast<BucketIndex>(k - offsets_[attr]);
        if (d.size() != 1 || d[0] != attr || st.ranges[attr] != Interval{v, v}) {
          throw StatisticsError("statistic " + std::to_string(k) + " must be the point statistic for value " +
                                std::to_string(v) + " of attribute " + std::to_string(attr));
        }
      } else if (d.size() < 2) {
        throw StatisticsError("statistic " + std::to_string(k) + " must span at least two attributes");
      }
    }
    // Statistics over the same attribute set must be pairwise disjoint.
    std::map<std::vector<std::size_t>, std::vector<StatId>> groups;
    for (auto id : multi_d_ids()) groups[stats_[id].dims()].push_back(id);
    for (const auto& [attrs, ids] : groups) {
      for (std::size_t a = 0; a < ids.size(); ++a) {
        for (std::size_t b = a + 1; b < ids.size(); ++b) {
          bool overlap = true;
          for (auto i : attrs) overlap = overlap && stats_[ids[a]].ranges[i]->overlaps(*stats_[ids[b]].ranges[i]);
          if (overlap) {
            throw StatisticsError("statistics " + std::to_string(ids[a]) + " and " + std::to_string(ids[b]) +
                                  " overlap on the same attribute set");
          }
        }
      }
    }
  }

  std::vector<std::uint32_t> sizes_;
  std::int64_t n_ = 0;
  std::vector<Statistic> stats_;
  std::vector<std::size_t> offsets_{0};
};

struct PairScore {
  AttributePair pair;
  double chi2 = 0.0;
};

/// Pearson chi-squared statistic of a dense contingency table, no Yates
/// correction. Rows/columns with zero marginals are skipped; fewer than two
/// non-empty rows or columns scores 0.
inline double chi_squared(const std::vector<std::int64_t>& table, std::size_t rows, std::size_t cols) {
  std::vector<double> rsum(rows, 0.0), csum(cols, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = static_cast<double>(table[r * cols + c]);
      rsum[r] += v;
      csum[c] += v;
      total += v;
    }
  }
  const auto nonzero = [](const std::vector<double>& v) { return std::count_if(v.begin(), v.end(), [](double x) { return x > 0; }); };
  if (total <= 0 || nonzero(rsum) < 2 || nonzero(csum) < 2) return 0.0;
  double chi2 = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (rsum[r] == 0) continue;
    for (std::size_t c = 0; c < cols; ++c) {
      if (csum[c] == 0) continue;
      const double expected = rsum[r] * csum[c] / total;
      const double diff = static_cast<double>(table[r * cols + c]) - expected;
      chi2 += diff * diff / expected;
    }
  }
  return chi2;
}

/// Chi-squared score for every unordered attribute pair, highest first.
/// Pairs touching an excluded attribute are omitted.
inline std::vector<PairScore> score_pairs(const DatasetHandle& data, const std::vector<std::size_t>& exclude = {}) {
  const auto m = data.schema().arity();
  std::vector<PairScore> scores;
  auto excluded = [&](std::size_t a) { return std::find(exclude.begin(), exclude.end(), a) != exclude.end(); };
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      if (excluded(a) || excluded(b)) continue;
      const auto table = data.contingency(a, b);
      scores.push_back({{a, b}, chi_squared(table, data.schema().attribute(a).size(), data.schema().attribute(b).size())});
    }
  }
  std::stable_sort(scores.begin(), scores.end(), [](const PairScore& x, const PairScore& y) { return x.chi2 > y.chi2; });
  return scores;
}

namespace detail {

inline std::size_t covered_attributes(const std::vector<AttributePair>& pairs) {
  std::vector<std::size_t> attrs;
  for (const auto& [a, b] : pairs) {
    attrs.push_back(a);
    attrs.push_back(b);
  }
  std::sort(attrs.begin(), attrs.end());
  return static_cast<std::size_t>(std::unique(attrs.begin(), attrs.end()) - attrs.begin());
}

}  // namespace detail

/// Chooses up to `budget` attribute pairs from scores sorted descending.
///
/// Correlation: walk pairs by score, keep a pair when at least one of its
/// attributes is not in any previously kept pair.
///
/// Cover: among all budget-sized subsets, maximize the number of covered
/// attributes; ties go to the subset whose ascending rank vector is
/// lexicographically best (the weakest chosen pair is as strong as possible).
/// Falls back to a greedy cover walk when the subset count is too large.
inline std::vector<AttributePair> select_pairs(const std::vector<PairScore>& scores, std::size_t budget,
                                               PairStrategy strategy) {
  if (budget == 0) throw StatisticsError("pair budget must be at least 1");
  std::vector<AttributePair> chosen;
  if (strategy == PairStrategy::Correlation) {
    std::vector<bool> used;
    for (const auto& ps : scores) {
      if (chosen.size() == budget) break;
      const auto [a, b] = ps.pair;
      used.resize(std::max({used.size(), a + 1, b + 1}), false);
      if (chosen.empty() || !used[a] || !used[b]) {
        chosen.push_back(ps.pair);
        used[a] = used[b] = true;
      }
    }
    return chosen;
  }

  const std::size_t p = scores.size();
  const std::size_t k = std::min(budget, p);
  if (k == 0) return chosen;
  // Count subsets, bailing out above the exhaustive-search cap.
  constexpr double kSubsetCap = 2e6;
  double subsets = 1.0;
  for (std::size_t i = 0; i < k; ++i) subsets = subsets * static_cast<double>(p - i) / static_cast<double>(i + 1);

  if (subsets <= kSubsetCap) {
    std::vector<std::size_t> idx(k), best;
    std::iota(idx.begin(), idx.end(), 0);
    std::size_t best_cover = 0;
    auto advance = [&] {
      for (std::size_t i = k; i-- > 0;) {
        if (idx[i] != i + p - k) {
          ++idx[i];
          for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
          return true;
        }
      }
      return false;
    };
    do {
      std::vector<AttributePair> cand;
      for (auto i : idx) cand.push_back(scores[i].pair);
      const auto cover = detail::covered_attributes(cand);
      // idx is ascending in rank; compare weakest-first rank vectors.
      bool better = best.empty() || cover > best_cover;
      if (!better && cover == best_cover) {
        better = std::lexicographical_compare(idx.rbegin(), idx.rend(), best.rbegin(), best.rend());
      }
      if (better) {
        best = idx;
        best_cover = cover;
      }
    } while (advance());
    for (auto i : best) chosen.push_back(scores[i].pair);
    return chosen;
  }

  std::vector<bool> taken(p, false);
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best_i = p, best_gain = 0;
    for (std::size_t i = 0; i < p; ++i) {
      if (taken[i]) continue;
      auto cand = chosen;
      cand.push_back(scores[i].pair);
      const auto gain = detail::covered_attributes(cand);
      if (best_i == p || gain > best_gain) {
        best_i = i;
        best_gain = gain;
      }
    }
    taken[best_i] = true;
    chosen.push_back(scores[best_i].pair);
  }
  return chosen;
}

/// One point statistic per attribute value, with exact counts.
inline std::vector<Statistic> build_1d(const DatasetHandle& data) {
  const auto& schema = data.schema();
  std::vector<Statistic> stats;
  for (std::size_t i = 0; i < schema.arity(); ++i) {
    const auto& freq = data.frequencies(i);
    for (BucketIndex v = 0; v < schema.attribute(i).size(); ++v) {
      Statistic st;
      st.id = static_cast<StatId>(stats.size());
      st.ranges = all_true(schema.arity());
      st.ranges[i] = Interval{v, v};
      st.s = freq[v];
      stats.push_back(std::move(st));
    }
  }
  return stats;
}

/// Rectangle [r0, r1] x [c0, c1] of a 2D grid, inclusive.
struct Rect {
  Interval rows;
  Interval cols;
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Dense 2D count grid with prefix sums of counts and squared counts.
class CountGrid {
 public:
  CountGrid(std::vector<std::int64_t> counts, std::size_t rows, std::size_t cols)
      : counts_(std::move(counts)), rows_(rows), cols_(cols), sum_((rows + 1) * (cols + 1), 0), sq_(sum_.size(), 0) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const auto v = counts_[r * cols + c];
        at(sum_, r + 1, c + 1) = v + at(sum_, r, c + 1) + at(sum_, r + 1, c) - at(sum_, r, c);
        at(sq_, r + 1, c + 1) = static_cast<__int128>(v) * v + at(sq_, r, c + 1) + at(sq_, r + 1, c) - at(sq_, r, c);
      }
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::int64_t cell(std::size_t r, std::size_t c) const { return counts_[r * cols_ + c]; }

  std::int64_t sum(const Rect& q) const { return static_cast<std::int64_t>(box(sum_, q)); }

  /// Sum of squared deviations from the rectangle mean.
  double sse(const Rect& q) const {
    const auto cells = static_cast<__int128>(q.rows.length()) * q.cols.length();
    const __int128 s = box(sum_, q);
    const __int128 scaled = cells * box(sq_, q) - s * s;  // cells * SSE, exact
    return static_cast<double>(scaled) / static_cast<double>(cells);
  }

 private:
  template <typename T>
  T& at(std::vector<T>& v, std::size_t r, std::size_t c) {
    return v[r * (cols_ + 1) + c];
  }
  template <typename T>
  const T& at(const std::vector<T>& v, std::size_t r, std::size_t c) const {
    return v[r * (cols_ + 1) + c];
  }
  template <typename T>
  __int128 box(const std::vector<T>& v, const Rect& q) const {
    return static_cast<__int128>(at(v, q.rows.hi + 1, q.cols.hi + 1)) - at(v, q.rows.lo, q.cols.hi + 1) -
           at(v, q.rows.hi + 1, q.cols.lo) + at(v, q.rows.lo, q.cols.lo);
  }

  std::vector<std::int64_t> counts_;
  std::size_t rows_, cols_;
  std::vector<std::int64_t> sum_;
  std::vector<__int128> sq_;
};

/// Best split boundary of `rect` along `dim` (0 = rows, 1 = cols). Returns the
/// last index kept on the low side. Equal costs everywhere fall back to the
/// median boundary; otherwise the lowest-index minimum wins.
inline BucketIndex best_split(const CountGrid& grid, const Rect& rect, int dim) {
  const Interval span = dim == 0 ? rect.rows : rect.cols;
  double best_cost = 0.0;
  BucketIndex best = span.lo;
  bool all_equal = true;
  double first_cost = 0.0;
  for (BucketIndex b = span.lo; b < span.hi; ++b) {
    Rect left = rect, right = rect;
    if (dim == 0) {
      left.rows = {span.lo, b};
      right.rows = {b + 1, span.hi};
    } else {
      left.cols = {span.lo, b};
      right.cols = {b + 1, span.hi};
    }
    const double cost = grid.sse(left) + grid.sse(right);
    const double tol = 1e-9 * std::max(1.0, std::abs(cost));
    if (b == span.lo) {
      best_cost = first_cost = cost;
      best = b;
      continue;
    }
    if (std::abs(cost - first_cost) > tol) all_equal = false;
    if (cost < best_cost - tol) {
      best_cost = cost;
      best = b;
    }
  }
  if (all_equal) best = span.lo + (span.length() / 2) - 1;
  return best;
}

/// KD-tree partition of the full grid into `budget` disjoint rectangles.
///
/// Leaves are split one at a time, always the splittable leaf with the largest
/// within-leaf SSE (earliest leaf on ties). A leaf's split dimension alternates
/// with depth starting at rows; a leaf of extent 1 along that dimension splits
/// the other one. Returns leaves in creation order, left child replacing its
/// parent.
inline std::vector<Rect> kd_partition(const CountGrid& grid, std::size_t budget) {
  struct Leaf {
    Rect rect;
    int depth;
  };
  std::vector<Leaf> leaves{{Rect{{0, static_cast<BucketIndex>(grid.rows() - 1)}, {0, static_cast<BucketIndex>(grid.cols() - 1)}}, 0}};
  budget = std::max<std::size_t>(1, std::min(budget, grid.rows() * grid.cols()));
  while (leaves.size() < budget) {
    std::size_t pick = leaves.size();
    double pick_sse = -1.0;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      const auto& r = leaves[i].rect;
      if (r.rows.length() == 1 && r.cols.length() == 1) continue;
      const double e = grid.sse(r);
      if (e > pick_sse) {
        pick = i;
        pick_sse = e;
      }
    }
    if (pick == leaves.size()) break;  // every leaf is a single cell
    Leaf leaf = leaves[pick];
    int dim = leaf.depth % 2;
    if ((dim == 0 ? leaf.rect.rows : leaf.rect.cols).length() == 1) dim = 1 - dim;
    const auto b = best_split(grid, leaf.rect, dim);
    Leaf left = leaf, right = leaf;
    left.depth = right.depth = leaf.depth + 1;
    if (dim == 0) {
      left.rect.rows.hi = b;
      right.rect.rows.lo = b + 1;
    } else {
      left.rect.cols.hi = b;
      right.rect.cols.lo = b + 1;
    }
    leaves[pick] = left;
    leaves.insert(leaves.begin() + static_cast<std::ptrdiff_t>(pick) + 1, right);
  }
  std::vector<Rect> rects;
  rects.reserve(leaves.size());
  for (const auto& l : leaves) rects.push_back(l.rect);
  return rects;
}

namespace detail {

struct CellRank {
  std::int64_t count;
  std::size_t index;
};

inline std::vector<CellRank> cells_by_count_desc(const std::vector<std::int64_t>& table) {
  std::vector<CellRank> cells(table.size());
  for (std::size_t k = 0; k < table.size(); ++k) cells[k] = {table[k], k};
  std::stable_sort(cells.begin(), cells.end(), [](const CellRank& a, const CellRank& b) { return a.count > b.count; });
  return cells;
}

inline Statistic rect_statistic(std::size_t m, const AttributePair& pair, const Rect& r, std::int64_t s) {
  Statistic st;
  st.ranges = all_true(m);
  st.ranges[pair.first] = r.rows;
  st.ranges[pair.second] = r.cols;
  st.s = s;
  return st;
}

inline Statistic cell_statistic(std::size_t m, const AttributePair& pair, std::size_t cols, std::size_t index,
                                std::int64_t s) {
  const auto r = static_cast<BucketIndex>(index / cols), c = static_cast<BucketIndex>(index % cols);
  return rect_statistic(m, pair, Rect{{r, r}, {c, c}}, s);
}

}  // namespace detail

// The three heuristics return statistics without ids; the caller numbers them.

/// The B_s most populated single cells of the pair, ties by (row, col).
inline std::vector<Statistic> heuristic_large(const DatasetHandle& data, AttributePair pair, std::size_t budget) {
  const auto cols = data.schema().attribute(pair.second).size();
  const auto table = data.contingency(pair.first, pair.second);
  const auto ranked = detail::cells_by_count_desc(table);
  std::vector<Statistic> out;
  for (std::size_t k = 0; k < std::min(budget, ranked.size()); ++k) {
    out.push_back(detail::cell_statistic(data.schema().arity(), pair, cols, ranked[k].index, ranked[k].count));
  }
  return out;
}

/// Empty cells in index order; when fewer than B_s exist, the remaining
/// cells are taken by descending count.
inline std::vector<Statistic> heuristic_zero(const DatasetHandle& data, AttributePair pair, std::size_t budget) {
  const auto cols = data.schema().attribute(pair.second).size();
  const auto m = data.schema().arity();
  const auto table = data.contingency(pair.first, pair.second);
  std::vector<Statistic> out;
  for (std::size_t k = 0; k < table.size() && out.size() < budget; ++k) {
    if (table[k] == 0) out.push_back(detail::cell_statistic(m, pair, cols, k, 0));
  }
  if (out.size() < budget) {
    for (const auto& c : detail::cells_by_count_desc(table)) {
      if (out.size() == budget) break;
      if (c.count > 0) out.push_back(detail::cell_statistic(m, pair, cols, c.index, c.count));
    }
  }
  return out;
}

/// KD-tree partition of the pair's plane into B_s rectangles with exact counts.
inline std::vector<Statistic> heuristic_composite(const DatasetHandle& data, AttributePair pair, std::size_t budget) {
  if (budget == 0) throw StatisticsError("composite budget must be at least 1");
  const auto rows = data.schema().attribute(pair.first).size();
  const auto cols = data.schema().attribute(pair.second).size();
  CountGrid grid(data.contingency(pair.first, pair.second), rows, cols);
  std::vector<Statistic> out;
  for (const auto& r : kd_partition(grid, budget)) {
    out.push_back(detail::rect_statistic(data.schema().arity(), pair, r, grid.sum(r)));
  }
  return out;
}

struct StatisticsOptions {
  std::size_t pair_budget = 0;    // B_a
  std::size_t bucket_budget = 0;  // B_s per pair
  Heuristic heuristic = Heuristic::Composite;
  PairStrategy strategy = PairStrategy::Cover;
  std::vector<std::size_t> exclude;
};

struct StatisticsBuild {
  StatisticSet stats;
  std::vector<PairScore> scores;
  std::vector<AttributePair> pairs;
};

/// 1D statistics, pair scoring and selection, then per-pair heuristic.
inline StatisticsBuild build_statistics(const DatasetHandle& data, const StatisticsOptions& options) {
  StatisticsBuild out;
  auto stats = build_1d(data);
  if (options.pair_budget > 0 && options.bucket_budget > 0) {
    out.scores = score_pairs(data, options.exclude);
    std::vector<PairScore> informative;
    for (const auto& s : out.scores) {
      if (s.chi2 > 0) informative.push_back(s);
    }
    out.pairs = select_pairs(informative, options.pair_budget, options.strategy);
    for (const auto& pair : out.pairs) {
      std::vector<Statistic> part;
      switch (options.heuristic) {
        case Heuristic::Large: part = heuristic_large(data, pair, options.bucket_budget); break;
        case Heuristic::Zero: part = heuristic_zero(data, pair, options.bucket_budget); break;
        case Heuristic::Composite: part = heuristic_composite(data, pair, options.bucket_budget); break;
      }
      for (auto& st : part) {
        st.id = static_cast<StatId>(stats.size());
        stats.push_back(std::move(st));
      }
    }
  }
  out.stats = StatisticSet(data.schema().domain_sizes(), static_cast<std::int64_t>(data.row_count()), std::move(stats));
  return out;
}

}  // namespace maxent
