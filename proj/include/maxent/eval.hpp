#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "maxent/dataset.hpp"
#include "maxent/error.hpp"
#include "maxent/query.hpp"
#include "maxent/summary.hpp"

namespace maxent::eval {

enum class ValueClass { Heavy, Light, Null };

inline std::string to_string(ValueClass c) {
  switch (c) {
    case ValueClass::Heavy: return "heavy";
    case ValueClass::Light: return "light";
    case ValueClass::Null: return "null";
  }
  return "?";
}

struct WorkloadValue {
  std::vector<BucketIndex> values;  // parallel to Workload::attrs
  std::int64_t true_count = 0;
};

struct Workload {
  std::vector<std::size_t> attrs;
  std::vector<WorkloadValue> heavy, light, null;

  RangePredicate predicate(const WorkloadValue& v, std::size_t arity) const {
    auto pred = all_true(arity);
    for (std::size_t k = 0; k < attrs.size(); ++k) pred[attrs[k]] = Interval{v.values[k], v.values[k]};
    return pred;
  }
};

struct WorkloadSizes {
  std::size_t heavy = 100, light = 100, null = 200;
};

namespace detail {

inline std::vector<BucketIndex> unpack(std::uint64_t idx, const std::vector<std::uint32_t>& sizes) {
  std::vector<BucketIndex> out(sizes.size());
  for (std::size_t k = sizes.size(); k-- > 0;) {
    out[k] = static_cast<BucketIndex>(idx % sizes[k]);
    idx /= sizes[k];
  }
  return out;
}

}  // namespace detail

/// Heavy = top-k counts, light = bottom-k non-zero counts (disjoint from heavy),
/// null = k cells with zero count sampled with `seed`. Ties break on value index.
inline Workload build_workload(const DatasetHandle& data, std::vector<std::size_t> attrs, WorkloadSizes k,
                               std::uint64_t seed = 1) {
  if (attrs.empty()) throw EvalError("workload needs at least one attribute");
  std::vector<std::uint32_t> sizes;
  double cells = 1.0;
  for (auto a : attrs) {
    if (a >= data.schema().arity()) throw EvalError("workload attribute out of range");
    sizes.push_back(data.schema().attribute(a).size());
    cells *= sizes.back();
  }
  if (cells > 1e18) throw EvalError("workload attribute domain is too large");
  const auto total = static_cast<std::uint64_t>(cells);

  std::unordered_map<std::uint64_t, std::int64_t> counts;
  for (std::size_t r = 0; r < data.row_count(); ++r) {
    std::uint64_t idx = 0;
    for (std::size_t k2 = 0; k2 < attrs.size(); ++k2) idx = idx * sizes[k2] + data.value(r, attrs[k2]);
    ++counts[idx];
  }
  std::vector<std::pair<std::uint64_t, std::int64_t>> nonzero(counts.begin(), counts.end());
  std::sort(nonzero.begin(), nonzero.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  Workload w;
  w.attrs = std::move(attrs);
  const std::size_t nh = std::min(k.heavy, nonzero.size());
  for (std::size_t i = 0; i < nh; ++i) w.heavy.push_back({detail::unpack(nonzero[i].first, sizes), nonzero[i].second});
  std::vector<std::pair<std::uint64_t, std::int64_t>> rest(nonzero.begin() + static_cast<std::ptrdiff_t>(nh), nonzero.end());
  std::sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  for (std::size_t i = 0; i < std::min(k.light, rest.size()); ++i) {
    w.light.push_back({detail::unpack(rest[i].first, sizes), rest[i].second});
  }

  const std::uint64_t zeros = total - nonzero.size();
  if (k.null > zeros) {
    throw EvalError("requested " + std::to_string(k.null) + " null values but only " + std::to_string(zeros) +
                    " zero-count cells exist");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> picked;
  if (total <= 10'000'000) {
    std::vector<std::uint64_t> pool;
    pool.reserve(zeros);
    for (std::uint64_t idx = 0; idx < total; ++idx) {
      if (!counts.count(idx)) pool.push_back(idx);
    }
    for (std::size_t i = 0; i < k.null; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
      picked.push_back(pool[i]);
    }
  } else {
    std::unordered_set<std::uint64_t> seen;
    std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
    while (picked.size() < k.null) {
      const auto idx = pick(rng);
      if (!counts.count(idx) && seen.insert(idx).second) picked.push_back(idx);
    }
  }
  for (auto idx : picked) w.null.push_back({detail::unpack(idx, sizes), 0});
  return w;
}

/// |true - est| / (true + est); negative estimates count as 0.
inline double error_metric(double truth, double est) {
  est = std::max(est, 0.0);
  if (!(truth + est > 0)) throw EvalError("error metric undefined when true + est = 0");
  return std::abs(truth - est) / (truth + est);
}

/// Precision/recall of "estimate > 0" as a detector of light hitters among light ∪ null.
inline double f_measure(const std::vector<std::int64_t>& light_rounded, const std::vector<std::int64_t>& null_rounded) {
  const auto positive = [](std::int64_t v) { return v > 0; };
  const double tp = static_cast<double>(std::count_if(light_rounded.begin(), light_rounded.end(), positive));
  const double fp = static_cast<double>(std::count_if(null_rounded.begin(), null_rounded.end(), positive));
  if (light_rounded.empty() || tp == 0) return 0.0;
  const double precision = tp / (tp + fp);
  const double recall = tp / static_cast<double>(light_rounded.size());
  return 2 * precision * recall / (precision + recall);
}

/// A count estimator under evaluation. Must be safe to call from several threads.
struct Method {
  std::string name;
  std::function<double(const RangePredicate&)> estimate;
};

inline Method maxent_method(std::shared_ptr<const Summary> summary, std::string name = "maxent") {
  return {std::move(name), [s = std::move(summary)](const RangePredicate& p) { return estimate(*s, p); }};
}

/// Weighted row sample; the estimate is the weight of matching rows.
struct Sample {
  std::vector<std::vector<BucketIndex>> rows;
  std::vector<double> weights;

  double estimate(const RangePredicate& pred) const {
    double total = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (satisfies(pred, rows[r])) total += weights[r];
    }
    return total;
  }
};

inline std::vector<BucketIndex> row_of(const DatasetHandle& data, std::size_t r) {
  std::vector<BucketIndex> row(data.schema().arity());
  for (std::size_t a = 0; a < row.size(); ++a) row[a] = data.value(r, a);
  return row;
}

/// Bernoulli sample: each row kept with probability `rate`, weight 1/rate.
inline Sample uniform_sample(const DatasetHandle& data, double rate, std::uint64_t seed) {
  if (!(rate > 0 && rate <= 1)) throw EvalError("sampling rate must be in (0, 1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(rate);
  Sample s;
  for (std::size_t r = 0; r < data.row_count(); ++r) {
    if (keep(rng)) {
      s.rows.push_back(row_of(data, r));
      s.weights.push_back(1.0 / rate);
    }
  }
  return s;
}

/// Stratified over the cells of `strata` attributes: budget round(rate * n) split
/// equally across non-empty strata (at least one row each), drawn without
/// replacement, weight N_h / m_h.
inline Sample stratified_sample(const DatasetHandle& data, const std::vector<std::size_t>& strata, double rate,
                                std::uint64_t seed) {
  if (!(rate > 0 && rate <= 1)) throw EvalError("sampling rate must be in (0, 1]");
  if (strata.empty()) throw EvalError("stratified sampling needs at least one attribute");
  std::map<std::vector<BucketIndex>, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < data.row_count(); ++r) {
    std::vector<BucketIndex> key;
    for (auto a : strata) {
      if (a >= data.schema().arity()) throw EvalError("stratum attribute out of range");
      key.push_back(data.value(r, a));
    }
    groups[key].push_back(r);
  }
  const auto budget = static_cast<std::size_t>(std::llround(rate * static_cast<double>(data.row_count())));
  const std::size_t per = std::max<std::size_t>(1, budget / groups.size());
  std::mt19937_64 rng(seed);
  Sample s;
  for (auto& [key, rows] : groups) {
    const std::size_t m = std::min(per, rows.size());
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, rows.size() - 1);
      std::swap(rows[i], rows[pick(rng)]);
      s.rows.push_back(row_of(data, rows[i]));
      s.weights.push_back(static_cast<double>(rows.size()) / static_cast<double>(m));
    }
  }
  return s;
}

inline Method sample_method(std::shared_ptr<const Sample> sample, std::string name) {
  return {std::move(name), [s = std::move(sample)](const RangePredicate& p) { return s->estimate(p); }};
}

struct ReportRow {
  std::string method;
  ValueClass cls = ValueClass::Heavy;
  std::vector<BucketIndex> values;
  std::int64_t truth = 0;
  double raw = 0.0;
  std::int64_t rounded = 0;
  std::optional<double> error;  // unset for null values
  double wall_ms = 0.0;
};

struct MethodMetrics {
  std::string method;
  double mean_error_heavy = 0.0;
  double mean_error_light = 0.0;
  double f_measure = 0.0;
  double mean_wall_ms = 0.0;
  double max_wall_ms = 0.0;
};

struct MetricReport {
  std::vector<std::string> attrs;
  std::vector<MethodMetrics> methods;
  std::vector<ReportRow> rows;

  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

inline nlohmann::json MetricReport::to_json() const {
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : methods) {
    ms.push_back({{"method", m.method},
                  {"mean_error_heavy", m.mean_error_heavy},
                  {"mean_error_light", m.mean_error_light},
                  {"f_measure", m.f_measure},
                  {"mean_wall_ms", m.mean_wall_ms},
                  {"max_wall_ms", m.max_wall_ms}});
  }
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    rs.push_back({{"method", r.method},
                  {"class", to_string(r.cls)},
                  {"values", r.values},
                  {"true", r.truth},
                  {"raw", r.raw},
                  {"rounded", r.rounded},
                  {"error", r.error ? nlohmann::json(*r.error) : nlohmann::json()},
                  {"wall_ms", r.wall_ms}});
  }
  return {{"attrs", attrs}, {"methods", ms}, {"rows", rs}};
}

inline void MetricReport::write_csv(std::ostream& out) const {
  out << "method,class,values,true,raw,rounded,error,wall_ms\n";
  for (const auto& r : rows) {
    out << r.method << ',' << to_string(r.cls) << ',';
    for (std::size_t k = 0; k < r.values.size(); ++k) out << (k ? ";" : "") << r.values[k];
    out << ',' << r.truth << ',' << r.raw << ',' << r.rounded << ',';
    if (r.error) out << *r.error;
    out << ',' << r.wall_ms << '\n';
  }
}

/// Every method on every workload value; methods run on separate threads.
inline MetricReport run_comparison(const DatasetHandle& data, const std::vector<Method>& methods, const Workload& w) {
  struct Item {
    ValueClass cls;
    const WorkloadValue* value;
  };
  std::vector<Item> items;
  for (const auto& v : w.heavy) items.push_back({ValueClass::Heavy, &v});
  for (const auto& v : w.light) items.push_back({ValueClass::Light, &v});
  for (const auto& v : w.null) items.push_back({ValueClass::Null, &v});
  const std::size_t arity = data.schema().arity();

  std::vector<std::vector<ReportRow>> per_method(methods.size());
  std::vector<std::exception_ptr> failures(methods.size());
  std::vector<std::thread> workers;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    workers.emplace_back([&, m] {
      try {
        for (const auto& item : items) {
          ReportRow row;
          row.method = methods[m].name;
          row.cls = item.cls;
          row.values = item.value->values;
          row.truth = item.value->true_count;
          const auto start = std::chrono::steady_clock::now();
          row.raw = methods[m].estimate(w.predicate(*item.value, arity));
          row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
          row.rounded = round_estimate(row.raw);
          if (item.cls != ValueClass::Null) row.error = error_metric(static_cast<double>(row.truth), row.raw);
          per_method[m].push_back(std::move(row));
        }
      } catch (...) {
        failures[m] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  MetricReport report;
  for (auto a : w.attrs) report.attrs.push_back(data.schema().attribute(a).name());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodMetrics mm{methods[m].name};
    double heavy = 0, light = 0, wall = 0;
    std::size_t nh = 0, nl = 0;
    std::vector<std::int64_t> light_rounded, null_rounded;
    for (const auto& r : per_method[m]) {
      wall += r.wall_ms;
      mm.max_wall_ms = std::max(mm.max_wall_ms, r.wall_ms);
      if (r.cls == ValueClass::Heavy) {
        heavy += *r.error;
        ++nh;
      } else if (r.cls == ValueClass::Light) {
        light += *r.error;
        ++nl;
        light_rounded.push_back(r.rounded);
      } else {
        null_rounded.push_back(r.rounded);
      }
    }
    mm.mean_error_heavy = nh ? heavy / static_cast<double>(nh) : 0.0;
    mm.mean_error_light = nl ? light / static_cast<double>(nl) : 0.0;
    mm.f_measure = f_measure(light_rounded, null_rounded);
    mm.mean_wall_ms = per_method[m].empty() ? 0.0 : wall / static_cast<double>(per_method[m].size());
    report.methods.push_back(mm);
    for (auto& r : per_method[m]) report.rows.push_back(std::move(r));
  }
  return report;
}

struct Correlation {
  std::size_t a, b;
  double rho;
};

struct SyntheticSpec {
  std::vector<std::string> names;
  std::vector<std::uint32_t> domain_sizes;
  std::vector<Correlation> correlations;
  std::size_t rows = 10'000;
  double skew = 1.0;  // u -> u^skew before binning; > 1 piles mass on low buckets
  std::uint64_t seed = 7;
};

/// Schema for synthetic data: numeric attributes over [0, N) with unit buckets.
inline Schema synthetic_schema(const SyntheticSpec& spec) {
  std::vector<AttributeDomain> attrs;
  for (std::size_t i = 0; i < spec.domain_sizes.size(); ++i) {
    const auto name = i < spec.names.size() ? spec.names[i] : "a" + std::to_string(i);
    attrs.push_back(AttributeDomain::numeric(name, 0.0, spec.domain_sizes[i], spec.domain_sizes[i]));
  }
  return Schema(std::move(attrs));
}

/// Gaussian copula: correlated normals, mapped through the normal CDF and binned.
inline DatasetHandle synthetic_dataset(const SyntheticSpec& spec) {
  const auto m = spec.domain_sizes.size();
  if (m == 0) throw EvalError("synthetic data needs at least one attribute");
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (const auto& c : spec.correlations) {
    if (c.a >= m || c.b >= m || c.a == c.b || std::abs(c.rho) >= 1) throw EvalError("invalid correlation entry");
    corr(static_cast<Eigen::Index>(c.a), static_cast<Eigen::Index>(c.b)) = c.rho;
    corr(static_cast<Eigen::Index>(c.b), static_cast<Eigen::Index>(c.a)) = c.rho;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) throw EvalError("correlation matrix is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::vector<std::vector<BucketIndex>> columns(m, std::vector<BucketIndex>(spec.rows));
  Eigen::VectorXd e(static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = normal(rng);
    const Eigen::VectorXd z = L * e;
    for (std::size_t i = 0; i < m; ++i) {
      const double u = std::pow(0.5 * std::erfc(-z(static_cast<Eigen::Index>(i)) / std::sqrt(2.0)), spec.skew);
      const auto N = spec.domain_sizes[i];
      columns[i][r] = std::min<BucketIndex>(N - 1, static_cast<BucketIndex>(u * N));
    }
  }
  return DatasetHandle(synthetic_schema(spec), std::move(columns), "synthetic");
}

/// CSV with a header row; values are bucket indices, which bin back to themselves.
inline void write_csv(const DatasetHandle& data, std::ostream& out) {
  const auto& schema = data.schema();
  for (std::size_t a = 0; a < schema.arity(); ++a) out << (a ? "," : "") << schema.attribute(a).name();
  out << '\n';
  for (std::size_t r = 0; r < data.row_count(); ++r) {
    for (std::size_t a = 0; a < schema.arity(); ++a) {
      out << (a ? "," : "");
      const auto& dom = schema.attribute(a);
      if (dom.is_numeric()) {
        out << dom.buckets().lo + dom.buckets().width() * (data.value(r, a) + 0.5);
      } else {
        const auto& label = dom.labels()[data.value(r, a)];
        if (label.find_first_of(",\"\r\n") == std::string::npos) {
          out << label;
        } else {
          out << '"';
          for (char c : label) out << (c == '"' ? "\"\"" : std::string(1, c));
          out << '"';
        }
      }
    }
    out << '\n';
  }
}

}  // namespace maxent::eval
