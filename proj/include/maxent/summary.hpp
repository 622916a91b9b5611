#pragma once

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "json.hpp"
#include "maxent/dataset.hpp"
#include "maxent/error.hpp"
#include "maxent/polynomial.hpp"
#include "maxent/schema.hpp"
#include "maxent/sha256.hpp"
#include "maxent/solver.hpp"
#include "maxent/statistics.hpp"

namespace maxent {

inline constexpr int kSummaryFormatVersion = 1;

/// The queryable artifact: schema, statistics, fitted variables and the
/// polynomial rebuilt from the statistics. Immutable after construction.
class Summary {
 public:
  Summary(Schema schema, StatisticSet stats, VariableStore alpha, nlohmann::json meta = nlohmann::json::object())
      : schema_(std::move(schema)), stats_(std::move(stats)), alpha_(std::move(alpha)), meta_(std::move(meta)) {
    if (alpha_.size() != stats_.size()) {
      throw SummaryError(SummaryError::Kind::Mismatch, "alpha count " + std::to_string(alpha_.size()) +
                                                           " does not match statistic count " +
                                                           std::to_string(stats_.size()));
    }
    if (schema_.domain_sizes() != stats_.domain_sizes()) {
      throw SummaryError(SummaryError::Kind::Mismatch, "statistics do not match the schema domains");
    }
    poly_ = build_compressed(stats_);
    const double p = evaluate(poly_, alpha_);
    if (std::isfinite(p) && p > 0) {
      p_ = p;
      log_p_ = std::log(p);
    } else {
      const auto lv = evaluate_log(poly_, alpha_);
      if (lv.sign <= 0) throw SummaryError(SummaryError::Kind::Mismatch, "polynomial value is not positive");
      p_ = lv.value();
      log_p_ = lv.log_abs;
    }
  }

  const Schema& schema() const noexcept { return schema_; }
  const StatisticSet& statistics() const noexcept { return stats_; }
  const VariableStore& alpha() const noexcept { return alpha_; }
  const CompressedPolynomial& polynomial() const noexcept { return poly_; }
  const nlohmann::json& metadata() const noexcept { return meta_; }
  std::int64_t cardinality() const noexcept { return stats_.cardinality(); }
  double P() const noexcept { return p_; }
  double log_P() const noexcept { return log_p_; }

  /// Canonical document without the checksum field.
  nlohmann::json body() const {
    return {{"format_version", kSummaryFormatVersion},
            {"schema", schema_.to_json()},
            {"statistics", stats_.to_json()},
            {"alpha", alpha_.vector()},
            {"n", cardinality()},
            {"P", p_},
            {"solver_meta", meta_}};
  }

 private:
  Schema schema_;
  StatisticSet stats_;
  VariableStore alpha_;
  nlohmann::json meta_;
  CompressedPolynomial poly_;
  double p_ = 0.0;
  double log_p_ = 0.0;
};

/// Serialized form: sorted keys, no whitespace, shortest round-trip floats,
/// plus "sha256" over the serialized body.
inline std::string serialize_summary(const Summary& s) {
  auto doc = s.body();
  const auto digest = sha256_hex(doc.dump());
  doc["sha256"] = digest;
  return doc.dump();
}

inline void save_summary(const Summary& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SummaryError(SummaryError::Kind::Io, "cannot write summary '" + path + "'");
  out << serialize_summary(s);
  if (!out) throw SummaryError(SummaryError::Kind::Io, "failed writing summary '" + path + "'");
}

inline Summary parse_summary(const std::string& text, double p_tolerance = 1e-12) {
  using Kind = SummaryError::Kind;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SummaryError(Kind::Checksum, std::string("summary is truncated or corrupt: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("sha256") || !doc["sha256"].is_string()) {
    throw SummaryError(Kind::Checksum, "summary has no checksum");
  }
  const auto expected = doc["sha256"].get<std::string>();
  doc.erase("sha256");
  if (sha256_hex(doc.dump()) != expected) throw SummaryError(Kind::Checksum, "summary checksum mismatch");
  try {
    if (doc.at("format_version").get<int>() != kSummaryFormatVersion) {
      throw SummaryError(Kind::Version, "unsupported summary format version " + doc["format_version"].dump());
    }
    auto schema = Schema::from_json(doc.at("schema"));
    const auto n = doc.at("n").get<std::int64_t>();
    auto stats = StatisticSet::from_json(doc.at("statistics"), schema.domain_sizes(), n);
    auto alpha = doc.at("alpha").get<std::vector<double>>();
    if (alpha.size() != stats.size()) {
      throw SummaryError(Kind::Mismatch, "summary has " + std::to_string(alpha.size()) + " alpha values for " +
                                             std::to_string(stats.size()) + " statistics");
    }
    const auto cached = doc.at("P").get<double>();
    Summary s(std::move(schema), std::move(stats), VariableStore(std::move(alpha)), doc.at("solver_meta"));
    if (std::abs(s.P() - cached) > p_tolerance * std::abs(cached)) {
      throw SummaryError(Kind::Mismatch, "recomputed P differs from the stored value");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SummaryError(Kind::Malformed, std::string("malformed summary: ") + e.what());
  } catch (const SchemaError& e) {
    throw SummaryError(Kind::Malformed, e.what());
  } catch (const StatisticsError& e) {
    throw SummaryError(Kind::Malformed, e.what());
  }
}

inline Summary load_summary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SummaryError(SummaryError::Kind::Io, "cannot open summary '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_summary(text);
}

struct BuildOptions {
  StatisticsOptions statistics;
  SolverConfig solver;
};

struct BuildResult {
  Summary summary;
  SolverState solver;
  SizeReport size;
  std::vector<PairScore> scores;
  std::vector<AttributePair> pairs;
};

/// Statistics, polynomial, solver; the whole summary pipeline over a dataset.
inline BuildResult build_summary(const DatasetHandle& data, const BuildOptions& options) {
  auto built = build_statistics(data, options.statistics);
  const auto poly = build_compressed(built.stats);
  auto state = solve(poly, built.stats, options.solver);
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : built.pairs) {
    pairs.push_back({data.schema().attribute(a).name(), data.schema().attribute(b).name()});
  }
  nlohmann::json meta = {{"heuristic", to_string(options.statistics.heuristic)},
                         {"strategy", to_string(options.statistics.strategy)},
                         {"pair_budget", options.statistics.pair_budget},
                         {"bucket_budget", options.statistics.bucket_budget},
                         {"pairs", pairs},
                         {"sweeps", state.sweeps},
                         {"max_residual", state.max_residual()},
                         {"converged", state.converged},
                         {"threshold", options.solver.threshold},
                         {"max_iterations", options.solver.max_iterations}};
  Summary summary(data.schema(), built.stats, state.assign, std::move(meta));
  auto size = size_report(summary.polynomial());
  return {std::move(summary), std::move(state), size, std::move(built.scores), std::move(built.pairs)};
}

}  // namespace maxent
