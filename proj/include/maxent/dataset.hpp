#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "maxent/csv.hpp"
#include "maxent/error.hpp"
#include "maxent/predicate.hpp"
#include "maxent/schema.hpp"

namespace maxent {

inline constexpr std::uint64_t kDefaultCellMapCap = 10'000'000;

/// Bucketized, immutable copy of an ingested table.
class DatasetHandle {
 public:
  DatasetHandle(Schema schema, std::vector<std::vector<BucketIndex>> columns, std::string source = {},
                std::uint64_t cell_cap = kDefaultCellMapCap, std::size_t clamped = 0)
      : schema_(std::move(schema)), columns_(std::move(columns)), source_(std::move(source)), clamped_(clamped) {
    if (columns_.size() != schema_.arity()) throw IngestError("column count does not match schema arity");
    row_count_ = columns_.empty() ? 0 : columns_.front().size();
    frequencies_.resize(schema_.arity());
    for (std::size_t i = 0; i < schema_.arity(); ++i) {
      if (columns_[i].size() != row_count_) throw IngestError("ragged columns");
      frequencies_[i].assign(schema_.attribute(i).size(), 0);
      for (auto v : columns_[i]) {
        if (v >= schema_.attribute(i).size()) throw IngestError("bucket index out of domain");
        ++frequencies_[i][v];
      }
    }
    if (schema_.tuple_count() <= cell_cap) {
      cells_.emplace();
      std::vector<BucketIndex> coords(schema_.arity());
      for (std::size_t r = 0; r < row_count_; ++r) {
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = columns_[i][r];
        ++(*cells_)[schema_.linear_index(coords)];
      }
    }
  }

  const Schema& schema() const noexcept { return schema_; }
  const std::string& source() const noexcept { return source_; }
  std::size_t row_count() const noexcept { return row_count_; }
  std::size_t clamped_values() const noexcept { return clamped_; }

  const std::vector<BucketIndex>& column(std::size_t attr) const { return columns_.at(attr); }
  BucketIndex value(std::size_t row, std::size_t attr) const { return columns_[attr][row]; }

  /// Per-value row counts of one attribute.
  const std::vector<std::int64_t>& frequencies(std::size_t attr) const { return frequencies_.at(attr); }

  bool has_cell_map() const noexcept { return cells_.has_value(); }
  const std::unordered_map<std::uint64_t, std::int64_t>& cell_map() const {
    if (!cells_) throw IngestError("cell map was not materialized for this dataset");
    return *cells_;
  }

  std::int64_t count_scan(const RangePredicate& pred) const {
    std::int64_t count = 0;
    for (std::size_t r = 0; r < row_count_; ++r) {
      bool ok = true;
      for (std::size_t i = 0; i < pred.size() && ok; ++i) {
        if (pred[i] && !pred[i]->contains(columns_[i][r])) ok = false;
      }
      count += ok ? 1 : 0;
    }
    return count;
  }

  std::int64_t count_cells(const RangePredicate& pred) const {
    std::int64_t count = 0;
    for (const auto& [idx, c] : cell_map()) {
      if (satisfies(pred, schema_.coords_of(idx))) count += c;
    }
    return count;
  }

  /// Exact number of rows satisfying the conjunction of per-attribute ranges.
  std::int64_t count_predicate(const RangePredicate& pred) const {
    check_predicate(pred);
    bool all = true;
    for (const auto& r : pred) all = all && !r;
    if (all) return static_cast<std::int64_t>(row_count_);
    // Single-attribute predicates come straight from the frequency tables.
    std::size_t constrained = 0, which = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i]) {
        ++constrained;
        which = i;
      }
    }
    if (constrained == 1) {
      std::int64_t c = 0;
      for (auto v = pred[which]->lo; v <= pred[which]->hi; ++v) c += frequencies_[which][v];
      return c;
    }
    if (cells_ && cells_->size() < row_count_) return count_cells(pred);
    return count_scan(pred);
  }

  /// Dense N_a x N_b contingency table (row-major in a).
  std::vector<std::int64_t> contingency(std::size_t a, std::size_t b) const {
    const auto nb = schema_.attribute(b).size();
    std::vector<std::int64_t> table(static_cast<std::size_t>(schema_.attribute(a).size()) * nb, 0);
    for (std::size_t r = 0; r < row_count_; ++r) ++table[static_cast<std::size_t>(columns_[a][r]) * nb + columns_[b][r]];
    return table;
  }

  void check_predicate(const RangePredicate& pred) const {
    if (pred.size() != schema_.arity()) throw IngestError("predicate arity does not match schema");
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] && (pred[i]->lo > pred[i]->hi || pred[i]->hi >= schema_.attribute(i).size())) {
        throw IngestError("predicate range out of domain for attribute '" + schema_.attribute(i).name() + "'");
      }
    }
  }

 private:
  Schema schema_;
  std::vector<std::vector<BucketIndex>> columns_;
  std::string source_;
  std::size_t clamped_ = 0;
  std::size_t row_count_ = 0;
  std::vector<std::vector<std::int64_t>> frequencies_;
  std::optional<std::unordered_map<std::uint64_t, std::int64_t>> cells_;
};

namespace detail {

inline bool is_null_field(const std::string& f) {
  if (f.empty()) return true;
  std::string lower(f.size(), ' ');
  std::transform(f.begin(), f.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower == "null";
}

}  // namespace detail

struct IngestOptions {
  std::uint64_t cell_map_cap = kDefaultCellMapCap;
};

/// Reads a CSV with a header row. Rows holding an empty or NULL field in any
/// schema column are dropped. Extra columns are ignored.
inline DatasetHandle ingest(std::istream& in, const Schema& schema, const std::string& source = "<stream>",
                            const IngestOptions& options = {}) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw IngestError("'" + source + "' is empty");
  if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0) header->front().erase(0, 3);

  std::vector<std::size_t> position(schema.arity());
  for (std::size_t i = 0; i < schema.arity(); ++i) {
    auto it = std::find(header->begin(), header->end(), schema.attribute(i).name());
    if (it == header->end()) {
      throw IngestError("missing column '" + schema.attribute(i).name() + "' in '" + source + "'");
    }
    position[i] = static_cast<std::size_t>(it - header->begin());
  }

  std::vector<std::vector<BucketIndex>> columns(schema.arity());
  std::vector<BucketIndex> row(schema.arity());
  std::size_t clamped = 0;
  while (auto rec = reader.next()) {
    if (rec->size() == 1 && rec->front().empty()) continue;  // blank line
    if (rec->size() < header->size()) {
      throw IngestError("short record at line " + std::to_string(reader.line()) + " of '" + source + "'");
    }
    bool keep = true;
    for (std::size_t i = 0; i < schema.arity() && keep; ++i) keep = !detail::is_null_field((*rec)[position[i]]);
    if (!keep) continue;
    for (std::size_t i = 0; i < schema.arity(); ++i) {
      bool was_clamped = false;
      try {
        row[i] = schema.attribute(i).bucketize((*rec)[position[i]], &was_clamped);
      } catch (const SchemaError& e) {
        throw IngestError(std::string(e.what()) + " at line " + std::to_string(reader.line()));
      }
      clamped += was_clamped ? 1 : 0;
    }
    for (std::size_t i = 0; i < schema.arity(); ++i) columns[i].push_back(row[i]);
  }
  if (columns.front().empty()) throw IngestError("no rows kept from '" + source + "'");
  return DatasetHandle(schema, std::move(columns), source, options.cell_map_cap, clamped);
}

inline DatasetHandle ingest(const std::string& csv_path, const Schema& schema, const IngestOptions& options = {}) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw IngestError("cannot open data file '" + csv_path + "'");
  return ingest(in, schema, csv_path, options);
}

}  // namespace maxent
