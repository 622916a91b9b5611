#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "json.hpp"
#include "maxent/error.hpp"
#include "maxent/predicate.hpp"

namespace maxent {

enum class AttributeKind { Categorical, Numeric };

struct NumericBuckets {
  double lo = 0.0;
  double hi = 1.0;
  std::uint32_t count = 1;

  double width() const noexcept { return (hi - lo) / count; }
};

/// Bucketized active domain of one attribute.
class AttributeDomain {
 public:
  static AttributeDomain categorical(std::string name, std::vector<std::string> labels) {
    if (labels.empty()) throw SchemaError("attribute '" + name + "' has no category values");
    AttributeDomain d;
    d.name_ = std::move(name);
    d.kind_ = AttributeKind::Categorical;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!d.label_index_.emplace(labels[i], static_cast<BucketIndex>(i)).second) {
        throw SchemaError("attribute '" + d.name_ + "' repeats category '" + labels[i] + "'");
      }
    }
    d.labels_ = std::move(labels);
    return d;
  }

  static AttributeDomain numeric(std::string name, double lo, double hi, std::int64_t buckets) {
    if (buckets < 1) throw SchemaError("attribute '" + name + "' needs a positive bucket count");
    if (!(lo < hi)) throw SchemaError("attribute '" + name + "' needs lo < hi");
    AttributeDomain d;
    d.name_ = std::move(name);
    d.kind_ = AttributeKind::Numeric;
    d.buckets_ = {lo, hi, static_cast<std::uint32_t>(buckets)};
    return d;
  }

  const std::string& name() const noexcept { return name_; }
  AttributeKind kind() const noexcept { return kind_; }
  bool is_numeric() const noexcept { return kind_ == AttributeKind::Numeric; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const NumericBuckets& buckets() const noexcept { return buckets_; }

  std::uint32_t size() const noexcept {
    return is_numeric() ? buckets_.count : static_cast<std::uint32_t>(labels_.size());
  }

  /// Equi-width bucket of a numeric value. Out-of-range values clamp to the
  /// first/last bucket; `clamped` is set when that happens.
  BucketIndex bucket_of(double raw, bool* clamped = nullptr) const {
    if (!is_numeric()) throw SchemaError("attribute '" + name_ + "' is categorical");
    if (std::isnan(raw)) throw SchemaError("NaN value for attribute '" + name_ + "'");
    bool clamp = false;
    BucketIndex idx = 0;
    if (raw < buckets_.lo) {
      clamp = true;
    } else if (raw >= buckets_.hi) {
      clamp = true;
      idx = buckets_.count - 1;
    } else {
      auto b = static_cast<std::int64_t>(std::floor((raw - buckets_.lo) / buckets_.width()));
      // floor can land on count for values a hair below hi
      idx = static_cast<BucketIndex>(std::clamp<std::int64_t>(b, 0, buckets_.count - 1));
    }
    if (clamped) *clamped = clamp;
    return idx;
  }

  BucketIndex index_of_label(const std::string& label) const {
    auto it = label_index_.find(label);
    if (it == label_index_.end()) {
      throw SchemaError("unknown value '" + label + "' for attribute '" + name_ + "'");
    }
    return it->second;
  }

  /// Maps a raw textual value to its bucket index.
  BucketIndex bucketize(const std::string& raw, bool* clamped = nullptr) const {
    if (!is_numeric()) {
      if (clamped) *clamped = false;
      return index_of_label(raw);
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(raw, &used);
    } catch (const std::exception&) {
      throw SchemaError("value '" + raw + "' is not numeric for attribute '" + name_ + "'");
    }
    while (used < raw.size() && std::isspace(static_cast<unsigned char>(raw[used]))) ++used;
    if (used != raw.size()) {
      throw SchemaError("value '" + raw + "' is not numeric for attribute '" + name_ + "'");
    }
    return bucket_of(v, clamped);
  }

  /// Human readable name of a bucket: the label, or "[lo, hi)".
  std::string describe(BucketIndex v) const {
    if (!is_numeric()) return labels_.at(v);
    const double w = buckets_.width();
    nlohmann::json j = nlohmann::json::array({buckets_.lo + w * v, buckets_.lo + w * (v + 1)});
    return "[" + j[0].dump() + ", " + j[1].dump() + ")";
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["name"] = name_;
    if (is_numeric()) {
      j["kind"] = "numeric";
      j["lo"] = buckets_.lo;
      j["hi"] = buckets_.hi;
      j["buckets"] = buckets_.count;
    } else {
      j["kind"] = "categorical";
      j["values"] = labels_;
    }
    return j;
  }

 private:
  AttributeDomain() = default;

  std::string name_;
  AttributeKind kind_ = AttributeKind::Categorical;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, BucketIndex> label_index_;
  NumericBuckets buckets_;
};

/// Ordered attribute list of the single summarized relation.
class Schema {
 public:
  Schema() = default;

  explicit Schema(std::vector<AttributeDomain> attributes) : attributes_(std::move(attributes)) {
    if (attributes_.empty()) throw SchemaError("schema has no attributes");
    std::set<std::string> seen;
    for (const auto& a : attributes_) {
      if (!seen.insert(a.name()).second) throw SchemaError("duplicate attribute name '" + a.name() + "'");
    }
  }

  std::size_t arity() const noexcept { return attributes_.size(); }
  const AttributeDomain& attribute(std::size_t i) const { return attributes_.at(i); }
  const std::vector<AttributeDomain>& attributes() const noexcept { return attributes_; }

  std::vector<std::uint32_t> domain_sizes() const {
    std::vector<std::uint32_t> sizes;
    sizes.reserve(attributes_.size());
    for (const auto& a : attributes_) sizes.push_back(a.size());
    return sizes;
  }

  /// Number of possible tuples d = prod N_i. Saturates at uint64 max.
  std::uint64_t tuple_count() const noexcept {
    std::uint64_t d = 1;
    for (const auto& a : attributes_) {
      if (d > std::numeric_limits<std::uint64_t>::max() / a.size()) {
        return std::numeric_limits<std::uint64_t>::max();
      }
      d *= a.size();
    }
    return d;
  }

  /// d as a double, for domains too large for 64 bits.
  double tuple_count_approx() const noexcept {
    double d = 1.0;
    for (const auto& a : attributes_) d *= a.size();
    return d;
  }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
      if (attributes_[i].name() == name) return i;
    }
    return std::nullopt;
  }

  std::size_t index_of(const std::string& name) const {
    auto i = find(name);
    if (!i) throw SchemaError("unknown attribute '" + name + "'");
    return *i;
  }

  /// Row-major linear index; the last attribute varies fastest.
  std::uint64_t linear_index(const std::vector<BucketIndex>& coords) const {
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < attributes_.size(); ++i) idx = idx * attributes_[i].size() + coords[i];
    return idx;
  }

  std::vector<BucketIndex> coords_of(std::uint64_t idx) const {
    std::vector<BucketIndex> coords(attributes_.size());
    for (std::size_t i = attributes_.size(); i-- > 0;) {
      coords[i] = static_cast<BucketIndex>(idx % attributes_[i].size());
      idx /= attributes_[i].size();
    }
    return coords;
  }

  nlohmann::json to_json() const {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : attributes_) attrs.push_back(a.to_json());
    return {{"attributes", attrs}};
  }

  static Schema from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("attributes") || !doc["attributes"].is_array()) {
      throw SchemaError("schema document must be an object with an 'attributes' array");
    }
    std::vector<AttributeDomain> attrs;
    try {
      for (const auto& a : doc["attributes"]) {
        const auto name = a.at("name").get<std::string>();
        const auto kind = a.at("kind").get<std::string>();
        if (kind == "categorical") {
          attrs.push_back(AttributeDomain::categorical(name, a.at("values").get<std::vector<std::string>>()));
        } else if (kind == "numeric") {
          attrs.push_back(AttributeDomain::numeric(name, a.at("lo").get<double>(), a.at("hi").get<double>(),
                                                   a.at("buckets").get<std::int64_t>()));
        } else {
          throw SchemaError("attribute '" + name + "' has unknown kind '" + kind + "'");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("malformed schema document: ") + e.what());
    }
    return Schema(std::move(attrs));
  }

 private:
  std::vector<AttributeDomain> attributes_;
};

inline Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("malformed schema document '" + path + "': " + e.what());
  }
  return Schema::from_json(doc);
}

}  // namespace maxent
