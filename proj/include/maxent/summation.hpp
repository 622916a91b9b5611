#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace maxent {

/// Pairwise (tree) summation; fixed reduction order for a given length.
inline double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t kLeaf = 8;
  if (v.size() <= kLeaf) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const auto half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// log(sum exp(x)); empty or all -inf yields -inf.
inline double log_sum_exp(std::span<const double> logs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : logs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : logs) s += std::exp(x - mx);
  return mx + std::log(s);
}

/// A signed real stored as sign * exp(log_abs).
struct LogValue {
  int sign = 0;  // -1, 0, +1
  double log_abs = -std::numeric_limits<double>::infinity();

  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }

  static LogValue of(double x) {
    if (x == 0.0) return {};
    return {x > 0 ? 1 : -1, std::log(std::abs(x))};
  }
};

inline LogValue operator*(LogValue a, LogValue b) {
  if (a.sign == 0 || b.sign == 0) return {};
  return {a.sign * b.sign, a.log_abs + b.log_abs};
}

/// Signed sum of log-encoded values.
inline LogValue log_signed_sum(std::span<const LogValue> terms) {
  std::vector<double> pos, neg;
  for (const auto& t : terms) {
    if (t.sign > 0) pos.push_back(t.log_abs);
    if (t.sign < 0) neg.push_back(t.log_abs);
  }
  const double lp = log_sum_exp(pos), ln = log_sum_exp(neg);
  if (lp == ln) return {};
  if (lp > ln) return {1, lp + std::log1p(-std::exp(ln - lp))};
  return {-1, ln + std::log1p(-std::exp(lp - ln))};
}

}  // namespace maxent
