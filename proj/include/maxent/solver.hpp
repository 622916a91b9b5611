#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "json.hpp"
#include "maxent/error.hpp"
#include "maxent/polynomial.hpp"
#include "maxent/statistics.hpp"

namespace maxent {

struct SolverConfig {
  double threshold = 1e-6;
  int max_iterations = 30;
  double init_value = 1.0;
  std::ostream* progress = nullptr;  // one JSON line per sweep when set
};

enum class VariableRole { Active, PinnedZero, PinnedFull, Unreachable };

struct SweepRecord {
  int sweep = 0;
  double max_residual = 0.0;         // |s_j - n alpha_j P_j / P| measured before each update
  double max_update_residual = 0.0;  // same quantity right after each update
  double psi = 0.0;
  double wall_ms = 0.0;

  nlohmann::json to_json() const {
    return {{"sweep", sweep}, {"max_residual", max_residual}, {"max_update_residual", max_update_residual},
            {"psi", psi}, {"wall_ms", wall_ms}};
  }
};

struct SolverState {
  VariableStore assign;
  double P = 0.0;
  std::vector<VariableRole> roles;
  std::vector<StatId> active;
  std::vector<double> residuals;  // parallel to `active`, at the final state
  std::vector<SweepRecord> trace;
  double initial_psi = 0.0;
  int sweeps = 0;
  bool converged = false;

  double max_residual() const {
    double r = 0.0;
    for (double x : residuals) r = std::max(r, x);
    return r;
  }
};

/// Psi = sum_j s_j ln(alpha_j) - n ln P, with s_j ln(alpha_j) = 0 when s_j = 0.
inline double dual_value(const CompressedPolynomial& poly, const StatisticSet& stats, const VariableStore& assign,
                         std::int64_t n) {
  double psi = 0.0;
  for (const auto& st : stats.all()) {
    if (st.s == 0) continue;
    psi += static_cast<double>(st.s) * std::log(assign[st.id]);
  }
  const double p = evaluate(poly, assign);
  const double log_p = std::isfinite(p) ? std::log(p) : evaluate_log(poly, assign).log_abs;
  return psi - static_cast<double>(n) * log_p;
}

namespace detail {

inline double residual(const StatisticSet& stats, Evaluator& ev, StatId j, double p) {
  const auto n = static_cast<double>(stats.cardinality());
  const double pa = ev.value_with(j, 1.0) - ev.value_with(j, 0.0);
  return std::abs(static_cast<double>(stats.at(j).s) - n * ev.value_of(j) * pa / p);
}

}  // namespace detail

/// Closed-form coordinate step: the alpha_j that makes the model expectation
/// of statistic j equal s_j with every other variable fixed. Returns the new
/// value without applying it; NaN when dP/dalpha_j vanishes.
inline double coordinate_update(Evaluator& ev, StatId j, std::int64_t s, std::int64_t n) {
  const double p1 = ev.value_with(j, 1.0);
  const double p0 = ev.value_with(j, 0.0);  // P - alpha_j P_j
  const double pa = p1 - p0;
  if (!(pa > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(s) * p0 / (static_cast<double>(n - s) * pa);
}

/// Fits the variables by cyclic coordinate updates in ascending id order.
/// One iteration is a full sweep over the active statistics; the loop stops
/// once every residual seen during a sweep is below the threshold.
inline SolverState solve(const CompressedPolynomial& poly, const StatisticSet& stats, const SolverConfig& config = {}) {
  if (!(config.threshold > 0)) throw SolverError("solver threshold must be positive");
  if (config.max_iterations < 1) throw SolverError("solver needs at least one iteration");
  const auto n = stats.cardinality();
  if (n <= 0) throw SolverError("relation cardinality must be positive");

  SolverState state;
  std::vector<double> values(stats.size(), config.init_value);
  state.roles.assign(stats.size(), VariableRole::Active);
  for (const auto& st : stats.all()) {
    if (st.s == 0) {
      values[st.id] = 0.0;
      state.roles[st.id] = VariableRole::PinnedZero;
    } else if (st.s == n) {
      values[st.id] = 1.0;
      state.roles[st.id] = VariableRole::PinnedFull;
    }
  }
  Evaluator ev(poly, std::move(values));
  auto current_store = [&] { return VariableStore(ev.values()); };
  auto refresh_active = [&] {
    state.active.clear();
    for (StatId j = 0; j < stats.size(); ++j) {
      if (state.roles[j] == VariableRole::Active) state.active.push_back(j);
    }
  };
  refresh_active();

  double p = ev.value();
  if (!(p > 0.0) || !std::isfinite(p)) throw SolverError("initial polynomial value is not positive and finite");
  state.initial_psi = dual_value(poly, stats, current_store(), n);

  double initial_max = 0.0;
  for (auto j : state.active) initial_max = std::max(initial_max, detail::residual(stats, ev, j, p));

  if (initial_max >= config.threshold) {
    for (int sweep = 1; sweep <= config.max_iterations; ++sweep) {
      const auto start = std::chrono::steady_clock::now();
      SweepRecord rec;
      rec.sweep = sweep;
      for (auto j : state.active) {
        if (state.roles[j] != VariableRole::Active) continue;
        const auto s = stats.at(j).s;
        const double pa = ev.value_with(j, 1.0) - ev.value_with(j, 0.0);
        rec.max_residual =
            std::max(rec.max_residual, std::abs(static_cast<double>(s) - static_cast<double>(n) * ev.value_of(j) * pa / p));
        const double next = coordinate_update(ev, j, s, n);
        if (std::isnan(next)) {
          state.roles[j] = VariableRole::Unreachable;
          continue;
        }
        if (!std::isfinite(next) || next < 0.0) {
          throw SolverError("solver diverged at statistic " + std::to_string(j) + " in sweep " +
                            std::to_string(sweep) + " (alpha = " + std::to_string(next) + ")");
        }
        ev.set(j, next);
        p = ev.value();
        if (!(p > 0.0) || !std::isfinite(p) || ev.overflowed()) {
          throw SolverError("polynomial value left the representable range at statistic " + std::to_string(j));
        }
        rec.max_update_residual = std::max(rec.max_update_residual, detail::residual(stats, ev, j, p));
      }
      rec.psi = dual_value(poly, stats, current_store(), n);
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (config.progress) *config.progress << rec.to_json().dump() << '\n';
      state.trace.push_back(rec);
      state.sweeps = sweep;
      // Later updates disturb earlier constraints, so stop on the end-of-sweep residual.
      double end_max = 0.0;
      for (auto j : state.active) {
        if (state.roles[j] == VariableRole::Active) end_max = std::max(end_max, detail::residual(stats, ev, j, p));
      }
      if (end_max < config.threshold) break;
    }
  }

  refresh_active();
  state.assign = current_store();
  state.P = p;
  for (auto j : state.active) state.residuals.push_back(detail::residual(stats, ev, j, p));
  state.converged = state.max_residual() < config.threshold;
  return state;
}

}  // namespace maxent
