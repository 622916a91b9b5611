#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 512
#endif
#include "httplib.h"
#include "json.hpp"
#include "maxent/error.hpp"
#include "maxent/query.hpp"
#include "maxent/summary.hpp"

namespace maxent::service {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Level from MAXENT_LOG_LEVEL (error|warn|info|debug), info when unset.
inline LogLevel log_level_from_env() {
  const char* v = std::getenv("MAXENT_LOG_LEVEL");
  if (!v) return LogLevel::Info;
  const std::string s = v;
  if (s == "error") return LogLevel::Error;
  if (s == "warn") return LogLevel::Warn;
  if (s == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::vector<std::string> summary_paths;
  std::size_t max_concurrent = 4;
  int request_timeout_ms = 10'000;
  LogLevel log_level = LogLevel::Info;
};

struct ApiError {
  int status = 500;
  std::string code;  // PARSE_ERROR | UNKNOWN_SUMMARY | PLAN_TOO_LARGE | INTERNAL
  std::string message;
  nlohmann::json detail = nlohmann::json::object();

  nlohmann::json to_json() const { return {{"error", {{"code", code}, {"message", message}, {"detail", detail}}}}; }
};

/// Summary id: file name without directory and extension.
inline std::string summary_id(const std::string& path) { return std::filesystem::path(path).stem().string(); }

/// Id -> immutable summary; replaced wholesale on reload.
class Registry {
 public:
  using Map = std::map<std::string, std::pair<std::string, std::shared_ptr<const Summary>>>;

  /// Loads every path; any failure leaves the current set untouched and throws.
  void load(const std::vector<std::string>& paths) {
    auto next = std::make_shared<Map>();
    for (const auto& p : paths) {
      auto id = summary_id(p);
      if (next->count(id)) throw SummaryError(SummaryError::Kind::Io, "duplicate summary id '" + id + "'");
      (*next)[id] = {p, std::make_shared<const Summary>(load_summary(p))};
    }
    std::unique_lock lock(mu_);
    map_ = std::move(next);
  }

  void add(const std::string& id, std::shared_ptr<const Summary> s) {
    std::unique_lock lock(mu_);
    auto next = std::make_shared<Map>(*map_);
    (*next)[id] = {"", std::move(s)};
    map_ = std::move(next);
  }

  std::shared_ptr<const Map> snapshot() const {
    std::shared_lock lock(mu_);
    return map_;
  }

 private:
  mutable std::shared_mutex mu_;
  std::shared_ptr<const Map> map_ = std::make_shared<Map>();
};

inline nlohmann::json schema_view(const std::string& id, const Summary& s) {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& a : s.schema().attributes()) {
    nlohmann::json j = a.to_json();
    j["size"] = a.size();
    attrs.push_back(std::move(j));
  }
  nlohmann::json multi = nlohmann::json::array();
  for (auto sid : s.statistics().multi_d_ids()) {
    const auto& st = s.statistics().at(sid);
    nlohmann::json ranges = nlohmann::json::object();
    for (auto d : st.dims()) ranges[s.schema().attribute(d).name()] = {st.ranges[d]->lo, st.ranges[d]->hi};
    multi.push_back({{"id", sid}, {"ranges", ranges}, {"s", st.s}});
  }
  return {{"id", id},
          {"n", s.cardinality()},
          {"attributes", attrs},
          {"statistic_count", s.statistics().size()},
          {"multi_d_statistics", multi}};
}

class Service {
 public:
  explicit Service(ServiceConfig config) : config_(std::move(config)) {
    registry_.load(config_.summary_paths);
    server_.new_task_queue = [n = std::max<std::size_t>(1, config_.max_concurrent)] { return new httplib::ThreadPool(n); };
    const auto sec = config_.request_timeout_ms / 1000;
    const auto usec = (config_.request_timeout_ms % 1000) * 1000;
    server_.set_read_timeout(sec, usec);
    server_.set_write_timeout(sec, usec);
    routes();
  }

  Registry& registry() noexcept { return registry_; }

  /// Re-reads the configured summary files; keeps the old set on failure.
  bool reload() {
    try {
      registry_.load(config_.summary_paths);
      log(LogLevel::Info, "reloaded " + std::to_string(config_.summary_paths.size()) + " summaries");
      return true;
    } catch (const std::exception& e) {
      log(LogLevel::Error, std::string("reload failed: ") + e.what());
      return false;
    }
  }

  /// Binds the configured port; returns the bound port or -1.
  int bind() {
    if (config_.port == 0) return port_ = server_.bind_to_any_port(config_.host);
    return port_ = server_.bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }

  /// Blocks until stop().
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  int port() const noexcept { return port_; }

  std::uint64_t queries_served() const noexcept { return served_.load(); }

 private:
  void log(LogLevel level, const std::string& msg) const {
    if (level > config_.log_level) return;
    static std::mutex mu;
    std::lock_guard lock(mu);
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
  }

  static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void send_error(httplib::Response& res, const ApiError& e) {
    errors_.fetch_add(1);
    send_json(res, e.status, e.to_json());
  }

  std::shared_ptr<const Summary> find(const std::string& id, httplib::Response& res) {
    auto snap = registry_.snapshot();
    auto it = snap->find(id);
    if (it == snap->end()) {
      send_error(res, {404, "UNKNOWN_SUMMARY", "no summary with id '" + id + "'", {{"id", id}}});
      return nullptr;
    }
    return it->second.second;
  }

  void routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Headers", "Content-Type"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server_.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200,
                {{"status", "ok"},
                 {"summaries", registry_.snapshot()->size()},
                 {"queries_served", served_.load()},
                 {"errors", errors_.load()}});
    });

    server_.Get("/summaries", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& [id, entry] : *registry_.snapshot()) {
        const auto& s = *entry.second;
        list.push_back({{"id", id},
                        {"n", s.cardinality()},
                        {"attributes", s.schema().arity()},
                        {"statistic_count", s.statistics().size()},
                        {"metadata", s.metadata()}});
      }
      send_json(res, 200, {{"summaries", list}});
    });

    server_.Get(R"(/summaries/([^/]+)/schema)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = req.matches[1].str();
      if (auto s = find(id, res)) send_json(res, 200, schema_view(id, *s));
    });

    server_.Post(R"(/summaries/([^/]+)/query)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = req.matches[1].str();
      auto s = find(id, res);
      if (!s) return;
      std::string sql;
      try {
        const auto body = nlohmann::json::parse(req.body);
        sql = body.at("sql").get<std::string>();
      } catch (const std::exception& e) {
        send_error(res, {400, "PARSE_ERROR", "request body must be {\"sql\": \"...\"}", {{"reason", e.what()}}});
        return;
      }
      try {
        const auto plan = parse_query(sql, s->schema());
        const auto ans = answer(*s, plan);
        auto out = groups_to_json(*s, plan, ans);
        out["wall_ms"] = ans.wall_ms;
        served_.fetch_add(1);
        log(LogLevel::Debug, "query " + id + " groups=" + std::to_string(ans.groups.size()));
        send_json(res, 200, out);
      } catch (const QueryParseError& e) {
        send_error(res, {400, "PARSE_ERROR", e.what(), {{"sql", sql}}});
      } catch (const PlanTooLargeError& e) {
        send_error(res, {400, "PLAN_TOO_LARGE", e.what(), {{"sql", sql}, {"max_groups", kMaxGroups}}});
      } catch (const std::exception& e) {
        log(LogLevel::Error, std::string("query failed: ") + e.what());
        send_error(res, {500, "INTERNAL", e.what(), {{"sql", sql}}});
      }
    });

    // Unmatched routes and anything else that ends up non-2xx without a body.
    server_.set_error_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      const int status = res.status;
      send_error(res, {status, "INTERNAL", "no handler for " + req.method + " " + req.path, nlohmann::json::object()});
    });

    server_.set_exception_handler([this](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string msg = "unknown failure";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        msg = e.what();
      } catch (...) {
      }
      send_error(res, {500, "INTERNAL", msg, nlohmann::json::object()});
    });

    server_.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
      log(LogLevel::Debug, req.method + " " + req.path + " -> " + std::to_string(res.status));
    });
  }

  ServiceConfig config_;
  Registry registry_;
  httplib::Server server_;
  int port_ = -1;
  std::atomic<std::uint64_t> served_{0};
  std::atomic<std::uint64_t> errors_{0};
};

}  // namespace maxent::service
