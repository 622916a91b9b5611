#include <gtest/gtest.h>

#include <future>
#include <thread>

#include "fixtures.hpp"
#include "maxent/service.hpp"

using namespace maxent;
using nlohmann::json;

namespace {

Summary grid_summary() {
  eval::SyntheticSpec spec;
  spec.domain_sizes = {12, 10, 4};
  spec.correlations = {{0, 1, 0.7}};
  spec.rows = 5000;
  const auto data = eval::synthetic_dataset(spec);
  BuildOptions opts;
  opts.statistics.pair_budget = 2;
  opts.statistics.bucket_budget = 40;
  return build_summary(data, opts).summary;
}

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    summary_ = new Summary(grid_summary());
    path_ = new std::string(::testing::TempDir() + "/grid.summary.json");
    save_summary(*summary_, *path_);
    service::ServiceConfig cfg;
    cfg.port = 0;
    cfg.max_concurrent = 8;
    cfg.summary_paths = {*path_};
    cfg.log_level = service::LogLevel::Error;
    svc_ = new service::Service(cfg);
    ASSERT_GT(svc_->bind(), 0);
    thread_ = new std::thread([] { svc_->listen_after_bind(); });
    svc_->wait_until_ready();
  }
  static void TearDownTestSuite() {
    svc_->stop();
    thread_->join();
    delete thread_;
    delete svc_;
    delete summary_;
    delete path_;
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", svc_->port());
    c.set_read_timeout(30, 0);
    return c;
  }
  httplib::Result query(const std::string& id, const std::string& sql) const {
    return client().Post("/summaries/" + id + "/query", json{{"sql", sql}}.dump(), "application/json");
  }

  static inline Summary* summary_ = nullptr;
  static inline std::string* path_ = nullptr;
  static inline service::Service* svc_ = nullptr;
  static inline std::thread* thread_ = nullptr;
};

}  // namespace

TEST_F(ServiceTest, Healthz) {
  auto r = client().Get("/healthz");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["status"], "ok");
}

TEST_F(ServiceTest, ListsSummaries) {
  auto r = client().Get("/summaries");
  ASSERT_TRUE(r);
  const auto j = json::parse(r->body);
  ASSERT_EQ(j["summaries"].size(), 1u);
  EXPECT_EQ(j["summaries"][0]["id"], "grid.summary");
  EXPECT_EQ(j["summaries"][0]["n"], 5000);
}

TEST_F(ServiceTest, SchemaView) {
  auto r = client().Get("/summaries/grid.summary/schema");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  const auto j = json::parse(r->body);
  EXPECT_EQ(j["attributes"].size(), 3u);
  EXPECT_EQ(j["statistic_count"], summary_->statistics().size());
  EXPECT_EQ(j["multi_d_statistics"].size(), summary_->statistics().multi_d_ids().size());
}

TEST_F(ServiceTest, TotalCount) {
  auto r = query("grid.summary", "SELECT COUNT(*) FROM R");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  const auto j = json::parse(r->body);
  ASSERT_EQ(j["groups"].size(), 1u);
  EXPECT_EQ(j["groups"][0]["rounded"], 5000);
  EXPECT_NEAR(j["groups"][0]["raw"].get<double>(), 5000.0, 1e-6);
  EXPECT_TRUE(j.contains("wall_ms"));
}

TEST_F(ServiceTest, ParseError) {
  auto r = query("grid.summary", "SELECT COUNT(*) FROM R WHERE a0 = 1 OR a1 = 2");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(json::parse(r->body)["error"]["code"], "PARSE_ERROR");
  auto bad = client().Post("/summaries/grid.summary/query", "not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body)["error"]["code"], "PARSE_ERROR");
}

TEST_F(ServiceTest, UnknownSummary) {
  auto r = query("nope", "SELECT COUNT(*) FROM R");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(json::parse(r->body)["error"]["code"], "UNKNOWN_SUMMARY");
  auto s = client().Get("/summaries/nope/schema");
  ASSERT_TRUE(s);
  EXPECT_EQ(s->status, 404);
}

TEST_F(ServiceTest, PlanTooLarge) {
  // 12 * 10 * 4 = 480 groups is fine; registering a wide summary tests the cap.
  auto wide = std::make_shared<const Summary>(
      Summary(fixtures::unit_schema({400, 400}), fixtures::make_stats({std::vector<std::int64_t>(400, 1),
                                                                       std::vector<std::int64_t>(400, 1)}, 400),
              VariableStore(std::vector<double>(800, 1.0)), json::object()));
  svc_->registry().add("wide", wide);
  auto r = query("wide", "SELECT A, B, COUNT(*) FROM R GROUP BY A, B");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(json::parse(r->body)["error"]["code"], "PLAN_TOO_LARGE");
}

TEST_F(ServiceTest, UnmatchedRouteHasErrorBody) {
  auto r = client().Get("/does/not/exist");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  EXPECT_TRUE(json::parse(r->body).contains("error"));
}

TEST_F(ServiceTest, Cors) {
  auto r = client().Get("/healthz");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
  auto o = client().Options("/summaries/grid.summary/query");
  ASSERT_TRUE(o);
  EXPECT_EQ(o->status, 204);
}

TEST_F(ServiceTest, ConcurrentQueriesAgree) {
  const std::string sql = "SELECT a0, COUNT(*) FROM R WHERE a1 IN [2,6] GROUP BY a0 ORDER BY CNT DESC LIMIT 5";
  std::vector<std::future<std::string>> futs;
  for (int i = 0; i < 100; ++i) {
    futs.push_back(std::async(std::launch::async, [&] {
      auto r = query("grid.summary", sql);
      if (!r) return "failed: " + httplib::to_string(r.error());
      if (r->status != 200) return "failed: status " + std::to_string(r->status);
      auto j = json::parse(r->body);
      j.erase("wall_ms");
      return j.dump();
    }));
  }
  const auto first = futs[0].get();
  EXPECT_EQ(first.rfind("failed", 0), std::string::npos) << first;
  for (std::size_t i = 1; i < futs.size(); ++i) EXPECT_EQ(futs[i].get(), first);
}

TEST_F(ServiceTest, MatchesLibraryAnswer) {
  const std::string sql = "SELECT a2, COUNT(*) FROM R WHERE a0 IN [3,7] GROUP BY a2";
  auto r = query("grid.summary", sql);
  ASSERT_TRUE(r);
  const auto j = json::parse(r->body);
  const auto loaded = load_summary(*path_);
  const auto ans = answer(loaded, sql);
  ASSERT_EQ(j["groups"].size(), ans.groups.size());
  for (std::size_t i = 0; i < ans.groups.size(); ++i) {
    EXPECT_EQ(j["groups"][i]["raw"].get<double>(), ans.groups[i].raw);
    EXPECT_EQ(j["groups"][i]["rounded"].get<std::int64_t>(), ans.groups[i].rounded);
  }
}

TEST(ServiceUnit, SummaryIdIsStem) {
  EXPECT_EQ(service::summary_id("/a/b/flights.json"), "flights");
}

TEST(ServiceUnit, ApiErrorShape) {
  const service::ApiError e{404, "UNKNOWN_SUMMARY", "missing", {{"id", "x"}}};
  const auto j = e.to_json();
  EXPECT_EQ(j["error"]["code"], "UNKNOWN_SUMMARY");
  EXPECT_EQ(j["error"]["detail"]["id"], "x");
}
