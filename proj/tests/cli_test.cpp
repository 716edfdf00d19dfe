// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <regex>
#include <thread>

#include "aquafeed/event_log.hpp"
#include "httplib.h"
#include "json.hpp"
#include "test_util.hpp"

namespace aquafeed {
namespace {

using J = nlohmann::json;
using testing::run_command;

std::string cli() { return testing::cli_path(); }
std::string fx(const char* name) { return testing::fixture(name).string(); }

std::string compute_args() {
  return " compute --detections-a " + fx("detections_a.json") + " --detections-b " + fx("detections_b.json") +
         " --depth-a " + fx("depth_a.dpth") + " --depth-b " + fx("depth_b.dpth") + " --intrinsics " +
         fx("intrinsics.json");
}

// A child process with stdout and stderr redirected to a file.
class Child {
 public:
  Child(const std::vector<std::string>& argv, std::filesystem::path log) : log_(std::move(log)) {
    pid_ = ::fork();
    if (pid_ == 0) {
      FILE* f = std::freopen(log_.c_str(), "w", stdout);
      if (f == nullptr) _exit(127);
      ::dup2(::fileno(stdout), STDERR_FILENO);
      std::vector<char*> args;
      for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
      args.push_back(nullptr);
      ::execv(args[0], args.data());
      _exit(127);
    }
  }
  ~Child() { stop(); }

  std::string output() const { return testing::slurp(log_); }

  // Waits until the output matches `re`; returns the first capture group.
  std::optional<std::string> wait_for(const std::regex& re, std::chrono::seconds limit) const {
    const auto deadline = std::chrono::steady_clock::now() + limit;
    while (std::chrono::steady_clock::now() < deadline) {
      std::smatch m;
      const std::string text = output();
      if (std::regex_search(text, m, re)) return m.size() > 1 ? m[1].str() : m[0].str();
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    return std::nullopt;
  }

  int stop() {
    if (pid_ <= 0) return status_;
    ::kill(pid_, SIGTERM);
    int st = 0;
    ::waitpid(pid_, &st, 0);
    pid_ = -1;
    status_ = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return status_;
  }

 private:
  pid_t pid_ = -1;
  int status_ = -1;
  std::filesystem::path log_;
};

TEST(Cli, HelpListsSubcommandsAndFlags) {
  const auto r = run_command(cli() + " --help");
  EXPECT_EQ(r.exit_code, 0);
  for (const char* s : {"serve", "simulate", "compute", "replay", "--broker-url", "--config", "--seed", "--speed",
                        "--format", "--log-level"}) {
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
  }
  EXPECT_NE(run_command(cli()).exit_code, 0);
}

TEST(Cli, RejectsBadGlobalFlags) {
  EXPECT_NE(run_command(cli() + " --speed 0 simulate --offline --duration-days 1").exit_code, 0);
  EXPECT_NE(run_command(cli() + " --format xml" + compute_args()).exit_code, 0);
  EXPECT_NE(run_command(cli() + " --log-level loud" + compute_args()).exit_code, 0);
}

TEST(Cli, UnreachableBrokerFailsFast) {
  testing::TempDir dir;
  const auto start = std::chrono::steady_clock::now();
  const auto r = run_command(cli() + " --broker-url mqtt://127.0.0.1:1 serve --http-port 0 --log-dir " +
                             dir.path().string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.out.find("cannot reach broker"), std::string::npos);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(20));
  EXPECT_EQ(run_command(cli() + " --broker-url mqtt://127.0.0.1:1 simulate --duration-days 1").exit_code, 2);
  EXPECT_NE(run_command(cli() + " --broker-url http://x serve").exit_code, 0);
}

TEST(Cli, ComputeWorkedExampleText) {
  const auto r = run_command(cli() + compute_args());
  EXPECT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("total: 9.529 g/day"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("fused count: 13"), std::string::npos) << r.out;
}

TEST(Cli, ComputeWorkedExampleMachine) {
  const auto r = run_command(cli() + " --format machine" + compute_args() + " 2>/dev/null");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const J doc = J::parse(r.out);
  EXPECT_NEAR(doc["total_grams_per_day"].get<double>(), 9.529, 1e-9);
  EXPECT_EQ(doc["fused_count"], 13);
  EXPECT_EQ(doc["count_a"], 12);
  EXPECT_EQ(doc["count_b"], 13);
  ASSERT_EQ(doc["fish"].size(), 2u);
  EXPECT_EQ(doc["fish"][0]["band"], "[5, 20) g");
}

TEST(Cli, ComputeCustomTableAndMethod) {
  testing::TempDir dir;
  std::ofstream(dir / "table.json")
      << R"([{"lower_g": 0, "upper_g": null, "percent_min": 2, "percent_max": 2}])";
  const auto r = run_command(cli() + " --format machine" + compute_args() + " --table " +
                             (dir / "table.json").string() + " 2>/dev/null");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NEAR(J::parse(r.out)["total_grams_per_day"].get<double>(), 13 * 14.66 * 0.02, 1e-6);

  // The literal reading of the printed length formula is f / distance.
  const auto lit = run_command(cli() + " --format machine" + compute_args() + " --method eq3-literal 2>/dev/null");
  ASSERT_EQ(lit.exit_code, 0) << lit.out;
  const double fixture_length_m = 0.1000004524839166;
  EXPECT_NEAR(J::parse(lit.out)["fish"][0]["length_cm"].get<double>(), 500.0 / fixture_length_m, 1e-6);
}

TEST(Cli, ComputeCorruptDepthNamesFileAndOffset) {
  testing::TempDir dir;
  std::string bytes = testing::slurp(testing::fixture("depth_b.dpth"));
  bytes.resize(1000);
  std::ofstream(dir / "bad.dpth", std::ios::binary) << bytes;
  const auto r = run_command(cli() + " compute --detections-a " + fx("detections_a.json") + " --detections-b " +
                             fx("detections_b.json") + " --depth-a " + fx("depth_a.dpth") + " --depth-b " +
                             (dir / "bad.dpth").string() + " --intrinsics " + fx("intrinsics.json"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("bad.dpth"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("byte offset"), std::string::npos) << r.out;
}

TEST(Cli, ComputeMissingInputs) {
  EXPECT_NE(run_command(cli() + " compute --intrinsics /nonexistent.json").exit_code, 0);
  EXPECT_NE(run_command(cli() + " compute --detections-a /nonexistent.json --intrinsics " + fx("intrinsics.json"))
                .exit_code,
            0);
}

TEST(Cli, ComputeNoFish) {
  const auto r = run_command(cli() + " compute --detections-a " + fx("detections_empty_a.json") +
                             " --detections-b " + fx("detections_empty_b.json") + " --depth-a " + fx("depth_a.dpth") +
                             " --depth-b " + fx("depth_b.dpth") + " --intrinsics " + fx("intrinsics.json"));
  EXPECT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("no fish"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("total: 0.000 g/day"), std::string::npos) << r.out;
}

TEST(Cli, ReplayEmptyTruncatedAndStrict) {
  testing::TempDir dir;
  const auto empty = run_command(cli() + " --format machine replay " + (dir / "t7.aqlg").string());
  EXPECT_NE(empty.exit_code, 0);

  {
    EventLog log(dir / "t7.aqlg");
  }
  const auto fresh = run_command(cli() + " --format machine replay " + (dir / "t7.aqlg").string() + " 2>/dev/null");
  ASSERT_EQ(fresh.exit_code, 0) << fresh.out;
  EXPECT_EQ(J::parse(fresh.out)["tank_id"], "t7");
  EXPECT_EQ(J::parse(fresh.out)["events_replayed"], 0);

  {
    EventLog log(dir / "t7.aqlg");
    for (int i = 1; i <= 4; ++i) {
      log.append({static_cast<std::uint64_t>(i), 1000LL * i,
                  TelemetryObserved{{"t7", "t7-ph", 1000LL * i, i, ReadingKind::Ph, 7.0, ReadingUnit::Ph}}});
    }
  }
  const auto path = dir / "t7.aqlg";
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 7);
  const auto warn = run_command(cli() + " replay " + path.string());
  EXPECT_EQ(warn.exit_code, 0) << warn.out;
  EXPECT_NE(warn.out.find("warning"), std::string::npos);
  EXPECT_NE(warn.out.find("after seq 3"), std::string::npos) << warn.out;
  EXPECT_EQ(run_command(cli() + " replay --strict " + path.string()).exit_code, 3);
}

TEST(Cli, OfflineSimulationIsDeterministic) {
  testing::TempDir dir;
  const std::string base = cli() + " --seed 11 --format machine simulate --offline --duration-days 1 --emit-log ";
  const auto a = run_command(base + (dir / "a.log").string() + " 2>/dev/null");
  const auto b = run_command(base + (dir / "b.log").string() + " 2>/dev/null");
  ASSERT_EQ(a.exit_code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  const std::string la = testing::slurp(dir / "a.log");
  EXPECT_GT(la.size(), 100000u);
  EXPECT_EQ(la, testing::slurp(dir / "b.log"));
  const auto c = run_command(cli() + " --seed 12 simulate --offline --duration-days 1 --emit-log " +
                             (dir / "c.log").string());
  EXPECT_NE(la, testing::slurp(dir / "c.log"));
  EXPECT_EQ(J::parse(a.out)["days_elapsed"], 1);
}

TEST(Cli, ServeAndSimulateOverBroker) {
  testing::TempDir dir;
  Child broker({AQUAFEED_BROKER_PATH, "0"}, dir / "broker.out");
  const auto port = broker.wait_for(std::regex("(\\d+)\\n"), std::chrono::seconds(10));
  ASSERT_TRUE(port) << broker.output();
  const std::string url = "mqtt://127.0.0.1:" + *port;

  Child serve({cli(), "--broker-url", url, "--format", "machine", "serve", "--http-port", "0", "--log-dir",
               (dir / "logs").string()},
              dir / "serve.out");
  const auto http = serve.wait_for(std::regex("\"http_port\":(\\d+)"), std::chrono::seconds(15));
  ASSERT_TRUE(http) << serve.output();

  // 7.2 simulated hours at 3600x: the 06:00 window opens after about 6 s.
  Child simulate({cli(), "--broker-url", url, "--speed", "3600", "--seed", "5", "simulate", "--duration-days", "0.3"},
                 dir / "sim.out");

  httplib::Client client("127.0.0.1", std::stoi(*http));
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
  J decisions;
  while (std::chrono::steady_clock::now() < deadline) {
    auto res = client.Get("/api/v1/tanks/t1/decisions");
    if (res && res->status == 200) {
      decisions = J::parse(res->body);
      if (decisions["total"].get<int>() >= 1 && !decisions["decisions"][0]["outcome"].is_null()) break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(250));
  }
  ASSERT_GE(decisions["total"].get<int>(), 1) << serve.output() << simulate.output();
  const J& d = decisions["decisions"][0];
  EXPECT_EQ(d["trigger"], "scheduled");
  EXPECT_EQ(d["outcome"]["status"], "completed");
  EXPECT_EQ(serve.stop(), 0);
  simulate.stop();
  EXPECT_TRUE(std::filesystem::exists(dir / "logs" / "t1.aqlg"));
  const auto replay = run_command(cli() + " --format machine replay " + (dir / "logs" / "t1.aqlg").string() +
                                  " 2>/dev/null");
  ASSERT_EQ(replay.exit_code, 0);
  EXPECT_GE(J::parse(replay.out)["state"]["decisions"].size(), 1u);
}

}  // namespace
}  // namespace aquafeed
