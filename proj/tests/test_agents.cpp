#include <cstdio>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "test_helpers.hpp"
#include "timearena/agents.hpp"
#include "timearena/oracle.hpp"

using namespace timearena;
using ta_test::make_set;

#ifndef TA_BRIDGE_SCRIPT
#define TA_BRIDGE_SCRIPT "tests/bridges/replay_bridge.py"
#endif

TEST_CASE("wait-only times out with zero progress") {
  const TaskSet set = make_set({"make_tea"});
  auto agent = make_wait_only_agent();
  const EpisodeResult result = run_episode(set, *agent);
  CHECK(result.outcome.reason == OutcomeReason::kTimeOut);
  CHECK(result.outcome.final_progress_pct == Fraction(0));
  CHECK(result.outcome.end_clock == 41);
  CHECK(static_cast<int>(result.transcript.size()) == 40);
}

TEST_CASE("replaying the brute-force schedule finishes at its makespan") {
  for (const auto& id : {"beef_fried_rice", "coffee", "wash_clothes"}) {
    const TaskSet set = make_set({id});
    const ScheduleResult schedule = brute_force_minimal_time(set);
    auto agent = make_replay_agent(schedule);
    const EpisodeResult result = run_episode(set, *agent);
    INFO("task: ", id);
    REQUIRE(result.outcome.reason == OutcomeReason::kAllDone);
    CHECK(*result.outcome.completion_minute == schedule.makespan_min);
  }
}

TEST_CASE("random-valid is deterministic under a seed and never errors") {
  const TaskSet set = make_set({"noodle_dish"});
  auto run = [&](std::uint64_t seed) {
    auto agent = make_random_valid_agent(seed);
    return run_episode(set, *agent);
  };
  const EpisodeResult a = run(17);
  const EpisodeResult b = run(17);
  CHECK(a.trajectory_jsonl == b.trajectory_jsonl);
  const EpisodeResult c = run(18);
  CHECK(a.trajectory_jsonl != c.trajectory_jsonl);  // takes a different path

  for (const auto& rec : a.transcript) {
    CHECK(!is_error_kind(rec.kind));
  }
  CHECK(a.outcome.reason == OutcomeReason::kAllDone);  // valid starts eventually finish
}

TEST_CASE("greedy planner reproduces the greedy makespan everywhere") {
  const std::vector<std::vector<std::string>> sets = {
      {"beef_fried_rice"},
      {"pizza"},
      {"make_tea", "wash_clothes"},
      {"garden_bed", "iron_suit", "coffee"},
  };
  for (const auto& ids : sets) {
    const TaskSet set = make_set(ids);
    const int expected = greedy_minimal_time(set).makespan_min;
    auto agent = make_greedy_planner_agent();
    const EpisodeResult result = run_episode(set, *agent);
    INFO("set: ", set.id);
    REQUIRE(result.outcome.reason == OutcomeReason::kAllDone);
    CHECK(result.outcome.final_progress_pct == Fraction(100));
    CHECK(*result.outcome.completion_minute == expected);
    for (const auto& rec : result.transcript) CHECK(!is_error_kind(rec.kind));
  }
}

TEST_CASE("agent config round-trips and rejects nonsense") {
  const AgentConfig config = AgentConfig::from_json(
      R"({"kind":"random_valid","seed":7,"timeout_seconds":5})");
  CHECK(config.kind == "random_valid");
  CHECK(config.seed == 7);
  const TaskSet set = make_set({"make_tea"});
  CHECK_THROWS_AS(make_agent(AgentConfig{.kind = "telepathy"}, set), ValidationError);
  CHECK_THROWS_AS(make_agent(AgentConfig{.kind = "external"}, set), ValidationError);
}

TEST_CASE("external bridge matches the in-process replay byte for byte") {
  const TaskSet set = make_set({"beef_fried_rice"});
  const ScheduleResult schedule = greedy_minimal_time(set);

  const std::string schedule_path = "/tmp/ta_bridge_schedule.json";
  {
    std::ofstream out(schedule_path);
    out << schedule.to_json();
  }

  auto in_process = make_replay_agent(schedule);
  const EpisodeResult expected = run_episode(set, *in_process);

  auto external = make_external_agent("python3 " + std::string(TA_BRIDGE_SCRIPT) + " " +
                                      schedule_path);
  const EpisodeResult bridged = run_episode(set, *external);
  CHECK(bridged.trajectory_jsonl == expected.trajectory_jsonl);
  CHECK(bridged.outcome.reason == OutcomeReason::kAllDone);
  std::remove(schedule_path.c_str());
}

TEST_CASE("external agents can also sit behind an HTTP endpoint") {
  const TaskSet set = make_set({"garden_bed"});
  const ScheduleResult schedule = greedy_minimal_time(set);
  std::map<int, std::string> plan;
  for (const auto& start : schedule.timeline) plan[start.minute] = start.phrase;

  httplib::Server server;
  server.Post("/act", [&](const httplib::Request& req, httplib::Response& res) {
    const auto msg = nlohmann::json::parse(req.body);
    if (msg.value("type", "") == "end") {
      res.set_content("{}", "application/json");
      return;
    }
    const std::string prompt = msg.at("prompt").get<std::string>();
    const int minute = std::stoi(prompt.substr(prompt.find("t=") + 2));
    nlohmann::json reply;
    reply["type"] = "action";
    reply["text"] = plan.count(minute) ? plan.at(minute) : "wait";
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serving([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto agent = make_external_agent("http://127.0.0.1:" + std::to_string(port) + "/act", 10);
  const EpisodeResult result = run_episode(set, *agent);
  server.stop();
  serving.join();
  REQUIRE(result.outcome.reason == OutcomeReason::kAllDone);
  CHECK(*result.outcome.completion_minute == schedule.makespan_min);
}

TEST_CASE("external protocol violations surface as harness errors") {
  const TaskSet set = make_set({"make_tea"});

  SUBCASE("malformed reply") {
    auto agent = make_external_agent("python3 " + std::string(TA_BRIDGE_SCRIPT) + " --garble");
    CHECK_THROWS_AS(run_episode(set, *agent), HarnessError);
  }
  SUBCASE("timeout") {
    auto agent =
        make_external_agent("python3 " + std::string(TA_BRIDGE_SCRIPT) + " --stall", 1);
    CHECK_THROWS_AS(run_episode(set, *agent), HarnessError);
  }
  SUBCASE("dead process") {
    auto agent = make_external_agent("false");
    CHECK_THROWS_AS(run_episode(set, *agent), HarnessError);
  }
}
