#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "timearena/engine.hpp"
#include "timearena/oracle.hpp"

namespace timearena {

// Raised when an external bridge misbehaves (timeout, protocol violation,
// dead process). Distinct from in-episode task failure: the harness records
// it separately and the episode does not count against the agent.
struct HarnessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AgentTurnInput {
  const std::string* instruction = nullptr;  // set on the first turn only
  const std::vector<TurnRecord>* history = nullptr;
  std::string prompt;
  int minute = 1;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual std::string next_action(const AgentTurnInput& input) = 0;
  // Called once before the first turn; agents that inspect live state
  // (random-valid, greedy-planner) keep the pointer.
  virtual void bind(const Episode& episode) {}
  // Called after the episode resolves.
  virtual void on_end(const EpisodeOutcome& outcome) {}
};

// Emits each scheduled action at its scheduled minute, "wait" otherwise.
std::unique_ptr<Agent> make_replay_agent(ScheduleResult schedule);
// Always waits; a floor baseline.
std::unique_ptr<Agent> make_wait_only_agent();
// Uniformly samples a currently startable action (seeded); waits when
// nothing can start. Never triggers an error feedback.
std::unique_ptr<Agent> make_random_valid_agent(std::uint64_t seed);
// Live-executes the greedy priority policy; reproduces the greedy
// schedule's makespan on every well-formed set.
std::unique_ptr<Agent> make_greedy_planner_agent();
// Bridges to an external process (line-delimited JSON over stdio) or to an
// HTTP endpoint when the endpoint string starts with http://.
std::unique_ptr<Agent> make_external_agent(std::string endpoint, int timeout_seconds = 60);

struct AgentConfig {
  std::string kind;  // replay | wait_only | random_valid | greedy_planner | external
  std::uint64_t seed = 0;
  std::string endpoint;
  std::string schedule_method = "greedy";  // for replay agents
  int timeout_seconds = 60;

  static AgentConfig from_json(const std::string& text);
  std::string to_json() const;
};
std::unique_ptr<Agent> make_agent(const AgentConfig& config, const TaskSet& set);

struct EpisodeResult {
  std::string set_id;
  EpisodeOutcome outcome;
  std::vector<TurnRecord> transcript;
  std::string trajectory_jsonl;
};

// Drives a full episode: instruction on the first turn, then
// prompt/response rounds until the engine reports an outcome.
EpisodeResult run_episode(const TaskSet& set, Agent& agent,
                          std::optional<int> time_limit_override = std::nullopt);

}  // namespace timearena
