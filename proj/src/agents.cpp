#include "timearena/agents.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <map>
#include <random>

#include "json.hpp"

#define CPPHTTPLIB_NO_EXCEPTIONS
#include "httplib.h"

#include "timearena/oracle.hpp"
#include "timearena/task_model.hpp"

namespace timearena {

namespace {

class ReplayAgent final : public Agent {
 public:
  explicit ReplayAgent(ScheduleResult schedule) : schedule_(std::move(schedule)) {
    for (const auto& start : schedule_.timeline) plan_[start.minute] = start.phrase;
  }
  std::string name() const override { return "replay"; }
  std::string next_action(const AgentTurnInput& input) override {
    auto it = plan_.find(input.minute);
    return it == plan_.end() ? "wait" : it->second;
  }

 private:
  ScheduleResult schedule_;
  std::map<int, std::string> plan_;
};

class WaitOnlyAgent final : public Agent {
 public:
  std::string name() const override { return "wait-only"; }
  std::string next_action(const AgentTurnInput&) override { return "wait"; }
};

class RandomValidAgent final : public Agent {
 public:
  explicit RandomValidAgent(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "random-valid"; }
  void bind(const Episode& episode) override { episode_ = &episode; }
  std::string next_action(const AgentTurnInput&) override {
    const std::vector<int> startable = episode_->startable_actions();
    if (startable.empty()) return "wait";
    // Explicit modulo keeps transcripts identical across standard libraries.
    const auto idx = static_cast<size_t>(rng_() % startable.size());
    return episode_->set().actions[startable[idx]].phrase();
  }

 private:
  const Episode* episode_ = nullptr;
  std::mt19937_64 rng_;
};

// Live execution of the greedy priority list: each turn emit the first
// list entry that can start right now. This is exactly the heuristic's own
// simulation loop, so the agent finishes at the greedy makespan and
// re-plans for free after any drift.
class GreedyPlannerAgent final : public Agent {
 public:
  std::string name() const override { return "greedy-planner"; }
  void bind(const Episode& episode) override {
    episode_ = &episode;
    priority_ = greedy_priority_order(episode.set());
  }
  std::string next_action(const AgentTurnInput&) override {
    for (int idx : priority_) {
      if (!episode_->action_started(idx) && episode_->action_startable(idx)) {
        return episode_->set().actions[idx].phrase();
      }
    }
    return "wait";
  }

 private:
  const Episode* episode_ = nullptr;
  std::vector<int> priority_;
};

nlohmann::json turn_message(const AgentTurnInput& input) {
  nlohmann::json msg;
  msg["type"] = "turn";
  msg["instruction"] = input.instruction ? *input.instruction : "";
  msg["history"] = nlohmann::json::array();
  if (input.history != nullptr) {
    for (const auto& rec : *input.history) {
      msg["history"].push_back({{"minute", rec.minute},
                                {"agent", rec.agent_text},
                                {"feedback", rec.feedback_text}});
    }
  }
  msg["prompt"] = input.prompt;
  return msg;
}

std::string parse_action_reply(const std::string& line) {
  nlohmann::json msg;
  try {
    msg = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw HarnessError(std::string("external agent sent malformed JSON: ") + e.what());
  }
  if (msg.value("type", "") != "action" || !msg.contains("text")) {
    throw HarnessError("external agent protocol violation: expected {\"type\":\"action\",...}");
  }
  return msg["text"].get<std::string>();
}

// Line-delimited JSON over a child process's stdio.
class ProcessBridge {
 public:
  explicit ProcessBridge(const std::string& command) {
    // a bridge dying mid-write must surface as EPIPE, not kill the harness
    static const int sigpipe_ignored = [] {
      signal(SIGPIPE, SIG_IGN);
      return 0;
    }();
    (void)sigpipe_ignored;
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
      throw HarnessError("pipe() failed: " + std::string(std::strerror(errno)));
    }
    pid_ = fork();
    if (pid_ < 0) throw HarnessError("fork() failed: " + std::string(std::strerror(errno)));
    if (pid_ == 0) {
      setpgid(0, 0);  // own process group, so teardown reaches grandchildren
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    setpgid(pid_, pid_);  // mirror the child's call; whichever runs first wins
    close(to_child[0]);
    close(from_child[1]);
    in_ = to_child[1];
    out_ = from_child[0];
  }

  ~ProcessBridge() {
    if (in_ >= 0) close(in_);
    if (out_ >= 0) close(out_);
    if (pid_ > 0) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == 0) {
        // the whole group; /bin/sh may have forked the command
        if (kill(-pid_, SIGTERM) != 0) kill(pid_, SIGTERM);
        waitpid(pid_, &status, 0);
      }
    }
  }

  void send_line(const std::string& line) {
    std::string payload = line + "\n";
    size_t off = 0;
    while (off < payload.size()) {
      const ssize_t n = write(in_, payload.data() + off, payload.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw HarnessError("external agent pipe closed: " + std::string(std::strerror(errno)));
      }
      off += static_cast<size_t>(n);
    }
  }

  std::string read_line(int timeout_seconds) {
    for (;;) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      struct pollfd pfd{out_, POLLIN, 0};
      const int ready = poll(&pfd, 1, timeout_seconds * 1000);
      if (ready == 0) throw HarnessError("external agent timed out");
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw HarnessError("poll() failed: " + std::string(std::strerror(errno)));
      }
      char chunk[4096];
      const ssize_t n = read(out_, chunk, sizeof(chunk));
      if (n == 0) throw HarnessError("external agent closed its output");
      if (n < 0) {
        if (errno == EINTR) continue;
        throw HarnessError("read() failed: " + std::string(std::strerror(errno)));
      }
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

 private:
  pid_t pid_ = -1;
  int in_ = -1;
  int out_ = -1;
  std::string buffer_;
};

class ExternalAgent final : public Agent {
 public:
  ExternalAgent(std::string endpoint, int timeout_seconds)
      : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {
    if (endpoint_.rfind("http://", 0) != 0 && endpoint_.rfind("https://", 0) != 0) {
      bridge_ = std::make_unique<ProcessBridge>(endpoint_);
    }
  }

  std::string name() const override { return "external"; }

  std::string next_action(const AgentTurnInput& input) override {
    const std::string payload = turn_message(input).dump();
    if (bridge_) {
      bridge_->send_line(payload);
      return parse_action_reply(bridge_->read_line(timeout_seconds_));
    }
    return parse_action_reply(http_post(payload));
  }

  void on_end(const EpisodeOutcome& outcome) override {
    nlohmann::json msg;
    msg["type"] = "end";
    msg["outcome"] = outcome_reason_name(outcome.reason);
    msg["progress"] = outcome.final_progress_pct.to_double();
    if (bridge_) {
      try {
        bridge_->send_line(msg.dump());
      } catch (const HarnessError&) {
        // the bridge may already be gone once the episode is over
      }
      return;
    }
    http_post(msg.dump());
  }

 private:
  std::string http_post(const std::string& payload) {
    auto slash = endpoint_.find('/', endpoint_.find("//") + 2);
    const std::string host = slash == std::string::npos ? endpoint_ : endpoint_.substr(0, slash);
    const std::string path = slash == std::string::npos ? "/" : endpoint_.substr(slash);
    httplib::Client client(host);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_write_timeout(timeout_seconds_, 0);
    auto res = client.Post(path, payload, "application/json");
    if (!res) throw HarnessError("external agent HTTP request failed");
    if (res->status != 200) {
      throw HarnessError("external agent HTTP status " + std::to_string(res->status));
    }
    return res->body;
  }

  std::string endpoint_;
  int timeout_seconds_;
  std::unique_ptr<ProcessBridge> bridge_;
};

}  // namespace

std::unique_ptr<Agent> make_replay_agent(ScheduleResult schedule) {
  return std::make_unique<ReplayAgent>(std::move(schedule));
}
std::unique_ptr<Agent> make_wait_only_agent() { return std::make_unique<WaitOnlyAgent>(); }
std::unique_ptr<Agent> make_random_valid_agent(std::uint64_t seed) {
  return std::make_unique<RandomValidAgent>(seed);
}
std::unique_ptr<Agent> make_greedy_planner_agent() {
  return std::make_unique<GreedyPlannerAgent>();
}
std::unique_ptr<Agent> make_external_agent(std::string endpoint, int timeout_seconds) {
  return std::make_unique<ExternalAgent>(std::move(endpoint), timeout_seconds);
}

AgentConfig AgentConfig::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("agent config: ") + e.what());
  }
  AgentConfig config;
  config.kind = doc.at("kind").get<std::string>();
  config.seed = doc.value("seed", 0ULL);
  config.endpoint = doc.value("endpoint", "");
  config.schedule_method = doc.value("schedule_method", "greedy");
  config.timeout_seconds = doc.value("timeout_seconds", 60);
  return config;
}

std::string AgentConfig::to_json() const {
  nlohmann::json doc;
  doc["kind"] = kind;
  doc["seed"] = seed;
  doc["endpoint"] = endpoint;
  doc["schedule_method"] = schedule_method;
  doc["timeout_seconds"] = timeout_seconds;
  return doc.dump();
}

std::unique_ptr<Agent> make_agent(const AgentConfig& config, const TaskSet& set) {
  if (config.kind == "wait_only") return make_wait_only_agent();
  if (config.kind == "random_valid") return make_random_valid_agent(config.seed);
  if (config.kind == "greedy_planner") return make_greedy_planner_agent();
  if (config.kind == "replay") {
    const ScheduleResult schedule = config.schedule_method == "brute_force"
                                        ? brute_force_minimal_time(set)
                                        : greedy_minimal_time(set);
    return make_replay_agent(schedule);
  }
  if (config.kind == "external") {
    if (config.endpoint.empty()) throw ValidationError("external agent needs an endpoint");
    return make_external_agent(config.endpoint, config.timeout_seconds);
  }
  throw ValidationError("unknown agent kind '" + config.kind + "'");
}

EpisodeResult run_episode(const TaskSet& set, Agent& agent,
                          std::optional<int> time_limit_override) {
  Episode episode(set, time_limit_override);
  agent.bind(episode);
  const std::string instruction = render_instruction(set);
  bool first = true;
  while (!episode.finished()) {
    AgentTurnInput input;
    input.instruction = first ? &instruction : nullptr;
    input.history = &episode.transcript();
    input.minute = episode.clock();
    input.prompt = episode.prompt();
    first = false;
    const std::string text = agent.next_action(input);
    episode.submit(text);
  }
  agent.on_end(episode.outcome());

  EpisodeResult result;
  result.set_id = set.id;
  result.outcome = episode.outcome();
  result.transcript = episode.transcript();
  result.trajectory_jsonl = episode.trajectory_jsonl();
  return result;
}

}  // namespace timearena
