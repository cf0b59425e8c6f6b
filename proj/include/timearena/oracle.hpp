#pragma once

#include <string>
#include <vector>

#include "timearena/engine.hpp"
#include "timearena/fraction.hpp"
#include "timearena/task_model.hpp"

namespace timearena {

struct LimitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ScheduleMethod { kGreedy, kBruteForce };
std::string schedule_method_name(ScheduleMethod method);

struct ScheduledStart {
  int minute = 0;
  int action_index = 0;
  std::string qualified_id;
  std::string phrase;
};

struct ScheduleResult {
  ScheduleMethod method = ScheduleMethod::kGreedy;
  int makespan_min = 0;
  std::vector<ScheduledStart> timeline;

  std::string to_json() const;
};

// The published greedy heuristic: non-occupying actions sorted by duration
// descending, prerequisites spliced in front via BFS, and the resulting
// priority list executed minute by minute under real engine timing.
ScheduleResult greedy_minimal_time(const TaskSet& set);

// Just the priority list (set action indices); the greedy planner agent
// live-executes it.
std::vector<int> greedy_priority_order(const TaskSet& set);

// Exhaustive minimal-makespan search under identical timing rules.
// Guarded to sets of at most `kBruteForceActionLimit` actions.
inline constexpr int kBruteForceActionLimit = 20;
ScheduleResult brute_force_minimal_time(const TaskSet& set);

struct OracleMetrics {
  Fraction cs;  // progress per minute at the schedule's makespan
  int ct = 0;   // the makespan itself
};
OracleMetrics oracle_metrics(const ScheduleResult& schedule);

}  // namespace timearena
