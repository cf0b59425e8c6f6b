#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "timearena/engine.hpp"
#include "timearena/fraction.hpp"
#include "timearena/task_model.hpp"

namespace timearena {

// The six-way action taxonomy used in the analysis tables.
enum class TurnCategory {
  kValidAction,
  kWait,
  kInvalidActionOrObject,
  kDependencyViolation,
  kRepeatingCompleted,
  kObjectMismatched,
};
inline constexpr int kTurnCategoryCount = 6;
std::string turn_category_name(TurnCategory category);

// Feedback kind -> taxonomy bucket. Occupied-object failures count as
// dependency violations: the resource is not free *yet*.
TurnCategory classify_turn(FeedbackKind kind);

struct PerSetMetrics {
  std::string set_id;
  Fraction progress;  // P_i
  int minute = 1;     // T_i: minute the best progress was reached
  bool success = false;
};

struct MetricsReport {
  Fraction as;                 // average progress score
  Fraction cs;                 // completion speed (score per minute)
  Fraction cr;                 // completion rate, percent
  std::optional<Fraction> ct;  // average completion time; empty when no successes
  std::vector<PerSetMetrics> per_set;

  std::array<std::int64_t, kTurnCategoryCount> taxonomy{};
  std::map<std::string, std::int64_t> feedback_kind_counts;  // raw, remap-lossless
  std::int64_t necessary_waits = 0;
  std::int64_t unnecessary_waits = 0;

  std::string to_json() const;
};

// AS/CS/CR/CT over episode outcomes. A combined set counts as one task.
MetricsReport compute_metrics(const std::vector<std::pair<std::string, EpisodeOutcome>>& outcomes);

// Re-runs the transcript through the engine and classifies every wait:
// necessary when nothing else could have started that minute.
struct WaitBreakdown {
  std::int64_t necessary = 0;
  std::int64_t unnecessary = 0;
};
WaitBreakdown decompose_waits(const TaskSet& set, const std::vector<TurnRecord>& transcript,
                              std::optional<int> time_limit_override = std::nullopt);

// Per-minute progress step function, replayed through the engine.
std::vector<std::pair<int, Fraction>> progress_curve(
    const TaskSet& set, const std::vector<TurnRecord>& transcript,
    std::optional<int> time_limit_override = std::nullopt);

// CSV renderings (deterministic given inputs).
struct EpisodeForReport {
  std::string set_id;
  Scenario scenario = Scenario::kCooking;
  int task_count = 1;
  EpisodeOutcome outcome;
  std::vector<TurnRecord> transcript;
};

std::string metrics_csv(const std::string& agent_name,
                        const std::vector<EpisodeForReport>& episodes);
std::string taxonomy_csv(const std::string& agent_name,
                         const std::vector<EpisodeForReport>& episodes);
std::string waits_csv(const std::vector<EpisodeForReport>& episodes,
                      const std::vector<WaitBreakdown>& breakdowns);
std::string curve_csv(const std::vector<std::pair<int, Fraction>>& curve);

}  // namespace timearena
