#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "timearena/fraction.hpp"
#include "timearena/task_model.hpp"

namespace timearena {

enum class FeedbackKind {
  kInvalidAction,
  kNonexistentObject,
  kWrongInput,
  kAlreadyCompleted,
  kMismatchedObject,
  kOccupiedObject,
  kActionStart,
  kActionCompletion,
  kWaitAck,
  kTimePrompt,
  kEpisodeEnd,
};

std::string feedback_kind_name(FeedbackKind kind);
std::optional<FeedbackKind> feedback_kind_from_name(const std::string& name);
bool is_error_kind(FeedbackKind kind);

struct Feedback {
  FeedbackKind kind = FeedbackKind::kInvalidAction;
  std::string rendering;
  std::vector<std::string> refs;        // involved action/object ids
  int action_index = -1;                // matched set action, when any
};

// Bit-exact feedback templates. Sentences the environment emits are built
// only through these.
namespace feedback_text {
std::string action_start(const std::string& phrase, int minutes);
std::string completion(const std::string& object, const std::string& state);
std::string wait_ack();
std::string time_prompt(int minute);
std::string occupied(const std::string& object);
std::string agent_occupied();
std::string wrong_input(const std::string& verb_phrase, const std::string& object,
                        const std::string& state);
std::string invalid(const std::string& phrase);
std::string nonexistent(const std::string& object);
// The published example spells this "perfrom"; the corrected spelling is
// used throughout.
std::string mismatched(const std::string& verb_phrase, const std::string& object);
std::string already_completed(const std::string& phrase);
}  // namespace feedback_text

struct ActionRequest {
  bool is_wait = false;
  bool parseable = false;
  std::string verb;
  std::string connector;
  std::vector<std::string> objects;
  std::string phrase;   // canonical token form used in messages
  std::string raw_text;
};

// Extracts the last recognizable action phrase from free-form agent text.
// Phrases with a known verb (or the bare token "wait") win over fallback
// <word> <known-object> matches; if nothing matches, the request carries
// the first line of the text and parseable stays false.
ActionRequest parse_action(const std::string& raw, const Vocabulary& vocab,
                           const std::vector<std::string>& object_names);

enum class OutcomeReason { kAllDone, kTimeOut, kErrorStreak };
std::string outcome_reason_name(OutcomeReason reason);

struct TaskProgress {
  std::string task_id;
  Fraction max_progress_pct;
  int minute_of_max = 1;
};

struct EpisodeOutcome {
  OutcomeReason reason = OutcomeReason::kTimeOut;
  Fraction final_progress_pct;
  std::optional<int> completion_minute;  // set only when progress reached 100
  int max_progress_minute = 1;           // minute the episode-best progress was reached
  int end_clock = 0;
  int turns = 0;
  std::vector<TaskProgress> per_task;

  std::string to_json() const;
  static EpisodeOutcome from_json(const std::string& text);
};

struct TurnRecord {
  int minute = 0;           // minute the agent was prompted
  std::string agent_text;
  FeedbackKind kind = FeedbackKind::kInvalidAction;
  std::string feedback_text;  // full environment response for the turn
  Fraction progress_pct;      // after the turn resolved
  int error_streak = 0;

  std::string to_json() const;
  static TurnRecord from_json(const std::string& text);
};

// One live episode: a single agent against a task set, one minute per step.
// Deterministic: the same set and the same sequence of submitted texts
// always produce byte-identical transcripts.
class Episode {
 public:
  explicit Episode(const TaskSet& set, std::optional<int> time_limit_override = std::nullopt);

  const TaskSet& set() const { return *set_; }
  int clock() const { return clock_; }
  int time_limit() const { return time_limit_; }
  Fraction progress() const { return progress_; }
  int error_streak() const { return error_streak_; }
  bool finished() const { return outcome_.has_value(); }
  const EpisodeOutcome& outcome() const;

  // "In t=<clock>, your action is:" -- only valid while the episode is live.
  std::string prompt() const;

  // Resolves one agent turn and returns the environment response block:
  // the primary feedback line plus any completion lines that surfaced
  // before the agent can act again.
  std::string submit(const std::string& agent_text);

  const std::vector<TurnRecord>& transcript() const { return transcript_; }
  std::string trajectory_jsonl() const;
  // (minute, progress) pairs at each progress change, where `minute` is the
  // last minute the finishing work occupied.
  const std::vector<std::pair<int, Fraction>>& progress_history() const {
    return progress_history_;
  }

  // Validation without side effects (used by probing agents and metrics).
  Feedback probe(const ActionRequest& request) const { return validate(request); }
  // Set actions that would start right now.
  std::vector<int> startable_actions() const;
  bool action_startable(int index) const { return startable(index); }
  bool action_completed(int index) const { return completed_[index]; }
  bool action_started(int index) const;
  const std::string& object_state(const std::string& name) const;
  bool object_occupied(const std::string& name) const;

  // Structural soundness checks (occupancy, exclusivity, accounting).
  // Throws std::logic_error on violation; used heavily by the fuzz suite.
  void check_invariants() const;

 private:
  struct InFlight {
    int action = 0;
    int start = 0;
    int completes = 0;  // minute the completion event fires
  };

  Feedback validate(const ActionRequest& request) const;
  bool startable(int index) const;
  void start_action(int index);
  void advance_one_minute(std::vector<std::string>& lines);
  void finish(OutcomeReason reason);

  const TaskSet* set_;
  int time_limit_;
  std::vector<int> phrase_prev_;  // earlier action with an identical phrase, or -1
  int clock_ = 1;
  std::map<std::string, std::string> object_state_;
  std::map<std::string, int> occupied_by_;  // object -> in-flight action index
  std::optional<int> agent_busy_until_;
  std::vector<InFlight> in_flight_;  // kept in start order
  std::vector<bool> completed_;
  int completed_duration_ = 0;
  Fraction progress_;
  int max_progress_minute_ = 1;
  int error_streak_ = 0;
  int turns_ = 0;
  std::vector<int> task_completed_duration_;
  std::vector<TaskProgress> per_task_;
  std::vector<std::pair<int, Fraction>> progress_history_;
  std::vector<TurnRecord> transcript_;
  std::optional<EpisodeOutcome> outcome_;
};

}  // namespace timearena
