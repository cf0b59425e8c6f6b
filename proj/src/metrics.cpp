#include "timearena/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace timearena {

std::string turn_category_name(TurnCategory category) {
  switch (category) {
    case TurnCategory::kValidAction: return "valid_action";
    case TurnCategory::kWait: return "wait";
    case TurnCategory::kInvalidActionOrObject: return "invalid_action_or_object";
    case TurnCategory::kDependencyViolation: return "dependency_violation";
    case TurnCategory::kRepeatingCompleted: return "repeating_completed";
    case TurnCategory::kObjectMismatched: return "object_mismatched";
  }
  return "valid_action";
}

TurnCategory classify_turn(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::kActionStart:
      return TurnCategory::kValidAction;
    case FeedbackKind::kWaitAck:
      return TurnCategory::kWait;
    case FeedbackKind::kInvalidAction:
    case FeedbackKind::kNonexistentObject:
      return TurnCategory::kInvalidActionOrObject;
    case FeedbackKind::kWrongInput:
    case FeedbackKind::kOccupiedObject:
      return TurnCategory::kDependencyViolation;
    case FeedbackKind::kAlreadyCompleted:
      return TurnCategory::kRepeatingCompleted;
    case FeedbackKind::kMismatchedObject:
      return TurnCategory::kObjectMismatched;
    default:
      // prompts / completions / episode ends are not agent turns
      return TurnCategory::kValidAction;
  }
}

MetricsReport compute_metrics(
    const std::vector<std::pair<std::string, EpisodeOutcome>>& outcomes) {
  if (outcomes.empty()) throw ValidationError("compute_metrics needs at least one outcome");
  MetricsReport report;
  Fraction progress_sum(0);
  Fraction time_sum(0);
  Fraction success_time_sum(0);
  std::int64_t successes = 0;
  for (const auto& [set_id, outcome] : outcomes) {
    PerSetMetrics row;
    row.set_id = set_id;
    row.progress = outcome.final_progress_pct;
    row.minute = outcome.max_progress_minute;
    row.success = outcome.reason == OutcomeReason::kAllDone;
    progress_sum = progress_sum + row.progress;
    time_sum = time_sum + Fraction(row.minute);
    if (row.success) {
      ++successes;
      success_time_sum = success_time_sum + Fraction(row.minute);
    }
    report.per_set.push_back(std::move(row));
  }
  const auto n = static_cast<std::int64_t>(outcomes.size());
  report.as = progress_sum / Fraction(n);
  report.cs = time_sum == Fraction(0) ? Fraction(0) : progress_sum / time_sum;
  report.cr = Fraction(100 * successes, n);
  if (successes > 0) report.ct = success_time_sum / Fraction(successes);
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::json doc;
  doc["as"] = as.to_double();
  doc["cs"] = cs.to_double();
  doc["cr"] = cr.to_double();
  if (ct) {
    doc["ct"] = ct->to_double();
  } else {
    doc["ct"] = nullptr;
  }
  doc["as_exact"] = {{"num", as.num()}, {"den", as.den()}};
  doc["cs_exact"] = {{"num", cs.num()}, {"den", cs.den()}};
  doc["cr_exact"] = {{"num", cr.num()}, {"den", cr.den()}};
  if (ct) doc["ct_exact"] = {{"num", ct->num()}, {"den", ct->den()}};
  doc["per_set"] = nlohmann::json::array();
  for (const auto& row : per_set) {
    doc["per_set"].push_back({{"set_id", row.set_id},
                              {"progress_pct", row.progress.to_double()},
                              {"minute", row.minute},
                              {"success", row.success}});
  }
  nlohmann::json tax;
  for (int c = 0; c < kTurnCategoryCount; ++c) {
    tax[turn_category_name(static_cast<TurnCategory>(c))] = taxonomy[c];
  }
  doc["taxonomy"] = tax;
  doc["feedback_kind_counts"] = feedback_kind_counts;
  doc["waits"] = {{"necessary", necessary_waits}, {"unnecessary", unnecessary_waits}};
  return doc.dump();
}

WaitBreakdown decompose_waits(const TaskSet& set, const std::vector<TurnRecord>& transcript,
                              std::optional<int> time_limit_override) {
  WaitBreakdown breakdown;
  Episode episode(set, time_limit_override);
  for (const auto& rec : transcript) {
    if (episode.finished()) break;
    if (rec.kind == FeedbackKind::kWaitAck) {
      if (episode.startable_actions().empty()) {
        ++breakdown.necessary;
      } else {
        ++breakdown.unnecessary;
      }
    }
    episode.submit(rec.agent_text);
  }
  return breakdown;
}

std::vector<std::pair<int, Fraction>> progress_curve(
    const TaskSet& set, const std::vector<TurnRecord>& transcript,
    std::optional<int> time_limit_override) {
  Episode episode(set, time_limit_override);
  for (const auto& rec : transcript) {
    if (episode.finished()) break;
    episode.submit(rec.agent_text);
  }
  const int last_clock = episode.finished() ? episode.outcome().end_clock : episode.clock();
  const int end = std::max(1, last_clock - 1);  // fully elapsed minutes
  const auto& history = episode.progress_history();
  std::vector<std::pair<int, Fraction>> curve;
  size_t h = 0;
  Fraction current(0);
  for (int minute = 1; minute <= end; ++minute) {
    while (h < history.size() && history[h].first <= minute) current = history[h++].second;
    curve.emplace_back(minute, current);
  }
  return curve;
}

namespace {

std::string fixed2(const Fraction& value) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << value.to_double();
  return out.str();
}

struct GroupKey {
  Scenario scenario;
  int task_count;
  bool operator<(const GroupKey& other) const {
    if (scenario != other.scenario) return scenario < other.scenario;
    return task_count < other.task_count;
  }
};

}  // namespace

std::string metrics_csv(const std::string& agent_name,
                        const std::vector<EpisodeForReport>& episodes) {
  std::map<GroupKey, std::vector<std::pair<std::string, EpisodeOutcome>>> groups;
  for (const auto& ep : episodes) {
    groups[{ep.scenario, ep.task_count}].emplace_back(ep.set_id, ep.outcome);
  }
  std::ostringstream out;
  out << "agent,scenario,task_count,as,cs,cr,ct\n";
  for (const auto& [key, outcomes] : groups) {
    const MetricsReport report = compute_metrics(outcomes);
    out << agent_name << "," << scenario_name(key.scenario) << "," << key.task_count << ","
        << fixed2(report.as) << "," << fixed2(report.cs) << "," << fixed2(report.cr) << ","
        << (report.ct ? fixed2(*report.ct) : std::string("-")) << "\n";
  }
  return out.str();
}

std::string taxonomy_csv(const std::string& agent_name,
                         const std::vector<EpisodeForReport>& episodes) {
  std::map<GroupKey, std::array<std::int64_t, kTurnCategoryCount>> groups;
  std::map<GroupKey, std::map<std::string, std::int64_t>> raw;
  for (const auto& ep : episodes) {
    auto& counts = groups[{ep.scenario, ep.task_count}];
    auto& kinds = raw[{ep.scenario, ep.task_count}];
    for (const auto& rec : ep.transcript) {
      counts[static_cast<int>(classify_turn(rec.kind))]++;
      kinds[feedback_kind_name(rec.kind)]++;
    }
  }
  std::ostringstream out;
  out << "agent,scenario,task_count";
  for (int c = 0; c < kTurnCategoryCount; ++c) {
    out << "," << turn_category_name(static_cast<TurnCategory>(c));
  }
  // raw feedback kinds keep the mapping lossless
  const std::vector<FeedbackKind> raw_kinds = {
      FeedbackKind::kInvalidAction,  FeedbackKind::kNonexistentObject,
      FeedbackKind::kWrongInput,     FeedbackKind::kAlreadyCompleted,
      FeedbackKind::kMismatchedObject, FeedbackKind::kOccupiedObject,
      FeedbackKind::kActionStart,    FeedbackKind::kWaitAck};
  for (const auto kind : raw_kinds) out << ",raw_" << feedback_kind_name(kind);
  out << "\n";
  for (const auto& [key, counts] : groups) {
    out << agent_name << "," << scenario_name(key.scenario) << "," << key.task_count;
    for (int c = 0; c < kTurnCategoryCount; ++c) out << "," << counts[c];
    for (const auto kind : raw_kinds) {
      const auto& kinds = raw.at(key);
      auto it = kinds.find(feedback_kind_name(kind));
      out << "," << (it == kinds.end() ? 0 : it->second);
    }
    out << "\n";
  }
  return out.str();
}

std::string waits_csv(const std::vector<EpisodeForReport>& episodes,
                      const std::vector<WaitBreakdown>& breakdowns) {
  std::ostringstream out;
  out << "set_id,necessary_wait_count,unnecessary_wait_count\n";
  std::int64_t max_necessary = 0;
  for (size_t i = 0; i < episodes.size() && i < breakdowns.size(); ++i) {
    out << episodes[i].set_id << "," << breakdowns[i].necessary << ","
        << breakdowns[i].unnecessary << "\n";
    max_necessary = std::max(max_necessary, breakdowns[i].necessary);
  }
  out << "max_necessary_wait_across_episodes," << max_necessary << ",\n";
  return out.str();
}

std::string curve_csv(const std::vector<std::pair<int, Fraction>>& curve) {
  std::ostringstream out;
  out << "minute,progress_pct\n";
  for (const auto& [minute, progress] : curve) {
    out << minute << "," << fixed2(progress) << "\n";
  }
  return out.str();
}

}  // namespace timearena
