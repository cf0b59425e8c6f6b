#include "timearena/capi.h"

#include <cstring>
#include <memory>
#include <string>

#include "json.hpp"
#include "timearena/agents.hpp"
#include "timearena/engine.hpp"
#include "timearena/metrics.hpp"
#include "timearena/oracle.hpp"
#include "timearena/task_model.hpp"

using namespace timearena;

struct ta_corpus {
  Corpus corpus;
  std::shared_ptr<const Vocabulary> vocabulary;
};

struct ta_taskset {
  TaskSet set;
};

struct ta_episode {
  // the set handle may be freed before the episode; keep a private copy
  std::shared_ptr<const TaskSet> set;
  std::unique_ptr<Episode> episode;
};

struct ta_schedule {
  ScheduleResult schedule;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

ta_status fail(ta_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
ta_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const LimitError& e) {
    return fail(TA_ERR_LIMIT, e.what());
  } catch (const HarnessError& e) {
    return fail(TA_ERR_HARNESS, e.what());
  } catch (const ParseError& e) {
    return fail(TA_ERR_PARSE, e.what());
  } catch (const ValidationError& e) {
    return fail(TA_ERR_VALIDATION, e.what());
  } catch (const std::exception& e) {
    return fail(TA_ERR_STATE, e.what());
  }
}

std::vector<TurnRecord> parse_jsonl(const std::string& jsonl) {
  std::vector<TurnRecord> records;
  size_t start = 0;
  while (start < jsonl.size()) {
    size_t end = jsonl.find('\n', start);
    if (end == std::string::npos) end = jsonl.size();
    const std::string line = jsonl.substr(start, end - start);
    if (!line.empty()) records.push_back(TurnRecord::from_json(line));
    start = end + 1;
  }
  return records;
}

std::optional<int> override_of(int value) {
  if (value <= 0) return std::nullopt;
  return value;
}

}  // namespace

extern "C" {

const char* ta_version(void) { return "1.0.0"; }

const char* ta_status_name(ta_status status) {
  switch (status) {
    case TA_OK: return "ok";
    case TA_ERR_IO: return "io_error";
    case TA_ERR_PARSE: return "parse_error";
    case TA_ERR_VALIDATION: return "validation_error";
    case TA_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case TA_ERR_LIMIT: return "limit_exceeded";
    case TA_ERR_STATE: return "state_error";
    case TA_ERR_HARNESS: return "harness_error";
  }
  return "unknown";
}

const char* ta_last_error(void) { return g_last_error.c_str(); }

void ta_string_free(char* text) { std::free(text); }

ta_status ta_corpus_load(const char* dir, ta_corpus** out) {
  if (dir == nullptr || out == nullptr) return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto handle = std::make_unique<ta_corpus>();
    handle->corpus = load_corpus(dir);
    handle->vocabulary = std::make_shared<Vocabulary>(handle->corpus.vocabulary);
    *out = handle.release();
    return TA_OK;
  });
}

void ta_corpus_free(ta_corpus* corpus) { delete corpus; }

int ta_corpus_task_count(const ta_corpus* corpus) {
  return corpus == nullptr ? 0 : static_cast<int>(corpus->corpus.tasks.size());
}

ta_status ta_corpus_validate(const ta_corpus* corpus, char** report_json) {
  if (corpus == nullptr || report_json == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    nlohmann::json doc;
    doc["tasks"] = nlohmann::json::array();
    for (const auto& task : corpus->corpus.tasks) {
      const auto violations = validate_task(task, corpus->corpus.vocabulary);
      nlohmann::json entry;
      entry["id"] = task.id;
      entry["scenario"] = scenario_name(task.scenario);
      entry["violations"] = violations;
      doc["tasks"].push_back(std::move(entry));
    }
    *report_json = dup_string(doc.dump());
    return TA_OK;
  });
}

ta_status ta_corpus_task_ids(const ta_corpus* corpus, char** ids_json) {
  if (corpus == nullptr || ids_json == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& task : corpus->corpus.tasks) ids.push_back(task.id);
  *ids_json = dup_string(ids.dump());
  return TA_OK;
}

ta_status ta_taskset_build(const ta_corpus* corpus, const char* set_id,
                           const char* const* task_ids, size_t task_count,
                           const char* const* constraint_objects, size_t constraint_count,
                           ta_taskset** out) {
  if (corpus == nullptr || task_ids == nullptr || out == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    ManifestEntry entry;
    entry.id = set_id == nullptr ? "" : set_id;
    for (size_t i = 0; i < task_count; ++i) entry.task_ids.emplace_back(task_ids[i]);
    for (size_t i = 0; i < constraint_count; ++i) {
      entry.constraint_objects.emplace_back(constraint_objects[i]);
    }
    auto handle = std::make_unique<ta_taskset>();
    handle->set = build_set(corpus->corpus, entry);
    *out = handle.release();
    return TA_OK;
  });
}

void ta_taskset_free(ta_taskset* set) { delete set; }

int ta_taskset_time_limit(const ta_taskset* set) {
  return set == nullptr ? 0 : set->set.time_limit_min;
}

int ta_taskset_action_count(const ta_taskset* set) {
  return set == nullptr ? 0 : static_cast<int>(set->set.actions.size());
}

ta_status ta_taskset_instruction(const ta_taskset* set, char** text) {
  if (set == nullptr || text == nullptr) return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *text = dup_string(render_instruction(set->set));
    return TA_OK;
  });
}

ta_status ta_taskset_info(const ta_taskset* set, char** info_json) {
  if (set == nullptr || info_json == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    nlohmann::json doc;
    doc["id"] = set->set.id;
    doc["scenario"] = scenario_name(set->set.tasks.front().scenario);
    doc["time_limit_min"] = set->set.time_limit_min;
    doc["total_duration_min"] = set->set.total_duration_min;
    doc["tasks"] = nlohmann::json::array();
    for (const auto& task : set->set.tasks) doc["tasks"].push_back(task.id);
    doc["objects"] = nlohmann::json::array();
    for (const auto& obj : set->set.merged_objects) {
      doc["objects"].push_back({{"name", obj.name}, {"initial_state", obj.initial_state}});
    }
    *info_json = dup_string(doc.dump());
    return TA_OK;
  });
}

ta_status ta_episode_start(const ta_taskset* set, int time_limit_override, ta_episode** out) {
  if (set == nullptr || out == nullptr) return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto handle = std::make_unique<ta_episode>();
    handle->set = std::make_shared<const TaskSet>(set->set);
    handle->episode = std::make_unique<Episode>(*handle->set, override_of(time_limit_override));
    *out = handle.release();
    return TA_OK;
  });
}

void ta_episode_free(ta_episode* episode) { delete episode; }

int ta_episode_minute(const ta_episode* episode) {
  return episode == nullptr ? 0 : episode->episode->clock();
}

double ta_episode_progress_pct(const ta_episode* episode) {
  return episode == nullptr ? 0.0 : episode->episode->progress().to_double();
}

int ta_episode_error_streak(const ta_episode* episode) {
  return episode == nullptr ? 0 : episode->episode->error_streak();
}

int ta_episode_finished(const ta_episode* episode) {
  return episode != nullptr && episode->episode->finished() ? 1 : 0;
}

ta_status ta_episode_prompt(const ta_episode* episode, char** text) {
  if (episode == nullptr || text == nullptr) return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  if (episode->episode->finished()) return fail(TA_ERR_STATE, "episode finished");
  *text = dup_string(episode->episode->prompt());
  return TA_OK;
}

ta_status ta_episode_submit(ta_episode* episode, const char* agent_text, char** response) {
  if (episode == nullptr || agent_text == nullptr || response == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  if (episode->episode->finished()) return fail(TA_ERR_STATE, "episode finished");
  return guarded([&] {
    *response = dup_string(episode->episode->submit(agent_text));
    return TA_OK;
  });
}

ta_status ta_episode_outcome(const ta_episode* episode, char** outcome_json) {
  if (episode == nullptr || outcome_json == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  if (!episode->episode->finished()) return fail(TA_ERR_STATE, "episode still live");
  *outcome_json = dup_string(episode->episode->outcome().to_json());
  return TA_OK;
}

ta_status ta_episode_trajectory(const ta_episode* episode, char** jsonl) {
  if (episode == nullptr || jsonl == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  *jsonl = dup_string(episode->episode->trajectory_jsonl());
  return TA_OK;
}

ta_status ta_schedule_greedy(const ta_taskset* set, ta_schedule** out) {
  if (set == nullptr || out == nullptr) return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto handle = std::make_unique<ta_schedule>();
    handle->schedule = greedy_minimal_time(set->set);
    *out = handle.release();
    return TA_OK;
  });
}

ta_status ta_schedule_brute_force(const ta_taskset* set, ta_schedule** out) {
  if (set == nullptr || out == nullptr) return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto handle = std::make_unique<ta_schedule>();
    handle->schedule = brute_force_minimal_time(set->set);
    *out = handle.release();
    return TA_OK;
  });
}

void ta_schedule_free(ta_schedule* schedule) { delete schedule; }

int ta_schedule_makespan(const ta_schedule* schedule) {
  return schedule == nullptr ? 0 : schedule->schedule.makespan_min;
}

ta_status ta_schedule_json(const ta_schedule* schedule, char** json) {
  if (schedule == nullptr || json == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  *json = dup_string(schedule->schedule.to_json());
  return TA_OK;
}

ta_status ta_run_episode(const ta_taskset* set, const char* agent_config_json,
                         int time_limit_override, char** trajectory_jsonl,
                         char** outcome_json) {
  if (set == nullptr || agent_config_json == nullptr || trajectory_jsonl == nullptr ||
      outcome_json == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const AgentConfig config = AgentConfig::from_json(agent_config_json);
    const auto agent = make_agent(config, set->set);
    const EpisodeResult result =
        run_episode(set->set, *agent, override_of(time_limit_override));
    *trajectory_jsonl = dup_string(result.trajectory_jsonl);
    *outcome_json = dup_string(result.outcome.to_json());
    return TA_OK;
  });
}

ta_status ta_metrics_compute(const char* outcomes_json, char** report_json) {
  if (outcomes_json == nullptr || report_json == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    nlohmann::json doc = nlohmann::json::parse(outcomes_json);
    std::vector<std::pair<std::string, EpisodeOutcome>> outcomes;
    for (const auto& item : doc) {
      outcomes.emplace_back(item.at("set_id").get<std::string>(),
                            EpisodeOutcome::from_json(item.at("outcome").dump()));
    }
    const MetricsReport report = compute_metrics(outcomes);
    *report_json = dup_string(report.to_json());
    return TA_OK;
  });
}

ta_status ta_metrics_waits(const ta_taskset* set, const char* trajectory_jsonl,
                           int time_limit_override, char** waits_json) {
  if (set == nullptr || trajectory_jsonl == nullptr || waits_json == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const auto records = parse_jsonl(trajectory_jsonl);
    const WaitBreakdown breakdown =
        decompose_waits(set->set, records, override_of(time_limit_override));
    nlohmann::json doc;
    doc["necessary"] = breakdown.necessary;
    doc["unnecessary"] = breakdown.unnecessary;
    *waits_json = dup_string(doc.dump());
    return TA_OK;
  });
}

ta_status ta_metrics_curve_csv(const ta_taskset* set, const char* trajectory_jsonl,
                               int time_limit_override, char** csv) {
  if (set == nullptr || trajectory_jsonl == nullptr || csv == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const auto records = parse_jsonl(trajectory_jsonl);
    const auto curve = progress_curve(set->set, records, override_of(time_limit_override));
    *csv = dup_string(curve_csv(curve));
    return TA_OK;
  });
}

ta_status ta_metrics_taxonomy(const char* trajectory_jsonl, char** taxonomy_json) {
  if (trajectory_jsonl == nullptr || taxonomy_json == nullptr) {
    return fail(TA_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const auto records = parse_jsonl(trajectory_jsonl);
    std::array<std::int64_t, kTurnCategoryCount> counts{};
    std::map<std::string, std::int64_t> raw;
    for (const auto& rec : records) {
      counts[static_cast<int>(classify_turn(rec.kind))]++;
      raw[feedback_kind_name(rec.kind)]++;
    }
    nlohmann::json doc;
    for (int c = 0; c < kTurnCategoryCount; ++c) {
      doc[turn_category_name(static_cast<TurnCategory>(c))] = counts[c];
    }
    doc["raw_feedback_kinds"] = raw;
    *taxonomy_json = dup_string(doc.dump());
    return TA_OK;
  });
}

}  // extern "C"
