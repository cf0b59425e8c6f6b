// Operator CLI: validates corpora, computes oracle schedules, runs agents
// over task-set manifests, rebuilds reports from saved logs, and offers an
// interactive episode for debugging. Everything goes through the C API.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "timearena/capi.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_log_level = 0;  // 0 quiet, 1 info, 2 debug

void init_logging() {
  const char* env = std::getenv("ARENA_LOG");
  if (env == nullptr) return;
  const std::string level(env);
  if (level == "info") g_log_level = 1;
  if (level == "debug") g_log_level = 2;
}

void log_info(const std::string& message) {
  if (g_log_level >= 1) std::cerr << "[arena] " << message << "\n";
}

struct CString {
  char* ptr = nullptr;
  ~CString() { ta_string_free(ptr); }
  std::string str() const { return ptr == nullptr ? std::string() : std::string(ptr); }
};

[[noreturn]] void die(int code, const std::string& message) {
  std::cerr << "error: " << message << "\n";
  std::exit(code);
}

void check(ta_status status, int exit_code = 2) {
  if (status != TA_OK) {
    die(exit_code, std::string(ta_status_name(status)) + ": " + ta_last_error());
  }
}

struct CorpusHandle {
  ta_corpus* ptr = nullptr;
  ~CorpusHandle() { ta_corpus_free(ptr); }
};

struct SetHandle {
  ta_taskset* ptr = nullptr;
  ~SetHandle() { ta_taskset_free(ptr); }
};

struct SetSpec {
  std::string id;
  std::vector<std::string> tasks;
  std::vector<std::string> constraints;
};

std::vector<SetSpec> load_manifest_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) die(2, "cannot open manifest " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    die(2, path.string() + ": " + e.what());
  }
  std::vector<SetSpec> specs;
  for (const auto& item : doc.at("sets")) {
    SetSpec spec;
    spec.id = item.at("id").get<std::string>();
    for (const auto& t : item.at("tasks")) spec.tasks.push_back(t.get<std::string>());
    if (item.contains("constraint_objects")) {
      for (const auto& c : item["constraint_objects"]) {
        spec.constraints.push_back(c.get<std::string>());
      }
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

ta_taskset* build_set(ta_corpus* corpus, const SetSpec& spec,
                      const std::vector<std::string>& extra_constraints) {
  std::vector<const char*> ids;
  for (const auto& t : spec.tasks) ids.push_back(t.c_str());
  std::vector<std::string> constraints = spec.constraints;
  for (const auto& c : extra_constraints) {
    if (std::find(constraints.begin(), constraints.end(), c) == constraints.end()) {
      constraints.push_back(c);
    }
  }
  std::vector<const char*> cptrs;
  for (const auto& c : constraints) cptrs.push_back(c.c_str());
  ta_taskset* set = nullptr;
  check(ta_taskset_build(corpus, spec.id.c_str(), ids.data(), ids.size(),
                         cptrs.empty() ? nullptr : cptrs.data(), cptrs.size(), &set));
  return set;
}

std::string agent_config_json(const std::string& agent, std::uint64_t seed) {
  json config;
  config["seed"] = seed;
  if (agent == "wait-only") {
    config["kind"] = "wait_only";
  } else if (agent == "random-valid") {
    config["kind"] = "random_valid";
  } else if (agent == "greedy-planner") {
    config["kind"] = "greedy_planner";
  } else if (agent == "replay:greedy") {
    config["kind"] = "replay";
    config["schedule_method"] = "greedy";
  } else if (agent == "replay:brute-force") {
    config["kind"] = "replay";
    config["schedule_method"] = "brute_force";
  } else if (agent.rfind("external:", 0) == 0) {
    config["kind"] = "external";
    config["endpoint"] = agent.substr(std::string("external:").size());
  } else {
    die(2, "unknown agent '" + agent +
               "' (want wait-only, random-valid, greedy-planner, replay:greedy, "
               "replay:brute-force, or external:<command-or-url>)");
  }
  return config.dump();
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) die(2, "cannot write " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(2, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---- validate -----------------------------------------------------------

int cmd_validate(const std::string& corpus_dir) {
  ta_corpus* raw = nullptr;
  const ta_status status = ta_corpus_load(corpus_dir.c_str(), &raw);
  if (status == TA_ERR_VALIDATION) {
    std::cerr << ta_last_error() << "\n";
    return 1;
  }
  if (status != TA_OK) {
    std::cerr << ta_status_name(status) << ": " << ta_last_error() << "\n";
    return 2;
  }
  CorpusHandle corpus{raw};
  CString report;
  check(ta_corpus_validate(corpus.ptr, &report.ptr));
  const json doc = json::parse(report.str());
  bool clean = true;
  for (const auto& task : doc["tasks"]) {
    const auto& violations = task["violations"];
    if (violations.empty()) {
      std::cout << task["id"].get<std::string>() << ": ok\n";
    } else {
      clean = false;
      std::cout << task["id"].get<std::string>() << ": " << violations.size()
                << " violation(s)\n";
      for (const auto& v : violations) std::cout << "  " << v.get<std::string>() << "\n";
    }
  }
  std::cout << (clean ? "corpus ok" : "corpus has violations") << " ("
            << doc["tasks"].size() << " tasks)\n";
  return clean ? 0 : 1;
}

// ---- oracle -------------------------------------------------------------

int cmd_oracle(const std::string& corpus_dir, const std::string& manifest,
               const std::string& out_dir) {
  CorpusHandle corpus;
  check(ta_corpus_load(corpus_dir.c_str(), &corpus.ptr));
  const auto specs = load_manifest_file(manifest);
  std::ostringstream csv;
  csv << "task_set,method,makespan_min,cs\n";
  bool dominance_violated = false;
  for (const auto& spec : specs) {
    SetHandle set{build_set(corpus.ptr, spec, {})};
    ta_schedule* greedy = nullptr;
    check(ta_schedule_greedy(set.ptr, &greedy));
    const int greedy_makespan = ta_schedule_makespan(greedy);
    ta_schedule_free(greedy);
    csv << spec.id << ",greedy," << greedy_makespan << ","
        << (100.0 / greedy_makespan) << "\n";

    ta_schedule* brute = nullptr;
    const ta_status status = ta_schedule_brute_force(set.ptr, &brute);
    if (status == TA_ERR_LIMIT) {
      log_info(spec.id + ": brute force skipped (" + ta_last_error() + ")");
      continue;
    }
    check(status);
    const int brute_makespan = ta_schedule_makespan(brute);
    ta_schedule_free(brute);
    csv << spec.id << ",brute_force," << brute_makespan << ","
        << (100.0 / brute_makespan) << "\n";
    if (greedy_makespan < brute_makespan) {
      std::cerr << spec.id << ": greedy (" << greedy_makespan
                << ") beat brute force (" << brute_makespan << ") -- scheduler bug\n";
      dominance_violated = true;
    } else if (greedy_makespan > brute_makespan) {
      std::cout << "note: " << spec.id << ": greedy " << greedy_makespan
                << " > optimal " << brute_makespan << "\n";
    }
  }
  std::cout << csv.str();
  if (!out_dir.empty()) write_file(fs::path(out_dir) / "oracle.csv", csv.str());
  return dominance_violated ? 1 : 0;
}

// ---- run / report -------------------------------------------------------

struct EpisodeFiles {
  SetSpec spec;
  std::string scenario;
  int task_count = 1;
  json outcome;
  std::string trajectory;
  std::string harness_error;
};

void write_reports(const std::string& agent, const std::string& corpus_dir,
                   std::vector<EpisodeFiles> episodes,
                   const std::vector<std::string>& extra_constraints,
                   const std::string& out_dir, int time_limit_override) {
  std::sort(episodes.begin(), episodes.end(),
            [](const EpisodeFiles& a, const EpisodeFiles& b) { return a.spec.id < b.spec.id; });
  CorpusHandle corpus;
  check(ta_corpus_load(corpus_dir.c_str(), &corpus.ptr));

  // metrics.csv: one row per scenario x task-count group
  std::map<std::pair<std::string, int>, json> groups;
  for (const auto& ep : episodes) {
    if (!ep.harness_error.empty()) continue;
    json entry;
    entry["set_id"] = ep.spec.id;
    entry["outcome"] = ep.outcome;
    groups[{ep.scenario, ep.task_count}].push_back(entry);
  }
  std::ostringstream metrics;
  metrics << "agent,scenario,task_count,as,cs,cr,ct\n";
  for (const auto& [key, outcomes] : groups) {
    CString report;
    check(ta_metrics_compute(outcomes.dump().c_str(), &report.ptr));
    const json doc = json::parse(report.str());
    metrics << agent << "," << key.first << "," << key.second << ",";
    char buffer[128];
    std::snprintf(buffer, sizeof(buffer), "%.2f,%.2f,%.2f,", doc["as"].get<double>(),
                  doc["cs"].get<double>(), doc["cr"].get<double>());
    metrics << buffer;
    if (doc["ct"].is_null()) {
      metrics << "-";
    } else {
      std::snprintf(buffer, sizeof(buffer), "%.2f", doc["ct"].get<double>());
      metrics << buffer;
    }
    metrics << "\n";
  }
  write_file(fs::path(out_dir) / "metrics.csv", metrics.str());

  // taxonomy.csv
  static const char* kCategories[] = {"valid_action", "wait", "invalid_action_or_object",
                                      "dependency_violation", "repeating_completed",
                                      "object_mismatched"};
  std::map<std::pair<std::string, int>, std::map<std::string, std::int64_t>> taxonomy;
  for (const auto& ep : episodes) {
    if (!ep.harness_error.empty()) continue;
    CString tax;
    check(ta_metrics_taxonomy(ep.trajectory.c_str(), &tax.ptr));
    const json doc = json::parse(tax.str());
    auto& bucket = taxonomy[{ep.scenario, ep.task_count}];
    for (const char* category : kCategories) {
      bucket[category] += doc[category].get<std::int64_t>();
    }
  }
  std::ostringstream tax_csv;
  tax_csv << "agent,scenario,task_count";
  for (const char* category : kCategories) tax_csv << "," << category;
  tax_csv << "\n";
  for (const auto& [key, counts] : taxonomy) {
    tax_csv << agent << "," << key.first << "," << key.second;
    for (const char* category : kCategories) tax_csv << "," << counts.at(category);
    tax_csv << "\n";
  }
  write_file(fs::path(out_dir) / "taxonomy.csv", tax_csv.str());

  // waits.csv + curves/<set>.csv (need the engine replay, hence a set handle)
  std::ostringstream waits;
  waits << "set_id,necessary_wait_count,unnecessary_wait_count\n";
  std::int64_t max_necessary = 0;
  for (const auto& ep : episodes) {
    if (!ep.harness_error.empty()) continue;
    SetHandle set{build_set(corpus.ptr, ep.spec, extra_constraints)};
    CString wait_json;
    check(ta_metrics_waits(set.ptr, ep.trajectory.c_str(), time_limit_override,
                           &wait_json.ptr));
    const json doc = json::parse(wait_json.str());
    waits << ep.spec.id << "," << doc["necessary"].get<std::int64_t>() << ","
          << doc["unnecessary"].get<std::int64_t>() << "\n";
    max_necessary = std::max(max_necessary, doc["necessary"].get<std::int64_t>());

    CString curve;
    check(ta_metrics_curve_csv(set.ptr, ep.trajectory.c_str(), time_limit_override,
                               &curve.ptr));
    write_file(fs::path(out_dir) / "curves" / (ep.spec.id + ".csv"), curve.str());
  }
  waits << "max_necessary_wait_across_episodes," << max_necessary << ",\n";
  write_file(fs::path(out_dir) / "waits.csv", waits.str());

  // harness errors are excluded from the metrics and reported separately
  std::ostringstream errors;
  errors << "set_id,error\n";
  for (const auto& ep : episodes) {
    if (!ep.harness_error.empty()) errors << ep.spec.id << "," << ep.harness_error << "\n";
  }
  write_file(fs::path(out_dir) / "harness_errors.csv", errors.str());
}

int cmd_run(const std::string& corpus_dir, const std::string& manifest,
            const std::string& agent, std::vector<std::uint64_t> seeds, int jobs,
            const std::vector<std::string>& constraints, const std::string& out_dir,
            int time_limit_override) {
  if (seeds.empty()) seeds.push_back(0);
  const auto specs = load_manifest_file(manifest);

  struct Job {
    SetSpec spec;
    std::uint64_t seed = 0;
  };
  std::vector<Job> job_list;
  for (const auto& seed : seeds) {
    for (const auto& spec : specs) {
      Job job{spec, seed};
      if (seeds.size() > 1) job.spec.id = spec.id + "__seed" + std::to_string(seed);
      job_list.push_back(std::move(job));
    }
  }

  std::vector<EpisodeFiles> episodes(job_list.size());
  std::atomic<size_t> cursor{0};
  std::mutex io_mutex;

  auto worker = [&] {
    CorpusHandle corpus;
    check(ta_corpus_load(corpus_dir.c_str(), &corpus.ptr));
    for (;;) {
      const size_t index = cursor.fetch_add(1);
      if (index >= job_list.size()) return;
      const Job& job = job_list[index];
      SetSpec build_spec = job_list[index].spec;
      // seed-suffixed ids are for output files only; build by task list
      build_spec.id = job.spec.id;
      EpisodeFiles& ep = episodes[index];
      ep.spec = job.spec;
      SetHandle set{build_set(corpus.ptr, build_spec, constraints)};
      CString info;
      check(ta_taskset_info(set.ptr, &info.ptr));
      const json info_doc = json::parse(info.str());
      ep.scenario = info_doc["scenario"].get<std::string>();
      ep.task_count = static_cast<int>(info_doc["tasks"].size());

      CString trajectory, outcome;
      const ta_status status =
          ta_run_episode(set.ptr, agent_config_json(agent, job.seed).c_str(),
                         time_limit_override, &trajectory.ptr, &outcome.ptr);
      if (status == TA_ERR_HARNESS) {
        ep.harness_error = ta_last_error();
        std::lock_guard<std::mutex> lock(io_mutex);
        std::cerr << job.spec.id << ": harness error: " << ep.harness_error << "\n";
        continue;
      }
      check(status);
      ep.outcome = json::parse(outcome.str());
      ep.trajectory = trajectory.str();
      std::lock_guard<std::mutex> lock(io_mutex);
      log_info(job.spec.id + ": " + ep.outcome["reason"].get<std::string>() + " at " +
               std::to_string(ep.outcome["final_progress_pct"].get<double>()) + "%");
    }
  };

  std::vector<std::thread> pool;
  const int thread_count = std::max(1, jobs);
  for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (const auto& ep : episodes) {
    if (!ep.harness_error.empty()) continue;
    write_file(fs::path(out_dir) / "trajectories" / (ep.spec.id + ".jsonl"), ep.trajectory);
    json envelope;
    envelope["set_id"] = ep.spec.id;
    envelope["agent"] = agent;
    envelope["scenario"] = ep.scenario;
    envelope["task_count"] = ep.task_count;
    envelope["outcome"] = ep.outcome;
    write_file(fs::path(out_dir) / "outcomes" / (ep.spec.id + ".json"),
               envelope.dump(2) + "\n");
  }
  write_reports(agent, corpus_dir, episodes, constraints, out_dir, time_limit_override);

  int completed = 0;
  for (const auto& ep : episodes) {
    if (ep.harness_error.empty() && ep.outcome["reason"] == "all_done") ++completed;
  }
  std::cout << "ran " << episodes.size() << " episode(s), " << completed
            << " completed; reports in " << out_dir << "\n";
  return 0;
}

int cmd_report(const std::string& corpus_dir, const std::string& manifest,
               const std::string& logs_dir, const std::string& agent,
               const std::vector<std::string>& constraints, const std::string& out_dir,
               int time_limit_override) {
  const auto specs = load_manifest_file(manifest);
  std::vector<EpisodeFiles> episodes;
  for (const auto& spec : specs) {
    const fs::path outcome_path = fs::path(logs_dir) / "outcomes" / (spec.id + ".json");
    const fs::path trajectory_path =
        fs::path(logs_dir) / "trajectories" / (spec.id + ".jsonl");
    if (!fs::exists(outcome_path) || !fs::exists(trajectory_path)) {
      log_info(spec.id + ": no saved logs, skipping");
      continue;
    }
    EpisodeFiles ep;
    ep.spec = spec;
    const json envelope = json::parse(read_file(outcome_path));
    ep.scenario = envelope["scenario"].get<std::string>();
    ep.task_count = envelope["task_count"].get<int>();
    ep.outcome = envelope["outcome"];
    ep.trajectory = read_file(trajectory_path);
    episodes.push_back(std::move(ep));
  }
  if (episodes.empty()) die(1, "no saved episodes under " + logs_dir);
  write_reports(agent, corpus_dir, episodes, constraints, out_dir, time_limit_override);
  std::cout << "rebuilt reports for " << episodes.size() << " episode(s) in " << out_dir
            << "\n";
  return 0;
}

// ---- play ---------------------------------------------------------------

int cmd_play(const std::string& corpus_dir, const std::string& manifest,
             const std::string& set_id, const std::string& out_file,
             int time_limit_override) {
  CorpusHandle corpus;
  check(ta_corpus_load(corpus_dir.c_str(), &corpus.ptr));
  const auto specs = load_manifest_file(manifest);
  const SetSpec* chosen = nullptr;
  for (const auto& spec : specs) {
    if (spec.id == set_id) chosen = &spec;
  }
  if (chosen == nullptr) die(2, "set '" + set_id + "' not in manifest");
  SetHandle set{build_set(corpus.ptr, *chosen, {})};

  CString instruction;
  check(ta_taskset_instruction(set.ptr, &instruction.ptr));
  std::cout << instruction.str() << "\n";

  ta_episode* raw = nullptr;
  check(ta_episode_start(set.ptr, time_limit_override, &raw));
  struct Guard {
    ta_episode* ptr;
    ~Guard() { ta_episode_free(ptr); }
  } episode{raw};

  bool aborted = false;
  while (ta_episode_finished(episode.ptr) == 0) {
    CString prompt;
    check(ta_episode_prompt(episode.ptr, &prompt.ptr));
    std::cout << prompt.str() << "\n";
    std::string line;
    if (!std::getline(std::cin, line)) {
      aborted = true;
      break;
    }
    CString response;
    check(ta_episode_submit(episode.ptr, line.c_str(), &response.ptr));
    std::cout << response.str() << "\n";
  }

  json envelope;
  CString trajectory;
  check(ta_episode_trajectory(episode.ptr, &trajectory.ptr));
  if (aborted) {
    std::cout << "episode aborted (EOF)\n";
    envelope["aborted"] = true;
  } else {
    CString outcome;
    check(ta_episode_outcome(episode.ptr, &outcome.ptr));
    const json doc = json::parse(outcome.str());
    std::cout << "episode finished: " << doc["reason"].get<std::string>() << " at "
              << doc["final_progress_pct"].get<double>() << "%\n";
    envelope["aborted"] = false;
    envelope["outcome"] = doc;
  }
  if (!out_file.empty()) {
    envelope["set_id"] = set_id;
    envelope["trajectory_jsonl"] = trajectory.str();
    write_file(out_file, envelope.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"timearena: a minute-stepped multitasking environment for agents"};
  app.require_subcommand(1);

  std::string corpus_dir = "data/corpus";
  std::string manifest;
  std::string out_dir = "out";
  std::string agent = "greedy-planner";
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> constraints;
  int jobs = 1;
  int max_time_override = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_manifest) {
    cmd->add_option("--corpus", corpus_dir, "corpus directory")->capture_default_str();
    if (needs_manifest) {
      cmd->add_option("--manifest", manifest, "task-set manifest")->required();
    }
    cmd->add_option("--max-time-override", max_time_override,
                    "override the per-set time limit (minutes)");
  };

  auto* validate = app.add_subcommand("validate", "validate every task in a corpus");
  validate->add_option("--corpus", corpus_dir, "corpus directory")->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "greedy and brute-force makespans");
  add_common(oracle, true);
  oracle->add_option("--out", out_dir, "also write oracle.csv here");

  auto* run = app.add_subcommand("run", "run an agent over a manifest");
  add_common(run, true);
  run->add_option("--agent", agent,
                  "wait-only|random-valid|greedy-planner|replay:greedy|"
                  "replay:brute-force|external:<cmd-or-url>")
      ->capture_default_str();
  run->add_option("--seed", seeds, "seed(s); repeat for multiple runs");
  run->add_option("--jobs", jobs, "parallel episodes")->capture_default_str();
  run->add_option("--constraint", constraints,
                  "force single shared instances of these objects")
      ->delimiter(',');
  run->add_option("--out", out_dir, "output directory")->capture_default_str();

  auto* report = app.add_subcommand("report", "rebuild reports from saved logs");
  add_common(report, true);
  std::string logs_dir = "out";
  report->add_option("--logs", logs_dir, "directory with trajectories/ and outcomes/")
      ->capture_default_str();
  report->add_option("--agent", agent, "agent label for the report")->capture_default_str();
  report->add_option("--constraint", constraints, "constraints used during the run")
      ->delimiter(',');
  report->add_option("--out", out_dir, "output directory")->capture_default_str();

  auto* play = app.add_subcommand("play", "interactive episode on this terminal");
  add_common(play, true);
  std::string set_id;
  std::string play_out;
  play->add_option("--set", set_id, "set id from the manifest")->required();
  play->add_option("--out", play_out, "save the transcript here");

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(validate)) return cmd_validate(corpus_dir);
  if (app.got_subcommand(oracle)) {
    return cmd_oracle(corpus_dir, manifest, oracle->count("--out") ? out_dir : "");
  }
  if (app.got_subcommand(run)) {
    return cmd_run(corpus_dir, manifest, agent, seeds, jobs, constraints, out_dir,
                   max_time_override);
  }
  if (app.got_subcommand(report)) {
    return cmd_report(corpus_dir, manifest, logs_dir, agent, constraints, out_dir,
                      max_time_override);
  }
  if (app.got_subcommand(play)) {
    return cmd_play(corpus_dir, manifest, set_id, play_out, max_time_override);
  }
  return 2;
}
