#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "timearena/engine.hpp"
#include "timearena/task_model.hpp"

#ifndef TA_DATA_DIR
#define TA_DATA_DIR "data"
#endif
#ifndef TA_GOLDEN_DIR
#define TA_GOLDEN_DIR "tests/golden"
#endif

namespace ta_test {

inline std::string data_dir() { return TA_DATA_DIR; }
inline std::string corpus_dir() { return std::string(TA_DATA_DIR) + "/corpus"; }
inline std::string golden_dir() { return TA_GOLDEN_DIR; }

inline const timearena::Corpus& corpus() {
  static const timearena::Corpus c = timearena::load_corpus(corpus_dir());
  return c;
}

inline std::shared_ptr<const timearena::Vocabulary> vocabulary() {
  static const auto v = std::make_shared<timearena::Vocabulary>(corpus().vocabulary);
  return v;
}

inline timearena::TaskSet make_set(const std::vector<std::string>& task_ids,
                                   const std::vector<std::string>& constraints = {}) {
  std::vector<timearena::TaskDefinition> tasks;
  for (const auto& id : task_ids) {
    const auto* task = corpus().find(id);
    if (task == nullptr) throw std::runtime_error("unknown corpus task " + id);
    tasks.push_back(*task);
  }
  return timearena::combine_tasks(std::move(tasks), constraints, vocabulary());
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Golden dialogue format: lines starting with "> " are agent inputs, all
// other lines are expected environment output. Returns a human-readable
// mismatch description, empty on success.
inline std::string replay_golden(const std::string& golden_text, timearena::Episode& episode) {
  std::vector<std::string> lines;
  std::istringstream in(golden_text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);

  std::string actual = episode.prompt();
  size_t cursor = 0;
  for (const auto& golden_line : lines) {
    if (golden_line.rfind("> ", 0) == 0) {
      if (cursor < actual.size()) {
        return "unconsumed environment output before '" + golden_line + "'";
      }
      const std::string reply = episode.submit(golden_line.substr(2));
      actual = reply;
      if (!episode.finished()) actual += "\n" + episode.prompt();
      cursor = 0;
      continue;
    }
    // consume one line of `actual`
    const size_t end = actual.find('\n', cursor);
    const std::string got = actual.substr(cursor, end == std::string::npos ? std::string::npos
                                                                           : end - cursor);
    if (got != golden_line) {
      return "expected '" + golden_line + "' but engine produced '" + got + "'";
    }
    cursor = end == std::string::npos ? actual.size() : end + 1;
  }
  if (cursor < actual.size()) {
    return "engine produced extra output: '" + actual.substr(cursor) + "'";
  }
  return "";
}

// A tiny task built in code, for fixtures the corpus does not need.
struct FixtureTask {
  timearena::TaskDefinition task;

  FixtureTask(std::string id, timearena::Scenario scenario, std::string description) {
    task.id = std::move(id);
    task.scenario = scenario;
    task.description = std::move(description);
  }
  FixtureTask& object(std::string name, std::string state) {
    task.objects.push_back({std::move(name), std::move(state), 1});
    return *this;
  }
  FixtureTask& action(std::string id, std::string verb, std::vector<std::string> objects,
                      int duration, timearena::Occupancy occupancy,
                      std::vector<std::string> deps = {}, std::string connector = "") {
    timearena::ActionInstance inst;
    inst.id = std::move(id);
    inst.verb = std::move(verb);
    inst.connector = std::move(connector);
    inst.objects = std::move(objects);
    inst.duration_min = duration;
    inst.occupancy = occupancy;
    inst.depends_on = std::move(deps);
    inst.provenance = "authored";
    task.actions.push_back(std::move(inst));
    return *this;
  }
  timearena::TaskSet build(const std::vector<std::string>& constraints = {}) const {
    return timearena::combine_tasks({task}, constraints, vocabulary());
  }
};

}  // namespace ta_test
