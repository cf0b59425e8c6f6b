#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "timearena/vocabulary.hpp"

namespace timearena {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Scenario { kCooking, kHousehold, kLaboratory };
std::string scenario_name(Scenario scenario);
std::optional<Scenario> scenario_from_name(const std::string& name);

enum class Occupancy { kOccupiesAgent, kAgentIdle };

struct ObjectSpec {
  std::string name;
  std::string initial_state;
  int capacity = 1;
};

struct ActionInstance {
  std::string id;
  std::string verb;
  std::string connector;  // disambiguates templates sharing a verb ("put")
  std::vector<std::string> objects;
  int duration_min = 1;
  Occupancy occupancy = Occupancy::kOccupiesAgent;
  std::vector<std::string> depends_on;
  std::string provenance;  // "paper" or "authored"
};

struct TaskDefinition {
  std::string id;
  Scenario scenario = Scenario::kCooking;
  std::string description;
  std::vector<ObjectSpec> objects;
  std::vector<ActionInstance> actions;

  int total_duration_min() const;
};

// A task definition parsed from a single corpus document.
TaskDefinition parse_task_json(const std::string& text, const std::string& locus);

// Loads <dir>/actions.json plus every *.task document in the directory,
// sorted by filename. Every task is validated; the first violation aborts
// the load.
struct Corpus {
  Vocabulary vocabulary;
  std::vector<TaskDefinition> tasks;

  const TaskDefinition* find(const std::string& id) const;
};
Corpus load_corpus(const std::filesystem::path& dir);

// Violations are data, not failures: an empty list means the task is well
// formed against the vocabulary and the model invariants.
std::vector<std::string> validate_task(const TaskDefinition& task, const Vocabulary& vocab);

// One action of a combined task set, flattened and renamed.
struct SetAction {
  int index = 0;       // position in TaskSet::actions
  int task_index = 0;  // position in TaskSet::tasks
  std::string qualified_id;  // "<task_id>.<action_id>"
  std::string id;
  const ActionTemplate* tmpl = nullptr;
  std::vector<std::string> objects;  // post-rename names
  int duration_min = 1;
  Occupancy occupancy = Occupancy::kOccupiesAgent;
  std::vector<int> dep_indices;
  // State that the state-slot object is expected to hold once the
  // dependencies have completed (derived from the per-object chain).
  std::string state_object;
  std::string expected_state;

  std::string phrase() const;  // "cook rice in pot"
};

struct TaskSet {
  std::string id;
  std::vector<TaskDefinition> tasks;  // post-rename copies
  std::vector<ObjectSpec> merged_objects;
  std::vector<std::string> constraint_objects;
  int time_limit_min = 40;
  std::shared_ptr<const Vocabulary> vocabulary;

  std::vector<SetAction> actions;
  int total_duration_min = 0;

  const ObjectSpec* find_object(const std::string& name) const;
  std::vector<std::string> object_names() const;
};

// Merges 1..3 same-scenario tasks. Colliding object names are duplicated
// with _1/_2/... suffixes unless listed in constraint_objects, in which
// case the tasks share a single instance. time_limit_min = 40 * |tasks|.
TaskSet combine_tasks(std::vector<TaskDefinition> tasks,
                      const std::vector<std::string>& constraint_objects,
                      std::shared_ptr<const Vocabulary> vocab,
                      std::string set_id = "");

// The full prompt sent to the agent at episode start. Pure function of the
// set: identical input produces identical bytes.
std::string render_instruction(const TaskSet& set);

struct ManifestEntry {
  std::string id;
  std::vector<std::string> task_ids;
  std::vector<std::string> constraint_objects;
};
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& json_file);

TaskSet build_set(const Corpus& corpus, const ManifestEntry& entry);

}  // namespace timearena
