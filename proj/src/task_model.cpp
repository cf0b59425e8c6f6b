#include "timearena/task_model.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace timearena {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::kCooking: return "cooking";
    case Scenario::kHousehold: return "household";
    case Scenario::kLaboratory: return "laboratory";
  }
  return "cooking";
}

std::optional<Scenario> scenario_from_name(const std::string& name) {
  if (name == "cooking") return Scenario::kCooking;
  if (name == "household") return Scenario::kHousehold;
  if (name == "laboratory") return Scenario::kLaboratory;
  return std::nullopt;
}

int TaskDefinition::total_duration_min() const {
  int total = 0;
  for (const auto& a : actions) total += a.duration_min;
  return total;
}

TaskDefinition parse_task_json(const std::string& text, const std::string& locus) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(locus + ": " + e.what());
  }
  TaskDefinition task;
  try {
    task.id = doc.at("id").get<std::string>();
    const auto scen = scenario_from_name(doc.at("scenario").get<std::string>());
    if (!scen) throw ParseError(locus + ": unknown scenario '" +
                                doc.at("scenario").get<std::string>() + "'");
    task.scenario = *scen;
    task.description = doc.at("description").get<std::string>();
    for (const auto& obj : doc.at("objects")) {
      ObjectSpec spec;
      spec.name = obj.at("name").get<std::string>();
      spec.initial_state = obj.at("initial_state").get<std::string>();
      spec.capacity = obj.value("capacity", 1);
      task.objects.push_back(std::move(spec));
    }
    for (const auto& act : doc.at("actions")) {
      ActionInstance inst;
      inst.id = act.at("id").get<std::string>();
      inst.verb = act.at("verb").get<std::string>();
      inst.connector = act.value("connector", "");
      for (const auto& obj : act.at("objects")) inst.objects.push_back(obj.get<std::string>());
      inst.duration_min = act.at("duration_min").get<int>();
      const std::string occ = act.at("occupancy").get<std::string>();
      if (occ == "occupies_agent") {
        inst.occupancy = Occupancy::kOccupiesAgent;
      } else if (occ == "agent_idle") {
        inst.occupancy = Occupancy::kAgentIdle;
      } else {
        throw ParseError(locus + ": unknown occupancy '" + occ + "' in action " + inst.id);
      }
      if (act.contains("depends_on")) {
        for (const auto& dep : act.at("depends_on")) inst.depends_on.push_back(dep.get<std::string>());
      }
      inst.provenance = act.value("provenance", "authored");
      task.actions.push_back(std::move(inst));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(locus + ": " + e.what());
  }
  return task;
}

const TaskDefinition* Corpus::find(const std::string& id) const {
  for (const auto& t : tasks) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

Corpus load_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir) || !fs::is_directory(dir)) {
    throw ParseError("corpus directory not found: " + dir.string());
  }
  Corpus corpus;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".task") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  if (!fs::exists(dir / "actions.json")) {
    if (files.empty()) return corpus;  // nothing to load
    throw ParseError("missing vocabulary " + (dir / "actions.json").string());
  }
  corpus.vocabulary = Vocabulary::load(dir / "actions.json");
  for (const auto& file : files) {
    TaskDefinition task = parse_task_json(read_file(file), file.string());
    const auto violations = validate_task(task, corpus.vocabulary);
    if (!violations.empty()) {
      std::string msg = file.string() + ": invalid task '" + task.id + "':";
      for (const auto& v : violations) msg += "\n  " + v;
      throw ValidationError(msg);
    }
    if (corpus.find(task.id) != nullptr) {
      throw ValidationError(file.string() + ": duplicate task id '" + task.id + "'");
    }
    corpus.tasks.push_back(std::move(task));
  }
  return corpus;
}

namespace {

const ActionTemplate* resolve_template(const ActionInstance& inst, const Vocabulary& vocab,
                                       std::string* error) {
  const auto candidates = vocab.find_verb(inst.verb);
  if (candidates.empty()) {
    if (error) *error = "unknown verb '" + inst.verb + "'";
    return nullptr;
  }
  if (!inst.connector.empty()) {
    const ActionTemplate* t = vocab.find(inst.verb, inst.connector);
    if (t == nullptr && error) {
      *error = "no action '" + inst.verb + " ... " + inst.connector + " ...'";
    }
    return t;
  }
  if (candidates.size() > 1) {
    if (error) *error = "verb '" + inst.verb + "' is ambiguous; set \"connector\"";
    return nullptr;
  }
  return candidates.front();
}

// Transitive dependency closure as index sets, or nullopt on a cycle.
std::optional<std::vector<std::set<int>>> dependency_closure(
    const std::vector<std::vector<int>>& deps) {
  const int n = static_cast<int>(deps.size());
  std::vector<std::set<int>> closure(n);
  std::vector<int> state(n, 0);  // 0 fresh, 1 on stack, 2 done
  bool cyclic = false;
  std::function<void(int)> visit = [&](int u) {
    state[u] = 1;
    for (int v : deps[u]) {
      if (state[v] == 1) {
        cyclic = true;
        continue;
      }
      if (state[v] == 0) visit(v);
      closure[u].insert(v);
      closure[u].insert(closure[v].begin(), closure[v].end());
    }
    state[u] = 2;
  };
  for (int i = 0; i < n && !cyclic; ++i) {
    if (state[i] == 0) visit(i);
  }
  if (cyclic) return std::nullopt;
  return closure;
}

std::vector<int> cycle_members(const std::vector<std::vector<int>>& deps) {
  // Nodes that can reach themselves.
  const int n = static_cast<int>(deps.size());
  std::vector<int> members;
  for (int s = 0; s < n; ++s) {
    std::vector<bool> seen(n, false);
    std::vector<int> stack(deps[s]);
    bool hit = false;
    while (!stack.empty() && !hit) {
      int u = stack.back();
      stack.pop_back();
      if (u == s) {
        hit = true;
        break;
      }
      if (seen[u]) continue;
      seen[u] = true;
      for (int v : deps[u]) stack.push_back(v);
    }
    if (hit) members.push_back(s);
  }
  return members;
}

}  // namespace

std::vector<std::string> validate_task(const TaskDefinition& task, const Vocabulary& vocab) {
  std::vector<std::string> violations;
  if (task.description.empty()) violations.push_back("empty description");
  if (task.actions.empty()) violations.push_back("task has no actions");

  std::set<std::string> object_names;
  for (const auto& obj : task.objects) {
    if (!object_names.insert(obj.name).second) {
      violations.push_back("duplicate object '" + obj.name + "'");
    }
    if (obj.initial_state.empty()) {
      violations.push_back("object '" + obj.name + "' has empty initial_state");
    }
  }

  std::map<std::string, int> action_index;
  for (int i = 0; i < static_cast<int>(task.actions.size()); ++i) {
    const auto& a = task.actions[i];
    if (!action_index.emplace(a.id, i).second) {
      violations.push_back("duplicate action id '" + a.id + "'");
    }
  }

  std::vector<std::vector<int>> deps(task.actions.size());
  for (int i = 0; i < static_cast<int>(task.actions.size()); ++i) {
    const auto& a = task.actions[i];
    if (a.duration_min < 1 || a.duration_min > 10) {
      violations.push_back("action '" + a.id + "': duration out of range [1,10]: " +
                           std::to_string(a.duration_min));
    }
    std::string err;
    const ActionTemplate* tmpl = resolve_template(a, vocab, &err);
    if (tmpl == nullptr) {
      violations.push_back("action '" + a.id + "': " + err);
    } else if (static_cast<int>(a.objects.size()) != tmpl->arity) {
      violations.push_back("action '" + a.id + "': arity mismatch, '" + tmpl->slot_pattern +
                           "' wants " + std::to_string(tmpl->arity) + " objects, got " +
                           std::to_string(a.objects.size()));
    }
    for (const auto& obj : a.objects) {
      if (object_names.find(obj) == object_names.end()) {
        violations.push_back("action '" + a.id + "': dangling object reference '" + obj + "'");
      }
    }
    for (const auto& dep : a.depends_on) {
      auto it = action_index.find(dep);
      if (it == action_index.end()) {
        violations.push_back("action '" + a.id + "': unknown dependency '" + dep + "'");
      } else {
        deps[i].push_back(it->second);
      }
    }
  }

  const auto closure = dependency_closure(deps);
  if (!closure) {
    std::string names;
    for (int i : cycle_members(deps)) {
      if (!names.empty()) names += ", ";
      names += task.actions[i].id;
    }
    violations.push_back("cycle: {" + names + "}");
    return violations;  // the chain checks below assume a DAG
  }

  // Actions that transition the same object must be totally ordered by the
  // dependency relation, otherwise the expected-state chain is ambiguous.
  std::map<std::string, std::vector<int>> targeting;
  for (int i = 0; i < static_cast<int>(task.actions.size()); ++i) {
    const auto& a = task.actions[i];
    const ActionTemplate* tmpl = resolve_template(a, vocab, nullptr);
    if (tmpl == nullptr || static_cast<int>(a.objects.size()) != tmpl->arity) continue;
    targeting[a.objects[tmpl->state_slot - 1]].push_back(i);
  }
  for (const auto& [object, indices] : targeting) {
    for (size_t i = 0; i < indices.size(); ++i) {
      for (size_t j = i + 1; j < indices.size(); ++j) {
        const int a = indices[i], b = indices[j];
        if ((*closure)[a].count(b) == 0 && (*closure)[b].count(a) == 0) {
          violations.push_back("ambiguous state chain for object '" + object + "': actions '" +
                               task.actions[a].id + "' and '" + task.actions[b].id +
                               "' are dependency-unordered");
        }
      }
    }
  }
  return violations;
}

std::string SetAction::phrase() const {
  if (tmpl->arity == 1) return tmpl->verb + " " + objects[0];
  return tmpl->verb + " " + objects[0] + " " + tmpl->connector + " " + objects[1];
}

const ObjectSpec* TaskSet::find_object(const std::string& name) const {
  for (const auto& obj : merged_objects) {
    if (obj.name == name) return &obj;
  }
  return nullptr;
}

std::vector<std::string> TaskSet::object_names() const {
  std::vector<std::string> names;
  names.reserve(merged_objects.size());
  for (const auto& obj : merged_objects) names.push_back(obj.name);
  return names;
}

TaskSet combine_tasks(std::vector<TaskDefinition> tasks,
                      const std::vector<std::string>& constraint_objects,
                      std::shared_ptr<const Vocabulary> vocab, std::string set_id) {
  if (tasks.empty()) throw ValidationError("cannot combine an empty task list");
  if (tasks.size() > 3) throw ValidationError("at most 3 tasks per set");
  for (const auto& t : tasks) {
    if (t.scenario != tasks.front().scenario) {
      throw ValidationError("mixed-scenario combination: '" + tasks.front().id + "' is " +
                            scenario_name(tasks.front().scenario) + ", '" + t.id + "' is " +
                            scenario_name(t.scenario));
    }
  }

  TaskSet set;
  set.vocabulary = std::move(vocab);
  set.constraint_objects = constraint_objects;
  set.time_limit_min = 40 * static_cast<int>(tasks.size());

  const auto constrained = [&](const std::string& name) {
    return std::find(constraint_objects.begin(), constraint_objects.end(), name) !=
           constraint_objects.end();
  };

  // Tasks sharing an object name get per-task instances (name_1, name_2, ...)
  // unless the name is constrained to a single shared instance.
  std::map<std::string, std::vector<int>> users;  // name -> task positions
  for (int t = 0; t < static_cast<int>(tasks.size()); ++t) {
    for (const auto& obj : tasks[t].objects) users[obj.name].push_back(t);
  }
  for (int t = 0; t < static_cast<int>(tasks.size()); ++t) {
    std::map<std::string, std::string> rename;
    for (const auto& obj : tasks[t].objects) {
      const auto& u = users[obj.name];
      if (u.size() > 1 && !constrained(obj.name)) {
        const auto ordinal =
            std::distance(u.begin(), std::find(u.begin(), u.end(), t)) + 1;
        rename[obj.name] = obj.name + "_" + std::to_string(ordinal);
      }
    }
    for (auto& obj : tasks[t].objects) {
      auto it = rename.find(obj.name);
      if (it != rename.end()) obj.name = it->second;
    }
    for (auto& act : tasks[t].actions) {
      for (auto& obj : act.objects) {
        auto it = rename.find(obj);
        if (it != rename.end()) obj = it->second;
      }
    }
  }

  // Merged object list: first-seen order, duplicate instances grouped.
  {
    std::set<std::string> seen;
    // Walk tasks in order; when the first instance of a shared base name is
    // reached, emit all sibling instances next to it.
    std::map<std::string, std::vector<const ObjectSpec*>> by_base;
    auto base_of = [](const std::string& name) {
      const auto pos = name.find_last_of('_');
      if (pos == std::string::npos) return name;
      const std::string suffix = name.substr(pos + 1);
      if (suffix.empty() || suffix.find_first_not_of("0123456789") != std::string::npos)
        return name;
      return name.substr(0, pos);
    };
    for (const auto& task : tasks) {
      for (const auto& obj : task.objects) by_base[base_of(obj.name)].push_back(&obj);
    }
    for (const auto& task : tasks) {
      for (const auto& obj : task.objects) {
        const std::string base = base_of(obj.name);
        if (!seen.insert(base).second) continue;
        for (const ObjectSpec* sibling : by_base[base]) {
          if (set.find_object(sibling->name) == nullptr) set.merged_objects.push_back(*sibling);
        }
      }
    }
  }
  // Constrained shared instances: keep a single copy but make sure the
  // initial states agree.
  for (const auto& obj : set.merged_objects) {
    for (const auto& task : tasks) {
      for (const auto& other : task.objects) {
        if (other.name == obj.name && other.initial_state != obj.initial_state) {
          throw ValidationError("shared object '" + obj.name +
                                "' has conflicting initial states");
        }
      }
    }
  }

  set.tasks = std::move(tasks);
  if (set_id.empty()) {
    for (const auto& t : set.tasks) {
      if (!set_id.empty()) set_id += "+";
      set_id += t.id;
    }
  }
  set.id = std::move(set_id);

  // Flatten actions and derive expected states.
  std::map<std::string, int> index_of;  // qualified id -> flat index
  for (int t = 0; t < static_cast<int>(set.tasks.size()); ++t) {
    for (const auto& inst : set.tasks[t].actions) {
      SetAction sa;
      sa.index = static_cast<int>(set.actions.size());
      sa.task_index = t;
      sa.id = inst.id;
      sa.qualified_id = set.tasks[t].id + "." + inst.id;
      std::string err;
      sa.tmpl = resolve_template(inst, *set.vocabulary, &err);
      if (sa.tmpl == nullptr) {
        throw ValidationError(sa.qualified_id + ": " + err);
      }
      sa.objects = inst.objects;
      sa.duration_min = inst.duration_min;
      sa.occupancy = inst.occupancy;
      sa.state_object = inst.objects[sa.tmpl->state_slot - 1];
      index_of[sa.qualified_id] = sa.index;
      set.actions.push_back(std::move(sa));
      set.total_duration_min += inst.duration_min;
    }
  }
  for (int t = 0, flat = 0; t < static_cast<int>(set.tasks.size()); ++t) {
    for (const auto& inst : set.tasks[t].actions) {
      SetAction& sa = set.actions[flat++];
      for (const auto& dep : inst.depends_on) {
        sa.dep_indices.push_back(index_of.at(set.tasks[t].id + "." + dep));
      }
    }
  }
  // Expected state of the state-slot object: the to_state of the deepest
  // prerequisite that transitions the same object, else the initial state.
  // Same-object transitions are dependency-ordered per task (validated), so
  // walking transitive prerequisites and keeping the last chain link works.
  {
    std::vector<std::set<int>> closure(set.actions.size());
    for (const auto& sa : set.actions) {
      std::set<int>& c = closure[sa.index];
      std::vector<int> stack(sa.dep_indices);
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        if (!c.insert(u).second) continue;
        for (int v : set.actions[u].dep_indices) stack.push_back(v);
      }
    }
    for (auto& sa : set.actions) {
      const ObjectSpec* obj = set.find_object(sa.state_object);
      if (obj == nullptr) {
        throw ValidationError("action " + sa.qualified_id + " references unknown object '" +
                              sa.state_object + "'");
      }
      sa.expected_state = obj->initial_state;
      // Dependencies are intra-task, so same-object prerequisites are
      // totally ordered (validated); the deepest link wins.
      int best = -1;
      for (int p : closure[sa.index]) {
        if (set.actions[p].state_object != sa.state_object) continue;
        if (best == -1 || closure[p].count(best) > 0) best = p;
      }
      if (best >= 0) sa.expected_state = set.actions[best].tmpl->to_state;
    }
  }
  return set;
}

namespace {

constexpr const char* kPreamble =
    "As an AI agent, your objective is to efficiently complete a series of tasks as described. "
    "You must adhere to the specific requirements and constraints of each task, including "
    "dependencies and timing. Efficiency is key; complete all tasks in the shortest possible "
    "time. I will provide instructions regarding actions and objects.\n"
    "\n"
    "**Action Protocol**:\n"
    "- You can perform only one action at a time.\n"
    "- After each observation from the environment, output an action based on that observation "
    "and the instructions.\n"
    "- Actions fall into two categories:\n"
    "- Continuous Actions: Perform these actions until completion (e.g., \"wash OBJ\").\n"
    "- Autonomous Actions: These progress over time, allowing simultaneous tasks (e.g., \"heat "
    "OBJ\").\n"
    "- Follow the \"Valid Actions\" format for your output (e.g., \"wash cup\").\n"
    "- If no action is required, use \"wait\" to skip the current time.\n"
    "- Output the action explicitly (e.g., \"wash cup\").\n"
    "- Select object names (OBJ) from the list of Available Objects (e.g., use \"rice\" instead "
    "of \"cooked rice\").\n";

}  // namespace

std::string render_instruction(const TaskSet& set) {
  std::ostringstream out;
  out << kPreamble;
  for (int t = 0; t < static_cast<int>(set.tasks.size()); ++t) {
    const TaskDefinition& task = set.tasks[t];
    out << "\n**Task " << (t + 1) << "**\n";
    out << "<Description>\n";
    out << "- " << task.description << "\n";
    out << "<Valid Actions and Usages>\n";
    std::vector<const ActionTemplate*> listed;
    for (const auto& sa : set.actions) {
      if (sa.task_index != t) continue;
      if (std::find(listed.begin(), listed.end(), sa.tmpl) != listed.end()) continue;
      listed.push_back(sa.tmpl);
      out << "- " << sa.tmpl->slot_pattern << ": " << sa.tmpl->description << ".\n";
    }
    out << "- wait: pass the current time without doing anything.\n";
  }
  out << "\n**All Available Objects (OBJ)**\n";
  for (size_t i = 0; i < set.merged_objects.size(); ++i) {
    if (i > 0) out << "; ";
    out << set.merged_objects[i].name;
  }
  out << "\n";
  out << "\n**The Initial States of Objects**\n";
  for (size_t i = 0; i < set.merged_objects.size(); ++i) {
    if (i > 0) out << "; ";
    out << set.merged_objects[i].name << ": " << set.merged_objects[i].initial_state;
  }
  out << "\n";
  return out.str();
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& json_file) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(json_file));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(json_file.string() + ": " + e.what());
  }
  std::vector<ManifestEntry> entries;
  if (!doc.contains("sets") || !doc["sets"].is_array()) {
    throw ParseError(json_file.string() + ": missing 'sets' array");
  }
  for (const auto& item : doc["sets"]) {
    ManifestEntry entry;
    entry.id = item.at("id").get<std::string>();
    for (const auto& id : item.at("tasks")) entry.task_ids.push_back(id.get<std::string>());
    if (item.contains("constraint_objects")) {
      for (const auto& name : item["constraint_objects"]) {
        entry.constraint_objects.push_back(name.get<std::string>());
      }
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

TaskSet build_set(const Corpus& corpus, const ManifestEntry& entry) {
  std::vector<TaskDefinition> tasks;
  for (const auto& id : entry.task_ids) {
    const TaskDefinition* task = corpus.find(id);
    if (task == nullptr) throw ValidationError("manifest references unknown task '" + id + "'");
    tasks.push_back(*task);
  }
  auto vocab = std::make_shared<Vocabulary>(corpus.vocabulary);
  return combine_tasks(std::move(tasks), entry.constraint_objects, std::move(vocab), entry.id);
}

}  // namespace timearena
