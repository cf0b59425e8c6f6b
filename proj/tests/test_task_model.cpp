#include <algorithm>
#include <filesystem>
#include <map>

#include "doctest.h"
#include "test_helpers.hpp"
#include "timearena/task_model.hpp"

using namespace timearena;
using ta_test::corpus;
using ta_test::make_set;

TEST_CASE("corpus loads with the published tasks") {
  const Corpus& c = corpus();
  CHECK(c.tasks.size() == 9);
  CHECK(c.vocabulary.templates().size() == 45);

  const TaskDefinition* tea = c.find("make_tea");
  REQUIRE(tea != nullptr);
  REQUIRE(tea->actions.size() == 4);
  CHECK(tea->actions[0].verb == "activate");  // boil water via the kettle
  CHECK(tea->actions[1].verb == "wash");
  CHECK(tea->actions[2].verb == "brew");
  CHECK(tea->actions[3].verb == "pour");

  const TaskDefinition* beef = c.find("beef_fried_rice");
  REQUIRE(beef != nullptr);
  REQUIRE(beef->objects.size() == 5);
  std::map<std::string, std::string> states;
  for (const auto& obj : beef->objects) states[obj.name] = obj.initial_state;
  CHECK(states.at("rice") == "unpicked");
  CHECK(states.at("beef") == "unpicked");
  CHECK(states.at("pot") == "empty");
  CHECK(states.at("fryer") == "empty");
  CHECK(states.at("dish") == "dirty");
}

TEST_CASE("empty directory loads as an empty corpus") {
  const auto dir = std::filesystem::temp_directory_path() / "ta_empty_corpus";
  std::filesystem::create_directories(dir);
  const Corpus c = load_corpus(dir);
  CHECK(c.tasks.empty());
}

TEST_CASE("validator flags the spec'd violations") {
  const Vocabulary& vocab = corpus().vocabulary;

  ta_test::FixtureTask cyclic("cyclic", Scenario::kCooking, "cycle fixture");
  cyclic.object("dish", "dirty");
  cyclic.action("a1", "wash", {"dish"}, 2, Occupancy::kOccupiesAgent, {"a1"});
  const auto cycle_report = validate_task(cyclic.task, vocab);
  REQUIRE(!cycle_report.empty());
  CHECK(cycle_report.front().find("cycle") != std::string::npos);
  CHECK(cycle_report.front().find("a1") != std::string::npos);

  ta_test::FixtureTask slow("slow", Scenario::kCooking, "duration fixture");
  slow.object("dish", "dirty");
  slow.action("a1", "wash", {"dish"}, 12, Occupancy::kOccupiesAgent);
  const auto slow_report = validate_task(slow.task, vocab);
  REQUIRE(!slow_report.empty());
  CHECK(slow_report.front().find("duration out of range") != std::string::npos);

  ta_test::FixtureTask dangling("dangling", Scenario::kCooking, "object fixture");
  dangling.object("dish", "dirty");
  dangling.action("a1", "wash", {"plate"}, 2, Occupancy::kOccupiesAgent);
  const auto dangling_report = validate_task(dangling.task, vocab);
  REQUIRE(!dangling_report.empty());
  CHECK(dangling_report.front().find("dangling object reference") != std::string::npos);

  ta_test::FixtureTask arity("arity", Scenario::kCooking, "arity fixture");
  arity.object("rice", "raw");
  arity.action("a1", "cook", {"rice"}, 2, Occupancy::kAgentIdle);
  const auto arity_report = validate_task(arity.task, vocab);
  REQUIRE(!arity_report.empty());
  CHECK(arity_report.front().find("arity mismatch") != std::string::npos);

  for (const auto& task : corpus().tasks) {
    CHECK(validate_task(task, vocab).empty());
  }
}

TEST_CASE("combining tasks duplicates shared objects with suffixes") {
  const TaskSet set = make_set({"pizza", "chicken_potato_stir_fry"});
  const auto names = set.object_names();
  const std::vector<std::string> expected = {"dish_1", "dish_2", "dough",   "cheese", "tomato",
                                             "oven",   "chicken", "potato", "fryer"};
  CHECK(names == expected);
  CHECK(set.find_object("dish_1")->initial_state == "dirty");
  CHECK(set.find_object("dish_2")->initial_state == "dirty");
  CHECK(set.time_limit_min == 80);
}

TEST_CASE("single task set gets a 40 minute limit") {
  const TaskSet set = make_set({"beef_fried_rice"});
  CHECK(set.time_limit_min == 40);
  CHECK(set.time_limit_min / 40 == static_cast<int>(set.tasks.size()));
}

TEST_CASE("constraint mode shares a single instance") {
  const TaskSet set = make_set({"beef_fried_rice", "noodle_dish"}, {"pot"});
  int pots = 0;
  for (const auto& name : set.object_names()) {
    if (name.rfind("pot", 0) == 0) ++pots;
  }
  CHECK(pots == 1);
  CHECK(set.find_object("pot") != nullptr);
  // non-constrained collisions still duplicate
  CHECK(set.find_object("fryer_1") != nullptr);
  CHECK(set.find_object("fryer_2") != nullptr);
}

TEST_CASE("combination rejects bad input") {
  CHECK_THROWS_AS(make_set({"beef_fried_rice", "make_tea"}), ValidationError);
  CHECK_THROWS_AS(combine_tasks({}, {}, ta_test::vocabulary()), ValidationError);
}

TEST_CASE("merged object multiset is invariant under task permutation") {
  const TaskSet ab = make_set({"beef_fried_rice", "noodle_dish"});
  const TaskSet ba = make_set({"noodle_dish", "beef_fried_rice"});
  auto multiset = [](const TaskSet& set) {
    std::map<std::string, int> counts;
    for (const auto& obj : set.merged_objects) {
      std::string base = obj.name;
      const auto pos = base.find_last_of('_');
      if (pos != std::string::npos &&
          base.find_first_not_of("0123456789", pos + 1) == std::string::npos) {
        base = base.substr(0, pos);
      }
      counts[base]++;
    }
    return counts;
  };
  CHECK(multiset(ab) == multiset(ba));
  CHECK(ab.time_limit_min == ba.time_limit_min);
}

TEST_CASE("instruction rendering is pure and matches the golden bytes") {
  const TaskSet set = make_set({"beef_fried_rice"});
  const std::string once = render_instruction(set);
  const std::string twice = render_instruction(set);
  CHECK(once == twice);
  CHECK(once == ta_test::read_file(ta_test::golden_dir() + "/beef_fried_rice_instruction.txt"));
  CHECK(once.find("rice; beef; pot; fryer; dish") != std::string::npos);
}

TEST_CASE("triple set renders three task blocks and one object section") {
  const TaskSet set = make_set({"garden_bed", "iron_suit", "coffee"});
  const std::string text = render_instruction(set);
  CHECK(text.find("**Task 1**") != std::string::npos);
  CHECK(text.find("**Task 2**") != std::string::npos);
  CHECK(text.find("**Task 3**") != std::string::npos);
  CHECK(text.find("**Task 4**") == std::string::npos);
  CHECK(text.find("Make a cup of coffee") != std::string::npos);

  size_t count = 0;
  for (size_t pos = text.find("**All Available Objects"); pos != std::string::npos;
       pos = text.find("**All Available Objects", pos + 1)) {
    ++count;
  }
  CHECK(count == 1);
}

TEST_CASE("every action instance resolves to a template of matching arity") {
  for (const auto& id : {"beef_fried_rice", "noodle_dish", "pizza", "chicken_potato_stir_fry",
                         "make_tea", "wash_clothes", "garden_bed", "iron_suit", "coffee"}) {
    const TaskSet set = make_set({id});
    for (const auto& sa : set.actions) {
      REQUIRE(sa.tmpl != nullptr);
      CHECK(static_cast<int>(sa.objects.size()) == sa.tmpl->arity);
    }
  }
}

TEST_CASE("manifest loading") {
  const auto entries = load_manifest(ta_test::data_dir() + "/manifests/singles.json");
  CHECK(entries.size() == 9);
  CHECK(entries.front().id == "cooking_single_1");
  CHECK(entries.front().task_ids == std::vector<std::string>{"beef_fried_rice"});
}
