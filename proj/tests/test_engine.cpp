#include <algorithm>
#include <set>

#include "doctest.h"
#include "test_helpers.hpp"
#include "timearena/engine.hpp"

using namespace timearena;
using ta_test::make_set;

namespace {

// Independent parse oracle: enumerate every phrase the vocabulary and
// object set can form, locate each as a token sequence in the text, and
// keep the one that starts last. Slow and simple on purpose.
std::vector<std::string> oracle_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

std::string oracle_last_phrase(const std::string& text, const TaskSet& set) {
  const auto tokens = oracle_tokens(text);
  std::vector<std::vector<std::string>> phrases;
  phrases.push_back({"wait"});
  for (const auto& sa : set.actions) {
    std::vector<std::string> phrase{sa.tmpl->verb, sa.objects[0]};
    if (sa.tmpl->arity == 2) {
      phrase.push_back(sa.tmpl->connector);
      phrase.push_back(sa.objects[1]);
    }
    phrases.push_back(std::move(phrase));
  }
  int best_pos = -1;
  std::string best;
  for (const auto& phrase : phrases) {
    for (int start = 0; start + phrase.size() <= tokens.size(); ++start) {
      bool match = true;
      for (size_t k = 0; k < phrase.size(); ++k) {
        if (tokens[start + k] != phrase[k]) {
          match = false;
          break;
        }
      }
      if (match && start > best_pos) {
        best_pos = start;
        std::string joined;
        for (const auto& token : phrase) {
          if (!joined.empty()) joined += " ";
          joined += token;
        }
        best = joined;
      }
    }
  }
  return best;  // empty when nothing matched
}

}  // namespace

TEST_CASE("parse extracts the action from prose") {
  const TaskSet clothes = make_set({"wash_clothes"});
  // "I will wash clothes" -- wash is licensed only via the machine here,
  // but parsing is still (wash, clothes)
  const ActionRequest req =
      parse_action("I will wash clothes", *clothes.vocabulary, clothes.object_names());
  CHECK(req.parseable);
  CHECK(req.verb == "wash");
  REQUIRE(req.objects.size() == 1);
  CHECK(req.objects[0] == "clothes");
}

TEST_CASE("parse handles wait and multi-phrase text") {
  const TaskSet set = make_set({"beef_fried_rice"});
  const auto names = set.object_names();

  const ActionRequest wait = parse_action("wait", *set.vocabulary, names);
  CHECK(wait.is_wait);

  const ActionRequest last =
      parse_action("First pick rice, then cook rice in pot", *set.vocabulary, names);
  CHECK(!last.is_wait);
  CHECK(last.verb == "cook");
  CHECK(last.connector == "in");
  CHECK(last.objects == std::vector<std::string>{"rice", "pot"});
}

TEST_CASE("parse agrees with the brute-force phrase oracle") {
  const TaskSet set = make_set({"beef_fried_rice", "noodle_dish"});
  const auto names = set.object_names();
  const std::vector<std::string> samples = {
      "wash dish_1",
      "I think I should wash dish_2 now",
      "First pick beef, then chop beef",
      "cook rice in pot_1",
      "maybe wait for a bit",
      "add mushroom to dish_2 please",
      "fry beef in fryer_1 then wait",
      "pick noodle. pick mushroom. pick shrimp",
  };
  for (const auto& text : samples) {
    const std::string expected = oracle_last_phrase(text, set);
    const ActionRequest got = parse_action(text, *set.vocabulary, names);
    INFO("text: ", text);
    REQUIRE(!expected.empty());
    CHECK(got.phrase == expected);
  }
}

TEST_CASE("unknown verbs still produce a request that validates as invalid") {
  const TaskSet tea = make_set({"make_tea"});
  Episode episode(tea);
  const std::string reply = episode.submit("clean teapot");
  CHECK(reply == "clean teapot is invalid");
  CHECK(episode.transcript().back().kind == FeedbackKind::kInvalidAction);
}

TEST_CASE("validation follows the fixed check order") {
  const TaskSet tea = make_set({"make_tea"});
  Episode episode(tea);

  // nonexistent object
  CHECK(episode.submit("wash pan") == "pan is non-existent");
  // unlicensed pairing
  CHECK(episode.submit("wash kettle") == "You cannot perform wash on kettle.");
  // dependency violation at T=4 (the front-figure walkthrough): boil water
  // in flight, teapot never washed
  CHECK(episode.submit("activate kettle") ==
        "You are doing ``activate kettle``, it will take 8 minutes.");
  CHECK(episode.clock() == 4);
  const std::string brew = episode.submit("brew tea with teapot");
  CHECK(brew == "Cannot perform action brew with on object kettle. Because kettle is inactive.");
  CHECK(episode.transcript().back().kind == FeedbackKind::kWrongInput);
}

TEST_CASE("wrong-input feedback names the blocking object and its state") {
  ta_test::FixtureTask fixture("shrimp_pot", Scenario::kCooking, "shrimp fixture");
  fixture.object("shrimp", "raw").object("fryer", "empty").object("pot", "empty");
  fixture.action("fry_shrimp", "fry", {"shrimp", "fryer"}, 3, Occupancy::kAgentIdle);
  fixture.action("add_shrimp", "add", {"shrimp", "pot"}, 1, Occupancy::kOccupiesAgent,
                 {"fry_shrimp"});
  const TaskSet set = fixture.build();
  Episode episode(set);
  CHECK(episode.submit("add shrimp to pot") ==
        "Cannot perform action add to on object shrimp. Because shrimp is raw.");
}

TEST_CASE("occupied objects are reported after state checks") {
  ta_test::FixtureTask fixture("two_pots", Scenario::kCooking, "occupancy fixture");
  fixture.object("rice", "raw").object("soup", "raw").object("pot", "empty");
  fixture.action("cook_rice", "cook", {"rice", "pot"}, 4, Occupancy::kAgentIdle);
  fixture.action("cook_soup", "cook", {"soup", "pot"}, 3, Occupancy::kAgentIdle);
  const TaskSet set = fixture.build();
  Episode episode(set);
  episode.submit("cook rice in pot");
  CHECK(episode.submit("cook soup in pot") ==
        "Object pot is being occupied by another action");
  CHECK(episode.transcript().back().kind == FeedbackKind::kOccupiedObject);
}

TEST_CASE("re-requesting a completed action reports already completed") {
  const TaskSet tea = make_set({"make_tea"});
  Episode episode(tea);
  episode.submit("wash teapot");
  CHECK(episode.clock() == 3);
  CHECK(episode.submit("wash teapot") == "wash teapot has been completed");
  CHECK(episode.transcript().back().kind == FeedbackKind::kAlreadyCompleted);
}

TEST_CASE("occupying actions fast-forward the clock") {
  const TaskSet coffee = make_set({"coffee"});
  Episode episode(coffee);
  // wash cup, 9 minutes, agent busy until t=10
  const std::string reply = episode.submit("wash cup");
  CHECK(reply == "You are doing ``wash cup``, it will take 9 minutes.\ncup is clean.");
  CHECK(episode.clock() == 10);
  CHECK(episode.prompt() == "In t=10, your action is:");
}

TEST_CASE("idle actions return the next prompt one minute later") {
  const TaskSet beef = make_set({"beef_fried_rice"});
  Episode episode(beef);
  episode.submit("wash dish");
  CHECK(episode.clock() == 3);
  episode.submit("cook rice in pot");
  CHECK(episode.clock() == 4);  // prompted again while the rice cooks
  CHECK(episode.submit("wait") == "You wait for one minute.");
  CHECK(episode.clock() == 5);
}

TEST_CASE("an eight minute idle action started at t=1 completes at t=9") {
  const TaskSet tea = make_set({"make_tea"});
  Episode episode(tea);
  episode.submit("activate kettle");
  for (int t = 2; t < 8; ++t) episode.submit("wait");
  CHECK(episode.clock() == 8);
  const std::string reply = episode.submit("wait");
  CHECK(reply == "You wait for one minute.\nkettle is active.");
  CHECK(episode.clock() == 9);
  CHECK(episode.object_state("kettle") == "active");
}

TEST_CASE("simultaneous completions surface in start order") {
  ta_test::FixtureTask fixture("parallel", Scenario::kHousehold, "two idle actions");
  fixture.object("iron", "cool").object("kettle", "inactive");
  fixture.action("heat_iron", "heat", {"iron"}, 3, Occupancy::kAgentIdle);
  fixture.action("boil", "activate", {"kettle"}, 2, Occupancy::kAgentIdle);
  const TaskSet set = fixture.build();
  Episode episode(set);
  episode.submit("heat iron");      // completes at t=4
  episode.submit("activate kettle");  // completes at t=4 as well
  episode.submit("wait");             // t=3 -> 4
  const auto& last = episode.transcript().back();
  CHECK(last.feedback_text == "You wait for one minute.\niron is hot.\nkettle is active.");
}

TEST_CASE("error streak semantics") {
  const TaskSet tea = make_set({"make_tea"});

  SUBCASE("five consecutive errors end the episode") {
    Episode episode(tea);
    for (int i = 0; i < 4; ++i) {
      episode.submit("nonsense");
      CHECK(!episode.finished());
    }
    episode.submit("nonsense");
    REQUIRE(episode.finished());
    CHECK(episode.outcome().reason == OutcomeReason::kErrorStreak);
    CHECK(episode.outcome().end_clock == 6);  // each failed attempt consumed a minute
  }

  SUBCASE("a valid action resets the streak") {
    Episode episode(tea);
    for (int i = 0; i < 4; ++i) episode.submit("nonsense");
    episode.submit("wash teapot");
    CHECK(episode.error_streak() == 0);
    episode.submit("nonsense");
    CHECK(!episode.finished());
    CHECK(episode.error_streak() == 1);
  }

  SUBCASE("wait also resets the streak") {
    Episode episode(tea);
    episode.submit("nonsense");
    episode.submit("wait");
    for (int i = 0; i < 4; ++i) {
      episode.submit("nonsense");
    }
    CHECK(!episode.finished());  // 1 error, wait, then only 4 in a row
    episode.submit("nonsense");
    REQUIRE(episode.finished());
    CHECK(episode.outcome().reason == OutcomeReason::kErrorStreak);
  }
}

TEST_CASE("finishing conditions") {
  SUBCASE("all done records the completion minute") {
    const TaskSet garden = make_set({"garden_bed"});
    Episode episode(garden);
    episode.submit("add herbicide to sprinkling_can");
    episode.submit("weed_with sprinkling_can");
    episode.submit("hoe land");
    episode.submit("plant flower");
    REQUIRE(episode.finished());
    CHECK(episode.outcome().reason == OutcomeReason::kAllDone);
    CHECK(episode.outcome().completion_minute == 10);  // 1+3+4+2 sequential
    CHECK(episode.outcome().final_progress_pct == Fraction(100));
  }

  SUBCASE("running out the clock times out with partial progress") {
    ta_test::FixtureTask fixture("partial", Scenario::kCooking, "timeout fixture");
    fixture.object("beef", "whole").object("dish", "dirty");
    fixture.action("chop", "chop", {"beef"}, 8, Occupancy::kOccupiesAgent);
    fixture.action("wash", "wash", {"dish"}, 2, Occupancy::kOccupiesAgent);
    const TaskSet set = fixture.build();
    Episode episode(set, 10);
    episode.submit("chop beef");  // 80% once complete
    while (!episode.finished()) episode.submit("wait");
    CHECK(episode.outcome().reason == OutcomeReason::kTimeOut);
    CHECK(episode.outcome().end_clock == 11);
    CHECK(episode.outcome().final_progress_pct == Fraction(80));
  }
}

TEST_CASE("wait changes only the clock and streak") {
  const TaskSet beef = make_set({"beef_fried_rice"});
  Episode episode(beef);
  const Fraction before = episode.progress();
  const auto state_before = episode.object_state("rice");
  episode.submit("wait");
  CHECK(episode.progress() == before);
  CHECK(episode.object_state("rice") == state_before);
  CHECK(episode.clock() == 2);
}

TEST_CASE("golden appendix interaction replays byte for byte") {
  const TaskSet beef = make_set({"beef_fried_rice"});
  Episode episode(beef);
  const std::string golden =
      ta_test::read_file(ta_test::golden_dir() + "/appendix_interaction.txt");
  const std::string mismatch = ta_test::replay_golden(golden, episode);
  CHECK(mismatch == "");
  REQUIRE(episode.finished());
  CHECK(episode.outcome().reason == OutcomeReason::kAllDone);
  CHECK(episode.outcome().completion_minute == 11);
}

TEST_CASE("identical submissions give byte-identical transcripts") {
  const TaskSet set = make_set({"chicken_potato_stir_fry"});
  const std::vector<std::string> script = {"pick chicken", "chop chicken",
                                           "fry chicken in fryer", "wait", "wash dish",
                                           "nonsense", "pick potato"};
  auto run = [&] {
    Episode episode(set);
    for (const auto& text : script) {
      if (episode.finished()) break;
      episode.submit(text);
    }
    return episode.trajectory_jsonl();
  };
  CHECK(run() == run());
}

TEST_CASE("progress is monotone and exactly normalized") {
  const TaskSet set = make_set({"noodle_dish"});
  Episode episode(set);
  Fraction last = episode.progress();
  Fraction total(0);
  for (const auto& sa : set.actions) {
    total = total + Fraction(100LL * sa.duration_min, set.total_duration_min);
  }
  CHECK(total == Fraction(100));  // the s_i sum to exactly 100
  const std::vector<std::string> script = {
      "pick noodle", "cook noodle in pot", "pick mushroom", "chop mushroom",
      "fry mushroom in fryer", "pick shrimp", "wash dish", "fry shrimp in fryer",
      "add noodle to dish", "add mushroom to dish", "add shrimp to dish"};
  for (const auto& text : script) {
    if (episode.finished()) break;
    episode.submit(text);
    CHECK(last <= episode.progress());
    last = episode.progress();
    episode.check_invariants();
  }
}
