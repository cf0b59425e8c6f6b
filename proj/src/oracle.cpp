#include "timearena/oracle.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <unordered_map>

#include "json.hpp"

namespace timearena {

std::string schedule_method_name(ScheduleMethod method) {
  return method == ScheduleMethod::kGreedy ? "greedy" : "brute_force";
}

std::string ScheduleResult::to_json() const {
  nlohmann::json doc;
  doc["method"] = schedule_method_name(method);
  doc["makespan_min"] = makespan_min;
  doc["timeline"] = nlohmann::json::array();
  for (const auto& start : timeline) {
    doc["timeline"].push_back({{"minute", start.minute},
                               {"action", start.qualified_id},
                               {"text", start.phrase}});
  }
  return doc.dump();
}

namespace {

// Priority list of the published heuristic: non-occupying actions sorted by
// duration descending, then the occupying ones, with every action's
// prerequisite closure (BFS order) spliced in front of it.
std::vector<int> greedy_priority_list(const TaskSet& set) {
  std::vector<int> idle, busy;
  for (const auto& sa : set.actions) {
    (sa.occupancy == Occupancy::kAgentIdle ? idle : busy).push_back(sa.index);
  }
  std::stable_sort(idle.begin(), idle.end(), [&](int a, int b) {
    return set.actions[a].duration_min > set.actions[b].duration_min;
  });
  std::vector<int> concat = idle;
  concat.insert(concat.end(), busy.begin(), busy.end());

  std::vector<int> list;
  std::vector<bool> placed(set.actions.size(), false);
  for (int a : concat) {
    if (placed[a]) continue;
    std::deque<int> queue(set.actions[a].dep_indices.begin(), set.actions[a].dep_indices.end());
    std::vector<bool> seen(set.actions.size(), false);
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      if (seen[p]) continue;
      seen[p] = true;
      if (!placed[p]) {
        placed[p] = true;
        list.push_back(p);
      }
      for (int q : set.actions[p].dep_indices) queue.push_back(q);
    }
    placed[a] = true;
    list.push_back(a);
  }
  return list;
}

}  // namespace

std::vector<int> greedy_priority_order(const TaskSet& set) {
  return greedy_priority_list(set);
}

ScheduleResult greedy_minimal_time(const TaskSet& set) {
  ScheduleResult result;
  result.method = ScheduleMethod::kGreedy;
  if (set.actions.empty()) return result;

  const std::vector<int> priority = greedy_priority_list(set);
  // Generous limit: any serial execution fits in total duration plus one
  // launch minute per action.
  const int limit = set.total_duration_min + static_cast<int>(set.actions.size()) + 5;
  Episode episode(set, limit);

  while (!episode.finished()) {
    int pick = -1;
    for (int idx : priority) {
      if (episode.action_startable(idx)) {
        pick = idx;
        break;
      }
    }
    if (pick == -1) {
      episode.submit("wait");
      continue;
    }
    const int minute = episode.clock();
    const std::string phrase = set.actions[pick].phrase();
    const std::string response = episode.submit(phrase);
    if (response.rfind("You are doing", 0) != 0) {
      throw std::logic_error("greedy picked a non-startable action: " + phrase);
    }
    result.timeline.push_back({minute, pick, set.actions[pick].qualified_id, phrase});
  }
  if (episode.outcome().reason != OutcomeReason::kAllDone) {
    throw ValidationError("greedy execution did not complete set '" + set.id +
                          "' (cyclic or infeasible after merge)");
  }
  result.makespan_min = *episode.outcome().completion_minute;
  return result;
}

namespace {

// Internal scheduler state for the exhaustive search. Timing matches the
// engine exactly: an action started at minute s with duration d completes
// at minute s+d; an idle launch costs the agent one minute; an occupying
// action blocks the agent through minute s+d-1.
struct SearchState {
  int minute = 1;
  std::uint32_t completed = 0;
  std::vector<std::pair<int, int>> in_flight;  // (action, completion minute), start order
  int last_completion = 0;                     // latest completion event seen
};

class BruteForce {
 public:
  explicit BruteForce(const TaskSet& set) : set_(set) {
    const int n = static_cast<int>(set.actions.size());
    durations_.resize(n);
    occupies_.resize(n);
    deps_.resize(n);
    critical_.assign(n, 0);
    for (const auto& sa : set.actions) {
      durations_[sa.index] = sa.duration_min;
      occupies_[sa.index] = sa.occupancy == Occupancy::kOccupiesAgent;
      deps_[sa.index] = sa.dep_indices;
    }
    for (int i = 0; i < n; ++i) critical(i);
    // Twin phrases must start in flat order (the engine resolves a phrase
    // to its first pending instance).
    std::map<std::string, std::vector<int>> by_phrase;
    for (const auto& sa : set.actions) by_phrase[sa.phrase()].push_back(sa.index);
    phrase_prev_.assign(n, -1);
    for (auto& [phrase, members] : by_phrase) {
      for (size_t i = 1; i < members.size(); ++i) phrase_prev_[members[i]] = members[i - 1];
    }
  }

  ScheduleResult run() {
    ScheduleResult result;
    result.method = ScheduleMethod::kBruteForce;
    if (set_.actions.empty()) return result;

    // The greedy schedule is a feasible incumbent; states that provably
    // cannot beat it are cut. The bound is static, so memoized values stay
    // exact for every state an optimal path can visit.
    upper_bound_ = greedy_minimal_time(set_).makespan_min;

    SearchState init;
    const int optimal = solve(init);
    if (optimal >= std::numeric_limits<int>::max()) {
      throw ValidationError("brute force found no feasible schedule for '" + set_.id + "'");
    }
    result.makespan_min = optimal;
    reconstruct(init, optimal, result.timeline);
    return result;
  }

 private:
  int critical(int a) {
    if (critical_[a] > 0) return critical_[a];
    int longest = 0;
    for (int d : deps_[a]) longest = std::max(longest, critical(d));
    critical_[a] = durations_[a] + longest;
    return critical_[a];
  }

  bool startable(const SearchState& s, int a) const {
    if (s.completed & (1u << a)) return false;
    for (const auto& [idx, done] : s.in_flight) {
      if (idx == a) return false;
    }
    if (phrase_prev_[a] >= 0 && !(s.completed & (1u << phrase_prev_[a]))) return false;
    for (int d : deps_[a]) {
      if (!(s.completed & (1u << d))) return false;
    }
    for (const auto& [idx, done] : s.in_flight) {
      for (const auto& obj : set_.actions[idx].objects) {
        for (const auto& mine : set_.actions[a].objects) {
          if (obj == mine) return false;
        }
      }
    }
    return true;
  }

  static void tick_to(SearchState& s, int minute) {
    while (s.minute < minute) {
      ++s.minute;
      auto it = s.in_flight.begin();
      while (it != s.in_flight.end()) {
        if (it->second == s.minute) {
          s.completed |= 1u << it->first;
          s.last_completion = std::max(s.last_completion, it->second);
          it = s.in_flight.erase(it);
        } else {
          ++it;
        }
      }
    }
  }

  SearchState apply(const SearchState& s, int choice) const {
    SearchState next = s;
    if (choice >= 0) {
      const int done = s.minute + durations_[choice];
      next.in_flight.emplace_back(choice, done);
      tick_to(next, occupies_[choice] ? done : s.minute + 1);
    } else {
      tick_to(next, s.minute + 1);
    }
    return next;
  }

  bool all_done(const SearchState& s) const {
    return s.completed == (set_.actions.size() >= 32
                               ? ~0u
                               : ((1u << set_.actions.size()) - 1));
  }

  std::string key(const SearchState& s) const {
    std::string k;
    k.reserve(8 + s.in_flight.size() * 2);
    k.append(reinterpret_cast<const char*>(&s.completed), 4);
    for (const auto& [idx, done] : s.in_flight) {
      k.push_back(static_cast<char>(idx));
      k.push_back(static_cast<char>(done - s.minute));
    }
    return k;
  }

  int lower_bound(const SearchState& s) const {
    const int n = static_cast<int>(set_.actions.size());
    // Earliest possible completion event per action, ignoring resource
    // contention: in-flight work keeps its real event, everything else
    // chains behind its prerequisites.
    std::vector<int> event(n, -1);
    std::function<int(int)> earliest = [&](int a) -> int {
      if (event[a] >= 0) return event[a];
      for (const auto& [idx, done] : s.in_flight) {
        if (idx == a) return event[a] = done;
      }
      int start = s.minute;
      for (int d : deps_[a]) {
        if (!(s.completed & (1u << d))) start = std::max(start, earliest(d));
      }
      return event[a] = start + durations_[a];
    };

    int bound = s.minute - 1;
    int agent_work = 0;
    for (int a = 0; a < n; ++a) {
      if (s.completed & (1u << a)) continue;
      bound = std::max(bound, earliest(a) - 1);
      bool flying = false;
      for (const auto& [idx, done] : s.in_flight) {
        if (idx == a) flying = true;
      }
      if (!flying) agent_work += occupies_[a] ? durations_[a] : 1;
    }
    bound = std::max(bound, s.minute - 1 + agent_work);
    return bound;
  }

  // Minimal achievable makespan from `s` when it does not exceed the static
  // incumbent, INT_MAX otherwise.
  int solve(const SearchState& s) {
    if (all_done(s)) return std::max(s.last_completion - 1, 0);
    if (lower_bound(s) > upper_bound_) return std::numeric_limits<int>::max();
    const std::string k = key(s);
    auto hit = memo_.find(k);
    if (hit != memo_.end()) {
      return hit->second == kInfeasible ? std::numeric_limits<int>::max()
                                        : s.minute - 1 + hit->second;
    }

    int result = std::numeric_limits<int>::max();
    for (int choice : choices(s)) {
      result = std::min(result, solve(apply(s, choice)));
    }
    memo_[k] = result == std::numeric_limits<int>::max()
                   ? kInfeasible
                   : result - (s.minute - 1);
    return result;
  }

  std::vector<int> choices(const SearchState& s) const {
    std::vector<int> out;
    for (int a = 0; a < static_cast<int>(set_.actions.size()); ++a) {
      if (startable(s, a)) out.push_back(a);
    }
    // Longer chains first; good orderings hit the memo sooner.
    std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
      return critical_[a] > critical_[b];
    });
    if (!s.in_flight.empty()) out.push_back(-1);  // waiting only helps if work is pending
    return out;
  }

  void reconstruct(SearchState s, int optimal, std::vector<ScheduledStart>& timeline) {
    while (!all_done(s)) {
      bool stepped = false;
      for (int choice : choices(s)) {
        SearchState next = apply(s, choice);
        if (solve(next) == optimal) {
          if (choice >= 0) {
            timeline.push_back({s.minute, choice, set_.actions[choice].qualified_id,
                                set_.actions[choice].phrase()});
          }
          s = std::move(next);
          stepped = true;
          break;
        }
      }
      if (!stepped) throw std::logic_error("brute-force reconstruction lost the optimum");
    }
  }

  static constexpr int kInfeasible = -1;

  const TaskSet& set_;
  std::vector<int> durations_;
  std::vector<char> occupies_;
  std::vector<std::vector<int>> deps_;
  std::vector<int> critical_;
  std::vector<int> phrase_prev_;
  std::unordered_map<std::string, int> memo_;
  int upper_bound_ = std::numeric_limits<int>::max();
};

}  // namespace

ScheduleResult brute_force_minimal_time(const TaskSet& set) {
  if (static_cast<int>(set.actions.size()) > kBruteForceActionLimit) {
    throw LimitError("brute force limited to " + std::to_string(kBruteForceActionLimit) +
                     " actions; set '" + set.id + "' has " +
                     std::to_string(set.actions.size()));
  }
  return BruteForce(set).run();
}

OracleMetrics oracle_metrics(const ScheduleResult& schedule) {
  if (schedule.makespan_min <= 0) {
    throw ValidationError("oracle metrics need a non-empty feasible schedule");
  }
  OracleMetrics metrics;
  metrics.ct = schedule.makespan_min;
  metrics.cs = Fraction(100, schedule.makespan_min);
  return metrics;
}

}  // namespace timearena
