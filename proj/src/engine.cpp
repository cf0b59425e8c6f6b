#include "timearena/engine.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace timearena {

std::string feedback_kind_name(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::kInvalidAction: return "invalid_action";
    case FeedbackKind::kNonexistentObject: return "nonexistent_object";
    case FeedbackKind::kWrongInput: return "wrong_input";
    case FeedbackKind::kAlreadyCompleted: return "already_completed";
    case FeedbackKind::kMismatchedObject: return "mismatched_object";
    case FeedbackKind::kOccupiedObject: return "occupied_object";
    case FeedbackKind::kActionStart: return "action_start";
    case FeedbackKind::kActionCompletion: return "action_completion";
    case FeedbackKind::kWaitAck: return "wait_ack";
    case FeedbackKind::kTimePrompt: return "time_prompt";
    case FeedbackKind::kEpisodeEnd: return "episode_end";
  }
  return "invalid_action";
}

std::optional<FeedbackKind> feedback_kind_from_name(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(FeedbackKind::kEpisodeEnd); ++k) {
    const auto kind = static_cast<FeedbackKind>(k);
    if (feedback_kind_name(kind) == name) return kind;
  }
  return std::nullopt;
}

bool is_error_kind(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::kInvalidAction:
    case FeedbackKind::kNonexistentObject:
    case FeedbackKind::kWrongInput:
    case FeedbackKind::kAlreadyCompleted:
    case FeedbackKind::kMismatchedObject:
    case FeedbackKind::kOccupiedObject:
      return true;
    default:
      return false;
  }
}

namespace feedback_text {

std::string action_start(const std::string& phrase, int minutes) {
  return "You are doing ``" + phrase + "``, it will take " + std::to_string(minutes) +
         " minutes.";
}
std::string completion(const std::string& object, const std::string& state) {
  return object + " is " + state + ".";
}
std::string wait_ack() { return "You wait for one minute."; }
std::string time_prompt(int minute) {
  return "In t=" + std::to_string(minute) + ", your action is:";
}
std::string occupied(const std::string& object) {
  return "Object " + object + " is being occupied by another action";
}
std::string agent_occupied() { return "You are being occupied by another action"; }
std::string wrong_input(const std::string& verb_phrase, const std::string& object,
                        const std::string& state) {
  return "Cannot perform action " + verb_phrase + " on object " + object + ". Because " +
         object + " is " + state + ".";
}
std::string invalid(const std::string& phrase) { return phrase + " is invalid"; }
std::string nonexistent(const std::string& object) { return object + " is non-existent"; }
std::string mismatched(const std::string& verb_phrase, const std::string& object) {
  return "You cannot perform " + verb_phrase + " on " + object + ".";
}
std::string already_completed(const std::string& phrase) {
  return phrase + " has been completed";
}

}  // namespace feedback_text

namespace {

std::vector<std::string> tokenize(const std::string& raw) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : raw) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || c == '_') {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string first_line(const std::string& raw) {
  auto pos = raw.find('\n');
  std::string line = pos == std::string::npos ? raw : raw.substr(0, pos);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
    line.pop_back();
  }
  size_t start = 0;
  while (start < line.size() && (line[start] == ' ' || line[start] == '\t')) ++start;
  return line.substr(start);
}

bool is_connector(const std::string& token) {
  const auto& cs = Vocabulary::connectors();
  return std::find(cs.begin(), cs.end(), token) != cs.end();
}

}  // namespace

ActionRequest parse_action(const std::string& raw, const Vocabulary& vocab,
                           const std::vector<std::string>& object_names) {
  const std::vector<std::string> tokens = tokenize(raw);
  const auto known_object = [&](const std::string& token) {
    return std::find(object_names.begin(), object_names.end(), token) != object_names.end();
  };

  ActionRequest best;        // last phrase with a known verb (or wait)
  ActionRequest fallback;    // last <unknown word> <known object> pair
  bool have_best = false, have_fallback = false;

  size_t i = 0;
  while (i < tokens.size()) {
    const std::string& tok = tokens[i];
    if (tok == "wait") {
      best = ActionRequest{};
      best.is_wait = true;
      best.parseable = true;
      best.phrase = "wait";
      have_best = true;
      ++i;
      continue;
    }
    if (vocab.has_verb(tok)) {
      ActionRequest req;
      req.parseable = true;
      req.verb = tok;
      size_t consumed = 1;
      if (i + 1 < tokens.size() && !is_connector(tokens[i + 1])) {
        req.objects.push_back(tokens[i + 1]);
        consumed = 2;
        if (i + 3 < tokens.size() && is_connector(tokens[i + 2]) &&
            !is_connector(tokens[i + 3])) {
          req.connector = tokens[i + 2];
          req.objects.push_back(tokens[i + 3]);
          consumed = 4;
        }
      }
      req.phrase = req.verb;
      for (size_t k = 0; k < req.objects.size(); ++k) {
        if (k == 1) req.phrase += " " + req.connector;
        req.phrase += " " + req.objects[k];
      }
      best = std::move(req);
      have_best = true;
      i += consumed;
      continue;
    }
    if (i + 1 < tokens.size() && known_object(tokens[i + 1]) && !is_connector(tok)) {
      ActionRequest req;
      req.parseable = true;
      req.verb = tok;
      req.objects.push_back(tokens[i + 1]);
      req.phrase = tok + " " + tokens[i + 1];
      fallback = std::move(req);
      have_fallback = true;
      i += 2;
      continue;
    }
    ++i;
  }

  ActionRequest result;
  if (have_best) {
    result = std::move(best);
  } else if (have_fallback) {
    result = std::move(fallback);
    // fallback verbs are not in the vocabulary; validation renders the
    // phrase as invalid
    result.parseable = true;
  } else {
    result.phrase = first_line(raw);
  }
  result.raw_text = raw;
  return result;
}

std::string outcome_reason_name(OutcomeReason reason) {
  switch (reason) {
    case OutcomeReason::kAllDone: return "all_done";
    case OutcomeReason::kTimeOut: return "time_out";
    case OutcomeReason::kErrorStreak: return "error_streak";
  }
  return "time_out";
}

std::string EpisodeOutcome::to_json() const {
  nlohmann::json doc;
  doc["reason"] = outcome_reason_name(reason);
  doc["final_progress_pct"] = final_progress_pct.to_double();
  doc["final_progress"] = {{"num", final_progress_pct.num()}, {"den", final_progress_pct.den()}};
  if (completion_minute) {
    doc["completion_minute"] = *completion_minute;
  } else {
    doc["completion_minute"] = nullptr;
  }
  doc["max_progress_minute"] = max_progress_minute;
  doc["end_clock"] = end_clock;
  doc["turns"] = turns;
  doc["per_task"] = nlohmann::json::array();
  for (const auto& tp : per_task) {
    doc["per_task"].push_back({{"task", tp.task_id},
                               {"max_progress_pct", tp.max_progress_pct.to_double()},
                               {"max_progress", {{"num", tp.max_progress_pct.num()},
                                                 {"den", tp.max_progress_pct.den()}}},
                               {"minute_of_max", tp.minute_of_max}});
  }
  return doc.dump();
}

EpisodeOutcome EpisodeOutcome::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("outcome json: ") + e.what());
  }
  EpisodeOutcome out;
  const std::string reason = doc.at("reason").get<std::string>();
  if (reason == "all_done") out.reason = OutcomeReason::kAllDone;
  else if (reason == "error_streak") out.reason = OutcomeReason::kErrorStreak;
  else out.reason = OutcomeReason::kTimeOut;
  out.final_progress_pct = Fraction(doc.at("final_progress").at("num").get<std::int64_t>(),
                                    doc.at("final_progress").at("den").get<std::int64_t>());
  if (!doc.at("completion_minute").is_null()) {
    out.completion_minute = doc.at("completion_minute").get<int>();
  }
  out.max_progress_minute = doc.at("max_progress_minute").get<int>();
  out.end_clock = doc.at("end_clock").get<int>();
  out.turns = doc.at("turns").get<int>();
  for (const auto& tp : doc.at("per_task")) {
    TaskProgress p;
    p.task_id = tp.at("task").get<std::string>();
    p.max_progress_pct = Fraction(tp.at("max_progress").at("num").get<std::int64_t>(),
                                  tp.at("max_progress").at("den").get<std::int64_t>());
    p.minute_of_max = tp.at("minute_of_max").get<int>();
    out.per_task.push_back(std::move(p));
  }
  return out;
}

std::string TurnRecord::to_json() const {
  nlohmann::json doc;
  doc["minute"] = minute;
  doc["agent_text"] = agent_text;
  doc["feedback_kind"] = feedback_kind_name(kind);
  doc["feedback_text"] = feedback_text;
  doc["progress_pct"] = progress_pct.to_double();
  doc["error_streak"] = error_streak;
  return doc.dump();
}

TurnRecord TurnRecord::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("turn record json: ") + e.what());
  }
  TurnRecord rec;
  rec.minute = doc.at("minute").get<int>();
  rec.agent_text = doc.at("agent_text").get<std::string>();
  const auto kind = feedback_kind_from_name(doc.at("feedback_kind").get<std::string>());
  if (!kind) throw ParseError("unknown feedback kind in turn record");
  rec.kind = *kind;
  rec.feedback_text = doc.at("feedback_text").get<std::string>();
  rec.error_streak = doc.at("error_streak").get<int>();
  return rec;
}

Episode::Episode(const TaskSet& set, std::optional<int> time_limit_override)
    : set_(&set), time_limit_(time_limit_override.value_or(set.time_limit_min)) {
  if (set_->actions.empty()) throw ValidationError("cannot run an episode over an empty set");
  for (const auto& obj : set_->merged_objects) object_state_[obj.name] = obj.initial_state;
  completed_.assign(set_->actions.size(), false);
  // Identical phrases (possible in constrained sets) resolve to the first
  // pending instance; startable() mirrors that rule.
  phrase_prev_.assign(set_->actions.size(), -1);
  {
    std::map<std::string, int> last;
    for (const auto& sa : set_->actions) {
      auto it = last.find(sa.phrase());
      if (it != last.end()) phrase_prev_[sa.index] = it->second;
      last[sa.phrase()] = sa.index;
    }
  }
  task_completed_duration_.assign(set_->tasks.size(), 0);
  for (const auto& task : set_->tasks) {
    TaskProgress tp;
    tp.task_id = task.id;
    tp.max_progress_pct = Fraction(0);
    tp.minute_of_max = 1;
    per_task_.push_back(std::move(tp));
  }
}

const EpisodeOutcome& Episode::outcome() const {
  if (!outcome_) throw std::logic_error("episode still live");
  return *outcome_;
}

std::string Episode::prompt() const {
  if (finished()) throw std::logic_error("episode finished");
  return feedback_text::time_prompt(clock_);
}

bool Episode::action_started(int index) const {
  if (completed_[index]) return true;
  for (const auto& f : in_flight_) {
    if (f.action == index) return true;
  }
  return false;
}

const std::string& Episode::object_state(const std::string& name) const {
  auto it = object_state_.find(name);
  if (it == object_state_.end()) throw std::out_of_range("unknown object " + name);
  return it->second;
}

bool Episode::object_occupied(const std::string& name) const {
  return occupied_by_.find(name) != occupied_by_.end();
}

Feedback Episode::validate(const ActionRequest& request) const {
  Feedback fb;
  if (request.is_wait) {
    fb.kind = FeedbackKind::kWaitAck;
    fb.rendering = feedback_text::wait_ack();
    return fb;
  }
  // (1) known verb, well-formed phrase
  const ActionTemplate* tmpl = nullptr;
  if (request.parseable && set_->vocabulary->has_verb(request.verb)) {
    tmpl = set_->vocabulary->find(request.verb, request.connector);
    if (tmpl != nullptr && static_cast<int>(request.objects.size()) != tmpl->arity) tmpl = nullptr;
  }
  if (tmpl == nullptr) {
    fb.kind = FeedbackKind::kInvalidAction;
    fb.rendering = feedback_text::invalid(request.phrase);
    return fb;
  }
  // (2) objects exist in the merged set
  for (const auto& name : request.objects) {
    if (set_->find_object(name) == nullptr) {
      fb.kind = FeedbackKind::kNonexistentObject;
      fb.rendering = feedback_text::nonexistent(name);
      fb.refs.push_back(name);
      return fb;
    }
  }
  // (3) the verb/object pairing is licensed by some action of the set
  std::vector<int> candidates;
  for (const auto& sa : set_->actions) {
    if (sa.tmpl == tmpl && sa.objects == request.objects) candidates.push_back(sa.index);
  }
  if (candidates.empty()) {
    fb.kind = FeedbackKind::kMismatchedObject;
    fb.rendering = feedback_text::mismatched(tmpl->verb_phrase(), request.objects.front());
    return fb;
  }
  // (4) not already completed (constrained sets may license the same phrase
  // in several tasks; the first pending instance is the one addressed)
  int chosen = -1;
  for (int idx : candidates) {
    if (!completed_[idx]) {
      chosen = idx;
      break;
    }
  }
  if (chosen == -1) {
    fb.kind = FeedbackKind::kAlreadyCompleted;
    fb.rendering = feedback_text::already_completed(request.phrase);
    fb.action_index = candidates.back();
    return fb;
  }
  const SetAction& action = set_->actions[chosen];
  fb.action_index = chosen;
  fb.refs.push_back(action.qualified_id);
  // (5) dependencies complete and the transitioned object in its expected
  // state; the message names the object blocking the chain
  for (int dep : action.dep_indices) {
    if (!completed_[dep]) {
      const std::string& obj = set_->actions[dep].state_object;
      fb.kind = FeedbackKind::kWrongInput;
      fb.rendering =
          feedback_text::wrong_input(tmpl->verb_phrase(), obj, object_state_.at(obj));
      return fb;
    }
  }
  if (object_state_.at(action.state_object) != action.expected_state) {
    fb.kind = FeedbackKind::kWrongInput;
    fb.rendering = feedback_text::wrong_input(tmpl->verb_phrase(), action.state_object,
                                              object_state_.at(action.state_object));
    return fb;
  }
  // (6) referenced objects free
  for (const auto& name : action.objects) {
    if (occupied_by_.find(name) != occupied_by_.end()) {
      fb.kind = FeedbackKind::kOccupiedObject;
      fb.rendering = feedback_text::occupied(name);
      return fb;
    }
  }
  // (7) agent free (unreachable while occupying actions fast-forward)
  if (agent_busy_until_ && *agent_busy_until_ > clock_) {
    fb.kind = FeedbackKind::kOccupiedObject;
    fb.rendering = feedback_text::agent_occupied();
    return fb;
  }
  fb.kind = FeedbackKind::kActionStart;
  fb.rendering = feedback_text::action_start(action.phrase(), action.duration_min);
  return fb;
}

bool Episode::startable(int index) const {
  const SetAction& action = set_->actions[index];
  if (completed_[index]) return false;
  for (const auto& f : in_flight_) {
    if (f.action == index) return false;
  }
  if (phrase_prev_[index] >= 0 && !completed_[phrase_prev_[index]]) return false;
  for (int dep : action.dep_indices) {
    if (!completed_[dep]) return false;
  }
  if (object_state_.at(action.state_object) != action.expected_state) return false;
  for (const auto& name : action.objects) {
    if (occupied_by_.find(name) != occupied_by_.end()) return false;
  }
  return true;
}

std::vector<int> Episode::startable_actions() const {
  std::vector<int> out;
  for (const auto& sa : set_->actions) {
    if (startable(sa.index)) out.push_back(sa.index);
  }
  return out;
}

void Episode::start_action(int index) {
  const SetAction& action = set_->actions[index];
  InFlight flight;
  flight.action = index;
  flight.start = clock_;
  flight.completes = clock_ + action.duration_min;
  for (const auto& name : action.objects) occupied_by_[name] = index;
  if (action.occupancy == Occupancy::kOccupiesAgent) agent_busy_until_ = flight.completes;
  in_flight_.push_back(flight);
}

void Episode::advance_one_minute(std::vector<std::string>& lines) {
  ++clock_;
  bool any_completed = false;
  // Completions fire in start order within the minute.
  std::vector<InFlight> still;
  still.reserve(in_flight_.size());
  for (const auto& flight : in_flight_) {
    if (flight.completes != clock_) {
      still.push_back(flight);
      continue;
    }
    const SetAction& action = set_->actions[flight.action];
    completed_[flight.action] = true;
    object_state_[action.state_object] = action.tmpl->to_state;
    for (const auto& name : action.objects) {
      auto it = occupied_by_.find(name);
      if (it != occupied_by_.end() && it->second == flight.action) occupied_by_.erase(it);
    }
    completed_duration_ += action.duration_min;
    task_completed_duration_[action.task_index] += action.duration_min;
    progress_ = Fraction(100LL * completed_duration_, set_->total_duration_min);
    max_progress_minute_ = clock_ - 1;  // the action's last worked minute
    auto& tp = per_task_[action.task_index];
    tp.max_progress_pct = Fraction(
        100LL * task_completed_duration_[action.task_index],
        set_->tasks[action.task_index].total_duration_min());
    tp.minute_of_max = clock_ - 1;
    lines.push_back(feedback_text::completion(action.state_object, action.tmpl->to_state));
    any_completed = true;
  }
  in_flight_ = std::move(still);
  if (any_completed) progress_history_.emplace_back(clock_ - 1, progress_);
  if (agent_busy_until_ && *agent_busy_until_ <= clock_) agent_busy_until_.reset();

  if (progress_ == Fraction(100)) {
    finish(OutcomeReason::kAllDone);
    return;
  }
  if (clock_ > time_limit_) finish(OutcomeReason::kTimeOut);
}

void Episode::finish(OutcomeReason reason) {
  EpisodeOutcome out;
  out.reason = reason;
  out.final_progress_pct = progress_;
  if (reason == OutcomeReason::kAllDone) out.completion_minute = max_progress_minute_;
  out.max_progress_minute = max_progress_minute_;
  out.end_clock = clock_;
  out.turns = turns_;
  out.per_task = per_task_;
  outcome_ = std::move(out);
}

std::string Episode::submit(const std::string& agent_text) {
  if (finished()) throw std::logic_error("episode finished");
  const int turn_minute = clock_;
  const ActionRequest request = parse_action(agent_text, *set_->vocabulary, set_->object_names());
  const Feedback fb = validate(request);
  std::vector<std::string> lines{fb.rendering};

  if (fb.kind == FeedbackKind::kWaitAck) {
    error_streak_ = 0;
    advance_one_minute(lines);
  } else if (fb.kind == FeedbackKind::kActionStart) {
    error_streak_ = 0;
    start_action(fb.action_index);
    const SetAction& action = set_->actions[fb.action_index];
    if (action.occupancy == Occupancy::kOccupiesAgent) {
      const int until = clock_ + action.duration_min;
      while (!finished() && clock_ < until) advance_one_minute(lines);
    } else {
      advance_one_minute(lines);
    }
  } else {
    // A failed attempt consumes the minute, and five in a row end the
    // episode.
    ++error_streak_;
    advance_one_minute(lines);
    if (!finished() && error_streak_ >= 5) finish(OutcomeReason::kErrorStreak);
  }

  ++turns_;
  if (outcome_) outcome_->turns = turns_;

  std::string text;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) text += "\n";
    text += lines[i];
  }
  TurnRecord rec;
  rec.minute = turn_minute;
  rec.agent_text = agent_text;
  rec.kind = fb.kind;
  rec.feedback_text = text;
  rec.progress_pct = progress_;
  rec.error_streak = error_streak_;
  transcript_.push_back(std::move(rec));
  return text;
}

std::string Episode::trajectory_jsonl() const {
  std::string out;
  for (const auto& rec : transcript_) {
    out += rec.to_json();
    out += "\n";
  }
  return out;
}

void Episode::check_invariants() const {
  // Object occupancy: occupied iff referenced by exactly one in-flight action.
  std::map<std::string, int> refs;
  for (const auto& flight : in_flight_) {
    for (const auto& name : set_->actions[flight.action].objects) refs[name]++;
  }
  for (const auto& [name, count] : refs) {
    if (count != 1) throw std::logic_error("object " + name + " referenced by " +
                                           std::to_string(count) + " in-flight actions");
    if (occupied_by_.find(name) == occupied_by_.end()) {
      throw std::logic_error("object " + name + " in flight but not marked occupied");
    }
  }
  for (const auto& [name, action] : occupied_by_) {
    (void)action;
    if (refs.find(name) == refs.end()) {
      throw std::logic_error("object " + name + " marked occupied with no in-flight action");
    }
  }
  // Agent exclusivity: at most one occupying action in flight.
  int occupying = 0;
  for (const auto& flight : in_flight_) {
    if (set_->actions[flight.action].occupancy == Occupancy::kOccupiesAgent) ++occupying;
  }
  if (occupying > 1) throw std::logic_error("multiple occupying actions in flight");
  if (occupying == 1 && !agent_busy_until_) {
    throw std::logic_error("occupying action in flight but agent not marked busy");
  }
  // Progress accounting.
  int total = 0;
  for (const auto& sa : set_->actions) {
    if (completed_[sa.index]) total += sa.duration_min;
  }
  if (total != completed_duration_) throw std::logic_error("completed-duration drift");
  if (progress_ != Fraction(100LL * total, set_->total_duration_min)) {
    throw std::logic_error("progress out of sync with completed durations");
  }
  if (Fraction(100) < progress_) throw std::logic_error("progress above 100");
  if (error_streak_ >= 5 && !finished()) throw std::logic_error("live episode with streak 5");
}

}  // namespace timearena
