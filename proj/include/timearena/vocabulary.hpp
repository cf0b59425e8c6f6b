#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace timearena {

// One entry of the action vocabulary, e.g. "cook OBJ1 in OBJ2".
// `state_slot` names the object slot (1-based) whose state the action
// transitions; everything else referenced by the action is only occupied.
struct ActionTemplate {
  std::string verb;
  std::string connector;  // empty for single-object actions
  int arity = 1;
  std::string slot_pattern;
  std::string description;
  std::string from_state;
  std::string to_state;
  int state_slot = 1;

  // "wash" or "cook in" -- the form used in error messages.
  std::string verb_phrase() const {
    return connector.empty() ? verb : verb + " " + connector;
  }
};

class Vocabulary {
 public:
  static Vocabulary load(const std::filesystem::path& json_file);
  static Vocabulary from_json_text(const std::string& text, const std::string& locus);

  const std::vector<ActionTemplate>& templates() const { return templates_; }

  bool has_verb(const std::string& verb) const;
  // Resolves verb + connector; single-object templates resolve with an
  // empty connector. Returns nullptr when no such template exists.
  const ActionTemplate* find(const std::string& verb, const std::string& connector) const;
  // All templates sharing a verb (put-on and put-in share "put").
  std::vector<const ActionTemplate*> find_verb(const std::string& verb) const;

  static const std::vector<std::string>& connectors();

 private:
  std::vector<ActionTemplate> templates_;
};

}  // namespace timearena
