#include "timearena/vocabulary.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "timearena/task_model.hpp"

namespace timearena {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Splits a slot pattern like "cook OBJ1 in OBJ2" into arity and connector.
void apply_slot_pattern(ActionTemplate& tmpl, const std::string& locus) {
  std::istringstream in(tmpl.slot_pattern);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  if (tokens.size() == 2 && tokens[0] == tmpl.verb) {
    tmpl.arity = 1;
    tmpl.connector.clear();
    return;
  }
  if (tokens.size() == 4 && tokens[0] == tmpl.verb) {
    tmpl.arity = 2;
    tmpl.connector = tokens[2];
    return;
  }
  throw ParseError(locus + ": malformed slot_pattern '" + tmpl.slot_pattern + "'");
}

}  // namespace

Vocabulary Vocabulary::load(const std::filesystem::path& json_file) {
  return from_json_text(read_file(json_file), json_file.string());
}

Vocabulary Vocabulary::from_json_text(const std::string& text, const std::string& locus) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(locus + ": " + e.what());
  }
  if (!doc.contains("actions") || !doc["actions"].is_array()) {
    throw ParseError(locus + ": missing 'actions' array");
  }
  Vocabulary vocab;
  for (const auto& entry : doc["actions"]) {
    ActionTemplate tmpl;
    tmpl.verb = entry.at("verb").get<std::string>();
    tmpl.slot_pattern = entry.at("slot_pattern").get<std::string>();
    tmpl.description = entry.at("description").get<std::string>();
    tmpl.from_state = entry.at("from_state").get<std::string>();
    tmpl.to_state = entry.at("to_state").get<std::string>();
    tmpl.state_slot = entry.value("state_slot", 1);
    apply_slot_pattern(tmpl, locus);
    if (tmpl.description.empty()) throw ParseError(locus + ": empty description for " + tmpl.verb);
    if (tmpl.from_state == tmpl.to_state) {
      throw ParseError(locus + ": from_state equals to_state for " + tmpl.verb);
    }
    if (tmpl.state_slot < 1 || tmpl.state_slot > tmpl.arity) {
      throw ParseError(locus + ": state_slot out of range for " + tmpl.verb);
    }
    if (vocab.find(tmpl.verb, tmpl.connector) != nullptr) {
      throw ParseError(locus + ": duplicate action '" + tmpl.verb_phrase() + "'");
    }
    vocab.templates_.push_back(std::move(tmpl));
  }
  return vocab;
}

bool Vocabulary::has_verb(const std::string& verb) const {
  for (const auto& t : templates_) {
    if (t.verb == verb) return true;
  }
  return false;
}

const ActionTemplate* Vocabulary::find(const std::string& verb,
                                       const std::string& connector) const {
  for (const auto& t : templates_) {
    if (t.verb == verb && t.connector == connector) return &t;
  }
  return nullptr;
}

std::vector<const ActionTemplate*> Vocabulary::find_verb(const std::string& verb) const {
  std::vector<const ActionTemplate*> out;
  for (const auto& t : templates_) {
    if (t.verb == verb) out.push_back(&t);
  }
  return out;
}

const std::vector<std::string>& Vocabulary::connectors() {
  static const std::vector<std::string> kConnectors = {"in", "into", "with", "on", "by", "to"};
  return kConnectors;
}

}  // namespace timearena
