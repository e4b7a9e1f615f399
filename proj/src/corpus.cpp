#include "empatheval/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "empatheval/errors.hpp"

namespace empatheval {

using json = nlohmann::json;

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    auto j = json::parse(line);
    if (!j.is_object()) throw MalformedRecord(line_no, "record is not a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw MalformedRecord(line_no, std::string("invalid JSON: ") + e.what());
  }
}

const std::string& require_string(const json& j, const char* field, std::size_t line_no) {
  const auto it = j.find(field);
  if (it == j.end() || !it->is_string())
    throw MalformedRecord(line_no, std::string("field '") + field + "' must be a string");
  return it->get_ref<const std::string&>();
}

Role parse_role(const json& j, std::size_t line_no) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "seeker") return Role::Seeker;
    if (s == "supporter") return Role::Supporter;
  }
  throw MalformedRecord(line_no, "role must be \"seeker\" or \"supporter\"");
}

Split parse_split(const json& record, std::size_t line_no) {
  const auto it = record.find("split");
  if (it == record.end()) return Split::Test;
  if (it->is_string()) {
    const auto& s = it->get_ref<const std::string&>();
    if (s == "train") return Split::Train;
    if (s == "valid") return Split::Valid;
    if (s == "test") return Split::Test;
  }
  throw MalformedRecord(line_no, "split must be one of train, valid, test");
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileNotFound", "cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(Role role) { return role == Role::Seeker ? "seeker" : "supporter"; }

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "test";
}

std::span<const Utterance> Dialogue::history() const {
  std::span<const Utterance> all(utterances);
  if (!all.empty() && all.back().role == Role::Supporter) return all.first(all.size() - 1);
  return all;
}

std::optional<std::string> Dialogue::gold_reply() const {
  if (!utterances.empty() && utterances.back().role == Role::Supporter) return utterances.back().text;
  return std::nullopt;
}

DialogueSet::DialogueSet(std::set<std::string> emotion_labels) : emotion_labels_(std::move(emotion_labels)) {}

void DialogueSet::add(Dialogue dialogue, std::size_t line_no) {
  if (dialogue.id.empty()) throw MalformedRecord(line_no, "id must be non-empty");
  if (dialogue.utterances.empty()) throw MalformedRecord(line_no, "utterances must be non-empty");
  for (std::size_t i = 0; i < dialogue.utterances.size(); ++i) {
    const auto& u = dialogue.utterances[i];
    const Role expected = i % 2 == 0 ? Role::Seeker : Role::Supporter;
    if (u.role != expected)
      throw MalformedRecord(line_no, i == 0 ? "roles must alternate starting with seeker" : "roles must alternate");
    if (is_blank(u.text)) throw MalformedRecord(line_no, "utterance text must contain a non-whitespace character");
  }
  if (!emotion_labels_.contains(dialogue.emotion_class)) throw UnknownEmotion(dialogue.emotion_class, line_no);
  if (index_.contains(dialogue.id)) throw DuplicateId(dialogue.id, line_no);
  index_.emplace(dialogue.id, dialogues_.size());
  dialogues_.push_back(std::move(dialogue));
}

const Dialogue* DialogueSet::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &dialogues_[it->second];
}

DialogueSet parse_dialogues(std::istream& in) {
  DialogueSet set;
  bool have_header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    const json record = parse_line(line, line_no);
    const auto& kind = require_string(record, "kind", line_no);

    if (!have_header) {
      if (kind != "header") throw MalformedRecord(line_no, "first record must be the header");
      const auto it = record.find("emotion_labels");
      if (it == record.end() || !it->is_array()) throw MalformedRecord(line_no, "header needs an emotion_labels array");
      std::set<std::string> labels;
      for (const auto& label : *it) {
        if (!label.is_string()) throw MalformedRecord(line_no, "emotion labels must be strings");
        labels.insert(label.get<std::string>());
      }
      set = DialogueSet(std::move(labels));
      have_header = true;
      continue;
    }
    if (kind != "dialogue") throw MalformedRecord(line_no, "unexpected record kind '" + kind + "'");

    Dialogue d;
    d.id = require_string(record, "id", line_no);
    d.emotion_class = require_string(record, "emotion", line_no);
    d.split = parse_split(record, line_no);
    const auto utts = record.find("utterances");
    if (utts == record.end() || !utts->is_array()) throw MalformedRecord(line_no, "utterances must be an array");
    for (const auto& u : *utts) {
      if (!u.is_object()) throw MalformedRecord(line_no, "utterance must be an object");
      const auto role = u.find("role");
      if (role == u.end()) throw MalformedRecord(line_no, "utterance needs a role");
      d.utterances.push_back({parse_role(*role, line_no), require_string(u, "text", line_no)});
    }
    set.add(std::move(d), line_no);
  }
  return set;
}

DialogueSet load_dialogues(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_dialogues(in);
}

std::string serialize(const DialogueSet& dialogues) {
  std::ostringstream out;
  json header{{"kind", "header"}, {"emotion_labels", dialogues.emotion_labels()}};
  out << header.dump() << '\n';
  for (const auto& d : dialogues.dialogues()) {
    json utts = json::array();
    for (const auto& u : d.utterances) utts.push_back({{"role", to_string(u.role)}, {"text", u.text}});
    json record{{"kind", "dialogue"}, {"id", d.id}, {"emotion", d.emotion_class},
                {"split", to_string(d.split)}, {"utterances", std::move(utts)}};
    out << record.dump() << '\n';
  }
  return out.str();
}

void ResponseTable::add(ModelResponse response, std::size_t line_no) {
  auto key = std::make_pair(response.dialogue_id, response.model_id);
  if (entries_.contains(key)) throw DuplicateEntry(response.dialogue_id, response.model_id, line_no);
  if (!has_model(response.model_id)) model_ids_.push_back(response.model_id);
  entries_.emplace(std::move(key), std::move(response));
}

const ModelResponse* ResponseTable::find(std::string_view dialogue_id, std::string_view model_id) const {
  const auto it = entries_.find(std::make_pair(std::string(dialogue_id), std::string(model_id)));
  return it == entries_.end() ? nullptr : &it->second;
}

bool ResponseTable::has_model(std::string_view model_id) const {
  return std::find(model_ids_.begin(), model_ids_.end(), model_id) != model_ids_.end();
}

std::vector<const ModelResponse*> ResponseTable::for_dialogue(std::string_view dialogue_id) const {
  std::vector<const ModelResponse*> out;
  for (const auto& model : model_ids_)
    if (const auto* r = find(dialogue_id, model)) out.push_back(r);
  return out;
}

ResponseTable parse_responses(std::istream& in, const DialogueSet& dialogues) {
  ResponseTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    const json record = parse_line(line, line_no);

    ModelResponse r;
    r.dialogue_id = require_string(record, "dialogue_id", line_no);
    r.model_id = require_string(record, "model_id", line_no);
    r.text = require_string(record, "text", line_no);
    if (r.model_id.empty()) throw MalformedRecord(line_no, "model_id must be non-empty");

    if (const auto it = record.find("token_logprobs"); it != record.end() && !it->is_null()) {
      if (!it->is_array()) throw MalformedRecord(line_no, "token_logprobs must be an array");
      std::vector<TokenLogprob> lps;
      for (const auto& pair : *it) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_number())
          throw MalformedRecord(line_no, "token_logprobs entries must be [token, logprob]");
        const double lp = pair[1].get<double>();
        if (!std::isfinite(lp) || lp > 0.0) throw MalformedRecord(line_no, "logprob must be finite and <= 0");
        lps.push_back({pair[0].get<std::string>(), lp});
      }
      r.token_logprobs = std::move(lps);
    }
    if (dialogues.find(r.dialogue_id) == nullptr) throw UnknownDialogue(r.dialogue_id, line_no);
    table.add(std::move(r), line_no);
  }
  return table;
}

ResponseTable load_responses(const std::filesystem::path& path, const DialogueSet& dialogues) {
  auto in = open_input(path);
  return parse_responses(in, dialogues);
}

std::vector<std::string> report_model_order(const std::vector<std::string>& model_ids) {
  std::vector<std::string> out;
  if (std::find(model_ids.begin(), model_ids.end(), kHumanModel) != model_ids.end())
    out.emplace_back(kHumanModel);
  for (const auto& m : model_ids)
    if (m != kHumanModel) out.push_back(m);
  return out;
}

std::map<std::string, Coverage> coverage_report(const DialogueSet& dialogues, const ResponseTable& responses) {
  std::map<std::string, Coverage> out;
  for (const auto& model : responses.model_ids()) {
    Coverage c;
    for (const auto& d : dialogues.dialogues()) {
      if (responses.find(d.id, model) != nullptr)
        ++c.covered;
      else
        ++c.missing;
    }
    out.emplace(model, c);
  }
  return out;
}

}  // namespace empatheval
