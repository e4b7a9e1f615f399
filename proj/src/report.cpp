#include "empatheval/report.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "empatheval/errors.hpp"
#include "empatheval/format.hpp"

namespace empatheval {

using json = nlohmann::json;

namespace {

constexpr std::string_view kAbsent = "-";

bool is_negative(const std::string& question_id) {
  const auto* q = find_question(question_id);
  return q && q->polarity == Polarity::Negative;
}

std::vector<std::string> utterance_question_ids() {
  std::vector<std::string> ids;
  for (const auto& q : questionnaire())
    if (q.level == QuestionLevel::Utterance) ids.push_back(q.id);
  return ids;
}

const QuestionStat* find_cell(const std::vector<QuestionStat>& cells, const std::string& question_id) {
  for (const auto& c : cells)
    if (c.question_id == question_id) return &c;
  return nullptr;
}

std::string percent_cell(const std::map<BehaviorType, ProportionCell>& cells, BehaviorType b) {
  const auto it = cells.find(b);
  if (it == cells.end() || it->second.total == 0) return std::string(kAbsent);
  return format_percent(it->second.yes, it->second.total) + "%";
}

std::string stat_cell(const std::optional<AggregateStat>& stat) { return format_mean_sd(stat); }

std::string md_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

// ---------------------------------------------------------------------------
// markdown

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
  bool empty() const { return rows_.empty(); }

  void write(std::ostringstream& out) const {
    line(out, header_);
    out << '|';
    for (std::size_t i = 0; i < header_.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& r : rows_) line(out, r);
  }

 private:
  static void line(std::ostringstream& out, const std::vector<std::string>& cells) {
    out << '|';
    for (const auto& c : cells) out << ' ' << c << " |";
    out << '\n';
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

void section(std::ostringstream& out, std::string_view title, const Table& table) {
  if (table.empty()) return;
  out << "\n## " << title << "\n\n";
  table.write(out);
}

std::string render_markdown(const Report& report) {
  std::ostringstream out;
  out << "# Empathy evaluation report\n";

  Table offline({"Model", "Perplexity Mean (SD)", "BLEU Mean (SD)", "Distinct-1 Mean (SD)"});
  Table structural({"Model", "Emotional Reaction Mean (SD)", "Interpretation Mean (SD)", "Exploration Mean (SD)"});
  std::vector<std::string> positive_header{"Model"};
  for (auto b : kPositiveBehaviors) positive_header.emplace_back(behavior_display_name(b));
  Table behavior(positive_header);
  std::vector<std::string> negative_header{"Model"};
  for (auto b : kNegativeBehaviors) negative_header.emplace_back(behavior_display_name(b));
  Table negative(negative_header);
  Table lexicon({"Model", "Lexicon Score Mean (SD)"});

  const auto uq = utterance_question_ids();
  std::vector<std::string> human_header{"Model"};
  for (const auto& q : uq) human_header.push_back(q + " Mean (SD)");
  for (const auto& q : uq)
    if (is_negative(q)) human_header.push_back(q + " Reversed");
  Table human(human_header);

  for (const auto& card : report.cards) {
    const auto name = md_escape(model_display_name(card.model_id));
    if (card.offline)
      offline.row({name, stat_cell(card.offline->perplexity), stat_cell(card.offline->bleu),
                   stat_cell(card.offline->distinct_1)});
    if (card.structural) {
      std::vector<std::string> cells{name};
      for (auto d : kStructuralDimensions) cells.push_back(stat_cell((*card.structural)[static_cast<std::size_t>(d)]));
      structural.row(std::move(cells));
    }
    if (card.behavior) {
      std::vector<std::string> pos{name}, neg{name};
      for (auto b : kPositiveBehaviors) pos.push_back(percent_cell(*card.behavior, b));
      for (auto b : kNegativeBehaviors) neg.push_back(percent_cell(*card.behavior, b));
      behavior.row(std::move(pos));
      negative.row(std::move(neg));
    }
    if (card.lexicon) lexicon.row({name, stat_cell(card.lexicon)});
    if (card.human) {
      std::vector<std::string> cells{name};
      for (const auto& q : uq) {
        const auto* c = find_cell(*card.human, q);
        cells.push_back(c ? stat_cell(c->stat) : std::string(kAbsent));
      }
      for (const auto& q : uq) {
        if (!is_negative(q)) continue;
        const auto* c = find_cell(*card.human, q);
        cells.push_back(c && c->reversed_mean ? format_fixed(*c->reversed_mean, 3) : std::string(kAbsent));
      }
      human.row(std::move(cells));
    }
  }

  Table dialogue({"Question", "Mean (SD)"});
  for (const auto& c : report.dialogue_ratings) dialogue.row({c.question_id, stat_cell(c.stat)});
  Table agreement({"Question", "Exact Agreement"});
  for (const auto& [q, a] : report.agreement)
    agreement.row({q, a ? format_fixed(*a, 3) : std::string(kAbsent)});

  section(out, "Offline metrics", offline);
  section(out, "Structural dimensions", structural);
  section(out, "Behavior types", behavior);
  section(out, "Negative traits (lower is better)", negative);
  section(out, "Lexicon score", lexicon);
  section(out, "Human ratings (utterance level)", human);
  section(out, "Human ratings (dialogue level)", dialogue);
  section(out, "Rater agreement", agreement);
  return out.str();
}

// ---------------------------------------------------------------------------
// csv

class CsvWriter {
 public:
  CsvWriter() { out_ << "model_id,component,metric,value,sd,n\n"; }

  void stat(std::string_view model, std::string_view component, std::string_view metric,
            const std::optional<AggregateStat>& s) {
    if (s)
      row(model, component, metric, format_fixed(s->mean, 3), format_fixed(s->sd, 3), std::to_string(s->n));
    else
      row(model, component, metric, std::string(kAbsent), std::string(kAbsent), "");
  }

  void row(std::string_view model, std::string_view component, std::string_view metric, const std::string& value,
           const std::string& sd, const std::string& n) {
    out_ << csv_field(model) << ',' << component << ',' << csv_field(metric) << ',' << value << ',' << sd << ','
         << n << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

std::string render_csv(const Report& report) {
  CsvWriter w;
  for (const auto& card : report.cards) {
    const auto& m = card.model_id;
    if (card.offline) {
      w.stat(m, "offline", "perplexity", card.offline->perplexity);
      w.stat(m, "offline", "bleu", card.offline->bleu);
      w.stat(m, "offline", "distinct_1", card.offline->distinct_1);
    }
    if (card.structural)
      for (auto d : kStructuralDimensions)
        w.stat(m, "structural", dimension_id(d), (*card.structural)[static_cast<std::size_t>(d)]);
    if (card.behavior)
      for (auto b : kAllBehaviors) {
        const auto it = card.behavior->find(b);
        const auto total = it == card.behavior->end() ? std::size_t{0} : it->second.total;
        w.row(m, "behavior", behavior_id(b), percent_cell(*card.behavior, b), "", total ? std::to_string(total) : "");
      }
    if (card.lexicon) w.stat(m, "lexicon", "overall", card.lexicon);
    if (card.human)
      for (const auto& c : *card.human) {
        w.stat(m, "human", c.question_id, c.stat);
        if (c.reversed_mean)
          w.row(m, "human", c.question_id + "_reversed", format_fixed(*c.reversed_mean, 3), "",
                std::to_string(c.stat.n));
      }
  }
  for (const auto& c : report.dialogue_ratings) w.stat("", "human", c.question_id, c.stat);
  for (const auto& [q, a] : report.agreement)
    w.row("", "human_agreement", q, a ? format_fixed(*a, 3) : std::string(kAbsent), "", "");
  return w.str();
}

// ---------------------------------------------------------------------------
// json

json stat_json(const std::optional<AggregateStat>& s) {
  if (!s) return nullptr;
  return {{"mean", s->mean}, {"sd", s->sd}, {"n", s->n}};
}

json question_cells_json(const std::vector<QuestionStat>& cells) {
  json out = json::array();
  for (const auto& c : cells)
    out.push_back({{"question_id", c.question_id},
                   {"stat", stat_json(c.stat)},
                   {"reversed_mean", c.reversed_mean ? json(*c.reversed_mean) : json(nullptr)}});
  return out;
}

std::string render_json(const Report& report) {
  json models = json::array();
  for (const auto& card : report.cards) {
    json j{{"model_id", card.model_id}};
    if (card.offline)
      j["offline"] = {{"perplexity", stat_json(card.offline->perplexity)},
                      {"bleu", stat_json(card.offline->bleu)},
                      {"distinct_1", stat_json(card.offline->distinct_1)}};
    if (card.structural) {
      json s = json::object();
      for (auto d : kStructuralDimensions)
        s[std::string(dimension_id(d))] = stat_json((*card.structural)[static_cast<std::size_t>(d)]);
      j["structural"] = s;
    }
    if (card.behavior) {
      json b = json::object();
      for (const auto& [type, cell] : *card.behavior)
        b[std::string(behavior_id(type))] = {
            {"yes", cell.yes}, {"total", cell.total}, {"percent", cell.total ? format_percent(cell.yes, cell.total) : "-"}};
      j["behavior"] = b;
    }
    if (card.lexicon) j["lexicon"] = {{"overall", stat_json(card.lexicon)}};
    if (card.human) j["human"] = question_cells_json(*card.human);
    models.push_back(std::move(j));
  }
  json agreement = json::object();
  for (const auto& [q, a] : report.agreement) agreement[q] = a ? json(*a) : json(nullptr);
  json root{{"models", models}};
  if (!report.dialogue_ratings.empty()) root["human_dialogue_level"] = question_cells_json(report.dialogue_ratings);
  if (!report.agreement.empty()) root["agreement"] = agreement;
  return root.dump(2) + "\n";
}

template <typename Map>
void check_models(const Map& m, const std::set<std::string>& universe, std::string_view component) {
  for (const auto& [model, _] : m)
    if (!universe.contains(model)) throw InconsistentModels(model, std::string(component));
}

}  // namespace

std::string model_display_name(std::string_view model_id) {
  if (model_id == kHumanModel) return "Human";
  return std::string(model_id);
}

Report assemble(const std::vector<std::string>& model_order, const ComponentResults& results) {
  const std::set<std::string> universe(model_order.begin(), model_order.end());
  if (results.offline) check_models(*results.offline, universe, "offline");
  if (results.structural) check_models(*results.structural, universe, "structural");
  if (results.behavior) check_models(*results.behavior, universe, "behavior");
  if (results.lexicon) check_models(*results.lexicon, universe, "lexicon");

  std::map<std::string, std::vector<QuestionStat>> human_by_model;
  Report report;
  if (results.human) {
    for (const auto& c : results.human->cells) {
      if (!c.model_id) {
        report.dialogue_ratings.push_back(c);
        continue;
      }
      if (!universe.contains(*c.model_id)) throw InconsistentModels(*c.model_id, "human");
      human_by_model[*c.model_id].push_back(c);
    }
    report.agreement = results.human->agreement;
  }

  auto lookup = [](const auto& component, const std::string& model) {
    using Value = typename std::decay_t<decltype(*component)>::mapped_type;
    std::optional<Value> out;
    if (component) {
      const auto it = component->find(model);
      if (it != component->end()) out = it->second;
    }
    return out;
  };

  for (const auto& model : model_order) {
    Scorecard card{model, lookup(results.offline, model), lookup(results.structural, model),
                   lookup(results.behavior, model), lookup(results.lexicon, model), std::nullopt};
    if (const auto it = human_by_model.find(model); it != human_by_model.end()) card.human = it->second;
    if (card.offline || card.structural || card.behavior || card.lexicon || card.human)
      report.cards.push_back(std::move(card));
  }
  return report;
}

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "markdown" || name == "md") return ReportFormat::Markdown;
  return std::nullopt;
}

std::string_view extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return "json";
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Markdown: return "md";
  }
  return "";
}

std::string render(const Report& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return render_json(report);
    case ReportFormat::Csv: return render_csv(report);
    case ReportFormat::Markdown: return render_markdown(report);
  }
  return {};
}

ComponentResults load_component_results(const std::filesystem::path& dir) {
  ComponentResults results;
  auto open = [&](std::string_view name) -> std::optional<std::ifstream> {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read " + path.string());
    return in;
  };
  if (auto in = open("offline.csv")) results.offline = aggregate_offline_scores(read_offline_csv(*in));
  if (auto in = open("structural.jsonl")) results.structural = aggregate_structural(read_structural_jsonl(*in));
  if (auto in = open("behavior.jsonl")) results.behavior = aggregate_behavior(read_verdicts_jsonl(*in));
  if (auto in = open("lexicon.jsonl")) results.lexicon = aggregate_lexicon(read_lexicon_jsonl(*in));
  if (auto in = open("human_aggregates.json")) results.human = rating_aggregate_from_json(json::parse(*in));
  return results;
}

std::vector<std::string> models_in(const ComponentResults& results) {
  std::vector<std::string> out;
  auto add = [&](const std::string& m) {
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  };
  if (results.offline)
    for (const auto& [m, _] : *results.offline) add(m);
  if (results.structural)
    for (const auto& [m, _] : *results.structural) add(m);
  if (results.behavior)
    for (const auto& [m, _] : *results.behavior) add(m);
  if (results.lexicon)
    for (const auto& [m, _] : *results.lexicon) add(m);
  if (results.human)
    for (const auto& c : results.human->cells)
      if (c.model_id) add(*c.model_id);
  return out;
}

}  // namespace empatheval
