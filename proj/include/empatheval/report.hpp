#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "empatheval/behavior.hpp"
#include "empatheval/human_eval.hpp"
#include "empatheval/lexicon.hpp"
#include "empatheval/offline_metrics.hpp"
#include "empatheval/stats.hpp"
#include "empatheval/structural.hpp"

namespace empatheval {

/// Per-component aggregates keyed by model id; absent components were not run.
struct ComponentResults {
  std::optional<std::map<std::string, OfflineAggregate>> offline;
  std::optional<std::map<std::string, StructuralAggregate>> structural;
  std::optional<BehaviorProportions> behavior;
  std::optional<std::map<std::string, AggregateStat>> lexicon;
  std::optional<RatingAggregate> human;
};

struct Scorecard {
  std::string model_id;
  std::optional<OfflineAggregate> offline;
  std::optional<StructuralAggregate> structural;
  std::optional<std::map<BehaviorType, ProportionCell>> behavior;
  std::optional<AggregateStat> lexicon;
  /// Utterance-level rating cells for this model.
  std::optional<std::vector<QuestionStat>> human;
};

struct Report {
  std::vector<Scorecard> cards;
  /// Dialogue-level rating cells (not tied to a model).
  std::vector<QuestionStat> dialogue_ratings;
  std::map<std::string, std::optional<double>> agreement;
};

/// One card per model in `model_order` that has data in at least one
/// component. Throws InconsistentModels when a component names a model
/// outside `model_order`.
Report assemble(const std::vector<std::string>& model_order, const ComponentResults& results);

enum class ReportFormat { Json, Csv, Markdown };

std::optional<ReportFormat> parse_report_format(std::string_view name);
std::string_view extension(ReportFormat format);

/// Deterministic rendering. Means and SDs at 3 decimals, proportions as
/// percentages at 2 decimals, absent values as "-".
std::string render(const Report& report, ReportFormat format);

/// Row label: "Human" for the gold model, the model id otherwise.
std::string model_display_name(std::string_view model_id);

/// Reads whichever of offline.csv, structural.jsonl, behavior.jsonl,
/// lexicon.jsonl and human_aggregates.json exist in `dir`.
ComponentResults load_component_results(const std::filesystem::path& dir);

/// Models mentioned by any loaded component, in first-seen order.
std::vector<std::string> models_in(const ComponentResults& results);

}  // namespace empatheval
