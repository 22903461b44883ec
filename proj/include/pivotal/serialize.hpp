#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "pivotal/cohort.hpp"
#include "pivotal/mfs.hpp"
#include "pivotal/pipeline.hpp"
#include "pivotal/synth.hpp"

namespace pivotal {

inline constexpr int kSchemaVersion = 1;

nlohmann::json summary_to_json(const CohortSummary& summary);

// Every (lambda, k) ranking as {node_index, region_name, score}.
nlohmann::json selection_to_json(const SelectionRun& run);

nlohmann::json provenance_to_json(const Provenance& p);
Provenance provenance_from_json(const nlohmann::json& j);

// `set` indexes `node_space`.
nlohmann::json pivotal_to_json(const PivotalNodeSet& set, const std::vector<std::string>& node_space);

struct PivotalDocument {
  PivotalNodeSet set;
  std::vector<std::string> node_space;
};

PivotalDocument pivotal_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const ClassificationRun& run, const std::vector<std::string>& node_space);

nlohmann::json synth_config_to_json(const SynthConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
SynthConfig synth_config_from_json(const nlohmann::json& j);

SelectOptions select_options_from_json(const nlohmann::json& j);
nlohmann::json select_options_to_json(const SelectOptions& options);

ClassifyOptions classify_options_from_json(const nlohmann::json& j);
nlohmann::json classify_options_to_json(const ClassifyOptions& options);

// Parses text, mapping syntax errors to ErrorCode::InvalidArgument.
nlohmann::json parse_json(const std::string& text, const char* what);

}  // namespace pivotal
