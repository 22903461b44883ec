#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pivotal/classify.hpp"
#include "pivotal/cohort.hpp"
#include "pivotal/mfs.hpp"
#include "pivotal/subgraph.hpp"

namespace pivotal {

struct SelectOptions {
  WeightingScheme scheme;
  ConsensusConfig consensus;
  GridOptions grid;
};

// Outcome of one setting: graphs restricted to the valid nodes, grid solved,
// consensus taken. `pivotal` indexes the full region space.
struct SelectionRun {
  std::vector<std::string> node_space;
  std::vector<std::size_t> active_nodes;
  std::string tag;
  std::string weighting_description;
  SelectOptions options;
  std::vector<SelectionResult> results;
  PivotalNodeSet pivotal;
};

SelectionRun run_selection(const CohortDataset& dataset, const SelectOptions& options);

struct ClassifyOptions {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  TrainParams train;
  bool include_diagonal = true;
  int repeats = 1;  // seeds seed, seed+1, ...
};

struct ClassificationRun {
  ClassifyOptions options;
  std::vector<std::size_t> nodes;
  std::size_t feature_count = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::vector<EvalReport> reports;  // one per repeat; the first uses `seed`
  std::vector<double> final_losses;
  std::vector<std::string> warnings;
};

// `pivotal` indexes the dataset's full region space.
ClassificationRun run_classification(const CohortDataset& dataset, const PivotalNodeSet& pivotal,
                                     const ClassifyOptions& options);

struct VizOutput {
  std::string comparison;
  EdgeList edges;
  std::string dot;
  std::string edges_csv;
};

// `comparison` is a group ("AD") or a difference of group means ("AD-MCI").
VizOutput run_viz(const CohortDataset& dataset, const PivotalNodeSet& pivotal, const std::string& comparison,
                  double cutoff, Aggregation aggregation = Aggregation::Mean);

}  // namespace pivotal
