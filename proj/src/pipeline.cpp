#include "pivotal/pipeline.hpp"

#include "pivotal/error.hpp"

namespace pivotal {

SelectionRun run_selection(const CohortDataset& dataset, const SelectOptions& options) {
  SelectionRun run;
  run.options = options;
  run.node_space = dataset.regions;
  run.tag = options.scheme.tag();
  run.active_nodes = compute_valid_nodes(dataset).indices;
  if (run.active_nodes.empty()) fail(ErrorCode::InvalidArgument, "no region is valid across all groups");
  options.consensus.validate(run.active_nodes.size());

  const auto weights = make_view_weights(dataset, options.scheme);
  run.weighting_description = weights.description;
  const auto graphs = restrict_graphs(build_cohort_graphs(dataset), run.active_nodes);
  run.results = run_grid(graphs, weights, options.consensus, options.grid);
  run.pivotal = remap_pivotal(consensus_pivotal(run.results, options.consensus, weights.description),
                              run.active_nodes);
  return run;
}

ClassificationRun run_classification(const CohortDataset& dataset, const PivotalNodeSet& pivotal,
                                     const ClassifyOptions& options) {
  if (pivotal.indices.empty()) fail(ErrorCode::InvalidArgument, "pivotal node set is empty");
  if (options.repeats < 1) fail(ErrorCode::InvalidArgument, "repeats must be at least 1");
  for (const auto n : pivotal.indices) {
    if (n >= dataset.region_count()) fail(ErrorCode::InvalidArgument, "pivotal node outside the cohort's regions");
  }

  ClassificationRun run;
  run.options = options;
  run.nodes = pivotal.indices;
  const auto graphs = build_cohort_graphs(dataset);
  const auto features = vectorize(graphs, pivotal.indices, dataset.regions, options.include_diagonal);
  run.feature_count = features.feature_names.size();

  for (int r = 0; r < options.repeats; ++r) {
    const std::uint64_t seed = options.seed + static_cast<std::uint64_t>(r);
    const auto split = stratified_split(features.labels, options.train_fraction, seed);
    const auto gather = [&](const std::vector<std::size_t>& rows, Eigen::MatrixXd& x, std::vector<Group>& y) {
      x.resize(static_cast<Eigen::Index>(rows.size()), features.rows.cols());
      y.clear();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = features.rows.row(static_cast<Eigen::Index>(rows[i]));
        y.push_back(features.labels[rows[i]]);
      }
    };
    Eigen::MatrixXd x_train, x_test;
    std::vector<Group> y_train, y_test;
    gather(split.train, x_train, y_train);
    gather(split.test, x_test, y_test);

    const auto model = train(x_train, y_train, options.train);
    auto report = ovr_report(predict_proba(model, x_test), y_test);
    report.split_seed = seed;
    run.reports.push_back(std::move(report));
    run.final_losses.push_back(model.final_loss);
    if (r == 0) {
      run.train_rows = split.train.size();
      run.test_rows = split.test.size();
      run.warnings = model.warnings;
    }
  }
  return run;
}

VizOutput run_viz(const CohortDataset& dataset, const PivotalNodeSet& pivotal, const std::string& comparison,
                  double cutoff, Aggregation aggregation) {
  const auto graphs = build_cohort_graphs(dataset);
  const auto group_of = [&](const std::string& token) {
    const auto g = parse_group(token);
    if (!g) fail(ErrorCode::InvalidArgument, "unknown group '" + token + "'");
    return *g;
  };

  Eigen::MatrixXd matrix;
  const auto dash = comparison.find('-');
  if (dash == std::string::npos) {
    matrix = group_mean_graph(graphs, group_of(comparison), aggregation);
  } else {
    const Group a = group_of(comparison.substr(0, dash));
    const Group b = group_of(comparison.substr(dash + 1));
    matrix = group_mean_graph(graphs, a, aggregation) - group_mean_graph(graphs, b, aggregation);
  }

  VizOutput out;
  out.comparison = comparison;
  out.edges = apply_cutoff(matrix, pivotal.indices, cutoff, dataset.regions);
  out.dot = export_dot(out.edges);
  out.edges_csv = export_edges_csv(out.edges);
  return out;
}

}  // namespace pivotal
