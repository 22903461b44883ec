#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pivotal/cohort.hpp"
#include "pivotal/diffgraph.hpp"

namespace pivotal {

// How patient views are weighted in the aggregated Laplacian.
struct WeightingScheme {
  enum class Kind { Subtraction, SingleGroup, WholeCohort };
  Kind kind = Kind::WholeCohort;
  Group a = Group::AD;  // minuend, or the single group
  Group b = Group::MCI;  // subtrahend
  // Overrides the |B|/|A| and -1 subtraction weights.
  std::optional<std::pair<double, double>> explicit_weights;

  static WeightingScheme subtraction(Group a, Group b) { return {Kind::Subtraction, a, b, std::nullopt}; }
  static WeightingScheme single_group(Group g) { return {Kind::SingleGroup, g, g, std::nullopt}; }
  static WeightingScheme whole_cohort() { return {}; }

  // Short lowercase tag, e.g. "ad-mci", "ad", "cohort".
  std::string tag() const;
};

struct ViewWeighting {
  std::map<std::string, double> weights;  // patient id -> alpha
  std::string description;
};

ViewWeighting make_view_weights(const CohortDataset& dataset, const WeightingScheme& scheme);

// M = sum_v alpha_v * laplacian(S_v). Patients without a weight contribute nothing.
Eigen::MatrixXd aggregate_laplacian(std::span<const DifferentialGraph> graphs, const ViewWeighting& weights);

struct MfsConfig {
  double lambda = 1.0;
  std::size_t k = 1;
  double epsilon = 1e-10;
  double tol = 1e-6;
  int max_iter = 100;

  void validate(std::size_t node_count) const;
};

struct SolverState {
  Eigen::MatrixXd w;
  Eigen::VectorXd d_diag;
  int iteration = 0;
  // F(W) = Tr(W^T M W) + lambda * sum_i sqrt(|W^i|^2 + eps), one entry per iteration.
  std::vector<double> objective_trace;
  // |W^T W - I|_F, one entry per iteration.
  std::vector<double> orthonormality_trace;
};

struct SelectionResult {
  MfsConfig config;
  Eigen::VectorXd scores;
  std::vector<std::size_t> ranking;
  bool converged = false;
  int iterations_used = 0;
  // Gap between eigenvalues k and k+1 of the final iteration matrix (infinity when k = d).
  double boundary_gap = 0.0;
  bool degenerate_boundary = false;
};

struct MfsSolution {
  SelectionResult result;
  SolverState state;
};

// Iteratively reweighted l2,1 solve: W <- k smallest eigenvectors of
// M + lambda * diag(D), then D_ii <- 1 / (2 sqrt(|W^i|^2 + eps)), from D = I.
MfsSolution mfs_solve(const Eigen::MatrixXd& m, const MfsConfig& config);

double mfs_objective(const Eigen::MatrixXd& m, const Eigen::MatrixXd& w, double lambda, double epsilon);

// Descending score, ties by ascending index.
std::vector<std::size_t> rank_scores(const Eigen::VectorXd& scores);

struct ConsensusConfig {
  std::size_t top_k = 30;
  std::size_t min_pass_count = 41;
  std::vector<double> lambda_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<std::size_t> k_grid{15, 20, 25, 30, 35, 40, 45, 50, 55};

  std::size_t grid_size() const noexcept { return lambda_grid.size() * k_grid.size(); }
  void validate(std::size_t node_count) const;
};

// Smallest pass count whose fraction of the grid reaches `ratio`.
std::size_t min_pass_from_ratio(double ratio, std::size_t grid_size);

struct GridOptions {
  double epsilon = 1e-10;
  double tol = 1e-6;
  int max_iter = 100;
  unsigned jobs = 0;  // 0 = hardware concurrency
};

// One result per (lambda, k), ordered lambda-major. Output does not depend on `jobs`.
std::vector<SelectionResult> run_grid(const Eigen::MatrixXd& m, const ConsensusConfig& consensus,
                                      const GridOptions& options = {});

std::vector<SelectionResult> run_grid(std::span<const DifferentialGraph> graphs, const ViewWeighting& weights,
                                      const ConsensusConfig& consensus, const GridOptions& options = {});

struct Provenance {
  std::string weighting;
  std::size_t top_k = 0;
  std::size_t min_pass_count = 0;
  std::vector<double> lambda_grid;
  std::vector<std::size_t> k_grid;
};

struct PivotalNodeSet {
  std::vector<std::size_t> indices;
  std::map<std::size_t, std::size_t> pass_counts;
  std::vector<Provenance> provenance;
};

PivotalNodeSet consensus_pivotal(std::span<const SelectionResult> results, const ConsensusConfig& consensus,
                                 const std::string& weighting_description = {});

// Union of indices; pass counts merged by max; provenance concatenated.
PivotalNodeSet union_pivotal(std::span<const PivotalNodeSet> sets);

// Relabels indices through `index_map` (position -> new index).
PivotalNodeSet remap_pivotal(const PivotalNodeSet& set, std::span<const std::size_t> index_map);

}  // namespace pivotal
