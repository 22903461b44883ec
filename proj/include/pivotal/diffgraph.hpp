#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pivotal/cohort.hpp"

namespace pivotal {

// Relative change (t1 - t0) / t0. Throws a domain error unless t0 > 0.
double ratio_change(double vol_t0, double vol_t1);

struct RatioVector {
  std::string patient_id;
  Group group = Group::AD;
  Eigen::VectorXd values;
  std::vector<bool> mask;  // true where the value is usable
};

RatioVector patient_ratios(const CohortDataset& dataset, std::size_t patient);

// Per-patient matrix of pairwise ratio products. `nodes[i]` is the original
// region index of row i, so restricted graphs can still be reported by name.
struct DifferentialGraph {
  std::string patient_id;
  Group group = Group::AD;
  Eigen::MatrixXd matrix;
  std::vector<std::size_t> nodes;

  std::size_t size() const noexcept { return nodes.size(); }
};

// matrix(j,k) = values[j] * values[k] on masked-in pairs, 0 elsewhere.
DifferentialGraph build_differential_graph(const RatioVector& ratios);

// Principal submatrix on `indices` (positions in the graph, strictly increasing).
DifferentialGraph restrict_graph(const DifferentialGraph& graph, std::span<const std::size_t> indices);

// One graph per patient in dataset order, over the full region space.
std::vector<DifferentialGraph> build_cohort_graphs(const CohortDataset& dataset);

std::vector<DifferentialGraph> restrict_graphs(const std::vector<DifferentialGraph>& graphs,
                                               std::span<const std::size_t> indices);

// d rows of d comma-separated values, shortest round-trip decimals.
std::string graph_to_csv(const DifferentialGraph& graph);

}  // namespace pivotal
