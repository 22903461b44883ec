#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pivotal/cohort.hpp"
#include "pivotal/diffgraph.hpp"

namespace pivotal {

enum class Aggregation { Mean, Median };

// Entrywise mean (or median) of the group's matrices.
Eigen::MatrixXd group_mean_graph(std::span<const DifferentialGraph> graphs, Group group,
                                 Aggregation aggregation = Aggregation::Mean);

struct Edge {
  std::size_t a = 0;  // a < b
  std::size_t b = 0;
  double weight = 0.0;
};

struct EdgeList {
  std::vector<Edge> edges;
  std::vector<std::size_t> nodes;       // pivotal nodes, including isolated ones
  std::vector<std::string> node_names;  // index -> region name
  double cutoff = 0.0;
};

// Keeps off-diagonal pivotal pairs with |weight| >= cutoff, sign preserved.
EdgeList apply_cutoff(const Eigen::MatrixXd& matrix, std::span<const std::size_t> nodes, double cutoff,
                      std::vector<std::string> node_names);

// Undirected DOT graph; negative edges are dashed. Byte-deterministic.
std::string export_dot(const EdgeList& edges);

// CSV `node_a,node_b,weight` using region names.
std::string export_edges_csv(const EdgeList& edges);

}  // namespace pivotal
