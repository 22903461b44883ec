#include "pivotal/diffgraph.hpp"

#include <cmath>

#include "pivotal/error.hpp"
#include "text_util.hpp"

namespace pivotal {

double ratio_change(double vol_t0, double vol_t1) {
  if (!(vol_t0 > 0.0)) fail(ErrorCode::Domain, "ratio_change: baseline volume must be positive");
  return (vol_t1 - vol_t0) / vol_t0;
}

RatioVector patient_ratios(const CohortDataset& dataset, std::size_t patient) {
  const auto& p = dataset.patients.at(patient);
  const std::size_t d = dataset.region_count();
  RatioVector out;
  out.patient_id = p.id;
  out.group = p.group;
  out.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  out.mask.assign(d, false);
  for (std::size_t r = 0; r < d; ++r) {
    if (!p.usable(r)) continue;
    const double value = ratio_change(*p.t0[r], *p.t1[r]);
    if (!std::isfinite(value)) continue;
    out.values[static_cast<Eigen::Index>(r)] = value;
    out.mask[r] = true;
  }
  return out;
}

DifferentialGraph build_differential_graph(const RatioVector& ratios) {
  const auto d = ratios.values.size();
  if (ratios.mask.size() != static_cast<std::size_t>(d)) {
    fail(ErrorCode::InvalidArgument, "ratio mask length does not match values");
  }
  DifferentialGraph g;
  g.patient_id = ratios.patient_id;
  g.group = ratios.group;
  g.matrix = Eigen::MatrixXd::Zero(d, d);
  g.nodes.resize(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    g.nodes[static_cast<std::size_t>(j)] = static_cast<std::size_t>(j);
    if (!ratios.mask[static_cast<std::size_t>(j)]) continue;
    const double rj = ratios.values[j];
    if (!std::isfinite(rj)) fail(ErrorCode::Domain, "non-finite ratio for masked-in region");
    for (Eigen::Index k = j; k < d; ++k) {
      if (!ratios.mask[static_cast<std::size_t>(k)]) continue;
      const double product = rj * ratios.values[k];
      g.matrix(j, k) = product;
      g.matrix(k, j) = product;
    }
  }
  return g;
}

DifferentialGraph restrict_graph(const DifferentialGraph& graph, std::span<const std::size_t> indices) {
  const std::size_t d = graph.size();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= d) {
      fail(ErrorCode::InvalidArgument, "restrict_graph: index " + std::to_string(indices[i]) + " out of range");
    }
    if (i > 0 && indices[i] <= indices[i - 1]) {
      fail(ErrorCode::InvalidArgument, "restrict_graph: indices must be sorted and distinct");
    }
  }
  DifferentialGraph out;
  out.patient_id = graph.patient_id;
  out.group = graph.group;
  const auto p = static_cast<Eigen::Index>(indices.size());
  out.matrix.resize(p, p);
  out.nodes.resize(indices.size());
  for (Eigen::Index a = 0; a < p; ++a) {
    const auto ia = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(a)]);
    out.nodes[static_cast<std::size_t>(a)] = graph.nodes[static_cast<std::size_t>(ia)];
    for (Eigen::Index b = 0; b < p; ++b) {
      out.matrix(a, b) = graph.matrix(ia, static_cast<Eigen::Index>(indices[static_cast<std::size_t>(b)]));
    }
  }
  return out;
}

std::vector<DifferentialGraph> build_cohort_graphs(const CohortDataset& dataset) {
  std::vector<DifferentialGraph> out;
  out.reserve(dataset.patient_count());
  for (std::size_t i = 0; i < dataset.patient_count(); ++i) {
    out.push_back(build_differential_graph(patient_ratios(dataset, i)));
  }
  return out;
}

std::vector<DifferentialGraph> restrict_graphs(const std::vector<DifferentialGraph>& graphs,
                                               std::span<const std::size_t> indices) {
  std::vector<DifferentialGraph> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(restrict_graph(g, indices));
  return out;
}

std::string graph_to_csv(const DifferentialGraph& graph) {
  std::string out;
  const auto d = graph.matrix.rows();
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) {
      if (k) out += ',';
      out += detail::format_double(graph.matrix(j, k));
    }
    out += '\n';
  }
  return out;
}

}  // namespace pivotal
