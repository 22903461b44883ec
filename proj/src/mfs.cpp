#include "pivotal/mfs.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "pivotal/error.hpp"
#include "pivotal/spectral.hpp"
#include "text_util.hpp"

namespace pivotal {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string WeightingScheme::tag() const {
  switch (kind) {
    case Kind::Subtraction: return lower(to_string(a)) + "-" + lower(to_string(b));
    case Kind::SingleGroup: return lower(to_string(a));
    case Kind::WholeCohort: return "cohort";
  }
  return {};
}

ViewWeighting make_view_weights(const CohortDataset& dataset, const WeightingScheme& scheme) {
  ViewWeighting out;
  switch (scheme.kind) {
    case WeightingScheme::Kind::Subtraction: {
      if (scheme.a == scheme.b) fail(ErrorCode::InvalidArgument, "subtraction needs two distinct groups");
      const std::size_t na = dataset.group_size(scheme.a);
      const std::size_t nb = dataset.group_size(scheme.b);
      if (na == 0 || nb == 0) {
        fail(ErrorCode::EmptyGroup, "subtraction " + std::string(to_string(scheme.a)) + "-" +
                                        std::string(to_string(scheme.b)) + " has an empty group");
      }
      double wa = static_cast<double>(nb) / static_cast<double>(na);
      double wb = -1.0;
      std::ostringstream desc;
      if (scheme.explicit_weights) {
        std::tie(wa, wb) = *scheme.explicit_weights;
        desc << scheme.tag() << " subtraction (" << to_string(scheme.a) << "=" << detail::format_double(wa)
             << ", " << to_string(scheme.b) << "=" << detail::format_double(wb) << ")";
      } else {
        desc << scheme.tag() << " subtraction (" << to_string(scheme.a) << "=" << nb << "/" << na << ", "
             << to_string(scheme.b) << "=-1)";
      }
      out.description = desc.str();
      for (const auto& p : dataset.patients) {
        if (p.group == scheme.a) out.weights[p.id] = wa;
        if (p.group == scheme.b) out.weights[p.id] = wb;
      }
      break;
    }
    case WeightingScheme::Kind::SingleGroup:
      if (dataset.group_size(scheme.a) == 0) {
        fail(ErrorCode::EmptyGroup, "group " + std::string(to_string(scheme.a)) + " is empty");
      }
      out.description = "single-group:" + std::string(to_string(scheme.a));
      for (const auto& p : dataset.patients) {
        if (p.group == scheme.a) out.weights[p.id] = 1.0;
      }
      break;
    case WeightingScheme::Kind::WholeCohort:
      if (dataset.patients.empty()) fail(ErrorCode::EmptyGroup, "cohort is empty");
      out.description = "whole-cohort";
      for (const auto& p : dataset.patients) out.weights[p.id] = 1.0;
      break;
  }
  return out;
}

Eigen::MatrixXd aggregate_laplacian(std::span<const DifferentialGraph> graphs, const ViewWeighting& weights) {
  if (graphs.empty()) fail(ErrorCode::InvalidArgument, "aggregate_laplacian: no graphs");
  const auto d = graphs.front().matrix.rows();
  Eigen::MatrixXd weighted = Eigen::MatrixXd::Zero(d, d);
  std::set<std::string> used;
  for (const auto& g : graphs) {
    if (g.matrix.rows() != d || g.matrix.cols() != d || g.nodes != graphs.front().nodes) {
      fail(ErrorCode::InvalidArgument, "aggregate_laplacian: graph '" + g.patient_id + "' has a different node space");
    }
    const auto it = weights.weights.find(g.patient_id);
    if (it == weights.weights.end() || it->second == 0.0) continue;
    weighted += it->second * g.matrix;
    used.insert(g.patient_id);
  }
  for (const auto& [id, alpha] : weights.weights) {
    if (alpha != 0.0 && !used.contains(id)) {
      fail(ErrorCode::InvalidArgument, "aggregate_laplacian: weighted patient '" + id + "' has no graph");
    }
  }
  // The Laplacian is linear in S, so the weighted sum of per-view Laplacians
  // equals the Laplacian of the weighted similarity sum.
  return laplacian(weighted).matrix;
}

void MfsConfig::validate(std::size_t node_count) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
  if (k == 0) fail(ErrorCode::InvalidArgument, "k must be positive");
  if (k > node_count) {
    fail(ErrorCode::InvalidArgument,
         "k exceeds node count (k=" + std::to_string(k) + ", nodes=" + std::to_string(node_count) + ")");
  }
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "tol must be positive");
  if (max_iter < 1) fail(ErrorCode::InvalidArgument, "max_iter must be at least 1");
}

double mfs_objective(const Eigen::MatrixXd& m, const Eigen::MatrixXd& w, double lambda, double epsilon) {
  const double fit = (w.transpose() * m * w).trace();
  const double penalty = (w.rowwise().squaredNorm().array() + epsilon).sqrt().sum();
  return fit + lambda * penalty;
}

std::vector<std::size_t> rank_scores(const Eigen::VectorXd& scores) {
  std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
  });
  return order;
}

namespace {

// Row scores of the selected subspace. When the eigenvalue cluster at the
// k-boundary is degenerate, any q of its m vectors are an equally valid
// choice; the score then uses the Haar average over those choices,
// (q/m) * |P_cluster row|^2, which is basis independent and still sums to k.
Eigen::VectorXd boundary_scores(const EigenDecomposition& eig, std::size_t k, double tie_tol) {
  const auto d = static_cast<std::size_t>(eig.eigenvalues.size());
  const auto ki = static_cast<Eigen::Index>(k);
  // The full basis is orthogonal: every row norm is exactly 1.
  if (k == d) return Eigen::VectorXd::Ones(ki);
  if (eig.eigenvalues[ki] - eig.eigenvalues[ki - 1] >= tie_tol) {
    return eig.eigenvectors.leftCols(ki).rowwise().norm();
  }
  std::size_t lo = k - 1;
  while (lo > 0 && eig.eigenvalues[static_cast<Eigen::Index>(lo)] -
                           eig.eigenvalues[static_cast<Eigen::Index>(lo - 1)] < tie_tol) {
    --lo;
  }
  std::size_t hi = k;
  while (hi + 1 < d && eig.eigenvalues[static_cast<Eigen::Index>(hi + 1)] -
                           eig.eigenvalues[static_cast<Eigen::Index>(hi)] < tie_tol) {
    ++hi;
  }
  const auto loi = static_cast<Eigen::Index>(lo);
  const auto m = static_cast<Eigen::Index>(hi - lo + 1);
  const double share = static_cast<double>(k - lo) / static_cast<double>(m);
  Eigen::VectorXd sq = eig.eigenvectors.leftCols(loi).rowwise().squaredNorm();
  sq += share * eig.eigenvectors.middleCols(loi, m).rowwise().squaredNorm();
  return sq.cwiseSqrt();
}

}  // namespace

MfsSolution mfs_solve(const Eigen::MatrixXd& m, const MfsConfig& config) {
  require_symmetric(m, "mfs_solve");
  const auto d = m.rows();
  config.validate(static_cast<std::size_t>(d));
  const auto k = static_cast<Eigen::Index>(config.k);

  MfsSolution sol;
  auto& state = sol.state;
  auto& result = sol.result;
  result.config = config;
  state.d_diag = Eigen::VectorXd::Ones(d);

  Eigen::VectorXd previous;
  EigenDecomposition eig;
  Eigen::MatrixXd a;
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    a = m;
    a.diagonal() += config.lambda * state.d_diag;
    eig = sym_eig(a);
    state.w = eig.eigenvectors.leftCols(k);
    state.iteration = iter;

    const Eigen::VectorXd row_sq = state.w.rowwise().squaredNorm();
    state.objective_trace.push_back(mfs_objective(m, state.w, config.lambda, config.epsilon));
    state.orthonormality_trace.push_back(
        (state.w.transpose() * state.w - Eigen::MatrixXd::Identity(k, k)).norm());
    state.d_diag = 0.5 / (row_sq.array() + config.epsilon).sqrt();
    if (!state.d_diag.allFinite()) fail(ErrorCode::Numerical, "mfs_solve: reweighting produced non-finite values");

    const double tie_tol = 1e-10 * std::max(1.0, eig.eigenvalues.cwiseAbs().maxCoeff());
    Eigen::VectorXd scores = boundary_scores(eig, config.k, tie_tol);
    result.boundary_gap = k < d ? eig.eigenvalues[k] - eig.eigenvalues[k - 1]
                                : std::numeric_limits<double>::infinity();
    result.degenerate_boundary = result.boundary_gap < tie_tol;

    if (iter > 1) {
      const double top = scores.maxCoeff();
      const double change = (scores - previous).cwiseAbs().maxCoeff();
      if (change <= config.tol * top) {
        result.converged = true;
        previous = std::move(scores);
        break;
      }
    }
    previous = std::move(scores);
  }
  if (!previous.allFinite()) fail(ErrorCode::Numerical, "mfs_solve: non-finite node scores");

  result.scores = std::move(previous);
  result.ranking = rank_scores(result.scores);
  result.iterations_used = state.iteration;
  return sol;
}

void ConsensusConfig::validate(std::size_t node_count) const {
  if (lambda_grid.empty() || k_grid.empty()) fail(ErrorCode::InvalidArgument, "lambda and k grids must be non-empty");
  for (const double l : lambda_grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) fail(ErrorCode::InvalidArgument, "lambda grid values must be finite and >= 0");
  }
  for (const auto k : k_grid) {
    if (k == 0) fail(ErrorCode::InvalidArgument, "k grid values must be positive");
    if (k > node_count) {
      fail(ErrorCode::InvalidArgument,
           "k exceeds node count (k=" + std::to_string(k) + ", nodes=" + std::to_string(node_count) + ")");
    }
  }
  if (top_k == 0 || top_k > node_count) {
    fail(ErrorCode::InvalidArgument, "top_K must be in [1, " + std::to_string(node_count) + "]");
  }
  if (min_pass_count == 0 || min_pass_count > grid_size()) {
    fail(ErrorCode::InvalidArgument, "min_pass_count must be in [1, " + std::to_string(grid_size()) + "]");
  }
}

std::size_t min_pass_from_ratio(double ratio, std::size_t grid_size) {
  if (!(ratio > 0.0 && ratio <= 1.0)) fail(ErrorCode::InvalidArgument, "pass ratio must be in (0, 1]");
  const double raw = ratio * static_cast<double>(grid_size);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

std::vector<SelectionResult> run_grid(const Eigen::MatrixXd& m, const ConsensusConfig& consensus,
                                      const GridOptions& options) {
  consensus.validate(static_cast<std::size_t>(m.rows()));
  const std::size_t nk = consensus.k_grid.size();
  const std::size_t total = consensus.grid_size();

  std::vector<SelectionResult> results(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      MfsConfig cfg;
      cfg.lambda = consensus.lambda_grid[i / nk];
      cfg.k = consensus.k_grid[i % nk];
      cfg.epsilon = options.epsilon;
      cfg.tol = options.tol;
      cfg.max_iter = options.max_iter;
      try {
        results[i] = mfs_solve(m, cfg).result;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  unsigned jobs = options.jobs ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, total));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < total; ++i) {
    if (!errors[i]) continue;
    const std::string where = "(lambda=" + detail::format_double(consensus.lambda_grid[i / nk]) +
                              ", k=" + std::to_string(consensus.k_grid[i % nk]) + "): ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      fail(e.code(), where + e.what());
    } catch (const std::exception& e) {
      fail(ErrorCode::Numerical, where + e.what());
    }
  }
  return results;
}

std::vector<SelectionResult> run_grid(std::span<const DifferentialGraph> graphs, const ViewWeighting& weights,
                                      const ConsensusConfig& consensus, const GridOptions& options) {
  return run_grid(aggregate_laplacian(graphs, weights), consensus, options);
}

PivotalNodeSet consensus_pivotal(std::span<const SelectionResult> results, const ConsensusConfig& consensus,
                                 const std::string& weighting_description) {
  PivotalNodeSet out;
  out.provenance.push_back(
      {weighting_description, consensus.top_k, consensus.min_pass_count, consensus.lambda_grid, consensus.k_grid});
  if (results.empty()) return out;

  const std::size_t d = results.front().ranking.size();
  std::vector<std::size_t> counts(d, 0);
  for (const auto& r : results) {
    if (r.ranking.size() != d) fail(ErrorCode::InvalidArgument, "consensus_pivotal: results differ in node count");
    const std::size_t top = std::min(consensus.top_k, d);
    for (std::size_t i = 0; i < top; ++i) ++counts[r.ranking[i]];
  }
  for (std::size_t node = 0; node < d; ++node) {
    if (counts[node] >= consensus.min_pass_count) {
      out.indices.push_back(node);
      out.pass_counts[node] = counts[node];
    }
  }
  return out;
}

PivotalNodeSet union_pivotal(std::span<const PivotalNodeSet> sets) {
  PivotalNodeSet out;
  for (const auto& s : sets) {
    for (const auto node : s.indices) {
      const auto it = s.pass_counts.find(node);
      const std::size_t count = it == s.pass_counts.end() ? 0 : it->second;
      auto& merged = out.pass_counts[node];
      merged = std::max(merged, count);
    }
    out.provenance.insert(out.provenance.end(), s.provenance.begin(), s.provenance.end());
  }
  for (const auto& [node, count] : out.pass_counts) out.indices.push_back(node);
  return out;
}

PivotalNodeSet remap_pivotal(const PivotalNodeSet& set, std::span<const std::size_t> index_map) {
  PivotalNodeSet out;
  out.provenance = set.provenance;
  for (const auto node : set.indices) {
    if (node >= index_map.size()) fail(ErrorCode::InvalidArgument, "remap_pivotal: index out of range");
    const auto mapped = index_map[node];
    out.indices.push_back(mapped);
    const auto it = set.pass_counts.find(node);
    if (it != set.pass_counts.end()) out.pass_counts[mapped] = it->second;
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

}  // namespace pivotal
