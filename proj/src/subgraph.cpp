#include "pivotal/subgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "pivotal/error.hpp"
#include "text_util.hpp"

namespace pivotal {

Eigen::MatrixXd group_mean_graph(std::span<const DifferentialGraph> graphs, Group group, Aggregation aggregation) {
  std::vector<const DifferentialGraph*> members;
  for (const auto& g : graphs) {
    if (g.group == group) members.push_back(&g);
  }
  if (members.empty()) fail(ErrorCode::EmptyGroup, "no patients in group " + std::string(to_string(group)));
  const auto d = members.front()->matrix.rows();
  for (const auto* g : members) {
    if (g->matrix.rows() != d) fail(ErrorCode::InvalidArgument, "group_mean_graph: graphs differ in size");
  }

  if (aggregation == Aggregation::Mean) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
    for (const auto* g : members) sum += g->matrix;
    return sum / static_cast<double>(members.size());
  }

  Eigen::MatrixXd out(d, d);
  std::vector<double> column(members.size());
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = j; k < d; ++k) {
      for (std::size_t i = 0; i < members.size(); ++i) column[i] = members[i]->matrix(j, k);
      std::sort(column.begin(), column.end());
      const std::size_t n = column.size();
      const double med = n % 2 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
      out(j, k) = med;
      out(k, j) = med;
    }
  }
  return out;
}

EdgeList apply_cutoff(const Eigen::MatrixXd& matrix, std::span<const std::size_t> nodes, double cutoff,
                      std::vector<std::string> node_names) {
  if (!(cutoff > 0.0)) fail(ErrorCode::InvalidArgument, "cutoff must be positive");
  EdgeList out;
  out.cutoff = cutoff;
  out.node_names = std::move(node_names);
  out.nodes.assign(nodes.begin(), nodes.end());
  std::sort(out.nodes.begin(), out.nodes.end());
  out.nodes.erase(std::unique(out.nodes.begin(), out.nodes.end()), out.nodes.end());
  for (const auto n : out.nodes) {
    if (n >= static_cast<std::size_t>(matrix.rows())) fail(ErrorCode::InvalidArgument, "apply_cutoff: node out of range");
  }
  for (std::size_t x = 0; x < out.nodes.size(); ++x) {
    for (std::size_t y = x + 1; y < out.nodes.size(); ++y) {
      const auto a = out.nodes[x];
      const auto b = out.nodes[y];
      const double w = matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      if (std::abs(w) >= cutoff) out.edges.push_back({a, b, w});
    }
  }
  return out;
}

namespace {

std::string name_of(const EdgeList& edges, std::size_t node) {
  return node < edges.node_names.size() ? edges.node_names[node] : "node_" + std::to_string(node);
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

std::string six_digits(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string export_dot(const EdgeList& edges) {
  if (edges.nodes.empty() && edges.edges.empty()) return "graph G { }\n";

  std::vector<std::string> names;
  for (const auto n : edges.nodes) names.push_back(name_of(edges, n));
  for (const auto& e : edges.edges) {
    names.push_back(name_of(edges, e.a));
    names.push_back(name_of(edges, e.b));
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());

  std::vector<std::tuple<std::string, std::string, double>> lines;
  for (const auto& e : edges.edges) {
    auto a = name_of(edges, e.a);
    auto b = name_of(edges, e.b);
    if (b < a) std::swap(a, b);
    lines.emplace_back(std::move(a), std::move(b), e.weight);
  }
  std::sort(lines.begin(), lines.end(),
            [](const auto& x, const auto& y) { return std::tie(std::get<0>(x), std::get<1>(x)) <
                                                      std::tie(std::get<0>(y), std::get<1>(y)); });

  std::string out = "graph G {\n";
  for (const auto& n : names) out += "  " + quoted(n) + ";\n";
  for (const auto& [a, b, w] : lines) {
    out += "  " + quoted(a) + " -- " + quoted(b) + " [weight=" + six_digits(w);
    if (w < 0.0) out += ", style=dashed";
    out += "];\n";
  }
  out += "}\n";
  return out;
}

std::string export_edges_csv(const EdgeList& edges) {
  std::string out = "node_a,node_b,weight\n";
  for (const auto& e : edges.edges) {
    out += name_of(edges, e.a) + "," + name_of(edges, e.b) + "," + detail::format_double(e.weight) + "\n";
  }
  return out;
}

}  // namespace pivotal
