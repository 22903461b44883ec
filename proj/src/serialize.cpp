#include "pivotal/serialize.hpp"

#include <cmath>
#include <set>

#include "pivotal/error.hpp"

namespace pivotal {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Group group_from_json(const json& j) {
  const auto g = parse_group(j.get<std::string>());
  if (!g) fail(ErrorCode::InvalidArgument, "unknown group '" + j.get<std::string>() + "'");
  return *g;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, std::string(what) + ": expected a JSON object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.contains(key)) fail(ErrorCode::InvalidArgument, std::string(what) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// Translates nlohmann type errors into library errors.
template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string(what) + ": " + e.what());
  }
}

}  // namespace

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

json summary_to_json(const CohortSummary& summary) {
  json groups = json::object();
  for (const auto& [g, n] : summary.group_counts) groups[std::string(to_string(g))] = n;
  return {{"schema_version", kSchemaVersion},
          {"patients", summary.patients},
          {"group_sizes", groups},
          {"regions", summary.regions},
          {"valid_nodes", summary.valid_nodes}};
}

json selection_to_json(const SelectionRun& run) {
  json results = json::array();
  for (const auto& r : run.results) {
    json ranking = json::array();
    for (const auto pos : r.ranking) {
      const auto node = run.active_nodes[pos];
      ranking.push_back({{"node_index", node},
                         {"region_name", run.node_space[node]},
                         {"score", r.scores[static_cast<Eigen::Index>(pos)]}});
    }
    results.push_back({{"lambda", r.config.lambda},
                       {"k", r.config.k},
                       {"converged", r.converged},
                       {"iterations", r.iterations_used},
                       {"boundary_gap", finite_or_null(r.boundary_gap)},
                       {"degenerate_boundary", r.degenerate_boundary},
                       {"ranking", ranking}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "selection_results"},
          {"setting", run.tag},
          {"weighting", run.weighting_description},
          {"node_space_size", run.node_space.size()},
          {"active_nodes", run.active_nodes},
          {"options", select_options_to_json(run.options)},
          {"results", results}};
}

json provenance_to_json(const Provenance& p) {
  return {{"weighting", p.weighting},
          {"top_K", p.top_k},
          {"min_pass_count", p.min_pass_count},
          {"grid_size", p.lambda_grid.size() * p.k_grid.size()},
          {"lambda_grid", p.lambda_grid},
          {"k_grid", p.k_grid}};
}

Provenance provenance_from_json(const json& j) {
  return guarded("provenance", [&] {
    Provenance p;
    p.weighting = j.at("weighting").get<std::string>();
    p.top_k = j.at("top_K").get<std::size_t>();
    p.min_pass_count = j.at("min_pass_count").get<std::size_t>();
    p.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    p.k_grid = j.at("k_grid").get<std::vector<std::size_t>>();
    return p;
  });
}

json pivotal_to_json(const PivotalNodeSet& set, const std::vector<std::string>& node_space) {
  json nodes = json::array();
  for (const auto n : set.indices) {
    if (n >= node_space.size()) fail(ErrorCode::InvalidArgument, "pivotal node outside node space");
    const auto it = set.pass_counts.find(n);
    nodes.push_back({{"node_index", n},
                     {"region_name", node_space[n]},
                     {"pass_count", it == set.pass_counts.end() ? 0 : it->second}});
  }
  json provenance = json::array();
  for (const auto& p : set.provenance) provenance.push_back(provenance_to_json(p));
  return {{"schema_version", kSchemaVersion},
          {"kind", "pivotal_node_set"},
          {"node_space", node_space},
          {"nodes", nodes},
          {"provenance", provenance}};
}

PivotalDocument pivotal_from_json(const json& j) {
  return guarded("pivotal node set", [&] {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      fail(ErrorCode::InvalidArgument, "pivotal node set: unsupported schema_version");
    }
    if (j.at("kind").get<std::string>() != "pivotal_node_set") {
      fail(ErrorCode::InvalidArgument, "not a pivotal node set document");
    }
    PivotalDocument doc;
    doc.node_space = j.at("node_space").get<std::vector<std::string>>();
    for (const auto& node : j.at("nodes")) {
      const auto idx = node.at("node_index").get<std::size_t>();
      if (idx >= doc.node_space.size()) fail(ErrorCode::InvalidArgument, "pivotal node outside node space");
      if (node.at("region_name").get<std::string>() != doc.node_space[idx]) {
        fail(ErrorCode::InvalidArgument, "pivotal node name does not match node space");
      }
      doc.set.indices.push_back(idx);
      doc.set.pass_counts[idx] = node.at("pass_count").get<std::size_t>();
    }
    std::sort(doc.set.indices.begin(), doc.set.indices.end());
    if (std::adjacent_find(doc.set.indices.begin(), doc.set.indices.end()) != doc.set.indices.end()) {
      fail(ErrorCode::InvalidArgument, "pivotal node set lists a node twice");
    }
    for (const auto& p : j.at("provenance")) doc.set.provenance.push_back(provenance_from_json(p));
    return doc;
  });
}

namespace {

json eval_to_json(const EvalReport& report) {
  json per_class = json::object();
  for (const auto& ce : report.per_class) {
    per_class[std::string(to_string(ce.group))] = {
        {"auc", ce.auc},
        {"youden_threshold", finite_or_null(ce.youden.threshold)},
        {"youden_j", ce.youden.j},
        {"confusion", {{"tp", ce.confusion.tp}, {"fp", ce.confusion.fp},
                       {"tn", ce.confusion.tn}, {"fn", ce.confusion.fn}}}};
  }
  return {{"split_seed", report.split_seed},
          {"per_class", per_class},
          {"micro_auc", report.micro_auc},
          {"macro_auc", report.macro_auc}};
}

}  // namespace

json report_to_json(const ClassificationRun& run, const std::vector<std::string>& node_space) {
  json nodes = json::array();
  for (const auto n : run.nodes) nodes.push_back({{"node_index", n}, {"region_name", node_space.at(n)}});
  json repeats = json::array();
  for (const auto& r : run.reports) repeats.push_back(eval_to_json(r));
  json out = {{"schema_version", kSchemaVersion},
              {"kind", "evaluation_report"},
              {"class_order", {"AD", "CN", "MCI"}},
              {"options", classify_options_to_json(run.options)},
              {"nodes", nodes},
              {"feature_count", run.feature_count},
              {"train_rows", run.train_rows},
              {"test_rows", run.test_rows},
              {"final_losses", run.final_losses},
              {"warnings", run.warnings},
              {"report", eval_to_json(run.reports.front())},
              {"repeats", repeats}};
  return out;
}

json synth_config_to_json(const SynthConfig& c) {
  json sizes = json::object();
  for (const auto& [g, n] : c.group_sizes) sizes[std::string(to_string(g))] = n;
  json effects = json::object();
  for (const auto& [g, e] : c.effect_sizes) effects[std::string(to_string(g))] = e;
  return {{"seed", c.seed},
          {"d", c.d},
          {"group_sizes", sizes},
          {"planted_nodes", c.planted_nodes},
          {"effect_sizes", effects},
          {"noise_sd", c.noise_sd},
          {"baseline_volume_range", {c.volume_min, c.volume_max}},
          {"invalid_node_count", c.invalid_node_count}};
}

SynthConfig synth_config_from_json(const json& j) {
  reject_unknown_keys(j, {"seed", "d", "group_sizes", "planted_nodes", "effect_sizes", "noise_sd",
                          "baseline_volume_range", "invalid_node_count"},
                      "synth config");
  return guarded("synth config", [&] {
    SynthConfig c;
    read_if(j, "seed", c.seed);
    if (j.contains("d")) {
      c.d = j.at("d").get<std::size_t>();
      c.planted_nodes = SynthConfig::default_planted_nodes(c.d);
    }
    if (j.contains("group_sizes")) {
      c.group_sizes.clear();
      for (const auto& [k, v] : j.at("group_sizes").items()) c.group_sizes[group_from_json(k)] = v.get<std::size_t>();
    }
    read_if(j, "planted_nodes", c.planted_nodes);
    if (j.contains("effect_sizes")) {
      c.effect_sizes.clear();
      for (const auto& [k, v] : j.at("effect_sizes").items()) c.effect_sizes[group_from_json(k)] = v.get<double>();
    }
    read_if(j, "noise_sd", c.noise_sd);
    if (j.contains("baseline_volume_range")) {
      const auto range = j.at("baseline_volume_range").get<std::vector<double>>();
      if (range.size() != 2) fail(ErrorCode::InvalidArgument, "baseline_volume_range needs two values");
      c.volume_min = range[0];
      c.volume_max = range[1];
    }
    read_if(j, "invalid_node_count", c.invalid_node_count);
    c.validate();
    return c;
  });
}

SelectOptions select_options_from_json(const json& j) {
  reject_unknown_keys(j, {"setting", "groups", "weights", "lambda_grid", "k_grid", "top_k", "min_pass",
                          "min_pass_ratio", "epsilon", "tol", "max_iter", "jobs"},
                      "select options");
  return guarded("select options", [&] {
    SelectOptions o;
    const auto setting = j.value("setting", std::string("cohort"));
    const auto groups = j.value("groups", std::vector<std::string>{});
    if (setting == "subtraction") {
      if (groups.size() != 2) fail(ErrorCode::InvalidArgument, "subtraction needs exactly two groups");
      o.scheme = WeightingScheme::subtraction(group_from_json(groups[0]), group_from_json(groups[1]));
      if (j.contains("weights")) {
        const auto w = j.at("weights").get<std::vector<double>>();
        if (w.size() != 2) fail(ErrorCode::InvalidArgument, "weights needs two values");
        o.scheme.explicit_weights = std::make_pair(w[0], w[1]);
      }
    } else if (setting == "group") {
      if (groups.size() != 1) fail(ErrorCode::InvalidArgument, "group setting needs exactly one group");
      o.scheme = WeightingScheme::single_group(group_from_json(groups[0]));
    } else if (setting == "cohort") {
      if (!groups.empty()) fail(ErrorCode::InvalidArgument, "cohort setting takes no groups");
      o.scheme = WeightingScheme::whole_cohort();
    } else {
      fail(ErrorCode::InvalidArgument, "unknown setting '" + setting + "'");
    }
    if (j.contains("weights") && setting != "subtraction") {
      fail(ErrorCode::InvalidArgument, "explicit weights apply only to subtraction");
    }
    read_if(j, "lambda_grid", o.consensus.lambda_grid);
    read_if(j, "k_grid", o.consensus.k_grid);
    read_if(j, "top_k", o.consensus.top_k);
    if (j.contains("min_pass") && j.contains("min_pass_ratio")) {
      fail(ErrorCode::InvalidArgument, "give either min_pass or min_pass_ratio, not both");
    }
    read_if(j, "min_pass", o.consensus.min_pass_count);
    if (j.contains("min_pass_ratio")) {
      o.consensus.min_pass_count = min_pass_from_ratio(j.at("min_pass_ratio").get<double>(), o.consensus.grid_size());
    }
    read_if(j, "epsilon", o.grid.epsilon);
    read_if(j, "tol", o.grid.tol);
    read_if(j, "max_iter", o.grid.max_iter);
    read_if(j, "jobs", o.grid.jobs);
    return o;
  });
}

json select_options_to_json(const SelectOptions& o) {
  json j;
  switch (o.scheme.kind) {
    case WeightingScheme::Kind::Subtraction:
      j["setting"] = "subtraction";
      j["groups"] = {std::string(to_string(o.scheme.a)), std::string(to_string(o.scheme.b))};
      if (o.scheme.explicit_weights) {
        j["weights"] = {o.scheme.explicit_weights->first, o.scheme.explicit_weights->second};
      }
      break;
    case WeightingScheme::Kind::SingleGroup:
      j["setting"] = "group";
      j["groups"] = {std::string(to_string(o.scheme.a))};
      break;
    case WeightingScheme::Kind::WholeCohort:
      j["setting"] = "cohort";
      break;
  }
  j["lambda_grid"] = o.consensus.lambda_grid;
  j["k_grid"] = o.consensus.k_grid;
  j["top_k"] = o.consensus.top_k;
  j["min_pass"] = o.consensus.min_pass_count;
  j["epsilon"] = o.grid.epsilon;
  j["tol"] = o.grid.tol;
  j["max_iter"] = o.grid.max_iter;
  return j;
}

ClassifyOptions classify_options_from_json(const json& j) {
  reject_unknown_keys(j, {"seed", "train_fraction", "l2", "step", "max_iter", "include_diagonal", "repeats"},
                      "classify options");
  return guarded("classify options", [&] {
    ClassifyOptions o;
    read_if(j, "seed", o.seed);
    read_if(j, "train_fraction", o.train_fraction);
    read_if(j, "l2", o.train.l2);
    read_if(j, "step", o.train.step);
    read_if(j, "max_iter", o.train.max_iter);
    read_if(j, "include_diagonal", o.include_diagonal);
    read_if(j, "repeats", o.repeats);
    return o;
  });
}

json classify_options_to_json(const ClassifyOptions& o) {
  return {{"seed", o.seed},
          {"train_fraction", o.train_fraction},
          {"l2", o.train.l2},
          {"step", o.train.step},
          {"max_iter", o.train.max_iter},
          {"include_diagonal", o.include_diagonal},
          {"repeats", o.repeats}};
}

}  // namespace pivotal
