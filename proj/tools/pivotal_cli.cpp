// pivotal - command line front end for the pivotal-node pipeline.
//
// Subcommands mirror the pipeline stages: synth | summary | graph | select |
// union | classify | viz, plus replay to re-run a recorded manifest. Every
// command writes a run manifest listing its inputs and outputs with SHA-256
// digests.
//
// Exit codes: 0 success, 2 usage/config/input error, 3 numerical failure or
// a replay whose outputs differ from the manifest.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pivotal/pivotal.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

// Carries an exit code out of a subcommand.
struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& message) { throw CliError{kExitUsage, message}; }

void check(pv_status status, const std::string& context) {
  if (status == PV_OK) return;
  const int code = status == PV_ERR_NUMERICAL ? kExitNumerical : kExitUsage;
  throw CliError{code, context + ": " + pv_last_error()};
}

struct CString {
  char* ptr = nullptr;
  ~CString() { pv_string_free(ptr); }
  std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& other) noexcept : ptr(std::exchange(other.ptr, nullptr)) {}
  ~Handle() { Free(ptr); }
};

using Cohort = Handle<pv_cohort, pv_cohort_free>;
using Selection = Handle<pv_selection, pv_selection_free>;
using Pivotal = Handle<pv_pivotal, pv_pivotal_free>;
using Report = Handle<pv_report, pv_report_free>;

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_digest(const std::string& path) {
  char hex[65];
  check(pv_sha256_file(path.c_str(), hex), "digest of " + path);
  return hex;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) usage_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    usage_error(path + ": " + e.what());
  }
}

// Tracks one invocation's inputs and outputs and writes its manifest.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv)
      : command_(std::move(command)), argv_(std::move(argv)), started_(utc_now()) {}

  void input(const std::string& path) { inputs_.push_back({{"path", path}, {"sha256", file_digest(path)}}); }

  void write_output(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) usage_error("cannot write '" + path.string() + "'");
    out << content;
    out.close();
    if (!out) usage_error("error writing '" + path.string() + "'");
    outputs_.push_back({{"path", path.string()}, {"sha256", file_digest(path.string())}});
  }

  json& config() { return config_; }

  void save(const fs::path& path) {
    const json doc = {{"schema_version", 1},
                      {"kind", "run_manifest"},
                      {"tool", "pivotal"},
                      {"tool_version", pv_version()},
                      {"command", command_},
                      {"argv", argv_},
                      {"cwd", fs::current_path().string()},
                      {"inputs", inputs_},
                      {"config", config_},
                      {"started_at", started_},
                      {"finished_at", utc_now()},
                      {"outputs", outputs_}};
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) usage_error("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::string started_;
  json inputs_ = json::array();
  json outputs_ = json::array();
  json config_ = json::object();
};

Cohort load_cohort(const std::string& path) {
  Cohort c;
  check(pv_cohort_load(path.c_str(), &c.ptr), "loading cohort " + path);
  return c;
}

Pivotal load_pivotal(const std::string& path) {
  Pivotal p;
  check(pv_pivotal_load(path.c_str(), &p.ptr), "loading pivotal set " + path);
  return p;
}

// ---- subcommands ---------------------------------------------------------

struct SynthArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "cohort.csv";
};

void cmd_synth(const SynthArgs& a, Manifest& m) {
  json cfg = json::object();
  if (!a.config.empty()) {
    m.input(a.config);
    cfg = parse_json_file(a.config);
    if (!cfg.is_object()) usage_error(a.config + ": expected a JSON object");
  }
  if (a.seed) cfg["seed"] = *a.seed;
  CString resolved;
  check(pv_synth_resolve_config(cfg.dump().c_str(), &resolved.ptr), "synth config");
  m.config() = json::parse(resolved.str());
  CString csv;
  check(pv_synth_generate(resolved.ptr, &csv.ptr), "synth");
  m.write_output(a.out, csv.str());
}

struct SummaryArgs {
  std::string cohort;
  std::string out;
};

void cmd_summary(const SummaryArgs& a, Manifest& m) {
  m.input(a.cohort);
  auto cohort = load_cohort(a.cohort);
  CString summary;
  check(pv_cohort_summary_json(cohort.ptr, &summary.ptr), "summary");
  if (a.out.empty()) {
    std::cout << summary.str() << '\n';
  } else {
    m.write_output(a.out, summary.str() + "\n");
  }
}

struct GraphArgs {
  std::string cohort;
  std::string patient;
  std::string out;
};

void cmd_graph(const GraphArgs& a, Manifest& m) {
  m.input(a.cohort);
  auto cohort = load_cohort(a.cohort);
  CString csv;
  check(pv_cohort_graph_csv(cohort.ptr, a.patient.c_str(), &csv.ptr), "graph");
  m.write_output(a.out, csv.str());
}

struct SelectArgs {
  std::string cohort;
  std::vector<std::string> setting{"cohort"};
  std::vector<double> lambda_grid;
  std::vector<std::size_t> k_grid;
  std::optional<std::size_t> top_k;
  std::optional<std::size_t> min_pass;
  std::optional<double> min_pass_ratio;
  std::optional<double> epsilon;
  std::optional<double> tol;
  std::optional<int> max_iter;
  unsigned jobs = 0;
  std::string out_dir = ".";
};

json select_options(const SelectArgs& a) {
  json o = json::object();
  const auto& s = a.setting;
  if (s[0] == "subtraction") {
    if (s.size() != 3) usage_error("--setting subtraction needs two groups, e.g. --setting subtraction AD MCI");
    o["setting"] = "subtraction";
    o["groups"] = {s[1], s[2]};
  } else if (s[0] == "group") {
    if (s.size() != 2) usage_error("--setting group needs one group, e.g. --setting group AD");
    o["setting"] = "group";
    o["groups"] = {s[1]};
  } else if (s[0] == "cohort") {
    if (s.size() != 1) usage_error("--setting cohort takes no groups");
    o["setting"] = "cohort";
  } else {
    usage_error("unknown setting '" + s[0] + "' (expected subtraction, group or cohort)");
  }
  if (!a.lambda_grid.empty()) o["lambda_grid"] = a.lambda_grid;
  if (!a.k_grid.empty()) o["k_grid"] = a.k_grid;
  if (a.top_k) o["top_k"] = *a.top_k;
  if (a.min_pass) o["min_pass"] = *a.min_pass;
  if (a.min_pass_ratio) o["min_pass_ratio"] = *a.min_pass_ratio;
  if (a.epsilon) o["epsilon"] = *a.epsilon;
  if (a.tol) o["tol"] = *a.tol;
  if (a.max_iter) o["max_iter"] = *a.max_iter;
  o["jobs"] = a.jobs;
  return o;
}

fs::path cmd_select(const SelectArgs& a, Manifest& m) {
  m.input(a.cohort);
  auto cohort = load_cohort(a.cohort);
  const json options = select_options(a);
  Selection sel;
  check(pv_select(cohort.ptr, options.dump().c_str(), &sel.ptr), "select");

  CString tag, results;
  check(pv_selection_tag(sel.ptr, &tag.ptr), "select");
  check(pv_selection_results_json(sel.ptr, &results.ptr), "select");
  Pivotal piv;
  check(pv_selection_pivotal(sel.ptr, &piv.ptr), "select");
  CString piv_json;
  check(pv_pivotal_to_json(piv.ptr, &piv_json.ptr), "select");

  const json results_doc = json::parse(results.str());
  m.config() = results_doc.at("options");
  const fs::path dir(a.out_dir);
  m.write_output(dir / ("selection_" + tag.str() + ".json"), results.str() + "\n");
  m.write_output(dir / ("pivotal_" + tag.str() + ".json"), piv_json.str() + "\n");

  std::size_t n = 0;
  check(pv_pivotal_size(piv.ptr, &n), "select");
  std::cerr << tag.str() << ": " << n << " pivotal node(s)\n";
  return dir / ("manifest_select_" + tag.str() + ".json");
}

struct UnionArgs {
  std::vector<std::string> inputs;
  std::string name = "union";
  std::string out_dir = ".";
};

void cmd_union(const UnionArgs& a, Manifest& m) {
  std::vector<Pivotal> sets;
  std::vector<const pv_pivotal*> raw;
  for (const auto& path : a.inputs) {
    m.input(path);
    sets.push_back(load_pivotal(path));
    raw.push_back(sets.back().ptr);
  }
  Pivotal merged;
  check(pv_pivotal_union(raw.data(), raw.size(), &merged.ptr), "union");
  CString out;
  check(pv_pivotal_to_json(merged.ptr, &out.ptr), "union");
  m.config() = {{"name", a.name}};
  m.write_output(fs::path(a.out_dir) / ("pivotal_" + a.name + ".json"), out.str() + "\n");
}

struct ClassifyArgs {
  std::string cohort;
  std::string pivotal;
  std::uint64_t seed = 0;
  double train_frac = 0.8;
  double l2 = 1.0;
  double step = 0.1;
  int iters = 2000;
  bool exclude_diagonal = false;
  int repeats = 1;
  std::string out_dir = ".";
};

void cmd_classify(const ClassifyArgs& a, Manifest& m) {
  m.input(a.cohort);
  m.input(a.pivotal);
  auto cohort = load_cohort(a.cohort);
  auto piv = load_pivotal(a.pivotal);
  const json options = {{"seed", a.seed},     {"train_fraction", a.train_frac},
                        {"l2", a.l2},         {"step", a.step},
                        {"max_iter", a.iters}, {"include_diagonal", !a.exclude_diagonal},
                        {"repeats", a.repeats}};
  m.config() = options;
  Report report;
  check(pv_classify(cohort.ptr, piv.ptr, options.dump().c_str(), &report.ptr), "classify");

  CString doc;
  check(pv_report_json(report.ptr, &doc.ptr), "classify");
  const fs::path dir(a.out_dir);
  m.write_output(dir / "report.json", doc.str() + "\n");
  for (const char* curve : {"AD", "CN", "MCI", "micro"}) {
    CString csv;
    check(pv_report_roc_csv(report.ptr, curve, &csv.ptr), "classify");
    m.write_output(dir / (std::string("roc_") + curve + ".csv"), csv.str());
  }
  double macro = 0.0;
  check(pv_report_macro_auc(report.ptr, &macro), "classify");
  std::cerr << "macro AUC " << macro << '\n';
}

struct VizArgs {
  std::string cohort;
  std::string pivotal;
  std::vector<std::string> groups{"AD-MCI", "AD-CN", "MCI-CN"};
  double cutoff = 0.0;
  std::string aggregation = "mean";
  std::string out_dir = ".";
};

void cmd_viz(const VizArgs& a, Manifest& m) {
  m.input(a.cohort);
  m.input(a.pivotal);
  auto cohort = load_cohort(a.cohort);
  auto piv = load_pivotal(a.pivotal);
  m.config() = {{"groups", a.groups}, {"cutoff", a.cutoff}, {"aggregation", a.aggregation}};
  const fs::path dir(a.out_dir);
  for (const auto& comparison : a.groups) {
    CString dot, csv;
    check(pv_viz(cohort.ptr, piv.ptr, comparison.c_str(), a.cutoff, a.aggregation.c_str(), &dot.ptr, &csv.ptr),
          "viz " + comparison);
    m.write_output(dir / ("viz_" + comparison + ".dot"), dot.str());
    m.write_output(dir / ("edges_" + comparison + ".csv"), csv.str());
  }
}

// ---- dispatch ------------------------------------------------------------

int run(const std::vector<std::string>& args, bool allow_replay);

struct ReplayArgs {
  std::string manifest;
  bool no_verify = false;
};

int cmd_replay(const ReplayArgs& a) {
  const json doc = parse_json_file(a.manifest);
  if (doc.value("kind", "") != "run_manifest") usage_error(a.manifest + ": not a run manifest");
  const auto argv = doc.at("argv").get<std::vector<std::string>>();
  const auto previous = doc.at("outputs");
  const fs::path cwd = doc.at("cwd").get<std::string>();

  const auto saved = fs::current_path();
  fs::current_path(cwd);
  const int code = run(argv, false);
  if (code != kExitOk) {
    fs::current_path(saved);
    return code;
  }
  int mismatches = 0;
  if (!a.no_verify) {
    for (const auto& out : previous) {
      const auto path = out.at("path").get<std::string>();
      const auto want = out.at("sha256").get<std::string>();
      const auto got = fs::exists(path) ? file_digest(path) : std::string("missing");
      if (got != want) {
        std::cerr << "replay: " << path << " differs (" << got << " != " << want << ")\n";
        ++mismatches;
      }
    }
    if (!mismatches) std::cerr << "replay: " << previous.size() << " output(s) reproduced\n";
  }
  fs::current_path(saved);
  return mismatches ? kExitNumerical : kExitOk;
}

int run(const std::vector<std::string>& args, bool allow_replay) {
  CLI::App app{"Pivotal brain-network node selection from longitudinal region volumes", "pivotal"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pv_version()));

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a seeded synthetic cohort CSV");
  s->add_option("--config", synth.config, "JSON generator config (defaults when omitted)");
  s->add_option("--seed", synth.seed, "Override the config seed");
  s->add_option("--out", synth.out, "Output cohort CSV")->capture_default_str();

  SummaryArgs summary;
  auto* su = app.add_subcommand("summary", "Print group counts, region count and valid-node count");
  su->add_option("--cohort", summary.cohort, "Cohort CSV")->required();
  su->add_option("--out", summary.out, "Write the summary JSON here instead of stdout");

  GraphArgs graph;
  auto* gr = app.add_subcommand("graph", "Export one patient's differential graph as CSV");
  gr->add_option("--cohort", graph.cohort, "Cohort CSV")->required();
  gr->add_option("--patient", graph.patient, "Patient id")->required();
  gr->add_option("--out", graph.out, "Output CSV")->required();

  SelectArgs select;
  auto* se = app.add_subcommand("select", "Run the (lambda, k) grid and extract consensus pivotal nodes");
  se->add_option("--cohort", select.cohort, "Cohort CSV")->required();
  se->add_option("--setting", select.setting, "subtraction A B | group G | cohort")->expected(1, 3);
  se->add_option("--lambda-grid", select.lambda_grid, "Comma-separated lambda values")->delimiter(',');
  se->add_option("--k-grid", select.k_grid, "Comma-separated projection dimensions")->delimiter(',');
  se->add_option("--top-k", select.top_k, "Nodes counted per grid point (default 30)");
  auto* mp = se->add_option("--min-pass", select.min_pass, "Minimum pass count (default 41)");
  se->add_option("--min-pass-ratio", select.min_pass_ratio, "Minimum pass fraction of the grid")->excludes(mp);
  se->add_option("--epsilon", select.epsilon, "Reweighting perturbation (default 1e-10)");
  se->add_option("--tol", select.tol, "Relative score-change tolerance (default 1e-6)");
  se->add_option("--max-iter", select.max_iter, "Iteration cap per solve (default 100)");
  se->add_option("--jobs", select.jobs, "Parallel grid points (0 = all cores)");
  se->add_option("--out-dir", select.out_dir, "Output directory")->capture_default_str();

  UnionArgs uni;
  auto* un = app.add_subcommand("union", "Union of pivotal node sets");
  un->add_option("inputs", uni.inputs, "Pivotal JSON files")->required();
  un->add_option("--name", uni.name, "Output name (pivotal_<name>.json)")->capture_default_str();
  un->add_option("--out-dir", uni.out_dir, "Output directory")->capture_default_str();

  ClassifyArgs cls;
  auto* cl = app.add_subcommand("classify", "Train the baseline classifier on pivotal subgraph features");
  cl->add_option("--cohort", cls.cohort, "Cohort CSV")->required();
  cl->add_option("--pivotal", cls.pivotal, "Pivotal JSON")->required();
  cl->add_option("--seed", cls.seed, "Split seed")->capture_default_str();
  cl->add_option("--train-frac", cls.train_frac, "Training fraction per class")->capture_default_str();
  cl->add_option("--l2", cls.l2, "L2 strength")->capture_default_str();
  cl->add_option("--step", cls.step, "Initial gradient step")->capture_default_str();
  cl->add_option("--iters", cls.iters, "Gradient descent iteration cap")->capture_default_str();
  cl->add_flag("--exclude-diagonal", cls.exclude_diagonal, "Drop the r_j^2 features");
  cl->add_option("--repeats", cls.repeats, "Repeated seeded splits")->capture_default_str();
  cl->add_option("--out-dir", cls.out_dir, "Output directory")->capture_default_str();

  VizArgs viz;
  auto* vz = app.add_subcommand("viz", "Export pivotal subgraphs as DOT and edge CSV");
  vz->add_option("--cohort", viz.cohort, "Cohort CSV")->required();
  vz->add_option("--pivotal", viz.pivotal, "Pivotal JSON")->required();
  vz->add_option("--groups", viz.groups, "Groups or comparisons, e.g. AD,AD-MCI")->delimiter(',');
  vz->add_option("--cutoff", viz.cutoff, "Symmetric edge cutoff |w| >= cutoff")->required();
  vz->add_option("--aggregation", viz.aggregation, "mean | median")->capture_default_str();
  vz->add_option("--out-dir", viz.out_dir, "Output directory")->capture_default_str();

  ReplayArgs replay;
  auto* rp = app.add_subcommand("replay", "Re-run a manifest and check its output digests");
  rp->add_option("manifest", replay.manifest, "Manifest JSON")->required();
  rp->add_flag("--no-verify", replay.no_verify, "Skip the digest comparison");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (rp->parsed()) {
      if (!allow_replay) usage_error("a manifest cannot replay another replay");
      return cmd_replay(replay);
    }
    const std::string command = app.get_subcommands().front()->get_name();
    Manifest manifest(command, args);
    fs::path manifest_path;
    if (s->parsed()) {
      cmd_synth(synth, manifest);
      manifest_path = fs::path(synth.out).parent_path() / "manifest_synth.json";
    } else if (su->parsed()) {
      cmd_summary(summary, manifest);
      if (summary.out.empty()) return kExitOk;
      manifest_path = fs::path(summary.out).parent_path() / "manifest_summary.json";
    } else if (gr->parsed()) {
      cmd_graph(graph, manifest);
      manifest_path = fs::path(graph.out).parent_path() / "manifest_graph.json";
    } else if (se->parsed()) {
      manifest_path = cmd_select(select, manifest);
    } else if (un->parsed()) {
      cmd_union(uni, manifest);
      manifest_path = fs::path(uni.out_dir) / ("manifest_union_" + uni.name + ".json");
    } else if (cl->parsed()) {
      cmd_classify(cls, manifest);
      manifest_path = fs::path(cls.out_dir) / "manifest_classify.json";
    } else if (vz->parsed()) {
      cmd_viz(viz, manifest);
      manifest_path = fs::path(viz.out_dir) / "manifest_viz.json";
    }
    manifest.save(manifest_path);
  } catch (const CliError& e) {
    std::cerr << "pivotal: " << e.message << '\n';
    return e.code;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "pivotal: " << e.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "pivotal: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, true);
}
