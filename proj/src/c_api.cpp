#include "pivotal/pivotal.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "pivotal/classify.hpp"
#include "pivotal/digest.hpp"
#include "pivotal/error.hpp"
#include "pivotal/pipeline.hpp"
#include "pivotal/serialize.hpp"
#include "pivotal/synth.hpp"

struct pv_cohort {
  pivotal::CohortDataset dataset;
};

struct pv_selection {
  pivotal::SelectionRun run;
};

struct pv_pivotal {
  pivotal::PivotalDocument doc;
};

struct pv_report {
  pivotal::ClassificationRun run;
  std::vector<std::string> node_space;
};

namespace {

thread_local std::string g_last_error;

pv_status status_of(pivotal::ErrorCode code) {
  using pivotal::ErrorCode;
  switch (code) {
    case ErrorCode::Parse: return PV_ERR_PARSE;
    case ErrorCode::DuplicateRecord: return PV_ERR_DUPLICATE_RECORD;
    case ErrorCode::IncompletePatient: return PV_ERR_INCOMPLETE_PATIENT;
    case ErrorCode::InvalidArgument: return PV_ERR_INVALID_ARGUMENT;
    case ErrorCode::EmptyGroup: return PV_ERR_EMPTY_GROUP;
    case ErrorCode::Domain: return PV_ERR_DOMAIN;
    case ErrorCode::Numerical: return PV_ERR_NUMERICAL;
    case ErrorCode::Io: return PV_ERR_IO;
  }
  return PV_ERR_INTERNAL;
}

pv_status fail_with(pv_status status, const char* message) {
  try {
    g_last_error = message;
  } catch (...) {
  }
  return status;
}

// Runs `body`, converting exceptions into status codes and the thread-local message.
template <typename F>
pv_status guard(F&& body) noexcept {
  try {
    body();
    return PV_OK;
  } catch (const pivotal::Error& e) {
    return fail_with(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail_with(PV_ERR_OUT_OF_MEMORY, "out of memory");
  } catch (const std::exception& e) {
    return fail_with(PV_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail_with(PV_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* name) {
  if (!p) pivotal::fail(pivotal::ErrorCode::InvalidArgument, std::string(name) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  require(out, "output pointer");
  *out = copy_string(s);
}

std::string read_file(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) pivotal::fail(pivotal::ErrorCode::Io, std::string("cannot open '") + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void copy_digest(const std::string& hex, char out[65]) {
  std::memcpy(out, hex.c_str(), 65);
}

const pivotal::RocCurve& pick_curve(const pivotal::EvalReport& report, const char* curve) {
  require(curve, "curve");
  if (std::strcmp(curve, "micro") == 0) return report.micro_roc;
  const auto g = pivotal::parse_group(curve);
  if (!g) pivotal::fail(pivotal::ErrorCode::InvalidArgument, std::string("unknown curve '") + curve + "'");
  return report.per_class[pivotal::group_index(*g)].roc;
}

}  // namespace

extern "C" {

PV_API const char* pv_version(void) { return "0.1.0"; }

PV_API const char* pv_status_name(pv_status status) {
  switch (status) {
    case PV_OK: return "ok";
    case PV_ERR_PARSE: return "parse error";
    case PV_ERR_DUPLICATE_RECORD: return "duplicate record";
    case PV_ERR_INCOMPLETE_PATIENT: return "incomplete patient";
    case PV_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PV_ERR_EMPTY_GROUP: return "empty group";
    case PV_ERR_DOMAIN: return "domain error";
    case PV_ERR_NUMERICAL: return "numerical failure";
    case PV_ERR_IO: return "i/o error";
    case PV_ERR_OUT_OF_MEMORY: return "out of memory";
    case PV_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

PV_API const char* pv_last_error(void) { return g_last_error.c_str(); }

PV_API void pv_string_free(char* s) { std::free(s); }

PV_API pv_status pv_sha256_hex(const void* data, size_t size, char out[65]) {
  return guard([&] {
    require(out, "out");
    if (size) require(data, "data");
    copy_digest(pivotal::sha256_hex(std::string_view(static_cast<const char*>(data), size)), out);
  });
}

PV_API pv_status pv_sha256_file(const char* path, char out[65]) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    copy_digest(pivotal::sha256_file(path), out);
  });
}

PV_API pv_status pv_synth_default_config(char** out_json) {
  return guard([&] { emit(out_json, pivotal::synth_config_to_json(pivotal::SynthConfig{}).dump(2)); });
}

PV_API pv_status pv_synth_resolve_config(const char* config_json, char** out_json) {
  return guard([&] {
    require(config_json, "config_json");
    const auto config = pivotal::synth_config_from_json(pivotal::parse_json(config_json, "synth config"));
    emit(out_json, pivotal::synth_config_to_json(config).dump(2));
  });
}

PV_API pv_status pv_synth_generate(const char* config_json, char** out_csv) {
  return guard([&] {
    pivotal::SynthConfig config;
    if (config_json) config = pivotal::synth_config_from_json(pivotal::parse_json(config_json, "synth config"));
    emit(out_csv, pivotal::write_volume_table(pivotal::generate_cohort(config)));
  });
}

PV_API pv_status pv_cohort_parse(const char* text, size_t size, pv_cohort** out) {
  return guard([&] {
    require(out, "out");
    require(text, "text");
    auto handle = std::make_unique<pv_cohort>();
    handle->dataset = pivotal::parse_volume_table(std::string_view(text ? text : "", size));
    *out = handle.release();
  });
}

PV_API pv_status pv_cohort_load(const char* path, pv_cohort** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<pv_cohort>();
    handle->dataset = pivotal::load_volume_table(path);
    *out = handle.release();
  });
}

PV_API void pv_cohort_free(pv_cohort* cohort) { delete cohort; }

PV_API pv_status pv_cohort_counts(const pv_cohort* cohort, size_t* patients, size_t* regions) {
  return guard([&] {
    require(cohort, "cohort");
    if (patients) *patients = cohort->dataset.patient_count();
    if (regions) *regions = cohort->dataset.region_count();
  });
}

PV_API pv_status pv_cohort_summary_json(const pv_cohort* cohort, char** out_json) {
  return guard([&] {
    require(cohort, "cohort");
    emit(out_json, pivotal::summary_to_json(pivotal::summarize_cohort(cohort->dataset)).dump(2));
  });
}

PV_API pv_status pv_cohort_to_csv(const pv_cohort* cohort, char** out_csv) {
  return guard([&] {
    require(cohort, "cohort");
    emit(out_csv, pivotal::write_volume_table(cohort->dataset));
  });
}

PV_API pv_status pv_cohort_graph_csv(const pv_cohort* cohort, const char* patient_id, char** out_csv) {
  return guard([&] {
    require(cohort, "cohort");
    require(patient_id, "patient_id");
    const auto& patients = cohort->dataset.patients;
    for (std::size_t i = 0; i < patients.size(); ++i) {
      if (patients[i].id == patient_id) {
        const auto graph = pivotal::build_differential_graph(pivotal::patient_ratios(cohort->dataset, i));
        emit(out_csv, pivotal::graph_to_csv(graph));
        return;
      }
    }
    pivotal::fail(pivotal::ErrorCode::InvalidArgument, std::string("unknown patient '") + patient_id + "'");
  });
}

PV_API pv_status pv_select(const pv_cohort* cohort, const char* options_json, pv_selection** out) {
  return guard([&] {
    require(cohort, "cohort");
    require(out, "out");
    pivotal::SelectOptions options;
    if (options_json) options = pivotal::select_options_from_json(pivotal::parse_json(options_json, "select options"));
    auto handle = std::make_unique<pv_selection>();
    handle->run = pivotal::run_selection(cohort->dataset, options);
    *out = handle.release();
  });
}

PV_API void pv_selection_free(pv_selection* selection) { delete selection; }

PV_API pv_status pv_selection_results_json(const pv_selection* selection, char** out_json) {
  return guard([&] {
    require(selection, "selection");
    emit(out_json, pivotal::selection_to_json(selection->run).dump(2));
  });
}

PV_API pv_status pv_selection_tag(const pv_selection* selection, char** out_tag) {
  return guard([&] {
    require(selection, "selection");
    emit(out_tag, selection->run.tag);
  });
}

PV_API pv_status pv_selection_pivotal(const pv_selection* selection, pv_pivotal** out) {
  return guard([&] {
    require(selection, "selection");
    require(out, "out");
    auto handle = std::make_unique<pv_pivotal>();
    handle->doc.set = selection->run.pivotal;
    handle->doc.node_space = selection->run.node_space;
    *out = handle.release();
  });
}

PV_API pv_status pv_pivotal_parse(const char* json, pv_pivotal** out) {
  return guard([&] {
    require(json, "json");
    require(out, "out");
    auto handle = std::make_unique<pv_pivotal>();
    handle->doc = pivotal::pivotal_from_json(pivotal::parse_json(json, "pivotal node set"));
    *out = handle.release();
  });
}

PV_API pv_status pv_pivotal_load(const char* path, pv_pivotal** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<pv_pivotal>();
    handle->doc = pivotal::pivotal_from_json(pivotal::parse_json(read_file(path), path));
    *out = handle.release();
  });
}

PV_API void pv_pivotal_free(pv_pivotal* set) { delete set; }

PV_API pv_status pv_pivotal_to_json(const pv_pivotal* set, char** out_json) {
  return guard([&] {
    require(set, "set");
    emit(out_json, pivotal::pivotal_to_json(set->doc.set, set->doc.node_space).dump(2));
  });
}

PV_API pv_status pv_pivotal_size(const pv_pivotal* set, size_t* out) {
  return guard([&] {
    require(set, "set");
    require(out, "out");
    *out = set->doc.set.indices.size();
  });
}

PV_API pv_status pv_pivotal_union(const pv_pivotal* const* sets, size_t count, pv_pivotal** out) {
  return guard([&] {
    require(out, "out");
    if (count == 0) pivotal::fail(pivotal::ErrorCode::InvalidArgument, "union needs at least one set");
    require(sets, "sets");
    std::vector<pivotal::PivotalNodeSet> parts;
    for (size_t i = 0; i < count; ++i) {
      require(sets[i], "set");
      if (sets[i]->doc.node_space != sets[0]->doc.node_space) {
        pivotal::fail(pivotal::ErrorCode::InvalidArgument, "pivotal sets have different node spaces");
      }
      parts.push_back(sets[i]->doc.set);
    }
    auto handle = std::make_unique<pv_pivotal>();
    handle->doc.set = pivotal::union_pivotal(parts);
    handle->doc.node_space = sets[0]->doc.node_space;
    *out = handle.release();
  });
}

PV_API pv_status pv_classify(const pv_cohort* cohort, const pv_pivotal* set, const char* options_json,
                             pv_report** out) {
  return guard([&] {
    require(cohort, "cohort");
    require(set, "set");
    require(out, "out");
    if (set->doc.node_space != cohort->dataset.regions) {
      pivotal::fail(pivotal::ErrorCode::InvalidArgument, "pivotal set node space does not match the cohort's regions");
    }
    pivotal::ClassifyOptions options;
    if (options_json) {
      options = pivotal::classify_options_from_json(pivotal::parse_json(options_json, "classify options"));
    }
    auto handle = std::make_unique<pv_report>();
    handle->run = pivotal::run_classification(cohort->dataset, set->doc.set, options);
    handle->node_space = cohort->dataset.regions;
    *out = handle.release();
  });
}

PV_API void pv_report_free(pv_report* report) { delete report; }

PV_API pv_status pv_report_json(const pv_report* report, char** out_json) {
  return guard([&] {
    require(report, "report");
    emit(out_json, pivotal::report_to_json(report->run, report->node_space).dump(2));
  });
}

PV_API pv_status pv_report_roc_csv(const pv_report* report, const char* curve, char** out_csv) {
  return guard([&] {
    require(report, "report");
    emit(out_csv, pivotal::roc_to_csv(pick_curve(report->run.reports.front(), curve)));
  });
}

PV_API pv_status pv_report_macro_auc(const pv_report* report, double* out) {
  return guard([&] {
    require(report, "report");
    require(out, "out");
    *out = report->run.reports.front().macro_auc;
  });
}

PV_API pv_status pv_report_auc(const pv_report* report, const char* curve, double* out) {
  return guard([&] {
    require(report, "report");
    require(out, "out");
    require(curve, "curve");
    const auto& r = report->run.reports.front();
    if (std::strcmp(curve, "micro") == 0) {
      *out = r.micro_auc;
      return;
    }
    const auto g = pivotal::parse_group(curve);
    if (!g) pivotal::fail(pivotal::ErrorCode::InvalidArgument, std::string("unknown curve '") + curve + "'");
    *out = r.per_class[pivotal::group_index(*g)].auc;
  });
}

PV_API pv_status pv_viz(const pv_cohort* cohort, const pv_pivotal* set, const char* comparison, double cutoff,
                        const char* aggregation, char** out_dot, char** out_edges_csv) {
  return guard([&] {
    require(cohort, "cohort");
    require(set, "set");
    require(comparison, "comparison");
    if (set->doc.node_space != cohort->dataset.regions) {
      pivotal::fail(pivotal::ErrorCode::InvalidArgument, "pivotal set node space does not match the cohort's regions");
    }
    auto agg = pivotal::Aggregation::Mean;
    if (aggregation && std::strcmp(aggregation, "median") == 0) {
      agg = pivotal::Aggregation::Median;
    } else if (aggregation && std::strcmp(aggregation, "mean") != 0) {
      pivotal::fail(pivotal::ErrorCode::InvalidArgument, std::string("unknown aggregation '") + aggregation + "'");
    }
    const auto viz = pivotal::run_viz(cohort->dataset, set->doc.set, comparison, cutoff, agg);
    require(out_dot, "out_dot");
    char* dot = copy_string(viz.dot);
    if (out_edges_csv) {
      try {
        *out_edges_csv = copy_string(viz.edges_csv);
      } catch (...) {
        std::free(dot);
        throw;
      }
    }
    *out_dot = dot;
  });
}

PV_API pv_status pv_ratio_change(double vol_t0, double vol_t1, double* out) {
  return guard([&] {
    require(out, "out");
    *out = pivotal::ratio_change(vol_t0, vol_t1);
  });
}

PV_API pv_status pv_mfs_solve(const double* m, size_t d, double lambda, size_t k, double epsilon, double tol,
                              int max_iter, double* out_scores, size_t* out_ranking, int* out_converged,
                              int* out_iterations) {
  return guard([&] {
    require(m, "m");
    require(out_scores, "out_scores");
    require(out_ranking, "out_ranking");
    if (d == 0) pivotal::fail(pivotal::ErrorCode::InvalidArgument, "d must be positive");
    const auto n = static_cast<Eigen::Index>(d);
    const Eigen::MatrixXd matrix =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(m, n, n);
    pivotal::MfsConfig config{lambda, k, epsilon, tol, max_iter};
    const auto sol = pivotal::mfs_solve(matrix, config);
    for (size_t i = 0; i < d; ++i) {
      out_scores[i] = sol.result.scores[static_cast<Eigen::Index>(i)];
      out_ranking[i] = sol.result.ranking[i];
    }
    if (out_converged) *out_converged = sol.result.converged ? 1 : 0;
    if (out_iterations) *out_iterations = sol.result.iterations_used;
  });
}

PV_API pv_status pv_auc(const double* scores, const int* labels, size_t n, double* out) {
  return guard([&] {
    require(out, "out");
    if (n) {
      require(scores, "scores");
      require(labels, "labels");
    }
    *out = pivotal::auc(pivotal::roc_curve(std::span<const double>(scores, n), std::span<const int>(labels, n)));
  });
}

}  // extern "C"
