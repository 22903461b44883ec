/*
 * pivotal.h - C interface to the pivotal-node pipeline.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns a pv_status; on
 * failure pv_last_error() describes the problem for the calling thread.
 * Strings returned through char** are heap allocated; release them with
 * pv_string_free.
 */
#ifndef PIVOTAL_PIVOTAL_H
#define PIVOTAL_PIVOTAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(PIVOTAL_BUILDING_LIBRARY)
#define PV_API __attribute__((visibility("default")))
#else
#define PV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pv_status {
  PV_OK = 0,
  PV_ERR_PARSE = 1,
  PV_ERR_DUPLICATE_RECORD = 2,
  PV_ERR_INCOMPLETE_PATIENT = 3,
  PV_ERR_INVALID_ARGUMENT = 4,
  PV_ERR_EMPTY_GROUP = 5,
  PV_ERR_DOMAIN = 6,
  PV_ERR_NUMERICAL = 7,
  PV_ERR_IO = 8,
  PV_ERR_OUT_OF_MEMORY = 9,
  PV_ERR_INTERNAL = 10
} pv_status;

typedef struct pv_cohort pv_cohort;
typedef struct pv_selection pv_selection;
typedef struct pv_pivotal pv_pivotal;
typedef struct pv_report pv_report;

PV_API const char* pv_version(void);
PV_API const char* pv_status_name(pv_status status);
/* Message of the last failed call on this thread, or "" if none. */
PV_API const char* pv_last_error(void);
PV_API void pv_string_free(char* s);

/* SHA-256 as 64 lowercase hex digits plus NUL. */
PV_API pv_status pv_sha256_hex(const void* data, size_t size, char out[65]);
PV_API pv_status pv_sha256_file(const char* path, char out[65]);

/* ---- synthetic cohorts ------------------------------------------------ */

PV_API pv_status pv_synth_default_config(char** out_json);
/* Fills every unspecified key of config_json with its default. */
PV_API pv_status pv_synth_resolve_config(const char* config_json, char** out_json);
/* config_json may be NULL for the defaults. Output is the cohort CSV. */
PV_API pv_status pv_synth_generate(const char* config_json, char** out_csv);

/* ---- cohorts ---------------------------------------------------------- */

PV_API pv_status pv_cohort_parse(const char* text, size_t size, pv_cohort** out);
PV_API pv_status pv_cohort_load(const char* path, pv_cohort** out);
PV_API void pv_cohort_free(pv_cohort* cohort);
PV_API pv_status pv_cohort_counts(const pv_cohort* cohort, size_t* patients, size_t* regions);
PV_API pv_status pv_cohort_summary_json(const pv_cohort* cohort, char** out_json);
PV_API pv_status pv_cohort_to_csv(const pv_cohort* cohort, char** out_csv);
/* One patient's differential graph over all regions, d rows of d values. */
PV_API pv_status pv_cohort_graph_csv(const pv_cohort* cohort, const char* patient_id, char** out_csv);

/* ---- pivotal node selection ------------------------------------------ */

/*
 * options_json keys (all optional): setting ("subtraction" | "group" |
 * "cohort"), groups, weights, lambda_grid, k_grid, top_k, min_pass,
 * min_pass_ratio, epsilon, tol, max_iter, jobs.
 */
PV_API pv_status pv_select(const pv_cohort* cohort, const char* options_json, pv_selection** out);
PV_API void pv_selection_free(pv_selection* selection);
PV_API pv_status pv_selection_results_json(const pv_selection* selection, char** out_json);
/* Short setting tag such as "ad-mci". */
PV_API pv_status pv_selection_tag(const pv_selection* selection, char** out_tag);
PV_API pv_status pv_selection_pivotal(const pv_selection* selection, pv_pivotal** out);

/* ---- pivotal node sets ------------------------------------------------ */

PV_API pv_status pv_pivotal_parse(const char* json, pv_pivotal** out);
PV_API pv_status pv_pivotal_load(const char* path, pv_pivotal** out);
PV_API void pv_pivotal_free(pv_pivotal* set);
PV_API pv_status pv_pivotal_to_json(const pv_pivotal* set, char** out_json);
PV_API pv_status pv_pivotal_size(const pv_pivotal* set, size_t* out);
/* Fails with PV_ERR_INVALID_ARGUMENT when node spaces differ. */
PV_API pv_status pv_pivotal_union(const pv_pivotal* const* sets, size_t count, pv_pivotal** out);

/* ---- classification --------------------------------------------------- */

/*
 * options_json keys (all optional): seed, train_fraction, l2, step,
 * max_iter, include_diagonal, repeats.
 */
PV_API pv_status pv_classify(const pv_cohort* cohort, const pv_pivotal* set, const char* options_json,
                             pv_report** out);
PV_API void pv_report_free(pv_report* report);
PV_API pv_status pv_report_json(const pv_report* report, char** out_json);
/* curve: "AD", "CN", "MCI" or "micro". CSV columns threshold,fpr,tpr. */
PV_API pv_status pv_report_roc_csv(const pv_report* report, const char* curve, char** out_csv);
PV_API pv_status pv_report_macro_auc(const pv_report* report, double* out);
/* AUC of one class ("AD", "CN", "MCI") or "micro". */
PV_API pv_status pv_report_auc(const pv_report* report, const char* curve, double* out);

/* ---- visualization ---------------------------------------------------- */

/*
 * comparison: a group ("AD") or a difference of group means ("AD-MCI").
 * aggregation: "mean" or "median" (NULL means "mean").
 */
PV_API pv_status pv_viz(const pv_cohort* cohort, const pv_pivotal* set, const char* comparison, double cutoff,
                        const char* aggregation, char** out_dot, char** out_edges_csv);

/* ---- numerical building blocks --------------------------------------- */

PV_API pv_status pv_ratio_change(double vol_t0, double vol_t1, double* out);
/*
 * m is a row-major d x d symmetric matrix. out_scores has d entries,
 * out_ranking d entries (descending score, ties by index). out_converged
 * and out_iterations may be NULL.
 */
PV_API pv_status pv_mfs_solve(const double* m, size_t d, double lambda, size_t k, double epsilon, double tol,
                              int max_iter, double* out_scores, size_t* out_ranking, int* out_converged,
                              int* out_iterations);
/* labels are 1 (positive) or 0. */
PV_API pv_status pv_auc(const double* scores, const int* labels, size_t n, double* out);

#ifdef __cplusplus
}
#endif

#endif /* PIVOTAL_PIVOTAL_H */
