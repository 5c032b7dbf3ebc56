/*
 * ndtx C API.
 *
 * Opaque handles own their C++ objects; release each with its *_free function.
 * Every call returning ndtx_status stores a message retrievable with
 * ndtx_last_error() (per thread) when it fails. Strings returned through char**
 * are heap-allocated and must be released with ndtx_string_free().
 */
#ifndef NDTX_H
#define NDTX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(NDTX_BUILDING_LIBRARY)
#    define NDTX_API __declspec(dllexport)
#  else
#    define NDTX_API __declspec(dllimport)
#  endif
#else
#  define NDTX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes. */
typedef enum ndtx_status {
    NDTX_OK = 0,
    NDTX_ERR_INTERNAL = 1,
    NDTX_ERR_CONFIG = 2,
    NDTX_ERR_DATA = 3,
    NDTX_ERR_NUMERIC = 4
} ndtx_status;

typedef enum ndtx_categoricals {
    NDTX_CATEGORICALS_DROP = 0,
    NDTX_CATEGORICALS_ONEHOT = 1
} ndtx_categoricals;

typedef struct ndtx_dataset ndtx_dataset;
typedef struct ndtx_tree ndtx_tree;
typedef struct ndtx_model ndtx_model;
typedef struct ndtx_result ndtx_result;

NDTX_API const char* ndtx_version(void);
NDTX_API const char* ndtx_last_error(void);
NDTX_API const char* ndtx_status_name(ndtx_status status);
NDTX_API void ndtx_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* Target column by name, or by zero-based index when target_name is NULL. */
NDTX_API ndtx_status ndtx_dataset_load_csv(const char* path, const char* target_name, size_t target_index,
                                           ndtx_categoricals policy, ndtx_dataset** out);
NDTX_API ndtx_status ndtx_dataset_from_arrays(const double* features, size_t n_rows, size_t n_features,
                                              const int* labels, int class_count, ndtx_dataset** out);
NDTX_API ndtx_status ndtx_dataset_gaussian_pair(size_t n, size_t d, double separation, uint64_t seed,
                                                ndtx_dataset** out);
NDTX_API ndtx_status ndtx_dataset_threshold_rules(size_t n, size_t d, double label_noise, size_t levels, uint64_t seed,
                                                  ndtx_dataset** out);
NDTX_API ndtx_status ndtx_dataset_write_csv(const ndtx_dataset* d, const char* path);
NDTX_API size_t ndtx_dataset_rows(const ndtx_dataset* d);
NDTX_API size_t ndtx_dataset_features(const ndtx_dataset* d);
NDTX_API int ndtx_dataset_classes(const ndtx_dataset* d);
NDTX_API void ndtx_dataset_free(ndtx_dataset* d);

/* ---- trees --------------------------------------------------------------- */

/* Stratified k-fold CV over depths 1..max_depth. */
NDTX_API ndtx_status ndtx_select_depth(const ndtx_dataset* d, int max_depth, int folds, uint64_t seed,
                                       int* depth);
NDTX_API ndtx_status ndtx_tree_fit(const ndtx_dataset* d, int max_depth, int min_leaf, ndtx_tree** out);
NDTX_API ndtx_status ndtx_tree_from_json(const char* json, ndtx_tree** out);
NDTX_API ndtx_status ndtx_tree_to_json(const ndtx_tree* t, char** json);
NDTX_API ndtx_status ndtx_tree_predict(const ndtx_tree* t, const double* x, size_t n_features, int* label,
                                       int* leaf);
NDTX_API size_t ndtx_tree_leaves(const ndtx_tree* t);
NDTX_API int ndtx_tree_depth(const ndtx_tree* t);
NDTX_API void ndtx_tree_free(ndtx_tree* t);

/* ---- tree-initialized networks ----------------------------------------- */

NDTX_API ndtx_status ndtx_gamma2_of(double gamma1, double* gamma2);
/* gamma2 derived from gamma1 with ndtx_gamma2_of. */
NDTX_API ndtx_status ndtx_model_compile(const ndtx_tree* t, double gamma1, ndtx_model** out);
NDTX_API ndtx_status ndtx_model_compile_gammas(const ndtx_tree* t, double gamma1, double gamma2,
                                               ndtx_model** out);
NDTX_API ndtx_status ndtx_model_from_json(const char* json, ndtx_model** out);
NDTX_API ndtx_status ndtx_model_to_json(const ndtx_model* m, char** json);
/* x is row-major n_rows x n_features; probs receives n_rows x classes, row-major. */
NDTX_API ndtx_status ndtx_model_predict_proba(const ndtx_model* m, const double* x, size_t n_rows,
                                              size_t n_features, double* probs);
NDTX_API int ndtx_model_classes(const ndtx_model* m);
NDTX_API void ndtx_model_free(ndtx_model* m);

/* ---- exploration ---------------------------------------------------------- */

/*
 * config_json keys (all optional except "seed"):
 *   "depth": integer or "auto"    "gammas": [decreasing positive reals]
 *   "reps", "seed", "epochs", "batch", "patience", "workers": integers
 *   "nn_baseline": bool           "cv_max_depth", "cv_folds": integers
 * Other keys are kept verbatim as part of the run configuration embedded in
 * artifacts ("workers" is not embedded).
 */
NDTX_API ndtx_status ndtx_explore(const ndtx_dataset* d, const char* config_json, ndtx_result** out);
NDTX_API ndtx_status ndtx_result_to_json(const ndtx_result* r, char** json);
NDTX_API ndtx_status ndtx_result_report(const ndtx_result* r, char** text);
NDTX_API ndtx_status ndtx_result_write_artifacts(const ndtx_result* r, const char* out_dir);
NDTX_API double ndtx_result_gamma_star(const ndtx_result* r);
NDTX_API const char* ndtx_result_diagnosis(const ndtx_result* r);
NDTX_API void ndtx_result_free(ndtx_result* r);

/* ---- self checks ------------------------------------------------------------ */

/*
 * Runs the built-in invariant checks. When both model_json and tree_json are
 * non-NULL the stored model is additionally checked for crisp equivalence with
 * the tree. *all_passed is set to 1 or 0; *report receives one line per check.
 */
NDTX_API ndtx_status ndtx_validate(uint64_t seed, const char* model_json, const char* tree_json, char** report,
                                   int* all_passed);

#ifdef __cplusplus
}
#endif

#endif /* NDTX_H */
