#ifndef KGX_KGX_H
#define KGX_KGX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KGX_API __declspec(dllexport)
#else
#define KGX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum kgx_status {
  KGX_OK = 0,
  KGX_ERR_USAGE = 1,    /* bad argument or configuration */
  KGX_ERR_DATA = 2,     /* unreadable input, unknown label, missing artifact */
  KGX_ERR_NUMERIC = 3,  /* divergence or an impossible fit */
  KGX_ERR_INTERNAL = 4
} kgx_status;

typedef struct kgx_config kgx_config;
typedef struct kgx_dataset kgx_dataset;
typedef struct kgx_model kgx_model;
typedef struct kgx_explanation_set kgx_explanation_set;

typedef struct kgx_fidelity {
  double roc_auc;
  double s_mrr;
  double o_mrr;
  int has_roc_auc;
  int has_s_mrr;
  int has_o_mrr;
  size_t test_size;
} kgx_fidelity;

/* Message of the last failed call on this thread; empty after success. */
KGX_API const char* kgx_last_error(void);
KGX_API const char* kgx_version(void);
/* Frees strings returned through char** out-parameters. */
KGX_API void kgx_string_free(char* s);

/* Configuration. Keys are `section.key`, as printed by kgx_config_render. */
KGX_API kgx_status kgx_config_new(kgx_config** out);
KGX_API kgx_status kgx_config_load(const char* path, kgx_config** out);
KGX_API kgx_status kgx_config_set(kgx_config* cfg, const char* key, const char* value);
KGX_API kgx_status kgx_config_set_seed(kgx_config* cfg, uint64_t seed);
KGX_API kgx_status kgx_config_validate(const kgx_config* cfg);
KGX_API kgx_status kgx_config_render(const kgx_config* cfg, char** out);
KGX_API void kgx_config_free(kgx_config* cfg);

/* Runs a pipeline stage: ingest, train, mine, explain, evaluate or report.
   Progress lines are appended to *log when log is non-null. */
KGX_API kgx_status kgx_run(const kgx_config* cfg, const char* command, char** log);

/* Datasets: tab-separated subject, predicate, object files. valid and test
   may be null. */
KGX_API kgx_status kgx_dataset_load(const char* train, const char* valid, const char* test, kgx_dataset** out);
KGX_API kgx_status kgx_dataset_counts(const kgx_dataset* ds, size_t* entities, size_t* predicates,
                                      size_t* train_facts, size_t* test_facts);
KGX_API void kgx_dataset_free(kgx_dataset* ds);

/* Models. Training reads model.* keys from the configuration. */
KGX_API kgx_status kgx_model_train(const kgx_dataset* ds, const kgx_config* cfg, kgx_model** out);
KGX_API kgx_status kgx_model_load(const char* path, kgx_model** out);
KGX_API kgx_status kgx_model_save(const kgx_model* model, const char* path);
KGX_API kgx_status kgx_model_score(const kgx_model* model, const kgx_dataset* ds, const char* subject,
                                   const char* predicate, const char* object, double* out);
KGX_API void kgx_model_free(kgx_model* model);

/* Explains one predicate of the dataset's test split in the configured
   scope and rule mode. */
KGX_API kgx_status kgx_explain(const kgx_model* model, const kgx_dataset* ds, const kgx_config* cfg,
                               const char* predicate, kgx_explanation_set** out);
KGX_API size_t kgx_explanation_count(const kgx_explanation_set* set);
/* Weighted fidelity over the covered explanations. */
KGX_API kgx_status kgx_explanation_set_fidelity(const kgx_explanation_set* set, kgx_fidelity* out);
KGX_API kgx_status kgx_explanation_fidelity(const kgx_explanation_set* set, size_t index, kgx_fidelity* out);
KGX_API kgx_status kgx_explanation_rule_count(const kgx_explanation_set* set, size_t index, size_t* out);
KGX_API kgx_status kgx_explanation_covered(const kgx_explanation_set* set, size_t index, int* out);
KGX_API kgx_status kgx_explanation_json(const kgx_explanation_set* set, size_t index, char** out);
KGX_API kgx_status kgx_explanation_surrogate_score(const kgx_explanation_set* set, size_t index,
                                                   const char* subject, const char* object, double* out);
KGX_API void kgx_explanation_set_free(kgx_explanation_set* set);

#ifdef __cplusplus
}
#endif

#endif
