#ifndef JTREEKIT_C_API_H
#define JTREEKIT_C_API_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define JTK_API __declspec(dllexport)
#else
#define JTK_API __attribute__((visibility("default")))
#endif

/* 0 is success; other values mirror jtk::ErrorCode. */
typedef int jtk_status;
enum {
  JTK_OK = 0,
  JTK_E_SYNTAX = 1,
  JTK_E_UNSUPPORTED_ATOM,
  JTK_E_VALENCE,
  JTK_E_KEKULIZATION,
  JTK_E_WIDTH_MISMATCH,
  JTK_E_EMPTY_DATASET,
  JTK_E_UNENCODABLE_TREE,
  JTK_E_DANGLING_POSITION,
  JTK_E_UNKNOWN_JUNCTION_ID,
  JTK_E_MISSING_EOS,
  JTK_E_SHAPE_MISMATCH,
  JTK_E_NON_FINITE,
  JTK_E_FEATURE_OUT_OF_RANGE,
  JTK_E_BAD_RANGE,
  JTK_E_NO_VALID_ATTACHMENT,
  JTK_E_EMPTY_TREE,
  JTK_E_EMPTY_SET,
  JTK_E_DEGENERATE_DATA,
  JTK_E_MAX_LEN_EXCEEDED,
  JTK_E_IO,
  JTK_E_CONFIG,
  JTK_E_MISSING_ARTIFACT,
  JTK_E_FORMAT,
  JTK_E_INTERNAL = 100
};

/* Message of the last failure on the calling thread; empty after success. */
JTK_API const char* jtk_last_error(void);
JTK_API const char* jtk_status_name(jtk_status s);
JTK_API const char* jtk_version(void);

/* Owned, NUL-terminated result string. */
typedef struct jtk_string jtk_string;
JTK_API const char* jtk_string_data(const jtk_string* s);
JTK_API void jtk_string_free(jtk_string* s);

/* ---- molecules ---- */
typedef struct jtk_mol jtk_mol;

JTK_API jtk_status jtk_mol_parse(const char* smiles, jtk_mol** out);
JTK_API void jtk_mol_free(jtk_mol* m);
JTK_API jtk_status jtk_mol_canonical(const jtk_mol* m, jtk_string** out);
JTK_API size_t jtk_mol_num_atoms(const jtk_mol* m);
/* weight, logP, TPSA */
JTK_API jtk_status jtk_mol_properties(const jtk_mol* m, double out[3]);
JTK_API jtk_status jtk_mol_tanimoto(const jtk_mol* a, const jtk_mol* b, double* out);
/* decompose -> encode with `vocab_path` -> decode -> assemble with a match term. */
JTK_API jtk_status jtk_mol_roundtrip(const jtk_mol* m, const char* vocab_path, int budget, jtk_string** out);

/* ---- run configuration ---- */
typedef struct jtk_config jtk_config;

JTK_API jtk_status jtk_config_default(jtk_config** out);
JTK_API jtk_status jtk_config_load(const char* path, jtk_config** out);
JTK_API jtk_status jtk_config_parse(const char* text, jtk_config** out);
JTK_API void jtk_config_free(jtk_config* c);
/* key is `section.key`; the configuration is re-validated. */
JTK_API jtk_status jtk_config_set(jtk_config* c, const char* key, const char* value);
/* Applies JTREEKIT_SEED when set. */
JTK_API jtk_status jtk_config_apply_env(jtk_config* c);
JTK_API uint64_t jtk_config_seed(const jtk_config* c);

/* Progress lines; may be NULL. */
typedef void (*jtk_log_fn)(const char* line, void* user);

/* Outputs are refused when they exist unless `overwrite` is nonzero. */
JTK_API jtk_status jtk_build_vocab(const jtk_config* c, int overwrite);

typedef struct {
  double initial_loss;
  double final_loss;
  double token_accuracy;
  size_t examples;
  size_t skipped;
  int epochs;
} jtk_train_report;

JTK_API jtk_status jtk_train_vae(const jtk_config* c, int overwrite, jtk_log_fn log, void* user, jtk_train_report* out);
/* Latent dump to paths.latents; `projection_csv` (may be NULL) receives a 2-D PCA projection. */
JTK_API jtk_status jtk_embed(const jtk_config* c, const char* projection_csv, int overwrite, jtk_log_fn log, void* user);
JTK_API jtk_status jtk_train_diffusion(const jtk_config* c, int overwrite, jtk_log_fn log, void* user, double* final_loss);

typedef struct {
  size_t requested;
  size_t valid;
  size_t partial;
  size_t truncated;
} jtk_sample_report;

/* One SMILES per line (`?` for failures) followed by `#` summary lines. */
JTK_API jtk_status jtk_sample(const jtk_config* c, int n, const char* out_path, int overwrite, jtk_log_fn log, void* user,
                              jtk_sample_report* out);

typedef struct {
  size_t requested;
  size_t valid_count;
  double valid;
  double unique;
  double novelty;
  double intdiv1;
  double intdiv2;
  double unique_at_k; /* negative when not requested */
} jtk_eval_report;

/* `records_csv` may be NULL. */
JTK_API jtk_status jtk_eval(const jtk_config* c, const char* samples_path, size_t unique_at_k, const char* report_path,
                            const char* records_csv, int overwrite, jtk_eval_report* out);

JTK_API jtk_status jtk_interpolate(const jtk_config* c, const char* smiles_a, const char* smiles_b, int k, const char* out_path,
                                   int overwrite);

#ifdef __cplusplus
}
#endif

#endif
