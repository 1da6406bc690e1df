/* stfm — Bayesian spatio-temporal functional model with block structure and
 * repeated measures: C API of the shared library.
 *
 * Conventions: every function returns STFM_OK (0) on success or a nonzero
 * error code; when errmsg/errmsg_len are given, a NUL-terminated description
 * is copied into the buffer on failure. Objects returned through out
 * parameters are owned by the caller and released with the matching _free
 * function. Configuration is passed as JSON text using the same schemas the
 * command-line tool documents.
 */
#ifndef STFM_H
#define STFM_H

#ifdef __cplusplus
extern "C" {
#endif

#define STFM_OK 0
#define STFM_ERR_INVALID_ARGUMENT 1
#define STFM_ERR_DOMAIN 2
#define STFM_ERR_CONFIG 3
#define STFM_ERR_IO 4
#define STFM_ERR_PARSE 5
#define STFM_ERR_NUMERIC 6
#define STFM_ERR_INSUFFICIENT_DATA 7
#define STFM_ERR_INTERNAL 8

typedef struct stfm_dataset stfm_dataset;
typedef struct stfm_fit_result stfm_fit_result;

const char* stfm_version(void);

/* Executes a subcommand workflow (simulate | fit | select | diagnose |
 * predict | study); artifacts are written under out_dir. */
int stfm_run(const char* command, const char* config_json, const char* out_dir, char* errmsg,
             int errmsg_len);

/* ---- datasets ---- */
int stfm_dataset_read_csv(const char* path, stfm_dataset** out, char* errmsg, int errmsg_len);
int stfm_dataset_simulate(const char* sim_config_json, stfm_dataset** out, char* errmsg,
                          int errmsg_len);
int stfm_dataset_write_csv(const stfm_dataset* ds, const char* path, char* errmsg, int errmsg_len);
int stfm_dataset_dims(const stfm_dataset* ds, int* n_blocks, int* n_stations, int* n_times,
                      long long* n_obs);
void stfm_dataset_free(stfm_dataset* ds);

/* ---- fitting ---- */
/* fit_config_json follows the fit config schema; its "dataset" entry is
 * ignored in favor of the dataset handle. */
int stfm_fit(const stfm_dataset* ds, const char* fit_config_json, stfm_fit_result** out,
             char* errmsg, int errmsg_len);
int stfm_fit_result_n_chains(const stfm_fit_result* fit, int* out);
int stfm_fit_result_write(const stfm_fit_result* fit, const char* out_dir, char* errmsg,
                          int errmsg_len);
int stfm_fit_result_lpml(const stfm_fit_result* fit, double* out, char* errmsg, int errmsg_len);
int stfm_fit_result_dic7(const stfm_fit_result* fit, double* out, char* errmsg, int errmsg_len);
/* target_json: {"block": 1-based int, "lat": .., "lon": .., "times": [..],
 * "mode": "new_rep_existing_block" | "new_location"}; writes a prediction CSV. */
int stfm_predict(const stfm_fit_result* fit, const char* target_json, double level,
                 unsigned long long seed, const char* out_csv_path, char* errmsg, int errmsg_len);
void stfm_fit_result_free(stfm_fit_result* fit);

#ifdef __cplusplus
}
#endif

#endif /* STFM_H */
