/* grid2seq C API: opaque handles + status codes over the C++ core.
 * All functions return G2S_OK on success; on failure g2s_last_error() holds
 * a message for the calling thread. Strings returned through out-parameters
 * are heap-allocated and released with g2s_string_free(). */

#ifndef GRID2SEQ_H
#define GRID2SEQ_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum g2s_status {
    G2S_OK = 0,
    G2S_ERR_INVALID_ARGUMENT = 1,
    G2S_ERR_IO = 2,
    G2S_ERR_FORMAT = 3,
    G2S_ERR_STATE = 4,
    G2S_ERR_RUNTIME = 5
} g2s_status;

typedef struct g2s_dataset g2s_dataset; /* samples + their vocabulary */
typedef struct g2s_model g2s_model;

const char* g2s_status_name(g2s_status status);
const char* g2s_last_error(void);
void g2s_string_free(char* s);

/* ---- synthetic task data -------------------------------------------------- */

typedef struct g2s_task_options {
    uint64_t seed;
    uint32_t content_vocab_size;
    uint32_t feature_dim;
    uint32_t repeats_min;
    uint32_t repeats_max;
    uint32_t label_len_min;
    uint32_t label_len_max;
    double noise_sigma;
} g2s_task_options;

void g2s_task_options_init(g2s_task_options* opts);

g2s_status g2s_generate(const g2s_task_options* opts, uint64_t n_samples, const char* id_prefix,
                        g2s_dataset** out);
g2s_status g2s_dataset_load(const char* dataset_path, const char* vocab_path, g2s_dataset** out);
g2s_status g2s_dataset_save(const g2s_dataset* dataset, const char* path);
g2s_status g2s_vocab_save(const g2s_dataset* dataset, const char* path);
uint64_t g2s_dataset_size(const g2s_dataset* dataset);
void g2s_dataset_free(g2s_dataset* dataset);

/* ---- training -------------------------------------------------------------- */

/* Runs the training loop described by the config file (data paths, model
 * dimensions, optimization settings). resume_checkpoint may be NULL. On
 * success *final_checkpoint_out receives the path of the final checkpoint. */
g2s_status g2s_train(const char* config_path, const char* resume_checkpoint,
                     char** final_checkpoint_out);

/* Central-difference gradient verification on a small model. config_path
 * NULL selects the built-in small configuration. *passed is set to 1 when
 * every parameter tensor stays under the tolerance. */
g2s_status g2s_grad_check(const char* config_path, double tolerance, int* passed,
                          char** report_out);

/* ---- decoding -------------------------------------------------------------- */

g2s_status g2s_model_load(const char* checkpoint_path, g2s_model** out);
void g2s_model_free(g2s_model* model);
uint64_t g2s_model_num_params(const g2s_model* model);

typedef struct g2s_decode_options {
    uint32_t beam_size;   /* default 12 */
    uint32_t max_rows;    /* 0: 2 * reduced length + 5 */
    int length_norm;      /* 0/1, default 0 */
    int full_recompute;   /* 0/1: rebuild the grid per output step (oracle mode) */
} g2s_decode_options;

void g2s_decode_options_init(g2s_decode_options* opts);

typedef struct g2s_decode_stats {
    double wall_seconds;
    uint64_t cell_steps;
    uint64_t samples;
    uint64_t truncated;
} g2s_decode_stats;

/* Decodes every sample of `data` and writes the transcript file
 * (id<TAB>symbols<TAB>log_prob per line). stats may be NULL. */
g2s_status g2s_decode(const g2s_model* model, const g2s_dataset* data,
                      const g2s_decode_options* opts, const char* transcript_path,
                      g2s_decode_stats* stats);

/* ---- evaluation ------------------------------------------------------------ */

typedef struct g2s_eval_report {
    double wer; /* mean over runs when n_runs > 1 */
    uint64_t substitutions;
    uint64_t insertions;
    uint64_t deletions;
    uint64_t ref_labels;
    uint64_t samples;
} g2s_eval_report;

g2s_status g2s_evaluate(const char* const* transcript_paths, size_t n_runs,
                        const char* ref_dataset_path, const char* vocab_path,
                        g2s_eval_report* out);

#ifdef __cplusplus
}
#endif

#endif /* GRID2SEQ_H */
