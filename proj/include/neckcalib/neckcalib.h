#ifndef NECKCALIB_NECKCALIB_H
#define NECKCALIB_NECKCALIB_H

#include <stddef.h>
#include <stdint.h>

#if defined(NECKCALIB_BUILDING)
#define NC_API __attribute__((visibility("default")))
#else
#define NC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nc_status {
  NC_OK = 0,
  NC_ERR_INVALID_ARGUMENT = 1,
  NC_ERR_DOMAIN = 2,
  NC_ERR_SPEC_VIOLATION = 3,
  NC_ERR_NUMERICAL_DEGENERACY = 4,
  NC_ERR_STATE = 5,
  NC_ERR_SAMPLING = 6,
  NC_ERR_CONFIG = 7,
  NC_ERR_IO = 8,
  NC_ERR_INTERNAL = 9
} nc_status;

typedef struct nc_config nc_config;
typedef struct nc_report nc_report;
typedef struct nc_spec nc_spec;

/* Message of the last failed call on this thread; "" when none. */
NC_API const char* nc_last_error(void);
/* Process exit code suggested for a status: 1 for configuration-side errors, 2 for numerical ones. */
NC_API int nc_status_exit_code(nc_status status);
NC_API void nc_string_free(char* s);

/* ---- run configuration ----
 * parse/load only check that the text is a JSON object; the schema is checked by
 * nc_config_emit and nc_run, after overrides have been applied. */

NC_API nc_status nc_config_parse(const char* json_text, nc_config** out);
NC_API nc_status nc_config_load(const char* path, nc_config** out);
/* Empty document, for commands that need no config file. */
NC_API nc_status nc_config_new(nc_config** out);
NC_API void nc_config_free(nc_config* config);
/* Dot-path override "a.b.c=value"; value is read as JSON when possible, else as a string. */
NC_API nc_status nc_config_set(nc_config* config, const char* assignment);
/* Selects the command block; fails if the document already names a different command. */
NC_API nc_status nc_config_select_command(nc_config* config, const char* command);
NC_API nc_status nc_config_set_seed(nc_config* config, uint64_t seed);
/* path may be NULL (keep), "" (standard output); format may be NULL (keep), "json" or "csv". */
NC_API nc_status nc_config_set_output(nc_config* config, const char* path, const char* format);
/* Fully resolved configuration as JSON; free with nc_string_free. */
NC_API nc_status nc_config_emit(const nc_config* config, char** out);

/* ---- runs ---- */

/* threads = 0 uses hardware parallelism. */
NC_API nc_status nc_run(const nc_config* config, unsigned threads, nc_report** out);
NC_API void nc_report_free(nc_report* report);
/* 0 clean, 3 finding, 2 failed selftest. */
NC_API int nc_report_exit_code(const nc_report* report);
/* Rendered in the configured output format; free with nc_string_free. */
NC_API nc_status nc_report_render(const nc_report* report, char** out);
/* Configured output path; "" means standard output. Owned by the report. */
NC_API const char* nc_report_output_path(const nc_report* report);

/* ---- specs ---- */

NC_API nc_status nc_spec_from_json(const char* json_text, nc_spec** out);
NC_API nc_status nc_spec_jlt(const double* a, size_t n, double fiber_window, nc_spec** out);
NC_API void nc_spec_free(nc_spec* spec);
NC_API nc_status nc_spec_to_json(const nc_spec* spec, char** out);
/* Locates q0 and stores it in the spec (once). q0_out receives t values when non-NULL. */
NC_API nc_status nc_spec_find_q0(nc_spec* spec, int grid_per_axis, double refine_tol, double* q0_out,
                                 int* coordinatewise_min_out);
NC_API nc_status nc_spec_product_factor(const nc_spec* spec, const double* q, double* out);
NC_API nc_status nc_spec_eval_g(const nc_spec* spec, const double* q, const double* x, const double* y, double* out);
/* Frame of k vectors: base holds k rows of n values, fiber k rows of t values. */
NC_API nc_status nc_spec_comass_ratio(const nc_spec* spec, const double* p, const double* q, const double* base,
                                      const double* fiber, double* out);
NC_API int nc_spec_n(const nc_spec* spec);
NC_API int nc_spec_k(const nc_spec* spec);
NC_API int nc_spec_t(const nc_spec* spec);

#ifdef __cplusplus
}
#endif

#endif
