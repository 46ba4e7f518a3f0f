#ifndef PLATESIZE_H
#define PLATESIZE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  PS_STATUS_NULL_ARGUMENT = 1,
  /*
   A string argument was not valid UTF-8.
   */
  PS_STATUS_INVALID_UTF8 = 2,
  /*
   A mathematical hypothesis failed (ellipticity, dichotomy, jump sign, geometry).
   */
  PS_STATUS_HYPOTHESIS = 3,
  /*
   Mesh generation or the linear solve failed, or the load is incompatible.
   */
  PS_STATUS_SOLVER = 4,
  /*
   Invalid configuration, expression or missing calibration.
   */
  PS_STATUS_CONFIG = 5,
  /*
   Any other library error.
   */
  PS_STATUS_OTHER = 6,
  /*
   A Rust panic was caught at the boundary.
   */
  PS_STATUS_PANIC = 7,
} PsStatus;

typedef enum PsDichotomyClass {
  PS_DICHOTOMY_CLASS_POSITIVE_EVERYWHERE = 0,
  PS_DICHOTOMY_CLASS_IDENTICALLY_ZERO = 1,
  PS_DICHOTOMY_CLASS_VIOLATED = 2,
} PsDichotomyClass;

/*
 Opaque experiment configuration.
 */
typedef struct PsExperiment PsExperiment;

/*
 Opaque elasticity tensor field.
 */
typedef struct PsTensorField PsTensorField;

/*
 Geometric constants of the chain construction.
 */
typedef struct PsGeometricConstants {
  double m0;
  double theta0;
  double theta1;
  double s;
  double chi;
  double h0;
  double tau_chain;
  double rho1;
  double rho2;
  double rho3;
  double rho4;
  double rho_bar;
} PsGeometricConstants;

/*
 Dichotomy classification over a sampling grid.
 */
typedef struct PsDichotomy {
  enum PsDichotomyClass classification;
  /*
   Smallest sampled dichotomy value.
   */
  double mu;
  /*
   Ellipticity constant over the same grid.
   */
  double gamma;
} PsDichotomy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer stays
 valid until the next call into the library from the same thread.
 */
const char *ps_last_error_message(void);

/*
 Releases a string returned by the library. Null is ignored.

 # Safety
 `s` must come from this library and must not be used afterwards.
 */
void ps_string_free(char *s);

/*
 Dichotomy value `|det S|/a0` of the quartic with coefficients `quartic[0..5]`.

 # Safety
 `quartic` must point to 5 doubles and `out` to writable storage.
 */
enum PsStatus ps_dichotomy_value(const double *quartic, double *out);

/*
 # Safety
 `out` must point to writable storage.
 */
enum PsStatus ps_geometric_constants(double m0, double h0, struct PsGeometricConstants *out);

/*
 Chain length `k` and radius `r_k` for the dimensionless radius `rho`.

 # Safety
 `k` and `r_k` must point to writable storage.
 */
enum PsStatus ps_k_of_rho(double rho, double m0, double h0, size_t *k, double *r_k);

/*
 Isotropic tensor with Lamé moduli `lambda`, `mu`.

 # Safety
 `out` must point to writable storage.
 */
enum PsStatus ps_tensor_isotropic(double lambda, double mu, struct PsTensorField **out);

/*
 Constant tensor from `(C1111, C1122, C1112, C1222, C1212, C2222)`.

 # Safety
 `coefficients` must point to 6 doubles and `out` to writable storage.
 */
enum PsStatus ps_tensor_constant(const double *coefficients, struct PsTensorField **out);

/*
 Tensor whose six components are expressions in `x1`, `x2`.

 # Safety
 `expressions` must point to 6 NUL-terminated strings and `out` to writable storage.
 */
enum PsStatus ps_tensor_from_expressions(const char *const *expressions,
                                         struct PsTensorField **out);

/*
 # Safety
 `t` must come from a `ps_tensor_*` constructor and must not be used afterwards.
 */
void ps_tensor_free(struct PsTensorField *t);

/*
 Classifies `t` on an `n × n` grid over `[xmin, xmax] × [ymin, ymax]`.

 # Safety
 `t` must be a live handle and `out` must point to writable storage.
 */
enum PsStatus ps_tensor_classify(const struct PsTensorField *t,
                                 double xmin,
                                 double ymin,
                                 double xmax,
                                 double ymax,
                                 size_t n,
                                 struct PsDichotomy *out);

/*
 Parses a JSON experiment configuration.

 # Safety
 `json` must be a NUL-terminated string and `out` must point to writable storage.
 */
enum PsStatus ps_experiment_from_json(const char *json, struct PsExperiment **out);

/*
 # Safety
 `e` must be a live handle.
 */
enum PsStatus ps_experiment_set_seed(struct PsExperiment *e, uint64_t seed);

/*
 Runs `command` (`check-tensor`, `solve`, `scan`, `calibrate`, `bounds`
 or `all`) writing into `out_dir`. The JSON summary is returned in
 `summary` when it is not null.

 # Safety
 `e` must be a live handle; strings must be NUL-terminated; `summary` may be null.
 */
enum PsStatus ps_experiment_run(const struct PsExperiment *e,
                                const char *command,
                                const char *out_dir,
                                char **summary);

/*
 # Safety
 `e` must come from `ps_experiment_from_json` and must not be used afterwards.
 */
void ps_experiment_free(struct PsExperiment *e);

/*
 Parses `config_json` and runs `command` in one call.

 # Safety
 Strings must be NUL-terminated; `summary` may be null.
 */
enum PsStatus ps_run_json(const char *config_json,
                          const char *command,
                          const char *out_dir,
                          char **summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLATESIZE_H */
