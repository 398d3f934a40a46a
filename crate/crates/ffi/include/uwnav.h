/* C interface to the uwnav square-root correntropy filtering benchmark.
 *
 * All functions returning int yield a UWNAV_* status code; handles are
 * opaque and must be released with the matching _free function. The
 * library is thread-safe as long as each handle is used from one thread
 * at a time.
 */

#ifndef UWNAV_H
#define UWNAV_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
    UWNAV_OK = 0,
    UWNAV_ERR_NULL = 1,    /* required pointer argument was NULL */
    UWNAV_ERR_UTF8 = 2,    /* string argument is not valid UTF-8 */
    UWNAV_ERR_CONFIG = 3,  /* configuration missing, unparsable or invalid */
    UWNAV_ERR_RUNTIME = 4, /* benchmark execution failed */
    UWNAV_ERR_INDEX = 5,   /* filter index out of range */
    UWNAV_ERR_BUFFER = 6,  /* output buffer too small */
    UWNAV_ERR_IO = 7       /* could not write artifacts */
};

/* Filter kinds accepted by uwnav_flops. */
enum {
    UWNAV_FLOPS_PCKF = 0,
    UWNAV_FLOPS_CKF = 1,
    UWNAV_FLOPS_UKF = 2,
    UWNAV_FLOPS_NSKF = 3,
    UWNAV_FLOPS_MC_PCKF = 4,
    UWNAV_FLOPS_MC_CKF = 5,
    UWNAV_FLOPS_MC_UKF = 6,
    UWNAV_FLOPS_MC_NSKF = 7
};

typedef struct UwnavConfig UwnavConfig;
typedef struct UwnavResult UwnavResult;

/* Reference nine-filter benchmark setup with the given master seed. */
int uwnav_config_new(uint64_t seed, UwnavConfig **out);

/* Load a TOML configuration file (same schema as the CLI's --config). */
int uwnav_config_load(const char *path, UwnavConfig **out);

int uwnav_config_set_runs(UwnavConfig *cfg, size_t runs);
int uwnav_config_set_seed(UwnavConfig *cfg, uint64_t seed);

/* Truth-integration step in seconds, in (0, 1]. */
int uwnav_config_set_dt(UwnavConfig *cfg, double dt);

void uwnav_config_free(UwnavConfig *cfg);

/* Run the Monte-Carlo benchmark; on UWNAV_OK *out owns the result. */
int uwnav_bench(const UwnavConfig *cfg, UwnavResult **out);

/* Number of filters in the result; 0 for NULL. */
size_t uwnav_result_filter_count(const UwnavResult *result);

/* NUL-terminated filter label such as "MC-PCKF(s=2)". */
int uwnav_result_label(const UwnavResult *result, size_t index,
                       char *buf, size_t len);

/* Nine per-state ARMSE values: north (m), east (m), depth (m),
 * vN, vE, vD (m/s), roll, pitch, yaw (deg). */
int uwnav_result_armse(const UwnavResult *result, size_t index,
                       double out[9]);

int uwnav_result_factorization_failures(const UwnavResult *result,
                                        size_t index, size_t *out);

/* Write armse.csv, the per-state rmse_*.csv series, flops.csv and
 * meta.json into dir, creating it if needed. */
int uwnav_result_write_csv(const UwnavResult *result, const char *dir);

void uwnav_result_free(UwnavResult *result);

/* Closed-form per-step flop count for a UWNAV_FLOPS_* kind with state
 * dimension n, measurement dimension m and T fixed-point iterations.
 * Returns a negative value for an unknown kind. */
double uwnav_flops(int kind, size_t n, size_t m, size_t t);

/* Static description of a status code; never NULL. */
const char *uwnav_status_message(int status);

#ifdef __cplusplus
}
#endif

#endif /* UWNAV_H */
