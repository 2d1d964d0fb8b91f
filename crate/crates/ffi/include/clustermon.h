#ifndef CLUSTERMON_H
#define CLUSTERMON_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CM_CF_AVERAGE = 0,
  CM_CF_MIN = 1,
  CM_CF_MAX = 2,
  CM_CF_LAST = 3,
} CmCf;

typedef enum {
  CM_STATUS_OK = 0,
  CM_STATUS_NULL_ARGUMENT = 1,
  CM_STATUS_INVALID_UTF8 = 2,
  CM_STATUS_CONFIG = 3,
  CM_STATUS_ARCHIVE = 4,
  CM_STATUS_CODEC = 5,
  CM_STATUS_OUT_OF_RANGE = 6,
  CM_STATUS_BUFFER_TOO_SMALL = 7,
  CM_STATUS_NOT_NUMERIC = 8,
  CM_STATUS_PANIC = 9,
} CmStatus;

/**
 * Opaque parsed configuration.
 */
typedef struct CmConfig CmConfig;

/**
 * Opaque decoded SNMP message.
 */
typedef struct CmMessage CmMessage;

/**
 * Opaque round-robin database.
 */
typedef struct CmRrd CmRrd;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated when `len > 0`) and returns its full length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t cm_last_error(char *buf, size_t len);

/**
 * Loads and validates a configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
CmStatus cm_config_load(const char *path, CmConfig **out);

/**
 * # Safety
 * `config` must be null or a handle from `cm_config_load`.
 */
size_t cm_config_host_count(const CmConfig *config);

/**
 * # Safety
 * `config` must be null or a handle from `cm_config_load`, not yet freed.
 */
void cm_config_free(CmConfig *config);

/**
 * Creates an empty database laid out for host `host_index` of `config`.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
CmStatus cm_rrd_create_for_host(const CmConfig *config,
                                size_t host_index,
                                double start,
                                CmRrd **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
CmStatus cm_rrd_load(const char *path, CmRrd **out);

/**
 * Writes the database atomically.
 *
 * # Safety
 * `db` must be a live handle; `path` a NUL-terminated string.
 */
CmStatus cm_rrd_save(const CmRrd *db, const char *path);

/**
 * # Safety
 * `db` must be null or a live handle.
 */
size_t cm_rrd_var_count(const CmRrd *db);

/**
 * # Safety
 * `db` must be null or a live handle.
 */
double cm_rrd_last_update(const CmRrd *db);

/**
 * Records one sample of `n` values; NaN marks a value as unknown.
 *
 * # Safety
 * `db` must be a live handle; `values` must point to `n` doubles.
 */
CmStatus cm_rrd_update(CmRrd *db, double time, const double *values, size_t n);

/**
 * Fetches variable `var` between `start` and `end` from the finest
 * archive with consolidation `cf`. Up to `cap` values go to `out`
 * (NaN for unknown); `*rows` receives the full row count, `*first` the
 * end time of the first row and `*step` the row spacing. Returns
 * `BufferTooSmall` when `cap < *rows`.
 *
 * # Safety
 * `db` must be a live handle; `out` must have room for `cap` doubles;
 * `rows`, `first` and `step` must be writable.
 */
CmStatus cm_rrd_fetch(const CmRrd *db,
                      CmCf cf,
                      int64_t start,
                      int64_t end,
                      size_t var,
                      double *out,
                      size_t cap,
                      size_t *rows,
                      int64_t *first,
                      uint64_t *step);

/**
 * # Safety
 * `db` must be null or a live handle, not yet freed.
 */
void cm_rrd_free(CmRrd *db);

/**
 * Encodes a GetRequest for `n` dotted OIDs into `buf`. `version` is 1 or
 * 2 (for v2c). `*len` receives the encoded size, also when the buffer
 * is too small.
 *
 * # Safety
 * `community` and each of the `n` entries of `oids` must be
 * NUL-terminated strings; `buf` must have room for `cap` bytes; `len`
 * must be writable.
 */
CmStatus cm_snmp_encode_get(uint32_t version,
                            const char *community,
                            int32_t request_id,
                            const char *const *oids,
                            size_t n,
                            uint8_t *buf,
                            size_t cap,
                            size_t *len);

/**
 * # Safety
 * `buf` must point to `len` readable bytes; `out` must be writable.
 */
CmStatus cm_snmp_decode(const uint8_t *buf, size_t len, CmMessage **out);

/**
 * # Safety
 * `msg` must be null or a live handle.
 */
int32_t cm_message_request_id(const CmMessage *msg);

/**
 * # Safety
 * `msg` must be null or a live handle.
 */
int32_t cm_message_error_status(const CmMessage *msg);

/**
 * # Safety
 * `msg` must be null or a live handle.
 */
size_t cm_message_varbind_count(const CmMessage *msg);

/**
 * Numeric value of varbind `i`. Strings, OIDs, exceptions and negative
 * integers give `NotNumeric`.
 *
 * # Safety
 * `msg` must be a live handle; `out` must be writable.
 */
CmStatus cm_message_varbind_u64(const CmMessage *msg, size_t i, uint64_t *out);

/**
 * # Safety
 * `msg` must be null or a live handle, not yet freed.
 */
void cm_message_free(CmMessage *msg);

/**
 * Increase of a counter from `prev` to `raw`, assuming at most one wrap
 * (at 2^32 when `prev` fits in 32 bits, else at 2^64).
 */
double cm_counter_delta(uint64_t prev, uint64_t raw);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLUSTERMON_H */
