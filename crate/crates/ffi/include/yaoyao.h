#ifndef YAOYAO_H
#define YAOYAO_H

#include <stddef.h>
#include <stdint.h>

typedef enum YyStatus {
  YY_STATUS_OK = 0,
  YY_STATUS_NULL_POINTER = 1,
  YY_STATUS_INVALID_INPUT = 2,
  YY_STATUS_SOLVER_FAILURE = 3,
  YY_STATUS_PRECONDITION = 4,
  YY_STATUS_PANIC = 5,
} YyStatus;

// A weighted point cloud.
typedef struct YyCloud YyCloud;

// A computed partition.
typedef struct YyPartition YyPartition;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The message for the last failed call on this thread. Valid until the next
// call into this library from the same thread; never null.
const char *yy_last_error_message(void);

// Creates a cloud of `count` points of dimension `dim` from `coords`
// (`count * dim` values). `weights` may be null for unit weights.
//
// # Safety
// `coords` must point to `count * dim` doubles, `weights` (if not null) to
// `count` doubles, and `out` to writable storage for one pointer.
enum YyStatus yy_cloud_new(uintptr_t dim,
                           const double *coords,
                           const double *weights,
                           uintptr_t count,
                           struct YyCloud **out);

// # Safety
// `cloud` must be null or a handle from [`yy_cloud_new`] not yet freed.
void yy_cloud_free(struct YyCloud *cloud);

// Computes the partition of `cloud`. `config_json` may be null for the
// default solver configuration.
//
// # Safety
// `cloud` must be a live handle, `config_json` null or a NUL-terminated
// string, and `out` writable.
enum YyStatus yy_partition_compute(const struct YyCloud *cloud,
                                   const char *config_json,
                                   struct YyPartition **out);

// Parses a partition from its JSON document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum YyStatus yy_partition_from_json(const char *json, struct YyPartition **out);

// Serializes a partition; release the string with [`yy_string_free`].
//
// # Safety
// `partition` must be a live handle and `out` writable.
enum YyStatus yy_partition_to_json(const struct YyPartition *partition, char **out);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void yy_string_free(char *s);

// # Safety
// `partition` must be null or a live handle.
void yy_partition_free(struct YyPartition *partition);

// Dimension of the partition, or 0 for a null handle.
//
// # Safety
// `partition` must be null or a live handle.
uintptr_t yy_partition_dim(const struct YyPartition *partition);

// Writes the center (ambient coordinates) into `out[0..len]`; `len` must
// equal the dimension.
//
// # Safety
// `partition` must be a live handle and `out` must hold `len` doubles.
enum YyStatus yy_partition_center(const struct YyPartition *partition, double *out, uintptr_t len);

// Locates `point` (length `len` = dimension) and writes the region's signs
// (each -1 or +1) into `signs_out[0..len]`.
//
// # Safety
// `point` must hold `len` doubles and `signs_out` `len` writable bytes.
enum YyStatus yy_partition_region_of_point(const struct YyPartition *partition,
                                           const double *point,
                                           uintptr_t len,
                                           int8_t *signs_out);

// For the closed half-space `{normal . x >= offset}`, which must contain
// the center, writes the signs of a region contained in it.
//
// # Safety
// `normal` must hold `len` doubles and `signs_out` `len` writable bytes.
enum YyStatus yy_partition_witness(const struct YyPartition *partition,
                                   const double *normal,
                                   double offset,
                                   uintptr_t len,
                                   int8_t *signs_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* YAOYAO_H */
