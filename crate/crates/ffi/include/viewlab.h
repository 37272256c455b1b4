#ifndef VIEWLAB_H
#define VIEWLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of doubles in a flattened view (x, y per vertex).
 */
#define VL_VIEW_LEN 16

/**
 * Number of doubles in a flattened paperclip (x, y, z per vertex).
 */
#define VL_CLIP_LEN 24

typedef enum VlStatus {
  VL_STATUS_OK = 0,
  VL_STATUS_NULL_POINTER = 1,
  VL_STATUS_INVALID_ARGUMENT = 2,
  VL_STATUS_IO = 3,
  VL_STATUS_PARSE = 4,
  VL_STATUS_GEOMETRY = 5,
  VL_STATUS_NUMERIC = 6,
  VL_STATUS_PANIC = 7,
} VlStatus;

typedef enum VlAxis {
  VL_AXIS_X = 0,
  VL_AXIS_Y = 1,
  VL_AXIS_Z = 2,
} VlAxis;

typedef enum VlOracleKind {
  VL_ORACLE_KIND_MATCH2D = 0,
  VL_ORACLE_KIND_LC = 1,
  VL_ORACLE_KIND_ALIGN3D = 2,
} VlOracleKind;

/**
 * A generated paperclip.
 */
typedef struct VlClip VlClip;

/**
 * A trained coordinate-array network.
 */
typedef struct VlModel VlModel;

/**
 * A classical recognizer built from training views.
 */
typedef struct VlOracle VlOracle;

typedef struct VlCamera {
  /**
   * 0 orthographic, 1 perspective.
   */
  int32_t perspective;
  double distance;
  double scale;
  uint32_t image_size;
} VlCamera;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *vl_version(void);

/**
 * Message of the last failure on this thread, or NULL. Owned by the library.
 */
const char *vl_last_error(void);

/**
 * Default camera of either kind.
 */
struct VlCamera vl_camera_default(int32_t perspective, uint32_t image_size);

/**
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum VlStatus vl_clip_new(uint64_t seed, uint64_t class_id, struct VlClip **out);

/**
 * Copies the vertices as `VL_CLIP_LEN` doubles (x, y, z per vertex).
 *
 * # Safety
 * `clip` must come from [`vl_clip_new`]; `out` must hold `VL_CLIP_LEN` doubles.
 */
enum VlStatus vl_clip_vertices(const struct VlClip *clip, double *out);

/**
 * Projects the clip rotated by `deg` about `axis`; writes `VL_VIEW_LEN` doubles.
 *
 * # Safety
 * `clip` must come from [`vl_clip_new`]; `out` must hold `VL_VIEW_LEN` doubles.
 */
enum VlStatus vl_clip_view(const struct VlClip *clip,
                           enum VlAxis axis,
                           double deg,
                           struct VlCamera camera,
                           double *out);

/**
 * # Safety
 * `clip` must come from [`vl_clip_new`] or be NULL; it must not be used afterwards.
 */
void vl_clip_free(struct VlClip *clip);

/**
 * Bins a view into a coordinate array of `2 * bins` doubles (x half, then y half).
 *
 * # Safety
 * `points` must hold `VL_VIEW_LEN` doubles and `out` `out_len` doubles.
 */
enum VlStatus vl_coord_array(const double *points,
                             struct VlCamera camera,
                             size_t bins,
                             double *out,
                             size_t out_len);

/**
 * Builds an oracle over classes `0..classes` of the seeded clip set, trained
 * on the given angles about `axis`.
 *
 * # Safety
 * `angles` must hold `n_angles` doubles; `out` must be a valid handle slot.
 */
enum VlStatus vl_oracle_new(enum VlOracleKind kind,
                            uint64_t seed,
                            uint64_t classes,
                            enum VlAxis axis,
                            const double *angles,
                            size_t n_angles,
                            struct VlCamera camera,
                            struct VlOracle **out);

/**
 * # Safety
 * `oracle` must come from [`vl_oracle_new`]; `points` must hold `VL_VIEW_LEN` doubles.
 */
enum VlStatus vl_oracle_classify(const struct VlOracle *oracle,
                                 const double *points,
                                 uint64_t *out_class);

/**
 * # Safety
 * `oracle` must come from [`vl_oracle_new`] or be NULL; it must not be used afterwards.
 */
void vl_oracle_free(struct VlOracle *oracle);

/**
 * Loads a model file written by `train-mlp`.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` a valid handle slot.
 */
enum VlStatus vl_model_load(const char *path, struct VlModel **out);

/**
 * Number of classes the model distinguishes, or 0 for NULL.
 *
 * # Safety
 * `model` must come from [`vl_model_load`] or be NULL.
 */
size_t vl_model_classes(const struct VlModel *model);

/**
 * # Safety
 * `model` must come from [`vl_model_load`]; `points` must hold `VL_VIEW_LEN` doubles.
 */
enum VlStatus vl_model_classify(const struct VlModel *model,
                                const double *points,
                                struct VlCamera camera,
                                uint64_t *out_class);

/**
 * # Safety
 * `model` must come from [`vl_model_load`] or be NULL; it must not be used afterwards.
 */
void vl_model_free(struct VlModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VIEWLAB_H */
