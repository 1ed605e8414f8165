#ifndef GOLGOL_H
#define GOLGOL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GolStatus {
  GOL_STATUS_OK = 0,
  GOL_STATUS_NULL_POINTER = 1,
  GOL_STATUS_INVALID_ARGUMENT = 2,
  GOL_STATUS_PARSE = 3,
  GOL_STATUS_PANIC = 4,
} GolStatus;

/**
 * A bit-packed toroidal grid.
 */
typedef struct GolTorus GolTorus;

/**
 * An unbounded set of live cells.
 */
typedef struct GolWorld GolWorld;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread; valid until the next call.
 */
const char *golgol_last_error(void);

struct GolWorld *golgol_world_new(void);

/**
 * # Safety
 * `w` must come from this library and not be used afterwards.
 */
void golgol_world_free(struct GolWorld *w);

/**
 * Parses RLE text into a new world.
 *
 * # Safety
 * `text` must point to `len` readable bytes; `out` must be writable.
 */
enum GolStatus golgol_world_from_rle(const uint8_t *text, size_t len, struct GolWorld **out);

/**
 * Encodes a world as RLE; release the string with `golgol_string_free`.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum GolStatus golgol_world_to_rle(const struct GolWorld *w, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void golgol_string_free(char *s);

/**
 * # Safety
 * `w` must be a live handle.
 */
enum GolStatus golgol_world_set(struct GolWorld *w, int64_t x, int64_t y, bool alive);

/**
 * # Safety
 * `w` must be a live handle or null.
 */
bool golgol_world_get(const struct GolWorld *w, int64_t x, int64_t y);

/**
 * # Safety
 * `w` must be a live handle or null.
 */
uint64_t golgol_world_population(const struct GolWorld *w);

/**
 * Advances the world `steps` generations on the unbounded plane.
 *
 * # Safety
 * `w` must be a live handle.
 */
enum GolStatus golgol_world_step(struct GolWorld *w, uint64_t steps);

/**
 * Creates an empty torus, at least 3x3.
 *
 * # Safety
 * `out` must be writable.
 */
enum GolStatus golgol_torus_new(size_t width, size_t height, struct GolTorus **out);

/**
 * Wraps a world onto a new torus.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum GolStatus golgol_torus_from_world(const struct GolWorld *w,
                                       size_t width,
                                       size_t height,
                                       struct GolTorus **out);

/**
 * # Safety
 * `t` must come from this library and not be used afterwards.
 */
void golgol_torus_free(struct GolTorus *t);

/**
 * Coordinates wrap.
 *
 * # Safety
 * `t` must be a live handle.
 */
enum GolStatus golgol_torus_set(struct GolTorus *t, int64_t x, int64_t y, bool alive);

/**
 * # Safety
 * `t` must be a live handle or null.
 */
bool golgol_torus_get(const struct GolTorus *t, int64_t x, int64_t y);

/**
 * # Safety
 * `t` must be a live handle or null.
 */
uint64_t golgol_torus_population(const struct GolTorus *t);

/**
 * # Safety
 * `t` must be a live handle.
 */
enum GolStatus golgol_torus_step(struct GolTorus *t, uint64_t steps);

/**
 * Copies the torus contents into a new world.
 *
 * # Safety
 * `t` must be a live handle; `out` must be writable.
 */
enum GolStatus golgol_torus_to_world(const struct GolTorus *t, struct GolWorld **out);

/**
 * `Ok` when the nextCell formula agrees with the rule on all 512
 * neighbourhoods.
 */
enum GolStatus golgol_next_cell_check(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GOLGOL_H */
