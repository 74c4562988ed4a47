#ifndef BRATTELI_H
#define BRATTELI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BrStatus {
  BR_STATUS_OK = 0,
  BR_STATUS_NULL_ARGUMENT = 1,
  BR_STATUS_INVALID_UTF8 = 2,
  BR_STATUS_INVALID_PARAMETER = 3,
  BR_STATUS_SPEC = 4,
  BR_STATUS_TRUNCATION = 5,
  BR_STATUS_UNSUPPORTED = 6,
  BR_STATUS_DOMAIN = 7,
  BR_STATUS_PANIC = 8,
} BrStatus;

/*
 Opaque diagram handle.
 */
typedef struct BrDiagram BrDiagram;

/*
 Opaque measure handle.
 */
typedef struct BrMeasure BrMeasure;

/*
 Builds a diagram from a JSON spec. The handle must be released with `br_diagram_free`.

 # Safety
 `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BrStatus br_diagram_from_json(const char *json, struct BrDiagram **out);

/*
 # Safety
 `d` must come from `br_diagram_from_json` and not be freed twice.
 */
void br_diagram_free(struct BrDiagram *d);

/*
 Heights of the level-n window as JSON. Release the string with `br_string_free`.

 # Safety
 `d` must be a live handle and `out` a valid pointer.
 */
enum BrStatus br_heights_json(const struct BrDiagram *d,
                              uintptr_t level,
                              uint64_t window,
                              char **out);

/*
 Builds a measure from JSON such as {"measure":"binfty-mu-a","a":"1/2"}.

 # Safety
 `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BrStatus br_measure_from_json(const char *json, struct BrMeasure **out);

/*
 # Safety
 `m` must come from `br_measure_from_json` and not be freed twice.
 */
void br_measure_free(struct BrMeasure *m);

/*
 Cylinder mass p^(n)_w as a rational string; the vertex is JSON (3 or [[1,2],[4,1]]).

 # Safety
 `m` must be a live handle, `vertex_json` NUL-terminated and `out` valid.
 */
enum BrStatus br_cylinder_mass(const struct BrMeasure *m,
                               uintptr_t level,
                               const char *vertex_json,
                               char **out);

/*
 Runs the exact invariance check; `all_pass` receives 1 or 0.

 # Safety
 `m` must be a live handle and `all_pass` valid.
 */
enum BrStatus br_verify_invariance(const struct BrMeasure *m,
                                   uintptr_t n_max,
                                   uint64_t bound,
                                   int32_t *all_pass);

/*
 # Safety
 `s` must be a string returned by this library.
 */
void br_string_free(char *s);

/*
 Message of the last failure on this thread, or NULL. Valid until the next failing call.
 */
const char *br_last_error_message(void);

#endif  /* BRATTELI_H */
