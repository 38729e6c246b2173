/* Links against libwforge_ffi and exercises the handle life cycle. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "wforge.h"

#define CHECK(cond)                                                      \
  do {                                                                   \
    if (!(cond)) {                                                       \
      const char *msg = wforge_last_error_message();                     \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond,     \
              msg ? msg : "no message");                                 \
      return 1;                                                          \
    }                                                                    \
  } while (0)

int main(void) {
  WforgeSurface *s = NULL;
  CHECK(wforge_surface_new("clifford", 48, 48, &s) == WFORGE_STATUS_OK);
  size_t nx = 0, ny = 0;
  CHECK(wforge_surface_grid(s, &nx, &ny) == WFORGE_STATUS_OK && nx == 48 && ny == 48);

  double w = 0.0;
  CHECK(wforge_willmore_energy(s, &w) == WFORGE_STATUS_OK);
  CHECK(fabs(w - 2.0 * M_PI * M_PI) < 1e-6);

  double *v = malloc(4 * nx * ny * sizeof(double));
  CHECK(wforge_surface_vertices(s, v, 4 * nx * ny) == WFORGE_STATUS_OK);
  CHECK(fabs(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3] - 1.0) < 1e-12);
  CHECK(wforge_surface_vertices(s, v, 3) == WFORGE_STATUS_INVALID_ARGUMENT);
  CHECK(wforge_last_error_message() != NULL);
  free(v);

  char *json = NULL;
  CHECK(wforge_analysis_report_json(s, &json) == WFORGE_STATUS_OK);
  CHECK(strstr(json, "\"willmore_energy\"") != NULL);
  wforge_string_free(json);

  /* The torus is not simply connected: no Darboux transform. */
  CHECK(wforge_darboux_report_json(s, 2.0, 0.0, WFORGE_CONJUGATION_T_INV_S_T, &json) ==
        WFORGE_STATUS_TRANSPORT);
  wforge_surface_free(s);

  CHECK(wforge_surface_new("no_such_surface", 16, 16, &s) == WFORGE_STATUS_BAD_SPEC);
  CHECK(s == NULL);
  CHECK(wforge_surface_new(NULL, 16, 16, &s) == WFORGE_STATUS_NULL_POINTER);

  printf("wforge %s: C smoke test passed\n", wforge_version());
  return 0;
}
