/* The public header must compile as plain C. */
#include <stdio.h>

#include "fif/fif.h"

int main(void) {
  fif_model* m = NULL;
  if (fif_model_quadratic(0.785398, 0.5, &m) != FIF_OK) return 1;
  if (fif_model_size(m) != 10) return 1;
  fif_model_free(m);
  puts(fif_status_string(FIF_TRUNCATED_FILE));
  return 0;
}
