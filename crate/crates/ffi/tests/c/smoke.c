#include <math.h>
#include <stdio.h>
#include <string.h>

#include "signembed.h"

#define CHECK(cond)                                                     \
  do {                                                                  \
    if (!(cond)) {                                                      \
      fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
      return 1;                                                         \
    }                                                                   \
  } while (0)

int main(void) {
  int8_t xi[4] = {1, 1, 1, 1};
  size_t rows[2] = {0, 1};
  SeOperator *op = NULL;
  CHECK(se_operator_circulant(xi, 4, rows, 2, &op) == SE_STATUS_OK);

  size_t m = 0, n = 0;
  CHECK(se_operator_dims(op, &m, &n) == SE_STATUS_OK);
  CHECK(m == 2 && n == 4);

  double dense[8];
  CHECK(se_operator_materialize(op, dense, 8) == SE_STATUS_OK);
  for (int i = 0; i < 8; i++) CHECK(fabs(dense[i] - 1.0 / sqrt(2.0)) < 1e-15);

  double x[4] = {1, 2, 3, 4}, y[2];
  CHECK(se_operator_apply(op, x, 4, y, 2) == SE_STATUS_OK);
  CHECK(fabs(y[0] - 10.0 / sqrt(2.0)) < 1e-12 && fabs(y[1] - 10.0 / sqrt(2.0)) < 1e-12);

  CHECK(se_operator_apply(op, x, 3, y, 2) == SE_STATUS_USAGE);
  CHECK(strlen(se_last_error_message()) > 0);
  CHECK(se_operator_dims(NULL, &m, &n) == SE_STATUS_NULL_POINTER);

  SeTestSet *t = NULL;
  CHECK(se_test_set_sparse_sphere(4, 2, &t) == SE_STATUS_OK);
  double value = -1;
  int32_t exact = 0;
  CHECK(se_sup_distortion(op, t, 1, 0, &value, &exact) == SE_STATUS_OK);
  CHECK(exact == 1 && value >= 0);

  se_test_set_free(t);
  se_operator_free(op);
  se_operator_free(NULL);
  printf("ok\n");
  return 0;
}
