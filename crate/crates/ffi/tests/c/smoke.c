#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "meanfield.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            const char *e = mf_last_error();                          \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,   \
                    #cond, e ? e : "no error");                       \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    MfGrid *grid = NULL;
    CHECK(mf_grid_new(64, &grid) == MF_STATUS_OK);
    CHECK(mf_grid_n(grid) == 64);

    MfGrid *bad = NULL;
    CHECK(mf_grid_new(3, &bad) == MF_STATUS_INVALID_ARGUMENT);
    CHECK(bad == NULL && mf_last_error() != NULL);

    size_t n = 64, len = n * n;
    double *values = malloc(len * sizeof *values);
    for (size_t k = 0; k < len; k++)
        values[k] = cos(2.0 * M_PI * (double)(k % n) / (double)n);
    MfField *field = NULL;
    CHECK(mf_field_new(grid, values, len, &field) == MF_STATUS_OK);

    MfEnergy e;
    CHECK(mf_energy(field, 0.0, 0.0, &e) == MF_STATUS_OK);
    CHECK(fabs(e.dirichlet - M_PI * M_PI) < 1e-10);

    MfRegion r;
    CHECK(mf_in_region(30.0, 5.0, &r) == MF_STATUS_OK && r.in_region);

    MfSolveOptions opts = mf_solve_options_default();
    CHECK(opts.nodes == 24);
    MfSolveResult *res = NULL;
    CHECK(mf_solve(grid, 10.0, 10.0, &opts, &res) == MF_STATUS_OUTSIDE_REGION);
    CHECK(res == NULL);

    printf("meanfield %s: threshold %.9f\n", mf_version(), mf_two_sided_threshold());
    mf_field_free(field);
    mf_grid_free(grid);
    free(values);
    return 0;
}
