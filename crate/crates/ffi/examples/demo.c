#include <stdio.h>

#include "aloe.h"

int main(void) {
    AloeProblem *p = NULL;
    AloeStatus s = aloe_problem_polygon(360, 6.0, &p);
    if (s != ALOE_STATUS_OK) {
        fprintf(stderr, "%s\n", aloe_last_error());
        return 1;
    }
    AloeEstimateResult r;
    s = aloe_estimate(p, 10000, 1, 0, 0, &r);
    if (s != ALOE_STATUS_OK) {
        fprintf(stderr, "%s\n", aloe_last_error());
        aloe_problem_free(p);
        return 1;
    }
    printf("mu_hat %.6e se %.2e union bound %.6e\n", r.mu_hat, r.se, r.union_bound);
    aloe_problem_free(p);
    return 0;
}
