/* Build: cargo build -p corrlab-ffi --release
 *        cc smoke.c -I../include -L../../../target/release -l:libcorrlab_ffi.a -lm -lpthread -ldl -o smoke */
#include <stdio.h>
#include "corrlab.h"

int main(void) {
    CorrlabSimplex *s = NULL;
    if (corrlab_random_simplex(42, 3, true, &s) != CORRLAB_STATUS_OK) {
        fprintf(stderr, "%s\n", corrlab_last_error());
        return 1;
    }
    char *json = NULL;
    corrlab_simplex_to_json(s, &json);
    char *report = NULL;
    CorrlabStatus st = corrlab_validate_json(json, 1e-9, &report);
    printf("corrlab %s: validate -> %d\n%s\n", corrlab_version(), (int)st, report);

    char *k0 = NULL;
    if (corrlab_extend_k0(s, false, &k0) == CORRLAB_STATUS_OK)
        printf("K0 extension: %s\n", k0);

    corrlab_string_free(k0);
    corrlab_string_free(report);
    corrlab_string_free(json);
    corrlab_simplex_free(s);
    return st == CORRLAB_STATUS_OK ? 0 : 1;
}
