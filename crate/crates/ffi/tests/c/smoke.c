#include <stdio.h>
#include <string.h>
#include "rbc.h"

#define CHECK(x) do { if (!(x)) { fprintf(stderr, "failed: %s (%s)\n", #x, rbc_last_error()); return 1; } } while (0)

int main(void) {
    RbcSession *s = NULL;
    CHECK(rbc_session_run("M = 2\nrounds = 4\nunveil_at = 4\n", 1, &s) == RBC_ERROR_OK);
    RbcStatus st;
    uint8_t bit = 9;
    CHECK(rbc_session_status(s, &st, &bit) == RBC_ERROR_OK);
    CHECK(st == RBC_STATUS_UNVEILED && bit == 1);

    char *text = NULL;
    CHECK(rbc_session_transcript(s, &text) == RBC_ERROR_OK);
    RbcTranscript *t = NULL;
    CHECK(rbc_transcript_parse(text, &t) == RBC_ERROR_OK);
    uint8_t clean = 0;
    CHECK(rbc_transcript_verify(t, &clean, &st, &bit) == RBC_ERROR_OK);
    CHECK(clean == 1 && st == RBC_STATUS_UNVEILED && bit == 1);
    rbc_transcript_free(t);
    rbc_string_free(text);
    rbc_session_free(s);

    CHECK(rbc_session_run("delta_t = 3\n", 0, &s) == RBC_ERROR_INVALID_CONFIG);
    CHECK(strstr(rbc_last_error(), "delta_t") != NULL);

    uint64_t a, b;
    CHECK(rbc_round_bits(200, 2, &a, &b) == RBC_ERROR_OK && a == 7041 && b == 6400);
    double p;
    CHECK(rbc_cheat_bound(3, &p) == RBC_ERROR_OUT_OF_RANGE);
    printf("ok\n");
    return 0;
}
