/* vector_check - replay a kernel vector file against m_runtime.h.
 *
 * Usage: vector_check kernel_vectors.tsv
 *
 * Each data row is "op<TAB>a<TAB>b<TAB>expected" where operands and the
 * expected result are either "u" (undef) or 16 hex digits holding the
 * big-endian bit pattern of a binary64.  Unary rows carry "-" in the b
 * column.  Lines starting with '#' are comments.
 *
 * Exits 0 when every row matches bit for bit, 1 otherwise.
 */
#include <stdint.h>
#include <stdio.h>
#include <string.h>

#include "m_runtime.h"

static int parse_value(const char *tok, m_value *out, int *is_value) {
    uint64_t bits;
    double d;
    if (strcmp(tok, "-") == 0) {
        *is_value = 0;
        return 1;
    }
    *is_value = 1;
    if (strcmp(tok, "u") == 0) {
        *out = m_undef();
        return 1;
    }
    if (sscanf(tok, "%16llx", (unsigned long long *)&bits) != 1) return 0;
    memcpy(&d, &bits, 8);
    *out = m_lit(d);
    return 1;
}

static void format_value(m_value v, char *buf) {
    uint64_t bits;
    if (!v.def) {
        strcpy(buf, "u");
        return;
    }
    memcpy(&bits, &v.val, 8);
    sprintf(buf, "%016llx", (unsigned long long)bits);
}

static int apply(const char *op, m_value a, m_value b, int has_b,
                 m_value *out) {
    if (has_b) {
        if (strcmp(op, "add") == 0) *out = m_add(a, b);
        else if (strcmp(op, "sub") == 0) *out = m_sub(a, b);
        else if (strcmp(op, "mul") == 0) *out = m_mul(a, b);
        else if (strcmp(op, "div") == 0) *out = m_div(a, b);
        else if (strcmp(op, "le") == 0) *out = m_le(a, b);
        else if (strcmp(op, "lt") == 0) *out = m_lt(a, b);
        else if (strcmp(op, "gt") == 0) *out = m_gt(a, b);
        else if (strcmp(op, "ge") == 0) *out = m_ge(a, b);
        else if (strcmp(op, "eq") == 0) *out = m_eq(a, b);
        else if (strcmp(op, "ne") == 0) *out = m_ne(a, b);
        else if (strcmp(op, "and") == 0) *out = m_and(a, b);
        else if (strcmp(op, "or") == 0) *out = m_or(a, b);
        else if (strcmp(op, "min") == 0) *out = m_min(a, b);
        else if (strcmp(op, "max") == 0) *out = m_max(a, b);
        else return 0;
        return 1;
    }
    if (strcmp(op, "neg") == 0) *out = m_neg(a);
    else if (strcmp(op, "not") == 0) *out = m_not(a);
    else if (strcmp(op, "round") == 0) *out = m_round(a);
    else if (strcmp(op, "truncate") == 0) *out = m_truncate(a);
    else if (strcmp(op, "abs") == 0) *out = m_abs(a);
    else if (strcmp(op, "pos") == 0) *out = m_pos(a);
    else if (strcmp(op, "pos_or_null") == 0) *out = m_pos_or_null(a);
    else if (strcmp(op, "null") == 0) *out = m_null(a);
    else if (strcmp(op, "present") == 0) *out = m_present(a);
    else if (strcmp(op, "cast") == 0) *out = m_cast(a);
    else return 0;
    return 1;
}

int main(int argc, char **argv) {
    FILE *fh;
    char line[256];
    long total = 0, mismatches = 0;

    if (argc != 2) {
        fprintf(stderr, "usage: %s kernel_vectors.tsv\n", argv[0]);
        return 1;
    }
    fh = fopen(argv[1], "r");
    if (!fh) {
        fprintf(stderr, "cannot open %s\n", argv[1]);
        return 1;
    }
    while (fgets(line, sizeof line, fh)) {
        char op[32], ta[32], tb[32], tw[32];
        m_value a, b, want, got;
        int has_a, has_b, want_is_value;
        char got_buf[32], want_buf[32];

        if (line[0] == '#' || line[0] == '\n') continue;
        if (sscanf(line, "%31s %31s %31s %31s", op, ta, tb, tw) != 4) {
            fprintf(stderr, "bad row: %s", line);
            fclose(fh);
            return 1;
        }
        if (!parse_value(ta, &a, &has_a) || !has_a ||
            !parse_value(tb, &b, &has_b) ||
            !parse_value(tw, &want, &want_is_value) || !want_is_value) {
            fprintf(stderr, "bad operand in row: %s", line);
            fclose(fh);
            return 1;
        }
        if (!apply(op, a, b, has_b, &got)) {
            fprintf(stderr, "unknown op in row: %s", line);
            fclose(fh);
            return 1;
        }
        total++;
        format_value(got, got_buf);
        format_value(want, want_buf);
        if (strcmp(got_buf, want_buf) != 0) {
            mismatches++;
            printf("MISMATCH %s %s %s: want %s got %s\n",
                   op, ta, tb, want_buf, got_buf);
        }
    }
    fclose(fh);
    printf("%ld vectors, %ld mismatches\n", total, mismatches);
    return mismatches == 0 ? 0 : 1;
}
