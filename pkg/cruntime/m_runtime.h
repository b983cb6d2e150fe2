/* m_runtime.h - the M value kernel for generated C translation units.
 *
 * A value is either undef or an IEEE-754 binary64 scalar.  The undef
 * propagation rules are operator-specific:
 *
 *   +, -        one undef operand behaves like 0; both undef -> undef
 *   *, /        undef is absorbing
 *   comparisons, &&, ||   undef is absorbing; results are 1.0 / 0.0
 *   division by a defined 0 yields 0 (never inf or NaN)
 *   min, max    both undef -> undef; a single undef behaves like 0;
 *               ties keep the first argument (visible with signed zeros)
 *
 * Every function here must match the reference kernel bit for bit.
 * Compile with strict IEEE-754 semantics: C99 or later, and never with
 * -ffast-math or -funsafe-math-optimizations.
 */
#ifndef M_RUNTIME_H
#define M_RUNTIME_H

#include <math.h>

typedef struct {
    unsigned char def; /* 0 = undef, 1 = val holds a binary64 */
    double val;
} m_value;

static m_value m_undef(void) {
    m_value v;
    v.def = 0;
    v.val = 0.0;
    return v;
}

static m_value m_lit(double d) {
    m_value v;
    v.def = 1;
    v.val = d;
    return v;
}

static int m_truthy(m_value a) {
    return a.def && a.val != 0.0;
}

/* arithmetic ------------------------------------------------------------ */

static m_value m_add(m_value a, m_value b) {
    if (!a.def && !b.def) return m_undef();
    return m_lit((a.def ? a.val : 0.0) + (b.def ? b.val : 0.0));
}

static m_value m_sub(m_value a, m_value b) {
    if (!a.def && !b.def) return m_undef();
    return m_lit((a.def ? a.val : 0.0) - (b.def ? b.val : 0.0));
}

static m_value m_mul(m_value a, m_value b) {
    if (!a.def || !b.def) return m_undef();
    return m_lit(a.val * b.val);
}

static m_value m_div(m_value a, m_value b) {
    if (!a.def || !b.def) return m_undef();
    if (b.val == 0.0) return m_lit(0.0);
    return m_lit(a.val / b.val);
}

static m_value m_neg(m_value a) {
    if (!a.def) return m_undef();
    return m_lit(-a.val);
}

/* comparisons and logic: undef absorbs ---------------------------------- */

static m_value m_le(m_value a, m_value b) {
    if (!a.def || !b.def) return m_undef();
    return m_lit(a.val <= b.val ? 1.0 : 0.0);
}

static m_value m_lt(m_value a, m_value b) {
    if (!a.def || !b.def) return m_undef();
    return m_lit(a.val < b.val ? 1.0 : 0.0);
}

static m_value m_gt(m_value a, m_value b) {
    if (!a.def || !b.def) return m_undef();
    return m_lit(a.val > b.val ? 1.0 : 0.0);
}

static m_value m_ge(m_value a, m_value b) {
    if (!a.def || !b.def) return m_undef();
    return m_lit(a.val >= b.val ? 1.0 : 0.0);
}

static m_value m_eq(m_value a, m_value b) {
    if (!a.def || !b.def) return m_undef();
    return m_lit(a.val == b.val ? 1.0 : 0.0);
}

static m_value m_ne(m_value a, m_value b) {
    if (!a.def || !b.def) return m_undef();
    return m_lit(a.val != b.val ? 1.0 : 0.0);
}

static m_value m_and(m_value a, m_value b) {
    if (!a.def || !b.def) return m_undef();
    return m_lit((a.val != 0.0 && b.val != 0.0) ? 1.0 : 0.0);
}

static m_value m_or(m_value a, m_value b) {
    if (!a.def || !b.def) return m_undef();
    return m_lit((a.val != 0.0 || b.val != 0.0) ? 1.0 : 0.0);
}

static m_value m_not(m_value a) {
    if (!a.def) return m_undef();
    return m_lit(a.val == 0.0 ? 1.0 : 0.0);
}

/* builtins --------------------------------------------------------------- */

/* Legal rounding: shift by 0.50005 away from zero, truncate toward zero. */
static m_value m_round(m_value a) {
    double shifted, r;
    if (!a.def) return m_undef();
    shifted = a.val < 0.0 ? a.val - 0.50005 : a.val + 0.50005;
    r = trunc(shifted);
    /* the reference truncates through an integer, so zero is always +0.0 */
    if (r == 0.0) r = 0.0;
    return m_lit(r);
}

/* Legal truncation: floor(f + 1e-6). */
static m_value m_truncate(m_value a) {
    double r;
    if (!a.def) return m_undef();
    r = floor(a.val + 0.000001);
    if (r == 0.0) r = 0.0;
    return m_lit(r);
}

static m_value m_abs(m_value a) {
    if (!a.def) return m_undef();
    /* -0.0 >= 0 holds, so -0.0 passes through unchanged, like the
     * reference `a if a >= 0 else -a` */
    return m_lit(a.val >= 0.0 ? a.val : -a.val);
}

static m_value m_pos(m_value a) {
    if (!a.def) return m_undef();
    return m_lit(a.val > 0.0 ? 1.0 : 0.0);
}

static m_value m_pos_or_null(m_value a) {
    if (!a.def) return m_undef();
    return m_lit(a.val >= 0.0 ? 1.0 : 0.0);
}

static m_value m_null(m_value a) {
    if (!a.def) return m_undef();
    return m_lit(a.val == 0.0 ? 1.0 : 0.0);
}

static m_value m_present(m_value a) {
    return m_lit(a.def ? 1.0 : 0.0);
}

/* cast: undef reads as 0; defined values (including -0.0) pass through */
static m_value m_cast(m_value a) {
    if (!a.def) return m_lit(0.0);
    return a;
}

static m_value m_min(m_value a, m_value b) {
    double x, y;
    if (!a.def && !b.def) return m_undef();
    x = a.def ? a.val : 0.0;
    y = b.def ? b.val : 0.0;
    return m_lit(y < x ? y : x); /* tie keeps the first argument */
}

static m_value m_max(m_value a, m_value b) {
    double x, y;
    if (!a.def && !b.def) return m_undef();
    x = a.def ? a.val : 0.0;
    y = b.def ? b.val : 0.0;
    return m_lit(y > x ? y : x); /* tie keeps the first argument */
}

/* conditional expression: an undef guard makes the whole thing undef */
static m_value m_ite(m_value c, m_value t, m_value f) {
    if (!c.def) return m_undef();
    return c.val != 0.0 ? t : f;
}

/* array read: undef index -> undef; negative -> 0; at-or-past the end
 * (before or after truncation) -> undef */
static m_value m_index(const m_value *arr, int len, m_value idx) {
    int k;
    if (!idx.def) return m_undef();
    if (idx.val < 0.0) return m_lit(0.0);
    if (idx.val >= (double)len) return m_undef();
    k = (int)floor(idx.val + 0.000001);
    if (k >= len) return m_undef();
    return arr[k];
}

#endif /* M_RUNTIME_H */
