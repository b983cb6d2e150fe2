#!/usr/bin/env python3
"""Regenerate the bundled corpus under corpus/.

The rule set is a toy income-tax computation: category incomes, a
progressive bracket schedule with household quotient, deduction/credit
families, deposit relief, late penalties and a pile of statistical
side-computations that exercise dead-code elimination.

Test case expectations are filled in from the reference interpreter, so
rerunning this script after a semantics change refreshes the corpus.
"""

from __future__ import annotations

import os
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))

CORPUS = os.path.join(ROOT, "corpus")

DEDUCTIONS = [
    # (name, claim input, cap rate, cap base, credit rate)
    ("CHARITY", "CHARITY_GIFTS", 0.2, 0, 0.66),
    ("CHILDCARE", "CHILDCARE_COSTS", 0.1, 1750, 0.5),
    ("UNION", "UNION_DUES", 0.01, 100, 0.66),
    ("HOMEIMP", "HOME_IMPROVEMENT", 0.05, 500, 0.3),
    ("EDU", "EDU_EXPENSES", 0.04, 400, 0.25),
    ("MEDICAL", "MEDICAL_EXTRA", 0.08, 250, 0.4),
    ("GREEN", "GREEN_RENOVATION", 0.12, 1000, 0.35),
    ("PENSION", "PENSION_PREMIUM", 0.1, 0, 0.2),
]

BRACKET_LOWER = [0, 1500, 3000, 5000, 8000, 12000, 17000, 23000, 30000, 40000, 55000, 75000]
BRACKET_RATE = [0.0, 0.05, 0.09, 0.12, 0.16, 0.2, 0.24, 0.28, 0.32, 0.36, 0.41, 0.45]

CAT_RATE = [0.72, 0.75, 0.5, 0.66, 0.625, 0.9]

BENEFITS = [
    # (threshold, rate) for means-tested benefits
    (9000, 0.3), (12000, 0.22), (15000, 0.18), (18000, 0.15), (21000, 0.12),
    (24000, 0.1), (27000, 0.08), (30000, 0.06), (34000, 0.04), (38000, 0.02),
]

REGION = [
    # (weight, cap) for regional surcharges (statistical, unused downstream)
    (0.011, 300), (0.013, 280), (0.008, 400), (0.021, 250), (0.016, 320),
    (0.009, 500), (0.025, 200), (0.014, 350), (0.019, 275), (0.012, 450),
]

INSTALL_CUM = [0.083, 0.167, 0.25, 0.333, 0.417, 0.5, 0.583, 0.667, 0.75, 0.833, 0.917, 1.0]

SECTOR = [
    # (gross weight, floor, levy rate) for sector statistics
    (0.03, 120, 0.02), (0.05, 80, 0.015), (0.02, 200, 0.03), (0.07, 60, 0.01),
    (0.04, 150, 0.025), (0.06, 90, 0.018), (0.01, 300, 0.04), (0.08, 50, 0.012),
    (0.035, 110, 0.022), (0.045, 130, 0.028),
]

ALLOWANCE = [
    # (threshold, rate) for the low-income allowance schedule
    (2000, 0.5), (3000, 0.45), (4000, 0.4), (5000, 0.35), (6000, 0.3),
    (7000, 0.26), (8000, 0.22), (9000, 0.18), (10000, 0.14), (11000, 0.1),
    (12000, 0.07), (13000, 0.04),
]


def gen_income_rules() -> str:
    L = []
    L.append("# Income aggregation, household quotient and the bracket schedule.")
    L.append("")
    L.append('SALARY : input taxbenefit : "main declarant salary";')
    L.append('SPOUSE_SALARY : input taxbenefit : "spouse salary";')
    L.append('NB_CHILDREN : input : "number of dependent children";')
    L.append('NB_CHILDREN_YOUNG : input : "children under six";')
    L.append('RENT_INCOME : input : "gross rental income";')
    L.append('CAPITAL_INCOME : input : "gross capital income";')
    L.append('OVERTIME_PAY : input : "overtime pay";')
    L.append('FREELANCE_INCOME : input : "gross freelance income";')
    L.append('MONTHS_LATE : input : "months the filing is late";')
    for _, claim, _, _, _ in DEDUCTIONS:
        L.append(f'{claim} : input : "deductible expense claim";')
    for dep in ("DEP_SAVINGS", "DEP_RETIRE", "DEP_HOUSING", "DEP_EDU"):
        L.append(f'{dep} : input deposit : "tax-sheltered deposit";')
    L.append('INCOME_CAT : input : "income by category" array[6];')
    L.append('DEDUCTION_CAT : input : "deduction by category" array[6];')
    L.append("")
    L.append('TAX_FINAL : output taxbenefit : "final tax liability";')
    L.append('NET_INCOME : output : "net income after tax";')
    L.append('TOTAL_CREDITS : output : "sum of tax credits";')
    L.append('TOTAL_BENEFITS : output taxbenefit : "means-tested benefits";')
    L.append('PEN_TOTAL : output penalty : "late-filing penalty";')
    L.append('TAX_NO_DEPOSIT : output : "liability ignoring deposits (driver)";')
    L.append('DEPOSIT_GAIN : output : "tax saved by deposits (driver)";')
    L.append('FILING_CLASS : output : "liability class (driver)";')
    for k in range(len(BENEFITS)):
        L.append(f'BEN{k:02d}_AMT : intermediate taxbenefit : "benefit {k} amount";')
    for name in ("PEN_BASE", "PEN_ACCRUED", "PEN_GROSS"):
        L.append(f'{name} : intermediate penalty : "penalty component";')
    L.append("")
    L.append('A031 : exception : "negative salary";')
    L.append('A032 : exception : "negative spouse salary";')
    L.append('A100 : exception : "negative child count";')
    L.append('A101 : exception : "fractional child count";')
    L.append('A200 : exception : "deduction claims exceed income";')
    L.append('A300 : exception : "implausible lateness";')
    L.append("")
    L.append("# --- category incomes ---")
    for i, rate in enumerate(CAT_RATE):
        L.append(f"CAT{i}_RAW = max(0, INCOME_CAT[{i}] - DEDUCTION_CAT[{i}]);")
        L.append(f"CAT{i}_NET = round(CAT{i}_RAW * {rate});")
        L.append(f"CAT{i}_SOC = round(CAT{i}_NET * 0.097);")
    L.append("CAT_TOTAL = " + " + ".join(f"CAT{i}_NET" for i in range(6)) + ";")
    L.append("CAT_SOC_TOTAL = " + " + ".join(f"CAT{i}_SOC" for i in range(6)) + ";")
    L.append("")
    L.append("# --- adjusted category array (flat-rate variant) ---")
    L.append("ADJ_CAT[X, 6] = round(INCOME_CAT[X] * 0.75);")
    L.append("RETAINED_CAT[X, 6] = max(0, ADJ_CAT[X] - 100);")
    L.append("ADJ_TOTAL = " + " + ".join(f"RETAINED_CAT[{i}]" for i in range(6)) + ";")
    L.append("")
    L.append("# --- wages and other income ---")
    L.append("WAGE_BASE = SALARY + SPOUSE_SALARY;")
    L.append("OVERTIME_EXEMPT = min(OVERTIME_PAY, 5000);")
    L.append("OVERTIME_EXCESS = max(0, OVERTIME_PAY - 5000);")
    L.append("FREELANCE_NET = round(FREELANCE_INCOME * 0.66);")
    L.append("RENT_NET = round(RENT_INCOME * 0.7);")
    L.append("CAPITAL_NET = round(CAPITAL_INCOME * 0.6);")
    L.append("EMP_DEDUCTION = min(round(WAGE_BASE * 0.1), 14171);")
    L.append("EMP_DEDUCTION_F = max(EMP_DEDUCTION, if WAGE_BASE > 0 then 495 else 0 endif);")
    L.append("GROSS_TOTAL = WAGE_BASE + OVERTIME_EXCESS + FREELANCE_NET + RENT_NET"
             " + CAPITAL_NET + CAT_TOTAL + ADJ_TOTAL;")
    L.append("TAXABLE = max(0, GROSS_TOTAL - EMP_DEDUCTION_F);")
    L.append("")
    L.append("# --- household quotient ---")
    L.append("CHILD_PARTS = min(NB_CHILDREN, 2) * 0.5 + max(0, NB_CHILDREN - 2);")
    L.append("YOUNG_BONUS = min(NB_CHILDREN_YOUNG, NB_CHILDREN) * 0.25;")
    L.append("PARTS = 1 + present(SPOUSE_SALARY) + CHILD_PARTS + YOUNG_BONUS;")
    L.append("QUOTIENT_INCOME = round(TAXABLE / PARTS);")
    L.append("")
    L.append("# --- progressive schedule on the quotient ---")
    for i in range(len(BRACKET_LOWER)):
        lo = BRACKET_LOWER[i]
        width = (BRACKET_LOWER[i + 1] - lo) if i + 1 < len(BRACKET_LOWER) else 999999999
        L.append(f"BR{i:02d}_EXCESS = max(0, QUOTIENT_INCOME - {lo});")
        L.append(f"BR{i:02d}_SLICE = min(BR{i:02d}_EXCESS, {width});")
        L.append(f"BR{i:02d}_TAX = round(BR{i:02d}_SLICE * {BRACKET_RATE[i]});")
    L.append("BR_SUM = " + " + ".join(f"BR{i:02d}_TAX" for i in range(len(BRACKET_LOWER))) + ";")
    L.append("TAX_QUOTIENT = round(BR_SUM * PARTS);")
    L.append("")
    L.append("# --- decote for small liabilities ---")
    L.append("DECOTE_THRESHOLD = if PARTS > 1.5 then 3045 else 1840 endif;")
    L.append("DECOTE = max(0, round(DECOTE_THRESHOLD * 0.45) - round(TAX_QUOTIENT * 0.45));")
    L.append("TAX_AFTER_DECOTE = max(0, TAX_QUOTIENT - DECOTE);")
    L.append("")
    L.append("# --- statistical revaluation ladder (feeds reports only) ---")
    L.append("REVAL00 = TAX_AFTER_DECOTE;")
    for k in range(1, 16):
        L.append(f"REVAL{k:02d} = round(REVAL{k - 1:02d} * 1.004 + 2);")
    L.append("REVAL_FINAL = REVAL15;")
    L.append("")
    return "\n".join(L) + "\n"


def gen_credit_rules() -> str:
    L = []
    L.append("# Deductions, credits, deposits, penalties and reporting families.")
    L.append("")
    L.append("# --- deduction/credit families ---")
    for name, claim, cap_rate, cap_base, credit_rate in DEDUCTIONS:
        L.append(f"D_{name}_CLAIM = max(0, {claim});")
        L.append(f"D_{name}_CAP = round(TAXABLE * {cap_rate} + {cap_base});")
        L.append(f"D_{name}_ALLOWED = min(D_{name}_CLAIM, D_{name}_CAP);")
        L.append(f"D_{name}_CREDIT = round(D_{name}_ALLOWED * {credit_rate});")
    L.append("D_TOTAL_CLAIMED = " + " + ".join(f"D_{n}_CLAIM" for n, *_ in DEDUCTIONS) + ";")
    L.append("D_TOTAL_CREDIT = " + " + ".join(f"D_{n}_CREDIT" for n, *_ in DEDUCTIONS) + ";")
    L.append("")
    L.append("# --- tax-sheltered deposits ---")
    L.append("DEP_TOTAL = DEP_SAVINGS + DEP_RETIRE + DEP_HOUSING + DEP_EDU;")
    L.append("DEP_CAPPED = min(max(0, DEP_TOTAL), 6000);")
    L.append("DEP_RELIEF = round(DEP_CAPPED * 0.22);")
    L.append("DEP_SAVINGS_BONUS = round(min(DEP_SAVINGS, 1000) * 0.5);")
    L.append("DEP_RETIRE_RELIEF = round(min(DEP_RETIRE, 4000) * 0.1);")
    L.append("DEP_EXTRA = DEP_SAVINGS_BONUS + DEP_RETIRE_RELIEF;")
    L.append("DEP_SCORE = pos(DEP_TOTAL);")
    L.append("TOTAL_CREDITS = D_TOTAL_CREDIT + DEP_RELIEF;")
    L.append("")
    L.append("# --- means-tested benefits ---")
    for k, (threshold, rate) in enumerate(BENEFITS):
        L.append(f"BEN{k:02d}_BASE = max(0, {threshold} - TAXABLE);")
        L.append(f"BEN{k:02d}_AMT = round(BEN{k:02d}_BASE * {rate});")
    L.append("TOTAL_BENEFITS = " + " + ".join(f"BEN{k:02d}_AMT" for k in range(len(BENEFITS))) + ";")
    L.append("")
    L.append("# --- late-filing penalties ---")
    L.append("PEN_RATE = if MONTHS_LATE > 12 then 0.4 else 0.1 endif;")
    L.append("PEN_BASE = round(TAX_AFTER_DECOTE * PEN_RATE);")
    L.append("PEN_PER_MONTH = round(TAX_AFTER_DECOTE * 0.0075);")
    L.append("PEN_ACCRUED = round(PEN_PER_MONTH * min(MONTHS_LATE, 24));")
    L.append("PEN_GROSS = if MONTHS_LATE > 0 then PEN_BASE + PEN_ACCRUED else 0 endif;")
    L.append("PEN_CAP = round(TAX_AFTER_DECOTE * 0.5);")
    L.append("PEN_TOTAL = min(PEN_GROSS, PEN_CAP);")
    L.append("")
    L.append("# --- regional surcharge statistics (reporting only) ---")
    for k, (w, cap) in enumerate(REGION):
        L.append(f"RG{k:02d}_SURCHARGE = round(TAX_AFTER_DECOTE * {w});")
        L.append(f"RG{k:02d}_CAPPED = min(RG{k:02d}_SURCHARGE, {cap});")
        L.append(f"RG{k:02d}_NET = max(0, RG{k:02d}_CAPPED - 10);")
    L.append("")
    L.append("# --- monthly installment schedule (reporting only) ---")
    L.append("INST00_CUM = 0;")
    for m, c in enumerate(INSTALL_CUM, start=1):
        L.append(f"INST{m:02d}_CUM = round(TAX_AFTER_DECOTE * {c});")
        L.append(f"INST{m:02d}_DUE = max(0, INST{m:02d}_CUM - INST{m - 1:02d}_CUM);")
    L.append("")
    L.append("# --- sector levy statistics (reporting only) ---")
    for k, (w, base, r) in enumerate(SECTOR):
        L.append(f"SEC{k:02d}_SHARE = round(GROSS_TOTAL * {w});")
        L.append(f"SEC{k:02d}_FLOOR = max(SEC{k:02d}_SHARE, {base});")
        L.append(f"SEC{k:02d}_LEVY = round(SEC{k:02d}_FLOOR * {r});")
        L.append(f"SEC{k:02d}_NET = max(0, SEC{k:02d}_LEVY - 25);")
    L.append("")
    L.append("# --- low-income allowance schedule (reporting only) ---")
    for m, (thr, r) in enumerate(ALLOWANCE):
        L.append(f"ALW{m:02d}_RAW = max(0, {thr} - QUOTIENT_INCOME);")
        L.append(f"ALW{m:02d}_AMT = round(ALW{m:02d}_RAW * {r});")
    L.append("ALW_TOTAL = " + " + ".join(f"ALW{m:02d}_AMT" for m in range(len(ALLOWANCE))) + ";")
    L.append("")
    L.append("# --- final aggregation ---")
    L.append("TAX_BEFORE_CREDITS = TAX_AFTER_DECOTE + PEN_TOTAL;")
    L.append("TAX_FINAL = max(0, round(TAX_BEFORE_CREDITS - TOTAL_CREDITS - DEP_EXTRA));")
    L.append("NET_INCOME = round(GROSS_TOTAL - TAX_FINAL - CAT_SOC_TOTAL);")
    L.append("")
    L.append("# --- plausibility assertions ---")
    L.append("if SALARY < 0 then error A031;")
    L.append("if SPOUSE_SALARY < 0 then error A032;")
    L.append("if NB_CHILDREN < 0 then error A100;")
    L.append("if NB_CHILDREN != truncate(NB_CHILDREN) then error A101;")
    L.append("if D_TOTAL_CLAIMED > GROSS_TOTAL + 50000 then error A200;")
    L.append("if MONTHS_LATE > 60 then error A300;")
    L.append("")
    return "\n".join(L) + "\n"


DRIVER = '''\
# Driver: liability with and without deposits, plus a coarse
# classification of the result.

tax_only():
    TAX_FINAL, PEN_TOTAL <- call_m()

compute_baseline():
    # what the liability would be if no deposit had been made
    partition with deposit:
        TAX_FINAL, PEN_TOTAL <- tax_only()
    TAX_NO_DEPOSIT = TAX_FINAL
    del TAX_FINAL
    del PEN_TOTAL

classify():
    t = cast(TAX_FINAL)
    if t == 0:
        FILING_CLASS = 0
    else:
        if t <= 2000:
            FILING_CLASS = 1
        else:
            if t <= 10000:
                FILING_CLASS = 2
            else:
                FILING_CLASS = 3

main():
    have_income = present(SALARY) || present(SPOUSE_SALARY)
    if have_income == 0:
        TAX_FINAL = 0
        NET_INCOME = 0
        TOTAL_CREDITS = 0
        TOTAL_BENEFITS = 0
        PEN_TOTAL = 0
        DEPOSIT_GAIN = 0
        FILING_CLASS <- classify()
    else:
        if exists(deposit):
            TAX_NO_DEPOSIT <- compute_baseline()
        TAX_FINAL, NET_INCOME, TOTAL_CREDITS, TOTAL_BENEFITS, PEN_TOTAL <- call_m()
        if present(TAX_NO_DEPOSIT):
            gain = cast(TAX_NO_DEPOSIT) - cast(TAX_FINAL)
            if gain > 0:
                DEPOSIT_GAIN = gain
            else:
                DEPOSIT_GAIN = 0
        else:
            DEPOSIT_GAIN = 0
        FILING_CLASS <- classify()
'''

ALL_MAST = '''\
# Everything declared as input is an input; every output is kept.
[inputs]
*
[outputs]
*
'''

BASIC_MAST = '''\
# Simple filings: salary income only, no deposits, no itemized claims.
[inputs]
SALARY
SPOUSE_SALARY
NB_CHILDREN
[outputs]
TAX_FINAL
'''

TESTS_MAST = '''\
# Assumptions used when running the bundled test corpus.
[inputs]
*
[outputs]
TAX_FINAL
NET_INCOME
TOTAL_CREDITS
TOTAL_BENEFITS
PEN_TOTAL
TAX_NO_DEPOSIT
DEPOSIT_GAIN
FILING_CLASS
'''

# name -> (inputs, expected-error or None)
CASES: dict[str, tuple[dict, str | None]] = {
    "t01_single_low": ({"SALARY": 14000}, None),
    "t02_single_mid": ({"SALARY": 32000}, None),
    "t03_single_high": ({"SALARY": 95000}, None),
    "t04_couple": ({"SALARY": 30000, "SPOUSE_SALARY": 24000}, None),
    "t05_couple_children": (
        {"SALARY": 42000, "SPOUSE_SALARY": 18000, "NB_CHILDREN": 2}, None
    ),
    "t06_large_family": (
        {"SALARY": 55000, "SPOUSE_SALARY": 35000, "NB_CHILDREN": 4,
         "NB_CHILDREN_YOUNG": 2}, None
    ),
    "t07_deposits": (
        {"SALARY": 40000, "DEP_SAVINGS": 2000, "DEP_RETIRE": 3000}, None
    ),
    "t08_deposits_capped": (
        {"SALARY": 60000, "DEP_SAVINGS": 5000, "DEP_RETIRE": 4000,
         "DEP_HOUSING": 3000, "DEP_EDU": 1000}, None
    ),
    "t09_single_deposit": ({"SALARY": 25000, "DEP_EDU": 800}, None),
    "t10_overtime": ({"SALARY": 36000, "OVERTIME_PAY": 7400}, None),
    "t11_freelance_rent": (
        {"SALARY": 12000, "FREELANCE_INCOME": 21000, "RENT_INCOME": 6400}, None
    ),
    "t12_capital": ({"SALARY": 28000, "CAPITAL_INCOME": 15500}, None),
    "t13_categories": (
        {"SALARY": 20000, "INCOME_CAT[0]": 5000, "INCOME_CAT[2]": 3000,
         "DEDUCTION_CAT[0]": 1200, "INCOME_CAT[5]": 900}, None
    ),
    "t14_categories_full": (
        {"SALARY": 15000, "INCOME_CAT[0]": 1000, "INCOME_CAT[1]": 1100,
         "INCOME_CAT[2]": 1200, "INCOME_CAT[3]": 1300, "INCOME_CAT[4]": 1400,
         "INCOME_CAT[5]": 1500, "DEDUCTION_CAT[3]": 650}, None
    ),
    "t15_charity": ({"SALARY": 45000, "CHARITY_GIFTS": 3000}, None),
    "t16_many_claims": (
        {"SALARY": 70000, "CHARITY_GIFTS": 2500, "CHILDCARE_COSTS": 4200,
         "UNION_DUES": 180, "GREEN_RENOVATION": 8000, "PENSION_PREMIUM": 3600},
        None,
    ),
    "t17_late_filer": ({"SALARY": 38000, "MONTHS_LATE": 3}, None),
    "t18_very_late": ({"SALARY": 38000, "MONTHS_LATE": 18}, None),
    "t19_no_income": ({"NB_CHILDREN": 1}, None),
    "t20_spouse_only": ({"SPOUSE_SALARY": 26500, "NB_CHILDREN": 1}, None),
    "t21_benefits": ({"SALARY": 8000, "NB_CHILDREN": 2}, None),
    "t22_everything": (
        {"SALARY": 48000, "SPOUSE_SALARY": 31000, "NB_CHILDREN": 3,
         "NB_CHILDREN_YOUNG": 1, "RENT_INCOME": 5000, "CAPITAL_INCOME": 2000,
         "OVERTIME_PAY": 6000, "FREELANCE_INCOME": 4000, "CHARITY_GIFTS": 900,
         "CHILDCARE_COSTS": 2600, "DEP_SAVINGS": 1500, "DEP_RETIRE": 2500,
         "MONTHS_LATE": 1, "INCOME_CAT[1]": 2400, "DEDUCTION_CAT[1]": 400},
        None,
    ),
    "t23_err_negative_salary": ({"SALARY": -100}, "A031"),
    "t24_err_fractional_children": ({"SALARY": 30000, "NB_CHILDREN": 2.5}, "A101"),
    "t25_err_very_late": ({"SALARY": 30000, "MONTHS_LATE": 72}, "A300"),
}

EXPECT_VARS = [
    "TAX_FINAL", "NET_INCOME", "TOTAL_CREDITS", "TOTAL_BENEFITS",
    "PEN_TOTAL", "TAX_NO_DEPOSIT", "DEPOSIT_GAIN", "FILING_CLASS",
]


def write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(f"wrote {os.path.relpath(path, ROOT)}")


def main() -> None:
    os.makedirs(os.path.join(CORPUS, "tests"), exist_ok=True)
    write(os.path.join(CORPUS, "income_rules.m"), gen_income_rules())
    write(os.path.join(CORPUS, "credit_rules.m"), gen_credit_rules())
    write(os.path.join(CORPUS, "driver.mpp"), DRIVER)
    write(os.path.join(CORPUS, "all.mast"), ALL_MAST)
    write(os.path.join(CORPUS, "basic.mast"), BASIC_MAST)
    write(os.path.join(CORPUS, "tests.mast"), TESTS_MAST)

    from mtoy import frontend, interp, sema

    m = frontend.parse_m(
        [os.path.join(CORPUS, "income_rules.m"), os.path.join(CORPUS, "credit_rules.m")]
    )
    ordered = sema.order_rules(m)
    sema.typecheck(ordered)
    mpp = frontend.parse_mpp(os.path.join(CORPUS, "driver.mpp"), m)
    sema.check_kind_uses(mpp, sema.build_kind_index(m))
    n_rules = len(ordered.commands)
    print(f"rule count: {n_rules}")

    for name, (inputs, expected_error) in sorted(CASES.items()):
        lines = [f"# {name.replace('_', ' ')}"]
        store: interp.Store = {}
        for key in sorted(inputs):
            lines.append(f"{key} = {inputs[key]}")
            if "[" in key:
                base, idx = key[:-1].split("[")
                arr = store.setdefault(base, [None] * m.decls[base].length)
                arr[int(idx)] = float(inputs[key])
            else:
                store[key] = float(inputs[key])
        outcome = interp.run_mpp(mpp, ordered, "main", store)
        if expected_error is not None:
            assert outcome.error == expected_error, (name, outcome.error)
            lines.append(f"#EXPECT-ERROR {expected_error}")
        else:
            assert not outcome.raised, (name, outcome.error)
            lines.append("#EXPECT")
            for var in EXPECT_VARS:
                v = outcome.store.get(var)
                lines.append(f"{var} = {'undef' if v is None else repr(float(v))}")
        write(os.path.join(CORPUS, "tests", name + ".mtest"), "\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
