"""Worked-example tables: computed scores next to the published ones.

    python scripts/case_studies.py            # all cases
    python scripts/case_studies.py 8a 8b      # selected cases

Cells that differ from the published value by more than 0.01 are starred.
The last block is the Kendall tau between the accuracy and GIE rankings of
the 15 DMOZ systems.
"""
from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from cases import BY_KEY, CASES, COLUMNS, DMOZ_ACC_RANKS, DMOZ_GIE_RANKS  # noqa: E402
from hiereval.evaluate import EvalConfig, evaluate_instance  # noqa: E402
from hiereval.stats import kendall_tau  # noqa: E402


def case_rows(case):
    h, labels, _ = case.build()
    got = evaluate_instance(h, labels, COLUMNS, EvalConfig(lca_threshold=case.threshold))
    for m in COLUMNS:
        want = case.erratum.get(m, case.expected[m])
        flag = "*" if abs(got[m] - want) > 0.01 + 1e-9 else ""
        note = f" (published {case.expected[m]})" if m in case.erratum else ""
        yield m, got[m], want, flag + note


def main(argv=None) -> int:
    keys = (argv if argv is not None else sys.argv[1:]) or [c.key for c in CASES]
    for key in keys:
        case = BY_KEY[key]
        suffix = f", threshold {case.threshold}" if case.threshold else ""
        print(f"case {key}: true {case.truth}, predicted {case.predicted}{suffix}")
        print(f"  {'measure':8s} {'computed':>9s} {'expected':>9s}")
        for m, got, want, flag in case_rows(case):
            print(f"  {m:8s} {got:9.4g} {want:9.4g} {flag}")
        print()
    tau = kendall_tau(DMOZ_ACC_RANKS, DMOZ_GIE_RANKS)
    print(f"DMOZ ranking agreement, accuracy vs GIE: tau = {tau:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
