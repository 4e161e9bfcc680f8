"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every criterion prints one ``PASS``/``FAIL`` line; the lines are also
collected and repeated in the pytest terminal summary.  Run this file
directly (``python3 tests/test_acceptance.py``) for the lines alone.
"""

from __future__ import annotations

import json
import math
import tempfile
import time
import warnings
from dataclasses import dataclass

import numpy as np
import pytest

from randers_sphere import cli
from randers_sphere.cutlocus import riemann_cut_locus, scan_half_period
from randers_sphere.errors import FanTooCoarse
from randers_sphere.surface import SurfacePoint, check_profile_conditions, make_surface
from randers_sphere.verification import (chain_preconditions, clairaut_conservation,
                                         closedness_equivalence, curvature_oracle,
                                         flow_correspondence, navigation_roundtrip,
                                         oracle_cut_check, preset_chain,
                                         positivity_equivalence, projective_check,
                                         round_sphere_suite, sigma_identity)

SEED = 42
RESULTS: list[str] = []


@dataclass
class Verdict:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] criterion {self.number:>2} {self.title}: {self.detail} "
                f"({self.seconds:.2f}s / budget {self.budget:g}s)")


def _verdict(number, title, budget):
    """The wrapped function returns ``(label, passed, text)`` items; runtime is part of the verdict."""
    def wrap(fn):
        def run():
            t0 = time.perf_counter()
            items = fn()
            dt = time.perf_counter() - t0
            ok = all(p for _, p, _ in items) and dt < budget
            detail = "; ".join(f"{lbl} {'ok' if p else 'FAILED'} ({txt})" for lbl, p, txt in items)
            v = Verdict(number, title, ok, detail, dt, budget)
            print(v.line())
            RESULTS.append(v.line())
            return v
        run.__name__ = fn.__name__
        run.number = number
        return run
    return wrap


def _suite(res):
    return (res.name, res.passed, f"{res.agreed}/{res.trials}, worst {res.worst:.3g} vs {res.tolerance:.0e}")


@_verdict(1, "curvature oracle", 1.0)
def criterion_1():
    return [_suite(curvature_oracle(n=1000, tol=1e-8))]


@_verdict(2, "navigation/Randers round trip", 1.0)
def criterion_2():
    return [_suite(navigation_roundtrip(SEED, n=100, tol=1e-10))]


@_verdict(3, "positivity equivalence", 2.0)
def criterion_3():
    return [_suite(positivity_equivalence(SEED, n=1000))]


@_verdict(4, "sigma = eps * eta", 1.0)
def criterion_4():
    return [_suite(sigma_identity(SEED, n=200, tol=1e-12))]


@_verdict(5, "closedness equivalence", 2.0)
def criterion_5():
    return [_suite(closedness_equivalence(SEED, n=200))]


@_verdict(6, "Clairaut conservation", 10.0)
def criterion_6():
    return [_suite(clairaut_conservation(SEED, n=50, length=2 * math.pi, step=1e-3, tol=1e-8))]


@_verdict(7, "round sphere", 5.0)
def criterion_7():
    res = round_sphere_suite(step=1e-3)
    d = res.details
    return [("conjugate", d["conjugate"] < 1e-4, f"{d['conjugate']:.2e} vs 1e-4"),
            ("antipodal cut", d["cut"] < 1e-5, f"{d['cut']:.2e} vs 1e-5"),
            ("half period", d["half_period"] < 1e-8, f"{d['half_period']:.2e} vs 1e-8")]


@_verdict(8, "twisted-sine pipeline", 60.0)
def criterion_8():
    surf = make_surface("twisted-sine", alpha=0.25)
    cond = check_profile_conditions(surf.profile)
    table = scan_half_period(surf)
    q = SurfacePoint(math.pi / 3, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FanTooCoarse)
        res = riemann_cut_locus(surf, q, fan_n=256)
    dev = float(np.max(np.abs(res.r - 2 * math.pi / 3)))
    return [("(c1)-(c3)", cond.all, f"c1 {cond.c1}, c2 {cond.c2}, c3 {cond.c3}"),
            ("half period non-increasing", table.monotone,
             f"max step {float(np.max(np.diff(table.phi_values))):.3g}"),
            ("cut on r = 2pi/3", dev < 1e-3, f"{len(res.cut_points)} points, deviation {dev:.2e} vs 1e-3")]


@_verdict(9, "flow correspondence", 5.0)
def criterion_9():
    return [_suite(flow_correspondence(length=math.pi, step=1e-3, tol=1e-5))]


@_verdict(10, "three-step chain", 300.0)
def criterion_10():
    chain = preset_chain()
    q = SurfacePoint(math.pi / 3, 0.0)
    pre = chain_preconditions(chain)
    d = pre.details["defects"]
    proj = projective_check(chain, q, tol=1e-4)
    oracle = oracle_cut_check(chain, q, tol=2e-3)
    return [("preconditions", pre.passed,
             ", ".join(f"{k} {v:.1e}" for k, v in d.items()) + " vs 1e-10/1e-5/1e-10"),
            ("F2 vs alpha2 point sets", proj.passed, f"Hausdorff {proj.worst:.2e} vs 1e-4"),
            ("cut locus vs distance-field oracle", oracle.passed,
             f"{oracle.agreed}/{oracle.trials} within 2e-3, worst gap {oracle.worst:.3g}")]


@_verdict(11, "CLI determinism", 30.0)
def criterion_11():
    with tempfile.TemporaryDirectory() as d:
        codes, hashes = [], []
        for k in range(2):
            out = f"{d}/run{k}"
            codes.append(cli.main(["verify-lemmas", "--seed", str(SEED), "--out", out]))
            with open(f"{out}/report.json", encoding="utf-8") as fh:
                rep = json.load(fh)
            hashes.append((rep["hash"], cli.report_hash(rep)))
    same = hashes[0][0] == hashes[1][0] and all(a == b for a, b in hashes)
    return [("exit codes", codes == [0, 0], f"{codes}"),
            ("hashes", same, f"{hashes[0][0][:12]} / {hashes[1][0][:12]}")]


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{c.number}" for c in CRITERIA])
def test_acceptance(criterion):
    v = criterion()
    assert v.passed, v.line()


if __name__ == "__main__":
    verdicts = [c() for c in CRITERIA]
    print(f"{sum(v.passed for v in verdicts)}/{len(verdicts)} criteria pass")
