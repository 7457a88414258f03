"""Acceptance suite: one line per criterion, exact arithmetic throughout.

Run directly (``python3 tests/test_acceptance.py``) for the report alone, or
through pytest, where the same lines are printed in the terminal summary.
"""

from __future__ import annotations

import random
import sys
import time
from functools import lru_cache

import pytest

from ecdsheaf import descent
from ecdsheaf import homological as hl
from ecdsheaf import linalg as la
from ecdsheaf import qmod as qm
from ecdsheaf import setsheaf as ss
from ecdsheaf.ecd import check_bounded, check_complete, check_regular, localize_ecd, slice_density
from ecdsheaf.fincat import FinGroup, cyclic_group, symmetric_group
from ecdsheaf.sieves import check_topology_axioms
from ecdsheaf.zoo import FIXTURE_NAMES, build_fixture

RESULTS: dict[int, tuple[bool, str]] = {}


@lru_cache(maxsize=None)
def fixture(name):
    fx = build_fixture(name)
    fx.t  # build the topology once
    return fx


@lru_cache(maxsize=None)
def hypotheses(name):
    fx = fixture(name)
    return descent.check_hypotheses(fx.P, fx.D, fx.t)


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (ok, detail)


def line(n: int) -> str:
    ok, detail = RESULTS[n]
    return f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {detail}"


# -- 1 -----------------------------------------------------------------------------

def criterion_1():
    bad = {n: check_topology_axioms(fixture(n).t) for n in FIXTURE_NAMES}
    bad = {n: v for n, v in bad.items() if v}
    record(1, not bad, f"topology axioms on {len(FIXTURE_NAMES)} fixtures"
           + (f"; violations in {sorted(bad)}" if bad else ", 0 violations"))


# -- 2 -----------------------------------------------------------------------------

SHEAFIFY_SAMPLES = 100


def _set_sample_ok(F, t):
    a = ss.sheafify_set(F, t)
    if not ss.is_sheaf_set(a.sheaf, t) or not a.unit.is_natural():
        return False
    if a.unit.is_iso() != ss.is_sheaf_set(F, t):
        return False
    return ss.sheafify_set(a.sheaf, t).unit.is_iso()


def _linear_sample_ok(M, t):
    a = qm.sheafify_linear(M, t)
    if not qm.is_sheaf_linear(a.sheaf, t) or not a.unit.is_natural():
        return False
    if a.unit.is_iso() != qm.is_sheaf_linear(M, t):
        return False
    return qm.sheafify_linear(a.sheaf, t).unit.is_iso()


def criterion_2():
    fails = []
    for name in FIXTURE_NAMES:
        fx = fixture(name)
        rng = random.Random(f"sheafify-{name}")
        for i in range(SHEAFIFY_SAMPLES):
            if not _set_sample_ok(ss.random_set_presheaf(fx.cat, rng), fx.t):
                fails.append((name, "set", i))
            if not _linear_sample_ok(qm.random_qpresheaf(fx.cat, rng), fx.t):
                fails.append((name, "linear", i))
    total = 2 * SHEAFIFY_SAMPLES * len(FIXTURE_NAMES)
    record(2, not fails, f"sheafification sound/unit/idempotent on {total} samples, {len(fails)} failures"
           + (f" first {fails[0]}" if fails else ""))


# -- 3 -----------------------------------------------------------------------------

CARTESIAN_FIXTURES = ("Z3", "GS+", "ADD2", "CL3")


def criterion_3():
    fails = []
    checks = 0
    for name in CARTESIAN_FIXTURES:
        fx = fixture(name)
        rng = random.Random(f"cartesian-{name}")
        sheaves = [ss.sheafify_set(ss.random_set_presheaf(fx.cat, rng), fx.t).sheaf for _ in range(50)]
        for C in fx.P.squares:
            if not ss.cocartesian_check(C, fx.t):
                fails.append((name, C.name, "cocartesian"))
            for i, F in enumerate(sheaves):
                checks += 1
                if not ss.cartesian_sets_check(F, C, fx.t, check_sheaf=False):
                    fails.append((name, C.name, i))
    record(3, not fails, f"{checks} cartesian checks and every cocartesian check, {len(fails)} failures")


# -- 4 -----------------------------------------------------------------------------

def criterion_4():
    fails, n = [], 0
    for name in FIXTURE_NAMES:
        fx = fixture(name)
        if not hypotheses(name).regular:
            continue
        for C in fx.P.squares:
            n += 1
            r = qm.mv_sequence(C, fx.t, strict=False)
            if not r.exact:
                fails.append((name, C.name, r.witness))
    record(4, not fails, f"Mayer-Vietoris exact on {n} squares" + (f"; failures {fails}" if fails else ""))


# -- 5 -----------------------------------------------------------------------------

VANISHING_FIXTURES = ("Z3", "ADD2", "CL3", "GS", "GS+")


def criterion_5():
    fails, n = [], 0
    for name in VANISHING_FIXTURES:
        fx = fixture(name)
        rng = random.Random(f"vanishing-{name}")
        hyps = hypotheses(name)
        for i in range(20):
            F = qm.sheafify_linear(qm.random_qpresheaf(fx.cat, rng, max_dim=3), fx.t).sheaf
            n += 1
            try:
                descent.check_vanishing(fx.P, fx.D, F, fx.t, hyps)
            except descent.VanishingFailed as e:
                fails.append((name, i, str(e)))
    record(5, not fails, f"H^n = 0 above dim_D on {n} sheaves, {len(fails)} failures")


# -- 6 -----------------------------------------------------------------------------

DESCENT_SAMPLES = 100


def run_theorem_2_3():
    literal, augmented, forward, n = [], [], [], 0
    for name in ("Z3", "GS+"):
        fx = fixture(name)
        hyps = hypotheses(name)
        rng = random.Random(f"descent-{name}")
        N = fx.D.max_dim()
        for i in range(DESCENT_SAMPLES):
            K = descent.random_complex(fx.cat, rng, t=fx.t)
            rep = hl.local_replacement(K, fx.t, N)
            v = descent.check_theorem_2_3(K, fx.P, fx.D, fx.t, hyps, replacement=rep)
            n += 1
            if v.agreement is not True:
                literal.append((name, i, v.empty_acyclic))
            if v.agreement_with_empty is not True:
                augmented.append((name, i))
            through = K.hi + N
            if not all(hl.homotopy_cartesian_square(rep.complex, C, through=through) for C in fx.P.squares):
                forward.append((name, i))
    return n, literal, augmented, forward


def criterion_6():
    n, literal, augmented, forward = run_theorem_2_3()
    nonzero_empty = sum(1 for *_, e in literal if not e)
    ok = not literal and not forward
    detail = (f"{n} complexes: {len(literal)} literal disagreements "
              f"({nonzero_empty} with K(empty) not acyclic), "
              f"{len(augmented)} once K(empty) ~ 0 is added to the square side, "
              f"forward direction fails on {len(forward)} replacements")
    record(6, ok, detail)
    return n, literal, augmented, forward


# -- 7 -----------------------------------------------------------------------------

def criterion_7():
    fx = fixture("GS+")
    ctx = descent.union_context(fx.P, fx.D, hypotheses("GS+"))
    rng = random.Random("union-GS+")
    bad = []
    for i in range(50):
        K = descent.random_complex(fx.cat, rng, t=fx.t)
        r = descent.check_theorem_2_16(K, fx.P, fx.D, ctx)
        if r.agreement is not True:
            bad.append(i)
    record(7, not bad, f"(i) <=> (ii) on 50 complexes over GS+, {len(bad)} disagreements")


# -- 8 -----------------------------------------------------------------------------

def criterion_8():
    # exercise both entry points once more so the tally is never empty
    for name in ("GS", "CL3"):
        fx = fixture(name)
        F = qm.sheafify_linear(qm.free_linear(fx.cat, fx.cat.objects[-1]), fx.t).sheaf
        hl.injective_envelope(F)
        hl.sheaf_injective_resolution(F, fx.t, 2)
    c = hl.CERTIFICATES
    passed = c["envelope:pass"] + c["sheaf_injective:pass"]
    failed = c["envelope:fail"] + c["sheaf_injective:fail"]
    record(8, failed == 0 and passed > 0, f"{passed} certificates passed, {failed} CertificationFailed")


# -- 9 -----------------------------------------------------------------------------

def _random_gmodule(G: FinGroup, rng, dim_max=6):
    """A permutation module on random cosets, conjugated by a random invertible matrix."""
    elems = list(G.elements)
    blocks, dim = [], 0
    while True:
        k = rng.choice([1, G.order]) if G.order <= dim_max - dim else 1
        if dim + k > dim_max:
            break
        blocks.append(k)
        dim += k
        if rng.random() < 0.4:
            break
    action = {}
    for g in elems:
        M = la.zeros(dim, dim)
        off = 0
        for k in blocks:
            if k == 1:
                M[off, off] = 1
            else:
                for j, x in enumerate(elems):
                    M[off + elems.index(G.mul[(g, x)]), off + j] = 1
            off += k
        action[g] = M
    while True:
        S = la.from_rows([[rng.randint(-2, 2) for _ in range(dim)] for _ in range(dim)])
        if la.rank(S) == dim:
            break
    Si = S.inv()
    return qm.GModule(G, dim, {g: la.mul(S, action[g], Si) for g in elems})


def criterion_9():
    rng = random.Random("groups")
    fails, n = [], 0
    for G in (cyclic_group(2), cyclic_group(3), symmetric_group(3)):
        for i in range(20):
            M = _random_gmodule(G, rng)
            assert not M.violations()
            fp = qm.fixed_points(M)
            p = fp.projector
            n += 1
            ok = la.equal(la.mul(p, p), p)
            ok = ok and all(la.equal(la.mul(M.action[g], p), p) for g in G.elements)
            ok = ok and all(la.equal(la.mul(p, M.action[g]), p) for g in G.elements)
            if not ok:
                fails.append((G.name, i))
    fx = fixture("GS")
    act = fx.square("Gal").act_X
    rng = random.Random("averaging-GS")
    oracle_fails, m = [], 0
    for i in range(20):
        F = qm.sheafify_linear(qm.random_qpresheaf(fx.cat, rng), fx.t).sheaf
        expected = qm.fixed_points(qm.section_module(F, act)).dim
        dims = hl.sheaf_cohomology("pt", F, fx.t, 3).dims
        m += 1
        if dims[0] != expected or any(dims[1:]):
            oracle_fails.append((i, dims, expected))
    record(9, not fails and not oracle_fails,
           f"projector idempotent and invariant on {n} modules; GS cohomology matches averaging on {m} sheaves, "
           f"{len(fails) + len(oracle_fails)} failures")


# -- 10 ----------------------------------------------------------------------------

def _verdicts(P, D):
    t = P.topology()
    return (check_complete(P, t).complete, all(v.regular for v in check_regular(P, t)),
            check_bounded(P, D).bounded)


def criterion_10():
    prod = fixture("PRODUCT(Z3,GS+)")
    comps = {"z.": fixture("Z3"), "g.": fixture("GS+")}
    expected_union = tuple(all(v) for v in zip(*(_verdicts(fx.P, fx.D) for fx in comps.values())))
    got_union = _verdicts(prod.P, prod.D)
    mismatches = []
    if got_union != expected_union:
        mismatches.append(("union", got_union, expected_union))
    slices = 0
    for S in prod.cat.objects:
        if S == prod.cat.initial:
            continue
        pre, base = S[:2], S[2:]
        fx = comps[pre]
        sl, PS = localize_ecd(prod.P, S)
        got = _verdicts(PS, slice_density(prod.D, sl, S))
        sl0, PS0 = localize_ecd(fx.P, base)
        want = _verdicts(PS0, slice_density(fx.D, sl0, base))
        slices += 1
        if got != want:
            mismatches.append((S, got, want))
    record(10, not mismatches, f"union verdict {got_union} and {slices} slice verdicts match components, "
           f"{len(mismatches)} mismatches")


# -- pytest entry points ----------------------------------------------------------------

def test_criterion_1():
    criterion_1()
    assert RESULTS[1][0], line(1)


def test_criterion_2():
    criterion_2()
    assert RESULTS[2][0], line(2)


def test_criterion_3():
    criterion_3()
    assert RESULTS[3][0], line(3)


def test_criterion_4():
    criterion_4()
    assert RESULTS[4][0], line(4)


def test_criterion_5():
    criterion_5()
    assert RESULTS[5][0], line(5)


@pytest.fixture(scope="module")
def theorem_2_3_run():
    return criterion_6()


def test_criterion_6_with_empty_condition(theorem_2_3_run):
    _, _, augmented, forward = theorem_2_3_run
    assert not augmented and not forward


@pytest.mark.xfail(strict=True, reason="squares never see K(empty); a complex with K(empty) not acyclic "
                   "can be square-wise Cartesian without being local")
def test_criterion_6_literal(theorem_2_3_run):
    _, literal, _, _ = theorem_2_3_run
    assert not literal


def test_criterion_7():
    criterion_7()
    assert RESULTS[7][0], line(7)


def test_criterion_9():
    criterion_9()
    assert RESULTS[9][0], line(9)


def test_criterion_10():
    criterion_10()
    assert RESULTS[10][0], line(10)


def test_criterion_8():
    # runs last in this module so that the tally covers the suites above
    criterion_8()
    assert RESULTS[8][0], line(8)


ALL = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8,
       criterion_9, criterion_10]


def main() -> int:
    t0 = time.time()
    for fn in ALL:
        t1 = time.time()
        fn()
        n = int(fn.__name__.split("_")[1])
        print(f"{line(n)}  ({time.time() - t1:.1f}s)", flush=True)
    print(f"total {time.time() - t0:.1f}s")
    return 0 if all(ok for ok, _ in RESULTS.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
