import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecdsheaf import descent as de
from ecdsheaf import homological as hl
from ecdsheaf import qmod as qm
from ecdsheaf.ecd import DensityStructure, MissingPullback, make_square
from ecdsheaf.zoo import build_fixture


def lam(fx, X, sheafify=False):
    F = qm.free_linear(fx.cat, X)
    if sheafify:
        F = qm.sheafify_linear(F, fx.t).sheaf
    return hl.concentrated(F)


def test_hypotheses_hold_on_fixtures():
    for name in ("Z3", "GS", "GS+", "CL3"):
        fx = build_fixture(name)
        h = de.check_hypotheses(fx.P, fx.D)
        assert h.hold, (name, h)
    h = de.check_hypotheses(build_fixture("Z3").P, None)
    assert not h.hold and "no density structure supplied" in h.notes


def test_sheafified_representable_is_local_and_cartesian():
    fx = build_fixture("Z3")
    v = de.check_theorem_2_3(lam(fx, "S", True), fx.P, fx.D)
    assert v.all_squares and v.locality.local
    assert v.agreement and v.agreement_with_empty and not v.conditional


def test_zariski_square_failure():
    fx = build_fixture("Z3")
    v = de.check_theorem_2_3(lam(fx, "UV"), fx.P, fx.D)
    assert not v.squares["Zar"]
    assert "Zar" in v.witnesses
    assert v.locality.status == "not-local"
    assert v.agreement is True


@pytest.mark.parametrize("X", ["empty", "U", "V", "S"])
def test_empty_section_gap(X):
    # every square is homotopy Cartesian, yet K(∅) = Q keeps K from being local
    fx = build_fixture("Z3")
    v = de.check_theorem_2_3(lam(fx, X), fx.P, fx.D)
    assert v.all_squares
    assert v.locality.witness == ("empty", 0)
    assert not v.empty_acyclic
    assert v.agreement is False
    assert v.agreement_with_empty is True


def test_verdict_serializes():
    fx = build_fixture("GS")
    v = de.check_theorem_2_3(lam(fx, "pt", True), fx.P, fx.D, base_changes=True)
    d = v.to_dict()
    assert d["squares"]["Gal"] and d["agreement"]
    assert v.base_changes and all(isinstance(b, bool) for b in v.base_changes.values())
    assert "homotopy-cartesian" in v.summary()


@pytest.mark.parametrize("name", ["Z3", "GS", "GS+"])
@given(seed=st.integers(0, 10 ** 6))
@settings(max_examples=4)
def test_forward_direction_on_local_models(name, seed):
    fx = build_fixture(name)
    K = de.random_complex(fx.cat, random.Random(seed), max_length=2, max_dim=2)
    L, _ = de.local_model(K, fx.t, fx.D.max_dim())
    v = de.check_theorem_2_3(L, fx.P, fx.D)
    assert v.locality.local
    assert v.all_squares and v.empty_acyclic


@pytest.mark.parametrize("name", ["Z3", "GS+"])
@given(seed=st.integers(0, 10 ** 6))
@settings(max_examples=4)
def test_augmented_agreement_sample(name, seed):
    fx = build_fixture(name)
    K = de.random_complex(fx.cat, random.Random(seed), max_length=2, max_dim=2, t=fx.t)
    v = de.check_theorem_2_3(K, fx.P, fx.D)
    assert v.agreement_with_empty is True


def test_shift_and_sum():
    fx = build_fixture("Z3")
    K, L = lam(fx, "S", True), lam(fx, "UV")
    assert de.shifted(K, 2).lo == 2
    S = de.direct_sum_complex(K, L)
    v = de.check_theorem_2_3(S, fx.P, fx.D)
    assert not v.squares["Zar"] and not v.locality.local
    with pytest.raises(ValueError):
        de.direct_sum_complex(K, de.shifted(L, 1))


@pytest.mark.parametrize("name", ["Z3", "GS", "GS+", "CL3"])
@given(seed=st.integers(0, 10 ** 6))
@settings(max_examples=3)
def test_vanishing_on_fixtures(name, seed):
    fx = build_fixture(name)
    F = qm.random_qpresheaf(fx.cat, random.Random(seed), 3)
    rep = de.check_vanishing(fx.P, fx.D, F)
    assert rep.vanishes and not rep.conditional
    for S, row in rep.table.items():
        assert len(row) == fx.D.dim(S) + 3


class FlatDensity(DensityStructure):
    """Claims dim_D = 0 everywhere, which no valid density structure can."""

    def dim(self, S):
        return 0


def test_vanishing_failure_is_reported():
    fx = build_fixture("Z3")
    F = qm.sheafify_linear(qm.random_qpresheaf(fx.cat, random.Random(1)), fx.t).sheaf
    assert hl.sheaf_cohomology("S", F, fx.t, 1).dims[1] > 0
    with pytest.raises(de.VanishingFailed, match="H\\^1\\(S\\)"):
        de.check_vanishing(fx.P, FlatDensity(fx.cat, fx.D.to_dict()), F)


def test_union_theorem_on_gs_plus():
    fx = build_fixture("GS+")
    ctx = de.union_context(fx.P, fx.D)
    assert not ctx.conditional
    # on GS+ the derived squares add no covers
    assert ctx.t_union == ctx.t_P
    good = de.check_theorem_2_16(lam(fx, "pt", True), fx.P, fx.D, ctx)
    assert good.condition_i and good.condition_ii and good.agreement
    bad = de.check_theorem_2_16(lam(fx, "T"), fx.P, fx.D, ctx)
    assert bad.condition_i is False and bad.condition_ii is False and bad.agreement
    assert "t_P-local" in bad.summary() and bad.to_dict()["agreement"]


def test_union_context_needs_pullbacks():
    fx = build_fixture("GS")
    with pytest.raises(MissingPullback):
        de.union_context(fx.P, fx.D)


@given(seed=st.integers(0, 10 ** 6))
@settings(max_examples=10)
def test_identity_square_always_cartesian(seed):
    fx = build_fixture("Z3")
    ident = make_square(fx.cat, "V<S", "id_V", "V<S", "id_S", name="ident")
    K = de.random_complex(fx.cat, random.Random(seed))
    assert hl.homotopy_cartesian_square(K, ident)
