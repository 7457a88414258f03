import json
from pathlib import Path

import pytest

from ecdsheaf.ecd import load_density, load_ecd
from ecdsheaf.fincat import loads_category
from ecdsheaf.qmod import QPresheaf
from ecdsheaf.zoo import ALIASES, FIXTURE_NAMES, UnknownFixture, build_fixture, degenerate_squares, emit

GOLDEN = Path(__file__).parent / "golden"


def slug(name):
    return name.replace("(", "_").replace(")", "").replace(",", "_").replace("+", "plus")


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_emit_matches_golden(name, tmp_path):
    paths = emit(build_fixture(name), tmp_path)
    for kind, p in paths.items():
        assert p.read_bytes() == (GOLDEN / slug(name) / p.name).read_bytes(), (name, kind)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_golden_round_trip(name):
    d = GOLDEN / slug(name)
    site = (d / "site.json").read_text()
    cat = loads_category(site)
    assert cat.dumps() == site
    ecd = (d / "ecd.json").read_text()
    assert load_ecd(cat, ecd).dumps() == ecd
    dens = (d / "density.json").read_text()
    assert json.loads(dens) == load_density(cat, dens).to_dict()
    pre = (d / "presheaf.json").read_text()
    assert QPresheaf.from_dict(cat, json.loads(pre)).dumps() == pre


def test_fixture_shapes():
    counts = {name: (len(build_fixture(name).cat.objects), len(build_fixture(name).P)) for name in FIXTURE_NAMES}
    assert counts["Z3"] == (5, 6)
    assert counts["GS"] == (3, 4)
    assert counts["GS+"] == (4, 6)
    assert counts["CL3"][0] == 8
    assert counts["PRODUCT(Z3,GS+)"] == (8, 11)


def test_aliases_and_unknown():
    for alias, target in ALIASES.items():
        assert build_fixture(alias).name == target
    with pytest.raises(UnknownFixture):
        build_fixture("Z4")


def test_degenerate_squares_present():
    fx = build_fixture("CL3")
    # Cl|r has corners (∅, ∅, r, r), so it absorbs T_r during deduplication
    for C in degenerate_squares(fx.cat):
        assert C in fx.P
    assert "T_r" not in {C.name for C in fx.P.squares}
    T = fx.square("T_pqr")
    assert T.corners() == ("empty", "empty", "pqr", "pqr")
