"""Small named sites with cd-structures and density structures.

Every fixture's P contains, besides its named squares, the degenerate squares

    ∅ --> ∅
    |     |
    Y ==> Y

for each object Y.  They do not change the generated topology (the family
contains id_Y) but they make reducing-ness and the descent criteria see
K(∅) ≃ 0.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

from .ecd import (DensityStructure, EcdStructure, EquivariantSquare, make_square, union_ecd, validate_density,
                  validate_ecd)
from .fincat import (CategoryError, FinCategory, Morphism, concrete_category, cyclic_group, poset_category)
from .sieves import Topology

EMPTY = "empty"


class UnknownFixture(CategoryError):
    pass


@dataclass
class Fixture:
    name: str
    cat: FinCategory
    P: EcdStructure
    D: DensityStructure
    main: list  # names of the non-degenerate squares
    expected: dict = field(default_factory=dict)
    _t: Topology | None = None

    @property
    def t(self) -> Topology:
        if self._t is None:
            self._t = self.P.topology()
        return self._t

    def square(self, name: str) -> EquivariantSquare:
        for C in self.P.squares:
            if C.name == name:
                return C
        raise KeyError(name)

    def main_squares(self) -> list[EquivariantSquare]:
        return [self.square(n) for n in self.main]


def degenerate_squares(cat: FinCategory) -> list[EquivariantSquare]:
    e = cat.initial
    return [make_square(cat, cat.id(e), cat.from_initial(Y), cat.id(Y), cat.from_initial(Y), name=f"T_{Y}")
            for Y in cat.objects]


def _levels(cat: FinCategory, rules) -> dict:
    """Density levels from predicates on morphisms; isos are always added."""
    out = {}
    for S in cat.objects:
        lv = []
        for rule in rules:
            lv.append(sorted({f for f in cat.into(S) if rule(f) or cat.is_iso(f)}))
        lv.append(sorted(f for f in cat.into(S) if cat.is_iso(f)))
        out[S] = lv
    return out


# -- posets ----------------------------------------------------------------

def _subset_poset(points: str) -> FinCategory:
    subsets = []
    for r in range(len(points) + 1):
        for c in itertools.combinations(points, r):
            subsets.append("".join(c) if c else EMPTY)

    def as_set(x):
        return set() if x == EMPTY else set(x)
    return poset_category(subsets, lambda a, b: as_set(a) <= as_set(b), EMPTY)


def z3() -> Fixture:
    order = {EMPTY: {EMPTY, "UV", "U", "V", "S"}, "UV": {"UV", "U", "V", "S"},
             "U": {"U", "S"}, "V": {"V", "S"}, "S": {"S"}}
    cat = poset_category([EMPTY, "UV", "U", "V", "S"], lambda a, b: b in order[a], EMPTY)
    C = make_square(cat, "UV<U", "UV<V", "V<S", "U<S", name="Zar")
    P = validate_ecd(cat, [C] + degenerate_squares(cat))
    D = validate_density(cat, _levels(cat, [lambda f: True, lambda f: cat.src(f) != EMPTY]))
    return Fixture("Z3", cat, P, D, ["Zar"])


def z3_coarse_density(cat: FinCategory) -> dict:
    """D_0 = everything, D_1 = isomorphisms: valid, but the Zariski square is not reducing for it."""
    return _levels(cat, [lambda f: True])


def add2() -> Fixture:
    cat = _subset_poset("ab")
    C = make_square(cat, f"{EMPTY}<a", f"{EMPTY}<b", "b<ab", "a<ab", name="Add")
    P = validate_ecd(cat, [C] + degenerate_squares(cat))
    D = validate_density(cat, _levels(cat, [lambda f: True]))
    return Fixture("ADD2", cat, P, D, ["Add"])


def cl3() -> Fixture:
    cat = _subset_poset("pqr")

    def m(a, b):
        return cat.id(a) if a == b else f"{a}<{b}"

    def meet(a, b):
        s = "".join(ch for ch in "pqr" if ch in a and ch in b and a != EMPTY and b != EMPTY)
        return s or EMPTY

    squares = []
    for Y in cat.objects:
        Xp, X, Sp = meet("q", Y), meet("pq", Y), meet("qr", Y)
        squares.append(make_square(cat, m(Xp, X), m(Xp, Sp), m(Sp, Y), m(X, Y), name=f"Cl|{Y}"))
    P = validate_ecd(cat, squares + degenerate_squares(cat))
    D = validate_density(cat, _levels(cat, [lambda f: True, lambda f: cat.src(f) != EMPTY]))
    main = [C.name for C in P.squares if C.name.startswith("Cl|")]
    return Fixture("CL3", cat, P, D, main)


# -- finite C2-sets ----------------------------------------------------------------

def _c2_category(with_tt: bool) -> FinCategory:
    carriers = {EMPTY: (), "T": (0, 1), "pt": (0,)}
    swap = {EMPTY: {}, "T": {0: 1, 1: 0}, "pt": {0: 0}}
    if with_tt:
        carriers["TT"] = (0, 1, 2, 3)
        swap["TT"] = {0: 1, 1: 0, 2: 3, 3: 2}

    def homs(X, Y):
        xs, ys = carriers[X], carriers[Y]
        for values in itertools.product(ys, repeat=len(xs)):
            fn = dict(zip(xs, values))
            if all(fn[swap[X][x]] == swap[Y][fn[x]] for x in xs):
                yield fn

    def namer(X, Y, k, fn):
        if len(list(homs(X, Y))) == 1:
            return f"{X}>{Y}"
        return f"{X}>{Y}:" + "".join(str(fn[x]) for x in carriers[X])

    return concrete_category(carriers, homs, EMPTY, namer)


def _galois_square(cat: FinCategory) -> EquivariantSquare:
    G = cyclic_group(2)
    e, s = G.elements
    return make_square(cat, f"{EMPTY}>T", cat.id(EMPTY), f"{EMPTY}>pt", "T>pt",
                       G, {e: "T>T:01", s: "T>T:10"}, {e: cat.id(EMPTY), s: cat.id(EMPTY)}, name="Gal")


def gs() -> Fixture:
    cat = _c2_category(False)
    P = validate_ecd(cat, [_galois_square(cat)] + degenerate_squares(cat))
    D = validate_density(cat, _levels(cat, [lambda f: True]))
    return Fixture("GS", cat, P, D, ["Gal"])


def gs_plus(additive: bool = True) -> Fixture:
    """GS with TT = T×_pt T = T ⊔ T adjoined.

    With ``additive`` the square (∅, T, T, TT) for the two summand inclusions
    is added, so that t_P sees TT as a disjoint union.  Without it the
    Galois square passes the pullback-cover test but its comparison map
    is not an epimorphism at TT.
    """
    cat = _c2_category(True)
    squares = [_galois_square(cat)]
    main = ["Gal"]
    if additive:
        squares.append(make_square(cat, f"{EMPTY}>T", f"{EMPTY}>T", "T>TT:23", "T>TT:01", name="AddTT"))
        main.append("AddTT")
    P = validate_ecd(cat, squares + degenerate_squares(cat))
    D = validate_density(cat, _levels(cat, [lambda f: True]))
    return Fixture("GS+" if additive else "GS+bare", cat, P, D, main)


# -- disjoint unions ----------------------------------------------------------------

def wedge(c1: FinCategory, c2: FinCategory, p1: str, p2: str) -> tuple[FinCategory, dict, dict]:
    """Disjoint union of two categories with their initial objects identified.

    Returns the category and the renaming maps for morphisms of each part.
    """
    e = EMPTY
    objects = [e]
    ren_obj = []
    for c, p in ((c1, p1), (c2, p2)):
        r = {X: (e if X == c.initial else f"{p}{X}") for X in c.objects}
        ren_obj.append(r)
        objects += [r[X] for X in c.objects if X != c.initial]
    ren_mor = []
    morphisms, identities = {}, {e: f"id_{e}"}
    morphisms[f"id_{e}"] = Morphism(f"id_{e}", e, e)
    for (c, p), r in zip(((c1, p1), (c2, p2)), ren_obj):
        rm = {}
        for f, m in c.morphisms.items():
            if m.src == c.initial and m.tgt == c.initial:
                rm[f] = f"id_{e}"
                continue
            if m.src == c.initial:
                name = f"{e}>{r[m.tgt]}"
            else:
                name = f"{p}{f}"
            rm[f] = name
            morphisms[name] = Morphism(name, r[m.src], r[m.tgt])
        for X in c.objects:
            if X != c.initial:
                identities[r[X]] = rm[c.id(X)]
        ren_mor.append(rm)
    compose = {}
    for (c, _), rm in zip(((c1, p1), (c2, p2)), ren_mor):
        for (g, f), gf in c._compose.items():
            compose[rm[g], rm[f]] = rm[gf]
    cat = FinCategory(objects, list(morphisms.values()), identities, compose, e)
    return cat, ren_mor[0], ren_mor[1]


def _transport(cat: FinCategory, C: EquivariantSquare, rm: dict, prefix: str) -> EquivariantSquare:
    return make_square(cat, rm[C.gp], rm[C.fp], rm[C.g], rm[C.f], C.group,
                       {h: rm[s] for h, s in C.act_X.act.items()},
                       {h: rm[s] for h, s in C.act_Xp.act.items()}, name=prefix + C.name)


def product_fixture(a: Fixture, b: Fixture) -> Fixture:
    cat, r1, r2 = wedge(a.cat, b.cat, "z.", "g.")
    P1 = validate_ecd(cat, [_transport(cat, C, r1, "z.") for C in a.P.squares])
    P2 = validate_ecd(cat, [_transport(cat, C, r2, "g.") for C in b.P.squares])
    P = union_ecd(P1, P2)
    levels = {}
    for fx, rm, pre in ((a, r1, "z."), (b, r2, "g.")):
        for S in fx.cat.objects:
            name = EMPTY if S == fx.cat.initial else pre + S
            levels[name] = [sorted({rm[f] for f in lv}) for lv in fx.D.levels[S]]
    D = validate_density(cat, levels)
    fx = Fixture(f"PRODUCT({a.name},{b.name})", cat, P, D,
                 ["z." + n for n in a.main] + ["g." + n for n in b.main])
    fx.parts = (P1, P2)  # type: ignore[attr-defined]
    return fx


_BUILDERS = {
    "Z3": z3,
    "GS": gs,
    "GS+": gs_plus,
    "ADD2": add2,
    "CL3": cl3,
    "PRODUCT(Z3,GS+)": lambda: product_fixture(z3(), gs_plus()),
}
ALIASES = {"PRODUCT(Z3,GS)": "PRODUCT(Z3,GS+)", "PRODUCT": "PRODUCT(Z3,GS+)"}
FIXTURE_NAMES = tuple(_BUILDERS)


def build_fixture(name: str) -> Fixture:
    key = ALIASES.get(name, name)
    if key not in _BUILDERS:
        raise UnknownFixture(f"unknown fixture {name!r}; choose from {', '.join(FIXTURE_NAMES)}")
    return _BUILDERS[key]()


# -- serialization ----------------------------------------------------------------

def dump_json(d) -> str:
    return json.dumps(d, indent=1, sort_keys=False) + "\n"


def emit(fx: Fixture, directory: str | Path) -> dict[str, Path]:
    """Write site/ecd/density files and a sample presheaf; returns the paths."""
    from .qmod import free_linear
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    top = max(fx.cat.objects, key=lambda S: (len(fx.cat.into(S)), S))
    files = {
        "site": (d / "site.json", fx.cat.dumps()),
        "ecd": (d / "ecd.json", fx.P.dumps()),
        "density": (d / "density.json", dump_json(fx.D.to_dict())),
        "presheaf": (d / "presheaf.json", free_linear(fx.cat, top).dumps()),
    }
    for path, text in files.values():
        path.write_text(text)
    return {k: v[0] for k, v in files.items()}
