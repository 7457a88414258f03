"""Equivariant cd-structures, density structures and the structural checkers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .fincat import (CategoryError, FinCategory, FinGroup, GroupAction, Morphism, NonExistent,
                     coproduct, group_isomorphisms, is_mono, is_pullback, pullback, trivial_group,
                     validate_group_action)
from .sieves import Topology, generate_topology, sieve_generated, simple_cover_sieves


class NotCommutative(CategoryError):
    pass


class NotEquivariant(CategoryError):
    pass


class NotCartesian(CategoryError):
    pass


class NotMono(CategoryError):
    pass


class MissingPullback(CategoryError):
    pass


class MissingCoproduct(CategoryError):
    pass


class AxiomViolation(CategoryError):
    pass


class InfiniteDimension(CategoryError):
    pass


@dataclass(frozen=True)
class EquivariantSquare:
    """A commutative square

        X' --g'--> X
        |f'        |f
        S' --g---> S

    with G acting on X over S and on X' over S'."""
    group: FinGroup
    gp: str
    fp: str
    g: str
    f: str
    act_X: GroupAction
    act_Xp: GroupAction
    Xp: str
    X: str
    Sp: str
    S: str
    name: str = "C"

    def to_dict(self) -> dict:
        return {"name": self.name, "group": self.group.to_dict(),
                "gp": self.gp, "fp": self.fp, "g": self.g, "f": self.f,
                "act_X": {str(k): v for k, v in self.act_X.act.items()},
                "act_Xp": {str(k): v for k, v in self.act_Xp.act.items()}}

    def corners(self) -> tuple[str, str, str, str]:
        return self.Xp, self.X, self.Sp, self.S


def make_square(cat: FinCategory, gp: str, fp: str, g: str, f: str, group: FinGroup | None = None,
                act_X: dict | None = None, act_Xp: dict | None = None, name: str = "C") -> EquivariantSquare:
    """Build and validate a square; omitted actions are trivial."""
    group = group or trivial_group()
    Xp, X = cat.src(gp), cat.tgt(gp)
    Sp, S = cat.src(g), cat.tgt(g)
    bad = []
    if cat.src(fp) != Xp or cat.tgt(fp) != Sp:
        bad.append(f"f' = {fp} is not X' -> S'")
    if cat.src(f) != X or cat.tgt(f) != S:
        bad.append(f"f = {f} is not X -> S")
    if bad or cat.comp(f, gp) != cat.comp(g, fp):
        raise NotCommutative(bad[0] if bad else f"{f}∘{gp} ≠ {g}∘{fp}", bad)
    if act_X is None:
        act_X = {h: cat.id(X) for h in group.elements}
    if act_Xp is None:
        act_Xp = {h: cat.id(Xp) for h in group.elements}
    try:
        aX = validate_group_action(cat, group, X, f, act_X)
        aXp = validate_group_action(cat, group, Xp, fp, act_Xp)
    except CategoryError as e:
        raise NotEquivariant(str(e), e.violations) from None
    for h in group.elements:
        if cat.comp(gp, act_Xp[h]) != cat.comp(act_X[h], gp):
            raise NotEquivariant(f"g' is not equivariant at {h}")
    return EquivariantSquare(group, gp, fp, g, f, aX, aXp, Xp, X, Sp, S, name)


def square_from_dict(cat: FinCategory, d: dict) -> EquivariantSquare:
    group = FinGroup.from_dict(d["group"]) if "group" in d else trivial_group()
    key = {str(h): h for h in group.elements}
    act_X = {key[k]: v for k, v in d["act_X"].items()} if "act_X" in d else None
    act_Xp = {key[k]: v for k, v in d["act_Xp"].items()} if "act_Xp" in d else None
    return make_square(cat, d["gp"], d["fp"], d["g"], d["f"], group, act_X, act_Xp, d.get("name", "C"))


# -- isomorphisms and morphisms of squares ------------------------------------------------

def _group_maps(G1: FinGroup, G2: FinGroup) -> list[dict]:
    if G1 is G2 or (G1.elements == G2.elements and G1.mul == G2.mul):
        return [{h: h for h in G1.elements}]
    return list(group_isomorphisms(G1, G2))


def square_morphisms(cat: FinCategory, C1: EquivariantSquare, C: EquivariantSquare,
                     iso_only: bool = False, iso_on_S: bool = False) -> Iterator[tuple]:
    """Equivariant morphisms of squares C1 -> C as tuples (alpha, a, b, c, d) with
    a: X1' -> X', b: X1 -> X, c: S1' -> S', d: S1 -> S."""
    def homs(A, B, force_iso=False):
        return cat.isos(A, B) if (iso_only or force_iso) else cat.hom(A, B)

    for alpha in _group_maps(C1.group, C.group):
        for d in homs(C1.S, C.S, iso_on_S):
            for b in homs(C1.X, C.X):
                if cat.comp(C.f, b) != cat.comp(d, C1.f):
                    continue
                if any(cat.comp(b, C1.act_X.act[h]) != cat.comp(C.act_X.act[alpha[h]], b) for h in C1.group.elements):
                    continue
                for c in homs(C1.Sp, C.Sp):
                    if cat.comp(C.g, c) != cat.comp(d, C1.g):
                        continue
                    for a in homs(C1.Xp, C.Xp):
                        if cat.comp(C.gp, a) != cat.comp(b, C1.gp) or cat.comp(C.fp, a) != cat.comp(c, C1.fp):
                            continue
                        if any(cat.comp(a, C1.act_Xp.act[h]) != cat.comp(C.act_Xp.act[alpha[h]], a)
                               for h in C1.group.elements):
                            continue
                        yield alpha, a, b, c, d


def squares_isomorphic(cat: FinCategory, C1: EquivariantSquare, C2: EquivariantSquare) -> bool:
    if C1.group.order != C2.group.order:
        return False
    return next(square_morphisms(cat, C1, C2, iso_only=True), None) is not None


@dataclass
class EcdStructure:
    cat: FinCategory
    squares: list = field(default_factory=list)

    def __contains__(self, C: EquivariantSquare) -> bool:
        return any(squares_isomorphic(self.cat, C, D) for D in self.squares)

    def __iter__(self):
        return iter(self.squares)

    def __len__(self):
        return len(self.squares)

    def topology(self, rng=None) -> Topology:
        return generate_topology(self.cat, self.squares, rng)

    def to_dict(self) -> dict:
        return {"squares": [C.to_dict() for C in self.squares]}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


def validate_ecd(cat: FinCategory, squares: Iterable) -> EcdStructure:
    """Validate squares (dicts or EquivariantSquare) and deduplicate up to isomorphism."""
    out: list[EquivariantSquare] = []
    for C in squares:
        if isinstance(C, dict):
            C = square_from_dict(cat, C)
        else:
            C = make_square(cat, C.gp, C.fp, C.g, C.f, C.group, C.act_X.act, C.act_Xp.act, C.name)
        if not any(squares_isomorphic(cat, C, D) for D in out):
            out.append(C)
    return EcdStructure(cat, out)


def load_ecd(cat: FinCategory, text: str) -> EcdStructure:
    return validate_ecd(cat, json.loads(text)["squares"])


def union_ecd(P1: EcdStructure, P2: EcdStructure) -> EcdStructure:
    return validate_ecd(P1.cat, list(P1.squares) + list(P2.squares))


# -- slices -----------------------------------------------------------------------

def slice_category(cat: FinCategory, S: str) -> FinCategory:
    """The slice C/S; objects are the morphisms into S, a morphism h: (p) -> (q)
    is named ``h@q``."""
    objects = cat.into(S)
    morphisms, identities, compose = [], {}, {}
    for q in objects:
        for p in objects:
            for h in cat.hom(cat.src(p), cat.src(q)):
                if cat.comp(q, h) == p:
                    morphisms.append(Morphism(f"{h}@{q}", p, q))
        identities[q] = f"{cat.id(cat.src(q))}@{q}"
    by_id = {m.id: m for m in morphisms}
    for m2 in morphisms:
        for m1 in morphisms:
            if m1.tgt == m2.src:
                h2, h1 = m2.id.split("@")[0], m1.id.split("@")[0]
                compose[m2.id, m1.id] = f"{cat.comp(h2, h1)}@{m2.tgt}"
    del by_id
    return FinCategory(objects, morphisms, identities, compose, cat.from_initial(S))


def localize_ecd(P: EcdStructure, S: str) -> tuple[FinCategory, EcdStructure]:
    """P/S: each square of P over every morphism from its S-corner into S."""
    cat = P.cat
    sl = slice_category(cat, S)
    squares = []
    for C in P.squares:
        for p in cat.hom(C.S, S):
            oS, oSp = p, cat.comp(p, C.g)
            oX, oXp = cat.comp(p, C.f), cat.comp(p, C.g, C.fp)

            def lift(h, tgt_obj):
                return f"{h}@{tgt_obj}"
            act_X = {h: lift(C.act_X.act[h], oX) for h in C.group.elements}
            act_Xp = {h: lift(C.act_Xp.act[h], oXp) for h in C.group.elements}
            squares.append(make_square(sl, lift(C.gp, oX), lift(C.fp, oSp), lift(C.g, oS), lift(C.f, oS),
                                       C.group, act_X, act_Xp, f"{C.name}/{p}"))
    return sl, validate_ecd(sl, squares)


def slice_density(D: "DensityStructure", sl: FinCategory, S: str) -> "DensityStructure":
    levels = {}
    for q in sl.objects:
        U = D.cat.src(q)
        lv = []
        for i in range(len(D.levels[U])):
            lv.append([f"{k}@{q}" for k in D.level(U, i)])
        levels[q] = lv
    return validate_density(sl, levels)


# -- derived squares with trivial group ------------------------------------------------

def _pullback_or_raise(cat, f, g):
    try:
        return pullback(cat, f, g)
    except NonExistent as e:
        raise MissingPullback(str(e)) from None


def _coproduct_or_raise(cat, objs):
    try:
        return coproduct(cat, objs)
    except NonExistent as e:
        raise MissingCoproduct(str(e)) from None


def prime_square(cat: FinCategory, C: EquivariantSquare) -> EquivariantSquare:
    """The trivial-group square

        G×X' --v'--> G×X
          |u'          |u
        X'×_{S'}X' --v--> X×_S X
    """
    if not is_mono(cat, C.g):
        raise NotMono(f"{C.g} is not a monomorphism")
    PX = _pullback_or_raise(cat, C.f, C.f)
    PXp = _pullback_or_raise(cat, C.fp, C.fp)
    els = list(C.group.elements)
    GX = _coproduct_or_raise(cat, [C.X] * len(els))
    GXp = _coproduct_or_raise(cat, [C.Xp] * len(els))
    # v: X'x X' -> X x X, the product of g' with itself
    v = PX.mediators[cat.comp(C.gp, PXp.p1), cat.comp(C.gp, PXp.p2)]
    # u: G×X -> X×_S X, on the h-summand (id, σ_h)
    u = GX.mediators[tuple(PX.mediators[cat.id(C.X), C.act_X.act[h]] for h in els)]
    up = GXp.mediators[tuple(PXp.mediators[cat.id(C.Xp), C.act_Xp.act[h]] for h in els)]
    vp = GXp.mediators[tuple(cat.comp(GX.injections[i], C.gp) for i in range(len(els)))]
    return make_square(cat, vp, up, v, u, name=f"{C.name}'")


def derive_prime(P: EcdStructure) -> EcdStructure:
    return validate_ecd(P.cat, [prime_square(P.cat, C) for C in P.squares])


# -- completeness ----------------------------------------------------------------

@dataclass
class CompletenessVerdict:
    status: str  # complete(sufficient) | complete(direct) | incomplete | inconclusive
    sufficient: bool
    sufficient_failures: list
    direct: str  # complete | incomplete | inconclusive
    witness: object = None

    @property
    def complete(self) -> bool:
        return self.status.startswith("complete")


def base_change(cat: FinCategory, C: EquivariantSquare, y: str) -> EquivariantSquare:
    """C ×_S Y for y: Y -> S, with the induced actions."""
    PX = _pullback_or_raise(cat, C.f, y)
    PSp = _pullback_or_raise(cat, C.g, y)
    PXp = _pullback_or_raise(cat, cat.comp(C.g, C.fp), y)
    gp = PX.mediators[cat.comp(C.gp, PXp.p1), PXp.p2]
    fp = PSp.mediators[cat.comp(C.fp, PXp.p1), PXp.p2]
    act_X = {h: PX.mediators[cat.comp(C.act_X.act[h], PX.p1), PX.p2] for h in C.group.elements}
    act_Xp = {h: PXp.mediators[cat.comp(C.act_Xp.act[h], PXp.p1), PXp.p2] for h in C.group.elements}
    return make_square(cat, gp, fp, PSp.p2, PX.p2, C.group, act_X, act_Xp, f"{C.name}x{y}")


def check_complete(P: EcdStructure, t: Topology | None = None, reading: str = "S",
                   depth: int | None = None) -> CompletenessVerdict:
    """Two-tier completeness check.

    ``reading="S"`` tests closure under base change along every Y -> S;
    ``reading="X"`` only along morphisms Y -> S that factor through f.
    """
    cat = P.cat
    t = t or P.topology()
    fails = []
    for f in cat.into(cat.initial):
        if not cat.is_iso(f):
            fails.append(f"{f} into the initial object is not an isomorphism")
    for C in P.squares:
        for y in cat.into(C.S):
            if reading == "X" and cat.factors_through(y, C.f) is None:
                continue
            try:
                B = base_change(cat, C, y)
            except (MissingPullback, CategoryError) as e:
                fails.append(f"base change of {C.name} along {y}: {e}")
                continue
            if B not in P:
                fails.append(f"base change of {C.name} along {y} is not in P")
    sufficient = not fails
    depth = depth if depth is not None else max(2, 2 * len(cat.objects))
    SC, fixed = simple_cover_sieves(cat, P.squares, depth)
    direct, witness = "complete", None
    for X in cat.objects:
        if cat.isos(X, cat.initial):
            continue
        for R in t.covering_sieves(X):
            if not any(s.members <= R.members for s in SC[X]):
                direct, witness = ("incomplete" if fixed else "inconclusive"), R
                break
        if witness is not None:
            break
    if sufficient:
        status = "complete(sufficient)"
    elif direct == "complete":
        status = "complete(direct)"
    else:
        status = direct
    return CompletenessVerdict(status, sufficient, fails, direct, witness)


# -- regularity ----------------------------------------------------------------

@dataclass
class RegularityVerdict:
    square: str
    cartesian: bool
    mono: bool
    epi_direct: bool | None
    pullback_cover: bool | None
    regular: bool
    route: str | None
    note: str = ""


def pullback_cover_family(cat: FinCategory, C: EquivariantSquare) -> list[str] | None:
    """The family {X'×_{S'}X' -> X×_S X, G×X -> X×_S X}, or None if absent."""
    try:
        D = prime_square(cat, C)
    except (MissingPullback, MissingCoproduct, NotMono):
        return None
    return [D.g, D.f]


def check_regular(P: EcdStructure, t: Topology | None = None) -> list[RegularityVerdict]:
    from .setsheaf import is_epi, regularity_map
    cat = P.cat
    t = t or P.topology()
    out = []
    for C in P.squares:
        cart = is_pullback(cat, C.f, C.g, C.gp, C.fp) is not None
        mono = is_mono(cat, C.g)
        epi = None
        if cart and mono:
            epi = is_epi(regularity_map(C, t), t)
        fam = pullback_cover_family(cat, C)
        cover = None if fam is None else t.is_covering(sieve_generated(cat, fam))
        # the definition decides; the pullback-cover test is reported alongside
        regular = cart and mono and bool(epi)
        route = None
        if regular:
            route = "direct+cover" if cover else "direct"
        note = "" if cart else "not Cartesian as stated"
        if cover and not epi and cart and mono:
            note = "pullback-cover test passes but the comparison map is not an epimorphism"
        out.append(RegularityVerdict(C.name, cart, mono, epi, cover, regular, route, note))
    return out


def is_regular(P: EcdStructure, t: Topology | None = None) -> bool:
    return all(v.regular for v in check_regular(P, t))


# -- density structures ----------------------------------------------------------------

class DensityStructure:
    def __init__(self, cat: FinCategory, levels: dict):
        self.cat = cat
        self.levels: dict[str, list[frozenset]] = {S: [frozenset(lv) for lv in levels[S]] for S in cat.objects}

    def level(self, S: str, i: int) -> frozenset:
        lv = self.levels[S]
        return lv[min(i, len(lv) - 1)]

    def dim(self, S: str) -> int:
        for i, lv in enumerate(self.levels[S]):
            if all(self.cat.is_iso(f) for f in lv):
                return i
        raise InfiniteDimension(f"D_i({S}) never consists of isomorphisms")

    def max_dim(self) -> int:
        return max(self.dim(S) for S in self.cat.objects)

    def to_dict(self) -> dict:
        return {S: [sorted(lv) for lv in lvs] for S, lvs in self.levels.items()}


def density_violations(D: DensityStructure) -> list[str]:
    cat = D.cat
    bad = []
    for S in cat.objects:
        if not D.levels[S]:
            bad.append(f"no levels for {S}")
            continue
        depth = len(D.levels[S]) + 1
        for i in range(depth):
            for f in D.level(S, i):
                if cat.tgt(f) != S:
                    bad.append(f"{f} in D_{i}({S}) does not land in {S}")
        if cat.from_initial(S) not in D.level(S, 0):
            bad.append(f"initial morphism into {S} missing from D_0({S})")
        isos = {f for f in cat.into(S) if cat.is_iso(f)}
        for i in range(depth):
            if not isos <= D.level(S, i):
                bad.append(f"D_{i}({S}) misses isomorphisms")
            if not D.level(S, i + 1) <= D.level(S, i):
                bad.append(f"D_{i + 1}({S}) not contained in D_{i}({S})")
    if bad:
        return bad
    for S in cat.objects:
        for i in range(max(len(D.levels[X]) for X in cat.objects) + 1):
            for f in D.level(S, i):
                for g in D.level(cat.src(f), i):
                    if cat.comp(f, g) not in D.level(S, i):
                        bad.append(f"{f}∘{g} not in D_{i}({S})")
    return bad


def validate_density(cat: FinCategory, levels: dict) -> DensityStructure:
    D = DensityStructure(cat, levels)
    bad = density_violations(D)
    if bad:
        raise AxiomViolation(bad[0], bad)
    for S in cat.objects:
        D.dim(S)
    return D


def load_density(cat: FinCategory, text: str) -> DensityStructure:
    return validate_density(cat, json.loads(text))


def dim_D(D: DensityStructure, S: str) -> int:
    return D.dim(S)


@dataclass
class ReducingVerdict:
    reducing: bool
    witness: tuple | None = None  # (i, X_0, S_0', X_0')

    def __bool__(self):
        return self.reducing


def is_reducing(C: EquivariantSquare, D: DensityStructure, P: EcdStructure) -> ReducingVerdict:
    cat = P.cat
    top = max(D.dim(X) for X in C.corners())
    morphs = {C1.name: list(square_morphisms(cat, C1, C)) for C1 in P.squares}
    for i in range(top + 1):
        for x0 in sorted(D.level(C.X, i + 1)):
            for s0 in sorted(D.level(C.Sp, i + 1)):
                for xp0 in sorted(D.level(C.Xp, i)):
                    ok = False
                    for C1 in P.squares:
                        for _, a, b, c, d in morphs[C1.name]:
                            if d not in D.level(C.S, i + 1):
                                continue
                            if (cat.factors_through(b, x0) is not None
                                    and cat.factors_through(c, s0) is not None
                                    and cat.factors_through(a, xp0) is not None):
                                ok = True
                                break
                        if ok:
                            break
                    if not ok:
                        return ReducingVerdict(False, (i, x0, s0, xp0))
    return ReducingVerdict(True)


@dataclass
class BoundedVerdict:
    bounded: bool
    refinements: dict  # square name -> refining square name or None
    witnesses: dict

    def __bool__(self):
        return self.bounded


def check_bounded(P: EcdStructure, D: DensityStructure) -> BoundedVerdict:
    cat = P.cat
    refs, wits = {}, {}
    for C in P.squares:
        found = None
        candidates = [C] + [C1 for C1 in P.squares if C1 is not C]
        for C1 in candidates:
            if C1 is not C and next(square_morphisms(cat, C1, C, iso_on_S=True), None) is None:
                continue
            v = is_reducing(C1, D, P)
            if v:
                found = C1.name
                break
            wits.setdefault(C.name, []).append((C1.name, v.witness))
        refs[C.name] = found
    return BoundedVerdict(all(r is not None for r in refs.values()), refs, wits)
