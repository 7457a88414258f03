"""Finite categories with an initial object, finite groups and their actions.

Objects and morphisms are opaque string ids.  Universal properties
(pullbacks, coproducts) are certified by exhaustive search over the finite
category; the mediating morphisms found during the search are kept on the
result so a caller can audit them.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence


class CategoryError(ValueError):
    """Base class for malformed categorical data."""

    def __init__(self, message: str, violations: Sequence[str] = ()):
        super().__init__(message)
        self.violations = list(violations)


class MalformedComposition(CategoryError):
    pass


class NotInitial(CategoryError):
    pass


class NonExistent(CategoryError):
    """A requested limit or colimit does not exist among the finite objects."""


class NotOver(CategoryError):
    pass


class NotHomomorphism(CategoryError):
    pass


@dataclass(frozen=True)
class Morphism:
    id: str
    src: str
    tgt: str


class FinCategory:
    """A validated finite category.

    Use :func:`validate_category` (or one of the builders below) to obtain
    one; the constructor performs the full axiom check.
    """

    def __init__(self, objects, morphisms, identities, compose, initial):
        self.objects: tuple[str, ...] = tuple(objects)
        self.morphisms: dict[str, Morphism] = {m.id: m for m in morphisms}
        self.identities: dict[str, str] = dict(identities)
        self.initial: str = initial
        self._compose: dict[tuple[str, str], str] = dict(compose)
        self._hom: dict[tuple[str, str], tuple[str, ...]] = {}
        for X in self.objects:
            for Y in self.objects:
                self._hom[X, Y] = ()
        buckets: dict[tuple[str, str], list[str]] = {}
        for m in morphisms:
            buckets.setdefault((m.src, m.tgt), []).append(m.id)
        for k, v in buckets.items():
            self._hom[k] = tuple(sorted(v))
        violations = self._check()
        if violations:
            kind = NotInitial if all(v.startswith("initial") for v in violations) else MalformedComposition
            raise kind("; ".join(violations[:5]), violations)

    # -- structure -----------------------------------------------------------
    def src(self, f: str) -> str:
        return self.morphisms[f].src

    def tgt(self, f: str) -> str:
        return self.morphisms[f].tgt

    def hom(self, X: str, Y: str) -> tuple[str, ...]:
        return self._hom[X, Y]

    def into(self, Y: str) -> list[str]:
        return [f for X in self.objects for f in self._hom[X, Y]]

    def out_of(self, X: str) -> list[str]:
        return [f for Y in self.objects for f in self._hom[X, Y]]

    def id(self, X: str) -> str:
        return self.identities[X]

    def comp(self, *fs: str) -> str:
        """Composite ``fs[0] ∘ fs[1] ∘ ...`` (rightmost applied first)."""
        out = fs[-1]
        for g in reversed(fs[:-1]):
            try:
                out = self._compose[g, out]
            except KeyError:
                raise MalformedComposition(f"{g} and {out} are not composable") from None
        return out

    def composable(self, g: str, f: str) -> bool:
        return self.src(g) == self.tgt(f)

    def from_initial(self, X: str) -> str:
        return self._hom[self.initial, X][0]

    def is_iso(self, f: str) -> bool:
        return self.inverse(f) is not None

    def inverse(self, f: str) -> str | None:
        X, Y = self.src(f), self.tgt(f)
        for g in self._hom[Y, X]:
            if self.comp(g, f) == self.id(X) and self.comp(f, g) == self.id(Y):
                return g
        return None

    def isos(self, X: str, Y: str) -> list[str]:
        return [f for f in self._hom[X, Y] if self.is_iso(f)]

    def factors_through(self, f: str, g: str) -> str | None:
        """Some h with g ∘ h = f, or None."""
        for h in self._hom[self.src(f), self.src(g)]:
            if self.comp(g, h) == f:
                return h
        return None

    def generators(self) -> tuple[str, ...]:
        """Non-identity morphisms whose composites give every non-identity morphism.

        Chosen greedily in name order; a functor is determined by its values
        on these, so naturality need only be checked there.
        """
        gens = getattr(self, "_generators", None)
        if gens is not None:
            return gens
        idents = set(self.identities.values())
        reached: set[str] = set(idents)
        chosen: list[str] = []
        for f in sorted(self.morphisms, key=lambda f: (f in idents, f)):
            if f in reached:
                continue
            chosen.append(f)
            frontier = [f]
            reached.add(f)
            while frontier:
                new = []
                for a in frontier:
                    for b in list(reached):
                        for x in ((self._compose.get((a, b))), self._compose.get((b, a))):
                            if x is not None and x not in reached:
                                reached.add(x)
                                new.append(x)
                frontier = new
        self._generators = tuple(chosen)
        return self._generators

    def __repr__(self):
        return f"FinCategory({len(self.objects)} objects, {len(self.morphisms)} morphisms)"

    # -- validation ------------------------------------------------------------
    def _check(self) -> list[str]:
        bad = []
        obs = set(self.objects)
        for m in self.morphisms.values():
            if m.src not in obs or m.tgt not in obs:
                bad.append(f"morphism {m.id} has unknown endpoint")
        if bad:
            return bad
        for X in self.objects:
            i = self.identities.get(X)
            if i is None or i not in self.morphisms or self.src(i) != X or self.tgt(i) != X:
                bad.append(f"missing identity on {X}")
        if bad:
            return bad
        for g in self.morphisms.values():
            for f in self.into(g.src):
                gf = self._compose.get((g.id, f))
                if gf is None:
                    bad.append(f"missing composite ({g.id},{f})")
                elif gf not in self.morphisms or self.src(gf) != self.src(f) or self.tgt(gf) != g.tgt:
                    bad.append(f"ill-typed composite ({g.id},{f}) -> {gf}")
        for (g, f) in self._compose:
            if g not in self.morphisms or f not in self.morphisms or self.src(g) != self.tgt(f):
                bad.append(f"composite entry for non-composable pair ({g},{f})")
        if bad:
            return bad
        for f in self.morphisms.values():
            if self._compose[self.identities[f.tgt], f.id] != f.id or self._compose[f.id, self.identities[f.src]] != f.id:
                bad.append(f"identity law fails at {f.id}")
        for h in self.morphisms.values():
            for g in self.into(h.src):
                hg = self._compose[h.id, g]
                for f in self.into(self.src(g)):
                    if self._compose[hg, f] != self._compose[h.id, self._compose[g, f]]:
                        bad.append(f"associativity fails at ({h.id},{g},{f})")
        if self.initial not in obs:
            bad.append(f"initial object {self.initial} unknown")
        else:
            for X in self.objects:
                n = len(self._hom[self.initial, X])
                if n != 1:
                    bad.append(f"initial: {n} morphisms {self.initial} -> {X}")
        return bad

    # -- serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "objects": list(self.objects),
            "initial": self.initial,
            "morphisms": [{"id": m.id, "src": m.src, "tgt": m.tgt} for m in self.morphisms.values()],
            "compose": [[g, f, gf] for (g, f), gf in self._compose.items()],
            "identities": dict(self.identities),
        }

    def dumps(self) -> str:
        return dumps(self.to_dict())


def dumps(d) -> str:
    return json.dumps(d, indent=1) + "\n"


def validate_category(raw: dict | FinCategory) -> FinCategory:
    """Validate a raw site description (the JSON schema of the site file)."""
    if isinstance(raw, FinCategory):
        return raw
    try:
        morphisms = [Morphism(m["id"], m["src"], m["tgt"]) for m in raw["morphisms"]]
        compose = {}
        for entry in raw["compose"]:
            g, f, gf = entry
            compose[g, f] = gf
        return FinCategory(raw["objects"], morphisms, raw["identities"], compose, raw["initial"])
    except (KeyError, TypeError) as e:
        raise MalformedComposition(f"malformed site description: {e!r}") from None


def loads_category(text: str) -> FinCategory:
    return validate_category(json.loads(text))


# -- builders ------------------------------------------------------------------

def poset_category(elements: Sequence[str], leq: Callable[[str, str], bool], initial: str) -> FinCategory:
    """Thin category of a finite poset; the morphism X -> Y is named ``X<Y``."""
    def name(a, b):
        return f"id_{a}" if a == b else f"{a}<{b}"
    morphisms = [Morphism(name(a, b), a, b) for a in elements for b in elements if leq(a, b)]
    compose = {}
    for a, b, c in itertools.product(elements, repeat=3):
        if leq(a, b) and leq(b, c):
            compose[name(b, c), name(a, b)] = name(a, c)
    return FinCategory(elements, morphisms, {a: name(a, a) for a in elements}, compose, initial)


def concrete_category(carriers: dict[str, Sequence[Hashable]],
                      homs: Callable[[str, str], Iterable[dict]],
                      initial: str,
                      namer: Callable[[str, str, int, dict], str] | None = None) -> FinCategory:
    """Category whose objects are finite sets and morphisms chosen functions.

    ``homs(X, Y)`` yields the admissible functions (as dicts); the collection
    must contain identities and be closed under composition.
    """
    objs = list(carriers)
    fun: dict[str, tuple] = {}
    lookup: dict[tuple[str, str, tuple], str] = {}
    morphisms = []
    identities = {}
    for X in objs:
        for Y in objs:
            for k, fn in enumerate(homs(X, Y)):
                key = tuple(fn[x] for x in carriers[X])
                if (X, Y, key) in lookup:
                    continue
                mid = namer(X, Y, k, fn) if namer else f"{X}>{Y}:{k}"
                fun[mid] = key
                lookup[X, Y, key] = mid
                morphisms.append(Morphism(mid, X, Y))
        ident = tuple(carriers[X])
        if (X, X, ident) not in lookup:
            raise MalformedComposition(f"identity missing on {X}")
        identities[X] = lookup[X, X, ident]
    index = {X: {x: i for i, x in enumerate(carriers[X])} for X in objs}
    compose = {}
    for g in morphisms:
        for f in morphisms:
            if f.tgt != g.src:
                continue
            gv, fv = fun[g.id], fun[f.id]
            key = tuple(gv[index[g.src][y]] for y in fv)
            try:
                compose[g.id, f.id] = lookup[f.src, g.tgt, key]
            except KeyError:
                raise MalformedComposition(f"composite of {g.id} and {f.id} not a listed morphism") from None
    cat = FinCategory(objs, morphisms, identities, compose, initial)
    cat.functions = fun  # type: ignore[attr-defined]
    return cat


# -- limits and colimits --------------------------------------------------------

def is_mono(cat: FinCategory, f: str) -> bool:
    X = cat.src(f)
    for W in cat.objects:
        seen: dict[str, str] = {}
        for g in cat.hom(W, X):
            fg = cat.comp(f, g)
            if fg in seen:
                return False
            seen[fg] = g
    return True


@dataclass(frozen=True)
class Pullback:
    """A pullback ``obj`` of ``f: X -> S`` and ``g: S' -> S`` with projections
    ``p1: obj -> X`` and ``p2: obj -> S'``.  ``mediators`` maps every cone
    ``(a, b)`` to the unique mediating morphism."""
    obj: str
    p1: str
    p2: str
    mediators: dict = field(compare=False, repr=False, default_factory=dict)


def _pullback_cones(cat, f, g, W):
    X, Sp = cat.src(f), cat.src(g)
    for a in cat.hom(W, X):
        fa = cat.comp(f, a)
        for b in cat.hom(W, Sp):
            if cat.comp(g, b) == fa:
                yield a, b


def is_pullback(cat: FinCategory, f: str, g: str, p1: str, p2: str) -> dict | None:
    """Mediator table if (p1, p2) is a pullback of (f, g), else None."""
    P = cat.src(p1)
    if cat.comp(f, p1) != cat.comp(g, p2):
        return None
    mediators = {}
    for W in cat.objects:
        for a, b in _pullback_cones(cat, f, g, W):
            us = [u for u in cat.hom(W, P) if cat.comp(p1, u) == a and cat.comp(p2, u) == b]
            if len(us) != 1:
                return None
            mediators[a, b] = us[0]
    return mediators


def pullback(cat: FinCategory, f: str, g: str) -> Pullback:
    if cat.tgt(f) != cat.tgt(g):
        raise CategoryError(f"{f} and {g} have different targets")
    for P in cat.objects:
        for p1, p2 in _pullback_cones(cat, f, g, P):
            med = is_pullback(cat, f, g, p1, p2)
            if med is not None:
                return Pullback(P, p1, p2, med)
    raise NonExistent(f"no pullback of {f} and {g}")


@dataclass(frozen=True)
class Coproduct:
    obj: str
    injections: tuple[str, ...]
    mediators: dict = field(compare=False, repr=False, default_factory=dict)


def is_coproduct(cat: FinCategory, injections: Sequence[str], obj: str) -> dict | None:
    srcs = [cat.src(i) for i in injections]
    mediators = {}
    for W in cat.objects:
        for cocone in itertools.product(*(cat.hom(X, W) for X in srcs)):
            us = [u for u in cat.hom(obj, W)
                  if all(cat.comp(u, i) == a for i, a in zip(injections, cocone))]
            if len(us) != 1:
                return None
            mediators[cocone] = us[0]
    return mediators


def coproduct(cat: FinCategory, objects: Sequence[str]) -> Coproduct:
    objects = list(objects)
    for Q in cat.objects:
        for inj in itertools.product(*(cat.hom(X, Q) for X in objects)):
            med = is_coproduct(cat, inj, Q)
            if med is not None:
                return Coproduct(Q, tuple(inj), med)
    raise NonExistent(f"no coproduct of {objects}")


def isomorphic_objects(cat: FinCategory, X: str, Y: str) -> str | None:
    isos = cat.isos(X, Y)
    return isos[0] if isos else None


# -- groups ----------------------------------------------------------------------

class FinGroup:
    """Finite group given by a multiplication table ``mul[a, b] = a*b``."""

    def __init__(self, elements: Sequence[Hashable], mul: dict, unit: Hashable, name: str = "G"):
        self.elements = tuple(elements)
        self.mul = dict(mul)
        self.unit = unit
        self.name = name
        bad = self._check()
        if bad:
            raise NotHomomorphism("not a group: " + "; ".join(bad[:3]), bad)
        self.inv = {a: next(b for b in self.elements if self.mul[a, b] == unit) for a in self.elements}

    def _check(self):
        E = set(self.elements)
        bad = []
        for a in self.elements:
            for b in self.elements:
                if self.mul.get((a, b)) not in E:
                    bad.append(f"product {a}*{b} missing")
        if bad:
            return bad
        for a, b, c in itertools.product(self.elements, repeat=3):
            if self.mul[self.mul[a, b], c] != self.mul[a, self.mul[b, c]]:
                bad.append(f"associativity at {a},{b},{c}")
                break
        if self.unit not in E:
            return bad + ["unit missing"]
        for a in self.elements:
            if self.mul[self.unit, a] != a or self.mul[a, self.unit] != a:
                bad.append(f"unit law at {a}")
            if not any(self.mul[a, b] == self.unit for b in self.elements):
                bad.append(f"no inverse for {a}")
        return bad

    @property
    def order(self) -> int:
        return len(self.elements)

    def __repr__(self):
        return f"FinGroup({self.name}, order {self.order})"

    def to_dict(self) -> dict:
        return {"name": self.name, "elements": [str(e) for e in self.elements], "unit": str(self.unit),
                "mul": [[str(a), str(b), str(self.mul[a, b])] for a in self.elements for b in self.elements]}

    @classmethod
    def from_dict(cls, d) -> "FinGroup":
        return cls(d["elements"], {(a, b): c for a, b, c in d["mul"]}, d["unit"], d.get("name", "G"))


def cyclic_group(n: int) -> FinGroup:
    els = [f"r{i}" for i in range(n)]
    return FinGroup(els, {(els[i], els[j]): els[(i + j) % n] for i in range(n) for j in range(n)}, els[0], f"C{n}")


def trivial_group() -> FinGroup:
    return FinGroup(["e"], {("e", "e"): "e"}, "e", "1")


def symmetric_group(n: int) -> FinGroup:
    perms = list(itertools.permutations(range(n)))
    name = {p: "".join(map(str, p)) for p in perms}
    mul = {(name[p], name[q]): name[tuple(p[q[i]] for i in range(n))] for p in perms for q in perms}
    return FinGroup([name[p] for p in perms], mul, name[tuple(range(n))], f"S{n}")


def group_isomorphisms(G: FinGroup, H: FinGroup):
    """Yield all isomorphisms G -> H as dicts (backtracking over images)."""
    if G.order != H.order:
        return
    els = list(G.elements)

    def extend(phi):
        if len(phi) == len(els):
            yield dict(phi)
            return
        a = els[len(phi)]
        used = set(phi.values())
        for b in H.elements:
            if b in used:
                continue
            phi[a] = b
            ok = all(
                G.mul[x, y] not in phi or H.mul[phi[x], phi[y]] == phi[G.mul[x, y]]
                for x in phi for y in phi
            )
            if ok:
                yield from extend(phi)
            del phi[a]

    yield from extend({})


@dataclass(frozen=True)
class GroupAction:
    """Left action of ``group`` on ``carrier`` by automorphisms over ``over``."""
    group: FinGroup
    carrier: str
    over: str
    act: dict

    def __call__(self, g) -> str:
        return self.act[g]

    def to_dict(self) -> dict:
        return {"carrier": self.carrier, "over": self.over, "act": {str(g): m for g, m in self.act.items()}}


def validate_group_action(cat: FinCategory, group: FinGroup, carrier: str, over: str, act: dict) -> GroupAction:
    if cat.src(over) != carrier:
        raise NotOver(f"structural morphism {over} does not start at {carrier}")
    bad_hom, bad_over = [], []
    for g in group.elements:
        s = act.get(g)
        if s is None or cat.src(s) != carrier or cat.tgt(s) != carrier:
            bad_hom.append(f"σ_{g} missing or not an endomorphism of {carrier}")
    if bad_hom:
        raise NotHomomorphism(bad_hom[0], bad_hom)
    if act[group.unit] != cat.id(carrier):
        bad_hom.append(f"σ_e = {act[group.unit]} is not the identity")
    for g in group.elements:
        for h in group.elements:
            if cat.comp(act[g], act[h]) != act[group.mul[g, h]]:
                bad_hom.append(f"σ_{g}∘σ_{h} ≠ σ_{group.mul[g, h]}")
        if not cat.is_iso(act[g]):
            bad_hom.append(f"σ_{g} not invertible")
        if cat.comp(over, act[g]) != over:
            bad_over.append(f"{over}∘σ_{g} ≠ {over}")
    if bad_hom:
        raise NotHomomorphism(bad_hom[0], bad_hom)
    if bad_over:
        raise NotOver(bad_over[0], bad_over)
    return GroupAction(group, carrier, over, dict(act))


def trivial_action(cat: FinCategory, carrier: str, over: str, group: FinGroup | None = None) -> GroupAction:
    group = group or trivial_group()
    return validate_group_action(cat, group, carrier, over, {g: cat.id(carrier) for g in group.elements})
