"""Sieves on a finite category and Grothendieck topologies generated by saturation."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .fincat import CategoryError, FinCategory


class MixedTargets(CategoryError):
    pass


@dataclass(frozen=True)
class Sieve:
    base: str
    members: frozenset

    def __contains__(self, f: str) -> bool:
        return f in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))

    def ids(self) -> list[str]:
        return sorted(self.members)

    def __le__(self, other: "Sieve") -> bool:  # inclusion
        return self.base == other.base and self.members <= other.members

    def __repr__(self):
        return f"Sieve({self.base}: {self.ids()})"


def sieve_generated(cat: FinCategory, family: Iterable[str], base: str | None = None) -> Sieve:
    family = list(family)
    targets = {cat.tgt(f) for f in family}
    if len(targets) > 1:
        raise MixedTargets(f"family has targets {sorted(targets)}")
    if base is None:
        if not targets:
            raise MixedTargets("empty family needs an explicit base")
        base = targets.pop()
    elif targets and targets != {base}:
        raise MixedTargets(f"family does not land in {base}")
    members = set()
    for f in family:
        for h in cat.into(cat.src(f)):
            members.add(cat.comp(f, h))
    return Sieve(base, frozenset(members))


def maximal_sieve(cat: FinCategory, X: str) -> Sieve:
    return Sieve(X, frozenset(cat.into(X)))


def empty_sieve(X: str) -> Sieve:
    return Sieve(X, frozenset())


def pullback_sieve(cat: FinCategory, R: Sieve, f: str) -> Sieve:
    if cat.tgt(f) != R.base:
        raise MixedTargets(f"{f} does not land in {R.base}")
    T = cat.src(f)
    return Sieve(T, frozenset(h for h in cat.into(T) if cat.comp(f, h) in R.members))


def is_sieve(cat: FinCategory, R: Sieve) -> bool:
    return all(cat.comp(f, h) in R.members for f in R.members for h in cat.into(cat.src(f)))


def all_sieves(cat: FinCategory, X: str) -> list[Sieve]:
    """Every sieve on X, ordered by size then ids."""
    principal = {}
    for f in cat.into(X):
        principal[f] = sieve_generated(cat, [f]).members
    found = {frozenset()}
    frontier = [frozenset()]
    while frontier:
        nxt = []
        for s in frontier:
            for f, p in principal.items():
                if f in s:
                    continue
                t = s | p
                if t not in found:
                    found.add(t)
                    nxt.append(t)
        frontier = nxt
    return sorted((Sieve(X, s) for s in found), key=lambda r: (len(r), r.ids()))


class Topology:
    """Covering sieves for every object of a finite category."""

    def __init__(self, cat: FinCategory, covers: dict[str, Iterable[Sieve]]):
        self.cat = cat
        self.covers: dict[str, frozenset] = {X: frozenset(covers.get(X, ())) for X in cat.objects}
        self._min: dict[str, Sieve] = {}

    def is_covering(self, R: Sieve) -> bool:
        return R in self.covers[R.base]

    def covering_sieves(self, X: str) -> list[Sieve]:
        return sorted(self.covers[X], key=lambda r: (-len(r), r.ids()))

    def minimal_cover(self, X: str) -> Sieve:
        """Intersection of all covering sieves of X (itself covering)."""
        if X not in self._min:
            members = frozenset(self.cat.into(X))
            for R in self.covers[X]:
                members &= R.members
            R = Sieve(X, members)
            if R not in self.covers[X]:
                raise CategoryError(f"covering sieves of {X} not closed under intersection")
            self._min[X] = R
        return self._min[X]

    def refines(self, other: "Topology") -> bool:
        """Every covering sieve of ``other`` covers here (this topology is finer)."""
        return all(other.covers[X] <= self.covers[X] for X in self.cat.objects)

    def __eq__(self, other):
        return isinstance(other, Topology) and self.covers == other.covers

    def __hash__(self):
        return hash(tuple(sorted((X, len(c)) for X, c in self.covers.items())))

    def dump(self) -> dict[str, list[list[str]]]:
        return {X: [R.ids() for R in self.covering_sieves(X)] for X in self.cat.objects}

    def __repr__(self):
        n = sum(len(c) for c in self.covers.values())
        return f"Topology({n} covering sieves)"


def _seeds_t_empty(cat: FinCategory) -> list[Sieve]:
    seeds = [maximal_sieve(cat, X) for X in cat.objects]
    seeds.append(empty_sieve(cat.initial))
    return seeds


def saturate(cat: FinCategory, seeds: Iterable[Sieve], rng: random.Random | None = None) -> Topology:
    """Least topology containing ``seeds`` and the t_∅ covers.

    ``rng`` shuffles the processing order; the fixpoint does not depend on it.
    """
    lattice = {X: all_sieves(cat, X) for X in cat.objects}
    J: dict[str, set] = {X: set() for X in cat.objects}
    for R in list(seeds) + _seeds_t_empty(cat):
        J[R.base].add(R)
    objects = list(cat.objects)
    changed = True
    while changed:
        changed = False
        if rng:
            rng.shuffle(objects)
        # pullback stability
        for S in objects:
            for R in list(J[S]):
                for f in cat.into(S):
                    Rf = pullback_sieve(cat, R, f)
                    if Rf not in J[Rf.base]:
                        J[Rf.base].add(Rf)
                        changed = True
        # local character
        for X in objects:
            candidates = list(lattice[X])
            if rng:
                rng.shuffle(candidates)
            for Rp in candidates:
                if Rp in J[X]:
                    continue
                for R in list(J[X]):
                    if all(pullback_sieve(cat, Rp, f) in J[cat.src(f)] for f in R.members):
                        J[X].add(Rp)
                        changed = True
                        break
    return Topology(cat, J)


def generate_topology(cat: FinCategory, squares: Iterable = (), rng: random.Random | None = None) -> Topology:
    """The topology t_P generated by t_∅ and the families {f, g} of the squares."""
    seeds = [sieve_generated(cat, [sq.f, sq.g]) for sq in squares]
    return saturate(cat, seeds, rng)


def join(t1: Topology, t2: Topology) -> Topology:
    seeds = [R for X in t1.cat.objects for R in t1.covers[X] | t2.covers[X]]
    return saturate(t1.cat, seeds)


def check_topology_axioms(t: Topology) -> list[str]:
    """Exhaustive audit over the sieve lattice; returns the violations."""
    cat = t.cat
    bad = []
    for X in cat.objects:
        if maximal_sieve(cat, X) not in t.covers[X]:
            bad.append(f"maximal sieve on {X} not covering")
        for R in t.covers[X]:
            if not is_sieve(cat, R):
                bad.append(f"{R} not closed under precomposition")
            for f in cat.into(X):
                if not t.is_covering(pullback_sieve(cat, R, f)):
                    bad.append(f"pullback of {R.ids()} along {f} not covering")
    if empty_sieve(cat.initial) not in t.covers[cat.initial]:
        bad.append("empty sieve does not cover the initial object")
    for X in cat.objects:
        lattice = all_sieves(cat, X)
        for R in t.covers[X]:
            for Rp in lattice:
                if Rp in t.covers[X]:
                    continue
                if all(t.is_covering(pullback_sieve(cat, Rp, f)) for f in R.members):
                    bad.append(f"local character fails: {Rp.ids()} on {X}")
    return bad


def covering_sieves(t: Topology, X: str) -> list[Sieve]:
    return t.covering_sieves(X)


# -- simple covers -----------------------------------------------------------------

class SimpleCoverResult(NamedTuple):
    found: bool
    conclusive: bool

    def __bool__(self):
        return self.found


def simple_cover_sieves(cat: FinCategory, squares: Sequence, depth: int) -> tuple[dict[str, set], bool]:
    """Sieves generated by simple covers built with at most ``depth`` iterations.

    Returns the per-object sets and whether the construction reached its
    fixpoint (so larger depths add nothing).
    """
    SC = {X: {maximal_sieve(cat, X)} for X in cat.objects}
    for _ in range(depth):
        new = {X: set(v) for X, v in SC.items()}
        for sq in squares:
            S = cat.tgt(sq.f)
            X, Sp = cat.src(sq.f), cat.src(sq.g)
            for T in cat.objects:
                for phi in cat.isos(S, T):
                    for A in SC[X]:
                        for B in SC[Sp]:
                            fam = [cat.comp(phi, sq.f, a) for a in A.members]
                            fam += [cat.comp(phi, sq.g, b) for b in B.members]
                            new[T].add(sieve_generated(cat, fam, base=T))
        if new == SC:
            return SC, True
        SC = new
    return SC, False


def is_simple_cover(cat: FinCategory, family: Sequence[str], squares: Sequence,
                    depth: int | None = None, base: str | None = None) -> SimpleCoverResult:
    """Does ``family`` refine a simple cover built in at most ``depth`` iterations?"""
    if depth is None:
        depth = 2 * len(cat.objects)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    R = sieve_generated(cat, family, base=base)
    SC, fixed = simple_cover_sieves(cat, squares, depth)
    found = any(s.members <= R.members for s in SC[R.base])
    return SimpleCoverResult(found, found or fixed)
