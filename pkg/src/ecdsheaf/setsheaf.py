"""Presheaves of finite sets and their t-sheafification.

On a finite site the covering sieves of an object are closed under
intersection, so the plus construction at X reduces to matching families
over the smallest covering sieve of X.  Elements are opaque hashable tokens;
sheafified elements are tuples indexed by the sorted members of that sieve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterable

from .fincat import CategoryError, FinCategory, GroupAction
from .sieves import Sieve, Topology


class NotASheaf(CategoryError):
    pass


class SetPresheaf:
    def __init__(self, cat: FinCategory, at: dict, restrict: dict, name: str = "F"):
        self.cat = cat
        self.at: dict[str, tuple] = {X: tuple(at[X]) for X in cat.objects}
        self.restrict: dict[str, dict] = restrict
        self.name = name

    def __call__(self, X: str) -> tuple:
        return self.at[X]

    def res(self, f: str, x: Hashable) -> Hashable:
        return self.restrict[f][x]

    def size(self, X: str) -> int:
        return len(self.at[X])

    def sizes(self) -> dict[str, int]:
        return {X: len(v) for X, v in self.at.items()}

    def check_functorial(self) -> list[str]:
        cat = self.cat
        bad = []
        for f, m in cat.morphisms.items():
            table = self.restrict.get(f)
            if table is None or set(table) != set(self.at[m.tgt]) or not set(table.values()) <= set(self.at[m.src]):
                bad.append(f"restriction along {f} malformed")
        if bad:
            return bad
        for X in cat.objects:
            if any(self.restrict[cat.id(X)][x] != x for x in self.at[X]):
                bad.append(f"identity on {X} acts non-trivially")
        for g in cat.morphisms:
            for f in cat.into(cat.src(g)):
                gf = cat.comp(g, f)
                for z in self.at[cat.tgt(g)]:
                    if self.restrict[gf][z] != self.restrict[f][self.restrict[g][z]]:
                        bad.append(f"F({g}∘{f}) ≠ F({f})F({g})")
                        break
        return bad

    def to_dict(self) -> dict:
        return {"name": self.name,
                "sets": {X: [str(x) for x in self.at[X]] for X in self.cat.objects},
                "restrict": {f: {str(k): str(v) for k, v in t.items()} for f, t in self.restrict.items()}}

    @classmethod
    def from_dict(cls, cat: FinCategory, d: dict) -> "SetPresheaf":
        return cls(cat, d["sets"], d["restrict"], d.get("name", "F"))

    def __repr__(self):
        return f"SetPresheaf({self.name}: {self.sizes()})"


@dataclass
class SetSheafMap:
    source: SetPresheaf
    target: SetPresheaf
    components: dict  # X -> dict

    def __call__(self, X, x):
        return self.components[X][x]

    def is_natural(self) -> bool:
        cat = self.source.cat
        for f, m in cat.morphisms.items():
            for y in self.source.at[m.tgt]:
                if self.components[m.src][self.source.res(f, y)] != self.target.res(f, self.components[m.tgt][y]):
                    return False
        return True

    def is_iso(self) -> bool:
        return all(len(set(c.values())) == len(c) == len(self.target.at[X])
                   for X, c in self.components.items())

    def is_pointwise_surjective(self) -> bool:
        return all(set(c.values()) == set(self.target.at[X]) for X, c in self.components.items())

    def then(self, other: "SetSheafMap") -> "SetSheafMap":
        return SetSheafMap(self.source, other.target,
                           {X: {x: other.components[X][y] for x, y in c.items()} for X, c in self.components.items()})


def identity_map(F: SetPresheaf) -> SetSheafMap:
    return SetSheafMap(F, F, {X: {x: x for x in F.at[X]} for X in F.cat.objects})


# -- constructions ----------------------------------------------------------------

def representable(cat: FinCategory, S: str) -> SetPresheaf:
    at = {U: cat.hom(U, S) for U in cat.objects}
    restrict = {f: {h: cat.comp(h, f) for h in at[m.tgt]} for f, m in cat.morphisms.items()}
    return SetPresheaf(cat, at, restrict, f"rho({S})")


def constant(cat: FinCategory, elements: Iterable[Hashable], name: str = "const") -> SetPresheaf:
    els = tuple(elements)
    return SetPresheaf(cat, {X: els for X in cat.objects},
                       {f: {x: x for x in els} for f in cat.morphisms}, name)


def represented_map(cat: FinCategory, u: str, source: SetPresheaf | None = None,
                    target: SetPresheaf | None = None) -> SetSheafMap:
    """ρ(u): ρ(A) -> ρ(B) for u: A -> B, h |-> u∘h."""
    source = source or representable(cat, cat.src(u))
    target = target or representable(cat, cat.tgt(u))
    return SetSheafMap(source, target, {U: {h: cat.comp(u, h) for h in source.at[U]} for U in cat.objects})


def orbit_quotient(cat: FinCategory, action: GroupAction) -> tuple[SetPresheaf, SetSheafMap]:
    """U |-> Hom(U, S)/G with lexicographically least orbit representatives."""
    S = action.carrier
    rho = representable(cat, S)

    def rep(h):
        return min(cat.comp(action.act[g], h) for g in action.group.elements)

    at = {U: tuple(sorted({rep(h) for h in rho.at[U]})) for U in cat.objects}
    restrict = {f: {r: rep(cat.comp(r, f)) for r in at[m.tgt]} for f, m in cat.morphisms.items()}
    Q = SetPresheaf(cat, at, restrict, f"rho({S})_{action.group.name}")
    q = SetSheafMap(rho, Q, {U: {h: rep(h) for h in rho.at[U]} for U in cat.objects})
    return Q, q


def quotient_map_to(cat: FinCategory, action: GroupAction, Q: SetPresheaf, target: SetPresheaf,
                    along: Callable[[str], Hashable]) -> SetSheafMap:
    """Map out of an orbit quotient determined on representatives."""
    return SetSheafMap(Q, target, {U: {r: along(r) for r in Q.at[U]} for U in cat.objects})


def fiber_product(a: SetSheafMap, b: SetSheafMap, name: str = "P") -> tuple[SetPresheaf, SetSheafMap, SetSheafMap]:
    """Objectwise fiber product of a: A -> C and b: B -> C."""
    cat = a.source.cat
    A, B = a.source, b.source
    at = {X: tuple((x, y) for x in A.at[X] for y in B.at[X] if a.components[X][x] == b.components[X][y])
          for X in cat.objects}
    restrict = {f: {(x, y): (A.res(f, x), B.res(f, y)) for (x, y) in at[m.tgt]}
                for f, m in cat.morphisms.items()}
    P = SetPresheaf(cat, at, restrict, name)
    p1 = SetSheafMap(P, A, {X: {p: p[0] for p in at[X]} for X in cat.objects})
    p2 = SetSheafMap(P, B, {X: {p: p[1] for p in at[X]} for X in cat.objects})
    return P, p1, p2


def pair_map(p: SetSheafMap, q: SetSheafMap, target: SetPresheaf) -> SetSheafMap:
    """x |-> (p(x), q(x)) into a fiber product ``target``."""
    return SetSheafMap(p.source, target,
                       {X: {x: (p.components[X][x], q.components[X][x]) for x in p.source.at[X]}
                        for X in p.source.cat.objects})


def coproduct(*Fs: SetPresheaf, name: str = "coprod") -> tuple[SetPresheaf, list[SetSheafMap]]:
    cat = Fs[0].cat
    at = {X: tuple((i, x) for i, F in enumerate(Fs) for x in F.at[X]) for X in cat.objects}
    restrict = {f: {(i, x): (i, Fs[i].res(f, x)) for (i, x) in at[m.tgt]} for f, m in cat.morphisms.items()}
    C = SetPresheaf(cat, at, restrict, name)
    inj = [SetSheafMap(F, C, {X: {x: (i, x) for x in F.at[X]} for X in cat.objects}) for i, F in enumerate(Fs)]
    return C, inj


def copair(maps: list[SetSheafMap], source: SetPresheaf) -> SetSheafMap:
    cat = source.cat
    return SetSheafMap(source, maps[0].target,
                       {X: {(i, x): maps[i].components[X][x] for (i, x) in source.at[X]} for X in cat.objects})


def pushout(a: SetSheafMap, b: SetSheafMap, name: str = "pushout") -> tuple[SetPresheaf, SetSheafMap, SetSheafMap]:
    """Objectwise pushout of B <-a- A -b-> C; classes are canonical tuples."""
    cat = a.source.cat
    B, C = a.target, b.target
    classes: dict[str, dict] = {}
    for X in cat.objects:
        parent = {("B", x): ("B", x) for x in B.at[X]}
        parent.update({("C", y): ("C", y) for y in C.at[X]})

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u
        for z in a.source.at[X]:
            u, v = find(("B", a.components[X][z])), find(("C", b.components[X][z]))
            if u != v:
                parent[max(u, v, key=repr)] = min(u, v, key=repr)
        groups: dict = {}
        for u in parent:
            groups.setdefault(find(u), []).append(u)
        cls = {}
        for members in groups.values():
            token = tuple(sorted(members, key=repr))
            for u in members:
                cls[u] = token
        classes[X] = cls
    at = {X: tuple(sorted(set(classes[X].values()), key=repr)) for X in cat.objects}
    restrict = {}
    for f, m in cat.morphisms.items():
        table = {}
        for token in at[m.tgt]:
            side, x = token[0]
            F = B if side == "B" else C
            table[token] = classes[m.src][(side, F.res(f, x))]
        restrict[f] = table
    Pq = SetPresheaf(cat, at, restrict, name)
    iB = SetSheafMap(B, Pq, {X: {x: classes[X][("B", x)] for x in B.at[X]} for X in cat.objects})
    iC = SetSheafMap(C, Pq, {X: {y: classes[X][("C", y)] for y in C.at[X]} for X in cat.objects})
    return Pq, iB, iC


# -- matching families ----------------------------------------------------------------

def matching_families(F: SetPresheaf, R: Sieve) -> list[tuple]:
    """All matching families for F over R, as tuples ordered by ``R.ids()``."""
    cat = F.cat
    members = R.ids()
    index = {f: i for i, f in enumerate(members)}
    # (f, h, f∘h) constraints, grouped by f
    downstream = {f: [(h, index[cat.comp(f, h)]) for h in cat.into(cat.src(f))] for f in members}
    out = []
    values: list = [None] * len(members)

    def assign(i, x, trail):
        """Set family[i]=x and propagate; False on conflict."""
        stack = [(i, x)]
        while stack:
            k, v = stack.pop()
            if values[k] is not None:
                if values[k] != v:
                    return False
                continue
            values[k] = v
            trail.append(k)
            for h, j in downstream[members[k]]:
                stack.append((j, F.res(h, v)))
        return True

    def rec(i):
        while i < len(members) and values[i] is not None:
            i += 1
        if i == len(members):
            out.append(tuple(values))
            return
        for x in F.at[cat.src(members[i])]:
            trail: list = []
            if assign(i, x, trail):
                rec(i + 1)
            for k in trail:
                values[k] = None

    rec(0)
    return out


def _family_restrict(cat: FinCategory, fam: tuple, R_ids: list, g: str, R_small_ids: list) -> tuple:
    idx = {f: i for i, f in enumerate(R_ids)}
    return tuple(fam[idx[cat.comp(g, k)]] for k in R_small_ids)


def plus(F: SetPresheaf, t: Topology) -> tuple[SetPresheaf, SetSheafMap]:
    cat = F.cat
    covers = {X: t.minimal_cover(X).ids() for X in cat.objects}
    at = {X: tuple(matching_families(F, t.minimal_cover(X))) for X in cat.objects}
    restrict = {}
    for g, m in cat.morphisms.items():
        restrict[g] = {fam: _family_restrict(cat, fam, covers[m.tgt], g, covers[m.src]) for fam in at[m.tgt]}
    Fp = SetPresheaf(cat, at, restrict, F.name + "+")
    unit = SetSheafMap(F, Fp, {X: {x: tuple(F.res(f, x) for f in covers[X]) for x in F.at[X]}
                               for X in cat.objects})
    return Fp, unit


def plus_map(phi: SetSheafMap, t: Topology, Fp: SetPresheaf, Gp: SetPresheaf) -> SetSheafMap:
    cat = phi.source.cat
    comps = {}
    for X in cat.objects:
        R = t.minimal_cover(X).ids()
        comps[X] = {fam: tuple(phi.components[cat.src(f)][x] for f, x in zip(R, fam)) for fam in Fp.at[X]}
    return SetSheafMap(Fp, Gp, comps)


@dataclass
class SetSheafification:
    sheaf: SetPresheaf
    unit: SetSheafMap
    _stages: tuple  # (F+, unit1, F++, unit2) for transporting maps


def sheafify_set(F: SetPresheaf, t: Topology) -> SetSheafification:
    Fp, u1 = plus(F, t)
    Fpp, u2 = plus(Fp, t)
    Fpp.name = f"a({F.name})"
    return SetSheafification(Fpp, u1.then(u2), (Fp, u1, Fpp, u2))


def sheafify_set_map(phi: SetSheafMap, aF: SetSheafification, aG: SetSheafification, t: Topology) -> SetSheafMap:
    m1 = plus_map(phi, t, aF._stages[0], aG._stages[0])
    return plus_map(m1, t, aF._stages[2], aG._stages[2])


def is_sheaf_set(F: SetPresheaf, t: Topology) -> bool:
    return not sheaf_violations_set(F, t)


def sheaf_violations_set(F: SetPresheaf, t: Topology) -> list[str]:
    """Check F(X) -> Match(R, F) is a bijection for every covering sieve R."""
    cat = F.cat
    bad = []
    for X in cat.objects:
        for R in t.covering_sieves(X):
            fams = matching_families(F, R)
            ids = R.ids()
            image = {tuple(F.res(f, x) for f in ids) for x in F.at[X]}
            if len(image) != len(F.at[X]) or len(fams) != len(F.at[X]):
                bad.append(f"sheaf condition fails at {X} for sieve {ids}")
    return bad


# -- group quotients, epimorphisms ----------------------------------------------------

def group_quotient_sheaf(cat: FinCategory, action: GroupAction, t: Topology):
    """ρ_t(S)_G together with the epimorphism ρ_t(S) -> ρ_t(S)_G.

    Returns ``(quotient_sheaf, epi, a_rho, a_quot)`` where the last two are the
    sheafification records of ρ(S) and of the orbit presheaf.
    """
    Q, q = orbit_quotient(cat, action)
    a_rho = sheafify_set(q.source, t)
    a_q = sheafify_set(Q, t)
    epi = sheafify_set_map(q, a_rho, a_q, t)
    return a_q.sheaf, epi, a_rho, a_q


def is_locally_surjective(phi: SetSheafMap, t: Topology) -> bool:
    cat = phi.source.cat
    images = {X: set(c.values()) for X, c in phi.components.items()}
    for X in cat.objects:
        R = t.minimal_cover(X)
        for b in phi.target.at[X]:
            if not all(phi.target.res(f, b) in images[cat.src(f)] for f in R.members):
                return False
    return True


def is_epi(phi: SetSheafMap, t: Topology, check_sheaves: bool = True) -> bool:
    if check_sheaves:
        for F in (phi.source, phi.target):
            bad = sheaf_violations_set(F, t)
            if bad:
                raise NotASheaf(f"{F.name}: {bad[0]}", bad)
    return is_locally_surjective(phi, t)


# -- the regularity comparison map and (co)Cartesian checks ------------------------------

def regularity_map(square, t: Topology) -> SetSheafMap:
    """The sheafified comparison map

        (ρ(X')×_{ρ(S')}ρ(X')_G) ∐ ρ(X)  ->  ρ(X)×_{ρ(S)}ρ(X)_G.

    Both sides are built as presheaves and sheafified once (sheafification
    preserves finite limits and colimits).
    """
    from .fincat import is_mono, is_pullback

    cat = t.cat
    if is_pullback(cat, square.f, square.g, square.gp, square.fp) is None:
        from .ecd import NotCartesian
        raise NotCartesian(f"square {square.name} is not Cartesian")
    if not is_mono(cat, square.g):
        from .ecd import NotMono
        raise NotMono(f"{square.g} is not a monomorphism")
    rhoXp, rhoX = representable(cat, square.Xp), representable(cat, square.X)
    rhoSp, rhoS = representable(cat, square.Sp), representable(cat, square.S)
    QXp, qXp = orbit_quotient(cat, square.act_Xp)
    QX, qX = orbit_quotient(cat, square.act_X)

    def orbit_rep(action, h):
        return min(cat.comp(action.act[g], h) for g in action.group.elements)

    # left fiber product over ρ(S')
    a_left = represented_map(cat, square.fp, rhoXp, rhoSp)
    b_left = SetSheafMap(QXp, rhoSp, {U: {r: cat.comp(square.fp, r) for r in QXp.at[U]} for U in cat.objects})
    L1, _, _ = fiber_product(a_left, b_left, "lhs1")
    # right fiber product over ρ(S)
    a_right = represented_map(cat, square.f, rhoX, rhoS)
    b_right = SetSheafMap(QX, rhoS, {U: {r: cat.comp(square.f, r) for r in QX.at[U]} for U in cat.objects})
    RHS, _, _ = fiber_product(a_right, b_right, "rhs")
    LHS, _ = coproduct(L1, rhoX, name="lhs")
    comps = {}
    for U in cat.objects:
        table = {}
        for (i, x) in LHS.at[U]:
            if i == 0:
                h, r = x
                table[(i, x)] = (cat.comp(square.gp, h), orbit_rep(square.act_X, cat.comp(square.gp, r)))
            else:
                table[(i, x)] = (x, orbit_rep(square.act_X, x))
        comps[U] = table
    phi = SetSheafMap(LHS, RHS, comps)
    aL, aR = sheafify_set(LHS, t), sheafify_set(RHS, t)
    return sheafify_set_map(phi, aL, aR, t)


def fixed_points_set(F: SetPresheaf, action: GroupAction) -> tuple:
    X = action.carrier
    return tuple(x for x in F.at[X] if all(F.res(action.act[g], x) == x for g in action.group.elements))


def cartesian_sets_check(F: SetPresheaf, square, t: Topology, check_sheaf: bool = True) -> bool:
    """Is F(S) -> F(S') ×_{F(X')^G} F(X)^G a bijection?"""
    if check_sheaf:
        bad = sheaf_violations_set(F, t)
        if bad:
            raise NotASheaf(bad[0], bad)
    FX = fixed_points_set(F, square.act_X)
    targets = set()
    for s in F.at[square.Sp]:
        for x in FX:
            if F.res(square.fp, s) == F.res(square.gp, x):
                targets.add((s, x))
    image = [(F.res(square.g, y), F.res(square.f, y)) for y in F.at[square.S]]
    return len(set(image)) == len(image) and set(image) == targets


def cocartesian_check(square, t: Topology) -> bool:
    """Is ρ_t(S) the pushout of ρ_t(S') <- ρ_t(X')_G -> ρ_t(X)_G in t-sheaves?"""
    cat = t.cat
    rhoSp, rhoS = representable(cat, square.Sp), representable(cat, square.S)
    QXp, _ = orbit_quotient(cat, square.act_Xp)
    QX, _ = orbit_quotient(cat, square.act_X)

    def orbit_rep(action, h):
        return min(cat.comp(action.act[g], h) for g in action.group.elements)

    to_Sp = SetSheafMap(QXp, rhoSp, {U: {r: cat.comp(square.fp, r) for r in QXp.at[U]} for U in cat.objects})
    to_X = SetSheafMap(QXp, QX, {U: {r: orbit_rep(square.act_X, cat.comp(square.gp, r)) for r in QXp.at[U]}
                                 for U in cat.objects})
    Po, iSp, iX = pushout(to_Sp, to_X, "pushout")
    comps = {}
    for U in cat.objects:
        table = {}
        for token in Po.at[U]:
            side, x = token[0]
            table[token] = cat.comp(square.g, x) if side == "B" else cat.comp(square.f, x)
        comps[U] = table
    phi = SetSheafMap(Po, rhoS, comps)
    aP, aS = sheafify_set(Po, t), sheafify_set(rhoS, t)
    return sheafify_set_map(phi, aP, aS, t).is_iso()


# -- random presheaves for property tests ------------------------------------------------

def generated_subpresheaf(F: SetPresheaf, gens: dict) -> SetPresheaf:
    cat = F.cat
    at = {X: set() for X in cat.objects}
    for Y, xs in gens.items():
        for x in xs:
            for f in cat.into(Y):
                at[cat.src(f)].add(F.res(f, x))
    at = {X: tuple(sorted(v, key=repr)) for X, v in at.items()}
    restrict = {f: {x: F.res(f, x) for x in at[m.tgt]} for f, m in cat.morphisms.items()}
    return SetPresheaf(cat, at, restrict, F.name + "_sub")


def quotient_by_pairs(F: SetPresheaf, pairs: dict) -> SetPresheaf:
    """Quotient by the smallest congruence containing the given pairs."""
    cat = F.cat
    parent = {(X, x): (X, x) for X in cat.objects for x in F.at[X]}

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    def union(u, v):
        u, v = find(u), find(v)
        if u == v:
            return False
        parent[max(u, v, key=repr)] = min(u, v, key=repr)
        return True

    for X, ps in pairs.items():
        for a, b in ps:
            union((X, a), (X, b))
    changed = True
    while changed:
        changed = False
        for f, m in cat.morphisms.items():
            for a in F.at[m.tgt]:
                for b in F.at[m.tgt]:
                    if find((m.tgt, a)) == find((m.tgt, b)):
                        if union((m.src, F.res(f, a)), (m.src, F.res(f, b))):
                            changed = True
    at = {X: tuple(sorted({find((X, x))[1] for x in F.at[X]}, key=repr)) for X in cat.objects}
    restrict = {f: {r: find((m.src, F.res(f, r)))[1] for r in at[m.tgt]} for f, m in cat.morphisms.items()}
    return SetPresheaf(cat, at, restrict, F.name + "_q")


def random_set_presheaf(cat: FinCategory, rng, max_pieces: int = 3, max_size: int = 6) -> SetPresheaf:
    """A random presheaf: quotient of a coproduct of representables, sometimes
    a generated subpresheaf or a constant piece."""
    while True:
        k = rng.randint(1, max_pieces)
        pieces = [representable(cat, rng.choice(cat.objects)) for _ in range(k)]
        if rng.random() < 0.3:
            pieces.append(constant(cat, range(rng.randint(1, 2))))
        F, _ = coproduct(*pieces, name="R")
        pairs = {}
        for _ in range(rng.randint(0, 3)):
            X = rng.choice(cat.objects)
            if len(F.at[X]) >= 2:
                pairs.setdefault(X, []).append(tuple(rng.sample(F.at[X], 2)))
        F = quotient_by_pairs(F, pairs)
        if rng.random() < 0.3:
            X = rng.choice([X for X in cat.objects if F.at[X]] or [cat.initial])
            if F.at[X]:
                F = generated_subpresheaf(F, {X: [rng.choice(F.at[X])]})
        if max(F.sizes().values()) <= max_size:
            F.name = "R"
            return F
