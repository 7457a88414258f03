"""Theorem-level verifiers: square-wise descent against t-locality.

Each verifier evaluates both sides of an equivalence independently and
reports whether they agree.  Hypothesis checks (complete, regular, bounded)
run first; when one of them fails or is inconclusive the verdict is stamped
``conditional`` but still computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ecd import (DensityStructure, EcdStructure, check_bounded, check_complete, check_regular, derive_prime,
                  union_ecd)
from .fincat import CategoryError, FinCategory, is_mono
from .homological import (LocalityVerdict, PresheafComplex, cohomology_table, homotopy_cartesian_square,
                          is_t_local, local_replacement, totalization_homology)
from .qmod import (QPresheaf, cokernel, direct_sum, random_map, random_qpresheaf, sheafify_linear,
                   sheafify_linear_map)
from .sieves import Topology

CONVENTION = "homotopy Cartesian = acyclic Tot(K(S) -> K(X)^G ⊕ K(S') -> K(X')^G)"


class VanishingFailed(CategoryError):
    pass


@dataclass
class Hypotheses:
    complete: str      # complete | not-complete | inconclusive
    regular: bool
    bounded: bool
    notes: list = field(default_factory=list)

    @property
    def hold(self) -> bool:
        return self.complete.startswith("complete") and self.regular and self.bounded

    def to_dict(self) -> dict:
        return {"complete": self.complete, "regular": self.regular, "bounded": self.bounded, "notes": self.notes}


def check_hypotheses(P: EcdStructure, D: DensityStructure | None, t: Topology | None = None) -> Hypotheses:
    t = t or P.topology()
    comp = check_complete(P, t)
    reg = check_regular(P, t)
    notes = [f"{v.square.name}: {v.note}" for v in reg if v.note]
    bounded = bool(check_bounded(P, D)) if D is not None else False
    if D is None:
        notes.append("no density structure supplied")
    return Hypotheses(comp.status, all(v.regular for v in reg), bounded, notes)


def square_table(K: PresheafComplex, squares) -> tuple[dict, dict]:
    """Per-square homotopy-Cartesian verdicts and, for failures, the
    nonzero totalization homology."""
    table, wits = {}, {}
    for C in squares:
        h = totalization_homology(K, C)
        table[C.name] = not h
        if h:
            wits[C.name] = h
    return table, wits


@dataclass
class DescentVerdict:
    squares: dict                 # square name -> homotopy Cartesian?
    locality: LocalityVerdict
    agreement: bool | None        # None when the locality side is inconclusive
    conditional: bool
    witnesses: dict = field(default_factory=dict)
    base_changes: dict = field(default_factory=dict)
    hypotheses: Hypotheses | None = None
    convention: str = CONVENTION
    empty_acyclic: bool = True    # K(∅) ≃ 0, needed by every t_∅-local complex
    agreement_with_empty: bool | None = None

    @property
    def all_squares(self) -> bool:
        return all(self.squares.values())

    def to_dict(self) -> dict:
        return {
            "squares": dict(self.squares),
            "locality": {"status": self.locality.status, "witness": self.locality.witness,
                         "checked_through": self.locality.checked_through,
                         "definitive": self.locality.definitive},
            "agreement": self.agreement,
            "empty_acyclic": self.empty_acyclic,
            "agreement_with_empty": self.agreement_with_empty,
            "conditional": self.conditional,
            "witnesses": {k: {str(n): h for n, h in v.items()} if isinstance(v, dict) else v
                          for k, v in self.witnesses.items()},
            "base_changes": dict(self.base_changes),
            "hypotheses": self.hypotheses.to_dict() if self.hypotheses else None,
            "convention": self.convention,
        }

    def summary(self) -> str:
        lines = [f"{'square':<24} homotopy-cartesian"]
        for name, ok in self.squares.items():
            lines.append(f"{name:<24} {'yes' if ok else 'no'}")
        loc = self.locality
        lines.append(f"locality: {loc.status} (through degree {loc.checked_through}"
                     + (f", witness {loc.witness}" if loc.witness else "") + ")")
        lines.append(f"K(empty) acyclic: {'yes' if self.empty_acyclic else 'no'}")
        lines.append(f"agreement: {self.agreement} (with K(empty) ≃ 0 added: {self.agreement_with_empty})")
        if self.conditional:
            lines.append("conditional: hypotheses not all verified")
        return "\n".join(lines)


def empty_is_acyclic(K: PresheafComplex) -> bool:
    e = K.cat.initial
    return all(h == 0 for h in K.homology_dims(e).values())


def _agreement(squares_ok: bool, loc: LocalityVerdict) -> bool | None:
    if loc.status == "inconclusive":
        return None
    return squares_ok == loc.local


def check_theorem_2_3(K: PresheafComplex, P: EcdStructure, D: DensityStructure, t: Topology | None = None,
                      hyps: Hypotheses | None = None, replacement=None,
                      base_changes: bool = False) -> DescentVerdict:
    """Square-wise homotopy Cartesianness of K on P against t_P-locality.

    Locality is checked through degree hi(K) + max dim_D, which is definitive
    for bounded, complete, regular P.  Every t_P-local complex has K(∅) ≃ 0
    but no square of P sees K(∅), so the verdict also reports agreement with
    that condition added to the square side.  With ``base_changes`` the squares
    obtained by base change along every morphism into S are also evaluated;
    they are reported separately and do not enter the agreement flag.
    """
    t = t or P.topology()
    hyps = hyps or check_hypotheses(P, D, t)
    N = D.max_dim()
    table, wits = square_table(K, P.squares)
    loc = is_t_local(K, t, N, dim_bound=N if hyps.hold else None, replacement=replacement)
    if loc.witness is not None:
        wits["locality"] = loc.witness
    bc = {}
    if base_changes:
        from .ecd import MissingPullback, NotCartesian, base_change
        for C in P.squares:
            for y in [f for Y in P.cat.objects for f in P.cat.hom(Y, C.S)]:
                try:
                    C1 = base_change(P.cat, C, y)
                except (MissingPullback, NotCartesian):
                    continue
                bc[f"{C.name}|{y}"] = homotopy_cartesian_square(K, C1)
    sq = all(table.values())
    empty = empty_is_acyclic(K)
    return DescentVerdict(table, loc, _agreement(sq, loc), not hyps.hold, wits, bc, hyps,
                          empty_acyclic=empty, agreement_with_empty=_agreement(sq and empty, loc))


@dataclass
class VanishingReport:
    table: dict          # S -> [dim H^0, ..., dim H^{dim_D S + 2}]
    dims: dict           # S -> dim_D S
    conditional: bool
    hypotheses: Hypotheses

    @property
    def vanishes(self) -> bool:
        return all(all(h == 0 for h in row[self.dims[S] + 1:]) for S, row in self.table.items())

    def summary(self) -> str:
        lines = [f"{'object':<12} dim_D  H^0..H^(dim_D+2)"]
        for S, row in self.table.items():
            lines.append(f"{S:<12} {self.dims[S]:<6} {' '.join(map(str, row))}")
        if self.conditional:
            lines.append("conditional: hypotheses not all verified")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"table": self.table, "dim_D": self.dims, "vanishes": self.vanishes,
                "conditional": self.conditional, "hypotheses": self.hypotheses.to_dict()}


def check_vanishing(P: EcdStructure, D: DensityStructure, F: QPresheaf, t: Topology | None = None,
                    hyps: Hypotheses | None = None) -> VanishingReport:
    """H^n_t(S, F) for n <= dim_D S + 2 at every S; raises VanishingFailed when
    a group strictly above dim_D S is nonzero."""
    t = t or P.topology()
    hyps = hyps or check_hypotheses(P, D, t)
    dims = {S: D.dim(S) for S in P.cat.objects}
    top = max(dims.values()) + 2
    full = cohomology_table(F, t, top)
    table = {S: full[S].dims[:dims[S] + 3] for S in P.cat.objects}
    rep = VanishingReport(table, dims, not hyps.hold, hyps)
    for S, row in table.items():
        for n in range(dims[S] + 1, len(row)):
            if row[n]:
                raise VanishingFailed(f"H^{n}({S}) has dimension {row[n]} > 0 with dim_D {S} = {dims[S]}; "
                                      f"hypotheses {hyps.to_dict()}")
    return rep


@dataclass
class UnionDescentReport:
    local_P: LocalityVerdict
    prime_squares: dict
    local_union: LocalityVerdict
    condition_i: bool | None
    condition_ii: bool | None
    agreement: bool | None
    conditional: bool
    notes: list = field(default_factory=list)

    def summary(self) -> str:
        lines = [f"(i)  t_P-local: {self.local_P.status}"]
        for name, ok in self.prime_squares.items():
            lines.append(f"     {name:<20} {'yes' if ok else 'no'}")
        lines.append(f"(ii) t_(P∪P')-local: {self.local_union.status}")
        lines.append(f"agreement: {self.agreement}")
        if self.conditional:
            lines.append("conditional: " + "; ".join(self.notes))
        return "\n".join(lines)

    def to_dict(self) -> dict:
        def lv(v):
            return {"status": v.status, "witness": v.witness, "checked_through": v.checked_through}
        return {"condition_i": self.condition_i, "condition_ii": self.condition_ii,
                "t_P": lv(self.local_P), "prime_squares": dict(self.prime_squares),
                "t_union": lv(self.local_union), "agreement": self.agreement,
                "conditional": self.conditional, "notes": self.notes}


@dataclass
class UnionContext:
    """Everything about P ∪ P' that does not depend on K."""
    P: EcdStructure
    prime: EcdStructure
    union: EcdStructure
    t_P: Topology
    t_union: Topology
    N: int
    conditional: bool
    notes: list


def union_context(P: EcdStructure, D: DensityStructure, hyps: Hypotheses | None = None) -> UnionContext:
    t = P.topology()
    hyps = hyps or check_hypotheses(P, D, t)
    notes = []
    if not hyps.complete.startswith("complete") or not hyps.bounded:
        notes.append("P not verified bounded and complete")
    bad = [C.name for C in P.squares if not is_mono(P.cat, C.g)]
    if bad:
        notes.append(f"g not mono in {bad}")
    Pp = derive_prime(P)
    U = union_ecd(P, Pp)
    return UnionContext(P, Pp, U, t, U.topology(), D.max_dim(), bool(notes), notes)


def check_theorem_2_16(K: PresheafComplex, P: EcdStructure, D: DensityStructure,
                       ctx: UnionContext | None = None) -> UnionDescentReport:
    """(i) K is t_P-local and homotopy Cartesian on the derived squares P';
    (ii) K is t_{P∪P'}-local.  Both are evaluated and compared."""
    ctx = ctx or union_context(P, D)
    N = ctx.N
    loc_P = is_t_local(K, ctx.t_P, N, dim_bound=N)
    primes, _ = square_table(K, ctx.prime.squares)
    loc_U = is_t_local(K, ctx.t_union, N, dim_bound=N)
    cond_i = None if loc_P.status == "inconclusive" else (loc_P.local and all(primes.values()))
    cond_ii = None if loc_U.status == "inconclusive" else loc_U.local
    agree = None if cond_i is None or cond_ii is None else cond_i == cond_ii
    return UnionDescentReport(loc_P, primes, loc_U, cond_i, cond_ii, agree, ctx.conditional, ctx.notes)


# -- random complexes ----------------------------------------------------------------

def random_complex(cat: FinCategory, rng, max_length: int = 3, max_dim: int = 4,
                   t: Topology | None = None, sheaf_prob: float = 0.3, lo: int = 0) -> PresheafComplex:
    """A bounded complex of length 1..max_length with term dimensions <= max_dim.

    Each differential factors through the cokernel of the previous one, so
    d∘d = 0 by construction.  With ``t`` some samples have sheafified terms
    (all terms sheafified together, differentials transported).
    """
    length = rng.randint(1, max_length)
    terms = [random_qpresheaf(cat, rng, max_dim)]
    diffs = []
    for _ in range(length - 1):
        nxt = random_qpresheaf(cat, rng, max_dim)
        if diffs:
            Q, q = cokernel(diffs[-1])
            d = q.then(random_map(Q, nxt, rng))
        else:
            d = random_map(terms[-1], nxt, rng)
        terms.append(nxt)
        diffs.append(d)
    if t is not None and rng.random() < sheaf_prob:
        recs = [sheafify_linear(T, t) for T in terms]
        diffs = [sheafify_linear_map(d, recs[i], recs[i + 1]) for i, d in enumerate(diffs)]
        terms = [r.sheaf for r in recs]
    return PresheafComplex(lo, terms, diffs)


def shifted(K: PresheafComplex, k: int) -> PresheafComplex:
    return PresheafComplex(K.lo + k, list(K.terms), list(K.diffs))


def direct_sum_complex(K: PresheafComplex, L: PresheafComplex) -> PresheafComplex:
    """Degreewise sum of two complexes starting in the same degree."""
    from .qmod import block_map
    if K.lo != L.lo:
        raise ValueError("complexes must start in the same degree")
    hi = max(K.hi, L.hi)
    terms, diffs = [], []
    for n in range(K.lo, hi + 1):
        terms.append(direct_sum(K.term(n), L.term(n))[0])
    for n in range(K.lo, hi):
        diffs.append(block_map([[K.d(n), None], [None, L.d(n)]], terms[n - K.lo], terms[n + 1 - K.lo],
                               [K.term(n), L.term(n)], [K.term(n + 1), L.term(n + 1)]))
    return PresheafComplex(K.lo, terms, diffs)


def local_model(K: PresheafComplex, t: Topology, N: int) -> tuple[PresheafComplex, int]:
    """L_tK resolved far enough to be exact through degree hi(K) + N; returns
    the complex and that degree."""
    return local_replacement(K, t, N).complex, K.hi + N


__all__ = [
    "CONVENTION", "DescentVerdict", "Hypotheses", "UnionContext", "UnionDescentReport", "VanishingFailed",
    "VanishingReport", "check_hypotheses", "check_theorem_2_3", "check_theorem_2_16", "check_vanishing",
    "direct_sum_complex", "local_model", "random_complex", "shifted", "square_table", "union_context",
]
