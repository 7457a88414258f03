"""Injective envelopes, sheaf cohomology and local replacements.

A Q-presheaf on a finite category is a right module over the category algebra
A (basis: morphisms, product f·g = f∘g when composable).  Everything here is
finite-dimensional linear algebra over that algebra:

* the Jacobson radical J is the kernel of the trace form tr(L_ab);
* soc(M)(X) = {v in M(X) : v·j = 0 for j in J};
* I_X(V)(U) = Hom_Q(Q[Hom(X, U)], V) is injective, and a map from M to a
  sum of these that is injective on soc M is injective, the socle being
  essential;
* E is injective iff every map rad Λ(X) -> E extends to Λ(X), which is checked
  as dim Hom(rad Λ(X), E) = dim E(X) - dim soc E(X).

Resolutions of a complex of sheaves C are built degree by degree as iterated
cones: J^{n+1} is the envelope of the sheafified cokernel of
C^n ⊕ J^{n-1} -> C^{n+1} ⊕ J^n, which makes cone(C -> J) exact in the range
constructed.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

from . import linalg as la
from .fincat import CategoryError, FinCategory
from .linalg import Mat
from .qmod import (LinearMap, NotNatural, QPresheaf, block_map, direct_sum, hom_space, identity_map, is_sheaf_linear,
                   quotient_presheaf, sheaf_violations_linear, sheafify_linear, sheafify_linear_map,
                   solve_natural, sub_as_presheaf, zero_map, zero_presheaf)
from .sieves import Topology


class CertificationFailed(CategoryError):
    pass


# running tally of certificate outcomes in this process, keyed "<kind>:<pass|fail>"
CERTIFICATES: Counter = Counter()


def _tally(kind: str, ok: bool) -> None:
    CERTIFICATES[f"{kind}:{'pass' if ok else 'fail'}"] += 1


# -- the category algebra ----------------------------------------------------------------

def algebra_basis(cat: FinCategory) -> list[str]:
    return sorted(cat.morphisms)


def radical(cat: FinCategory) -> Mat:
    """Columns spanning the Jacobson radical, in the basis ``algebra_basis``."""
    cached = getattr(cat, "_radical", None)
    if cached is not None:
        return cached
    basis = algebra_basis(cat)
    n = len(basis)
    # tr(L_m) = #{b : m∘b = b}
    fix = {}
    for m in basis:
        fix[m] = sum(1 for b in cat.into(cat.src(m)) if cat.comp(m, b) == b)
    T = la.zeros(n, n)
    for i, x in enumerate(basis):
        for j, y in enumerate(basis):
            if cat.src(x) == cat.tgt(y):
                v = fix[cat.comp(x, y)]
                if v:
                    T[i, j] = v
    J = la.nullspace(T)
    cat._radical = J  # type: ignore[attr-defined]
    return J


def socle(M: QPresheaf) -> dict:
    """soc(M) as a sub-presheaf (object -> column basis)."""
    cat = M.cat
    basis = algebra_basis(cat)
    J = radical(cat)
    out = {}
    for X in cat.objects:
        if M.dim[X] == 0:
            out[X] = la.zeros(0, 0)
            continue
        into = [(i, m) for i, m in enumerate(basis) if cat.tgt(m) == X]
        blocks = []
        for c in range(J.ncols()):
            per_src: dict[str, Mat] = {}
            for i, m in into:
                a = J[i, c]
                if a != 0:
                    W = cat.src(m)
                    if M.dim[W] == 0:
                        continue
                    term = la.scale(M.mats[m], a)
                    per_src[W] = la.add(per_src[W], term) if W in per_src else term
            blocks.extend(per_src.values())
        op = la.vstack(*blocks, ncols=M.dim[X]) if blocks else la.zeros(0, M.dim[X])
        out[X] = la.nullspace(op) if op.nrows() else la.identity(M.dim[X])
    return out


def radical_of_representable(cat: FinCategory, X: str) -> dict:
    """rad Λ(X) = e_X J as a sub-presheaf of Λ(X)."""
    basis = algebra_basis(cat)
    index = {m: i for i, m in enumerate(basis)}
    J = radical(cat)
    out = {}
    for U in cat.objects:
        hom = cat.hom(U, X)
        if not hom:
            out[U] = la.zeros(0, 0)
            continue
        M = la.zeros(len(hom), J.ncols())
        for r, m in enumerate(hom):
            for c in range(J.ncols()):
                M[r, c] = J[index[m], c]
        out[U] = la.colspace(M) if J.ncols() and not la.is_zero(M) else la.zeros(len(hom), 0)
    return out


def _total(sub: dict) -> int:
    return sum(B.ncols() for B in sub.values())


def injectivity_defects(E: QPresheaf) -> list[str]:
    """Objects X where some map rad Λ(X) -> E fails to extend to Λ(X)."""
    from .qmod import free_linear
    cat = E.cat
    soc = socle(E)
    bad = []
    for X in cat.objects:
        R, _ = sub_as_presheaf(free_linear(cat, X), radical_of_representable(cat, X))
        extendable = E.dim[X] - soc[X].ncols()
        if len(hom_space(R, E)) != extendable:
            bad.append(f"lifting against rad Λ({X}) fails")
    return bad


def is_injective(E: QPresheaf) -> bool:
    return not injectivity_defects(E)


# -- coinduced injectives and envelopes ----------------------------------------------------

def coinduced(cat: FinCategory, X: str, n: int) -> QPresheaf:
    """I_X(Q^n): U |-> (Q^n)^{Hom(X, U)}, blocks ordered by ``cat.hom(X, U)``."""
    dims = {U: n * len(cat.hom(X, U)) for U in cat.objects}
    mats = {}
    for f, m in cat.morphisms.items():
        Up, U = m.src, m.tgt
        M = la.zeros(dims[Up], dims[U])
        pos = {k: i for i, k in enumerate(cat.hom(X, U))}
        for i, kp in enumerate(cat.hom(X, Up)):
            j = pos[cat.comp(f, kp)]
            for r in range(n):
                M[i * n + r, j * n + r] = 1
        mats[f] = M
    return QPresheaf(cat, dims, mats, f"I_{X}({n})")


def socle_coinduced_embedding(M: QPresheaf) -> tuple[QPresheaf, LinearMap]:
    """M embedded in a sum of coinduced injectives, injective on the socle.

    Points X are chosen greedily by the size of I_X.  Each new coordinate of
    a summand I_X(k) is a functional on M(X) that is nonzero on the part of
    soc M still killed so far, so that kernel shrinks strictly.
    """
    cat = M.cat
    soc = socle(M)
    cost = {X: sum(len(cat.hom(X, U)) for U in cat.objects) for X in cat.objects}
    order = sorted(cat.objects, key=lambda X: (cost[X], cat.objects.index(X)))
    kernel = dict(soc)
    parts, pis = [], []
    for X in order:
        rows = []
        while kernel[X].ncols():
            # one coordinate functional nonzero on the surviving socle part at X
            r = next(i for i in range(M.dim[X]) if any(x != 0 for x in la.to_rows(kernel[X])[i]))
            ell = la.zeros(1, M.dim[X])
            ell[0, r] = 1
            rows.append(ell)
            for U in cat.objects:
                B = kernel[U]
                if not B.ncols():
                    continue
                hs = cat.hom(X, U)
                if hs:
                    A = la.vstack(*[la.mul(ell, M.mats[h], B) for h in hs], ncols=B.ncols())
                    kernel[U] = la.mul(B, la.nullspace(A))
        if rows:
            parts.append((X, len(rows)))
            pis.append(la.vstack(*rows, ncols=M.dim[X]))
    if not parts:
        Z = zero_presheaf(cat)
        return Z, zero_map(M, Z)
    I, _, _ = direct_sum(*[coinduced(cat, X, k) for X, k in parts])
    comps = {}
    for U in cat.objects:
        rows = []
        for (X, k), P in zip(parts, pis):
            for h in cat.hom(X, U):
                rows.append(la.mul(P, M.mats[h]))
        comps[U] = la.vstack(*rows, ncols=M.dim[U]) if rows else la.zeros(0, M.dim[U])
    return I, LinearMap(M, I, comps)


def _module_complement(A: QPresheaf, sub: dict) -> dict:
    """Kernel of a natural projection A -> sub restricting to the identity on sub.

    Only called with A semisimple, where such a projection always exists.
    """
    B, inc = sub_as_presheaf(A, sub)
    pi = solve_natural(A, B, [(inc, identity_map(B), None)])
    if pi is None:
        raise CertificationFailed("no natural projection onto a submodule of a semisimple module")
    return {X: la.nullspace(c) if A.dim[X] else la.zeros(0, 0) for X, c in pi.components.items()}


def _image_sub(phi: LinearMap, sub: dict) -> dict:
    out = {}
    for X, B in sub.items():
        if B.ncols() == 0 or phi.target.dim[X] == 0:
            out[X] = la.zeros(phi.target.dim[X], 0)
        else:
            img = la.mul(phi.components[X], B)
            out[X] = la.colspace(img) if not la.is_zero(img) else la.zeros(phi.target.dim[X], 0)
    return out


def _in_coords(inc: LinearMap, sub: dict) -> dict:
    """Express a sub-presheaf of the target in the source coordinates of an injective map."""
    out = {}
    for X, B in sub.items():
        if B.ncols() == 0:
            out[X] = la.zeros(inc.source.dim[X], 0)
        else:
            out[X] = la.coords(inc.components[X], B)
    return out


@dataclass
class Envelope:
    E: QPresheaf
    embedding: LinearMap  # M -> E
    certificates: dict = field(default_factory=dict)


def injective_envelope(M: QPresheaf, certify: bool = True) -> Envelope:
    cat = M.cat
    if M.is_zero():
        Z = zero_presheaf(cat)
        return Envelope(Z, zero_map(M, Z), {"injective": True, "essential": True, "embedding": True})
    I, iota = socle_coinduced_embedding(M)
    socI = socle(I)
    socM = _image_sub(iota, socle(M))
    if _total(socI) == _total(socM):
        N = {X: la.identity(I.dim[X]) for X in cat.objects}
    else:
        A, incA = sub_as_presheaf(I, socI)
        K = {X: la.mul(incA.components[X], B) if B.ncols() else la.zeros(I.dim[X], 0)
             for X, B in _module_complement(A, _in_coords(incA, socM)).items()}
        N = _image_sub(iota, {X: la.identity(M.dim[X]) for X in cat.objects})
        k_total = _total(K)
        while True:
            Qt, q, sect = quotient_presheaf(I, N)
            U = _image_sub(q, K)
            socQ = socle(Qt)
            if _total(socQ) == k_total:
                break
            A, incA = sub_as_presheaf(Qt, socQ)
            W = _module_complement(A, _in_coords(incA, U))
            lift = {}
            for X, B in W.items():
                if B.ncols() == 0:
                    lift[X] = N[X]
                else:
                    add = la.mul(sect[X], incA.components[X], B)
                    lift[X] = la.span_sum(N[X], add, dim=I.dim[X])
            N = lift
    E, incE = sub_as_presheaf(I, N, name=f"E({M.name})")
    emb = LinearMap(M, E, {X: la.coords(incE.components[X], iota.components[X]) if E.dim[X]
                           else la.zeros(0, M.dim[X]) for X in cat.objects})
    certs = {}
    if certify:
        defects = injectivity_defects(E)
        socE = socle(E)
        essential = _total(socE) == _total(socle(M))
        certs = {"injective": not defects, "essential": essential,
                 "embedding": emb.is_natural() and emb.is_injective()}
        _tally("envelope", all(certs.values()))
        if not all(certs.values()):
            raise CertificationFailed(f"envelope of {M.name} failed certificates {certs} {defects}")
    return Envelope(E, emb, certs)


# -- complexes ----------------------------------------------------------------

@dataclass
class PresheafComplex:
    """Terms in degrees lo .. lo+len(terms)-1; diffs[i]: terms[i] -> terms[i+1]."""
    lo: int
    terms: list
    diffs: list

    @property
    def hi(self) -> int:
        return self.lo + len(self.terms) - 1

    @property
    def cat(self) -> FinCategory:
        return self.terms[0].cat

    def term(self, n: int) -> QPresheaf:
        if self.lo <= n <= self.hi:
            return self.terms[n - self.lo]
        return zero_presheaf(self.cat)

    def d(self, n: int) -> LinearMap:
        if self.lo <= n < self.hi:
            return self.diffs[n - self.lo]
        return zero_map(self.term(n), self.term(n + 1))

    def violations(self) -> list[str]:
        bad = []
        for T in self.terms:
            bad += T.check_functorial()
        for n in range(self.lo, self.hi):
            bad += self.d(n).naturality_violations()
        for n in range(self.lo, self.hi - 1):
            if not self.d(n).then(self.d(n + 1)).is_zero():
                bad.append(f"d∘d ≠ 0 at degree {n}")
        return bad

    def section_diffs(self, X: str, lo: int | None = None, hi: int | None = None) -> dict:
        lo = self.lo if lo is None else lo
        hi = self.hi if hi is None else hi
        return {n: self._dX(n, X) for n in range(lo - 1, hi + 1)}

    def _dX(self, n: int, X: str) -> Mat:
        if self.lo <= n < self.hi:
            return self.diffs[n - self.lo].components[X]
        return la.zeros(self.term(n + 1).dim[X], self.term(n).dim[X])

    def homology_dims(self, X: str, lo: int | None = None, hi: int | None = None) -> dict:
        lo = self.lo if lo is None else lo
        hi = self.hi if hi is None else hi
        return {n: homology_dim(self._dX(n - 1, X), self._dX(n, X), self.term(n).dim[X]) for n in range(lo, hi + 1)}

    def is_degreewise_sheaf(self, t: Topology) -> bool:
        return all(is_sheaf_linear(T, t) for T in self.terms)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "terms": [T.to_dict() for T in self.terms],
                "diffs": [{X: la.to_strings(c) for X, c in d.components.items()} for d in self.diffs]}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, cat: FinCategory, d: dict) -> "PresheafComplex":
        terms = [QPresheaf.from_dict(cat, T) for T in d["terms"]]
        if len(d.get("diffs", [])) != len(terms) - 1:
            raise ValueError("a complex with k terms needs k-1 differentials")
        diffs = []
        for i, comps in enumerate(d.get("diffs", [])):
            src, tgt = terms[i], terms[i + 1]
            diffs.append(LinearMap(src, tgt, {X: la.from_strings(comps[X], tgt.dim[X], src.dim[X])
                                              for X in cat.objects}))
        K = cls(int(d["lo"]), terms, diffs)
        bad = K.violations()
        if bad:
            raise NotNatural(bad[0])
        return K


def concentrated(F: QPresheaf, degree: int = 0) -> PresheafComplex:
    return PresheafComplex(degree, [F], [])


@dataclass
class ChainMap:
    source: PresheafComplex
    target: PresheafComplex
    components: dict  # degree -> LinearMap

    def at(self, n: int, X: str) -> Mat:
        if n in self.components:
            return self.components[n].components[X]
        return la.zeros(self.target.term(n).dim[X], self.source.term(n).dim[X])


def homology_dim(d_in: Mat, d_out: Mat, dim: int) -> int:
    return dim - la.rank(d_out) - la.rank(d_in)


# -- resolutions ----------------------------------------------------------------

@dataclass
class Resolution:
    complex: PresheafComplex   # J, injective sheaves
    unit: ChainMap             # C -> J
    top: int                   # J built through this degree
    certificates: list


def _certify_sheaf_injective(E: QPresheaf, t: Topology, what: str) -> dict:
    bad = sheaf_violations_linear(E, t)
    defects = injectivity_defects(E)
    cert = {"sheaf": not bad, "injective": not defects}
    _tally("sheaf_injective", not (bad or defects))
    if bad or defects:
        raise CertificationFailed(f"{what}: {bad[:1]} {defects[:1]}")
    return cert


def resolve_complex(C: PresheafComplex, t: Topology, top: int) -> Resolution:
    """Injective resolution of a bounded complex of t-sheaves through degree ``top``.

    H^k of the sections of the result computes hypercohomology for k < top.
    """
    cat = C.cat
    lo = C.lo
    Js: dict[int, QPresheaf] = {lo - 1: zero_presheaf(cat)}
    dJ: dict[int, LinearMap] = {}
    u: dict[int, LinearMap] = {lo - 1: zero_map(C.term(lo - 1), Js[lo - 1])}
    certs = []
    for n in range(lo - 1, top):
        Jn, Jm = Js[n], Js.get(n - 1, zero_presheaf(cat))
        Cn, Cn1 = C.term(n), C.term(n + 1)
        src, _, _ = direct_sum(Cn, Jm)
        tgt, inj, _ = direct_sum(Cn1, Jn)
        dJm = dJ.get(n - 1, zero_map(Jm, Jn))
        phi = block_map([[C.d(n).scaled(-1), None], [u[n], dJm]], src, tgt, [Cn, Jm], [Cn1, Jn])
        from .qmod import cokernel
        Qp, q = cokernel(phi)
        aQ = sheafify_linear(Qp, t)
        env = injective_envelope(aQ.sheaf)
        cert = _certify_sheaf_injective(env.E, t, f"J^{n + 1}")
        cert.update(env.certificates)
        certs.append(cert)
        c = q.then(aQ.unit).then(env.embedding)
        Js[n + 1] = env.E
        dJ[n] = inj[1].then(c)
        u[n + 1] = inj[0].then(c)
    terms = [Js[n] for n in range(lo, top + 1)]
    diffs = [dJ[n] for n in range(lo, top)]
    J = PresheafComplex(lo, terms, diffs)
    unit = ChainMap(C, J, {n: u[n] for n in range(lo, top + 1) if n <= C.hi})
    return Resolution(J, unit, top, certs)


def sheaf_injective_resolution(F: QPresheaf, t: Topology, N: int) -> Resolution:
    """0 -> F -> I^0 -> ... -> I^N for a t-sheaf F."""
    bad = sheaf_violations_linear(F, t)
    if bad:
        from .setsheaf import NotASheaf
        raise NotASheaf(bad[0], bad)
    return resolve_complex(concentrated(F), t, N)


@dataclass
class CohomologyReport:
    object: str
    dims: list
    resolution_length: int
    witnesses: dict = field(default_factory=dict)

    def as_row(self) -> str:
        return " ".join(str(d) for d in self.dims)


def _homology_basis(d_in: Mat, d_out: Mat, dim: int) -> tuple[Mat, Mat]:
    """(boundaries basis, representatives of a homology basis) inside Q^dim."""
    Z = la.nullspace(d_out) if d_out.ncols() else la.zeros(0, 0)
    if dim == 0:
        return la.zeros(0, 0), la.zeros(0, 0)
    B = la.colspace(d_in) if d_in.ncols() and not la.is_zero(d_in) else la.zeros(dim, 0)
    if Z.ncols() == 0:
        return B, la.zeros(dim, 0)
    both = la.hstack(B, Z, nrows=dim)
    _, piv = la.rref(both)
    reps = la.submatrix(both, cols=[p for p in piv if p >= B.ncols()])
    return B, reps


def cohomology_table(F: QPresheaf, t: Topology, N: int, objects=None) -> dict[str, CohomologyReport]:
    """H^n_t(S, F) for n = 0..N at every object, from one resolution."""
    aF = sheafify_linear(F, t)
    res = sheaf_injective_resolution(aF.sheaf, t, N + 1)
    out = {}
    for S in objects or F.cat.objects:
        dims = [res.complex.homology_dims(S, 0, N)[n] for n in range(N + 1)]
        if dims[0] != aF.sheaf.dim[S]:
            raise CertificationFailed(f"H^0 at {S} differs from the sheafified sections")
        wit = {}
        for n in range(N + 1):
            J = res.complex
            _, reps = _homology_basis(J._dX(n - 1, S), J._dX(n, S), J.term(n).dim[S])
            wit[n] = la.to_strings(reps) if reps.ncols() else []
        out[S] = CohomologyReport(S, dims, N + 1, wit)
    return out


def sheaf_cohomology(S: str, F: QPresheaf, t: Topology, N: int) -> CohomologyReport:
    if N < 1:
        raise ValueError("N must be at least 1")
    return cohomology_table(F, t, N, [S])[S]


# -- local replacement and locality ----------------------------------------------------------

@dataclass
class LocalReplacement:
    complex: PresheafComplex
    unit: ChainMap
    verified_through: int
    sheafified: PresheafComplex


def sheafify_complex(K: PresheafComplex, t: Topology) -> tuple[PresheafComplex, ChainMap]:
    recs = [sheafify_linear(T, t) for T in K.terms]
    diffs = [sheafify_linear_map(K.diffs[i], recs[i], recs[i + 1]) for i in range(len(K.diffs))]
    aK = PresheafComplex(K.lo, [r.sheaf for r in recs], diffs)
    eta = ChainMap(K, aK, {K.lo + i: r.unit for i, r in enumerate(recs)})
    return aK, eta


def local_replacement(K: PresheafComplex, t: Topology, N: int) -> LocalReplacement:
    """L_tK through degree hi(K)+N, with the unit K -> L_tK."""
    aK, eta = sheafify_complex(K, t)
    res = resolve_complex(aK, t, K.hi + N + 1)
    comps = {}
    for n in range(K.lo, K.hi + 1):
        comps[n] = eta.components[n].then(res.unit.components[n])
    return LocalReplacement(res.complex, ChainMap(K, res.complex, comps), K.hi + N, aK)


def induced_on_homology_is_iso(dK_in: Mat, dK_out: Mat, u: Mat, dL_in: Mat, dL_out: Mat,
                               dimK: int, dimL: int) -> bool:
    hK = homology_dim(dK_in, dK_out, dimK)
    hL = homology_dim(dL_in, dL_out, dimL)
    if hK != hL:
        return False
    if hL == 0:
        return True
    _, repsK = _homology_basis(dK_in, dK_out, dimK)
    BL, _ = _homology_basis(dL_in, dL_out, dimL)
    imgs = la.mul(u, repsK)
    return la.rank(la.hstack(BL, imgs, nrows=dimL)) - BL.ncols() == hK


@dataclass
class LocalityVerdict:
    status: str  # local | not-local | inconclusive
    witness: tuple | None
    checked_through: int
    definitive: bool

    @property
    def local(self) -> bool:
        return self.status == "local"


def unit_is_quasi_iso(K: PresheafComplex, L: PresheafComplex, unit: ChainMap, through: int) -> tuple | None:
    """First (object, degree) where the unit fails to be a homology iso, else None."""
    cat = K.cat
    for X in cat.objects:
        for n in range(min(K.lo, L.lo), through + 1):
            ok = induced_on_homology_is_iso(K._dX(n - 1, X), K._dX(n, X), unit.at(n, X),
                                            L._dX(n - 1, X), L._dX(n, X),
                                            K.term(n).dim[X], L.term(n).dim[X])
            if not ok:
                return (X, n)
    return None


def is_t_local(K: PresheafComplex, t: Topology, N: int, dim_bound: int | None = None,
               replacement: LocalReplacement | None = None) -> LocalityVerdict:
    """Is the unit K -> L_tK a quasi-isomorphism at every object through degree hi(K)+N?

    The verdict is definitive when ``dim_bound`` (max dim_D of a bounded,
    complete, regular P generating t) is at most N.
    """
    L = replacement or local_replacement(K, t, N)
    through = K.hi + N
    w = unit_is_quasi_iso(K, L.complex, L.unit, through)
    if w is not None:
        return LocalityVerdict("not-local", w, through, True)
    definitive = dim_bound is not None and N >= dim_bound
    return LocalityVerdict("local" if definitive else "inconclusive", None, through, definitive)


# -- sections over a square ------------------------------------------------------------

def _fixed_basis(J: PresheafComplex, action, n: int) -> Mat:
    from .qmod import averaging_projector
    X = action.carrier
    d = J.term(n).dim[X]
    if d == 0:
        return la.zeros(0, 0)
    G = action.group
    P = averaging_projector(G, {g: J.term(n).mats[action.act[g]] for g in G.elements}, d)
    return la.colspace(P) if not la.is_zero(P) else la.zeros(d, 0)


def _res(J: PresheafComplex, n: int, f: str) -> Mat:
    T = J.term(n)
    m = J.cat.morphisms[f]
    return T.mats[f] if J.lo <= n <= J.hi else la.zeros(T.dim[m.src], T.dim[m.tgt])


def _coords_or_empty(B: Mat, V: Mat) -> Mat:
    if B.ncols() == 0:
        return la.zeros(0, V.ncols())
    return la.coords(B, V)


class _Lazy(dict):
    def __init__(self, make):
        super().__init__()
        self._make = make

    def __missing__(self, n):
        v = self[n] = self._make(n)
        return v


class SquareSections:
    """The sequence of complexes K(S) -> K(X)^G ⊕ K(S') -> K(X')^G."""

    def __init__(self, K: PresheafComplex, C, lo: int, hi: int):
        self.K, self.C, self.lo, self.hi = K, C, lo, hi
        self.PX = _Lazy(lambda n: _fixed_basis(K, C.act_X, n))
        self.PXp = _Lazy(lambda n: _fixed_basis(K, C.act_Xp, n))

    def dims(self, n):
        K, C = self.K, self.C
        return (K.term(n).dim[C.S], self.PX[n].ncols() + K.term(n).dim[C.Sp], self.PXp[n].ncols())

    def dA(self, n):
        return self.K._dX(n, self.C.S)

    def _fixed_d(self, P: dict, X: str, n: int) -> Mat:
        return _coords_or_empty(P[n + 1], la.mul(self.K._dX(n, X), P[n]))

    def dB(self, n):
        return la.block_diag(self._fixed_d(self.PX, self.C.X, n), self.K._dX(n, self.C.Sp))

    def dC(self, n):
        return self._fixed_d(self.PXp, self.C.Xp, n)

    def alpha(self, n):
        K, C = self.K, self.C
        top = _coords_or_empty(self.PX[n], _res(K, n, C.f))
        return la.vstack(top, _res(K, n, C.g), ncols=K.term(n).dim[C.S])

    def beta(self, n):
        K, C = self.K, self.C
        left = _coords_or_empty(self.PXp[n], la.mul(_res(K, n, C.gp), self.PX[n]))
        right = la.scale(_coords_or_empty(self.PXp[n], _res(K, n, C.fp)), -1)
        return la.hstack(left, right, nrows=self.PXp[n].ncols())


def homotopy_cartesian_square(K: PresheafComplex, C, through: int | None = None) -> bool:
    """Acyclicity of Tot(K(S) -> K(X)^G ⊕ K(S') -> K(X')^G).

    Tot^n = A^n ⊕ B^{n-1} ⊕ C^{n-2}, d = d_h + (-1)^p d_v for column p.
    With ``through`` only degrees <= through are examined (for truncations).
    """
    return not totalization_homology(K, C, through)


def totalization_homology(K: PresheafComplex, C, through: int | None = None) -> dict:
    """Nonzero homology dimensions of the totalization, by degree."""
    lo, hi = K.lo, K.hi
    sec = SquareSections(K, C, lo, hi)

    def dim3(n):
        return sec.dims(n)

    def tot_dim(n):
        return dim3(n)[0] + dim3(n - 1)[1] + dim3(n - 2)[2]

    def tot_d(n):
        a0, b1, c2 = dim3(n)[0], dim3(n - 1)[1], dim3(n - 2)[2]
        A1, B1, C1 = dim3(n + 1)[0], dim3(n)[1], dim3(n - 1)[2]
        D = la.zeros(A1 + B1 + C1, a0 + b1 + c2)
        # column p=0 (A): vertical dA, horizontal alpha
        la._paste(D, sec.dA(n), 0, 0)
        la._paste(D, sec.alpha(n), A1, 0)
        # column p=1 (B): -dB, beta
        la._paste(D, la.scale(sec.dB(n - 1), -1), A1, a0)
        la._paste(D, sec.beta(n - 1), A1 + B1, a0)
        # column p=2 (C): +dC
        la._paste(D, sec.dC(n - 2), A1 + B1, a0 + b1)
        return D

    out = {}
    last = hi + 2 if through is None else min(hi + 2, through)
    for n in range(lo, last + 1):
        h = homology_dim(tot_d(n - 1), tot_d(n), tot_dim(n))
        if h:
            out[n] = h
    return out


# -- connecting homomorphism ----------------------------------------------------------------

@dataclass
class LesRecord:
    degrees: list
    h_dims: dict          # n -> (dim H^n(S), dim H^n(X)^G ⊕ H^n(S'), dim H^n(X')^G)
    maps: dict            # n -> {"a": Mat, "b": Mat, "delta": Mat}
    exact: bool
    witness: str | None = None
    naturality: bool | None = None
    convention: str = "y -> (f*y, g*y); (x, s) -> g'*x - f'*s; delta by the snake lemma"


def _homology_coords(B: Mat, reps: Mat, v: Mat) -> Mat:
    """Coordinates of the classes of the columns of v in the basis ``reps``."""
    if reps.ncols() == 0:
        return la.zeros(0, v.ncols())
    both = la.hstack(B, reps, nrows=reps.nrows())
    c = la.coords(both, v)
    return la.submatrix(c, rows=range(B.ncols(), both.ncols()))


def _les_data(J: PresheafComplex, C, lo: int, hi: int):
    sec = SquareSections(J, C, lo, hi + 1)
    H = {}
    for n in range(lo, hi + 2):
        dA, dB, dC = sec.dims(n)
        H[n] = {
            "A": _homology_basis(sec.dA(n - 1), sec.dA(n), dA),
            "B": _homology_basis(sec.dB(n - 1), sec.dB(n), dB),
            "C": _homology_basis(sec.dC(n - 1), sec.dC(n), dC),
        }
    return sec, H


def _delta(sec: SquareSections, H: dict, n: int) -> Mat:
    Bc, repsC = H[n]["C"]
    BA1, repsA1 = H[n + 1]["A"]
    cols = []
    beta, alpha1 = sec.beta(n), sec.alpha(n + 1)
    for j in range(repsC.ncols()):
        z = la.column(repsC, j)
        x = la.solve(beta, z)
        if x is None:
            raise CertificationFailed(f"sections of the square are not degreewise exact at {n}")
        w = la.mul(sec.dB(n), x)
        y = la.solve(alpha1, w) if alpha1.ncols() else la.zeros(0, 1)
        if y is None:
            raise CertificationFailed(f"connecting map undefined at {n}")
        cols.append(_homology_coords(BA1, repsA1, y))
    return la.hstack(*cols, nrows=repsA1.ncols()) if cols else la.zeros(repsA1.ncols(), 0)


def connecting_sequence(C, K: PresheafComplex, t: Topology, N: int, morphism=None,
                        C1=None, replacement: LocalReplacement | None = None, strict: bool = True) -> LesRecord:
    """The long exact sequence of Q-modules attached to a square, computed from
    an injective resolution of a_tK.  With ``morphism`` = (alpha, a, b, c, d):
    C1 -> C also checks that ∂ commutes with restriction."""
    from .qmod import NotExact
    L = replacement or local_replacement(K, t, N)
    J = L.complex
    lo, hi = K.lo, K.hi + N - 1
    sec, H = _les_data(J, C, lo, hi)
    maps, hd = {}, {}
    witness = None
    for n in range(lo, hi + 1):
        BA, rA = H[n]["A"]
        BB, rB = H[n]["B"]
        BC, rC = H[n]["C"]
        a = _homology_coords(BB, rB, la.mul(sec.alpha(n), rA))
        b = _homology_coords(BC, rC, la.mul(sec.beta(n), rB))
        dlt = _delta(sec, H, n)
        maps[n] = {"a": a, "b": b, "delta": dlt}
        hd[n] = (rA.ncols(), rB.ncols(), rC.ncols())
    for n in range(lo, hi + 1):
        a, b, dlt = maps[n]["a"], maps[n]["b"], maps[n]["delta"]
        hA, hB, hC = hd[n]
        checks = [
            (la.rank(a) + la.rank(b) == hB, f"exactness at H^{n}(X)^G ⊕ H^{n}(S')"),
            (la.rank(b) + la.rank(dlt) == hC, f"exactness at H^{n}(X')^G"),
            (la.is_zero(la.mul(b, a)) if a.ncols() and b.nrows() else True, f"b∘a ≠ 0 at {n}"),
            (la.is_zero(la.mul(dlt, b)) if b.ncols() and dlt.nrows() else True, f"∂∘b ≠ 0 at {n}"),
        ]
        if n + 1 in maps:
            a1 = maps[n + 1]["a"]
            checks.append((la.rank(dlt) + la.rank(a1) == hd[n + 1][0], f"exactness at H^{n + 1}(S)"))
        elif n == lo:
            pass
        if n == lo:
            checks.append((la.rank(a) == hA, f"H^{n}(S) -> H^{n}(X)^G ⊕ H^{n}(S') not injective"))
        for ok, msg in checks:
            if not ok and witness is None:
                witness = msg
    nat = None
    if morphism is not None and C1 is not None:
        nat = _delta_natural(J, C, C1, morphism, lo, hi, sec, H)
    rec = LesRecord(list(range(lo, hi + 1)), hd, maps, witness is None, witness, nat)
    if strict and witness is not None:
        raise NotExact(witness)
    return rec


def _delta_natural(J, C, C1, morphism, lo, hi, sec, H) -> bool:
    _, a, b, c, d = morphism
    sec1, H1 = _les_data(J, C1, lo, hi)
    for n in range(lo, hi + 1):
        dl = _delta(sec, H, n)
        dl1 = _delta(sec1, H1, n)
        # restriction H^n(X')^G -> H^n(X1')^G and H^{n+1}(S) -> H^{n+1}(S1)
        _, rC = H[n]["C"]
        BC1, rC1 = H1[n]["C"]
        resC = _homology_coords(BC1, rC1, _fixed_restrict(J, n, a, sec.PXp[n], sec1.PXp[n], rC))
        _, rA = H[n + 1]["A"]
        BA1, rA1 = H1[n + 1]["A"]
        resA = _homology_coords(BA1, rA1, la.mul(_res(J, n + 1, d), rA))
        lhs = la.mul(dl1, resC)
        rhs = la.mul(resA, dl)
        if not la.equal(lhs, rhs):
            return False
    return True


def _fixed_restrict(J, n, a, P, P1, v):
    if P1.ncols() == 0:
        return la.zeros(0, v.ncols())
    full = la.mul(_res(J, n, a), P, v) if P.ncols() else la.zeros(J.term(n).dim[J.cat.src(a)], v.ncols())
    return la.coords(P1, full)
