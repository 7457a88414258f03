"""Presheaves of finite-dimensional Q-vector spaces.

Conventions: for f: X -> Y the matrix ``mats[f]`` has shape dim X x dim Y and
``mats[g∘f] = mats[f] · mats[g]``.  A linear map has one ``dim G(X) x dim F(X)``
matrix per object.  Sub-presheaves are dicts object -> column basis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import linalg as la
from .fincat import CategoryError, FinCategory, FinGroup, GroupAction
from .linalg import Mat
from .setsheaf import SetPresheaf, orbit_quotient, representable
from .sieves import Topology


class NotNatural(CategoryError):
    pass


class NotExact(CategoryError):
    pass


class QPresheaf:
    def __init__(self, cat: FinCategory, dim: dict, mats: dict, name: str = "M"):
        self.cat = cat
        self.dim: dict[str, int] = {X: int(dim[X]) for X in cat.objects}
        self.mats: dict[str, Mat] = mats
        self.name = name

    def __call__(self, f: str) -> Mat:
        return self.mats[f]

    def total_dim(self) -> int:
        return sum(self.dim.values())

    def is_zero(self) -> bool:
        return self.total_dim() == 0

    def check_functorial(self) -> list[str]:
        cat = self.cat
        bad = []
        for f, m in cat.morphisms.items():
            M = self.mats.get(f)
            if M is None or (M.nrows(), M.ncols()) != (self.dim[m.src], self.dim[m.tgt]):
                bad.append(f"matrix for {f} has the wrong shape")
        if bad:
            return bad
        for X in cat.objects:
            if not la.equal(self.mats[cat.id(X)], la.identity(self.dim[X])):
                bad.append(f"identity on {X} is not the identity matrix")
        for g in cat.morphisms:
            for f in cat.into(cat.src(g)):
                if not la.equal(self.mats[cat.comp(g, f)], la.mul(self.mats[f], self.mats[g])):
                    bad.append(f"M({g}∘{f}) ≠ M({f})M({g})")
        return bad

    def to_dict(self) -> dict:
        return {"name": self.name, "dims": dict(self.dim),
                "restrict": {f: la.to_strings(M) for f, M in self.mats.items()}}

    @classmethod
    def from_dict(cls, cat: FinCategory, d: dict) -> "QPresheaf":
        dims = d["dims"]
        mats = {f: la.from_strings(d["restrict"][f], dims[m.src], dims[m.tgt]) for f, m in cat.morphisms.items()}
        return cls(cat, dims, mats, d.get("name", "M"))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def __repr__(self):
        return f"QPresheaf({self.name}: {self.dim})"


@dataclass
class LinearMap:
    source: QPresheaf
    target: QPresheaf
    components: dict  # X -> Mat (dim target x dim source)

    def __getitem__(self, X: str) -> Mat:
        return self.components[X]

    def naturality_violations(self) -> list[str]:
        cat = self.source.cat
        bad = []
        for f, m in cat.morphisms.items():
            lhs = la.mul(self.components[m.src], self.source.mats[f])
            rhs = la.mul(self.target.mats[f], self.components[m.tgt])
            if not la.equal(lhs, rhs):
                bad.append(f"naturality fails along {f}")
        return bad

    def is_natural(self) -> bool:
        return not self.naturality_violations()

    def then(self, other: "LinearMap") -> "LinearMap":
        return LinearMap(self.source, other.target,
                         {X: la.mul(other.components[X], c) for X, c in self.components.items()})

    def __add__(self, other: "LinearMap") -> "LinearMap":
        return LinearMap(self.source, self.target,
                         {X: la.add(c, other.components[X]) for X, c in self.components.items()})

    def scaled(self, c) -> "LinearMap":
        return LinearMap(self.source, self.target, {X: la.scale(m, c) for X, m in self.components.items()})

    def is_zero(self) -> bool:
        return all(la.is_zero(c) for c in self.components.values())

    def is_injective(self) -> bool:
        return all(la.rank(c) == self.source.dim[X] for X, c in self.components.items())

    def is_surjective(self) -> bool:
        return all(la.rank(c) == self.target.dim[X] for X, c in self.components.items())

    def is_iso(self) -> bool:
        return self.is_injective() and self.is_surjective()


def zero_presheaf(cat: FinCategory) -> QPresheaf:
    return QPresheaf(cat, {X: 0 for X in cat.objects}, {f: la.zeros(0, 0) for f in cat.morphisms}, "0")


def identity_map(F: QPresheaf) -> LinearMap:
    return LinearMap(F, F, {X: la.identity(F.dim[X]) for X in F.cat.objects})


def zero_map(F: QPresheaf, G: QPresheaf) -> LinearMap:
    return LinearMap(F, G, {X: la.zeros(G.dim[X], F.dim[X]) for X in F.cat.objects})


# -- linearization ----------------------------------------------------------------

def linearize(F: SetPresheaf) -> QPresheaf:
    """Q[F]: the free vector space on each F(X), basis in the order of F(X)."""
    cat = F.cat
    index = {X: {x: i for i, x in enumerate(F.at[X])} for X in cat.objects}
    mats = {}
    for f, m in cat.morphisms.items():
        M = la.zeros(len(F.at[m.src]), len(F.at[m.tgt]))
        for j, y in enumerate(F.at[m.tgt]):
            M[index[m.src][F.res(f, y)], j] = 1
        mats[f] = M
    return QPresheaf(cat, {X: len(F.at[X]) for X in cat.objects}, mats, f"Q[{F.name}]")


def linearize_map(phi, source: QPresheaf, target: QPresheaf) -> LinearMap:
    cat = phi.source.cat
    comps = {}
    for X in cat.objects:
        tidx = {y: i for i, y in enumerate(phi.target.at[X])}
        M = la.zeros(target.dim[X], source.dim[X])
        for j, x in enumerate(phi.source.at[X]):
            M[tidx[phi.components[X][x]], j] = 1
        comps[X] = M
    return LinearMap(source, target, comps)


def free_linear(cat: FinCategory, S: str) -> QPresheaf:
    F = linearize(representable(cat, S))
    F.name = f"Lambda({S})"
    return F


def free_linear_map(cat: FinCategory, u: str, source: QPresheaf | None = None,
                    target: QPresheaf | None = None) -> LinearMap:
    """Λ(u): Λ(A) -> Λ(B), h |-> u∘h."""
    from .setsheaf import represented_map
    phi = represented_map(cat, u)
    return linearize_map(phi, source or free_linear(cat, cat.src(u)), target or free_linear(cat, cat.tgt(u)))


def yoneda_section(F: QPresheaf, S: str, v: Mat) -> LinearMap:
    """The map Λ(S) -> F sending id_S to v."""
    cat = F.cat
    L = free_linear(cat, S)
    comps = {}
    for U in cat.objects:
        cols = [la.mul(F.mats[h], v) for h in cat.hom(U, S)]
        comps[U] = la.hstack(*cols, nrows=F.dim[U])
    return LinearMap(L, F, comps)


# -- direct sums ----------------------------------------------------------------

def direct_sum(*Fs: QPresheaf, name: str | None = None) -> tuple[QPresheaf, list[LinearMap], list[LinearMap]]:
    cat = Fs[0].cat
    dims = {X: sum(F.dim[X] for F in Fs) for X in cat.objects}
    mats = {f: la.block_diag(*[F.mats[f] for F in Fs]) for f in cat.morphisms}
    D = QPresheaf(cat, dims, mats, name or "+".join(F.name for F in Fs))
    inj, proj = [], []
    offs = {X: 0 for X in cat.objects}
    for F in Fs:
        i_c, p_c = {}, {}
        for X in cat.objects:
            r0 = offs[X]
            I = la.zeros(dims[X], F.dim[X])
            for k in range(F.dim[X]):
                I[r0 + k, k] = 1
            i_c[X] = I
            p_c[X] = I.transpose()
            offs[X] += F.dim[X]
        inj.append(LinearMap(F, D, i_c))
        proj.append(LinearMap(D, F, p_c))
    return D, inj, proj


def map_into_sum(maps: Sequence[LinearMap], target: QPresheaf) -> LinearMap:
    src = maps[0].source
    return LinearMap(src, target, {X: la.vstack(*[m.components[X] for m in maps], ncols=src.dim[X])
                                   for X in src.cat.objects})


def map_out_of_sum(maps: Sequence[LinearMap], source: QPresheaf) -> LinearMap:
    tgt = maps[0].target
    return LinearMap(source, tgt, {X: la.hstack(*[m.components[X] for m in maps], nrows=tgt.dim[X])
                                   for X in tgt.cat.objects})


def block_map(rows: Sequence[Sequence[LinearMap | None]], source: QPresheaf, target: QPresheaf,
              src_parts: Sequence[QPresheaf], tgt_parts: Sequence[QPresheaf]) -> LinearMap:
    """Map between direct sums given by a matrix of component maps (None = 0)."""
    comps = {}
    for X in source.cat.objects:
        blocks = []
        for i, row in enumerate(rows):
            cells = []
            for j, m in enumerate(row):
                cells.append(m.components[X] if m is not None else la.zeros(tgt_parts[i].dim[X], src_parts[j].dim[X]))
            blocks.append(la.hstack(*cells, nrows=tgt_parts[i].dim[X]))
        comps[X] = la.vstack(*blocks, ncols=source.dim[X])
    return LinearMap(source, target, comps)


# -- sub-presheaves, kernels, cokernels ----------------------------------------------

def is_subpresheaf(F: QPresheaf, sub: dict) -> bool:
    cat = F.cat
    for f, m in cat.morphisms.items():
        img = la.mul(F.mats[f], sub[m.tgt])
        if not la.in_span(sub[m.src], img) and img.ncols() and not la.is_zero(img):
            return False
    return True


def sub_as_presheaf(F: QPresheaf, sub: dict, name: str | None = None) -> tuple[QPresheaf, LinearMap]:
    cat = F.cat
    sub = {X: (la.colspace(B) if B.ncols() else la.zeros(F.dim[X], 0)) for X, B in sub.items()}
    mats = {}
    for f, m in cat.morphisms.items():
        img = la.mul(F.mats[f], sub[m.tgt])
        mats[f] = la.coords(sub[m.src], img) if sub[m.src].ncols() else la.zeros(0, sub[m.tgt].ncols())
    P = QPresheaf(cat, {X: sub[X].ncols() for X in cat.objects}, mats, name or F.name + "_sub")
    return P, LinearMap(P, F, dict(sub))


def quotient_presheaf(F: QPresheaf, sub: dict, name: str | None = None) -> tuple[QPresheaf, LinearMap, dict]:
    """F/sub with projection; also returns per-object sections of the projection."""
    cat = F.cat
    proj, sect = {}, {}
    for X in cat.objects:
        B = sub[X] if sub[X].ncols() else la.zeros(F.dim[X], 0)
        P, C = la.quotient(F.dim[X], B)
        proj[X], sect[X] = P, C
    mats = {f: la.mul(proj[m.src], F.mats[f], sect[m.tgt]) for f, m in cat.morphisms.items()}
    Q = QPresheaf(cat, {X: proj[X].nrows() for X in cat.objects}, mats, name or F.name + "_quot")
    return Q, LinearMap(F, Q, proj), sect


def kernel(phi: LinearMap) -> dict:
    return {X: la.nullspace(c) if c.ncols() else la.zeros(0, 0) for X, c in phi.components.items()}


def image(phi: LinearMap) -> dict:
    out = {}
    for X, c in phi.components.items():
        out[X] = la.colspace(c) if c.ncols() and c.nrows() else la.zeros(phi.target.dim[X], 0)
    return out


def cokernel(phi: LinearMap) -> tuple[QPresheaf, LinearMap]:
    Q, q, _ = quotient_presheaf(phi.target, image(phi), "coker")
    return Q, q


def factor_through_sub(phi: LinearMap, sub_inclusion: LinearMap) -> LinearMap:
    """Corestrict phi through an injective map whose image contains im(phi)."""
    comps = {X: la.coords(sub_inclusion.components[X], c) if sub_inclusion.source.dim[X]
             else la.zeros(0, phi.source.dim[X]) for X, c in phi.components.items()}
    return LinearMap(phi.source, sub_inclusion.source, comps)


def factor_through_quotient(phi: LinearMap, q: LinearMap, sections: dict, target: QPresheaf) -> LinearMap:
    """The map Q -> target induced by phi (assumed to vanish on ker q)."""
    return LinearMap(q.target, target, {X: la.mul(phi.components[X], sections[X]) for X in phi.source.cat.objects})


def generated_sub(F: QPresheaf, gens: dict) -> dict:
    """Smallest sub-presheaf containing the given columns at each object."""
    cat = F.cat
    cols = {X: [] for X in cat.objects}
    for Y, V in gens.items():
        if V.ncols() == 0:
            continue
        for f in cat.into(Y):
            cols[cat.src(f)].append(la.mul(F.mats[f], V))
    return {X: la.colspace(la.hstack(*cs, nrows=F.dim[X])) if cs else la.zeros(F.dim[X], 0)
            for X, cs in cols.items()}


def sub_sum(F: QPresheaf, *subs: dict) -> dict:
    return {X: la.span_sum(*[s[X] for s in subs], dim=F.dim[X]) for X in F.cat.objects}


def sub_dims(sub: dict) -> dict:
    return {X: B.ncols() for X, B in sub.items()}


# -- Hom spaces ----------------------------------------------------------------

def _hom_system(F: QPresheaf, G: QPresheaf):
    """Naturality constraints on the stacked entries of (phi_X)_X."""
    cat = F.cat
    offset, n = {}, 0
    for X in cat.objects:
        offset[X] = n
        n += G.dim[X] * F.dim[X]
    rows = []
    for f in cat.generators():
        m = cat.morphisms[f]
        X, Y = m.src, m.tgt
        A, B = F.mats[f], G.mats[f]  # A: dimF X x dimF Y ; B: dimG X x dimG Y
        dFX, dFY, dGX, dGY = F.dim[X], F.dim[Y], G.dim[X], G.dim[Y]
        # (phi_X A - B phi_Y)[i, j] = 0
        for i in range(dGX):
            for j in range(dFY):
                row = {}
                for k in range(dFX):
                    a = A[k, j]
                    if a != 0:
                        idx = offset[X] + i * dFX + k
                        row[idx] = row.get(idx, 0) + a
                for k in range(dGY):
                    b = B[i, k]
                    if b != 0:
                        idx = offset[Y] + k * dFY + j
                        row[idx] = row.get(idx, 0) - b
                if any(v != 0 for v in row.values()):
                    rows.append(row)
    return rows, offset, n


def _sparse_to_mat(rows: list[dict], n: int) -> Mat:
    M = la.zeros(len(rows), n)
    for i, r in enumerate(rows):
        for j, v in r.items():
            if v != 0:
                M[i, j] = v
    return M


def _vector_to_map(F: QPresheaf, G: QPresheaf, offset: dict, v: Mat, col: int = 0) -> LinearMap:
    comps = {}
    for X in F.cat.objects:
        M = la.zeros(G.dim[X], F.dim[X])
        for i in range(G.dim[X]):
            for k in range(F.dim[X]):
                x = v[offset[X] + i * F.dim[X] + k, col]
                if x != 0:
                    M[i, k] = x
        comps[X] = M
    return LinearMap(F, G, comps)


def hom_space_direct(F: QPresheaf, G: QPresheaf) -> list[LinearMap]:
    """Basis of Hom(F, G) from the full naturality system (one unknown per matrix entry)."""
    rows, offset, n = _hom_system(F, G)
    N = la.nullspace(_sparse_to_mat(rows, n)) if rows else la.identity(n)
    return [_vector_to_map(F, G, offset, N, c) for c in range(N.ncols())]


@dataclass
class Presentation:
    """Generators a_i ∈ F(X_i) of F and, per object U, the surjection
    ⊕_i Q[Hom(U, X_i)] -> F(U) with a right inverse."""
    gens: list          # [(X_i, column vector)]
    index: dict         # U -> [(i, h)] column labels
    surj: dict          # U -> dim F(U) x len(index[U])
    section: dict       # U -> right inverse of surj[U]


def presentation(F: QPresheaf) -> Presentation:
    cat = F.cat
    sub = {U: la.zeros(F.dim[U], 0) for U in cat.objects}
    gens = []
    for X in cat.objects:
        if sub[X].ncols() == F.dim[X]:
            continue
        C = la.extend_to_basis(sub[X], F.dim[X])
        for v in (la.column(C, j) for j in range(C.ncols())):
            if sub[X].ncols() and la.in_span(sub[X], v):
                continue
            gens.append((X, v))
            for U in cat.objects:
                hs = cat.hom(U, X)
                if hs and F.dim[U]:
                    new = la.hstack(*[la.mul(F.mats[h], v) for h in hs], nrows=F.dim[U])
                    sub[U] = la.span_sum(sub[U], new, dim=F.dim[U])
    index, surj, section = {}, {}, {}
    for U in cat.objects:
        labels, cols = [], []
        for i, (X, v) in enumerate(gens):
            for h in cat.hom(U, X):
                labels.append((i, h))
                cols.append(la.mul(F.mats[h], v))
        S = la.hstack(*cols, nrows=F.dim[U]) if cols else la.zeros(F.dim[U], 0)
        index[U], surj[U] = labels, S
        section[U] = la.left_inverse(S.transpose()).transpose() if F.dim[U] else la.zeros(len(labels), 0)
    return Presentation(gens, index, surj, section)


def _generator_rows(G: QPresheaf, P: Presentation, U: str, offs: list, n: int) -> list[Mat]:
    """E_r (r < dim G(U)): row (i, h) is row r of G(h), placed at the slot of b_i."""
    g = G.dim[U]
    L = len(P.index[U])
    ents = [[0] * (L * n) for _ in range(g)]
    for row, (i, h) in enumerate(P.index[U]):
        X = P.gens[i][0]
        d = G.dim[X]
        if not d:
            continue
        e = G.mats[h].entries()
        base = row * n + offs[i]
        for r in range(g):
            ents[r][base:base + d] = e[r * d:(r + 1) * d]
    return [la.Mat(L, n, e) if L and n else la.zeros(L, n) for e in ents]


def _hom_stacked(F: QPresheaf, G: QPresheaf, pres: Presentation | None = None) -> tuple[int, dict]:
    """Basis of Hom(F, G) as (count C, {U: list of C matrices})."""
    cat = F.cat
    P = pres or presentation(F)
    offs, n = [], 0
    for X, _ in P.gens:
        offs.append(n)
        n += G.dim[X]
    rows = {U: _generator_rows(G, P, U, offs, n) for U in cat.objects if G.dim[U] and P.index[U]}
    blocks = []
    for U, Es in rows.items():
        R = la.nullspace(P.surj[U]) if F.dim[U] else la.identity(len(P.index[U]))
        if R.ncols():
            Rt = R.transpose()
            blocks += [la.mul(Rt, E) for E in Es]
    A = la.vstack(*blocks, ncols=n) if blocks else la.zeros(0, n)
    N = la.nullspace(A) if A.nrows() else la.identity(n)
    C = N.ncols()
    comps = {}
    for U in cat.objects:
        f, g = F.dim[U], G.dim[U]
        if not f or not g or not C:
            comps[U] = [la.zeros(g, f) for _ in range(C)]
            continue
        Qs = [la.mul(la.mul(E, N).transpose(), P.section[U]).entries() for E in rows[U]]
        comps[U] = [la.Mat(g, f, [x for Q in Qs for x in Q[c * f:(c + 1) * f]]) for c in range(C)]
    return C, comps


def hom_space(F: QPresheaf, G: QPresheaf, pres: Presentation | None = None) -> list[LinearMap]:
    """A basis of the natural transformations F -> G.

    A map is fixed by the images b_i ∈ G(X_i) of generators of F; these are
    subject only to the relations of the presentation.
    """
    C, comps = _hom_stacked(F, G, pres)
    return [LinearMap(F, G, {U: comps[U][c] for U in F.cat.objects}) for c in range(C)]


def solve_natural(F: QPresheaf, G: QPresheaf, constraints: Sequence[tuple]):
    """Find phi: F -> G natural with, for each (pre, target, post), the
    identity ``post ∘ phi ∘ pre = target`` (pre or post may be None).

    Returns a LinearMap or None if no solution exists.
    """
    cat = F.cat
    C, comps = _hom_stacked(F, G)
    coef = [[] for _ in range(C)]
    rhs = []
    for pre, target, post in constraints:
        for X in cat.objects:
            T = target.components[X]
            if not T.nrows() or not T.ncols():
                continue
            rhs += T.entries()
            for c in range(C):
                M = comps[X][c]
                if pre is not None:
                    M = la.mul(M, pre.components[X])
                if post is not None:
                    M = la.mul(post.components[X], M)
                coef[c] += M.entries()
    b = la.Mat(len(rhs), 1, rhs) if rhs else la.zeros(0, 1)
    if not C:
        return zero_map(F, G) if la.is_zero(b) else None
    A = la.Mat(C, len(rhs), [x for col in coef for x in col]).transpose() if rhs else la.zeros(0, C)
    x = la.solve(A, b)
    if x is None:
        return None
    out = {}
    for X in cat.objects:
        acc = la.zeros(G.dim[X], F.dim[X])
        for c in range(C):
            if x[c, 0] != 0:
                acc = acc + comps[X][c] * x[c, 0]
        out[X] = acc
    return LinearMap(F, G, out)


# -- linear sheafification ------------------------------------------------------------

@dataclass
class PlusStage:
    F: QPresheaf
    Fp: QPresheaf
    basis: dict      # X -> ambient basis of matching families
    left_inv: dict   # X -> left inverse of basis
    covers: dict     # X -> sorted members of the minimal covering sieve
    unit: LinearMap


def _families_system(F: QPresheaf, R: list[str], cat: FinCategory):
    """Constraints s_{f∘h} = F(h) s_f on families (s_f)_{f ∈ R}, one row block per (f, h)."""
    offs, n = {}, 0
    for f in R:
        offs[f] = n
        n += F.dim[cat.src(f)]
    ents: list = []
    nrows = 0
    # constraints along composites follow from those along generators
    gens_into: dict = {}
    for h in cat.generators():
        gens_into.setdefault(cat.tgt(h), []).append(h)
    for f in R:
        src = cat.src(f)
        for h in gens_into.get(src, ()):
            W = cat.src(h)
            d = F.dim[W]
            if d == 0:
                continue
            block = [0] * (d * n)
            o_fh, o_f = offs[cat.comp(f, h)], offs[f]
            for i in range(d):
                block[i * n + o_fh + i] += 1
            e = F.mats[h].entries()
            k = F.dim[src]
            for i in range(d):
                row = e[i * k:(i + 1) * k]
                base = i * n + o_f
                for j, x in enumerate(row):
                    if x != 0:
                        block[base + j] -= x
            ents += block
            nrows += d
    A = la.Mat(nrows, n, ents) if nrows and n else la.zeros(nrows, n)
    return offs, n, A


def linear_plus(F: QPresheaf, t: Topology) -> PlusStage:
    cat = F.cat
    basis, linv, covers, offsets, dims = {}, {}, {}, {}, {}
    for X in cat.objects:
        R = t.minimal_cover(X).ids()
        offs, n, A = _families_system(F, R, cat)
        B = la.nullspace(A) if A.nrows() else la.identity(n)
        covers[X], offsets[X], basis[X] = R, offs, B
        linv[X] = la.left_inverse(B)
        dims[X] = B.ncols()
    mats = {}
    for g, m in cat.morphisms.items():
        Y, X = m.src, m.tgt
        # ambient restriction: block k of Y <- block g∘k of X
        nY = basis[Y].nrows()
        nX = basis[X].nrows()
        T = la.zeros(nY, nX)
        for k in covers[Y]:
            gk = cat.comp(g, k)
            la._paste(T, la.identity(F.dim[cat.src(k)]), offsets[Y][k], offsets[X][gk])
        mats[g] = la.mul(linv[Y], T, basis[X])
    Fp = QPresheaf(cat, dims, mats, F.name + "+")
    ucomps = {}
    for X in cat.objects:
        stacked = la.vstack(*[F.mats[f] for f in covers[X]], ncols=F.dim[X])
        ucomps[X] = la.mul(linv[X], stacked)
    return PlusStage(F, Fp, basis, linv, covers, LinearMap(F, Fp, ucomps))


def linear_plus_map(phi: LinearMap, s: PlusStage, s2: PlusStage) -> LinearMap:
    cat = phi.source.cat
    comps = {}
    for X in cat.objects:
        D = la.block_diag(*[phi.components[cat.src(f)] for f in s.covers[X]])
        comps[X] = la.mul(s2.left_inv[X], D, s.basis[X])
    return LinearMap(s.Fp, s2.Fp, comps)


@dataclass
class LinearSheafification:
    sheaf: QPresheaf
    unit: LinearMap
    stages: tuple


def sheafify_linear(F: QPresheaf, t: Topology) -> LinearSheafification:
    s1 = linear_plus(F, t)
    s2 = linear_plus(s1.Fp, t)
    s2.Fp.name = f"a({F.name})"
    return LinearSheafification(s2.Fp, s1.unit.then(s2.unit), (s1, s2))


def sheafify_linear_map(phi: LinearMap, aF: LinearSheafification, aG: LinearSheafification) -> LinearMap:
    m1 = linear_plus_map(phi, aF.stages[0], aG.stages[0])
    return linear_plus_map(m1, aF.stages[1], aG.stages[1])


def sheaf_violations_linear(F: QPresheaf, t: Topology) -> list[str]:
    cat = F.cat
    bad = []
    for X in cat.objects:
        for R in t.covering_sieves(X):
            ids = R.ids()
            _, n, A = _families_system(F, ids, cat)
            fam_dim = n - la.rank(A)
            stacked = la.vstack(*[F.mats[f] for f in ids], ncols=F.dim[X])
            if la.rank(stacked) != F.dim[X] or fam_dim != F.dim[X]:
                bad.append(f"linear sheaf condition fails at {X} for sieve {ids}")
    return bad


def is_sheaf_linear(F: QPresheaf, t: Topology) -> bool:
    return not sheaf_violations_linear(F, t)


def free_sheaf(cat: FinCategory, S: str, t: Topology) -> LinearSheafification:
    return sheafify_linear(free_linear(cat, S), t)


# -- group actions -------------------------------------------------------------------

@dataclass
class GModule:
    group: FinGroup
    dim: int
    action: dict  # group element -> dim x dim matrix

    def violations(self) -> list[str]:
        G = self.group
        bad = []
        if not la.equal(self.action[G.unit], la.identity(self.dim)):
            bad.append("unit does not act as the identity")
        for a in G.elements:
            for b in G.elements:
                if not la.equal(self.action[G.mul[(a, b)]], la.mul(self.action[a], self.action[b])):
                    bad.append(f"action not multiplicative at ({a}, {b})")
        return bad


@dataclass
class FixedPoints:
    projector: Mat
    basis: Mat

    @property
    def dim(self) -> int:
        return self.basis.ncols()


def averaging_projector(group: FinGroup, mats: dict, n: int) -> Mat:
    P = la.zeros(n, n)
    for g in group.elements:
        P = la.add(P, mats[g])
    return la.scale(P, Fraction(1, group.order))


def fixed_points(M: GModule) -> FixedPoints:
    p = averaging_projector(M.group, M.action, M.dim)
    if not la.equal(la.mul(p, p), p):
        raise CategoryError("averaging operator is not idempotent")
    basis = la.colspace(p) if M.dim else la.zeros(0, 0)
    return FixedPoints(p, basis)


def section_module(F: QPresheaf, action: GroupAction) -> GModule:
    """G acting on F(X) through the restrictions F(σ_g).

    F(σ_g) is a right action; g |-> F(σ_{g^-1}) makes it a left one.  The
    fixed subspace does not depend on the choice.
    """
    G = action.group
    return GModule(G, F.dim[action.carrier], {g: F.mats[action.act[G.inv[g]]] for g in G.elements})


def linear_group_quotient(cat: FinCategory, action: GroupAction, t: Topology) -> LinearSheafification:
    """Λ_t(S)_G: sheafified coinvariants of Λ(S), with orbit basis."""
    Q, _ = orbit_quotient(cat, action)
    L = linearize(Q)
    L.name = f"Lambda({action.carrier})_{action.group.name}"
    return sheafify_linear(L, t)


def orbit_presheaf(cat: FinCategory, action: GroupAction) -> tuple[QPresheaf, object]:
    Q, _ = orbit_quotient(cat, action)
    L = linearize(Q)
    L.name = f"Lambda({action.carrier})_{action.group.name}"
    return L, Q


def torsion_part(M: QPresheaf, t: Topology) -> tuple[QPresheaf, LinearMap]:
    a = sheafify_linear(M, t)
    return sub_as_presheaf(M, kernel(a.unit), M.name + "_tors")


# -- Mayer-Vietoris -------------------------------------------------------------------

@dataclass
class MVRecord:
    first: LinearMap
    second: LinearMap
    exact: bool
    witness: str | None = None
    convention: str = "x -> (g'x, f'x); (a, b) -> f a - g b"
    terms: tuple = field(default_factory=tuple)


def mv_sequence(square, t: Topology, strict: bool = True) -> MVRecord:
    """0 -> Λ_t(X')_G -> Λ_t(X)_G ⊕ Λ_t(S') -> Λ_t(S) -> 0 with exactness verdict."""
    from .setsheaf import orbit_quotient as oq
    cat = t.cat
    QXp, _ = oq(cat, square.act_Xp)
    QX, _ = oq(cat, square.act_X)
    A = linearize(QXp)
    BX = linearize(QX)
    BS = free_linear(cat, square.Sp)
    C = free_linear(cat, square.S)
    B, injB, _ = direct_sum(BX, BS)

    def orbit_rep(action, h):
        return min(cat.comp(action.act[g], h) for g in action.group.elements)

    def push(src_set, dst_set, src_q, dst_q, fn, sign=1):
        comps = {}
        for U in cat.objects:
            idx = {y: i for i, y in enumerate(dst_set.at[U])}
            M = la.zeros(dst_q.dim[U], src_q.dim[U])
            for j, x in enumerate(src_set.at[U]):
                M[idx[fn(x)], j] = sign
            comps[U] = M
        return LinearMap(src_q, dst_q, comps)

    rhoSp, rhoS = representable(cat, square.Sp), representable(cat, square.S)
    a1 = push(QXp, QX, A, BX, lambda r: orbit_rep(square.act_X, cat.comp(square.gp, r)))
    a2 = push(QXp, rhoSp, A, BS, lambda r: cat.comp(square.fp, r))
    b1 = push(QX, rhoS, BX, C, lambda r: cat.comp(square.f, r))
    b2 = push(rhoSp, rhoS, BS, C, lambda h: cat.comp(square.g, h), sign=-1)
    alpha = map_into_sum([a1, a2], B)
    beta = map_out_of_sum([b1, b2], B)
    aA, aB, aC = sheafify_linear(A, t), sheafify_linear(B, t), sheafify_linear(C, t)
    s_alpha = sheafify_linear_map(alpha, aA, aB)
    s_beta = sheafify_linear_map(beta, aB, aC)
    witness = None
    if not s_alpha.then(s_beta).is_zero():
        witness = "composite of the two maps is nonzero"
    if witness is None:
        for X in cat.objects:
            if la.rank(s_alpha.components[X]) != aA.sheaf.dim[X]:
                witness = f"first map not injective at {X}"
                break
    if witness is None:
        # middle homology presheaf must sheafify to zero
        K, kinc = sub_as_presheaf(aB.sheaf, kernel(s_beta))
        Hm, _, _ = quotient_presheaf(K, {X: la.coords(kinc.components[X], s_alpha.components[X])
                                         if K.dim[X] else la.zeros(0, 0) for X in cat.objects})
        aH = sheafify_linear(Hm, t).sheaf
        for X in cat.objects:
            if aH.dim[X]:
                witness = f"middle homology survives sheafification at {X}"
                break
    if witness is None:
        for X in cat.objects:
            R = t.minimal_cover(X)
            for f in R.ids():
                U = cat.src(f)
                img = la.mul(aC.sheaf.mats[f], la.identity(aC.sheaf.dim[X]))
                target = s_beta.components[U]
                if img.ncols() and not la.is_zero(img) and not la.in_span(target, img):
                    witness = f"last map not locally surjective at {X} along {f}"
                    break
            if witness:
                break
    rec = MVRecord(s_alpha, s_beta, witness is None, witness, terms=(aA.sheaf, aB.sheaf, aC.sheaf))
    if strict and not rec.exact:
        raise NotExact(witness)
    return rec


# -- random presheaves for property tests ---------------------------------------------

def random_map(F: QPresheaf, G: QPresheaf, rng, coeff: int = 3) -> LinearMap:
    basis = hom_space(F, G)
    phi = zero_map(F, G)
    for b in basis:
        c = rng.randint(-coeff, coeff)
        if c:
            phi = phi + b.scaled(c)
    return phi


def random_qpresheaf(cat: FinCategory, rng, max_dim: int = 4, tries: int = 50) -> QPresheaf:
    """Cokernel of a random map between sums of free presheaves, or a
    linearized random set presheaf, with all dimensions at most ``max_dim``."""
    from .setsheaf import random_set_presheaf
    small = [X for X in cat.objects if all(len(cat.hom(U, X)) <= max_dim for U in cat.objects)] or [cat.initial]
    for _ in range(tries):
        kind = rng.random()
        if kind < 0.35:
            F = linearize(random_set_presheaf(cat, rng, max_pieces=2, max_size=max_dim))
        else:
            gens = [free_linear(cat, rng.choice(small)) for _ in range(rng.randint(1, 2))]
            G, _, _ = direct_sum(*gens)
            if rng.random() < 0.5:
                rel = free_linear(cat, rng.choice(cat.objects))
                F, _ = cokernel(random_map(rel, G, rng))
            else:
                F = G
        if max(F.dim.values()) <= max_dim:
            F.name = "R"
            return F
    return zero_presheaf(cat)
