"""
Galois descent for C2-sets
==========================

T is the free C2-set, pt the point.  The Galois square has the swap acting on
T over pt, and its sheaves are the presheaves whose value on pt is the fixed
part of the value on T.
"""

import random

from ecdsheaf import descent, ecd, homological, qmod
from ecdsheaf.zoo import build_fixture, gs_plus

fx = build_fixture("GS")
act = fx.square("Gal").act_X

# a random presheaf, its sheafification, and the averaging projector on F(T)
F = qmod.sheafify_linear(qmod.random_qpresheaf(fx.cat, random.Random(0)), fx.t).sheaf
fixed = qmod.fixed_points(qmod.section_module(F, act))
print("dim F(T) =", F.dim["T"], " dim F(pt) =", F.dim["pt"], " dim F(T)^C2 =", fixed.dim)

# rational coefficients: no higher cohomology
print("H^n(pt, F):", homological.sheaf_cohomology("pt", F, fx.t, 3).dims)

# with TT = T x_pt T added the derived squares exist
plus = build_fixture("GS+")
ctx = descent.union_context(plus.P, plus.D)
print("derived squares:", [C.name for C in ctx.prime.squares])
print("union topology equals t_P:", ctx.t_union == ctx.t_P)

K = homological.concentrated(qmod.sheafify_linear(qmod.free_linear(plus.cat, "pt"), plus.t).sheaf)
print(descent.check_theorem_2_16(K, plus.P, plus.D, ctx).summary())

# without the square splitting TT, the cover test alone is misleading
bare = [v for v in ecd.check_regular(gs_plus(False).P) if v.square == "Gal"][0]
print("bare Gal:", "regular" if bare.regular else "not regular", "-", bare.note)
