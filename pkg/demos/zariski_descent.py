"""
Descent on a three-point Zariski site
=====================================

S is covered by two opens U and V meeting in UV.  We compare, for a few
complexes, the square-wise condition against locality for the topology the
square generates.
"""

from ecdsheaf import descent, homological, qmod
from ecdsheaf.zoo import build_fixture

fx = build_fixture("Z3")
print(fx.name, "squares:", [C.name for C in fx.P.squares])

# the Zariski square generates one new covering sieve on S
for R in fx.t.covering_sieves("S"):
    print("covers S:", R.ids())

# hypotheses: complete, regular, bounded
print(descent.check_hypotheses(fx.P, fx.D).to_dict())

# a sheaf: both sides say yes
F = qmod.sheafify_linear(qmod.free_linear(fx.cat, "S"), fx.t).sheaf
v = descent.check_theorem_2_3(homological.concentrated(F), fx.P, fx.D)
print()
print(v.summary())

# Λ(UV) has nothing over U or V, but something over UV: the square fails
v = descent.check_theorem_2_3(homological.concentrated(qmod.free_linear(fx.cat, "UV")), fx.P, fx.D)
print()
print(v.summary())
print("witness:", v.witnesses["Zar"])

# cohomology of the sheaf above, degree by degree
print()
print("H^n(S, F):", homological.sheaf_cohomology("S", F, fx.t, 3).dims)
