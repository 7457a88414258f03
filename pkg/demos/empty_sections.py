"""
What the squares cannot see
===========================

No square of an ecd-structure involves K(∅) except through maps out of it.
Every local complex nevertheless has K(∅) acyclic, since the empty sieve
covers ∅.  This demo samples random complexes and counts where the bare
square condition and locality disagree.
"""

import random

from ecdsheaf import descent, homological, qmod
from ecdsheaf.zoo import build_fixture

fx = build_fixture("Z3")
rng = random.Random(1)

# Λ(U): every square is homotopy Cartesian, but Λ(U)(∅) = Q
v = descent.check_theorem_2_3(homological.concentrated(qmod.free_linear(fx.cat, "U")), fx.P, fx.D)
print("Λ(U): squares", v.all_squares, "| local", v.locality.local, "| witness", v.locality.witness)

bare = augmented = 0
for _ in range(40):
    K = descent.random_complex(fx.cat, rng, max_length=2, max_dim=2, t=fx.t)
    v = descent.check_theorem_2_3(K, fx.P, fx.D)
    bare += v.agreement is False
    augmented += v.agreement_with_empty is False
print("disagreements: bare", bare, "| with K(∅) ≃ 0 added", augmented)

# the local replacement kills the offending sections
L, _ = descent.local_model(homological.concentrated(qmod.free_linear(fx.cat, "U")), fx.t, fx.D.max_dim())
print("L(Λ(U)) at ∅:", L.homology_dims("empty", 0, 2))
