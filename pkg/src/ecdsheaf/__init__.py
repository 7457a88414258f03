"""Exact verification engine for equivariant cd-structures on finite sites."""

from .fincat import (CategoryError, FinCategory, FinGroup, GroupAction, Morphism, cyclic_group,
                     poset_category, trivial_group, validate_category, validate_group_action)
from .sieves import Sieve, Topology, generate_topology, is_simple_cover, saturate
from .setsheaf import SetPresheaf, SetSheafMap, group_quotient_sheaf, is_epi, representable, sheafify_set
from .qmod import LinearMap, QPresheaf, free_linear, sheafify_linear
from .ecd import (DensityStructure, EcdStructure, EquivariantSquare, check_bounded, check_complete,
                  check_regular, derive_prime, make_square, validate_density, validate_ecd)
from .homological import (PresheafComplex, cohomology_table, injective_envelope, is_t_local,
                          sheaf_injective_resolution)
from .descent import check_theorem_2_3, check_theorem_2_16, check_vanishing
from .zoo import build_fixture

__version__ = "0.1.0"
