"""Covering radii of PGL(2,q) inside S_{q+1}.

Builds the field tower GF(p) < GF(q) < GF(q^2), enumerates PGL(2,q) as
permutations of the projective line, constructs an explicit permutation at
Hamming distance q-3 from the group whenever q = 1 (mod 6), certifies that
construction exhaustively, and determines exact covering radii by pruned
search for small q.
"""

from .gf import FieldTower, build_tower, build_tower_for_q, canonical_base, prime_power
from .projline import (GroupTable, MobiusMap, Permutation, ProjLine, fix_count,
                       format_permutation, parse_permutation)
from .metric import DistanceResult, distance_to_group, expected_cr, hamming
from .witness import (CertificateReport, CertificationError, NormFiber,
                      WitnessContext, build_context, build_witness, certify,
                      coincidence_count)
from .cover import (SearchBudgetError, SearchReport, exact_covering_radius,
                    sample_distances, stabilize_triple)

__version__ = "0.1.0"

__all__ = [
    "FieldTower", "build_tower", "build_tower_for_q", "canonical_base", "prime_power",
    "GroupTable", "MobiusMap", "Permutation", "ProjLine", "fix_count",
    "format_permutation", "parse_permutation",
    "DistanceResult", "distance_to_group", "expected_cr", "hamming",
    "CertificateReport", "CertificationError", "NormFiber", "WitnessContext",
    "build_context", "build_witness", "certify", "coincidence_count",
    "SearchBudgetError", "SearchReport", "exact_covering_radius",
    "sample_distances", "stabilize_triple",
    "__version__",
]
