"""Norm attainment diagnostics for operators between l_p sequence spaces.

Finite sections of infinite matrices, a multi-start power method for their
l_p -> l_q norms, attainment verdicts along section ladders and finite
lineability certificates.
"""

from .attainment import ATTAINS, DOES_NOT_ATTAIN, INCONCLUSIVE, diagnose, theorem_monotone_verify
from .norm_solver import SolverConfig, bruteforce_norm, ladder_norm, power_norm
from .operators import (
    disjoint_sum,
    finite_section,
    interleave,
    load_spec,
    op_dense,
    op_explicit,
    op_identity,
    op_novo1,
    op_reciprocal,
)
from .sequence_space import SeqVec, norm, rearrange

__all__ = [
    "ATTAINS",
    "DOES_NOT_ATTAIN",
    "INCONCLUSIVE",
    "SeqVec",
    "SolverConfig",
    "bruteforce_norm",
    "diagnose",
    "disjoint_sum",
    "finite_section",
    "interleave",
    "ladder_norm",
    "load_spec",
    "norm",
    "op_dense",
    "op_explicit",
    "op_identity",
    "op_novo1",
    "op_reciprocal",
    "power_norm",
    "rearrange",
    "theorem_monotone_verify",
]
