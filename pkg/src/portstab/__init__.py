"""Stabilizing port compensation for active linear multi-port networks.

Synthesis and verification of stabilizing port compensators via stable
coprime factorization: single-port series/parallel compensators, multi-port
doubly coprime factorizations, the affine parametrization of all stabilizing
compensators, and bounded-source bounded-response verification of the
interconnection.
"""

from .polyrat import (
    Polynomial,
    RationalFunction,
    StabilityVerdict,
    poly_roots,
    rf_is_stable,
    rf_is_unit,
)
from .ratmat import (
    ImproperMatrixError,
    RationalMatrix,
    StabilityReport,
    StateSpace,
    auto_grid,
    log_grid,
    minreal,
    rm_from_ss,
    rm_inv,
    rm_is_stable,
    rm_is_unimodular,
    rm_to_ss,
)
from .coprime import Dcf, SisoCoprime, dcf_from_ss, dcf_verify, siso_coprime
from .stabilize import (
    InterconnectionResult,
    check_single_port,
    hybrid_compensator,
    interconnect,
    robustness_sample,
    single_port_compensator,
)
from . import opamp

__all__ = [
    "Polynomial",
    "RationalFunction",
    "StabilityVerdict",
    "poly_roots",
    "rf_is_stable",
    "rf_is_unit",
    "ImproperMatrixError",
    "RationalMatrix",
    "StabilityReport",
    "StateSpace",
    "auto_grid",
    "log_grid",
    "minreal",
    "rm_from_ss",
    "rm_inv",
    "rm_is_stable",
    "rm_is_unimodular",
    "rm_to_ss",
    "Dcf",
    "SisoCoprime",
    "dcf_from_ss",
    "dcf_verify",
    "siso_coprime",
    "InterconnectionResult",
    "check_single_port",
    "hybrid_compensator",
    "interconnect",
    "robustness_sample",
    "single_port_compensator",
    "opamp",
]

__version__ = "0.1.0"
