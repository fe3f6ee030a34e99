"""Pulse-level simulation and pulse design for mid-circuit measurement and
reset on trapped-ion chains that shelve population in a metastable manifold.
"""

from mcmr.quantum import (
    LindbladSystem,
    Operator,
    QuantumState,
    fidelity,
    propagate_lindblad,
    propagate_unitary,
    rotation_from_vector,
    rotation_vector,
)

__all__ = [
    "LindbladSystem",
    "Operator",
    "QuantumState",
    "fidelity",
    "propagate_lindblad",
    "propagate_unitary",
    "rotation_from_vector",
    "rotation_vector",
]

__version__ = "0.1.0"
