"""Lifecycle-aware segmented refresh for BF16 activations in eDRAM.

Modules:

* :mod:`~segmented_edram.bf16` -- bit-exact BF16 words and segment masks
* :mod:`~segmented_edram.faults` -- masked bit-fault injection with counter-based RNG
* :mod:`~segmented_edram.retention` -- lognormal BER-vs-refresh-interval curve
* :mod:`~segmented_edram.energy` -- leakage + refresh power of baseline, KV-only and segmented policies
* :mod:`~segmented_edram.workload` -- prefill/decode footprint traces and scenario gains
* :mod:`~segmented_edram.attention` -- toy attention layer with stored-activation faults
"""

from .bf16 import MANTISSA, SIGN_EXP, SegmentClass, apply_segment, decode, encode, value_of
from .energy import ArrayConstants, BankPolicy, EnergyReport, WorkspaceState
from .faults import FaultSpec, LayerKind, inject_by_layer, inject_tensor, select_rho
from .retention import AnchorPoint, RetentionCurve, calibrate

__version__ = "0.1.0"

__all__ = [
    "MANTISSA",
    "SIGN_EXP",
    "SegmentClass",
    "apply_segment",
    "decode",
    "encode",
    "value_of",
    "ArrayConstants",
    "BankPolicy",
    "EnergyReport",
    "WorkspaceState",
    "FaultSpec",
    "LayerKind",
    "inject_by_layer",
    "inject_tensor",
    "select_rho",
    "AnchorPoint",
    "RetentionCurve",
    "calibrate",
]
