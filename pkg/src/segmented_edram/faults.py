"""Lifecycle-aware bit-fault injection for BF16 activation tensors.

Each tensor element ``i`` consumes exactly one 64-bit Philox output at
counter position ``i`` of its stream:

* bits 63..16 give the selector uniform ``u_i`` in [0, 1) (48-bit resolution),
* bits 15..0 give the noise word ``n_i``.

The element is corrupted to ``x_i ^ (n_i & mask)`` iff ``u_i < rho``. Because
draws are indexed by element, any slice of a tensor can be reproduced on its
own (see :func:`draw_stream`), and layer streams are keyed by layer kind, so
neither processing order nor chunking changes the result.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .bf16 import MANTISSA

_U48 = 2.0**-48


class LayerKind(str, Enum):
    WQ = "WQ"
    WK = "WK"
    WV = "WV"
    WO = "WO"
    OTHER = "Other"


# fixed stream ids; never reorder
_STREAM_ID = {LayerKind.WQ: 1, LayerKind.WK: 2, LayerKind.WV: 3, LayerKind.WO: 4, LayerKind.OTHER: 5}


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"error rate must lie in [0, 1], got {rho}")
    return rho


@dataclass(frozen=True)
class FaultSpec:
    rho_kv: float = 1e-4
    rho_qo: float = 0.25
    mask: int = MANTISSA
    seed: int = 0

    def __post_init__(self):
        _check_rho(self.rho_kv)
        _check_rho(self.rho_qo)
        if not 0 <= self.mask <= 0xFFFF:
            raise ValueError(f"mask must be a 16-bit pattern, got {self.mask:#x}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def select_rho(kind: LayerKind, spec: FaultSpec) -> float:
    """Error rate for a layer output: KV rate for K/V, QO rate for Q/O, else 0."""
    kind = LayerKind(kind)
    if kind in (LayerKind.WK, LayerKind.WV):
        return spec.rho_kv
    if kind in (LayerKind.WQ, LayerKind.WO):
        return spec.rho_qo
    return 0.0


def draw_stream(seed: int, stream: tuple[int, ...], start: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Selector uniforms and noise words for elements ``[start, start + count)``."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(stream))
    bg = np.random.Philox(ss)
    # Philox advances in blocks of four 64-bit outputs
    bg.advance(start // 4)
    skip = start % 4
    raw = bg.random_raw(skip + count)[skip:]
    uniform = (raw >> np.uint64(16)).astype(np.float64) * _U48
    noise = (raw & np.uint64(0xFFFF)).astype(np.uint16)
    return uniform, noise


def inject_tensor(
    data: np.ndarray,
    rho: float,
    mask: int = MANTISSA,
    seed: int = 0,
    stream: tuple[int, ...] = (),
) -> np.ndarray:
    """Corrupt a tensor of BF16 words; returns a new ``uint16`` array of the same shape."""
    rho = _check_rho(rho)
    words = np.asarray(data, dtype=np.uint16)
    out = words.copy()
    if rho <= 0.0 or words.size == 0:
        return out
    uniform, noise = draw_stream(seed, stream, 0, words.size)
    flip = uniform < rho
    pattern = (noise & np.uint16(mask)) * flip.astype(np.uint16)
    flat = out.reshape(-1)
    flat ^= pattern
    return out


def stream_for(kind: LayerKind, *extra: int) -> tuple[int, ...]:
    return (_STREAM_ID[LayerKind(kind)], *extra)


def inject_by_layer(tensors: Mapping[LayerKind, np.ndarray], spec: FaultSpec) -> dict[LayerKind, np.ndarray]:
    """Apply :func:`inject_tensor` to every layer output with its layer's rate."""
    return {
        LayerKind(kind): inject_tensor(
            t, select_rho(kind, spec), spec.mask, spec.seed, stream_for(kind)
        )
        for kind, t in tensors.items()
    }


def changed_fraction(before: np.ndarray, after: np.ndarray) -> float:
    before = np.asarray(before, dtype=np.uint16)
    if before.size == 0:
        return 0.0
    return float(np.count_nonzero(before != np.asarray(after, dtype=np.uint16)) / before.size)


def binomial_band(n: int, p: float, k_sigma: float = 4.0) -> tuple[float, float]:
    """``mean +/- k_sigma * sd`` of a Binomial(n, p) fraction."""
    sd = np.sqrt(p * (1.0 - p) / n)
    return p - k_sigma * sd, p + k_sigma * sd
