"""Bit-exact BF16 words: field access, segment masks and value semantics.

A BF16 word is the upper half of an IEEE binary32 pattern::

    bit 15      sign
    bits 14..7  exponent (bias 127)
    bits 6..0   mantissa

Scalars are plain ``int`` patterns; arrays are ``numpy.uint16``.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

SIGN_SHIFT = 15
EXP_SHIFT = 7
EXP_BITS = 8
MANT_BITS = 7

SIGN_BIT = 0x8000
EXPONENT_BITS = 0x7F80
MANTISSA = 0x007F
SIGN_EXP = 0xFF80
FULL = 0xFFFF

EXP_MAX = (1 << EXP_BITS) - 1
MANT_MAX = (1 << MANT_BITS) - 1


class SegmentClass(str, Enum):
    """Storage bank a stored bit belongs to."""

    SIGN_EXP = "sign_exp"
    KV_MANTISSA = "kv_mantissa"
    QO_MANTISSA = "qo_mantissa"


def segment_of(bit: int, persistent: bool) -> SegmentClass:
    """Classify bit position ``bit`` (0 = LSB) of a KV (persistent) or QO word."""
    if not 0 <= bit < 16:
        raise ValueError(f"bit index out of range: {bit}")
    if (1 << bit) & SIGN_EXP:
        return SegmentClass.SIGN_EXP
    return SegmentClass.KV_MANTISSA if persistent else SegmentClass.QO_MANTISSA


def _check_word(word: int) -> int:
    word = int(word)
    if not 0 <= word <= FULL:
        raise ValueError(f"not a 16-bit pattern: {word!r}")
    return word


def encode(sign: int, exponent: int, mantissa: int) -> int:
    if sign not in (0, 1):
        raise ValueError(f"sign must be 0 or 1, got {sign}")
    if not 0 <= exponent <= EXP_MAX:
        raise ValueError(f"exponent out of range: {exponent}")
    if not 0 <= mantissa <= MANT_MAX:
        raise ValueError(f"mantissa out of range: {mantissa}")
    return (sign << SIGN_SHIFT) | (exponent << EXP_SHIFT) | mantissa


def decode(word: int) -> tuple[int, int, int]:
    """Split a pattern into ``(sign, exponent, mantissa)``."""
    word = _check_word(word)
    return word >> SIGN_SHIFT, (word >> EXP_SHIFT) & EXP_MAX, word & MANT_MAX


def decode_array(words: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    w = np.asarray(words, dtype=np.uint16)
    return w >> SIGN_SHIFT, (w >> EXP_SHIFT) & EXP_MAX, w & MANT_MAX


def apply_segment(word: int, mask: int) -> tuple[int, int]:
    """Return ``(word & mask, word & ~mask)``."""
    word = _check_word(word)
    mask = _check_word(mask)
    return word & mask, word & (~mask & FULL)


def to_float32(words: np.ndarray) -> np.ndarray:
    """Widen BF16 patterns to float32 exactly (NaN payloads preserved)."""
    w = np.asarray(words, dtype=np.uint16)
    return (w.astype(np.uint32) << 16).view(np.float32)


def value_of(word: int) -> float:
    return float(to_float32(np.array([_check_word(word)], dtype=np.uint16))[0])


def from_float32(values: np.ndarray) -> np.ndarray:
    """Round float32 values to BF16 patterns, round-to-nearest-even.

    NaNs are quieted so that rounding can never carry them into Inf.
    """
    x = np.ascontiguousarray(values, dtype=np.float32)
    bits = x.view(np.uint32)
    lsb = (bits >> 16) & 1
    rounded = ((bits + np.uint32(0x7FFF) + lsb) >> 16).astype(np.uint16)
    nan = np.isnan(x)
    if nan.any():
        quiet = ((bits >> 16) | 0x0040).astype(np.uint16)
        rounded = np.where(nan, quiet, rounded)
    return rounded


def from_float(value: float) -> int:
    return int(from_float32(np.array([value], dtype=np.float32))[0])


def is_normal(words: np.ndarray) -> np.ndarray:
    exp = (np.asarray(words, dtype=np.uint16) >> EXP_SHIFT) & EXP_MAX
    return (exp != 0) & (exp != EXP_MAX)
