"""Single-layer multi-head attention over BF16 storage.

Every tensor that would live in the activation workspace (Q, K, V per head and
the concatenated output O) is materialized as BF16 words. Products and the
softmax run in float64. In a faulty pass the stored words are corrupted as
they are read back, Q/O at the QO rate and K/V at the KV rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bf16
from .faults import FaultSpec, LayerKind, changed_fraction, inject_tensor, select_rho, stream_for


@dataclass(frozen=True)
class AttentionWeights:
    wq: np.ndarray  # (d, d) BF16 words; head i owns columns i*d_k:(i+1)*d_k
    wk: np.ndarray
    wv: np.ndarray
    num_heads: int

    def __post_init__(self):
        d = self.wq.shape[0]
        for w in (self.wq, self.wk, self.wv):
            if w.shape != (d, d):
                raise ValueError(f"weight matrices must be {d}x{d}, got {w.shape}")
        if self.num_heads < 1 or d % self.num_heads:
            raise ValueError(f"num_heads={self.num_heads} must divide d={d}")

    @property
    def d(self) -> int:
        return self.wq.shape[0]

    @property
    def d_k(self) -> int:
        return self.d // self.num_heads

    @classmethod
    def identity(cls, d: int, num_heads: int = 1) -> "AttentionWeights":
        eye = bf16.from_float32(np.eye(d, dtype=np.float32))
        return cls(eye, eye.copy(), eye.copy(), num_heads)

    @classmethod
    def random(cls, d: int, num_heads: int, seed: int = 0) -> "AttentionWeights":
        rng = np.random.default_rng(seed)
        mats = [bf16.from_float32(rng.standard_normal((d, d)) / np.sqrt(d)) for _ in range(3)]
        return cls(*mats, num_heads)


@dataclass
class AttentionWorkspace:
    """Words as written (``stored``) and as read back (``read``), plus softmax rows."""

    stored: dict[str, np.ndarray] = field(default_factory=dict)
    read: dict[str, np.ndarray] = field(default_factory=dict)
    probs: np.ndarray | None = None

    @property
    def output(self) -> np.ndarray:
        return self.read["O"]


_KINDS = {"Q": LayerKind.WQ, "K": LayerKind.WK, "V": LayerKind.WV, "O": LayerKind.WO}


def _f64(words: np.ndarray) -> np.ndarray:
    return bf16.to_float32(words).astype(np.float64)


def _store(values: np.ndarray) -> np.ndarray:
    return bf16.from_float32(values.astype(np.float32))


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(x: np.ndarray, weights: AttentionWeights, spec: FaultSpec | None) -> AttentionWorkspace:
    x = np.asarray(x, dtype=np.uint16)
    if x.ndim != 2 or x.shape[1] != weights.d:
        raise ValueError(f"X must be N x {weights.d}, got {x.shape}")
    n, h, dk = x.shape[0], weights.num_heads, weights.d_k
    ws = AttentionWorkspace()

    def put(name: str, values: np.ndarray) -> np.ndarray:
        words = _store(values)
        ws.stored[name] = words
        if spec is None:
            read = words.copy()
        else:
            kind = _KINDS[name]
            read = inject_tensor(words, select_rho(kind, spec), spec.mask, spec.seed, stream_for(kind))
        ws.read[name] = read
        return _f64(read)

    xf = _f64(x)

    def heads(w: np.ndarray) -> np.ndarray:
        # (N, d) @ (d, d) -> (heads, N, d_k)
        return (xf @ _f64(w)).reshape(n, h, dk).transpose(1, 0, 2)

    q = put("Q", heads(weights.wq))
    k = put("K", heads(weights.wk))
    v = put("V", heads(weights.wv))
    probs = _softmax(q @ k.transpose(0, 2, 1) / np.sqrt(dk))
    ws.probs = probs
    heads_out = probs @ v
    put("O", heads_out.transpose(1, 0, 2).reshape(n, h * dk))
    return ws


def attention_forward(x: np.ndarray, weights: AttentionWeights) -> np.ndarray:
    """Clean forward pass; returns O as BF16 words of shape ``(N, d)``."""
    return _forward(x, weights, None).output


def reference_forward(x: np.ndarray, weights: AttentionWeights) -> np.ndarray:
    """Float64 forward pass with no intermediate rounding (test oracle)."""
    xf = _f64(x)
    n, h, dk = xf.shape[0], weights.num_heads, weights.d_k
    outs = []
    for i in range(h):
        cols = slice(i * dk, (i + 1) * dk)
        qi = xf @ _f64(weights.wq)[:, cols]
        ki = xf @ _f64(weights.wk)[:, cols]
        vi = xf @ _f64(weights.wv)[:, cols]
        s = qi @ ki.T / np.sqrt(dk)
        p = np.exp(s - s.max(axis=1, keepdims=True))
        p /= p.sum(axis=1, keepdims=True)
        outs.append(p @ vi)
    return np.concatenate(outs, axis=1)


@dataclass
class FaultRun:
    o_clean: np.ndarray
    o_faulty: np.ndarray
    clean: AttentionWorkspace
    faulty: AttentionWorkspace
    stats: dict


def _perturbation_stats(clean: AttentionWorkspace, faulty: AttentionWorkspace) -> dict:
    a = _f64(clean.output).ravel()
    b = _f64(faulty.output).ravel()
    finite = np.isfinite(a) & np.isfinite(b)
    nz = finite & (a != 0)
    rel = np.abs(b[nz] - a[nz]) / np.abs(a[nz])
    denom = np.linalg.norm(a[finite]) * np.linalg.norm(b[finite])
    cosine = float(a[finite] @ b[finite] / denom) if denom > 0 else 1.0
    corrupted = {
        name: changed_fraction(faulty.stored[name], faulty.read[name]) for name in ("Q", "K", "V", "O")
    }
    return {
        "elements": {name: int(faulty.stored[name].size) for name in ("Q", "K", "V", "O")},
        "corrupted_fraction": corrupted,
        "output_changed_fraction": changed_fraction(clean.output, faulty.output),
        "output_max_rel_error": float(rel.max()) if rel.size else 0.0,
        "output_cosine_similarity": cosine,
        "output_nonfinite": int((~finite).sum()),
    }


def run_with_faults(x: np.ndarray, weights: AttentionWeights, spec: FaultSpec) -> FaultRun:
    clean = _forward(x, weights, None)
    faulty = _forward(x, weights, spec)
    return FaultRun(
        o_clean=clean.output,
        o_faulty=faulty.output,
        clean=clean,
        faulty=faulty,
        stats=_perturbation_stats(clean, faulty),
    )
