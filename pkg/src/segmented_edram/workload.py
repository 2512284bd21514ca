"""Prefill/decode traces of the attention workspace and their refresh power.

Step 1 is the prefill step (the whole prompt is resident); each decode step
appends one token to the context. At every step the workspace footprint is
split into transient QO bytes and persistent KV bytes, and the three refresh
policies of :mod:`segmented_edram.energy` are evaluated on it.

Which bytes count as resident is set by :class:`WorkspaceScope`:

``qo_tokens``
    ``"prefill"`` (default): the QO buffer is sized for the prompt window and
    stays allocated through decode; ``"context"``: Q and O span the current
    context; ``"step"``: only the tokens processed in this step.
``kv_layers``
    ``"active"`` (default): only the active layer's K/V are in the on-chip
    workspace, other layers are streamed; ``"all"``: the whole cache.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from . import energy, retention
from .energy import ArrayConstants, EnergyReport, WorkspaceState


@dataclass(frozen=True)
class ModelConfig:
    name: str
    num_layers: int
    hidden_dim: int
    kv_dim: int
    bytes_per_element: int = 2

    def __post_init__(self):
        for f in ("num_layers", "hidden_dim", "kv_dim", "bytes_per_element"):
            if getattr(self, f) <= 0:
                raise ValueError(f"{f} must be positive")


@dataclass(frozen=True)
class Scenario:
    label: str
    prefill_tokens: int
    decode_tokens: int

    def __post_init__(self):
        if self.prefill_tokens < 1:
            raise ValueError("prefill_tokens must be >= 1")
        if self.decode_tokens < 0:
            raise ValueError("decode_tokens must be >= 0")


# token counts are not published; labels fix only which phase dominates
DEFAULT_SCENARIOS = {
    "summary": Scenario("Summary", 1024, 64),
    "translation": Scenario("Translation", 512, 512),
    "storytelling": Scenario("Storytelling", 128, 256),
}
LIFECYCLE_TRACE = Scenario("Custom", 128, 256)


@dataclass(frozen=True)
class WorkspaceScope:
    qo_tokens: str = "prefill"
    kv_layers: str = "active"

    def __post_init__(self):
        if self.qo_tokens not in ("prefill", "context", "step"):
            raise ValueError(f"unknown qo_tokens scope {self.qo_tokens!r}")
        if self.kv_layers not in ("active", "all"):
            raise ValueError(f"unknown kv_layers scope {self.kv_layers!r}")


def kelle_interval(curve: retention.RetentionCurve | None = None, ber: float = energy.KELLE_BER) -> float:
    """Single relaxed interval of the KV-only comparator, from its BER budget."""
    return (curve or retention.calibrate()).interval_for_ber(ber)


@dataclass(frozen=True)
class RefreshIntervals:
    t_std: float = energy.T_STD_US
    t_rel: float = energy.T_REL_US
    t_kelle: float = field(default_factory=kelle_interval)


@dataclass(frozen=True)
class TraceStep:
    step: int
    context_len: int
    workspace: WorkspaceState
    report: EnergyReport


@dataclass
class Trace:
    model: ModelConfig
    scenario: Scenario
    steps: list[TraceStep]
    aggregate: dict = field(default_factory=dict)


def load_models() -> dict[str, ModelConfig]:
    text = resources.files("segmented_edram").joinpath("data/models.json").read_text()
    return {key: ModelConfig(**spec) for key, spec in json.loads(text).items()}


def qo_footprint(m: ModelConfig, context_len: int) -> int:
    """Bytes of the Q and O tensors (``context_len x hidden_dim`` each) of one layer."""
    if context_len < 1:
        raise ValueError("context_len must be >= 1")
    return 2 * context_len * m.hidden_dim * m.bytes_per_element


def kv_footprint(m: ModelConfig, context_len: int, layers: int | None = None) -> int:
    """Bytes of the K and V cache over ``layers`` layers (default: all)."""
    if context_len < 1:
        raise ValueError("context_len must be >= 1")
    layers = m.num_layers if layers is None else layers
    return 2 * context_len * m.kv_dim * m.bytes_per_element * layers


def workspace_at(m: ModelConfig, s: Scenario, step: int, scope: WorkspaceScope = WorkspaceScope()) -> WorkspaceState:
    ctx = s.prefill_tokens + (step - 1)
    if scope.qo_tokens == "prefill":
        qo_tokens = s.prefill_tokens
    elif scope.qo_tokens == "context":
        qo_tokens = ctx
    else:
        qo_tokens = s.prefill_tokens if step == 1 else 1
    layers = 1 if scope.kv_layers == "active" else m.num_layers
    return WorkspaceState(b_kv=kv_footprint(m, ctx, layers), b_qo=qo_footprint(m, qo_tokens))


def step_weights(s: Scenario) -> np.ndarray:
    """Token-time of each step: the prefill step ingests the whole prompt."""
    w = np.ones(1 + s.decode_tokens)
    w[0] = s.prefill_tokens
    return w


def run_trace(
    m: ModelConfig,
    s: Scenario,
    constants: ArrayConstants,
    intervals: RefreshIntervals = RefreshIntervals(),
    scope: WorkspaceScope = WorkspaceScope(),
) -> Trace:
    steps = []
    for k in range(1, s.decode_tokens + 2):
        w = workspace_at(m, s, k, scope)
        report = energy.evaluate(constants, w, intervals.t_std, intervals.t_rel, intervals.t_kelle)
        steps.append(TraceStep(step=k, context_len=s.prefill_tokens + k - 1, workspace=w, report=report))
    trace = Trace(model=m, scenario=s, steps=steps)
    trace.aggregate = aggregate(trace, constants)
    return trace


def series(trace: Trace, name: str) -> np.ndarray:
    if name in ("b_kv", "b_qo", "b_total", "kv_ratio"):
        return np.array([getattr(st.workspace, name) for st in trace.steps], dtype=float)
    return np.array([getattr(st.report, name) for st in trace.steps], dtype=float)


# a reduction is reported as "in band" when it can account for the headline figure
HEADLINE_BAND = (0.30, 0.44)


def aggregate(trace: Trace, constants: ArrayConstants) -> dict:
    """Time-averaged powers and the three whole-trace reductions.

    Steps have unit duration for the time averages. ``eta_lifecycle_weighted``
    instead weights each step by the tokens it processes.
    """
    p_base = series(trace, "p_base").mean()
    p_kelle = series(trace, "p_kelle").mean()
    p_shield = series(trace, "p_shield").mean()
    r_base = p_base - constants.p_leak
    weights = step_weights(trace.scenario)
    eta_refresh = float(series(trace, "eta_closed_form").mean())
    eta_total = float(1.0 - p_shield / p_base)
    eta_weighted = float(np.average(series(trace, "eta_closed_form"), weights=weights))
    reductions = {
        "eta_refresh_only": eta_refresh,
        "eta_leakage_inclusive": eta_total,
        "eta_lifecycle_weighted": eta_weighted,
    }
    lo, hi = HEADLINE_BAND
    return {
        "steps": len(trace.steps),
        "p_base": float(p_base),
        "p_kelle": float(p_kelle),
        "p_shield": float(p_shield),
        "gain_kelle": float(p_base / p_kelle),
        "gain_shield": float(p_base / p_shield),
        "gain_kelle_refresh": float(r_base / (p_kelle - constants.p_leak)) if r_base > 0 else 1.0,
        "gain_shield_refresh": float(r_base / (p_shield - constants.p_leak)) if r_base > 0 else 1.0,
        **reductions,
        "reductions_in_headline_band": sorted(k for k, v in reductions.items() if lo <= v <= hi),
        "final_kv_ratio": float(trace.steps[-1].workspace.kv_ratio),
    }


def scenario_table(
    models: dict[str, ModelConfig],
    scenarios: dict[str, Scenario],
    constants: ArrayConstants,
    intervals: RefreshIntervals = RefreshIntervals(),
    scope: WorkspaceScope = WorkspaceScope(),
) -> list[dict]:
    """One row of aggregate gains per (model, scenario)."""
    if not models or not scenarios:
        raise ValueError("need at least one model and one scenario")
    rows = []
    for mkey, m in models.items():
        for skey, s in scenarios.items():
            agg = run_trace(m, s, constants, intervals, scope).aggregate
            rows.append(
                {
                    "model": mkey,
                    "scenario": skey,
                    "prefill_tokens": s.prefill_tokens,
                    "decode_tokens": s.decode_tokens,
                    "gain_kelle": agg["gain_kelle"],
                    "gain_shield": agg["gain_shield"],
                    "gain_kelle_refresh": agg["gain_kelle_refresh"],
                    "gain_shield_refresh": agg["gain_shield_refresh"],
                    "eta_refresh_only": agg["eta_refresh_only"],
                    "final_kv_ratio": agg["final_kv_ratio"],
                }
            )
    return rows


def scenario_to_dict(s: Scenario) -> dict:
    return asdict(s)
