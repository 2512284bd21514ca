"""Leakage + refresh power of an eDRAM activation workspace under three policies.

* baseline: every bit refreshed at the standard interval,
* kelle: KV words (all 16 bits) refreshed at one relaxed interval, QO at standard,
* shield: sign/exponent (9 of 16 bits) at standard, KV mantissas (7 bits) at the
  relaxed interval, QO mantissas never refreshed.

Refresh power is ``E_ref_cycle / T`` scaled by the refreshed fraction of the
occupied array. Units: watts, joules, bytes; intervals in microseconds.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

T_STD_US = 45.0
T_REL_US = 1216.0
KELLE_BER = 2e-3

SIGN_EXP_FRACTION = 9 / 16
MANTISSA_FRACTION = 7 / 16

WORKSPACE_2MB = 2 * 1024 * 1024
SRAM_LEAK_2MB_W = 452.25e-3
EDRAM_LEAK_2MB_W = 0.95e-3

HEADLINE_GAIN = 1.35
CALIBRATION_KV_RATIO = 0.5

_US = 1e-6


class Technology(str, Enum):
    SRAM = "SRAM"
    EDRAM = "eDRAM"


_PUBLISHED_LEAKAGE = {
    (WORKSPACE_2MB, Technology.SRAM): SRAM_LEAK_2MB_W,
    (WORKSPACE_2MB, Technology.EDRAM): EDRAM_LEAK_2MB_W,
}


@dataclass(frozen=True)
class ArrayConstants:
    p_leak: float  # W
    e_ref_cycle: float  # J per full-array refresh
    capacity: int = WORKSPACE_2MB  # bytes

    def __post_init__(self):
        if self.p_leak < 0 or self.e_ref_cycle < 0:
            raise ValueError("leakage power and refresh energy must be non-negative")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")

    @property
    def refresh_power_std(self) -> float:
        return self.e_ref_cycle / (T_STD_US * _US)


class Regime(str, Enum):
    STANDARD = "standard"
    RELAXED = "relaxed"
    REFRESH_LESS = "refresh_less"


@dataclass(frozen=True)
class BankPolicy:
    regime: Regime
    interval_us: float | None = None

    def __post_init__(self):
        if self.regime is Regime.REFRESH_LESS:
            if self.interval_us is not None:
                raise ValueError("refresh-less banks take no interval")
        elif self.interval_us is None or not self.interval_us > 0:
            raise ValueError(f"{self.regime.value} banks need a positive interval")

    def refresh_rate(self) -> float:
        """Refreshes per second."""
        if self.regime is Regime.REFRESH_LESS:
            return 0.0
        return 1.0 / (self.interval_us * _US)


@dataclass(frozen=True)
class WorkspaceState:
    b_kv: float
    b_qo: float

    def __post_init__(self):
        if self.b_kv < 0 or self.b_qo < 0:
            raise ValueError("footprints must be non-negative")

    @property
    def b_total(self) -> float:
        return self.b_kv + self.b_qo

    @property
    def kv_ratio(self) -> float:
        if self.b_total == 0:
            raise ValueError("empty workspace (b_total == 0)")
        return self.b_kv / self.b_total

    @classmethod
    def from_ratio(cls, kv_ratio: float, b_total: float = 1.0) -> "WorkspaceState":
        if not 0 <= kv_ratio <= 1:
            raise ValueError(f"kv_ratio must lie in [0, 1], got {kv_ratio}")
        b_kv = kv_ratio * b_total
        return cls(b_kv=b_kv, b_qo=b_total - b_kv)


@dataclass(frozen=True)
class EnergyReport:
    p_base: float
    p_kelle: float
    p_shield: float
    eta_closed_form: float  # leakage-free closed form
    eta_total: float  # 1 - p_shield / p_base, leakage included
    gain_kelle: float
    gain_shield: float
    gain_kelle_refresh: float  # refresh power only
    gain_shield_refresh: float

    @property
    def eta(self) -> float:
        return self.eta_total


def _check_interval(name: str, t: float) -> None:
    if not t > 0:
        raise ValueError(f"{name} must be positive, got {t}")


def _refresh(e_ref_cycle: float, t_us: float) -> float:
    return e_ref_cycle / (t_us * _US)


def baseline_power(c: ArrayConstants, t_std: float = T_STD_US) -> float:
    _check_interval("t_std", t_std)
    return c.p_leak + _refresh(c.e_ref_cycle, t_std)


# (lifecycle, field) -> policy; lifecycle in {"kv", "qo"}, field in {"sign_exp", "mantissa"}
PolicyTable = dict[tuple[str, str], BankPolicy]


def _field_fraction(field: str) -> float:
    return SIGN_EXP_FRACTION if field == "sign_exp" else MANTISSA_FRACTION


def baseline_policies(t_std: float = T_STD_US) -> PolicyTable:
    std = BankPolicy(Regime.STANDARD, t_std)
    return {(lc, f): std for lc in ("kv", "qo") for f in ("sign_exp", "mantissa")}


def kelle_policies(t_std: float = T_STD_US, t_kelle: float = T_REL_US) -> PolicyTable:
    std, rel = BankPolicy(Regime.STANDARD, t_std), BankPolicy(Regime.RELAXED, t_kelle)
    return {
        ("kv", "sign_exp"): rel,
        ("kv", "mantissa"): rel,
        ("qo", "sign_exp"): std,
        ("qo", "mantissa"): std,
    }


def shield_policies(t_std: float = T_STD_US, t_rel: float = T_REL_US) -> PolicyTable:
    std = BankPolicy(Regime.STANDARD, t_std)
    return {
        ("kv", "sign_exp"): std,
        ("qo", "sign_exp"): std,
        ("kv", "mantissa"): BankPolicy(Regime.RELAXED, t_rel),
        ("qo", "mantissa"): BankPolicy(Regime.REFRESH_LESS),
    }


def refresh_power(c: ArrayConstants, w: WorkspaceState, policies: PolicyTable) -> float:
    """Refresh power of the occupied workspace under a per-bank policy table.

    Each bank contributes ``E_ref_cycle * rate * (bits / 16) * occupancy``.
    """
    kv = w.kv_ratio
    occupancy = {"kv": kv, "qo": 1.0 - kv}
    total = 0.0
    for (lifecycle, field), policy in policies.items():
        total += c.e_ref_cycle * policy.refresh_rate() * _field_fraction(field) * occupancy[lifecycle]
    return total


def shield_refresh_power(c: ArrayConstants, w: WorkspaceState, t_std: float, t_rel: float) -> float:
    _check_interval("t_std", t_std)
    _check_interval("t_rel", t_rel)
    return refresh_power(c, w, shield_policies(t_std, t_rel))


def shield_power(c: ArrayConstants, w: WorkspaceState, t_std: float = T_STD_US, t_rel: float = T_REL_US) -> float:
    return c.p_leak + shield_refresh_power(c, w, t_std, t_rel)


def kelle_refresh_power(c: ArrayConstants, w: WorkspaceState, t_std: float, t_kelle: float) -> float:
    _check_interval("t_std", t_std)
    _check_interval("t_kelle", t_kelle)
    return refresh_power(c, w, kelle_policies(t_std, t_kelle))


def kelle_power(c: ArrayConstants, w: WorkspaceState, t_std: float, t_kelle: float) -> float:
    return c.p_leak + kelle_refresh_power(c, w, t_std, t_kelle)


def shield_bracket(kv_ratio: float, t_std: float = T_STD_US, t_rel: float = T_REL_US) -> float:
    """Refresh power left under the segmented policy, as a fraction of baseline."""
    _check_interval("t_std", t_std)
    _check_interval("t_rel", t_rel)
    return SIGN_EXP_FRACTION + MANTISSA_FRACTION * kv_ratio * (t_std / t_rel)


def eta(w: WorkspaceState, t_std: float = T_STD_US, t_rel: float = T_REL_US) -> float:
    """Leakage-free energy reduction ``1 - P_shield / P_base``."""
    return 1.0 - shield_bracket(w.kv_ratio, t_std, t_rel)


def eta_exact(kv_ratio: Fraction, t_std: Fraction, t_rel: Fraction) -> Fraction:
    """Rational-arithmetic form of :func:`eta` for audits."""
    return 1 - (Fraction(9, 16) + Fraction(7, 16) * Fraction(kv_ratio) * Fraction(t_std) / Fraction(t_rel))


def kelle_crossover(t_std: float = T_STD_US, t_rel: float = T_REL_US, t_kelle: float = T_REL_US) -> float:
    """KV fraction above which the KV-only comparator beats the segmented policy.

    The comparator also relaxes the sign/exponent bits of KV words, so once KV
    dominates the workspace it refreshes less than the segmented banks do.
    """
    a, b = t_std / t_rel, t_std / t_kelle
    denom = 1.0 - b + MANTISSA_FRACTION * a
    return min(1.0, MANTISSA_FRACTION / denom) if denom > 0 else 1.0


def gain(p_base: float, p_policy: float) -> float:
    if not p_policy > 0 or not p_base > 0:
        raise ValueError("powers must be positive to form a gain")
    return p_base / p_policy


def max_gain(p_leak: float, kv_ratio: float, t_std: float = T_STD_US, t_rel: float = T_REL_US) -> float:
    """Supremum of the segmented-policy gain over all refresh energies."""
    return 1.0 / shield_bracket(kv_ratio, t_std, t_rel)


def calibrate_refresh_energy(
    target_gain: float = HEADLINE_GAIN,
    p_leak: float = EDRAM_LEAK_2MB_W,
    t_std: float = T_STD_US,
    t_rel: float = T_REL_US,
    kv_ratio: float = CALIBRATION_KV_RATIO,
) -> float:
    """Refresh energy per cycle (J) that makes ``P_base / P_shield == target_gain``.

    With ``R = E / t_std`` and bracket ``f`` the gain is ``(L + R) / (L + f R)``,
    which is linear in ``R`` once cleared of the denominator.
    """
    if not target_gain > 1:
        raise ValueError(f"target gain must exceed 1, got {target_gain}")
    if not 0 <= kv_ratio <= 1:
        raise ValueError(f"kv_ratio must lie in [0, 1], got {kv_ratio}")
    f = shield_bracket(kv_ratio, t_std, t_rel)
    ceiling = 1.0 / f
    if target_gain >= ceiling:
        raise ValueError(
            f"target gain {target_gain:.4f} is infeasible: the leakage-free ceiling at "
            f"kv_ratio={kv_ratio:g} is {ceiling:.4f}"
        )
    if p_leak <= 0:
        raise ValueError(
            f"with zero leakage the gain is fixed at {ceiling:.4f} for every refresh "
            f"energy; target {target_gain:.4f} cannot be calibrated"
        )
    r = (target_gain - 1.0) * p_leak / (1.0 - target_gain * f)
    return r * t_std * _US


def default_refresh_energy() -> float:
    return calibrate_refresh_energy()


def destiny_constants(
    workspace: int = WORKSPACE_2MB,
    technology: Technology | str = Technology.EDRAM,
    p_leak: float | None = None,
    e_ref_cycle: float | None = None,
) -> ArrayConstants:
    """Array constants from the published DESTINY points, or caller overrides."""
    technology = Technology(technology)
    if p_leak is None:
        try:
            p_leak = _PUBLISHED_LEAKAGE[(workspace, technology)]
        except KeyError:
            raise ValueError(
                f"no published leakage for {technology.value} at {workspace} bytes; pass p_leak"
            ) from None
    if e_ref_cycle is None:
        e_ref_cycle = 0.0 if technology is Technology.SRAM else default_refresh_energy()
    return ArrayConstants(p_leak=p_leak, e_ref_cycle=e_ref_cycle, capacity=workspace)


def evaluate(
    c: ArrayConstants,
    w: WorkspaceState,
    t_std: float = T_STD_US,
    t_rel: float = T_REL_US,
    t_kelle: float = T_REL_US,
) -> EnergyReport:
    p_base = baseline_power(c, t_std)
    r_base = p_base - c.p_leak
    r_kelle = kelle_refresh_power(c, w, t_std, t_kelle)
    r_shield = shield_refresh_power(c, w, t_std, t_rel)
    p_kelle = c.p_leak + r_kelle
    p_shield = c.p_leak + r_shield
    return EnergyReport(
        p_base=p_base,
        p_kelle=p_kelle,
        p_shield=p_shield,
        eta_closed_form=eta(w, t_std, t_rel),
        eta_total=1.0 - p_shield / p_base,
        gain_kelle=gain(p_base, p_kelle),
        gain_shield=gain(p_base, p_shield),
        gain_kelle_refresh=gain(r_base, r_kelle) if r_base > 0 else 1.0,
        gain_shield_refresh=gain(r_base, r_shield) if r_base > 0 else 1.0,
    )
