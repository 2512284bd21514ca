"""Per-bit error rate of a 3T-eDRAM cell as a function of time since refresh.

Cell retention times are taken to be lognormal, so the fraction of failed
bits after ``t`` microseconds without refresh is

    BER(t) = Phi((ln t - mu) / sigma)

Two (time, BER) anchors pin ``mu`` and ``sigma`` in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

# default anchors: KV relaxed interval and the QO-lifetime bound
T_REL_US = 1216.0
BER_AT_T_REL = 1e-4
QO_LIFETIME_US = 1500.0
BER_AT_QO_LIFETIME = 4e-4


@dataclass(frozen=True)
class AnchorPoint:
    t: float  # microseconds
    ber: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"anchor time must be positive, got {self.t}")
        if not 0 < self.ber < 1:
            raise ValueError(f"anchor BER must lie in (0, 1), got {self.ber}")


DEFAULT_ANCHORS = (AnchorPoint(T_REL_US, BER_AT_T_REL), AnchorPoint(QO_LIFETIME_US, BER_AT_QO_LIFETIME))


@dataclass(frozen=True)
class RetentionCurve:
    mu: float  # ln(microseconds)
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0 or not math.isfinite(self.mu):
            raise ValueError(f"invalid curve parameters mu={self.mu}, sigma={self.sigma}")

    def ber_at(self, t: float) -> float:
        return ber_at(self, t)

    def interval_for_ber(self, target: float) -> float:
        return interval_for_ber(self, target)


def calibrate(anchors=DEFAULT_ANCHORS) -> RetentionCurve:
    """Fit the lognormal curve through two anchors exactly."""
    a, b = sorted(anchors, key=lambda p: p.t)
    if a.t == b.t:
        raise ValueError("anchors must have distinct times")
    if not b.ber > a.ber:
        raise ValueError("anchor BER must increase strictly with time")
    za, zb = ndtri(a.ber), ndtri(b.ber)
    sigma = (math.log(b.t) - math.log(a.t)) / (zb - za)
    mu = math.log(a.t) - sigma * za
    return RetentionCurve(mu=mu, sigma=sigma)


def ber_at(curve: RetentionCurve, t: float) -> float:
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    if t == 0:
        return 0.0
    if math.isinf(t):
        return 1.0
    return float(ndtr((math.log(t) - curve.mu) / curve.sigma))


def interval_for_ber(curve: RetentionCurve, target: float) -> float:
    """Refresh interval (microseconds) at which the BER reaches ``target``.

    Solved numerically in log-time; the closed-form quantile is kept out of
    this path so the two can check each other.
    """
    if not 0 < target < 1:
        raise ValueError(f"target BER must lie in (0, 1), got {target}")

    def f(log_t):
        return ndtr((log_t - curve.mu) / curve.sigma) - target

    lo, hi = curve.mu - 40 * curve.sigma, curve.mu + 40 * curve.sigma
    log_t = brentq(f, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    return math.exp(log_t)
