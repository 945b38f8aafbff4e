"""Derivative of throughput with respect to clock frequency.

Two estimators are provided: an exact sample-path (IPA) derivative obtained by
propagating ``d/dtau`` through the timing recursions, and the cheap ratio
``y / u`` used when the exact computation is too expensive for real time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .des import TimingResult, Trace, compute_timing
from .errors import DomainError


class Method(str, Enum):
    EXACT_IPA = "ipa"
    RATIO_APPROX = "ratio"
    ANALYTIC = "analytic"


@dataclass(frozen=True)
class DerivativeEstimate:
    value: float
    method: Method
    zeta: float = 0.0  # known error of the estimate relative to the exact sample derivative


def ipa_from_timing(timing: TimingResult) -> float:
    """dy/du for y(u) = N / d_N(1/u), given an existing timing pass.

    With ``D = d_N`` and ``D' = dd_N/dtau``: dy/dtau = -N D'/D**2 and
    dtau/du = -tau**2, so dy/du = N D' tau**2 / D**2.
    """
    n = timing.n
    tau = timing.tau
    d_n = float(timing.d[-1])
    return n * int(timing.dd[-1]) * tau * tau / (d_n * d_n)


def ipa_derivative(trace: Trace, tau: float) -> DerivativeEstimate:
    return DerivativeEstimate(ipa_from_timing(compute_timing(trace, tau)), Method.EXACT_IPA)


def ratio_approx(y: float, u: float) -> DerivativeEstimate:
    if not u > 0:
        raise DomainError(f"frequency must be positive, got {u!r}")
    return DerivativeEstimate(y / u, Method.RATIO_APPROX)


@dataclass(frozen=True)
class FDResult:
    value: float
    h: float
    switched: bool  # an event-order change was detected at every step size tried


def throughput_fd(trace: Trace, u: float, rel_step: float = 1e-5,
                  retries: int = 2) -> FDResult:
    """Central difference of throughput in frequency.

    The step starts at ``u * rel_step`` and shrinks tenfold whenever the
    branch fingerprint differs between the three evaluations.
    """
    if not u > 0:
        raise DomainError(f"frequency must be positive, got {u!r}")
    h = u * rel_step
    for _ in range(retries + 1):
        mid = compute_timing(trace, 1.0 / u)
        lo = compute_timing(trace, 1.0 / (u - h))
        hi = compute_timing(trace, 1.0 / (u + h))
        value = (hi.throughput - lo.throughput) / (2 * h)
        fp = mid.fingerprint()
        if lo.fingerprint() == fp == hi.fingerprint():
            return FDResult(value, h, False)
        h /= 10
    return FDResult(value, h * 10, True)


def approximation_gap(trace: Trace, u: float) -> float:
    """|y/u - dy/du| at frequency u (zero for traces without misses)."""
    timing = compute_timing(trace, 1.0 / u)
    return math.fabs(timing.throughput / u - ipa_from_timing(timing))
