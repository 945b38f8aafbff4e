"""Integral controller whose gain is the reciprocal of a plant-derivative estimate.

With an exact derivative and a time-invariant plant the loop is Newton's
method on ``r - J(u) = 0``.  The optional policies are applied in a fixed
order: the gain is scaled first, then the proposal is projected onto the
interval and finally snapped to the nearest grid point.
"""

from __future__ import annotations

import bisect
import dataclasses
import math
from dataclasses import dataclass

from .errors import ConfigError

HASWELL_GHZ = (0.8, 1.0, 1.1, 1.3, 1.5, 1.7, 1.8, 2.0, 2.2, 2.4, 2.5, 2.7,
               2.9, 3.1, 3.2, 3.4)

_TIE_RTOL = 1e-12

HOLD_GAIN_UNDEFINED = "gain-undefined"
HOLD_NON_FINITE = "non-finite-output"
HOLD_EMPTY = "empty-cycle"


@dataclass(frozen=True)
class FrequencyGrid:
    """Admissible actuator values.

    ``points`` are in grid units (GHz by default); ``scale`` converts them to
    actuator units (Hz), so the controller snaps Hz values onto ``points * scale``.
    """

    points: tuple[float, ...] = HASWELL_GHZ
    scale: float = 1e9

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if not pts:
            raise ConfigError("frequency grid must not be empty")
        if any(p <= 0 for p in pts):
            raise ConfigError("frequency grid points must be positive")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ConfigError("frequency grid must be strictly increasing")
        if not self.scale > 0:
            raise ConfigError("grid scale must be positive")
        object.__setattr__(self, "points", pts)

    def restricted(self, interval: tuple[float, float] | None) -> "FrequencyGrid":
        """Grid points lying inside ``interval`` (given in actuator units)."""
        if interval is None:
            return self
        lo, hi = interval
        pts = tuple(p for p in self.points if lo <= p * self.scale <= hi)
        if not pts:
            raise ConfigError(f"no grid point lies inside the interval {interval}")
        return FrequencyGrid(pts, self.scale)

    def snap(self, u: float) -> float:
        """Nearest admissible actuator value to ``u`` (actuator units)."""
        return quantize(u / self.scale, self) * self.scale

    @property
    def lowest(self) -> float:
        return self.points[0] * self.scale

    @property
    def highest(self) -> float:
        return self.points[-1] * self.scale

    def __contains__(self, u: float) -> bool:
        return any(math.isclose(u, p * self.scale, rel_tol=1e-12) for p in self.points)


def quantize(u: float, grid: FrequencyGrid) -> float:
    """Grid point nearest to ``u`` in grid units; the lower point wins a tie."""
    pts = grid.points
    k = bisect.bisect_left(pts, u)
    if k == 0:
        return pts[0]
    if k == len(pts):
        return pts[-1]
    left, right = pts[k - 1], pts[k]
    dl, dr = u - left, right - u
    if dl <= dr + _TIE_RTOL * max(1.0, abs(u)):
        return left
    return right


def project(u: float, interval: tuple[float, float]) -> float:
    lo, hi = interval
    if lo > hi:
        raise ConfigError(f"projection interval is empty: [{lo}, {hi}]")
    return min(max(u, lo), hi)


@dataclass(frozen=True)
class ControllerPolicy:
    interval: tuple[float, float] | None = None
    scale: float = 1.0
    grid: FrequencyGrid | None = None
    derivative_floor: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.scale <= 1.0:
            raise ConfigError(f"gain scale must lie in (0, 1], got {self.scale}")
        if self.interval is not None:
            lo, hi = (float(x) for x in self.interval)
            if lo > hi:
                raise ConfigError(f"projection interval is empty: [{lo}, {hi}]")
            object.__setattr__(self, "interval", (lo, hi))
        if self.grid is not None:
            # Quantization only ever lands on grid points inside the interval.
            object.__setattr__(self, "grid", self.grid.restricted(self.interval))
        if self.derivative_floor < 0:
            raise ConfigError("derivative_floor must be nonnegative")

    def constrain(self, v: float) -> float:
        if self.interval is not None:
            v = project(v, self.interval)
        if self.grid is not None:
            v = self.grid.snap(v)
        return v

    @property
    def lower_limit(self) -> float | None:
        if self.grid is not None:
            return self.grid.lowest
        return self.interval[0] if self.interval is not None else None

    @property
    def upper_limit(self) -> float | None:
        if self.grid is not None:
            return self.grid.highest
        return self.interval[1] if self.interval is not None else None

    def saturation(self, u: float) -> tuple[bool, bool]:
        lo, hi = self.lower_limit, self.upper_limit
        low = lo is not None and (u <= lo or math.isclose(u, lo, rel_tol=1e-12))
        high = hi is not None and (u >= hi or math.isclose(u, hi, rel_tol=1e-12))
        return low, high


@dataclass(frozen=True)
class ControllerState:
    u: float
    policy: ControllerPolicy = ControllerPolicy()
    e_prev: float = math.nan
    A: float = math.nan
    n: int = 0
    flag: str = ""  # reason the most recent step held u, empty if it updated
    raw_u: float = math.nan  # last unconstrained proposal u + scale * A * e


def initial_state(u0: float, policy: ControllerPolicy = ControllerPolicy()) -> ControllerState:
    """State for the bootstrap cycle; ``u0`` is moved onto the admissible set."""
    if not math.isfinite(u0):
        raise ConfigError(f"initial actuator value must be finite, got {u0!r}")
    return ControllerState(u=policy.constrain(u0), policy=policy)


def step(state: ControllerState, response, r: float) -> ControllerState:
    """Consume the measurement of the current cycle and return the state for the next.

    ``response`` needs ``y``, ``derivative.value`` and optionally ``empty``.
    """
    y = response.y
    n = state.n + 1
    if not math.isfinite(y):
        return dataclasses.replace(state, n=n, flag=HOLD_NON_FINITE)
    if getattr(response, "empty", False):
        return dataclasses.replace(state, n=n, flag=HOLD_EMPTY)
    e = r - y
    lam = response.derivative.value
    if not math.isfinite(lam) or abs(lam) <= state.policy.derivative_floor:
        return dataclasses.replace(state, e_prev=e, n=n, flag=HOLD_GAIN_UNDEFINED)
    gain = 1.0 / lam
    pol = state.policy
    raw = state.u + pol.scale * gain * e
    return dataclasses.replace(state, u=pol.constrain(raw), e_prev=e, A=gain, n=n,
                               flag="", raw_u=raw)
