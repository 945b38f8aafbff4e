"""Plants driven one control cycle at a time.

Every plant exposes ``run_cycle(u, cycle_length=None) -> PlantResponse``:

* ``OOOPlant``: a fresh trace segment per cycle, timed at ``tau = 1/u``.
* ``MD1Plant``: an M/D/1 queue with service time ``u``; output is the mean
  sojourn time of the customers arriving during the cycle.
* ``AnalyticPlant``: ``J(u) + psi`` with derivative ``J'(u) + phi``, where the
  injected errors obey the bounds of a ``NoiseSpec``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .des import Trace, TraceColumns, compute_timing
from .errors import DomainError, UndefinedDerivativeError
from .ipa import DerivativeEstimate, Method, ipa_from_timing
from .workload import WorkloadStream


@dataclass(frozen=True)
class PlantResponse:
    y: float
    derivative: DerivativeEstimate
    cycle_index: int
    duration: float = math.nan  # seconds of simulated time covered by the cycle
    empty: bool = False  # no samples: y is a placeholder and the gain must not change


def run_cycle(plant, u_n: float, cycle_length=None) -> PlantResponse:
    return plant.run_cycle(u_n, cycle_length)


# --- analytic plants --------------------------------------------------------


class PhiMode(str, Enum):
    ADDITIVE = "additive"
    RELATIVE = "relative"  # |phi| <= bound * |J'(u)|


@dataclass(frozen=True)
class NoiseSpec:
    psi_bound: float = 0.0
    phi_mode: PhiMode = PhiMode.ADDITIVE
    phi_bound: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.psi_bound < 0 or self.phi_bound < 0:
            raise DomainError("noise bounds must be nonnegative")
        object.__setattr__(self, "phi_mode", PhiMode(self.phi_mode))


@dataclass(frozen=True)
class AnalyticFunction:
    name: str
    J: Callable[[float], float]
    dJ: Callable[[float], float]
    shape: str
    domain: tuple[float, float] = (0.0, math.inf)


ANALYTIC_FAMILY = {
    f.name: f for f in (
        AnalyticFunction("square", lambda u: u * u, lambda u: 2 * u, "convex increasing"),
        AnalyticFunction("cube", lambda u: u ** 3, lambda u: 3 * u * u, "convex increasing"),
        AnalyticFunction("sqrt", math.sqrt, lambda u: 0.5 / math.sqrt(u), "concave increasing"),
        AnalyticFunction("log", math.log, lambda u: 1.0 / u, "concave increasing"),
        AnalyticFunction("saturating", lambda u: u / (1.0 + u),
                         lambda u: 1.0 / (1.0 + u) ** 2, "concave increasing"),
        AnalyticFunction("exp-decay", lambda u: math.exp(-u), lambda u: -math.exp(-u),
                         "convex decreasing"),
        AnalyticFunction("inverse", lambda u: 1.0 / u, lambda u: -1.0 / (u * u),
                         "convex decreasing"),
        AnalyticFunction("cap", lambda u: 10.0 - u * u, lambda u: -2.0 * u,
                         "concave decreasing"),
    )
}


class AnalyticPlant:
    def __init__(self, J, dJ=None, noise: NoiseSpec = NoiseSpec(),
                 domain: tuple[float, float] | None = None, cycle_duration: float = 1e-4):
        if isinstance(J, str):
            try:
                fn = ANALYTIC_FAMILY[J]
            except KeyError:
                raise DomainError(f"unknown analytic function {J!r}; "
                                  f"choose from {sorted(ANALYTIC_FAMILY)}") from None
            J, dJ, domain = fn.J, fn.dJ, domain or fn.domain
        if dJ is None:
            raise DomainError("an analytic plant needs its derivative")
        self.J, self.dJ = J, dJ
        self.noise = noise
        self.domain = domain or (-math.inf, math.inf)
        self.cycle_duration = cycle_duration
        self.rng = np.random.default_rng(noise.seed)
        self.n = 0
        self.last_psi = 0.0
        self.last_phi = 0.0

    def run_cycle(self, u: float, cycle_length=None) -> PlantResponse:
        lo, hi = self.domain
        if not (math.isfinite(u) and lo < u < hi):
            raise DomainError(f"input {u!r} outside the plant domain ({lo}, {hi})")
        nz = self.noise
        slope = self.dJ(u)
        # Both draws happen every cycle so the stream does not depend on the bounds.
        psi = nz.psi_bound * self.rng.uniform(-1.0, 1.0)
        phi_bound = nz.phi_bound * (abs(slope) if nz.phi_mode is PhiMode.RELATIVE else 1.0)
        phi = phi_bound * self.rng.uniform(-1.0, 1.0)
        self.last_psi, self.last_phi = psi, phi
        resp = PlantResponse(
            y=self.J(u) + psi,
            derivative=DerivativeEstimate(slope + phi, Method.ANALYTIC, zeta=phi),
            cycle_index=self.n,
            duration=cycle_length or self.cycle_duration,
        )
        self.n += 1
        return resp


# --- M/D/1 queue -------------------------------------------------------------


def md1_sample_path(arrivals, service: float) -> tuple[np.ndarray, np.ndarray]:
    """Sojourn times and busy-period ranks for FIFO deterministic service.

    A customer arriving exactly when the previous one departs starts a new
    busy period.
    """
    n = len(arrivals)
    sojourn = np.empty(n)
    ranks = np.empty(n, dtype=np.int64)
    depart = -math.inf
    rank = 0
    for k, a in enumerate(np.asarray(arrivals, dtype=float).tolist()):
        if a >= depart:
            start, rank = a, 1
        else:
            start, rank = depart, rank + 1
        depart = start + service
        sojourn[k] = depart - a
        ranks[k] = rank
    return sojourn, ranks


def md1_ipa_sojourn_derivative(busy_period_positions) -> float:
    """Mean of d(sojourn)/d(service time) over customers.

    Under deterministic service a customer with rank r in its busy period
    departs r service times after the period began, so its derivative is r.
    """
    pos = np.asarray(busy_period_positions)
    if pos.size == 0:
        raise UndefinedDerivativeError("no customers in the cycle")
    if np.any(pos < 1):
        raise DomainError("busy-period positions are 1-based")
    return float(pos.mean())


class MD1Plant:
    def __init__(self, arrival_rate: float, cycle_duration: float = 1.0, seed: int = 0):
        if arrival_rate < 0 or not cycle_duration > 0:
            raise DomainError("arrival rate must be >= 0 and cycle duration > 0")
        self.arrival_rate = arrival_rate
        self.cycle_duration = cycle_duration
        self.rng = np.random.default_rng(seed)
        self.n = 0
        self.last_derivative = DerivativeEstimate(math.nan, Method.EXACT_IPA)

    def arrivals(self, duration: float) -> np.ndarray:
        count = self.rng.poisson(self.arrival_rate * duration)
        return np.sort(self.rng.uniform(0.0, duration, size=count))

    def run_cycle(self, u: float, cycle_length=None) -> PlantResponse:
        if not (math.isfinite(u) and u > 0):
            raise DomainError(f"service time must be positive, got {u!r}")
        duration = cycle_length or self.cycle_duration
        arr = self.arrivals(duration)
        idx = self.n
        self.n += 1
        if arr.size == 0:
            return PlantResponse(0.0, self.last_derivative, idx, duration, empty=True)
        sojourn, ranks = md1_sample_path(arr, u)
        est = DerivativeEstimate(md1_ipa_sojourn_derivative(ranks), Method.EXACT_IPA)
        self.last_derivative = est
        return PlantResponse(float(sojourn.mean()), est, idx, duration)


# --- out-of-order core -------------------------------------------------------


def trace_window(trace: Trace, start: int, n: int) -> Trace:
    """Instructions ``start+1 .. start+n`` renumbered from 1 and rebased to counter 0.

    Dependencies on instructions before the window are treated as already
    satisfied.
    """
    c = trace.columns
    if start < 0 or start + n > len(c):
        raise DomainError(f"trace has only {len(c)} instructions, need {start + n}")
    sl = slice(start, start + n)
    dep = c.dep[sl] - start
    dep[dep < 1] = 0
    cols = TraceColumns(c.is_memory[sl].copy(), c.xi[sl] - c.xi[start], c.cycles[sl].copy(),
                        c.transfer[sl].copy(), c.hit[sl].copy(), c.service[sl].copy(), dep)
    return Trace.from_columns(cols, trace.memory_queue_capacity, validate=False)


class OOOPlant:
    """Out-of-order core driven by a workload stream or a recorded trace.

    A recorded trace is consumed in consecutive windows; when fewer than a
    full cycle's instructions remain, consumption restarts from the top.
    """

    def __init__(self, source, instructions_per_cycle: int = 100_000,
                 method: Method | str = Method.EXACT_IPA):
        if instructions_per_cycle < 1:
            raise DomainError("instructions_per_cycle must be positive")
        self.source = source
        self.instructions_per_cycle = int(instructions_per_cycle)
        self.method = Method(method)
        if self.method not in (Method.EXACT_IPA, Method.RATIO_APPROX):
            raise DomainError(f"unsupported derivative method {self.method}")
        self.cursor = 0
        self.n = 0
        self.last_timing = None

    def _segment(self, n: int) -> Trace:
        if isinstance(self.source, WorkloadStream):
            return self.source.next_segment(n)
        trace = self.source
        if n > len(trace):
            raise DomainError(f"trace has {len(trace)} instructions, cycle needs {n}")
        if self.cursor + n > len(trace):
            self.cursor = 0
        seg = trace_window(trace, self.cursor, n)
        self.cursor += n
        return seg

    def run_cycle(self, u: float, cycle_length=None) -> PlantResponse:
        if not (math.isfinite(u) and u > 0):
            raise DomainError(f"frequency must be positive, got {u!r}")
        seg = self._segment(int(cycle_length or self.instructions_per_cycle))
        timing = compute_timing(seg, 1.0 / u)
        self.last_timing = timing
        y = timing.throughput
        exact = ipa_from_timing(timing)
        if self.method is Method.EXACT_IPA:
            est = DerivativeEstimate(exact, Method.EXACT_IPA)
        else:
            ratio = y / u
            est = DerivativeEstimate(ratio, Method.RATIO_APPROX, zeta=ratio - exact)
        idx = self.n
        self.n += 1
        return PlantResponse(y, est, idx, timing.makespan)

