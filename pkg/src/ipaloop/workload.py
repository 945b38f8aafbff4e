"""Synthetic instruction traces with computational and memory phases.

Profiles are artifact choices meant to reproduce qualitative contrasts
(memory-light vs. memory-heavy programs), not measured benchmark numbers.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .des import Trace, TraceColumns
from .errors import DomainError

NS = 1e-9


@dataclass(frozen=True)
class Discrete:
    """Finite-support distribution over ``values`` with optional ``weights``."""

    values: tuple
    weights: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise DomainError("distribution needs at least one value")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != len(self.values) or min(w) < 0 or sum(w) <= 0:
                raise DomainError("weights must be nonnegative, nonzero and match values")
            object.__setattr__(self, "weights", w)

    @classmethod
    def fixed(cls, value):
        return cls((value,))

    @classmethod
    def uniform(cls, lo: int, hi: int):
        return cls(tuple(range(lo, hi + 1)))

    @property
    def min(self):
        return min(v for v, w in zip(self.values, self._probs()) if w > 0)

    def _probs(self):
        if self.weights is None:
            return [1.0 / len(self.values)] * len(self.values)
        total = sum(self.weights)
        return [w / total for w in self.weights]

    def mean(self) -> float:
        return float(sum(v * p for v, p in zip(self.values, self._probs())))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        vals = np.asarray(self.values)
        if len(vals) == 1:
            return np.full(size, vals[0])
        idx = rng.choice(len(vals), size=size, p=self._probs())
        return vals[idx]


@dataclass(frozen=True)
class Phase:
    duration: int  # instructions
    overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class WorkloadProfile:
    miss_rate: float = 0.01
    hit_rate: float = 0.2
    dep_prob: float = 1.0
    dep_window: int = 2
    dep_distance_weights: tuple | None = None  # over distances 1..dep_window; None = uniform
    exec_cycles_dist: Discrete = Discrete((1, 2), (0.75, 0.25))
    cache_cycles_dist: Discrete = Discrete((2, 3))
    transfer_cycles: int = 2
    dram_service_dist: Discrete = Discrete.fixed(60 * NS)
    interarrival_cycles_dist: Discrete = Discrete((0, 1), (0.5, 0.5))
    phases: tuple = ()
    memory_queue_capacity: int = 16
    seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(
            p if isinstance(p, Phase) else Phase(*p) for p in self.phases))
        self.check()
        for ph in self.phases:
            if ph.duration < 1:
                raise DomainError("phase durations must be positive")
            self.apply(ph.overrides).check()

    def check(self) -> None:
        for name in ("miss_rate", "hit_rate", "dep_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")
        if self.miss_rate + self.hit_rate > 1.0:
            raise DomainError("miss_rate + hit_rate must not exceed 1")
        if self.dep_window < 1:
            raise DomainError("dep_window must be >= 1")
        if self.dep_distance_weights is not None:
            Discrete(tuple(range(1, self.dep_window + 1)), self.dep_distance_weights)
        if self.exec_cycles_dist.min < 1 or self.cache_cycles_dist.min < 1:
            raise DomainError("execution and cache cycle counts must be >= 1")
        if self.transfer_cycles < 0 or self.interarrival_cycles_dist.min < 0:
            raise DomainError("cycle counts must be nonnegative")
        if self.dram_service_dist.min < 0:
            raise DomainError("DRAM service times must be nonnegative")
        if self.memory_queue_capacity < 1:
            raise DomainError("memory_queue_capacity must be >= 1")

    def apply(self, overrides: dict) -> "WorkloadProfile":
        if not overrides:
            return self
        return dataclasses.replace(self, phases=(), **overrides)

    def with_seed(self, seed: int) -> "WorkloadProfile":
        return dataclasses.replace(self, seed=seed)


# Serial chains that mostly hop to the immediately preceding instruction, so
# DRAM stalls sit on the critical path and throughput bends well below linear.
CHAINED = dict(
    hit_rate=0.1, dep_prob=1.0, dep_window=2, dep_distance_weights=(0.7, 0.3),
    exec_cycles_dist=Discrete.fixed(1), cache_cycles_dist=Discrete.fixed(2),
)
COMPUTE_MODE = dict(miss_rate=0.01)
MEMORY_MODE = dict(miss_rate=0.15)

PROFILES = {
    # Every cycle identical: no misses, fixed counts, no dependencies.
    "linear": WorkloadProfile(
        miss_rate=0.0, hit_rate=0.0, dep_prob=0.0,
        exec_cycles_dist=Discrete.fixed(1),
        interarrival_cycles_dist=Discrete.fixed(1), name="linear"),
    "compute": WorkloadProfile(miss_rate=0.0, **CHAINED, name="compute"),
    "barnes": WorkloadProfile(miss_rate=0.01, **CHAINED, name="barnes"),
    "water-ns": WorkloadProfile(
        **COMPUTE_MODE, **CHAINED,
        phases=(
            Phase(3_000_000, {}), Phase(1_000_000, MEMORY_MODE),
        ) * 3,
        name="water-ns"),
    "memory": WorkloadProfile(**MEMORY_MODE, **CHAINED, name="memory"),
}


def get_profile(name: str, seed: int | None = None) -> WorkloadProfile:
    try:
        prof = PROFILES[name]
    except KeyError:
        raise DomainError(f"unknown workload profile {name!r}; "
                          f"choose from {sorted(PROFILES)}") from None
    return prof if seed is None else prof.with_seed(seed)


class WorkloadStream:
    """Stateful generator yielding consecutive trace segments.

    Phases play in order and then the schedule repeats.  Each segment is
    rebased so that its first instruction arrives at counter 0; dependencies
    never reach outside the segment.
    """

    def __init__(self, profile: WorkloadProfile):
        self.profile = profile
        self.rng = np.random.default_rng(profile.seed)
        self.position = 0  # instructions emitted so far

    def _phase_at(self, pos: int) -> tuple[WorkloadProfile, int]:
        """Effective profile at stream position ``pos`` and instructions left in it."""
        phases = self.profile.phases
        if not phases:
            return self.profile, np.iinfo(np.int64).max
        period = sum(p.duration for p in phases)
        off = pos % period
        for ph in phases:
            if off < ph.duration:
                return self.profile.apply(ph.overrides), ph.duration - off
            off -= ph.duration
        raise AssertionError("unreachable")

    def phase_index(self, pos: int) -> int:
        phases = self.profile.phases
        if not phases:
            return 0
        off = pos % sum(p.duration for p in phases)
        for k, ph in enumerate(phases):
            if off < ph.duration:
                return k
            off -= ph.duration
        raise AssertionError("unreachable")

    def next_segment(self, n: int) -> Trace:
        if n < 1:
            raise DomainError(f"segment length must be positive, got {n}")
        rng = self.rng
        cols = []
        done = 0
        while done < n:
            prof, left = self._phase_at(self.position + done)
            m = int(min(left, n - done))
            cols.append(_sample_block(prof, m, rng))
            done += m
        self.position += n
        kinds, mu, nu, xfer, svc, gaps, dep_on, dep_back = (
            np.concatenate(c) for c in zip(*cols))
        return _build_trace(kinds, mu, nu, xfer, svc, gaps, dep_on, dep_back,
                            self.profile.memory_queue_capacity)


_COMP, _HIT, _MISS = 0, 1, 2


def _sample_block(p: WorkloadProfile, m: int, rng: np.random.Generator):
    draw = rng.random(m)
    kinds = np.where(draw < p.miss_rate, _MISS,
                     np.where(draw < p.miss_rate + p.hit_rate, _HIT, _COMP))
    mu = p.exec_cycles_dist.sample(rng, m)
    nu = p.cache_cycles_dist.sample(rng, m)
    xfer = np.full(m, p.transfer_cycles)
    svc = p.dram_service_dist.sample(rng, m)
    gaps = p.interarrival_cycles_dist.sample(rng, m)
    dep_on = rng.random(m) < p.dep_prob
    if p.dep_distance_weights is None:
        dep_back = rng.integers(1, p.dep_window + 1, size=m)
    else:
        dep_back = Discrete(tuple(range(1, p.dep_window + 1)),
                            p.dep_distance_weights).sample(rng, m)
    return kinds, mu, nu, xfer, svc, gaps, dep_on, dep_back


def _build_trace(kinds, mu, nu, xfer, svc, gaps, dep_on, dep_back, capacity) -> Trace:
    n = len(kinds)
    xi = np.cumsum(gaps).astype(np.int64)
    xi -= xi[0]
    pos = np.arange(1, n + 1)
    dep = np.where(dep_on & (pos - dep_back >= 1), pos - dep_back, 0).astype(np.int64)
    is_mem = kinds != _COMP
    miss = kinds == _MISS
    cols = TraceColumns(
        is_memory=is_mem,
        xi=xi,
        cycles=np.where(is_mem, nu, mu).astype(np.int64),
        transfer=np.where(is_mem, xfer, 0).astype(np.int64),
        hit=~miss,
        service=np.where(miss, svc, 0.0).astype(np.float64),
        dep=dep,
    )
    return Trace.from_columns(cols, capacity, validate=False)


def generate(profile: WorkloadProfile, n_instructions: int) -> Trace:
    """A reproducible trace of ``n_instructions`` drawn from ``profile``."""
    if n_instructions < 1:
        raise DomainError(f"n_instructions must be positive, got {n_instructions}")
    return WorkloadStream(profile).next_segment(n_instructions)
