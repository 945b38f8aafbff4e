"""Instruction-flow model of an out-of-order core.

Every event time produced here is an affine function ``c * tau + s`` of the
clock period, where ``c`` is an integer cycle count and ``s`` is a sum of
DRAM sojourn times.  The timing pass carries ``(c, s)`` pairs rather than bare
floats, so the derivative of each event time with respect to ``tau`` is the
integer ``c`` of whichever branch was selected at every ``max``.

Two engines implement the same recursion: a compiled kernel (default) and a
plain-Python loop kept as a readable reference.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._kernel import timing_kernel
from .errors import DomainError, InternalOrderError, MalformedTraceError


class Kind(str, Enum):
    COMPUTATIONAL = "C"
    MEMORY = "M"


# Branch codes recorded per instruction (used as an event-order fingerprint).
START_ARRIVAL = 0
START_DEPENDENCY = 1
START_QUEUE = 2
COMMIT_OWN = 0
COMMIT_PREVIOUS = 1


@dataclass(frozen=True, slots=True)
class Instruction:
    index: int
    kind: Kind
    arrival_counter: int
    exec_cycles: int | None = None
    cache_cycles: int | None = None
    transfer_cycles: int | None = None
    cache_hit: bool | None = None
    dram_service: float | None = None
    dep_index: int | None = None

    @classmethod
    def computational(cls, index, arrival_counter, exec_cycles, dep_index=None):
        return cls(index, Kind.COMPUTATIONAL, arrival_counter,
                   exec_cycles=exec_cycles, dep_index=dep_index)

    @classmethod
    def memory(cls, index, arrival_counter, cache_cycles, transfer_cycles=0,
               cache_hit=True, dram_service=None, dep_index=None):
        return cls(index, Kind.MEMORY, arrival_counter,
                   cache_cycles=cache_cycles, transfer_cycles=transfer_cycles,
                   cache_hit=cache_hit, dram_service=dram_service,
                   dep_index=dep_index)

    @property
    def is_miss(self) -> bool:
        return self.kind is Kind.MEMORY and not self.cache_hit

    def check(self) -> None:
        """Raise MalformedTraceError if the field combination is inconsistent."""
        i = self.index
        if self.arrival_counter < 0:
            raise MalformedTraceError(f"instruction {i}: negative arrival counter")
        if self.dep_index is not None and not 1 <= self.dep_index < i:
            raise MalformedTraceError(
                f"instruction {i}: dep_index {self.dep_index} must lie in [1, {i})")
        if self.kind is Kind.COMPUTATIONAL:
            if self.exec_cycles is None or self.exec_cycles < 1:
                raise MalformedTraceError(f"instruction {i}: exec_cycles must be >= 1")
            if any(v is not None for v in (self.cache_cycles, self.transfer_cycles,
                                           self.cache_hit, self.dram_service)):
                raise MalformedTraceError(
                    f"instruction {i}: computational instruction carries memory fields")
        elif self.kind is Kind.MEMORY:
            if self.exec_cycles is not None:
                raise MalformedTraceError(
                    f"instruction {i}: memory instruction carries exec_cycles")
            if self.cache_cycles is None or self.cache_cycles < 1:
                raise MalformedTraceError(f"instruction {i}: cache_cycles must be >= 1")
            if self.transfer_cycles is None or self.transfer_cycles < 0:
                raise MalformedTraceError(f"instruction {i}: transfer_cycles must be >= 0")
            if self.cache_hit is None:
                raise MalformedTraceError(f"instruction {i}: cache_hit missing")
            if self.cache_hit:
                if self.dram_service is not None:
                    raise MalformedTraceError(
                        f"instruction {i}: cache hit carries dram_service")
            elif (self.dram_service is None or not math.isfinite(self.dram_service)
                  or self.dram_service < 0):
                raise MalformedTraceError(
                    f"instruction {i}: cache miss needs a finite dram_service >= 0")
        else:
            raise MalformedTraceError(f"instruction {i}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class TraceColumns:
    """Column-major view of a trace. ``cycles`` holds exec_cycles for
    computational instructions and cache_cycles for memory ones; ``dep`` is
    1-based with 0 meaning no dependency; ``service`` is 0 except for misses."""

    is_memory: np.ndarray  # bool
    xi: np.ndarray  # int64
    cycles: np.ndarray  # int64
    transfer: np.ndarray  # int64
    hit: np.ndarray  # bool
    service: np.ndarray  # float64
    dep: np.ndarray  # int64

    def __len__(self):
        return len(self.xi)

    @property
    def is_miss(self) -> np.ndarray:
        return self.is_memory & ~self.hit


def _columns_from_instructions(instrs) -> TraceColumns:
    n = len(instrs)
    mem = np.zeros(n, dtype=bool)
    xi = np.zeros(n, dtype=np.int64)
    cyc = np.zeros(n, dtype=np.int64)
    xfer = np.zeros(n, dtype=np.int64)
    hit = np.ones(n, dtype=bool)
    svc = np.zeros(n, dtype=np.float64)
    dep = np.zeros(n, dtype=np.int64)
    for k, ins in enumerate(instrs):
        xi[k] = ins.arrival_counter
        dep[k] = ins.dep_index or 0
        if ins.kind is Kind.MEMORY:
            mem[k] = True
            cyc[k] = ins.cache_cycles
            xfer[k] = ins.transfer_cycles
            if not ins.cache_hit:
                hit[k] = False
                svc[k] = ins.dram_service
        else:
            cyc[k] = ins.exec_cycles
    return TraceColumns(mem, xi, cyc, xfer, hit, svc, dep)


def _instructions_from_columns(c: TraceColumns) -> tuple:
    out = []
    comp, memk = Kind.COMPUTATIONAL, Kind.MEMORY
    rows = zip(range(1, len(c) + 1), c.is_memory.tolist(), c.xi.tolist(),
               c.cycles.tolist(), c.transfer.tolist(), c.hit.tolist(),
               c.service.tolist(), c.dep.tolist())
    for i, m, x, cy, t, h, s, d in rows:
        d = d or None
        if not m:
            out.append(Instruction(i, comp, x, cy, None, None, None, None, d))
        elif h:
            out.append(Instruction(i, memk, x, None, cy, t, True, None, d))
        else:
            out.append(Instruction(i, memk, x, None, cy, t, False, s, d))
    return tuple(out)


def _check_columns(c: TraceColumns) -> None:
    n = len(c)
    pos = np.arange(1, n + 1)
    if np.any(c.xi < 0):
        raise MalformedTraceError("negative arrival counter")
    if n and np.any(np.diff(c.xi) < 0):
        raise MalformedTraceError("arrival counters must be nondecreasing")
    bad = (c.dep < 0) | (c.dep >= pos)
    if np.any(bad):
        i = int(pos[bad][0])
        raise MalformedTraceError(f"instruction {i}: dependency must precede it")
    if np.any(c.cycles < 1):
        raise MalformedTraceError("execution and cache cycle counts must be >= 1")
    if np.any(c.transfer < 0):
        raise MalformedTraceError("transfer cycles must be >= 0")
    miss = c.is_miss
    if np.any(~np.isfinite(c.service[miss])) or np.any(c.service[miss] < 0):
        raise MalformedTraceError("cache misses need a finite dram_service >= 0")


class Trace:
    """Ordered instructions plus the memory-queue capacity.

    Either representation (instruction objects or columns) may be supplied;
    the other is derived on first use.
    """

    def __init__(self, instructions, memory_queue_capacity: int, validate: bool = True):
        self._instructions = tuple(instructions)
        self._columns = None
        self.memory_queue_capacity = int(memory_queue_capacity)
        if self.memory_queue_capacity < 1:
            raise MalformedTraceError("memory_queue_capacity must be >= 1")
        if validate:
            prev_xi = 0
            for pos, ins in enumerate(self._instructions, start=1):
                if ins.index != pos:
                    raise MalformedTraceError(
                        f"instruction indices must be 1..N contiguous (got {ins.index} at {pos})")
                ins.check()
                if ins.arrival_counter < prev_xi:
                    raise MalformedTraceError(
                        f"instruction {pos}: arrival counters must be nondecreasing")
                prev_xi = ins.arrival_counter

    @classmethod
    def from_columns(cls, columns: TraceColumns, memory_queue_capacity: int,
                     validate: bool = True) -> "Trace":
        if validate:
            _check_columns(columns)
        tr = cls((), memory_queue_capacity, validate=False)
        tr._instructions = None
        tr._columns = columns
        return tr

    @property
    def instructions(self) -> tuple:
        if self._instructions is None:
            self._instructions = _instructions_from_columns(self._columns)
        return self._instructions

    @property
    def columns(self) -> TraceColumns:
        if self._columns is None:
            self._columns = _columns_from_instructions(self._instructions)
        return self._columns

    def __len__(self):
        if self._columns is not None:
            return len(self._columns)
        return len(self._instructions)

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        if self.memory_queue_capacity != other.memory_queue_capacity or len(self) != len(other):
            return False
        a, b = self.columns, other.columns
        return all(np.array_equal(getattr(a, f), getattr(b, f))
                   for f in TraceColumns.__dataclass_fields__)

    def __repr__(self):
        return f"Trace(n={len(self)}, memory_queue_capacity={self.memory_queue_capacity})"

    @property
    def n_misses(self) -> int:
        return int(np.count_nonzero(self.columns.is_miss))


@dataclass(frozen=True)
class TimingResult:
    tau: float
    a: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    d: np.ndarray
    da: np.ndarray
    dalpha: np.ndarray
    dbeta: np.ndarray
    dd: np.ndarray
    queue_entry: np.ndarray  # NaN for instructions that never enter the memory queue
    start_branch: np.ndarray
    commit_branch: np.ndarray
    queue_head: np.ndarray  # 0-based head index, -1 unless the queue was full on arrival

    @property
    def n(self) -> int:
        return len(self.d)

    @property
    def makespan(self) -> float:
        return float(self.d[-1])

    @property
    def throughput(self) -> float:
        return self.n / float(self.d[-1])

    def fingerprint(self) -> tuple:
        """Identifies the selected branch of every max; equal fingerprints mean
        the same affine expressions were used for every event time."""
        return (self.start_branch.tobytes(), self.commit_branch.tobytes(),
                self.queue_head.tobytes())


class MemoryQueue:
    """FIFO occupancy bookkeeping for misses, advanced monotonically in time.

    A miss is resident on ``[entry, beta)``.  Queries must be made at
    nondecreasing times no later than the resolved horizon, i.e. after every
    instruction that could have entered by then has been added.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._pending: list[tuple[float, int, float]] = []
        self._resident: list[tuple[float, int]] = []
        self._expiry: list[tuple[float, int]] = []
        self._left: set[int] = set()
        self._count = 0
        self._now = -math.inf
        self._horizon = -math.inf

    def resolve_through(self, t: float) -> None:
        if t > self._horizon:
            self._horizon = t

    def add(self, entry: float, beta: float, index: int) -> None:
        heapq.heappush(self._pending, (entry, index, beta))

    def _advance(self, t: float) -> None:
        if t > self._horizon:
            raise InternalOrderError(
                f"memory queue queried at {t!r} beyond resolved horizon {self._horizon!r}")
        if t < self._now:
            raise InternalOrderError(
                f"memory queue queried at {t!r} after advancing to {self._now!r}")
        self._now = t
        pending, resident, expiry = self._pending, self._resident, self._expiry
        while pending and pending[0][0] <= t:
            entry, idx, beta = heapq.heappop(pending)
            heapq.heappush(resident, (entry, idx))
            heapq.heappush(expiry, (beta, idx))
            self._count += 1
        while expiry and expiry[0][0] <= t:
            _, idx = heapq.heappop(expiry)
            self._left.add(idx)
            self._count -= 1

    def occupancy(self, t: float) -> int:
        self._advance(t)
        return self._count

    def head(self, t: float) -> int | None:
        """Index (0-based) of the oldest resident miss at time t, or None."""
        self._advance(t)
        resident = self._resident
        while resident and resident[0][1] in self._left:
            self._left.discard(heapq.heappop(resident)[1])
        return resident[0][1] if resident else None


def _timing_python(c: TraceColumns, capacity: int, tau: float):
    n = len(c)
    queue = MemoryQueue(capacity)
    a_v = [0.0] * n
    al_v = [0.0] * n
    b_v = [0.0] * n
    d_v = [0.0] * n
    al_c = [0] * n
    b_c = [0] * n
    d_c = [0] * n
    b_s = [0.0] * n
    q_v = [math.nan] * n
    start_br = [0] * n
    commit_br = [0] * n
    heads = [-1] * n

    dc, ds, dv = 0, 0.0, 0.0
    rows = zip(c.is_memory.tolist(), c.xi.tolist(), c.cycles.tolist(),
               c.transfer.tolist(), c.hit.tolist(), c.service.tolist(), c.dep.tolist())
    for i, (is_mem, xi, cyc, xfer, hit, svc, k) in enumerate(rows):
        a = xi * tau
        a_v[i] = a
        sc, ss, sv = xi, 0.0, a
        branch = START_ARRIVAL
        if k:
            j = k - 1
            if b_v[j] > sv:
                sc, ss, sv = b_c[j], b_s[j], b_v[j]
                branch = START_DEPENDENCY
        if is_mem:
            queue.resolve_through(a)
            if queue.occupancy(a) >= capacity:
                h = queue.head(a)
                heads[i] = h
                if b_v[h] > sv:
                    sc, ss, sv = b_c[h], b_s[h], b_v[h]
                    branch = START_QUEUE
        start_br[i] = branch

        ac = sc + 1
        al_c[i] = ac
        al_v[i] = ac * tau + ss
        if is_mem and not hit:
            qc = ac + cyc + xfer
            q_v[i] = qc * tau + ss
            bc, bs = qc + 1, ss + svc
            bv = bc * tau + bs
            queue.add(q_v[i], bv, i)
        else:
            bc, bs = ac + cyc, ss
            bv = bc * tau + bs
        b_c[i], b_s[i], b_v[i] = bc, bs, bv

        # Ties go to the instruction's own completion.
        if bv >= dv:
            dc, ds = bc + 1, bs
        else:
            dc = dc + 1
            commit_br[i] = COMMIT_PREVIOUS
        dv = dc * tau + ds
        d_c[i], d_v[i] = dc, dv

    i64 = np.int64
    return (np.asarray(a_v), np.asarray(al_v), np.asarray(b_v), np.asarray(d_v),
            np.asarray(al_c, dtype=i64), np.asarray(b_c, dtype=i64),
            np.asarray(d_c, dtype=i64), np.asarray(q_v),
            np.asarray(start_br, dtype=np.uint8), np.asarray(commit_br, dtype=np.uint8),
            np.asarray(heads, dtype=i64))


def compute_timing(trace: Trace, tau: float, engine: str = "compiled") -> TimingResult:
    """Event times of every instruction at clock period ``tau`` (seconds)."""
    if isinstance(tau, bool) or not isinstance(tau, (int, float, np.floating)):
        raise DomainError(f"clock period must be a real number, got {tau!r}")
    if not (math.isfinite(tau) and tau > 0):
        raise DomainError(f"clock period must be positive and finite, got {tau!r}")
    tau = float(tau)
    if len(trace) == 0:
        raise MalformedTraceError("cannot time an empty trace")
    c = trace.columns
    if engine == "compiled":
        out = timing_kernel(c.is_memory, c.xi, c.cycles, c.transfer, c.hit, c.service,
                            c.dep, trace.memory_queue_capacity, tau)
    elif engine == "python":
        out = _timing_python(c, trace.memory_queue_capacity, tau)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    a, alpha, beta, d, dalpha, dbeta, dd, q, sbr, cbr, heads = out
    return TimingResult(tau, a, alpha, beta, d, c.xi.copy(), dalpha, dbeta, dd, q,
                        sbr, cbr, heads)


def throughput(trace: Trace, tau: float) -> float:
    return compute_timing(trace, tau).throughput


def memory_queue_occupancy(trace: Trace, tau: float, time: float,
                           timing: TimingResult | None = None) -> int:
    """Number of misses resident in the memory queue at ``time``.

    A miss occupies a slot from its arrival at the queue until its execution
    ends.  Pass ``timing`` to reuse an existing timing pass.
    """
    if len(trace) == 0:
        return 0
    if timing is None:
        timing = compute_timing(trace, tau)
    elif timing.n != len(trace):
        raise InternalOrderError("timing result does not cover the whole trace")
    q = timing.queue_entry
    missed = ~np.isnan(q)
    return int(np.count_nonzero(missed & (q <= time) & (timing.beta > time)))
