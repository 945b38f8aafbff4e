"""Independent reference for the instruction-flow recursions.

Written straight from the recursion definitions with plain floats and a
quadratic scan of the memory queue, sharing no code with the package.  Each
event time is kept as a pair (cycles, seconds) so the derivative with respect
to the clock period is just the cycle count.
"""

from dataclasses import dataclass


@dataclass
class Ins:
    kind: str  # "C" or "M"
    xi: int
    cycles: int  # exec cycles for C, cache cycles for M
    transfer: int = 0
    hit: bool = True
    service: float = 0.0
    dep: int = 0  # 1-based, 0 = none


def _val(p, tau):
    return p[0] * tau + p[1]


def _later(p, q, tau):
    """q if it is strictly later than p, else p (ties keep the left argument)."""
    return q if _val(q, tau) > _val(p, tau) else p


def simulate(instrs, capacity, tau):
    """Return dict of per-instruction lists: a, alpha, beta, d, dalpha, dbeta, dd, q."""
    n = len(instrs)
    a, alpha, beta, d, q = [None] * n, [None] * n, [None] * n, [None] * n, [None] * n
    prev_d = (0, 0.0)
    for i, ins in enumerate(instrs):
        a[i] = (ins.xi, 0.0)
        start = a[i]
        if ins.dep:
            start = _later(start, beta[ins.dep - 1], tau)
        if ins.kind == "M":
            t = _val(a[i], tau)
            resident = [j for j in range(i) if q[j] is not None
                        and _val(q[j], tau) <= t < _val(beta[j], tau)]
            if len(resident) >= capacity:
                head = min(resident, key=lambda j: (_val(q[j], tau), j))
                start = _later(start, beta[head], tau)
        alpha[i] = (start[0] + 1, start[1])
        if ins.kind == "M" and not ins.hit:
            q[i] = (alpha[i][0] + ins.cycles + ins.transfer, alpha[i][1])
            beta[i] = (q[i][0] + 1, q[i][1] + ins.service)
        else:
            beta[i] = (alpha[i][0] + ins.cycles, alpha[i][1])
        last = beta[i] if _val(beta[i], tau) >= _val(prev_d, tau) else prev_d
        d[i] = (last[0] + 1, last[1])
        prev_d = d[i]
    return {
        "a": [_val(p, tau) for p in a],
        "alpha": [_val(p, tau) for p in alpha],
        "beta": [_val(p, tau) for p in beta],
        "d": [_val(p, tau) for p in d],
        "dalpha": [p[0] for p in alpha],
        "dbeta": [p[0] for p in beta],
        "dd": [p[0] for p in d],
        "q": [None if p is None else _val(p, tau) for p in q],
    }


def from_trace(trace):
    out = []
    for ins in trace.instructions:
        if ins.kind.value == "C":
            out.append(Ins("C", ins.arrival_counter, ins.exec_cycles, dep=ins.dep_index or 0))
        else:
            out.append(Ins("M", ins.arrival_counter, ins.cache_cycles, ins.transfer_cycles,
                           ins.cache_hit, ins.dram_service or 0.0, ins.dep_index or 0))
    return out


def newton_sequence(J, dJ, r, u0, steps):
    """Plain Newton iterates u <- u + (r - J(u)) / J'(u)."""
    us = [u0]
    for _ in range(steps):
        u = us[-1]
        us.append(u + (r - J(u)) / dJ(u))
    return us
