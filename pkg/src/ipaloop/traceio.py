"""Plain-text trace files.

Layout::

    memory_queue_capacity=16
    index,kind,arrival_counter,exec_cycles,cache_cycles,transfer_cycles,cache_hit,dram_service,dep_index
    1,C,0,2,,,,,
    2,M,1,,3,2,0,6e-08,1

Fields that do not apply to an instruction are left empty.  ``cache_hit`` is
0 or 1, ``dram_service`` is in seconds and ``dep_index`` is 1-based.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .des import Trace, TraceColumns
from .errors import MalformedTraceError

HEADER = ("index", "kind", "arrival_counter", "exec_cycles", "cache_cycles",
          "transfer_cycles", "cache_hit", "dram_service", "dep_index")
PREAMBLE_KEY = "memory_queue_capacity"


def write_trace(trace: Trace, path) -> None:
    path = Path(path)
    c = trace.columns
    try:
        with path.open("w", newline="") as fh:
            fh.write(f"{PREAMBLE_KEY}={trace.memory_queue_capacity}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HEADER)
            rows = zip(c.is_memory.tolist(), c.xi.tolist(), c.cycles.tolist(),
                       c.transfer.tolist(), c.hit.tolist(), c.service.tolist(),
                       c.dep.tolist())
            for i, (mem, xi, cyc, xfer, hit, svc, dep) in enumerate(rows, start=1):
                dep = dep or ""
                if not mem:
                    w.writerow((i, "C", xi, cyc, "", "", "", "", dep))
                elif hit:
                    w.writerow((i, "M", xi, "", cyc, xfer, 1, "", dep))
                else:
                    w.writerow((i, "M", xi, "", cyc, xfer, 0, repr(svc), dep))
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def _int(field: str, what: str, line: int) -> int:
    try:
        return int(field)
    except ValueError:
        raise MalformedTraceError(f"line {line}: {what} {field!r} is not an integer") from None


def parse_trace(text: str) -> Trace:
    lines = io.StringIO(text)
    first = lines.readline().strip()
    key, sep, value = first.partition("=")
    if not sep or key.strip() != PREAMBLE_KEY:
        raise MalformedTraceError(f"line 1: expected '{PREAMBLE_KEY}=K', got {first!r}")
    capacity = _int(value.strip(), PREAMBLE_KEY, 1)
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != HEADER:
        raise MalformedTraceError(f"line 2: header must be {','.join(HEADER)}")

    mem, xi, cyc, xfer, hit, svc, dep = [], [], [], [], [], [], []
    for lineno, row in enumerate(reader, start=3):
        if not row:
            continue
        if len(row) != len(HEADER):
            raise MalformedTraceError(f"line {lineno}: expected {len(HEADER)} fields")
        idx, kind, x, ex, ca, tr, h, s, d = (f.strip() for f in row)
        if _int(idx, "index", lineno) != len(xi) + 1:
            raise MalformedTraceError(f"line {lineno}: indices must be 1..N contiguous")
        xi.append(_int(x, "arrival_counter", lineno))
        dep.append(_int(d, "dep_index", lineno) if d else 0)
        if kind == "C":
            if ca or tr or h or s:
                raise MalformedTraceError(
                    f"line {lineno}: computational instruction carries memory fields")
            mem.append(False)
            cyc.append(_int(ex, "exec_cycles", lineno))
            xfer.append(0)
            hit.append(True)
            svc.append(0.0)
        elif kind == "M":
            if ex:
                raise MalformedTraceError(f"line {lineno}: memory instruction carries exec_cycles")
            if h not in ("0", "1"):
                raise MalformedTraceError(f"line {lineno}: cache_hit must be 0 or 1")
            mem.append(True)
            cyc.append(_int(ca, "cache_cycles", lineno))
            xfer.append(_int(tr, "transfer_cycles", lineno))
            hit.append(h == "1")
            if h == "1":
                if s:
                    raise MalformedTraceError(f"line {lineno}: cache hit carries dram_service")
                svc.append(0.0)
            else:
                try:
                    svc.append(float(s))
                except ValueError:
                    raise MalformedTraceError(
                        f"line {lineno}: cache miss needs dram_service") from None
        else:
            raise MalformedTraceError(f"line {lineno}: unknown kind {kind!r}")

    cols = TraceColumns(np.array(mem, dtype=bool), np.array(xi, dtype=np.int64),
                        np.array(cyc, dtype=np.int64), np.array(xfer, dtype=np.int64),
                        np.array(hit, dtype=bool), np.array(svc, dtype=np.float64),
                        np.array(dep, dtype=np.int64))
    return Trace.from_columns(cols, capacity)


def read_trace(path) -> Trace:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read trace {path}: {exc}") from exc
    try:
        return parse_trace(text)
    except MalformedTraceError as exc:
        raise MalformedTraceError(f"{path}: {exc}") from None
