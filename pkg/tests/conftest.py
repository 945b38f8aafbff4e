import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ipaloop.des import Trace, TraceColumns

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def traces(draw, max_n=40, miss=True, max_capacity=4):
    """Small valid traces with every field combination represented."""
    n = draw(st.integers(1, max_n))
    gaps = draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    xi = np.cumsum(gaps) - gaps[0]
    kinds = draw(st.lists(st.sampled_from("CHM" if miss else "CH"), min_size=n, max_size=n))
    cycles = draw(st.lists(st.integers(1, 4), min_size=n, max_size=n))
    transfer = draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    service = draw(st.lists(st.sampled_from([0.0, 1.5e-9, 7e-9, 2.5e-8, 6e-8]),
                            min_size=n, max_size=n))
    deps = [0] + [draw(st.integers(0, i)) for i in range(1, n)]
    cap = draw(st.integers(1, max_capacity))
    is_mem = np.array([k != "C" for k in kinds])
    hit = np.array([k != "M" for k in kinds])
    cols = TraceColumns(
        is_memory=is_mem,
        xi=np.asarray(xi, dtype=np.int64),
        cycles=np.asarray(cycles, dtype=np.int64),
        transfer=np.where(is_mem, transfer, 0).astype(np.int64),
        hit=hit,
        service=np.where(~hit, service, 0.0),
        dep=np.asarray(deps, dtype=np.int64),
    )
    return Trace.from_columns(cols, cap)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, ok: bool, text: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {text}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
