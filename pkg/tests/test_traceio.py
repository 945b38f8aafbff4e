import pytest
from hypothesis import given

from conftest import traces
from ipaloop.errors import MalformedTraceError
from ipaloop.traceio import HEADER, parse_trace, read_trace, write_trace
from ipaloop.workload import generate, get_profile


@given(traces())
def test_round_trip(tmp_path_factory, trace):
    path = tmp_path_factory.mktemp("t") / "trace.csv"
    write_trace(trace, path)
    assert read_trace(path) == trace


def test_generated_round_trip_is_byte_stable(tmp_path):
    tr = generate(get_profile("water-ns", 1), 3000)
    write_trace(tr, tmp_path / "a.csv")
    write_trace(read_trace(tmp_path / "a.csv"), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_layout():
    text = ("memory_queue_capacity=2\n" + ",".join(HEADER) + "\n"
            "1,C,0,2,,,,,\n2,M,1,,3,2,0,6e-08,1\n3,M,1,,1,0,1,,\n")
    tr = parse_trace(text)
    assert tr.memory_queue_capacity == 2 and len(tr) == 3
    ins = tr.instructions
    assert ins[1].dram_service == 6e-08 and ins[1].dep_index == 1 and not ins[1].cache_hit
    assert ins[2].cache_hit and ins[2].transfer_cycles == 0


@pytest.mark.parametrize("text", [
    "",
    "capacity=2\n" + ",".join(HEADER) + "\n",
    "memory_queue_capacity=2\nindex,kind\n",
    "memory_queue_capacity=x\n" + ",".join(HEADER) + "\n",
    "memory_queue_capacity=2\n" + ",".join(HEADER) + "\n2,C,0,1,,,,,\n",
    "memory_queue_capacity=2\n" + ",".join(HEADER) + "\n1,C,0,1,,,,,1\n",
    "memory_queue_capacity=2\n" + ",".join(HEADER) + "\n1,C,0,1,2,,,,\n",
    "memory_queue_capacity=2\n" + ",".join(HEADER) + "\n1,M,0,,1,0,0,,\n",
    "memory_queue_capacity=2\n" + ",".join(HEADER) + "\n1,M,0,,1,0,1,5e-9,\n",
    "memory_queue_capacity=2\n" + ",".join(HEADER) + "\n1,X,0,1,,,,,\n",
    "memory_queue_capacity=2\n" + ",".join(HEADER) + "\n1,C,0,1\n",
    "memory_queue_capacity=0\n" + ",".join(HEADER) + "\n1,C,0,1,,,,,\n",
])
def test_malformed(text):
    with pytest.raises(MalformedTraceError):
        parse_trace(text)


def test_io_errors_carry_path(tmp_path):
    with pytest.raises(OSError, match="nope"):
        read_trace(tmp_path / "nope.csv")
