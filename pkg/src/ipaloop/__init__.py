"""Closed-loop throughput regulation of a simulated out-of-order core.

Modules:

* ``des``: instruction-flow timing model and memory queue.
* ``ipa``: exact sample-path derivative and the ratio approximation.
* ``plants``: OOO core, M/D/1 queue and analytic plants.
* ``controller``: adaptive-gain integrator with projection and quantization.
* ``workload``: synthetic trace generation.
* ``harness``: experiment configuration, closed-loop runner and reports.
"""

from .controller import (ControllerPolicy, ControllerState, FrequencyGrid, initial_state,
                         project, quantize, step)
from .des import Instruction, Kind, TimingResult, Trace, compute_timing, memory_queue_occupancy
from .ipa import DerivativeEstimate, Method, ipa_derivative, ratio_approx
from .plants import AnalyticPlant, MD1Plant, NoiseSpec, OOOPlant, PlantResponse, run_cycle
from .workload import WorkloadProfile, WorkloadStream, generate, get_profile

__version__ = "0.1.0"

__all__ = [
    "AnalyticPlant", "ControllerPolicy", "ControllerState", "DerivativeEstimate",
    "FrequencyGrid", "Instruction", "Kind", "MD1Plant", "Method", "NoiseSpec", "OOOPlant",
    "PlantResponse", "TimingResult", "Trace", "WorkloadProfile", "WorkloadStream",
    "compute_timing", "generate", "get_profile", "initial_state", "ipa_derivative",
    "memory_queue_occupancy", "project", "quantize", "ratio_approx", "run_cycle", "step",
]
