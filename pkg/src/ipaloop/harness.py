"""Closed-loop experiment runner.

A run measures one control cycle at the initial input (the bootstrap cycle).
From then on each cycle's measurement is handed to the controller, and the
input it returns is applied at the start of the following cycle.

Configuration files are flat ``key = value`` text; ``#`` starts a comment.
For the OOO plant, frequency keys (``u0``, ``interval``, ``grid``) are in GHz
and the setpoint is in instructions per second.  For the other plants all
values are in the plant's own units.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .controller import HASWELL_GHZ, ControllerPolicy, FrequencyGrid, initial_state, step
from .errors import ConfigError, CycleError
from .ipa import Method
from .plants import AnalyticPlant, MD1Plant, NoiseSpec, OOOPlant, PhiMode
from .traceio import read_trace
from .workload import PROFILES, WorkloadStream, get_profile

GHZ = 1e9

CYCLE_COLUMNS = ("cycle", "time_s", "u_Hz", "y_ips", "e", "A", "deriv_est", "deriv_method",
                 "saturated_low", "saturated_high")
SUMMARY_COLUMNS = ("plant", "setpoint", "cycles", "rise_time_cycles", "offset_window_start",
                   "offset_window_end", "avg_offset", "saturation_fraction_low",
                   "saturation_fraction_high")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one closed-loop run.

    Actuator values are stored in actuator units (Hz for the OOO plant).
    """

    plant: str = "ooo"
    setpoint: float = 1.2e9
    u0: float = 0.5e9
    cycles: int = 100
    seed: int = 0
    output: str | None = None
    # controller policy
    scale: float = 1.0
    interval: tuple[float, float] | None = (0.5e9, 5.0e9)
    grid: tuple[float, ...] | None = None  # actuator units
    deriv_floor: float = 1e-12
    # offset window, in cycles; the start never precedes the rise time
    offset_window_start: int = 0
    offset_window_end: int | None = None
    # OOO plant
    profile: str = "barnes"
    instructions_per_cycle: int = 100_000
    derivative: str = "ratio"
    memory_queue_capacity: int | None = None
    trace_file: str | None = None
    # analytic plant
    function: str = "square"
    psi_bound: float = 0.0
    phi_mode: str = "additive"
    phi_bound: float = 0.0
    # analytic and M/D/1 plants
    cycle_duration: float | None = None
    arrival_rate: float = 0.5

    def __post_init__(self):
        if self.plant not in ("ooo", "analytic", "md1"):
            raise ConfigError(f"unknown plant {self.plant!r}; choose ooo, analytic or md1")
        if not (math.isfinite(self.setpoint) and self.setpoint > 0):
            raise ConfigError(f"setpoint must be positive, got {self.setpoint!r}")
        if not (math.isfinite(self.u0) and self.u0 > 0):
            raise ConfigError(f"u0 must be positive and finite, got {self.u0!r}")
        if self.cycles < 1:
            raise ConfigError(f"cycles must be >= 1, got {self.cycles}")
        if self.offset_window_start < 0:
            raise ConfigError("offset_window_start must be >= 0")
        if self.offset_window_end is not None and self.offset_window_end < self.offset_window_start:
            raise ConfigError("offset_window_end precedes offset_window_start")
        if self.instructions_per_cycle < 1:
            raise ConfigError("instructions_per_cycle must be >= 1")
        try:
            Method(self.derivative)
            PhiMode(self.phi_mode)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.plant == "ooo" and self.trace_file is None and self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}; choose from {sorted(PROFILES)}")
        self.policy()  # validates scale, interval and grid together

    def policy(self) -> ControllerPolicy:
        grid = FrequencyGrid(self.grid, scale=1.0) if self.grid is not None else None
        return ControllerPolicy(interval=self.interval, scale=self.scale, grid=grid,
                                derivative_floor=self.deriv_floor)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# --- config files -----------------------------------------------------------

_FREQUENCY_KEYS = ("u0", "interval", "grid")
_INT_KEYS = ("cycles", "seed", "offset_window_start", "instructions_per_cycle")
_OPTIONAL_INT_KEYS = ("offset_window_end", "memory_queue_capacity")
_FLOAT_KEYS = ("setpoint", "u0", "scale", "deriv_floor", "psi_bound", "phi_bound",
               "arrival_rate")
_OPTIONAL_FLOAT_KEYS = ("cycle_duration",)
_STR_KEYS = ("plant", "profile", "derivative", "function", "phi_mode")
_OPTIONAL_STR_KEYS = ("output", "trace_file")
CONFIG_KEYS = frozenset(f.name for f in dataclasses.fields(ExperimentConfig))

_NONE = ("", "none", "off", "no")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def parse_config_text(text: str) -> dict[str, str]:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    return dict(cp["experiment"])


def config_from_mapping(raw: dict[str, str]) -> ExperimentConfig:
    """Build a config from string values as found in a config file."""
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    vals: dict = {}
    try:
        for key, text in raw.items():
            text = text.strip()
            low = text.lower()
            if key in _INT_KEYS:
                vals[key] = int(text)
            elif key in _OPTIONAL_INT_KEYS:
                vals[key] = None if low in _NONE else int(text)
            elif key in _FLOAT_KEYS:
                vals[key] = float(text)
            elif key in _OPTIONAL_FLOAT_KEYS:
                vals[key] = None if low in _NONE else float(text)
            elif key in _STR_KEYS:
                vals[key] = low
            elif key in _OPTIONAL_STR_KEYS:
                vals[key] = None if low in _NONE else text
            elif key == "interval":
                if low in _NONE:
                    vals[key] = None
                else:
                    pts = _floats(text)
                    if len(pts) != 2:
                        raise ConfigError("interval needs exactly two values: lo, hi")
                    vals[key] = pts
            elif key == "grid":
                if low in _NONE:
                    vals[key] = None
                elif low == "haswell":
                    vals[key] = HASWELL_GHZ
                else:
                    vals[key] = _floats(text)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value in config: {exc}") from None

    if vals.get("plant", ExperimentConfig.plant) == "ooo":
        for key in _FREQUENCY_KEYS:
            v = vals.get(key)
            if isinstance(v, tuple):
                vals[key] = tuple(x * GHZ for x in v)
            elif v is not None:
                vals[key] = v * GHZ
    elif "interval" not in vals:
        vals["interval"] = None  # the GHz default only makes sense for the OOO core
    return ExperimentConfig(**vals)


def load_config(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    raw = parse_config_text(text)
    raw.update(overrides or {})
    try:
        return config_from_mapping(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# --- running ----------------------------------------------------------------


@dataclass(frozen=True)
class CycleReport:
    cycle: int
    time_s: float  # end of the cycle
    u_Hz: float  # input applied during the cycle
    y_ips: float
    e: float
    A: float  # gain produced by this cycle's derivative estimate
    deriv_est: float
    deriv_method: str
    saturated_low: bool
    saturated_high: bool

    def row(self) -> list[str]:
        return [str(self.cycle), repr(self.time_s), repr(self.u_Hz), repr(self.y_ips),
                repr(self.e), repr(self.A), repr(self.deriv_est), self.deriv_method,
                str(int(self.saturated_low)), str(int(self.saturated_high))]


@dataclass(frozen=True)
class RunSummary:
    config: ExperimentConfig
    rise_time_cycles: int  # -1 if the setpoint was never reached
    offset_window: tuple[int, int]  # inclusive cycle indices
    avg_offset: float
    saturation_fraction_low: float
    saturation_fraction_high: float
    reports: tuple[CycleReport, ...] = field(repr=False, default=())

    @property
    def risen(self) -> bool:
        return self.rise_time_cycles >= 0


def build_plant(cfg: ExperimentConfig):
    if cfg.plant == "ooo":
        if cfg.trace_file is not None:
            source = read_trace(cfg.trace_file)
        else:
            prof = get_profile(cfg.profile, cfg.seed)
            if cfg.memory_queue_capacity is not None:
                prof = dataclasses.replace(prof, memory_queue_capacity=cfg.memory_queue_capacity)
            source = WorkloadStream(prof)
        return OOOPlant(source, cfg.instructions_per_cycle, cfg.derivative)
    if cfg.plant == "analytic":
        noise = NoiseSpec(cfg.psi_bound, PhiMode(cfg.phi_mode), cfg.phi_bound, cfg.seed)
        return AnalyticPlant(cfg.function, noise=noise,
                             cycle_duration=cfg.cycle_duration or 1e-4)
    return MD1Plant(cfg.arrival_rate, cfg.cycle_duration or 100.0, cfg.seed)


def rise_time(ys, r: float) -> int:
    """First cycle whose output reaches the setpoint, or -1."""
    for n, y in enumerate(ys):
        if y >= r:
            return n
    return -1


def offset_window(rise: int, n_cycles: int, start: int = 0,
                  end: int | None = None) -> tuple[int, int]:
    lo = max(rise, start)
    hi = n_cycles - 1 if end is None else min(end, n_cycles - 1)
    return lo, hi


def average_offset(ys, r: float, window: tuple[int, int]) -> float:
    lo, hi = window
    seg = [y - r for y in ys[lo:hi + 1] if math.isfinite(y)]
    return math.fsum(seg) / len(seg) if seg else math.nan


def summarize(cfg: ExperimentConfig, reports) -> RunSummary:
    reports = tuple(reports)
    ys = [c.y_ips for c in reports]
    rise = rise_time(ys, cfg.setpoint)
    window = offset_window(rise, len(reports), cfg.offset_window_start, cfg.offset_window_end)
    n = len(reports)
    return RunSummary(
        config=cfg,
        rise_time_cycles=rise,
        offset_window=window,
        avg_offset=average_offset(ys, cfg.setpoint, window),
        saturation_fraction_low=sum(c.saturated_low for c in reports) / n,
        saturation_fraction_high=sum(c.saturated_high for c in reports) / n,
        reports=reports,
    )


def run_experiment(cfg: ExperimentConfig, plant=None) -> RunSummary:
    """Run ``cfg.cycles`` control cycles; ``plant`` overrides the configured one."""
    plant = plant if plant is not None else build_plant(cfg)
    policy = cfg.policy()
    state = initial_state(cfg.u0, policy)
    r = cfg.setpoint
    t = 0.0
    reports = []
    for n in range(cfg.cycles):
        u = state.u
        try:
            resp = plant.run_cycle(u)
            nxt = step(state, resp, r)
        except Exception as exc:
            raise CycleError(n, exc) from exc
        if math.isfinite(resp.duration):
            t += resp.duration
        low, high = policy.saturation(u)
        reports.append(CycleReport(
            cycle=n, time_s=t, u_Hz=u, y_ips=resp.y, e=r - resp.y, A=nxt.A,
            deriv_est=resp.derivative.value, deriv_method=resp.derivative.method.value,
            saturated_low=low, saturated_high=high))
        state = nxt
    return summarize(cfg, reports)


# --- reports ----------------------------------------------------------------


def summary_row(s: RunSummary) -> list[str]:
    return [s.config.plant, repr(s.config.setpoint), str(len(s.reports)),
            str(s.rise_time_cycles), str(s.offset_window[0]), str(s.offset_window[1]),
            repr(s.avg_offset), repr(s.saturation_fraction_low),
            repr(s.saturation_fraction_high)]


def emit_reports(summary: RunSummary, path) -> dict[str, Path]:
    """Write cycles.csv, summary.csv and two-column .dat series into ``path``."""
    out = Path(path)
    files = {
        "cycles": out / "cycles.csv",
        "summary": out / "summary.csv",
        "throughput": out / "throughput_vs_time.dat",
        "frequency": out / "frequency_vs_time.dat",
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        with files["cycles"].open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CYCLE_COLUMNS)
            w.writerows(c.row() for c in summary.reports)
        with files["summary"].open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_COLUMNS)
            w.writerow(summary_row(summary))
        for key, col, label in (("throughput", "y_ips", "throughput_ips"),
                                ("frequency", "u_Hz", "frequency_Hz")):
            with files[key].open("w") as fh:
                fh.write(f"# time_s {label}\n")
                for c in summary.reports:
                    fh.write(f"{c.time_s!r} {getattr(c, col)!r}\n")
    except OSError as exc:
        raise OSError(f"cannot write reports to {out}: {exc}") from exc
    return files


def read_cycles_csv(path) -> list[dict[str, str]]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
