"""Command-line entry point: ``ipaloop run|batch|gen-trace|sweep``."""

from __future__ import annotations

import csv
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from .des import compute_timing
from .errors import ConfigError
from .harness import (GHZ, config_from_mapping, emit_reports, load_config, run_experiment,
                      summary_row, SUMMARY_COLUMNS)
from .ipa import ipa_from_timing
from .traceio import read_trace, write_trace
from .workload import PROFILES, generate, get_profile


def _parse_sets(pairs) -> dict[str, str]:
    out = {}
    for p in pairs:
        key, sep, value = p.partition("=")
        if not sep:
            raise click.BadParameter(f"expected KEY=VALUE, got {p!r}", param_hint="--set")
        out[key.strip()] = value.strip()
    return out


def _print_summary(s, out_dir) -> None:
    rise = s.rise_time_cycles if s.risen else "never"
    click.echo(f"rise_time_cycles={rise} avg_offset={s.avg_offset:.6g} "
               f"window={s.offset_window[0]}..{s.offset_window[1]} "
               f"sat_low={s.saturation_fraction_low:.3f} "
               f"sat_high={s.saturation_fraction_high:.3f}")
    if out_dir is not None:
        click.echo(f"reports written to {out_dir}")


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Adaptive-gain throughput regulation of a simulated out-of-order core."""


@main.command()
@click.argument("config", required=False, type=click.Path(dir_okay=False))
@click.option("--set", "sets", multiple=True, metavar="KEY=VALUE",
              help="Override a config key (repeatable).")
@click.option("--setpoint", type=float, help="Target output r.")
@click.option("--u0", type=float, help="Initial input (GHz for the OOO plant).")
@click.option("--cycles", type=int, help="Number of control cycles.")
@click.option("--seed", type=int)
@click.option("-o", "--output", type=click.Path(file_okay=False), help="Report directory.")
def run(config, sets, setpoint, u0, cycles, seed, output):
    """Run one closed-loop experiment."""
    overrides = _parse_sets(sets)
    for key, val in (("setpoint", setpoint), ("u0", u0), ("cycles", cycles),
                     ("seed", seed), ("output", output)):
        if val is not None:
            overrides[key] = str(val)
    try:
        cfg = load_config(config, overrides) if config else config_from_mapping(overrides)
        summary = run_experiment(cfg)
        if cfg.output:
            emit_reports(summary, cfg.output)
    except (ConfigError, OSError, RuntimeError, ValueError) as exc:
        raise click.ClickException(str(exc)) from None
    _print_summary(summary, cfg.output)


def _run_one(path: str, out_root: str | None) -> tuple[str, list[str] | None, str]:
    try:
        cfg = load_config(path)
        out = cfg.output
        if out_root is not None:
            out = str(Path(out_root) / Path(path).stem)
            cfg = dataclasses.replace(cfg, output=out)
        summary = run_experiment(cfg)
        if out:
            emit_reports(summary, out)
        return path, summary_row(summary), ""
    except Exception as exc:  # reported per config, the batch carries on
        return path, None, f"{type(exc).__name__}: {exc}"


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--pattern", default="*.cfg", show_default=True)
@click.option("-o", "--output", type=click.Path(file_okay=False),
              help="Write each run's reports to OUTPUT/<config stem>.")
@click.option("-j", "--jobs", type=int, default=1, show_default=True)
def batch(directory, pattern, output, jobs):
    """Run every config file in DIRECTORY, one loop per worker."""
    paths = sorted(str(p) for p in Path(directory).glob(pattern))
    if not paths:
        raise click.ClickException(f"no files matching {pattern} in {directory}")
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_run_one, paths, [output] * len(paths)))
    else:
        results = [_run_one(p, output) for p in paths]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("config",) + SUMMARY_COLUMNS)
    failed = 0
    for path, row, err in results:
        if row is None:
            failed += 1
            click.echo(f"{path}: {err}", err=True)
        else:
            w.writerow([path] + row)
    if output:
        with (Path(output) / "batch_summary.csv").open("w", newline="") as fh:
            bw = csv.writer(fh, lineterminator="\n")
            bw.writerow(("config",) + SUMMARY_COLUMNS)
            bw.writerows([p] + r for p, r, _ in results if r is not None)
    if failed:
        raise click.ClickException(f"{failed} of {len(paths)} configs failed")


@main.command("gen-trace")
@click.option("--profile", type=click.Choice(sorted(PROFILES)), default="barnes",
              show_default=True)
@click.option("-n", "--instructions", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
def gen_trace(profile, instructions, seed, output):
    """Generate a synthetic trace file from a workload profile."""
    try:
        trace = generate(get_profile(profile, seed), instructions)
        write_trace(trace, output)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(f"wrote {len(trace)} instructions ({trace.n_misses} misses) to {output}")


@main.command()
@click.option("--profile", type=click.Choice(sorted(PROFILES)), default="barnes",
              show_default=True)
@click.option("--trace", "trace_file", type=click.Path(exists=True, dir_okay=False),
              help="Use a trace file instead of a generated profile.")
@click.option("-n", "--instructions", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--from", "lo", type=float, default=0.5, show_default=True, help="GHz")
@click.option("--to", "hi", type=float, default=5.0, show_default=True, help="GHz")
@click.option("--points", type=int, default=46, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
def sweep(profile, trace_file, instructions, seed, lo, hi, points, output):
    """Throughput and its derivative over a frequency range, on one fixed trace."""
    if not 0 < lo <= hi or points < 1:
        raise click.ClickException("need 0 < --from <= --to and --points >= 1")
    try:
        trace = (read_trace(trace_file) if trace_file
                 else generate(get_profile(profile, seed), instructions))
        with open(output, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("u_Hz", "y_ips", "dydu_ipa", "dydu_ratio"))
            for u in np.linspace(lo, hi, points) * GHZ:
                u = float(u)
                t = compute_timing(trace, 1.0 / u)
                w.writerow((repr(u), repr(t.throughput), repr(ipa_from_timing(t)),
                            repr(t.throughput / u)))
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(f"wrote {points} points to {output}")


if __name__ == "__main__":
    main()
