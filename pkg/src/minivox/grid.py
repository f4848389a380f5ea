"""Experiment grid runner: every (speakers x reveal-p x features x oracle)
cell times every agent and seed, with CSV results and reward-curve figures.
"""

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bench import (
    DEFAULT_FRAMES,
    FEATURE_KINDS,
    FeaturePool,
    GeneratedStream,
    StreamSpec,
    engine_config_for,
    generate_stream,
    simulate,
)
from .engine import AGENTS
from .errors import ConfigError
from .metrics import cumulative_reward, trace_der

RESULT_COLUMNS = [
    "feature_kind", "n_speakers", "reveal_p", "oracle", "agent", "seed",
    "frames", "final_reward", "der", "confusion", "missed", "false_alarm",
]

ORACLE_MODES = ("with", "without")


@dataclass
class GridConfig:
    """Defaults reproduce the 3 x 3 x 2 x 2 = 36-cell environment grid."""

    speaker_counts: list[int] = field(default_factory=lambda: [5, 10, 20])
    reveal_ps: list[float] = field(default_factory=lambda: [0.5, 0.1, 0.01])
    feature_kinds: list[str] = field(default_factory=lambda: list(FEATURE_KINDS))
    oracle_modes: list[str] = field(default_factory=lambda: list(ORACLE_MODES))
    agents: list[str] = field(default_factory=lambda: list(AGENTS))
    seeds: list[int] = field(default_factory=lambda: [0])
    frames: dict = field(default_factory=lambda: dict(DEFAULT_FRAMES))
    ucb_c: float = 1.0
    silence_gap_frames: int = 0

    def __post_init__(self):
        for name in ("speaker_counts", "reveal_ps", "feature_kinds", "oracle_modes", "agents", "seeds"):
            if not getattr(self, name):
                raise ConfigError(f"grid list {name} must be nonempty")
        for kind in self.feature_kinds:
            if kind not in FEATURE_KINDS:
                raise ConfigError(f"unknown feature kind {kind!r}")
            if kind not in self.frames:
                raise ConfigError(f"no frame budget configured for feature kind {kind!r}")
        for mode in self.oracle_modes:
            if mode not in ORACLE_MODES:
                raise ConfigError(f"oracle mode must be one of {ORACLE_MODES}, got {mode!r}")

    @property
    def n_cells(self) -> int:
        return (len(self.speaker_counts) * len(self.reveal_ps)
                * len(self.feature_kinds) * len(self.oracle_modes))


def cell_name(kind: str, n_speakers: int, reveal_p: float, oracle: str) -> str:
    return f"{kind}-C{n_speakers}-p{reveal_p}-{oracle}"


def _run_group(args):
    """One stream (kind, speakers, p, seed) against every oracle mode and agent.

    Module-level so a process pool can pickle it. Returns (rows, curves,
    timings, failures).
    """
    pool, kind, n_speakers, reveal_p, seed, grid = args
    rows, curves, timings, failures = [], {}, [], []
    try:
        spec = StreamSpec(
            n_speakers=n_speakers,
            target_frames=grid.frames[kind],
            reveal_p=reveal_p,
            seed=seed,
            silence_gap_frames=grid.silence_gap_frames,
        )
        stream = generate_stream(pool, spec)
    except ConfigError as exc:
        for oracle in grid.oracle_modes:
            failures.append((cell_name(kind, n_speakers, reveal_p, oracle), seed, str(exc)))
        return rows, curves, timings, failures

    for oracle in grid.oracle_modes:
        name = cell_name(kind, n_speakers, reveal_p, oracle)
        for agent in grid.agents:
            config = engine_config_for(stream, agent, oracle=(oracle == "with"), ucb_c=grid.ucb_c)
            started = time.perf_counter()
            trace = simulate(stream, config)
            elapsed = time.perf_counter() - started
            result = trace_der(trace)
            rows.append({
                "feature_kind": kind,
                "n_speakers": n_speakers,
                "reveal_p": reveal_p,
                "oracle": oracle,
                "agent": agent,
                "seed": seed,
                "frames": len(trace),
                "final_reward": trace.final_reward(),
                "der": result.percent,
                "confusion": result.confusion,
                "missed": result.missed,
                "false_alarm": result.false_alarm,
            })
            timings.append((name, agent, seed, elapsed))
            if seed == grid.seeds[0]:
                curves[(name, agent)] = cumulative_reward(trace)
    return rows, curves, timings, failures


def _row_key(row):
    return (row["feature_kind"], row["n_speakers"], row["reveal_p"],
            row["oracle"], row["agent"], row["seed"])


def run_grid(grid: GridConfig, pools, out_dir, workers: int = 1, figures: bool = True):
    """Run the whole grid and write results under out_dir.

    `pools` is one FeaturePool (used for every feature kind) or a mapping
    feature_kind -> FeaturePool. Failed cells are reported and skipped;
    surviving cells still run. Returns (rows, failures); results.csv is
    byte-identical across reruns with the same inputs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(pools, FeaturePool):
        pools = {kind: pools for kind in grid.feature_kinds}

    tasks = []
    failures = []
    for kind in grid.feature_kinds:
        pool = pools.get(kind)
        for n_speakers in grid.speaker_counts:
            for reveal_p in grid.reveal_ps:
                for seed in grid.seeds:
                    if pool is None:
                        for oracle in grid.oracle_modes:
                            failures.append((cell_name(kind, n_speakers, reveal_p, oracle),
                                             seed, f"no pool supplied for feature kind {kind!r}"))
                    elif pool.feature_kind != kind:
                        for oracle in grid.oracle_modes:
                            failures.append((cell_name(kind, n_speakers, reveal_p, oracle),
                                             seed, f"pool is {pool.feature_kind!r}, cell needs {kind!r}"))
                    else:
                        tasks.append((pool, kind, n_speakers, reveal_p, seed, grid))

    rows, curves, timings = [], {}, []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool_exec:
            outputs = list(pool_exec.map(_run_group, tasks))
    else:
        outputs = [_run_group(task) for task in tasks]
    for group_rows, group_curves, group_timings, group_failures in outputs:
        rows.extend(group_rows)
        curves.update(group_curves)
        timings.extend(group_timings)
        failures.extend(group_failures)

    rows.sort(key=_row_key)
    _write_results(out / "results.csv", rows)
    _write_timings(out / "timings.csv", sorted(timings))
    for (name, agent), curve in sorted(curves.items()):
        _write_curve(out / f"curve_{name}_{agent}.csv", curve)
    _write_summaries(out, grid, rows)
    if failures:
        _write_failures(out / "failures.csv", sorted(failures))
    if figures and curves:
        from .plots import render_reward_curves

        fig_dir = out / "figures"
        fig_dir.mkdir(exist_ok=True)
        names = sorted({name for name, _ in curves})
        for name in names:
            per_agent = {agent: curves[(n, agent)] for n, agent in sorted(curves) if n == name}
            render_reward_curves(per_agent, fig_dir / f"curve_{name}.png", title=name)
    return rows, failures


def _write_results(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([
                row["feature_kind"], row["n_speakers"], row["reveal_p"], row["oracle"],
                row["agent"], row["seed"], row["frames"], row["final_reward"],
                format(row["der"], ".6f"), row["confusion"], row["missed"], row["false_alarm"],
            ])


def _write_timings(path, timings) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell", "agent", "seed", "seconds"])
        for name, agent, seed, elapsed in timings:
            writer.writerow([name, agent, seed, format(elapsed, ".3f")])


def _write_curve(path, curve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "cumulative_reward"])
        for t, value in enumerate(curve):
            writer.writerow([t, int(value)])


def _write_failures(path, failures) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell", "seed", "error"])
        for name, seed, message in failures:
            writer.writerow([name, seed, message])


def _write_summaries(out: Path, grid: GridConfig, rows) -> None:
    """Median-DER pivot per oracle mode: agent rows, cell columns."""
    for oracle in grid.oracle_modes:
        columns = []
        for kind in grid.feature_kinds:
            for n in grid.speaker_counts:
                for p in grid.reveal_ps:
                    columns.append((kind, n, p))
        with open(out / f"summary_{oracle}_oracle.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["agent"] + [f"{kind}-C{n}-p{p}" for kind, n, p in columns])
            for agent in grid.agents:
                values = []
                for kind, n, p in columns:
                    ders = [row["der"] for row in rows
                            if (row["feature_kind"], row["n_speakers"], row["reveal_p"],
                                row["oracle"], row["agent"]) == (kind, n, p, oracle, agent)]
                    values.append(format(float(np.median(ders)), ".6f") if ders else "")
                writer.writerow([agent] + values)


def run_single(stream: GeneratedStream, agent: str, mode: str, oracle: bool,
               ucb_c: float, out_dir, figures: bool = True) -> dict:
    """Simulate one agent on one stream and write trace, curve, and metrics."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = engine_config_for(stream, agent, mode=mode, oracle=oracle, ucb_c=ucb_c)
    trace = simulate(stream, config)
    result = trace_der(trace)
    curve = cumulative_reward(trace)
    trace.to_csv(out / "trace.csv")
    _write_curve(out / "curve.csv", curve)
    row = {
        "feature_kind": stream.feature_kind,
        "n_speakers": len(stream.speakers),
        "reveal_p": stream.spec.reveal_p,
        "oracle": "with" if oracle else "without",
        "agent": agent,
        "seed": stream.spec.seed,
        "frames": len(trace),
        "final_reward": trace.final_reward(),
        "der": result.percent,
        "confusion": result.confusion,
        "missed": result.missed,
        "false_alarm": result.false_alarm,
    }
    _write_results(out / "metrics.csv", [row])
    if figures:
        from .plots import render_reward_curves

        render_reward_curves({agent: curve}, out / "reward_curve.png",
                             title=cell_name(stream.feature_kind, len(stream.speakers),
                                             stream.spec.reveal_p, row["oracle"]))
    return row
