"""Command line interface: gen | run | grid | score | serve."""

import argparse
import csv
import sys
from pathlib import Path

from .bench import (
    DEFAULT_FRAMES,
    StreamSpec,
    export_stream,
    generate_stream,
    load_pool,
    load_stream,
)
from .engine import AGENTS
from .errors import MinivoxError
from .grid import ORACLE_MODES, GridConfig, run_grid, run_single
from .metrics import der


def _csv_list(cast):
    def parse(text):
        return [cast(item) for item in text.split(",") if item]

    return parse


def _add_stream_args(parser, require_pool=True):
    parser.add_argument("--pool", required=require_pool, help="pool manifest CSV")
    parser.add_argument("--feature-kind", choices=["mfcc", "precomputed"], default=None)
    parser.add_argument("--speakers", type=int, required=require_pool, help="speakers per stream")
    parser.add_argument("--frames", type=int, default=None, help="target frame count")
    parser.add_argument("--reveal-p", type=float, default=0.5, help="feedback reveal probability")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--silence-gap", type=int, default=0, help="no-speaker frames between utterances")


def _generate_from_args(args):
    pool = load_pool(args.pool, feature_kind=args.feature_kind)
    frames = args.frames if args.frames is not None else DEFAULT_FRAMES[pool.feature_kind]
    spec = StreamSpec(
        n_speakers=args.speakers,
        target_frames=frames,
        reveal_p=args.reveal_p,
        seed=args.seed,
        silence_gap_frames=args.silence_gap,
    )
    return generate_stream(pool, spec)


def cmd_gen(args) -> int:
    stream = _generate_from_args(args)
    export_stream(stream, args.out)
    print(f"wrote stream: {args.out} ({len(stream)} frames, {len(stream.speakers)} speakers, "
          f"dim {stream.dim})")
    return 0


def cmd_run(args) -> int:
    if args.stream:
        stream = load_stream(args.stream)
    else:
        if not args.pool or args.speakers is None:
            print("run: need --stream DIR or --pool/--speakers", file=sys.stderr)
            return 2
        stream = _generate_from_args(args)
    row = run_single(
        stream,
        agent=args.agent,
        mode=args.mode,
        oracle=(args.oracle == "with"),
        ucb_c=args.ucb_c,
        out_dir=args.out,
        figures=args.figures,
    )
    print(f"agent={row['agent']} oracle={row['oracle']} frames={row['frames']} "
          f"reward={row['final_reward']} der={row['der']:.2f}%")
    print(f"wrote trace.csv, curve.csv, metrics.csv under {args.out}")
    return 0


def _parse_pool_specs(values):
    """--pool PATH or --pool kind=PATH (repeatable)."""
    out = {}
    for value in values:
        if "=" in value:
            kind, path = value.split("=", 1)
            out[kind] = path
        else:
            out[None] = value
    return out


def cmd_grid(args) -> int:
    frames = dict(DEFAULT_FRAMES)
    for item in args.frames or []:
        if "=" in item:
            kind, count = item.split("=", 1)
            frames[kind] = int(count)
        else:
            frames = {kind: int(item) for kind in frames}
    grid = GridConfig(
        speaker_counts=args.speakers,
        reveal_ps=args.reveal_ps,
        feature_kinds=args.feature_kinds,
        oracle_modes=args.oracle_modes,
        agents=args.agents,
        seeds=args.seeds,
        frames=frames,
        ucb_c=args.ucb_c,
        silence_gap_frames=args.silence_gap,
    )
    pool_specs = _parse_pool_specs(args.pool)
    pools = {}
    for kind in grid.feature_kinds:
        path = pool_specs.get(kind, pool_specs.get(None))
        if path is not None:
            pools[kind] = load_pool(path, feature_kind=kind)
    rows, failures = run_grid(grid, pools, args.out, workers=args.workers, figures=args.figures)
    print(f"wrote {len(rows)} result rows to {Path(args.out) / 'results.csv'}")
    if failures:
        for name, seed, message in failures:
            print(f"cell {name} seed {seed}: {message}", file=sys.stderr)
        return 1
    return 0


def _read_labels(path) -> list[str]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "label" not in reader.fieldnames:
            raise MinivoxError(f"{path}: expected a CSV with a 'label' column")
        return [row["label"] for row in reader]


def cmd_score(args) -> int:
    if args.trace:
        with open(args.trace, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        hyp = [row["chosen"] for row in rows]
        ref = [row["truth_action"] for row in rows]
    elif args.hyp and args.ref:
        hyp = _read_labels(args.hyp)
        ref = _read_labels(args.ref)
    else:
        print("score: need --trace FILE or --hyp FILE --ref FILE", file=sys.stderr)
        return 2
    result = der(hyp, ref)
    print(f"frames={result.frames}")
    print(f"der={result.percent:.2f}%")
    print(f"confusion={result.confusion_percent:.2f}% "
          f"missed={result.missed_percent:.2f}% false_alarm={result.false_alarm_percent:.2f}%")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minivox", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a labeled stream directory")
    _add_stream_args(gen)
    gen.add_argument("--out", required=True, help="output stream directory")
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="simulate one agent on one stream")
    _add_stream_args(run, require_pool=False)
    run.add_argument("--stream", default=None, help="previously generated stream directory")
    run.add_argument("--agent", choices=AGENTS, default="berlinucb")
    run.add_argument("--mode", choices=["bandit_benchmark", "interactive"], default="bandit_benchmark")
    run.add_argument("--oracle", choices=ORACLE_MODES, default="without")
    run.add_argument("--ucb-c", type=float, default=1.0)
    run.add_argument("--out", required=True)
    run.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    run.set_defaults(func=cmd_run)

    grid = sub.add_parser("grid", help="run the full environment grid")
    grid.add_argument("--pool", action="append", required=True,
                      help="manifest path, or kind=path (repeatable)")
    grid.add_argument("--out", required=True)
    grid.add_argument("--speakers", type=_csv_list(int), default=[5, 10, 20])
    grid.add_argument("--reveal-ps", type=_csv_list(float), default=[0.5, 0.1, 0.01])
    grid.add_argument("--feature-kinds", type=_csv_list(str), default=["mfcc", "precomputed"])
    grid.add_argument("--oracle-modes", type=_csv_list(str), default=list(ORACLE_MODES))
    grid.add_argument("--agents", type=_csv_list(str), default=list(AGENTS))
    grid.add_argument("--seeds", type=_csv_list(int), default=[0])
    grid.add_argument("--frames", action="append", default=None,
                      help="frame budget: N for all kinds, or kind=N (repeatable)")
    grid.add_argument("--silence-gap", type=int, default=0)
    grid.add_argument("--ucb-c", type=float, default=1.0)
    grid.add_argument("--workers", type=int, default=1)
    grid.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    grid.set_defaults(func=cmd_grid)

    score = sub.add_parser("score", help="frame-level DER between label files or a trace")
    score.add_argument("--trace", default=None, help="trace.csv from `minivox run`")
    score.add_argument("--hyp", default=None, help="hypothesis frame,label CSV")
    score.add_argument("--ref", default=None, help="reference frame,label CSV")
    score.set_defaults(func=cmd_score)

    serve = sub.add_parser("serve", help="start the live diarization service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MinivoxError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
