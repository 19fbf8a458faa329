"""Command-line interface.

Subcommands: gen-env (write a switching-MDP JSON), run (execute an
experiment config and write CSV/JSON/SVG outputs), detect (run the
change-point detector over a newline-separated symbol stream), report
(re-emit CSV/SVG from a saved run directory).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import (
    ExperimentConfig,
    emit_outputs,
    reemit_outputs,
    run_experiment,
)
from .cpd import ConstantPrior, DetectorConfig, ReciprocalPrior, detect_stream
from .envs import GenConfig, generate_switching


def _cmd_gen_env(args) -> int:
    config = GenConfig(
        n_states=args.states,
        n_actions=args.actions,
        n_segments=args.segments,
        horizon=args.horizon,
        min_segment_len=args.min_segment_len,
        smoothing_eps=args.smoothing,
        reward_variation=args.reward_variation,
        seed=args.seed,
    )
    switching = generate_switching(config)
    out = Path(args.out)
    out.write_text(switching.to_json() + "\n")
    print(f"wrote {out} ({switching.n_segments} segments, "
          f"horizon {switching.horizon})")
    return 0


def _cmd_run(args) -> int:
    doc = json.loads(Path(args.config).read_text())
    if args.realizations is not None:
        doc["realizations"] = args.realizations
    if args.seed is not None:
        doc["base_seed"] = args.seed
    config = ExperimentConfig.from_json_dict(doc)
    results = run_experiment(config, workers=args.workers)
    written = emit_outputs(results, args.out)
    for outcome in results.outcomes:
        print(f"{outcome.tag}: mean final reward "
              f"{outcome.mean_cum_rewards[-1]:.1f}, mean final regret "
              f"{outcome.mean_cum_regret[-1]:.1f}")
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def _read_symbols(source: str) -> list[int]:
    if source == "-":
        lines = sys.stdin.read().splitlines()
    else:
        lines = Path(source).read_text().splitlines()
    symbols = []
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            symbols.append(int(text))
        except ValueError:
            raise ValueError(
                f"line {lineno}: {text!r} is not an integer symbol"
            ) from None
    return symbols


def _cmd_detect(args) -> int:
    symbols = _read_symbols(args.input)
    if not symbols:
        raise ValueError("empty symbol stream")
    bad = next((s for s in symbols if not 1 <= s <= args.alphabet), None)
    if bad is not None:
        raise ValueError(
            f"symbol {bad} outside alphabet 1..{args.alphabet}"
        )
    schedule = (
        ConstantPrior(args.constant_prior)
        if args.constant_prior is not None
        else ReciprocalPrior()
    )
    config = DetectorConfig(
        alphabet_size=args.alphabet,
        delta=args.delta,
        prior_schedule=schedule,
        max_forecasters=args.max_forecasters,
    )
    for restart in detect_stream(symbols, config):
        print(restart)
    return 0


def _cmd_report(args) -> int:
    written = reemit_outputs(args.run)
    print(f"re-emitted {len(written)} files in {args.run}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="switchrl",
        description="Switching-MDP benchmark and change-point detection tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-env", help="generate a switching-MDP JSON file")
    gen.add_argument("--out", required=True, help="output JSON path")
    gen.add_argument("--states", type=int, required=True)
    gen.add_argument("--actions", type=int, required=True)
    gen.add_argument("--segments", type=int, required=True)
    gen.add_argument("--horizon", type=int, required=True)
    gen.add_argument("--min-segment-len", type=int, default=2)
    gen.add_argument("--smoothing", type=float, default=0.02)
    gen.add_argument("--reward-variation", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(func=_cmd_gen_env)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True, help="experiment config JSON")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--realizations", type=int, default=None,
                     help="override the config's realization count")
    run.add_argument("--seed", type=int, default=None,
                     help="override the config's base seed")
    run.set_defaults(func=_cmd_run)

    det = sub.add_parser(
        "detect", help="detect change points in a symbol stream"
    )
    det.add_argument("--alphabet", type=int, required=True,
                     help="alphabet size (symbols are 1..alphabet)")
    det.add_argument("--delta", type=float, required=True,
                     help="false-alarm probability target")
    det.add_argument("--input", default="-",
                     help="symbol file, one integer per line ('-' for stdin)")
    det.add_argument("--max-forecasters", type=int, default=0,
                     help="cap the forecaster bank (0 = unbounded)")
    det.add_argument("--constant-prior", type=float, default=None,
                     help="use a constant prior schedule with this value")
    det.set_defaults(func=_cmd_detect)

    rep = sub.add_parser("report", help="re-emit CSV/SVG from a run directory")
    rep.add_argument("--run", required=True, help="run output directory")
    rep.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single diagnostic line
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
