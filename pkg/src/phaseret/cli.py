"""Command line front end for the experiment harness.

Config resolution order: built-in defaults, then a key=value config file
(--config), then explicit command line flags. The fully resolved config is
always logged as a sidecar next to the output CSV.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .experiments import (
    ExperimentConfig,
    compare_initializations,
    run_experiment,
    run_standoff_sweep,
)

_TUPLE_FIELDS = ("sampling_rates", "standoffs")
_INT_FIELDS = ("num_images", "seed", "shepp_pool", "k_max", "i_max", "workers")
_FLOAT_FIELDS = (
    "standoff_m",
    "scene_detector_m",
    "eta",
    "reg_weight",
    "step_size",
    "twf_lb",
    "twf_ub",
)


def _parse_rates(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phaseret",
        description="Phase retrieval experiments: classical solvers and deep "
        "generative initialization over Gaussian or diffraction sensing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file applied before flags")
    common.add_argument("--dataset", choices=("mnist", "shepp-logan"), default=None)
    common.add_argument(
        "--algorithm", choices=("wf", "twf", "rk", "drgd", "deepinit"), default=None
    )
    common.add_argument("--sensing", choices=("gaussian", "diffraction"), default=None)
    common.add_argument(
        "--rates", dest="sampling_rates", type=_parse_rates, default=None,
        help="comma-separated sampling rates m/n",
    )
    common.add_argument(
        "--standoffs", type=_parse_rates, default=None,
        help="comma-separated modulator-scene distances in meters (sweep)",
    )
    common.add_argument("--standoff", dest="standoff_m", type=float, default=None)
    common.add_argument("--scene-detector", dest="scene_detector_m", type=float, default=None)
    common.add_argument("--images", dest="num_images", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument(
        "--weights", dest="generator_weights", default=None,
        help="generator weight file, or 'synthetic' for the built-in test generator",
    )
    common.add_argument("--mnist-images", default=None)
    common.add_argument("--mnist-labels", default=None)
    common.add_argument("--shepp-pool", dest="shepp_pool", type=int, default=None)
    common.add_argument("--k-max", dest="k_max", type=int, default=None)
    common.add_argument("--i-max", dest="i_max", type=int, default=None)
    common.add_argument("--eta", type=float, default=None, help="latent descent step size")
    common.add_argument(
        "--lambda", dest="reg_weight", type=float, default=None,
        help="total variation regularization weight",
    )
    common.add_argument(
        "--step-size", dest="step_size", type=float, default=None,
        help="gradient descent step ceiling mu_max",
    )
    common.add_argument("--twf-lb", dest="twf_lb", type=float, default=None)
    common.add_argument("--twf-ub", dest="twf_ub", type=float, default=None)
    common.add_argument(
        "--init", dest="rk_init", choices=("spectral", "random_unit"), default=None
    )
    common.add_argument("--out-csv", dest="out_csv", default=None)
    common.add_argument("--dump-dir", dest="dump_dir", default=None)
    common.add_argument("--workers", type=int, default=None)

    sub.add_parser("run", parents=[common], help="rate grid at fixed geometry")
    sub.add_parser(
        "standoff-sweep", parents=[common], help="rate grid swept over standoff distances"
    )
    sub.add_parser(
        "compare-init", parents=[common],
        help="spectral vs deep initialization under one Kaczmarz budget",
    )
    return parser


def _read_config_file(path: str) -> dict:
    values: dict = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {text!r}")
            key, _, raw = text.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in {f.name for f in dataclasses.fields(ExperimentConfig)}:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, raw)
    return values


def _coerce(key: str, raw: str):
    if raw == "" or raw == "None":
        return None
    if key in _TUPLE_FIELDS:
        return tuple(float(p) for p in raw.split(",") if p.strip() != "")
    if key in _INT_FIELDS:
        return int(raw)
    if key in _FLOAT_FIELDS:
        return float(raw)
    return raw


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        values.update(_read_config_file(args.config))
    field_names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key, value in vars(args).items():
        if key in field_names and value is not None:
            values[key] = value
    return ExperimentConfig(**values)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "run":
            rows = run_experiment(cfg)
        elif args.command == "standoff-sweep":
            rows = run_standoff_sweep(cfg)
        else:
            rows = compare_initializations(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(rows)} rows to {cfg.out_csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
