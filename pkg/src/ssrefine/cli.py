"""Command line entry point: ``ssrefine {trial,mu-sweep,snr-sweep,metrics}``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure. Progress goes
to standard error; results are only written to the files named by ``--out``,
``--plot`` and ``--records``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import numpy as np

from . import harness
from .harness import ConfigError, ExperimentConfig

log = logging.getLogger("ssrefine")

# config-file key -> ExperimentConfig field; CLI flags use the same names
ALIASES = {
    "elements": "element_count",
    "spacing": "spacing_over_wavelength",
    "doas": "true_doas_deg",
    "snapshots": "snapshot_count",
    "trials": "trial_count",
    "seed": "base_seed",
    "grid_start": "grid_start_deg",
    "grid_stop": "grid_stop_deg",
    "grid_step": "grid_step_deg",
    "snr": "snr_db",
    "delta": "delta_deg",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def parse_float_list(text) -> tuple:
    """``"-25,-23,-21"`` or an inclusive range ``"-25:-15:2"`` or a single value."""
    if isinstance(text, (int, float)):
        return (float(text),)
    if isinstance(text, (list, tuple)):
        return tuple(float(t) for t in text)
    text = str(text).strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise ConfigError(f"bad range {text!r}; expected start:stop:step")
        n = int(np.floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1
        return tuple(float(v) for v in np.round(parts[0] + parts[2] * np.arange(n), 10))
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _coerce(name, value):
    kind = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}[name]
    try:
        if name in ("true_doas_deg", "snr_db"):
            return parse_float_list(value)
        if kind == "bool":
            if isinstance(value, bool):
                return value
            return str(value).strip().lower() in ("1", "true", "yes", "on")
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        return str(value).strip()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {value!r}") from exc


def _canonical(key: str) -> str:
    key = key.strip().replace("-", "_")
    key = ALIASES.get(key, key)
    if key not in {f.name for f in dataclasses.fields(ExperimentConfig)}:
        raise ConfigError(f"unknown config key {key!r}")
    return key


def load_config_file(path) -> dict:
    """Read a flat ``key = value`` file (``#`` comments) or a JSON object."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            raw[k] = v.strip()
    out = {}
    for k, v in raw.items():
        name = _canonical(k)
        out[name] = _coerce(name, v)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value or JSON config file; flags override it")
    common.add_argument("--elements", type=int)
    common.add_argument("--spacing", type=float, help="element spacing in wavelengths")
    common.add_argument("--doas", help="comma-separated true DOAs in degrees")
    common.add_argument("--snr", help="SNR in dB: value, comma list, or start:stop:step "
                                      "(use --snr=-25,-23 for negative lists)")
    common.add_argument("--snapshots", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--mu-start", type=float)
    common.add_argument("--mu-stop", type=float)
    common.add_argument("--mu-step", type=float)
    common.add_argument("--grid-start", type=float)
    common.add_argument("--grid-stop", type=float)
    common.add_argument("--grid-step", type=float)
    common.add_argument("--delta", type=float, help="success threshold in degrees")
    common.add_argument("--kappa", type=float, help="soft success decay coefficient")
    common.add_argument("--methods", choices=harness.METHODS)
    common.add_argument("--workers", type=int)
    common.add_argument("--noiseless", action="store_true", default=None)
    common.add_argument("--out", required=True, help="output file")
    common.add_argument("--plot", help="optional plot file (SVG recommended)")
    common.add_argument("--records", help="optional per-trial record CSV")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="ssrefine", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("trial", parents=[common], help="run one trial, dump full traces as JSON")
    p.add_argument("--trial-index", type=int, default=0)
    sub.add_parser("mu-sweep", parents=[common], help="RMSE and reconstruction error versus mu")
    sub.add_parser("snr-sweep", parents=[common], help="RMSE of MUSIC and refined MUSIC versus SNR")
    m = sub.add_parser("metrics", help="recompute sweep indexes from a per-trial record CSV")
    m.add_argument("records_in", metavar="RECORDS")
    m.add_argument("--out", required=True)
    m.add_argument("--delta", type=float, default=1.0)
    m.add_argument("--kappa", type=float, default=1.0)
    m.add_argument("-v", "--verbose", action="store_true")
    return parser


_FLAG_KEYS = ("elements", "spacing", "doas", "snr", "snapshots", "trials", "seed", "mu_start",
              "mu_stop", "mu_step", "grid_start", "grid_stop", "grid_step", "delta", "kappa",
              "methods", "workers", "noiseless")


def config_from_args(args) -> ExperimentConfig:
    values = load_config_file(args.config) if args.config else {}
    for flag in _FLAG_KEYS:
        v = getattr(args, flag)
        if v is not None:
            name = _canonical(flag)
            values[name] = _coerce(name, v)
    return ExperimentConfig(**values)


def _run(args) -> None:
    if args.command == "metrics":
        from .metrics import MetricConfig
        try:
            mc = MetricConfig(args.delta, args.kappa)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        rows = harness.aggregate(harness.read_records(args.records_in), mc)
        harness.emit_csv(rows, args.out)
        return

    config = config_from_args(args)
    if args.command == "trial":
        outcome = harness.run_trial(config, args.trial_index)
        harness.write_trial_json(outcome, args.out)
        return

    if args.command == "mu-sweep":
        if len(config.snr_db) != 1:
            raise ConfigError("mu-sweep takes a single --snr value")
        log.info("mu sweep at %g dB, %d trials", config.snr_db[0], config.trial_count)
        outcomes = harness.run_trials(config, config.snr_db[0])
        rows = harness.mu_sweep(config, outcomes)
        records = harness.mu_sweep_records(config, outcomes) if args.records else None
        label = "mu"
    else:
        outcomes = []
        for snr in config.snr_db:
            log.info("snr %g dB, %d trials", snr, config.trial_count)
            outcomes.extend(harness.run_trials(config, snr))
        rows = harness.snr_sweep(config, outcomes)
        records = harness.snr_sweep_records(config, outcomes) if args.records else None
        label = "SNR (dB)"

    harness.emit_csv(rows, args.out)
    if records is not None:
        harness.emit_records(records, args.records)
    if args.plot:
        try:
            harness.emit_plot(rows, args.plot, label)
        except ImportError as exc:
            log.warning("plot skipped: %s", exc)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
        if not args.verbose:
            logging.getLogger().setLevel(logging.WARNING)
        _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - mapped to exit status 2
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
