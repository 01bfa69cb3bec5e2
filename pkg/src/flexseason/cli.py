"""Command-line front end.

    flexseason simulate  --config CFG --out DIR [--seed S]
    flexseason fit       --config CFG --out DIR
    flexseason mc-bias | mc-clt | mc-lemma6 | mc-rate --config CFG --out DIR

``CFG`` is a JSON file or the name of a shipped config (``flexseason
configs`` lists them).  Exit codes: 0 success, 2 configuration or input
error, 3 numerical failure.  Errors are reported as one JSON line on
stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import STUDIES, ExperimentConfig, config_hash
from .errors import ConfigError, DegenerateWindow, DimensionError, DomainError, FlexSeasonError
from .estimator import FitConfig, fit_at
from .formats import fits_to_csv, panel_to_csv, read_panel_csv
from .kernel import KernelSpec
from .model import synthesize_panel
from .presets import curves_from_config, errors_from_config
from .rng import PRNG_NAME, PRNG_VERSION
from .weakdep import simulate

log = logging.getLogger("flexseason")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class CliError(Exception):
    def __init__(self, kind, message, code=EXIT_CONFIG):
        super().__init__(message)
        self.kind = kind
        self.code = code


def shipped_configs():
    root = resources.files("flexseason") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(ref: str):
    """Return ``(config dict, base directory for relative paths)``."""
    path = Path(ref)
    if path.is_file():
        text, base = path.read_text(encoding="utf-8"), path.parent
    elif ref in shipped_configs():
        text = (resources.files("flexseason") / "configs" / f"{ref}.json").read_text(encoding="utf-8")
        base = Path.cwd()
    else:
        raise CliError("ConfigError", f"config {ref!r} is neither a file nor a shipped config")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError("ConfigError", f"invalid JSON in {ref}: {exc}") from None
    if not isinstance(data, dict):
        raise CliError("ConfigError", "config must be a JSON object")
    return data, base


def _metadata(command, resolved, outputs, **extra):
    meta = {
        "command": command,
        "library_version": __version__,
        "prng": {"name": PRNG_NAME, "version": PRNG_VERSION},
        "config_hash": config_hash(resolved),
        "config": resolved,
        "outputs": outputs,
    }
    meta.update(extra)
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_simulate(data, base, out: Path, seed=None):
    allowed = {"n", "d", "seed", "curves", "errors"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = {"n", "d", "curves"} - set(data)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    resolved = dict(data)
    resolved.setdefault("errors", None)
    resolved["seed"] = int(seed if seed is not None else data.get("seed", 0))
    n, d = int(resolved["n"]), int(resolved["d"])
    if d < 2:
        raise DimensionError(f"need d >= 2 seasons, got d={d}")
    curves_block = dict(resolved["curves"])
    curves_block.setdefault("d", d)
    curves = curves_from_config(curves_block)
    if curves.d != d:
        raise DimensionError(f"curves have d={curves.d}, config says d={d}")
    spec = errors_from_config(resolved["errors"], d)
    e = np.zeros((n, d)) if spec is None else simulate(spec, n, resolved["seed"])
    panel = synthesize_panel(curves, e)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "panel.csv", panel_to_csv(panel))
    _write(out / "panel.meta.json", _metadata("simulate", resolved, ["panel.csv"]))
    log.info("wrote %d x %d panel to %s", n, d, out / "panel.csv")


def _grid(spec):
    if isinstance(spec, bool):
        raise ConfigError("grid_points must be an integer or a list of times")
    if isinstance(spec, int):
        if spec < 1:
            raise ConfigError("grid_points must be positive")
        return list(np.linspace(0.0, 1.0, spec)) if spec > 1 else [0.5]
    if isinstance(spec, list):
        return [float(t) for t in spec]
    raise ConfigError("grid_points must be an integer or a list of times")


def cmd_fit(data, base, out: Path, seed=None):
    allowed = {"panel", "kernel", "bandwidth", "grid_points"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = {"panel", "bandwidth"} - set(data)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    resolved = dict(data)
    resolved.setdefault("kernel", "epanechnikov")
    resolved.setdefault("grid_points", 101)
    path = Path(resolved["panel"])
    if not path.is_absolute():
        path = base / path
    try:
        panel = read_panel_csv(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read panel {path}: {exc.strerror}") from None
    cfg = FitConfig(KernelSpec.from_name(resolved["kernel"]), float(resolved["bandwidth"]))
    grid = _grid(resolved["grid_points"])
    fits, warnings = [], []
    for t in grid:
        try:
            fits.append(fit_at(panel, cfg, t))
        except DegenerateWindow as exc:
            fits.append(None)
            warnings.append(f"t={t!r}: {exc}")
        except DomainError as exc:
            raise ConfigError(f"grid point t={t!r}: {exc}") from None
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "fit.csv", fits_to_csv(panel.d, grid, fits))
    outputs = ["fit.csv"]
    if warnings:
        _write(out / "warnings.txt", "".join(w + "\n" for w in warnings))
        outputs.append("warnings.txt")
        for w in warnings:
            log.warning("%s", w)
    _write(out / "fit.meta.json", _metadata("fit", resolved, outputs, failed_points=len(warnings)))


def cmd_mc(command, data, base, out: Path, seed=None, threads=1):
    cfg = ExperimentConfig.from_dict(data, seed_override=seed, threads=threads)
    log.info("running %s: settings %s, %d replications", command, cfg.settings(), cfg.replications)
    report = STUDIES[command](cfg)
    stem = command.replace("mc-", "")
    out.mkdir(parents=True, exist_ok=True)
    _write(out / f"{stem}_report.json", report.to_json())
    _write(out / f"{stem}_summary.csv", report.to_csv())
    _write(out / f"{stem}.meta.json",
           _metadata(command, cfg.source, [f"{stem}_report.json", f"{stem}_summary.csv"]))
    for c in report.checks:
        log.info("check %-50s %s (value %s)", c.name, "pass" if c.passed else "FAIL", c.value)


COMMANDS = ["simulate", "fit"] + list(STUDIES)


def build_parser():
    p = argparse.ArgumentParser(prog="flexseason", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"flexseason {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON config path or shipped config name")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker cap for replications (default: all cores)")
        loud = sp.add_mutually_exclusive_group()
        loud.add_argument("--quiet", action="store_true")
        loud.add_argument("--verbose", action="store_true")
    sub.add_parser("configs", help="list shipped configs")
    return p


def _report_error(kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message).replace("\n", " ")}) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "configs":
        print("\n".join(shipped_configs()))
        return EXIT_OK
    level = logging.ERROR if args.quiet else logging.DEBUG if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.seed is not None and args.seed < 0:
        _report_error("ConfigError", "--seed must be non-negative")
        return EXIT_CONFIG
    threads = args.threads or os.cpu_count() or 1
    out = Path(args.out)
    try:
        data, base = load_config(args.config)
        if args.command == "simulate":
            cmd_simulate(data, base, out, args.seed)
        elif args.command == "fit":
            cmd_fit(data, base, out, args.seed)
        else:
            cmd_mc(args.command, data, base, out, args.seed, threads)
    except CliError as exc:
        _report_error(exc.kind, exc)
        return exc.code
    except DegenerateWindow as exc:
        _report_error(type(exc).__name__, exc)
        return EXIT_NUMERIC
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        _report_error(type(exc).__name__, exc)
        return EXIT_NUMERIC
    except FlexSeasonError as exc:
        _report_error(type(exc).__name__, exc)
        return EXIT_CONFIG
    except (ValueError, TypeError, KeyError) as exc:
        _report_error("ConfigError", f"{type(exc).__name__}: {exc}")
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
