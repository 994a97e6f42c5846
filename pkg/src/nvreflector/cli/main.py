"""Command-line entry point: ``nvreflector <subcommand> [--preset NAME] [--config FILE] ...``.

Configuration is layered: preset, then config file, then command-line flags.
Exit codes: 0 success, 2 invalid configuration, 3 failure during the run.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from importlib import resources
from pathlib import Path

import yaml
from pydantic import ValidationError

from nvreflector.cli.commands import COMMANDS
from nvreflector.cli.output import config_hash, publish, utc_now
from nvreflector.cli.schema import validate

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3


class ConfigError(ValueError):
    pass


def preset_names() -> list[str]:
    folder = resources.files("nvreflector.cli") / "presets"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str) -> dict:
    path = resources.files("nvreflector.cli") / "presets" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"preset: unknown preset '{name}' (available: {', '.join(preset_names())})")
    return yaml.safe_load(path.read_text()) or {}


def load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: {path} is not valid YAML: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config: {path} must hold a mapping at the top level")
    return data


def merge(base: dict, update: dict) -> dict:
    out = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = value
    return out


def parse_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected start:stop:step")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric range '{text}'") from None
    return {"start": start, "stop": stop, "step": step}


def parse_threads(text: str):
    if text == "auto":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer or 'auto'") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nvreflector", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate-geo": "ray-optics collection efficiency and angular distribution",
        "simulate-fdtd": "full-wave collection efficiency spectra and displacement sweeps",
        "fabsim": "gray-scale reflow and etch profile simulation, or fit an external linescan",
        "fit-saturation": "saturation fit with both background corrections and brightness",
        "analyze-g2": "zero-delay correlation from a coincidence histogram",
        "simulate-hbt": "Monte Carlo HBT histogram with g2 and lifetime estimates",
        "lifetime": "emitter lifetime from the side-peak shapes of a histogram",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--preset", help="named configuration shipped with the package")
        p.add_argument("--seed", type=int, help="random seed (required here or in the config)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=parse_threads, help="worker threads or 'auto'")
        if name == "simulate-geo":
            p.add_argument("--rays", type=int, help="number of rays")
        if name == "simulate-fdtd":
            p.add_argument("--sweep", nargs=2, metavar=("AXIS", "START:STOP:STEP"),
                           help="emitter offset sweep along 'vertical' or 'lateral', in nm")
    return parser


def assemble(args) -> dict:
    raw = {}
    if args.preset:
        raw = merge(raw, load_preset(args.preset))
    if args.config:
        raw = merge(raw, load_config_file(args.config))
    overrides = {"seed": args.seed, "output_dir": args.out, "thread_count": args.threads,
                 "rays": getattr(args, "rays", None)}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    sweep = getattr(args, "sweep", None)
    if sweep:
        axis, text = sweep
        try:
            span = parse_range(text)
        except argparse.ArgumentTypeError as exc:
            raise ConfigError(f"sweep: {exc}") from None
        raw["sweep"] = merge(raw.get("sweep") or {}, dict(span, axis=axis))
    return raw


def describe_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        key = ".".join(str(p) for p in err["loc"]) or "config"
        lines.append(f"{key}: {err['msg']}")
    return "\n".join(lines)


def _remove_empty_parents(paths):
    for d in sorted({os.path.dirname(p) for p in paths}, reverse=True):
        try:
            os.rmdir(d)
        except OSError:
            pass


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)

    def log(msg):
        print(msg, file=stderr, flush=True)

    try:
        config = validate(args.command, assemble(args))
    except ValidationError as exc:
        log(f"invalid configuration:\n{describe_validation(exc)}")
        return EXIT_VALIDATION
    except ValueError as exc:
        log(f"invalid configuration:\n{exc}")
        return EXIT_VALIDATION

    started = utc_now()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            files, summary, moved = COMMANDS[args.command](config, log)
        except Exception as exc:
            log(f"error: {type(exc).__name__}: {exc}")
            return EXIT_RUNTIME
    messages = [f"{w.category.__name__}: {w.message}" for w in caught]
    for m in messages:
        log(f"warning: {m}")
    manifest = {
        "command": args.command,
        "config": config.result_fields(),
        "config_hash": config_hash(config.result_fields()),
        "started": started,
        "finished": utc_now(),
        "warnings": messages,
        "summary": summary,
    }
    try:
        names = publish(config.output_dir, files, manifest, moved)
    except OSError as exc:
        log(f"error: cannot write outputs: {exc}")
        return EXIT_RUNTIME
    _remove_empty_parents(moved.values())
    for name in names + ["manifest.json"]:
        print(os.path.join(config.output_dir, name), file=stdout)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
