"""Command-line entry point.

    sketchspec run <config.json>
    sketchspec gen <spec.json> -o m.bin
    sketchspec calibrate <config.json>
    sketchspec validate <config.json>

Exit codes: 0 success (numerical trial failures are counted, not fatal),
2 configuration error, 3 I/O error.
"""
import argparse
import json
import sys

from . import generators as gen
from . import harness
from .errors import ConfigError, InvalidSpec, ParseError
from .matrix_io import write_matrix

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _err(msg):
    print(f"sketchspec: {msg}", file=sys.stderr)


def _cmd_run(args, force_calibrate=False):
    try:
        cfg = harness.load_config(args.config)
        if force_calibrate and cfg.task != "calibrate":
            raise ConfigError(f"calibrate expects task 'calibrate', got {cfg.task!r}")
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"cannot read config: {exc}")
        return EXIT_IO
    try:
        out = harness.run(cfg)
    except (ConfigError, InvalidSpec, ParseError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    print(f"{cfg.task}: {len(out.records)} records, {out.failures} numerical failures")
    for name, path in sorted(out.paths.items()):
        print(f"  {name}: {path}")
    return EXIT_OK


def _cmd_validate(args):
    try:
        cfg = harness.load_config(args.config)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"cannot read config: {exc}")
        return EXIT_IO
    print(f"ok: task {cfg.task}, {cfg.trials} trials, output {cfg.output_dir()}")
    return EXIT_OK


def _cmd_gen(args):
    try:
        with open(args.spec) as fh:
            d = json.load(fh)
    except OSError as exc:
        _err(f"cannot read {args.spec}: {exc}")
        return EXIT_IO
    except ValueError as exc:
        _err(f"spec is not valid JSON: {exc}")
        return EXIT_CONFIG
    try:
        a = gen.generate(gen.GeneratorSpec.from_dict(d))
    except InvalidSpec as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        write_matrix(args.output, a, args.format)
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    print(f"wrote {a.shape[0]}x{a.shape[1]} matrix to {args.output}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="sketchspec", description="Randomized sketching experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    c = sub.add_parser("calibrate", help="run a calibrate-task config")
    c.add_argument("config")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    g = sub.add_parser("gen", help="write a synthetic matrix")
    g.add_argument("spec")
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--format", choices=("bin", "mm"), default=None)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "calibrate":
        return _cmd_run(args, force_calibrate=True)
    if args.command == "validate":
        return _cmd_validate(args)
    return _cmd_gen(args)


if __name__ == "__main__":
    sys.exit(main())
