"""Command line entry point: ``capwalk <experiment> [flags]``.

Every registered experiment is a subcommand whose flags mirror its parameter
schema (underscores become hyphens). Exit codes: 0 when every verdict passes,
1 on any failure, 2 on a configuration error.
"""

import argparse
import sys

from .errors import ConfigError, PreconditionError
from .harness import config as hconfig
from .harness import experiments

FORMATS = ("json", "csv")


def _flag(key):
    return "--" + key.replace("_", "-")


def build_parser():
    parser = argparse.ArgumentParser(prog="capwalk", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", metavar="<subcommand>")
    sub.add_parser("list", help="list experiments and what they check", allow_abbrev=False)
    for name, exp in experiments.REGISTRY.items():
        p = sub.add_parser(name, help=exp.summary, description=exp.summary, allow_abbrev=False)
        p.add_argument("--manifold", default=None, help=f"manifold spec (default {exp.manifold})")
        p.add_argument("--out", default=None, help="write the report here instead of stdout")
        p.add_argument("--format", default="json", choices=FORMATS)
        for key, param in experiments.schema_for(name).items():
            default = param.dump(param.default) if param.default is not None else None
            p.add_argument(_flag(key), dest=f"p_{key}", default=None, metavar=param.kind.upper(),
                           help=f"{param.help} (default {default})")
    return parser


def _unknown_flag_error(command, extras):
    flag = next((x for x in extras if x.startswith("--")), extras[0])
    key = flag.lstrip("-").split("=")[0].replace("-", "_")
    valid = list(experiments.schema_for(command)) + ["manifold", "out", "format"]
    hint = hconfig.nearest_key(key, valid)
    return ConfigError(f"unknown parameter {flag!r} for {command!r}; did you mean {_flag(hint)!r}?")


def _list(stream):
    for name, summary, checks in experiments.describe():
        stream.write(f"{name}: {summary}\n")
        for check in checks:
            stream.write(f"    - {check}\n")


def main(argv=None):
    parser = build_parser()
    args, extras = parser.parse_known_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    if args.command == "list":
        if extras:
            sys.stderr.write(f"config error: unexpected arguments {extras}\n")
            return 2
        _list(sys.stdout)
        return 0
    try:
        if extras:
            raise _unknown_flag_error(args.command, extras)
        raw = {k[2:]: v for k, v in vars(args).items() if k.startswith("p_") and v is not None}
        cfg = hconfig.make_config(args.command, args.manifold, raw, args.out)
        report = experiments.run_experiment(cfg)
    except (ConfigError, PreconditionError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    text = report.to_json() + "\n" if args.format == "json" else report.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    sys.stderr.write(f"{report.experiment}: {report.verdict} ({report.wall_time:.2f} s)\n")
    return 0 if report.verdict == "pass" else 1


if __name__ == "__main__":
    sys.exit(main())
