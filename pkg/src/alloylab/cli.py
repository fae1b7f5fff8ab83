"""Command-line entry point.

    alloylab <pipeline> --config cfg.toml [--out DIR] [--workers N] [--allow-invalid]
    alloylab report <run_dir> [--out DIR]

Pipelines: validate, classify, survey, spectral, moment, full.  Config files
are TOML or JSON (auto-detected).  Exit codes: 0 success, 2 invalid config,
3 completed with more than 10% of samples quarantined, 1 other failure.
The ALLOYLAB_WORKERS environment variable sets the default worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .lab import PIPELINES, ConfigError, ReportError, load_config, report, run


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("ALLOYLAB_WORKERS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alloylab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in PIPELINES:
        p = sub.add_parser(name, help=f"run the {name} pipeline")
        p.add_argument("--config", required=True, help="TOML or JSON config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--workers", type=int, default=_default_workers())
        p.add_argument(
            "--allow-invalid",
            action="store_true",
            help="proceed even when assumption validation fails",
        )
    p = sub.add_parser("report", help="summarize a completed run directory")
    p.add_argument("run_dir")
    p.add_argument("--out", default=None, help="directory for report files")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            written = report(args.run_dir, out_dir=args.out)
            print(json.dumps({"written": written}))
            return 0
        config = load_config(args.config, pipeline=args.command)
        manifest = run(
            config,
            out_dir=args.out,
            workers=args.workers,
            allow_invalid=args.allow_invalid,
        )
        print(
            json.dumps(
                {
                    "pipeline": manifest.pipeline,
                    "status": manifest.status,
                    "quarantined": len(manifest.quarantined),
                    "config_hash": manifest.config_hash,
                }
            )
        )
        return manifest.status
    except ConfigError as exc:
        print(json.dumps({"error": "invalid_config", "detail": str(exc)}), file=sys.stderr)
        return 2
    except ReportError as exc:
        print(json.dumps({"error": "missing_artifacts", "detail": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
