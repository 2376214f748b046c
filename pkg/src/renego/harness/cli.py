"""Command-line surface.

Subcommands: run-ftpl, run-matrix, run-bon, verify-theory, serve-bridge.
Each reads one JSON config document; --seed overrides the configured seed
list, --out the output directory, --jobs the worker count. verify-theory
exits nonzero when any theory assertion fails.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, default_config
from . import runner


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        return default_config()
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        config.run["seeds"] = [args.seed]
    return config


def _out_dir(args, config) -> Path:
    return Path(args.out) if args.out else Path(config.run.get("out_dir", "runs"))


def cmd_run_ftpl(args) -> int:
    config = _load_config(args)
    base_dir = Path(args.config).parent if args.config else Path(".")
    summary = runner.run_ftpl(config, _out_dir(args, config), base_dir)
    print(json.dumps(summary, sort_keys=True, indent=1))
    return 0


def cmd_run_matrix(args) -> int:
    config = _load_config(args)
    result = runner.run_matrix(config, _out_dir(args, config))
    print("personas:", ", ".join(result.personas))
    for name, row in zip(result.personas, result.aggregate):
        print(f"  {name:15s} " + " ".join(f"{x:6.3f}" for x in row))
    print("dominant row:", result.dominant_row or "none")
    return 0


def cmd_run_bon(args) -> int:
    config = _load_config(args)
    means = runner.run_matches(config, _out_dir(args, config), jobs=args.jobs)
    for seed, mean in sorted(means.items()):
        print(f"seed {seed}: mean normalized reward {mean:.4f}")
    return 0


def cmd_verify_theory(args) -> int:
    config = _load_config(args)
    summary = runner.verify_theory(config, _out_dir(args, config))
    for section in ("theorem", "prop1", "policy_iteration", "regret"):
        status = "pass" if summary[section]["pass"] else "FAIL"
        print(f"{section}: {status}")
    if not summary["pass"]:
        print("theory verification FAILED", file=sys.stderr)
        return 1
    return 0


def cmd_serve_bridge(args) -> int:
    from ..bridge import serve_provider

    config = _load_config(args)
    spec = config.build_spec()
    provider = config.build_provider("agent1", spec, config.run.get("seeds", [0])[0])
    server, url = serve_provider(provider, spec, host=args.host, port=args.port)
    print(f"bridge serving agent1 provider at {url} (POST /act /simulate /evaluate)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="renego",
        description="repeated negotiation games: simulation, learning, and exact verification")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None,
                       help="path to the JSON config document (defaults used if omitted)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured seed list with one seed")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="concurrent seed workers")

    p = sub.add_parser("run-ftpl", help="smooth fictitious play / FTPL experiments")
    common(p)
    p.set_defaults(fn=cmd_run_ftpl)

    p = sub.add_parser("run-matrix", help="pairwise persona tournament matrix")
    common(p)
    p.set_defaults(fn=cmd_run_matrix)

    p = sub.add_parser("run-bon", help="best-of-N agent versus the configured opponent")
    common(p)
    p.set_defaults(fn=cmd_run_bon)

    p = sub.add_parser("verify-theory", help="oracle sweeps; nonzero exit on failure")
    common(p)
    p.set_defaults(fn=cmd_verify_theory)

    p = sub.add_parser("serve-bridge", help="expose a configured provider over HTTP")
    common(p)
    p.add_argument("--host", type=str, default="127.0.0.1")
    p.add_argument("--port", type=int, default=8731)
    p.set_defaults(fn=cmd_serve_bridge)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
