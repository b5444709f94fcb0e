"""``landscape-probe <experiment> [options]``: run one seeded experiment and emit JSON/CSV."""
from __future__ import annotations

import argparse
import json
import sys

from .harness import EXPERIMENTS, ExperimentConfig, run, write_outputs


def _grid(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="landscape-probe", description=__doc__)
    p.add_argument("experiment", choices=sorted(EXPERIMENTS))
    p.add_argument("--config", help="JSON config file; command-line flags override it")
    p.add_argument("--arch", help='layer widths, optionally with activation, e.g. "2,4,3:sigmoid"')
    p.add_argument("--activation", choices=["linear", "sigmoid"])
    p.add_argument("--radius", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--inputs", choices=["rademacher", "gaussian"])
    p.add_argument("--n", type=int)
    p.add_argument("--n-grid", type=_grid, help="comma-separated sample sizes")
    p.add_argument("--trials", type=int)
    p.add_argument("--probes", type=int)
    p.add_argument("--ascent-steps", type=int)
    p.add_argument("--quantity", choices=["loss", "grad", "hess"])
    p.add_argument("--seed", type=int)
    p.add_argument("--sweep", help="bounds only: n=LO..HI:geometric")
    p.add_argument("--set", action="append", default=[], metavar="KEY=JSON",
                   help="override a params/thresholds/constants entry, e.g. thresholds.slope_min=-0.7")
    p.add_argument("--out", help="JSON result path")
    p.add_argument("--csv", help="CSV path for tabular experiments")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    over = {"radius": args.radius, "tau": args.tau, "inputs": args.inputs, "n": args.n,
            "n_grid": args.n_grid, "trials": args.trials, "probes": args.probes,
            "ascent_steps": args.ascent_steps, "quantity": args.quantity, "seed": args.seed}
    arch = args.arch
    if args.activation:
        arch = (arch or "").partition(":")[0] or None
        if arch is None:
            base = ExperimentConfig.for_experiment(args.experiment)
            arch = base.arch.partition(":")[0]
        arch = f"{arch}:{args.activation}"
    over["arch"] = arch
    nested: dict[str, dict] = {"params": {}, "thresholds": {}, "constants": {}}
    if args.sweep:
        nested["params"]["sweep"] = args.sweep
    for item in args.set:
        key, _, raw = item.partition("=")
        group, _, name = key.partition(".")
        if group not in nested or not name:
            raise SystemExit(f"--set expects params.X, thresholds.X or constants.X, got {key!r}")
        nested[group][name] = json.loads(raw)
    over.update({k: v for k, v in nested.items() if v})
    if args.config:
        return ExperimentConfig.from_file(args.config, experiment=args.experiment, **over)
    return ExperimentConfig.for_experiment(args.experiment, **over)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args).validate()
    except ValueError as exc:
        print(f"landscape-probe: invalid config: {exc}", file=sys.stderr)
        return 2
    doc = run(cfg)
    write_outputs(doc, args.out, args.csv)
    status = "PASS" if doc["pass"] else "FAIL"
    checks = ", ".join(f"{k}={'ok' if v else 'FAILED'}" for k, v in doc["assertions"].items())
    print(f"{cfg.experiment}: {status} ({checks}) in {doc['runtime_s']:.2f}s "
          f"[result {doc['result_hash'][:12]}]")
    return 0 if doc["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
