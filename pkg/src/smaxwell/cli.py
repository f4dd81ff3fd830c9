"""Command line front-end.

    smaxwell solve  --config CFG.json --out DIR
    smaxwell verify --suite NAME [--samples N] [--seed S] [--out FILE]
    smaxwell norm   --field DUMP [--p P --q Q]

Exit codes: 0 success; 1 a verification check failed; 2 bad input
(invalid config, unknown suite, malformed dump); 3 the solver did not
converge or a residual threshold was missed (outputs are still written).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from . import verify
from .config import ConfigError, RunConfig, load_config
from .fieldio import FieldFormatError, read_field, write_field
from .fields import gradient
from .orlicz import (
    OrliczPair,
    lebesgue_norm,
    magnitudes,
    norm_bounds,
    norm_exact,
    omega_split_value,
)
from .outer import mountain_pass
from .seeds import seed_form

EXIT_OK, EXIT_CHECK_FAILED, EXIT_BAD_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2, 3

log = logging.getLogger("smaxwell")


def bundled(name: str) -> Path:
    """Path of a file shipped in ``smaxwell/data``."""
    return Path(str(resources.files("smaxwell") / "data" / name))


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def cmd_solve(config: str, out: str | None) -> int:
    try:
        cfg = load_config(config)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    out = out or cfg.output
    if not out:
        print("invalid config: no output directory (use --out or the 'output' key)", file=sys.stderr)
        return EXIT_BAD_INPUT
    outdir = Path(out)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"invalid config: cannot create {outdir}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    return run_solve(cfg, outdir)


def run_solve(cfg: RunConfig, outdir: Path) -> int:
    seed = seed_form(cfg.grid, cfg.seed)
    rep = mountain_pass(seed, cfg.params, cfg.inner, cfg.outer)
    report = rep.to_dict()
    report["config"] = cfg.to_dict()
    report["rng_seed"] = cfg.rng_seed
    (outdir / "report.json").write_text(json.dumps(report, sort_keys=True, indent=1) + "\n")
    (outdir / "trace.csv").write_text(rep.trace.to_csv())
    write_field(outdir / "u.bin", rep.u)
    write_field(outdir / "w.bin", rep.w)
    write_field(outdir / "A.bin", rep.u + gradient(rep.w))
    flags = report["flags"]
    print(f"J_hat={_fmt(rep.j_value)} grad_norm={_fmt(rep.grad_norm)} sweeps={rep.sweeps} "
          f"flags={','.join(flags) or 'none'}")
    return EXIT_OK if not flags else EXIT_NOT_CONVERGED


def cmd_verify(suite: str, samples: int | None, seed: int, out: str | None) -> int:
    if suite not in verify.SUITES:
        print(f"unknown suite {suite!r}; choose from {', '.join(verify.SUITES)}", file=sys.stderr)
        return EXIT_BAD_INPUT
    checks = verify.run_suite(suite, rng_seed=seed, samples=samples)
    text = verify.to_csv(checks)
    sys.stdout.write(text)
    if out:
        Path(out).write_text(text)
    failed = [c.name for c in checks if c.passed is False]
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_norm(path: str, p: float, q: float) -> int:
    try:
        pair = OrliczPair(p, q)
    except ValueError as exc:
        print(f"bad exponents: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        fld = read_field(path)
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except FieldFormatError as exc:
        print(f"malformed dump {path}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    lower, upper = norm_bounds(fld, pair)
    res = norm_exact(fld, pair)
    a, w = magnitudes(fld)
    om = a > 1
    print(f"{_fmt(lower)} {_fmt(res.value)} {_fmt(upper)}")
    stats = [
        ("omega_sites", int(om.sum())),
        ("omega_measure", _fmt(om.sum() * w)),
        ("lp_on_omega", _fmt(lebesgue_norm(a[om], w, pair.p))),
        ("lq_off_omega", _fmt(lebesgue_norm(a[~om], w, pair.q))),
        ("omega_split_value", _fmt(omega_split_value(fld, pair))),
        ("dual_certificate", _fmt(res.lower)),
        ("p_part_sites", int(((res.split.t > 0.5) & (a > 0)).sum())),
        ("log_kappa", _fmt(res.log_kappa)),
        ("converged", res.converged),
    ]
    for k, v in stats:
        print(f"{k} {v}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smaxwell", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="run the mountain-pass solver")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    v = sub.add_parser("verify", help="run a certification suite, CSV to stdout")
    v.add_argument("--suite", required=True)
    v.add_argument("--samples", type=int)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    n = sub.add_parser("norm", help="L^p + L^q norm of a field dump")
    n.add_argument("--field", required=True)
    n.add_argument("--p", type=float, default=3.0)
    n.add_argument("--q", type=float, default=6.0)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if args.command == "solve":
        return cmd_solve(args.config, args.out)
    if args.command == "verify":
        return cmd_verify(args.suite, args.samples, args.seed, args.out)
    return cmd_norm(args.field, args.p, args.q)


if __name__ == "__main__":
    sys.exit(main())
