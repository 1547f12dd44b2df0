"""Command line entry point: ``fracheat run | kernel | verify-all``.

Exit status is 0 when every verdict passes, 1 when some verdict fails and
2 on configuration or runtime errors.  Without ``--out`` the output root is
``output.dir`` from the config, then ``$FRACHEAT_OUT``, then ``./fracheat-runs``.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__, experiments, kernel
from .config import parse_config
from .errors import FracHeatError


def _print_verdicts(run_dir: Path, stream=None) -> bool:
    stream = sys.stdout if stream is None else stream
    ok = True
    for v in experiments.read_verdicts(run_dir):
        ok &= v["status"] == "PASS"
        print(f"  criterion {v['criterion']:>2}: {v['status']}  {v['requirement']}", file=stream)
    return ok


def _run_one(path: Path, out: str | None) -> tuple[bool, Path]:
    cfg = parse_config(path.read_text())
    start = time.perf_counter()
    run_dir = experiments.run_experiment(cfg, out)
    print(f"{path.name}: {cfg.experiment} -> {run_dir} ({time.perf_counter() - start:.1f} s)")
    return _print_verdicts(run_dir), run_dir


def cmd_run(args) -> int:
    path = Path(args.config)
    try:
        ok, _ = _run_one(path, args.out)
    except FracHeatError as exc:
        print(f"fracheat: {path}: {exc}", file=sys.stderr)
        return 2
    return 0 if ok else 1


def cmd_kernel(args) -> int:
    try:
        params = kernel.FracParams(args.n, args.s)
        prof = kernel.build_profile(params, args.quad_tol, args.r_max)
    except (ValueError, FracHeatError) as exc:
        print(f"fracheat: kernel n={args.n} s={args.s:g}: {exc}", file=sys.stderr)
        return 2
    root = experiments.output_root(args.out)
    root.mkdir(parents=True, exist_ok=True)
    path = root / f"profile_n{params.n}_s{params.s:g}.csv"
    kernel.save_profile(prof, path)
    print(f"F(0) = {prof.peak:.12g}, mass - 1 = {prof.mass() - 1.0:.3g}, "
          f"tail constant = {prof.c_tail:.6g}")
    print(f"wrote {path} and {kernel.meta_path(path)}")
    return 0


def cmd_verify_all(args) -> int:
    suite = Path(args.suite_dir)
    configs = sorted(suite.glob("*.cfg"))
    if not configs:
        print(f"fracheat: no *.cfg files in {suite}", file=sys.stderr)
        return 2
    failed, errored = [], []
    for path in configs:
        try:
            ok, _ = _run_one(path, args.out)
        except FracHeatError as exc:
            print(f"fracheat: {path}: {exc}", file=sys.stderr)
            errored.append(path.name)
            continue
        if not ok:
            failed.append(path.name)
    print(f"{len(configs)} configs, {len(failed)} with failing verdicts, {len(errored)} errors")
    if errored:
        return 2
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracheat",
                                     description="Fractional heat equation kernel and asymptotics experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("config", help="path to a key = value config file")
    run.add_argument("--out", help="output root (default: config output.dir, $FRACHEAT_OUT, ./fracheat-runs)")
    run.set_defaults(func=cmd_run)

    kern = sub.add_parser("kernel", help="build and save one profile table")
    kern.add_argument("--n", type=int, required=True, choices=(1, 2, 3))
    kern.add_argument("--s", type=float, required=True)
    kern.add_argument("--out", help="output directory")
    kern.add_argument("--r-max", type=float, default=kernel.DEFAULT_R_MAX)
    kern.add_argument("--quad-tol", type=float, default=kernel.DEFAULT_QUAD_TOL)
    kern.set_defaults(func=cmd_kernel)

    ver = sub.add_parser("verify-all", help="run every *.cfg in a suite directory")
    ver.add_argument("suite_dir")
    ver.add_argument("--out", help="output root for all runs")
    ver.set_defaults(func=cmd_verify_all)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
