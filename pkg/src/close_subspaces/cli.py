"""Command-line entry point.

Exit codes: 0 success, 1 bad input (spec or data files), 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .bingham import SamplerStallError
from .dataio import DataFormatError, load_dataset, save_dataset
from .estimators import METHODS, estimate
from .harness import SpecError, SweepSpec, run_sweep, truth_for
from .model import ScenarioConfig, generate_data
from .selftest import run_selftest
from .stiefel import principal_angles, subspace_sq_distance

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="close-subspaces", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="run a Monte Carlo sweep and write the summary CSV")
    s.add_argument("--spec", required=True, help="JSON sweep specification")
    s.add_argument("--seed", type=_seed, help="override base.seed")
    s.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
    s.add_argument("--out", help="override output_path")

    e = sub.add_parser("estimate", help="run all estimators on a stored data set")
    e.add_argument("--data", required=True, help="data set descriptor (JSON)")
    e.add_argument("--seed", type=_seed, help="Gibbs seed (default: the data set's seed)")

    g = sub.add_parser("simulate", help="draw one data set and store it as text files")
    g.add_argument("--out", required=True, help="descriptor path to write (JSON)")
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--M", type=int, default=8)
    g.add_argument("--R", type=int, default=2)
    g.add_argument("--T", type=int, default=6)
    g.add_argument("--snr-db", type=float, default=0.0)
    g.add_argument("--kappa", type=float, default=40.0)
    g.add_argument("--angles", type=float, nargs="+", default=[10.0, 25.0])

    t = sub.add_parser("selftest", help="check core invariants at tiny dimensions")
    t.add_argument("--seed", type=_seed, default=0)
    return p


def _cmd_sweep(args) -> int:
    spec = SweepSpec.from_json(args.spec)
    if args.seed is not None:
        spec.base = spec.base.replace(seed=args.seed)
    if args.out:
        spec.output_path = args.out
    if args.threads < 1:
        raise SpecError("--threads: must be >= 1")
    rows = run_sweep(spec, threads=args.threads)
    print(f"wrote {len(rows)} rows to {spec.output_path}")
    return EXIT_OK


def _print_matrix(name, A):
    print(f"  {name}:")
    for row in A:
        print("    " + " ".join(f"{v: .6f}" for v in row))


def _cmd_estimate(args) -> int:
    data = load_dataset(args.data)
    seed = data.config.seed if args.seed is None else args.seed
    rng = np.random.default_rng(seed)
    for method in METHODS:
        est = estimate(method, data, rng)
        theta = np.rad2deg(principal_angles(est.H_hat[0], est.H_hat[1]))
        print(f"[{method}]")
        print("  angles_deg: " + " ".join(f"{a:.2f}" for a in theta))
        msd = [subspace_sq_distance(Hh, H) for Hh, H in zip(est.H_hat, data.H_true)]
        print("  msd_to_truth: " + " ".join(f"{d:.3e}" for d in msd))
        for k, Hh in enumerate(est.H_hat, start=1):
            _print_matrix(f"H{k}_hat", Hh)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    try:
        cfg = ScenarioConfig(
            M=args.M, R=args.R, T=args.T, snr_db=args.snr_db,
            kappa=[args.kappa], true_angles=args.angles, seed=args.seed,
        )
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    truth = truth_for(cfg)
    data = generate_data(cfg, truth, np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,))))
    path = save_dataset(data, args.out)
    print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "estimate":
            return _cmd_estimate(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return EXIT_OK if run_selftest(args.seed) else EXIT_NUMERIC
    except (SpecError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SamplerStallError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
