"""Command-line interface: ``pdgbs <command> --config cfg.json ...``.

Ports on the command line are 1-based; the library uses 0-based indices.
Results go to stdout with 17 significant digits; timings go to stderr so that
stdout is byte-identical across reruns.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from .approx import CSV_HEADER, FidelityError, fidelity_sweep, p_approx, p_terms
from .config import ConfigError, config_hash, load_config
from .model import Interferometer, haar_random_unitary
from .oracle import OracleGuardError, fock_pnr_distribution, threshold_from_pnr
from .pnr import GBSModel, GuardError, as_pattern, prob_total_exact
from .sampler import DEFAULT_TRUNCATION, draw_samples, estimate_p_sim, write_sample_dump
from .threshold import prob_threshold, prob_threshold_ideal

log = logging.getLogger("pdgbs")

EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_GUARD = 3
ORACLE_TOL = 1e-6


def fmt(x: float) -> str:
    return f"{x:.17g}"


def load_unitary(path) -> Interferometer:
    """Read ``{"real": [[...]], "imag": [[...]]}`` (``imag`` optional)."""
    try:
        data = json.loads(Path(path).read_text())
        T = np.asarray(data["real"], dtype=float) + 1j * np.asarray(data.get("imag", 0.0), dtype=float)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot read unitary from {path}: {exc}") from exc
    return Interferometer(T)


def _setup(args):
    cfg = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "eta_ind", None) is not None:
        changes["eta_ind"] = args.eta_ind
    if changes:
        try:
            cfg = cfg.replace(**changes)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
    if args.unitary is not None:
        T = load_unitary(args.unitary)
        if T.K != cfg.K:
            raise ConfigError(f"unitary is {T.K}x{T.K} but K = {cfg.K}")
    else:
        T = haar_random_unitary(cfg.K, cfg.seed)
    log.debug("config %s seed %d", config_hash(cfg), cfg.seed)
    return cfg, GBSModel(cfg, T)


def _ports(labels, K: int) -> tuple[int, ...]:
    ports = sorted(set(labels))
    if any(p < 1 or p > K for p in ports):
        raise ConfigError(f"port labels must lie in 1..{K}")
    return tuple(p - 1 for p in ports)


def _report_time(t0: float, threads: int) -> None:
    print(f"elapsed_ms={(time.perf_counter() - t0) * 1e3:.3f} threads={threads}", file=sys.stderr)


def cmd_prob_pnr(args) -> int:
    cfg, gm = _setup(args)
    try:
        s = as_pattern(args.pattern, cfg.K)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    t0 = time.perf_counter()
    label = " ".join(map(str, s))
    if args.ncut is None:
        p = prob_total_exact(cfg, gm, s)
        print("pattern,P")
        print(f"{label},{fmt(p)}")
    else:
        p_sim = estimate_p_sim(cfg, gm, t=args.trunc_factor, epsilon=args.epsilon,
                               threads=args.threads)
        p = p_approx(cfg, gm, s, args.ncut, p_sim)
        ref = math.fsum(p_terms(cfg, gm, s, p_sim))
        print("pattern,N_cut,epsilon,P_approx,P_sim_total")
        print(f"{label},{args.ncut},{fmt(args.epsilon)},{fmt(p)},{fmt(ref)}")
    _report_time(t0, args.threads)
    return 0


def cmd_prob_threshold(args) -> int:
    cfg, gm = _setup(args)
    U = _ports(args.clicked, cfg.K)
    t0 = time.perf_counter()
    p = prob_threshold_ideal(cfg, gm, U) if args.ideal else prob_threshold(cfg, gm, U)
    print("clicked,P")
    print(f"{' '.join(str(u + 1) for u in U)},{fmt(p)}")
    _report_time(t0, args.threads)
    return 0


def cmd_sample(args) -> int:
    cfg, gm = _setup(args)
    if args.out is None:
        raise ConfigError("sample needs --out")
    t0 = time.perf_counter()
    samples = draw_samples(cfg, gm, args.n_samples, cfg.seed, t=args.trunc_factor,
                           threads=args.threads)
    write_sample_dump(args.out, samples, cfg, cfg.seed)
    means = samples.mean(axis=0) if len(samples) else np.zeros(cfg.K)
    print("port,mean_photons")
    for k, m in enumerate(means, start=1):
        print(f"{k},{fmt(float(m))}")
    _report_time(t0, args.threads)
    return 0


def cmd_fidelity_sweep(args) -> int:
    try:
        grid = json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read grid {args.config}: {exc}") from exc
    if not isinstance(grid, dict):
        raise ConfigError("grid must be a JSON object")
    if args.seed is not None:
        grid["seed"] = args.seed
    if args.epsilon is not None:
        grid["epsilon"] = args.epsilon
    if args.trunc_factor is not None:
        grid["trunc_factor"] = args.trunc_factor
    if args.ncut is not None:
        grid["N_cut"] = args.ncut
    t0 = time.perf_counter()
    try:
        records = fidelity_sweep(grid, out_path=args.out, timing=args.timing, threads=args.threads)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad grid: {exc}") from exc
    if args.out is None:
        print(",".join(CSV_HEADER))
        for rec in records:
            print(",".join(rec.csv_row()))
    else:
        print(f"wrote {len(records)} rows to {args.out}")
    _report_time(t0, args.threads)
    return 0


def cmd_oracle_check(args) -> int:
    cfg, gm = _setup(args)
    t0 = time.perf_counter()
    dist = fock_pnr_distribution(cfg, gm.T)
    worst_pnr = 0.0
    for N in range(args.max_photons + 1):
        for s in itertools.product(range(N + 1), repeat=cfg.K):
            if sum(s) != N:
                continue
            diff = abs(prob_total_exact(cfg, gm, s) - dist.get(s, 0.0))
            worst_pnr = max(worst_pnr, diff)
    clicks = threshold_from_pnr(dist)
    worst_thr = 0.0
    for r in range(cfg.K + 1):
        for U in itertools.combinations(range(cfg.K), r):
            diff = abs(prob_threshold(cfg, gm, U) - clicks.get(U, 0.0))
            worst_thr = max(worst_thr, diff)
    ok = True
    for name, worst in (("pnr", worst_pnr), ("threshold", worst_thr)):
        verdict = "PASS" if worst <= ORACLE_TOL else "FAIL"
        ok &= verdict == "PASS"
        print(f"{name},{verdict},max_abs_diff={fmt(worst)}")
    _report_time(t0, args.threads)
    return 0 if ok else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config (grid JSON for fidelity-sweep)")
    common.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--unitary", default=None,
                        help="JSON interferometer; default is Haar-random from the seed")
    common.add_argument("--eta-ind", type=float, default=None, help="overrides eta_ind")
    common.add_argument("--epsilon", type=float, default=None)
    common.add_argument("--trunc-factor", type=float, default=None)
    common.add_argument("--out", default=None)

    parser = argparse.ArgumentParser(prog="pdgbs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prob-pnr", parents=[common], help="PNR pattern probability")
    p.add_argument("pattern", type=int, nargs="+", help="photon count per port")
    p.add_argument("--ncut", type=int, default=None, help="approximate with this cutoff")
    p.set_defaults(func=cmd_prob_pnr)

    p = sub.add_parser("prob-threshold", parents=[common], help="threshold click probability")
    p.add_argument("clicked", type=int, nargs="*", help="1-based clicked ports")
    p.add_argument("--ideal", action="store_true", help="Torontonian path (ignores eta_ind)")
    p.set_defaults(func=cmd_prob_threshold)

    p = sub.add_parser("sample", parents=[common], help="sample distinguishable-photon patterns")
    p.add_argument("--n-samples", type=int, default=1000)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fidelity-sweep", parents=[common], help="fidelity grid to CSV")
    p.add_argument("--ncut", type=int, nargs="+", default=None)
    p.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    p.set_defaults(func=cmd_fidelity_sweep)

    p = sub.add_parser("oracle-check", parents=[common], help="compare with the Fock-space oracle")
    p.add_argument("--max-photons", type=int, default=4)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    level = getattr(logging, os.environ.get("GBS_LOG", "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command != "fidelity-sweep":
        if args.epsilon is None:
            args.epsilon = 1e-5
        if args.trunc_factor is None:
            args.trunc_factor = DEFAULT_TRUNCATION
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, FidelityError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GuardError, OracleGuardError) as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
