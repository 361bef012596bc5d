"""Truncated approximation P_approx, its fidelity, and parameter sweeps."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import curve_fit

from .config import ExperimentConfig, config_hash
from .model import haar_random_unitary
from .pnr import GBSModel, as_pattern, enumerate_subpatterns, model_for
from .sampler import DEFAULT_TRUNCATION, EmpiricalDistribution, estimate_p_sim

CSV_HEADER = ["eta_ind", "N_cut", "epsilon", "pattern", "F", "haar_seed", "runtime_ms"]


class FidelityError(ValueError):
    """Fidelity is undefined (zero reference probability)."""


@dataclass(frozen=True)
class FidelityRecord:
    eta_ind: float
    N_cut: int
    epsilon: float
    pattern: tuple
    F: float
    haar_seed: int
    runtime_ms: float | None = None

    def csv_row(self) -> list[str]:
        return [
            repr(float(self.eta_ind)),
            str(self.N_cut),
            repr(float(self.epsilon)),
            " ".join(map(str, self.pattern)),
            f"{self.F:.17g}",
            str(self.haar_seed),
            "" if self.runtime_ms is None else f"{self.runtime_ms:.3f}",
        ]


def _dis_lookup(cfg, p_sim):
    if isinstance(p_sim, EmpiricalDistribution):
        if p_sim.config_hash != config_hash(cfg):
            raise ValueError("P_sim was built for a different configuration")
        return p_sim.prob
    if callable(p_sim):
        return p_sim
    raise TypeError("p_sim must be an EmpiricalDistribution or a callable pattern -> probability")


def p_terms(cfg, T, s, p_sim, n_max: int | None = None) -> np.ndarray:
    """P_n for n = 0..n_max: contributions with exactly n indistinguishable photons."""
    gm = model_for(cfg, T)
    s = as_pattern(s, cfg.K)
    lookup = _dis_lookup(cfg, p_sim)
    N = sum(s)
    if n_max is None:
        n_max = N
    if not 0 <= n_max <= N:
        raise ValueError(f"N_cut must lie in [0, {N}]")
    out = np.zeros(n_max + 1)
    for n in range(n_max + 1):
        acc = []
        for s0 in enumerate_subpatterns(s, n):
            pd = lookup(tuple(a - b for a, b in zip(s, s0)))
            if pd:
                acc.append(gm.prob_indistinguishable(s0) * pd)
        out[n] = math.fsum(acc)
    return out


def p_approx(cfg, T, s, n_cut: int, p_sim) -> float:
    """Sum of P_n up to n = n_cut, with P_dis replaced by ``p_sim``."""
    return math.fsum(p_terms(cfg, T, s, p_sim, n_cut))


def fidelity(cfg, T, s, epsilon: float, n_cut: int, *, p_sim=None, haar_seed: int = -1,
             exact_denominator: bool = False, t: float = DEFAULT_TRUNCATION,
             timing: bool = True) -> FidelityRecord:
    """F = P_approx(n_cut) / P, both built from the same P_sim unless ``exact_denominator``."""
    gm = model_for(cfg, T)
    s = as_pattern(s, cfg.K)
    if p_sim is None:
        p_sim = estimate_p_sim(cfg, gm, t=t, epsilon=epsilon, seed=cfg.seed)
    t0 = time.perf_counter()
    num = p_approx(cfg, gm, s, n_cut, p_sim)
    elapsed = (time.perf_counter() - t0) * 1e3
    if exact_denominator:
        if cfg.K > 4:
            raise ValueError("exact denominator is limited to K <= 4")
        den = gm.prob_total_exact(s)
    else:
        den = math.fsum(p_terms(cfg, gm, s, p_sim))
    if den <= 0:
        raise FidelityError(f"reference probability of {s} is zero; fidelity undefined")
    return FidelityRecord(cfg.eta_ind, n_cut, epsilon, s, num / den, haar_seed,
                          elapsed if timing else None)


def leading_ones(N: int, K: int) -> tuple[int, ...]:
    if not 0 <= N <= K:
        raise ValueError("need 0 <= N <= K")
    return (1,) * N + (0,) * (K - N)


def _grid_values(grid: dict, key: str, default):
    v = grid.get(key, default)
    return list(v) if isinstance(v, (list, tuple)) else [v]


def fidelity_sweep(grid: dict, n_haar: int | None = None, out_path=None, *,
                   timing: bool = False, threads: int = 1) -> list[FidelityRecord]:
    """Fidelity over eta_ind x pattern x Haar seed x N_cut, optionally written as CSV.

    ``grid`` holds the physical parameters (``K``, ``M``, ``r`` and ``eta_t``
    or the eta triple) plus lists ``eta_ind``, ``N_cut`` and ``N`` (photons of
    the leading-ones pattern) or ``patterns``.  Optional keys: ``epsilon``,
    ``n_samples``, ``haar_seed0``, ``seed``, ``trunc_factor``.  Rows follow
    that loop order.  One P_sim is shared by every pattern and N_cut of an (eta_ind, Haar seed).
    """
    K, M, r = grid["K"], grid["M"], float(grid["r"])
    base = {"eta_t": grid["eta_t"]} if "eta_t" in grid else {
        k: grid.get(k, 1.0) for k in ("eta_s", "eta_u", "eta_d")}
    if n_haar is None:
        n_haar = int(grid.get("n_haar", 10))
    epsilon = float(grid.get("epsilon", 1e-6))
    n_samples = grid.get("n_samples")
    seed = int(grid.get("seed", 0))
    haar0 = int(grid.get("haar_seed0", 0))
    t = float(grid.get("trunc_factor", DEFAULT_TRUNCATION))
    if "patterns" in grid:
        patterns = [as_pattern(p, K) for p in grid["patterns"]]
    else:
        patterns = [leading_ones(int(N), K) for N in _grid_values(grid, "N", 6)]
    n_cuts = [int(x) for x in _grid_values(grid, "N_cut", 3)]

    records = []
    for eta_ind in _grid_values(grid, "eta_ind", 0.9):
        if "eta_t" in base:
            cfg = ExperimentConfig.from_eta_t(K, M, r, float(base["eta_t"]),
                                              eta_ind=float(eta_ind), seed=seed)
        else:
            cfg = ExperimentConfig(K=K, M=M, r=r, eta_ind=float(eta_ind), seed=seed, **base)
        cache = {}
        for s in patterns:
            for h in range(haar0, haar0 + n_haar):
                if h not in cache:
                    gm = GBSModel(cfg, haar_random_unitary(K, h))
                    cache[h] = gm, estimate_p_sim(cfg, gm, t=t, epsilon=epsilon, seed=seed + h,
                                                  n_samples=n_samples, threads=threads)
                gm, p_sim = cache[h]
                den = math.fsum(p_terms(cfg, gm, s, p_sim))
                if den <= 0:
                    raise FidelityError(f"reference probability of {s} is zero (Haar seed {h})")
                for n_cut in n_cuts:
                    if n_cut > sum(s):
                        continue
                    t0 = time.perf_counter()
                    num = p_approx(cfg, gm, s, n_cut, p_sim)
                    ms = (time.perf_counter() - t0) * 1e3
                    records.append(FidelityRecord(cfg.eta_ind, n_cut, epsilon, s, num / den, h,
                                                  ms if timing else None))
    if out_path is not None:
        write_records(out_path, records)
    return records


def write_records(path, records) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rec in records:
            w.writerow(rec.csv_row())


def read_records(path) -> list[FidelityRecord]:
    out = []
    with Path(path).open() as fh:
        for row in csv.DictReader(fh):
            out.append(FidelityRecord(
                float(row["eta_ind"]), int(row["N_cut"]), float(row["epsilon"]),
                tuple(int(x) for x in row["pattern"].split()), float(row["F"]),
                int(row["haar_seed"]), float(row["runtime_ms"]) if row["runtime_ms"] else None,
            ))
    return out


def mean_fidelity(records, key=("eta_ind", "N_cut")) -> dict:
    groups: dict = {}
    for rec in records:
        k = tuple(getattr(rec, f) if f != "N" else sum(rec.pattern) for f in key)
        groups.setdefault(k, []).append(rec.F)
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}


def fit_one_minus_c_exp(eta, F) -> dict:
    """Least-squares c in F = 1 - c exp(eta); c is fitted, never supplied."""
    eta, F = np.asarray(eta, float), np.asarray(F, float)
    e = np.exp(eta)
    c = float(np.dot(1 - F, e) / np.dot(e, e))
    resid = float(np.sum((1 - F - c * e) ** 2))
    return {"c": c, "rss": resid}


def fit_linear(x, y) -> dict:
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sum((y - (intercept + slope * x)) ** 2))
    return {"slope": float(slope), "intercept": float(intercept), "rss": resid}


def fit_exponential_decay(x, y) -> dict:
    """y = A exp(-lam x), fitted by nonlinear least squares in the original scale."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    pos = y > 0
    lam0, logA0 = -np.polyfit(x[pos], np.log(y[pos]), 1)
    (A, lam), _ = curve_fit(lambda x, A, lam: A * np.exp(-lam * x), x, y,
                            p0=(math.exp(logA0), lam0), maxfev=20000)
    resid = float(np.sum((y - A * np.exp(-lam * x)) ** 2))
    return {"A": float(A), "lam": float(lam), "rss": resid}


def sweep_fits(records) -> dict:
    """Per-N_cut fits of mean F against eta_ind: 1 - c e^eta versus a straight line."""
    means = mean_fidelity(records, ("N_cut", "eta_ind"))
    out = {}
    for n_cut in sorted({k[0] for k in means}):
        pts = sorted((k[1], v) for k, v in means.items() if k[0] == n_cut)
        eta = [p[0] for p in pts]
        F = [p[1] for p in pts]
        entry = {"one_minus_c_exp": fit_one_minus_c_exp(eta, F)}
        if len(pts) >= 3:
            entry["linear"] = fit_linear(eta, F)
        out[n_cut] = entry
    return out

