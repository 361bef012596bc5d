"""Output-pattern probabilities for photon-number-resolving detectors."""

from __future__ import annotations

import itertools
import math
from functools import cached_property

import numpy as np

from . import model
from .config import ExperimentConfig
from .matfunc import det_pd, g_over_factorial, hafnian

DECOMPOSITION_GUARD = 10**6


class GuardError(RuntimeError):
    """An exact enumeration would exceed its configured size guard."""


def as_pattern(s, K: int | None = None) -> tuple[int, ...]:
    out = tuple(int(x) for x in s)
    if any(x < 0 for x in out):
        raise ValueError("pattern counts must be nonnegative")
    if K is not None and len(out) != K:
        raise ValueError(f"pattern must have length {K}, got {len(out)}")
    return out


def log_factorial(n: int) -> float:
    if n <= 20:
        return math.log(math.factorial(n))
    return math.lgamma(n + 1)


def factorial_product(s) -> float:
    if max(s, default=0) <= 20:
        return float(math.prod(math.factorial(x) for x in s))
    return math.exp(sum(log_factorial(x) for x in s))


class GBSModel:
    """Matrices and scalars of one (config, interferometer) pair, computed once."""

    def __init__(self, cfg: ExperimentConfig, T):
        self.cfg = cfg
        self.T = model._as_matrix(T)
        if self.T.shape != (cfg.K, cfg.K):
            raise ValueError(f"interferometer must be {cfg.K}x{cfg.K}")
        self.co = model.coefficients(cfg)
        self.weights = np.abs(self.T[:, : cfg.M]) ** 2  # column m: port weights of input m

    @cached_property
    def kernel0(self) -> np.ndarray:
        return model.kernel_matrix(self.cfg, self.T, 0)

    @cached_property
    def q0(self) -> np.ndarray:
        return model.q_matrix(self.cfg, self.T, 0)

    @cached_property
    def sqrt_det_q0(self) -> float:
        return math.sqrt(det_pd(self.q0, self.cfg.tol))

    @cached_property
    def sqrt_det_qm(self) -> float:
        a, b = self.co.alpha_d, self.co.beta_d
        return math.sqrt((1 + a) ** 2 - b**2)

    def photon_number_prob(self, n: int) -> float:
        """Probability that one virtual mode holds n photons (untruncated)."""
        return g_over_factorial(n, self.co.alpha_d_p, self.co.beta_d_p) / self.sqrt_det_qm

    def g_scaled(self, n: int) -> float:
        """G(n) / sqrt(det Q^(m)), the pattern-independent factor of one virtual mode."""
        return self.photon_number_prob(n) * math.exp(log_factorial(n))

    def prob_indistinguishable(self, s0) -> float:
        s0 = as_pattern(s0, self.cfg.K)
        if sum(s0) == 0:
            return 1.0 / self.sqrt_det_q0
        tol = self.cfg.tol
        haf = hafnian(model.select_by_pattern(self.kernel0, s0), tol)
        if abs(haf.imag) > tol * max(1.0, abs(haf.real)):
            raise ArithmeticError(f"Hafnian has imaginary residue {haf.imag:.3e}")
        p = haf.real / (factorial_product(s0) * self.sqrt_det_q0)
        if p < -tol:
            raise ArithmeticError(f"negative probability {p:.3e}")
        return max(p, 0.0)

    def prob_virtual(self, m: int, sm) -> float:
        if not 1 <= m <= self.cfg.M:
            raise ValueError(f"virtual mode index must lie in [1, {self.cfg.M}]")
        sm = as_pattern(sm, self.cfg.K)
        N = sum(sm)
        return self.photon_number_prob(N) * _multinomial_pmf(sm, self.weights[:, m - 1])

    def prob_dist_exact(self, s_dis, guard: int = DECOMPOSITION_GUARD) -> float:
        s_dis = as_pattern(s_dis, self.cfg.K)
        M = self.cfg.M
        n_terms = math.prod(math.comb(M - 1 + x, x) for x in s_dis)
        if n_terms > guard:
            raise GuardError(
                f"{n_terms} decompositions exceed the guard of {guard}; use the sampler"
            )
        return _dist_sum_dp(self, s_dis)

    def prob_total_exact(self, s, guard: int = DECOMPOSITION_GUARD) -> float:
        s = as_pattern(s, self.cfg.K)
        terms = []
        for n in range(sum(s) + 1):
            for s0 in enumerate_subpatterns(s, n):
                p0 = self.prob_indistinguishable(s0)
                if p0 == 0.0:
                    continue
                rest = tuple(a - b for a, b in zip(s, s0))
                terms.append(p0 * self.prob_dist_exact(rest, guard))
        return math.fsum(terms)


def _multinomial_pmf(s, w) -> float:
    N = sum(s)
    logp = log_factorial(N)
    for k, x in enumerate(s):
        if x == 0:
            continue
        if w[k] == 0:
            return 0.0
        logp += x * math.log(w[k]) - log_factorial(x)
    return math.exp(logp)


def _dist_sum_dp(gm: GBSModel, s_dis) -> float:
    """Exact sum over decompositions of s_dis into M virtual-mode patterns.

    The port factors |T_km|^(2 s_km) / s_km! multiply across ports, so ports
    are folded in one at a time keyed by the running per-mode photon totals;
    the G(N_m) factors are applied once the totals are final.
    """
    M = gm.cfg.M
    w = gm.weights
    states = {(0,) * M: 1.0}
    for k, x in enumerate(s_dis):
        if x == 0:
            continue
        new: dict[tuple, float] = {}
        for comp in compositions(x, M):
            f = 1.0
            for m, c in enumerate(comp):
                if c:
                    f *= w[k, m] ** c / math.factorial(c)
            if f == 0.0:
                continue
            for key, val in states.items():
                nk = tuple(a + b for a, b in zip(key, comp))
                new[nk] = new.get(nk, 0.0) + val * f
        states = new
    terms = []
    for totals, val in states.items():
        g = 1.0
        for n in totals:
            g *= gm.g_scaled(n)
        terms.append(val * g)
    return math.fsum(terms)


def prob_dist_enumerated(gm: GBSModel, s_dis) -> float:
    """Term-by-term sum over every decomposition (reference path for tests)."""
    s_dis = as_pattern(s_dis, gm.cfg.K)
    M = gm.cfg.M
    per_port = [list(compositions(x, M)) for x in s_dis]
    terms = []
    for choice in itertools.product(*per_port):
        p = 1.0
        for m in range(M):
            p *= gm.prob_virtual(m + 1, [c[m] for c in choice])
        terms.append(p)
    return math.fsum(terms)


def compositions(n: int, parts: int):
    """All tuples of ``parts`` nonnegative integers summing to n."""
    if parts == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in compositions(n - first, parts - 1):
            yield (first,) + rest


def enumerate_subpatterns(s, n: int) -> list[tuple[int, ...]]:
    """Patterns s0 <= s componentwise with n photons, in lexicographic order."""
    s = as_pattern(s)
    if not 0 <= n <= sum(s):
        raise ValueError(f"n must lie in [0, {sum(s)}], got {n}")
    out: list[tuple[int, ...]] = []
    suffix = np.cumsum(s[::-1])[::-1].tolist() + [0]

    def rec(k, left, prefix):
        if k == len(s):
            if left == 0:
                out.append(tuple(prefix))
            return
        lo = max(0, left - suffix[k + 1])
        for x in range(lo, min(s[k], left) + 1):
            prefix.append(x)
            rec(k + 1, left - x, prefix)
            prefix.pop()

    rec(0, n, [])
    return out


def model_for(cfg, T) -> GBSModel:
    """Reuse ``T`` if it is already a model for ``cfg``."""
    if isinstance(T, GBSModel) and T.cfg == cfg:
        return T
    return GBSModel(cfg, getattr(T, "T", T))


def prob_indistinguishable(cfg, T, s0) -> float:
    return model_for(cfg, T).prob_indistinguishable(s0)


def prob_virtual(cfg, T, m: int, sm) -> float:
    return model_for(cfg, T).prob_virtual(m, sm)


def prob_dist_exact(cfg, T, s_dis, guard: int = DECOMPOSITION_GUARD) -> float:
    return model_for(cfg, T).prob_dist_exact(s_dis, guard)


def prob_total_exact(cfg, T, s, guard: int = DECOMPOSITION_GUARD) -> float:
    return model_for(cfg, T).prob_total_exact(s, guard)
