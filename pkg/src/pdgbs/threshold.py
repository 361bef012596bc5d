"""Click probabilities for threshold detectors.

Ports are 0-based here.  A click pattern U is the set of ports that fired;
every other port stayed dark.
"""

from __future__ import annotations

import math

import numpy as np

from .matfunc import det_pd, gray_code_subsets, logdet_pd, torontonian
from .model import port_indices
from .pnr import GBSModel, model_for


def as_click_pattern(U, K: int) -> tuple[int, ...]:
    out = tuple(sorted(set(int(u) for u in U)))
    if any(not 0 <= u < K for u in out):
        raise ValueError(f"click ports must lie in [0, {K})")
    return out


def marginal_noclick_indist(cfg, T, R) -> float:
    """Probability that the indistinguishable mode leaves every port in R dark."""
    gm = model_for(cfg, T)
    R = as_click_pattern(R, cfg.K)
    if not R:
        return 1.0
    idx = port_indices(R, cfg.K)
    return 1.0 / math.sqrt(det_pd(gm.q0[np.ix_(idx, idx)], cfg.tol))


def marginal_noclick_virtual(cfg, T, m: int, R) -> float:
    """Same for virtual mode m, through the port set's total transmission."""
    gm = model_for(cfg, T)
    if not 1 <= m <= cfg.M:
        raise ValueError(f"virtual mode index must lie in [1, {cfg.M}]")
    R = as_click_pattern(R, cfg.K)
    tr = float(gm.weights[list(R), m - 1].sum()) if R else 0.0
    a, b = gm.co.alpha_d, gm.co.beta_d
    return 1.0 / math.sqrt((1 + tr * a) ** 2 - (tr * b) ** 2)


def _log_noclick_all_modes(gm: GBSModel, R: tuple) -> float:
    if not R:
        return 0.0
    idx = port_indices(R, gm.cfg.K)
    out = -0.5 * logdet_pd(gm.q0[np.ix_(idx, idx)], gm.cfg.tol)
    a, b = gm.co.alpha_d, gm.co.beta_d
    if a == 0 and b == 0:
        return out
    tr = gm.weights[list(R), :].sum(axis=0)
    return out - 0.5 * float(np.sum(np.log((1 + tr * a) ** 2 - (tr * b) ** 2)))


def prob_threshold(cfg, T, U) -> float:
    """Inclusion-exclusion over no-click marginals of all M+1 modes."""
    gm = model_for(cfg, T)
    K = cfg.K
    U = as_click_pattern(U, K)
    everything = set(range(K))
    terms = []
    for V in gray_code_subsets(U):
        R = tuple(sorted(everything.difference(V)))
        sign = -1.0 if (len(U) - len(V)) % 2 else 1.0
        terms.append(sign * math.exp(_log_noclick_all_modes(gm, R)))
    return math.fsum(terms)


def prob_threshold_ideal(cfg, T, U) -> float:
    """Torontonian of mode 0 over sqrt(det Q); equals ``prob_threshold`` when eta_ind = 1."""
    gm = model_for(cfg, T)
    U = as_click_pattern(U, cfg.K)
    return torontonian(gm.q0, U, cfg.tol) / gm.sqrt_det_q0
