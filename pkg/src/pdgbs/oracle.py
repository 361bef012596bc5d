"""Brute-force Fock-basis reference for tiny instances.

Shares no code with the Gaussian engine.  Each squeezed input is expanded in
the Fock basis and pushed through the linear network

    input m --loss splitter--> (a_m, loss ancilla)
    a_m --distinguishability splitter (cos^2 = eta_ind)--> (a_m, b^(m)_m)
    a sector --T-->, each b^(m) sector --T-->   (independent copies)

by substituting the network's action on creation operators.  The state
vector lives on K + M*K + M modes.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np
from scipy.signal import convolve
from scipy.special import gammaln

ORACLE_MAX_K = 2
ORACLE_MAX_M = 1
TAIL_LIMIT = 1e-6


class OracleGuardError(RuntimeError):
    pass


def squeezed_number_law(r: float, n_pairs: int) -> np.ndarray:
    """P(2n) for n = 0..n_pairs of single-mode squeezed vacuum."""
    n = np.arange(n_pairs + 1)
    t2 = math.tanh(r) ** 2
    logp = gammaln(2 * n + 1) - 2 * gammaln(n + 1) - n * math.log(4) - math.log(math.cosh(r))
    if t2 > 0:
        logp = logp + n * math.log(t2)
        return np.exp(logp)
    return (n == 0).astype(float)


def default_cutoff(r: float, tail: float = 1e-11) -> int:
    """Smallest even photon cutoff per input whose squeezed-vacuum tail is below ``tail``."""
    floor = 2 * math.ceil(math.sinh(r) ** 2) + 4
    if r == 0:
        return floor
    n = 1
    while 1.0 - squeezed_number_law(r, n).sum() >= tail:
        n += 1
    return max(floor, 2 * n)


def _input_polynomials(u: np.ndarray, env: float, r: float, n_pairs: int) -> np.ndarray:
    """Creation-operator polynomial coefficients of one squeezed input.

    The input's creation operator maps to sum_j u_j c_j^+ + env e^+, where e
    is a private traced mode.  Returns P[e_occ, k_1, ..., k_L]: the
    coefficient of (e^+)^e_occ prod_j (c_j^+)^k_j, zero beyond 2*n_pairs photons.
    """
    L = u.size
    c = 2 * n_pairs
    grids = np.indices((c + 1,) * (L + 1)).reshape(L + 1, -1)
    e, k = grids[0], grids[1:]
    total = e + k.sum(axis=0)
    ok = (total % 2 == 0) & (total <= c)
    amps = np.concatenate([[env], u])
    occ = np.vstack([e, k])
    for j, a in enumerate(amps):
        if a == 0:
            ok &= occ[j] == 0
    n = total // 2
    th = math.tanh(r)
    if th == 0:
        ok &= n == 0
    out = np.zeros(grids.shape[1], dtype=complex)
    idx = np.flatnonzero(ok)
    n, occ = n[idx], occ[:, idx]
    # squeezed vacuum: sum_n tanh^n / (2^n n! sqrt(cosh r)) (a^+)^(2n) |0>, expanded multinomially
    logmag = (
        -n * math.log(2) - gammaln(n + 1) - 0.5 * math.log(math.cosh(r))
        + gammaln(2 * n + 1) - gammaln(occ + 1).sum(axis=0)
    )
    if th > 0:
        logmag = logmag + n * math.log(th)
    phase = np.ones(idx.size, dtype=complex)
    for j, a in enumerate(amps):
        if a != 0:
            logmag = logmag + occ[j] * math.log(abs(a))
            phase *= np.exp(1j * np.angle(a)) ** occ[j]
    out[idx] = np.exp(logmag) * phase
    return out.reshape((c + 1,) * (L + 1))


def _kept_mode_probabilities(kept_vecs, env_amps, r: float, n_pairs: int) -> np.ndarray:
    """Occupation probabilities of the kept modes with every private traced mode summed out."""
    polys = [_input_polynomials(u, e, r, n_pairs) for u, e in zip(kept_vecs, env_amps)]
    c = 2 * n_pairs
    L = kept_vecs[0].size
    e_fact = gammaln(np.arange(c + 1) + 1)
    shape = (len(polys) * c + 1,) * L
    acc = np.zeros(shape)
    for e_occ in np.ndindex(*(c + 1,) * len(polys)):
        coeff = polys[0][e_occ[0]]
        if not coeff.any():
            continue
        for P, e in zip(polys[1:], e_occ[1:]):
            if not P[e].any():
                coeff = None
                break
            coeff = convolve(coeff, P[e], method="direct")
        if coeff is None:
            continue
        w = math.exp(sum(e_fact[e] for e in e_occ))
        acc[tuple(slice(0, d) for d in coeff.shape)] += np.abs(coeff) ** 2 * w
    # |coefficient|^2 times prod_j k_j! is the Fock probability
    k = np.indices(shape)
    return acc * np.exp(gammaln(k + 1).sum(axis=0))


def _network_vectors(K, M, eta_t, eta_ind, T) -> list[np.ndarray]:
    """Image of each input's creation operator over the output modes.

    Mode layout: a_1..a_K, then b^(m)_1..b^(m)_K for each m, then one loss
    ancilla per input.
    """
    n_modes = K + M * K + M
    ca, sa = math.sqrt(eta_ind), math.sqrt(1 - eta_ind)
    vecs = []
    for m in range(M):
        u = np.zeros(n_modes, dtype=complex)
        u[:K] = math.sqrt(eta_t) * ca * T[:, m]
        u[K + m * K : K + (m + 1) * K] = math.sqrt(eta_t) * sa * T[:, m]
        u[K + M * K + m] = math.sqrt(1 - eta_t)
        vecs.append(u)
    return vecs


def _restrict(vecs, keep):
    """Kept-mode amplitudes per input; the traced remainder of each input folds into one mode.

    Tracing a set of modes is invariant under any unitary among them, so an
    input's traced partners are equivalent to a single mode carrying the
    remaining norm.
    """
    kept = [u[keep] for u in vecs]
    env = [math.sqrt(max(0.0, 1.0 - float(np.sum(np.abs(k) ** 2)))) for k in kept]
    return kept, env


def fock_pnr_distribution(cfg, T, cutoff: int | None = None, *, correlated: bool = False,
                          max_K: int = ORACLE_MAX_K, max_M: int = ORACLE_MAX_M) -> dict:
    """Joint PNR distribution over the K output ports.

    By default every mode sector (indistinguishable, then each virtual mode)
    is reduced to its own marginal state and the sectors add independently to
    each port's count.  ``correlated=True`` keeps the joint state of all
    splitter outputs instead; the two agree only when eta_ind is 0 or 1.
    """
    T = np.asarray(getattr(T, "T", T), dtype=complex)
    K, M = cfg.K, cfg.M
    if K > max_K or M > max_M:
        raise OracleGuardError(f"oracle limited to K <= {max_K}, M <= {max_M}")
    if cutoff is None:
        cutoff = default_cutoff(cfg.r)
    if cutoff < 2 * math.ceil(math.sinh(cfg.r) ** 2) + 4:
        raise OracleGuardError("cutoff below 2*ceil(sinh^2 r) + 4")
    n_pairs = cutoff // 2
    tail = M * (1.0 - squeezed_number_law(cfg.r, n_pairs).sum())
    if tail > TAIL_LIMIT:
        raise OracleGuardError(f"tail mass {tail:.2e} above {TAIL_LIMIT:g} at cutoff {cutoff}")

    vecs = _network_vectors(K, M, cfg.eta_t, cfg.eta_ind, T)
    if correlated:
        keep = np.arange(K + M * K)
        kept, env = _restrict(vecs, keep)
        probs = _kept_mode_probabilities(kept, env, cfg.r, n_pairs)
        occ = np.array(np.nonzero(probs))
        ports = sum(occ[s * K : (s + 1) * K] for s in range(M + 1))
        joint = np.zeros(tuple(ports.max(axis=1) + 1))
        np.add.at(joint, tuple(ports), probs[tuple(occ)])
    else:
        joint = None
        for sector in range(M + 1):
            keep = np.arange(sector * K, (sector + 1) * K)
            feeding = [u for u in vecs if np.any(np.abs(u[keep]) > 0)]
            if not feeding:
                continue
            arr = _kept_mode_probabilities(*_restrict(feeding, keep), cfg.r, n_pairs)
            joint = arr if joint is None else convolve(joint, arr, method="direct")
        if joint is None:
            joint = np.ones((1,) * K)

    out = {}
    for idx in zip(*np.nonzero(joint)):
        out[tuple(int(i) for i in idx)] = float(joint[idx])
    return out


def threshold_from_pnr(dist: dict, tail_limit: float = TAIL_LIMIT) -> dict:
    """Aggregate PNR probabilities by their set of clicked ports (0-based, sorted)."""
    total = math.fsum(dist.values())
    if 1.0 - total > tail_limit:
        raise OracleGuardError(f"input distribution misses {1 - total:.2e} probability mass")
    groups: dict = defaultdict(list)
    for s, p in dist.items():
        groups[tuple(k for k, x in enumerate(s) if x > 0)].append(p)
    return {U: math.fsum(ps) for U, ps in sorted(groups.items())}
