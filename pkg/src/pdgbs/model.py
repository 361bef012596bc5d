"""Interferometers and the per-mode covariance, Q-function and kernel matrices.

Complex 2K x 2K matrices use the ordering (a_1..a_K, a_1^+..a_K^+).  Index 0
is the indistinguishable mode; indices 1..M are the virtual modes holding the
photons that became distinguishable at input port m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, ExperimentConfig


@dataclass(frozen=True)
class Interferometer:
    T: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        T = np.asarray(self.T, dtype=complex)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ConfigError(f"interferometer must be square, got shape {T.shape}")
        err = np.max(np.abs(T.conj().T @ T - np.eye(T.shape[0])))
        if err > self.tol:
            raise ConfigError(f"interferometer is not unitary (max |T^+T - I| = {err:.3e})")
        T.setflags(write=False)
        object.__setattr__(self, "T", T)

    @property
    def K(self) -> int:
        return self.T.shape[0]


def haar_random_unitary(K: int, seed: int) -> Interferometer:
    """Haar-distributed K x K unitary from the QR decomposition of a Ginibre matrix."""
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((K, K)) + 1j * rng.standard_normal((K, K))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return Interferometer(q)


def _as_matrix(T) -> np.ndarray:
    if isinstance(T, Interferometer):
        return T.T
    return np.asarray(T, dtype=complex)


@dataclass(frozen=True)
class ModeCoefficients:
    alpha_i: float
    beta_i: float
    alpha_d: float
    beta_d: float
    alpha_i_p: float
    beta_i_p: float
    alpha_d_p: float
    beta_d_p: float


def primed(alpha: float, beta: float) -> tuple[float, float]:
    """Coefficients of I - Q^{-1} for Q = I + [[a I, b I], [b I, a I]]."""
    den = (1 + alpha) ** 2 - beta**2
    return 1 - (1 + alpha) / den, beta / den


def coefficients(cfg: ExperimentConfig) -> ModeCoefficients:
    s, c = math.sinh(cfg.r), math.cosh(cfg.r)
    xi = cfg.eta_t * cfg.eta_ind
    xd = cfg.eta_t * (1 - cfg.eta_ind)
    # closed forms avoid cancellation in 1 - (1+a)/den
    den_i = 1 + xi * (2 - xi) * s * s
    den_d = 1 + xd * (2 - xd) * s * s
    return ModeCoefficients(
        alpha_i=xi * s * s,
        beta_i=xi * s * c,
        alpha_d=xd * s * s,
        beta_d=xd * s * c,
        alpha_i_p=xi * (1 - xi) * s * s / den_i,
        beta_i_p=xi * s * c / den_i,
        alpha_d_p=xd * (1 - xd) * s * s / den_d,
        beta_d_p=xd * s * c / den_d,
    )


def quadrature_variances(cfg: ExperimentConfig) -> dict[str, float]:
    """Squeezed/anti-squeezed quadrature variances of both mode families (vacuum = 1)."""
    xi = cfg.eta_t * cfg.eta_ind
    xd = cfg.eta_t * (1 - cfg.eta_ind)
    e2, em2 = math.exp(2 * cfg.r), math.exp(-2 * cfg.r)
    return {
        "X_ind": xi * e2 + 1 - xi,
        "Y_ind": xi * em2 + 1 - xi,
        "X_dis": xd * e2 + 1 - xd,
        "Y_dis": xd * em2 + 1 - xd,
    }


def build_real_covariances(cfg: ExperimentConfig) -> list[np.ndarray]:
    """Real xp-ordered input covariances for mode 0 and each virtual mode."""
    v = quadrature_variances(cfg)
    K, M = cfg.K, cfg.M
    V0 = np.eye(2 * K)
    for m in range(M):
        V0[2 * m, 2 * m] = v["X_ind"]
        V0[2 * m + 1, 2 * m + 1] = v["Y_ind"]
    out = [V0]
    for m in range(M):
        Vm = np.eye(2 * K)
        Vm[2 * m, 2 * m] = v["X_dis"]
        Vm[2 * m + 1, 2 * m + 1] = v["Y_dis"]
        out.append(Vm)
    return out


def mean_photons_from_covariance(V: np.ndarray) -> np.ndarray:
    """Per-port <a^+a> of a zero-mean state from its xp covariance."""
    d = np.diag(V)
    return (d[0::2] + d[1::2] - 2) / 4


def _check_mode(cfg: ExperimentConfig, mode: int):
    if not 0 <= mode <= cfg.M:
        raise ValueError(f"mode index must lie in [0, {cfg.M}], got {mode}")


def _mode0_blocks(cfg, T, a, b):
    K, M = cfg.K, cfg.M
    da = np.zeros(K)
    db = np.zeros(K)
    da[:M] = a
    db[:M] = b
    return (T * da) @ T.conj().T, (T * db) @ T.T


def q_matrix(cfg: ExperimentConfig, T, mode: int) -> np.ndarray:
    """Q-function covariance of mode ``mode`` after the interferometer."""
    _check_mode(cfg, mode)
    T = _as_matrix(T)
    K = cfg.K
    co = coefficients(cfg)
    if mode == 0:
        n_blk, m_blk = _mode0_blocks(cfg, T, co.alpha_i, co.beta_i)
    else:
        t = T[:, mode - 1]
        n_blk = co.alpha_d * np.outer(t, t.conj())
        m_blk = co.beta_d * np.outer(t, t)
    Q = np.eye(2 * K, dtype=complex)
    Q[:K, :K] += n_blk
    Q[:K, K:] += m_blk
    Q[K:, :K] += m_blk.conj()
    Q[K:, K:] += n_blk.conj()
    return Q


def kernel_matrix(cfg: ExperimentConfig, T, mode: int) -> np.ndarray:
    """Hafnian kernel A = X (I - Q^{-1}) of mode ``mode``, from the closed forms."""
    _check_mode(cfg, mode)
    T = _as_matrix(T)
    K = cfg.K
    co = coefficients(cfg)
    if mode == 0:
        n_blk, m_blk = _mode0_blocks(cfg, T, co.alpha_i_p, co.beta_i_p)
    else:
        t = T[:, mode - 1]
        n_blk = co.alpha_d_p * np.outer(t, t.conj())
        m_blk = co.beta_d_p * np.outer(t, t)
    A = np.empty((2 * K, 2 * K), dtype=complex)
    A[:K, :K] = m_blk.conj()
    A[:K, K:] = n_blk.conj()
    A[K:, :K] = n_blk
    A[K:, K:] = m_blk
    return A


def swap_matrix(K: int) -> np.ndarray:
    X = np.zeros((2 * K, 2 * K))
    X[:K, K:] = np.eye(K)
    X[K:, :K] = np.eye(K)
    return X


def pattern_indices(s, K: int) -> np.ndarray:
    s = np.asarray(s, dtype=int)
    if s.shape != (K,):
        raise ValueError(f"pattern must have length {K}, got shape {s.shape}")
    if np.any(s < 0):
        raise ValueError("pattern counts must be nonnegative")
    L = np.repeat(np.arange(K), s)
    return np.concatenate([L, L + K])


def select_by_pattern(A: np.ndarray, s) -> np.ndarray:
    """Repeat rows/columns of the kernel per the photon counts in ``s``."""
    K = A.shape[0] // 2
    idx = pattern_indices(s, K)
    return A[np.ix_(idx, idx)]


def port_indices(R, K: int) -> np.ndarray:
    """Paired (a, a^+) indices of the port set R (0-based ports)."""
    R = np.asarray(sorted(R), dtype=int)
    if R.size and (R.min() < 0 or R.max() >= K):
        raise ValueError(f"ports must lie in [0, {K})")
    return np.concatenate([R, R + K])
