"""Matrix functions: Hafnian, the two-weight Hafnian G(N), Torontonian, PD determinants."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

BRUTEFORCE_MAX_DIM = 14


def _check_symmetric(A: np.ndarray, tol: float):
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] % 2:
        raise ValueError(f"Hafnian needs an even dimension, got {A.shape[0]}")
    if A.size and np.max(np.abs(A - A.T)) > tol * max(1.0, np.max(np.abs(A))):
        raise ValueError("matrix is not symmetric within tolerance")


def _exp_series_coeff(traces: np.ndarray, n: int) -> np.ndarray:
    """Coefficient of x^n in exp(sum_k traces[:, k-1] x^k / (2k)), batched over rows."""
    batch = traces.shape[0]
    c = traces / (2.0 * np.arange(1, n + 1))
    e = np.zeros((batch, n + 1), dtype=complex)
    e[:, 0] = 1.0
    for j in range(1, n + 1):
        k = np.arange(1, j + 1)
        e[:, j] = (c[:, :j] * k * e[:, j - k]).sum(axis=1) / j
    return e[:, n]


@lru_cache(maxsize=None)
def _subsets_by_size(n: int) -> dict[int, np.ndarray]:
    masks = np.arange(1, 1 << n)
    bits = (masks[:, None] >> np.arange(n)) & 1
    sizes = bits.sum(axis=1)
    out = {}
    for size in range(1, n + 1):
        rows = bits[sizes == size]
        out[size] = np.array([np.flatnonzero(r) for r in rows], dtype=int).reshape(len(rows), size)
    return out


def hafnian(A, tol: float = 1e-10) -> complex:
    """Hafnian via the power-trace inclusion-exclusion formula, O(n^3 2^n).

    Rows/columns are paired as (0,1), (2,3), ...; for every subset Z of pairs
    the swapped submatrix B_Z contributes (-1)^(n-|Z|) times the x^n
    coefficient of exp(sum_k tr(B_Z^k) x^k / 2k).
    """
    A = np.asarray(A, dtype=complex)
    _check_symmetric(A, tol)
    n = A.shape[0] // 2
    if n == 0:
        return 1.0 + 0.0j
    total = []
    for size, subsets in _subsets_by_size(n).items():
        idx = np.stack([2 * subsets, 2 * subsets + 1], axis=2).reshape(len(subsets), 2 * size)
        sub = A[idx[:, :, None], idx[:, None, :]]
        # left-multiplying by the pair swap exchanges rows 2j and 2j+1
        B = sub.reshape(len(subsets), size, 2, 2 * size)[:, :, ::-1, :].reshape(sub.shape)
        lam = np.linalg.eigvals(B)
        traces = np.cumprod(np.repeat(lam[:, None, :], n, axis=1), axis=1).sum(axis=2)
        coeff = _exp_series_coeff(traces, n)
        sign = -1.0 if (n - size) % 2 else 1.0
        total.append(sign * coeff.sum())
    return complex(np.sum(total))


def hafnian_bruteforce(A, tol: float = 1e-10) -> complex:
    """Sum over all (2n-1)!! perfect matchings; dimension capped at 14."""
    A = np.asarray(A, dtype=complex)
    _check_symmetric(A, tol)
    if A.shape[0] > BRUTEFORCE_MAX_DIM:
        raise ValueError(f"brute-force Hafnian limited to dimension {BRUTEFORCE_MAX_DIM}")

    def rec(rest: tuple) -> complex:
        if not rest:
            return 1.0 + 0.0j
        i, others = rest[0], rest[1:]
        acc = 0.0 + 0.0j
        for pos, j in enumerate(others):
            if A[i, j] != 0:
                acc += A[i, j] * rec(others[:pos] + others[pos + 1 :])
        return acc

    return rec(tuple(range(A.shape[0])))


def double_factorial(n: int) -> int:
    if n <= 0:
        return 1
    out = 1
    for k in range(n, 0, -2):
        out *= k
    return out


def f_coefficient(n: int, q: int) -> int:
    """Number of perfect matchings of two n-vertex sets with q within-set edges."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if q % 2 or q < 0:
        raise ValueError(f"q must be a nonnegative even integer, got {q}")
    if q > n:
        raise ValueError(f"q must not exceed n, got q={q}, n={n}")
    num = math.factorial(n) ** 2
    den = double_factorial(q) ** 2 * math.factorial(n - q)
    return num // den


def h_matrix(N: int, alpha_p: float, beta_p: float) -> np.ndarray:
    """2N x 2N matrix with weight beta' within each half and alpha' across halves."""
    H = np.full((2 * N, 2 * N), beta_p, dtype=float)
    H[:N, N:] = alpha_p
    H[N:, :N] = alpha_p
    return H


def _log_f_over_nfact(n: int, q: int) -> float:
    # log( n! / ((q!!)^2 (n-q)!) ),  q!! = 2^(q/2) (q/2)!
    h = q // 2
    return (
        math.lgamma(n + 1)
        - 2 * (h * math.log(2) + math.lgamma(h + 1))
        - math.lgamma(n - q + 1)
    )


def g_over_factorial(N: int, alpha_p: float, beta_p: float) -> float:
    """G(N) / N!, evaluated without overflow for large N."""
    if N < 0:
        raise ValueError("N must be >= 0")
    if N <= 20:
        return g_function(N, alpha_p, beta_p) / math.factorial(N)
    terms = []
    for q in range(0, N + 1, 2):
        if (beta_p == 0 and q > 0) or (alpha_p == 0 and q < N):
            continue
        lt = _log_f_over_nfact(N, q)
        if q:
            lt += q * math.log(abs(beta_p))
        if N - q:
            lt += (N - q) * math.log(alpha_p)
        terms.append(math.exp(lt))
    return math.fsum(terms)


def g_function(N: int, alpha_p: float, beta_p: float) -> float:
    """Hafnian of the two-weight matrix ``h_matrix(N, alpha_p, beta_p)`` in closed form."""
    if N < 0:
        raise ValueError("N must be >= 0")
    if N > 20:
        return g_over_factorial(N, alpha_p, beta_p) * math.factorial(N)
    return math.fsum(
        f_coefficient(N, q) * beta_p**q * alpha_p ** (N - q) for q in range(0, N + 1, 2)
    )


def det_pd(H, tol: float = 1e-10) -> float:
    """Determinant of a Hermitian positive-definite matrix via Cholesky."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if H.shape[0] == 0:
        return 1.0
    scale = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H - H.conj().T)) > tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise ValueError("matrix is not positive definite") from exc
    d = np.diag(L)
    if np.max(np.abs(d.imag)) > tol * scale:
        raise ValueError("Cholesky factor has a complex diagonal")
    return float(np.prod(d.real) ** 2)


def logdet_pd(H, tol: float = 1e-10) -> float:
    H = np.asarray(H)
    if H.shape[0] == 0:
        return 0.0
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise ValueError("matrix is not positive definite") from exc
    return float(2 * np.sum(np.log(np.diag(L).real)))


def gray_code_subsets(items):
    """Yield every subset of ``items`` once, consecutive subsets differing by one element."""
    items = list(items)
    current: list = []
    yield tuple(current)
    member = [False] * len(items)
    for g in range(1, 1 << len(items)):
        bit = (g & -g).bit_length() - 1
        member[bit] = not member[bit]
        yield tuple(x for x, keep in zip(items, member) if keep)


def torontonian(Q, U, tol: float = 1e-10) -> float:
    """Torontonian of Q restricted to clicked ports U (0-based port indices)."""
    Q = np.asarray(Q, dtype=complex)
    K = Q.shape[0] // 2
    U = sorted(set(U))
    if any(not 0 <= u < K for u in U):
        raise ValueError(f"click ports must lie in [0, {K})")
    try:
        Qinv = np.linalg.inv(Q)
    except np.linalg.LinAlgError as exc:
        raise ValueError("Q is singular") from exc
    Qinv = (Qinv + Qinv.conj().T) / 2
    terms = []
    for V in gray_code_subsets(U):
        idx = np.array(list(V) + [v + K for v in V], dtype=int)
        sign = -1.0 if (len(U) - len(V)) % 2 else 1.0
        terms.append(sign / math.sqrt(det_pd(Qinv[np.ix_(idx, idx)], tol)))
    return math.fsum(terms)
