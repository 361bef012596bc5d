"""Monte-Carlo sampling of the combined output of all virtual modes.

Each virtual mode m independently emits N photons with the truncated
photon-number law, and every photon picks its output port j with weight
|T_jm|^2.  Samples are drawn in fixed-size chunks; chunk c always uses the
Philox stream keyed by (seed, c), so results do not depend on how chunks are
spread over threads.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import config_hash
from .pnr import GBSModel, model_for

DEFAULT_TRUNCATION = 10.0
DEFAULT_TAIL_TOL = 1e-6
CHUNK = 1 << 16


class AliasTable:
    """Vose alias method: O(n) build, O(1) draws from a fixed categorical law."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be a nonempty nonnegative vector with positive sum")
        n = w.size
        p = w * n / w.sum()
        self.prob = np.ones(n)
        self.alias = np.arange(n)
        small = [i for i in range(n) if p[i] < 1.0]
        large = [i for i in range(n) if p[i] >= 1.0]
        while small and large:
            s, g = small.pop(), large.pop()
            self.prob[s] = p[s]
            self.alias[s] = g
            p[g] = (p[g] + p[s]) - 1.0
            (small if p[g] < 1.0 else large).append(g)
        # leftovers are 1 up to rounding
        for i in small + large:
            self.prob[i] = 1.0
        self.n = n

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        i = rng.integers(0, self.n, size=size)
        u = rng.random(size)
        return np.where(u < self.prob[i], i, self.alias[i])


def truncation_size(gm: GBSModel, t: float, tail_tol: float | None = DEFAULT_TAIL_TOL) -> int:
    """N_t = ceil(t * mean photons), at least 1, raised until the tail is below ``tail_tol``.

    ``tail_tol=None`` keeps the bare ceil(t * mean) rule.
    """
    if t <= 0:
        raise ValueError("truncation factor must be positive")
    # guard against 0.1 * 10 -> 1.0000000000000002
    n_t = max(1, math.ceil(gm.co.alpha_d * t - 1e-9))
    if tail_tol is None:
        return n_t
    kept = math.fsum(gm.photon_number_prob(n) for n in range(n_t + 1))
    while 1.0 - kept > tail_tol:
        n_t += 1
        kept += gm.photon_number_prob(n_t)
    return n_t


def _virtual_model(cfg, T) -> GBSModel:
    return model_for(cfg, np.eye(cfg.K) if T is None else T)


def photon_number_pmf(cfg, m: int, t: float = DEFAULT_TRUNCATION, T=None,
                      tail_tol: float | None = DEFAULT_TAIL_TOL) -> np.ndarray:
    """Truncated, renormalised photon-number law of virtual mode m over {0..N_t}.

    The law does not depend on the interferometer; ``T`` may be passed to
    reuse an existing ``GBSModel``.
    """
    if not 1 <= m <= cfg.M:
        raise ValueError(f"virtual mode index must lie in [1, {cfg.M}]")
    gm = _virtual_model(cfg, T)
    n_t = truncation_size(gm, t, tail_tol)
    p = np.array([gm.photon_number_prob(n) for n in range(n_t + 1)])
    return p / p.sum()


def truncation_tail(cfg, t: float = DEFAULT_TRUNCATION,
                    tail_tol: float | None = DEFAULT_TAIL_TOL) -> float:
    """Probability mass the truncation discards from one virtual mode."""
    gm = _virtual_model(cfg, None)
    n_t = truncation_size(gm, t, tail_tol)
    return max(0.0, 1.0 - math.fsum(gm.photon_number_prob(n) for n in range(n_t + 1)))


class VirtualModeSampler:
    """Precomputed alias tables for one (config, interferometer)."""

    def __init__(self, cfg, T, t: float = DEFAULT_TRUNCATION,
                 tail_tol: float | None = DEFAULT_TAIL_TOL):
        self.cfg = cfg
        self.gm = model_for(cfg, T)
        self.t = t
        self.pmf = photon_number_pmf(cfg, 1, t, self.gm, tail_tol)
        self.n_max = len(self.pmf) - 1
        self.count_table = AliasTable(self.pmf)
        self.port_tables = [AliasTable(self.gm.weights[:, m]) for m in range(cfg.M)]

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        K = self.cfg.K
        out = np.zeros(n * K, dtype=np.int64)
        base = np.arange(n) * K
        for m in range(self.cfg.M):
            counts = self.count_table.sample(rng, n)
            total = int(counts.sum())
            if total == 0:
                continue
            owners = np.repeat(base, counts)
            ports = self.port_tables[m].sample(rng, total)
            out += np.bincount(owners + ports, minlength=n * K)
        return out.reshape(n, K)

    def sample_one(self, rng: np.random.Generator) -> tuple[int, ...]:
        """One pass of the per-photon loop, kept literal for readability."""
        s = [0] * self.cfg.K
        for m in range(self.cfg.M):
            n_m = int(self.count_table.sample(rng, 1)[0])
            for j in self.port_tables[m].sample(rng, n_m):
                s[int(j)] += 1
        return tuple(s)


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), chunk])))


def sample_virtual_patterns(cfg, T, t: float, rng: np.random.Generator,
                            tail_tol: float | None = DEFAULT_TAIL_TOL) -> tuple[int, ...]:
    return VirtualModeSampler(cfg, T, t, tail_tol).sample_one(rng)


def _chunks(n_samples: int):
    return [(c, min(CHUNK, n_samples - c * CHUNK)) for c in range(math.ceil(n_samples / CHUNK))]


def draw_samples(cfg, T, n_samples: int, seed: int, t: float = DEFAULT_TRUNCATION,
                 threads: int = 1, tail_tol: float | None = DEFAULT_TAIL_TOL) -> np.ndarray:
    """(n_samples, K) array of sampled patterns in chunk order."""
    sampler = VirtualModeSampler(cfg, T, t, tail_tol)
    jobs = _chunks(n_samples)
    run = lambda job: sampler.sample_batch(chunk_rng(seed, job[0]), job[1])  # noqa: E731
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    if not parts:
        return np.zeros((0, cfg.K), dtype=np.int64)
    return np.vstack(parts)


@dataclass
class EmpiricalDistribution:
    """Frequency table of sampled distinguishable-photon patterns."""

    counts: dict
    n_samples: int
    epsilon: float
    seed: int
    config_hash: str
    truncation: float = DEFAULT_TRUNCATION
    table: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.table = {s: c / self.n_samples for s, c in self.counts.items()}

    def prob(self, s) -> float:
        return self.table.get(tuple(int(x) for x in s), 0.0)

    __call__ = prob

    def __getitem__(self, s) -> float:
        return self.prob(s)

    def __len__(self):
        return len(self.table)

    def mean_photons(self) -> float:
        return sum(c * sum(s) for s, c in self.counts.items()) / self.n_samples


def _tabulate(batch: np.ndarray) -> dict:
    """Count identical rows, keyed by their raw bytes (much cheaper than a row sort)."""
    dtype = np.uint8 if batch.size == 0 or batch.max() < 256 else np.uint32
    raw = np.ascontiguousarray(batch.astype(dtype))
    keys = raw.view(f"V{raw.shape[1] * raw.itemsize}").ravel().tolist()
    return {tuple(np.frombuffer(k, dtype=dtype).tolist()): c for k, c in Counter(keys).items()}


def estimate_p_sim(cfg, T, t: float = DEFAULT_TRUNCATION, epsilon: float = 1e-5,
                   seed: int | None = None, n_samples: int | None = None,
                   threads: int = 1,
                   tail_tol: float | None = DEFAULT_TAIL_TOL) -> EmpiricalDistribution:
    """Empirical distribution from ceil(1/epsilon) samples (or ``n_samples``)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if seed is None:
        seed = cfg.seed
    if n_samples is None:
        n_samples = math.ceil(1.0 / epsilon - 1e-9)
    sampler = VirtualModeSampler(cfg, T, t, tail_tol)

    def run(job):
        return _tabulate(sampler.sample_batch(chunk_rng(seed, job[0]), job[1]))

    jobs = _chunks(n_samples)
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as pool:
            tables = list(pool.map(run, jobs))
    else:
        tables = [run(j) for j in jobs]
    counts: dict = {}
    for tab in tables:
        for s, c in tab.items():
            counts[s] = counts.get(s, 0) + c
    return EmpiricalDistribution(dict(sorted(counts.items())), n_samples, epsilon, seed,
                                 config_hash(cfg), t)


def write_sample_dump(path, samples: np.ndarray, cfg, seed: int) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# config_hash={config_hash(cfg)} seed={seed} n_samples={len(samples)}\n")
        for row in samples.tolist():
            fh.write(",".join(map(str, row)) + "\n")


def read_sample_dump(path) -> tuple[dict, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    header = dict(kv.split("=", 1) for kv in lines[0].lstrip("# ").split())
    header["seed"] = int(header["seed"])
    header["n_samples"] = int(header["n_samples"])
    rows = np.array([[int(x) for x in ln.split(",")] for ln in lines[1:]], dtype=np.int64)
    return header, rows
