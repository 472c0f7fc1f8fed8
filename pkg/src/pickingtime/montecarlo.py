"""Direct simulation of return-routing pick tours.

Routes are drawn in fixed-size blocks. Block ``b`` of a run with seed ``seed``
uses a Philox4x64-10 generator keyed by ``seed`` whose counter starts at
``(0, 0, 0, b)``; the block index sits in the top counter word, so blocks draw
from disjoint parts of the counter space. Results are reduced in block order,
which makes a report a function of ``(config, n, seed)`` alone, whatever the
number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import WarehouseConfig, cdf_inverse

BLOCK_SIZE = 1 << 16
EXACT_QUANTILE_LIMIT = 10_000_000
SKETCH_BINS = 1 << 18
REPORT_LEVELS = (0.5, 0.9, 0.95, 0.99)


@dataclass(frozen=True)
class SimulatedRoute:
    M: int
    counts: np.ndarray  # shape (k, blocks)
    furthest: np.ndarray  # fraction of sub-aisle length, nan where empty
    k_plus: int
    pick_time_total: float
    T: float


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, block]))


def _travel_constants(config: WarehouseConfig) -> tuple[float, float]:
    geom = config.geometry
    return geom.roundtrip_length / geom.speed, 2.0 * geom.aisle_width / geom.speed


def assemble_route(config: WarehouseConfig, subaisle, locations, pick_times) -> SimulatedRoute:
    """Route time for explicitly given items.

    ``subaisle`` holds flat sub-aisle indices (``i * blocks + j``, 0-based),
    ``locations`` the position of each item as a fraction of its sub-aisle.
    """
    geom = config.geometry
    blocks = geom.layout.blocks
    sub = np.asarray(subaisle, dtype=int)
    loc = np.asarray(locations, dtype=float)
    picks = np.asarray(pick_times, dtype=float)
    if not (sub.shape == loc.shape == picks.shape):
        raise ValueError("item arrays must have equal length")
    counts = np.bincount(sub, minlength=geom.n_subaisles)
    furthest = np.full(geom.n_subaisles, np.nan)
    for idx in np.unique(sub):
        furthest[idx] = loc[sub == idx].max()

    travel, cross = _travel_constants(config)
    occupied = counts.reshape(geom.k, blocks).sum(axis=1) > 0
    k_plus = int(np.flatnonzero(occupied)[-1] + 1) if occupied.any() else 0
    pick_total = math.fsum(picks)
    if k_plus == 0:
        T = 0.0
    else:
        T = pick_total + travel * math.fsum(np.nan_to_num(furthest)) + cross * (k_plus - 1)
    return SimulatedRoute(
        M=int(sub.size),
        counts=counts.reshape(geom.k, blocks),
        furthest=furthest.reshape(geom.k, blocks),
        k_plus=k_plus,
        pick_time_total=pick_total,
        T=T,
    )


def _cumulative_p(config: WarehouseConfig) -> np.ndarray:
    cum = np.cumsum(config.storage.probabilities().reshape(-1))
    return cum / cum[-1]


def _cdfs(config: WarehouseConfig):
    return [sub.cdf for row in config.storage.subaisles for sub in row]


def _locations(cdfs, sub: np.ndarray, u: np.ndarray) -> np.ndarray:
    loc = u.copy()
    order = np.argsort(sub, kind="stable")
    ids, starts = np.unique(sub[order], return_index=True)
    ends = np.append(starts[1:], order.size)
    for idx, lo, hi in zip(ids, starts, ends):
        cdf = cdfs[idx]
        if not cdf.is_uniform():
            sel = order[lo:hi]
            loc[sel] = cdf_inverse(cdf, u[sel])
    return loc


def sample_route(config: WarehouseConfig, rng: np.random.Generator) -> SimulatedRoute:
    """Draw one order and walk it."""
    m = int(rng.poisson(config.lam))
    cum = _cumulative_p(config)
    sub = np.minimum(np.searchsorted(cum, rng.random(m), side="right"), cum.size - 1)
    loc = _locations(_cdfs(config), sub, rng.random(m))
    picks = config.pick_time.sample(rng, m)
    return assemble_route(config, sub, loc, picks)


def sample_block(config: WarehouseConfig, n: int, rng: np.random.Generator):
    """Vectorized draw of ``n`` route times; returns ``(T, k_plus)`` arrays."""
    geom = config.geometry
    n_sub = geom.n_subaisles
    m = rng.poisson(config.lam, size=n)
    total = int(m.sum())
    route = np.repeat(np.arange(n), m)
    cum = _cumulative_p(config)
    sub = np.minimum(np.searchsorted(cum, rng.random(total), side="right"), n_sub - 1)
    loc = _locations(_cdfs(config), sub, rng.random(total))
    picks = config.pick_time.sample(rng, total)

    key = route * n_sub + sub
    furthest = np.zeros(n * n_sub)
    np.maximum.at(furthest, key, loc)
    counts = np.bincount(key, minlength=n * n_sub).reshape(n, geom.k, geom.layout.blocks)

    occupied = counts.sum(axis=2) > 0
    last = geom.k - np.argmax(occupied[:, ::-1], axis=1)
    k_plus = np.where(occupied.any(axis=1), last, 0)

    travel, cross = _travel_constants(config)
    pick_total = np.bincount(route, weights=picks, minlength=n)
    in_aisle = furthest.reshape(n, n_sub).sum(axis=1)
    T = pick_total + travel * in_aisle + cross * np.maximum(k_plus - 1, 0)
    return T, k_plus


@dataclass
class _BlockSummary:
    n: int
    mean: float
    m2: float
    sq_sum: float
    atoms: int
    kplus_counts: np.ndarray
    samples: np.ndarray | None = None
    hist: np.ndarray | None = None
    overflow: np.ndarray | None = None


def _summarize(T, k_plus, k, keep, edges) -> _BlockSummary:
    mean = float(T.mean())
    summary = _BlockSummary(
        n=T.size,
        mean=mean,
        m2=float(((T - mean) ** 2).sum()),
        sq_sum=float((T * T).sum()),
        atoms=int((T == 0).sum()),
        kplus_counts=np.bincount(k_plus, minlength=k + 1),
    )
    if keep:
        summary.samples = T
    else:
        inside = T < edges[-1]
        summary.hist = np.histogram(T[inside], bins=edges)[0]
        summary.overflow = T[~inside]
    return summary


@dataclass(frozen=True)
class SimulationReport:
    n_samples: int
    seed: int
    mean: float
    variance: float
    second_moment: float
    quantiles: dict[float, float]
    atom_frequency: float
    kplus_frequency: np.ndarray  # index j -> fraction of routes with k+ = j
    samples: np.ndarray | None = field(default=None, repr=False)  # sorted
    quantile_error: float = 0.0

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.n_samples)

    def rows(self) -> list[tuple[str, str]]:
        out = [
            ("n_samples", str(self.n_samples)),
            ("seed", str(self.seed)),
            ("mean", f"{self.mean:.12g}"),
            ("variance", f"{self.variance:.12g}"),
            ("second_moment", f"{self.second_moment:.12g}"),
            ("std_error", f"{self.std_error:.12g}"),
            ("atom_frequency", f"{self.atom_frequency:.12g}"),
        ]
        out += [(f"quantile_{p:g}", f"{q:.12g}") for p, q in self.quantiles.items()]
        out += [(f"kplus_{j}", f"{f:.12g}") for j, f in enumerate(self.kplus_frequency)]
        return out


def _sketch_quantile(hist, edges, overflow, n, p) -> float:
    rank = math.ceil(p * n)
    cum = np.cumsum(hist)
    if rank <= cum[-1]:
        b = int(np.searchsorted(cum, rank, side="left"))
        below = cum[b - 1] if b > 0 else 0
        frac = (rank - below) / hist[b]
        return float(edges[b] + frac * (edges[b + 1] - edges[b]))
    return float(np.sort(overflow)[rank - cum[-1] - 1])


def simulate(
    config: WarehouseConfig,
    n: int,
    seed: int = 0,
    *,
    threads: int | None = None,
    keep_samples: bool | None = None,
) -> SimulationReport:
    """Simulate ``n`` independent routes.

    Quantiles come from the stored sample when ``n`` is at most ten million;
    above that a fixed-width histogram sketch is used whose quantiles are
    accurate to one bin width (reported as ``quantile_error``).
    """
    if n < 1:
        raise ValueError("number of samples must be >= 1")
    if seed < 0:
        raise ValueError("seed must be unsigned")
    if keep_samples is None:
        keep_samples = n <= EXACT_QUANTILE_LIMIT
    threads = threads or os.cpu_count() or 1
    k = config.geometry.k
    sizes = [min(BLOCK_SIZE, n - start) for start in range(0, n, BLOCK_SIZE)]

    def run(block):
        return sample_block(config, sizes[block], block_generator(seed, block))

    edges = None
    first = run(0)
    if not keep_samples:
        top = max(float(first[0].max()), 1e-12) * 4.0
        edges = np.linspace(0.0, top, SKETCH_BINS + 1)
    summaries = [_summarize(*first, k, keep_samples, edges)]

    def job(block):
        return _summarize(*run(block), k, keep_samples, edges)

    rest = range(1, len(sizes))
    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            summaries += list(pool.map(job, rest))
    else:
        summaries += [job(b) for b in rest]

    # Chan et al. pairwise merge, in block order
    count, mean, m2 = 0, 0.0, 0.0
    for s in summaries:
        delta = s.mean - mean
        total = count + s.n
        mean += delta * s.n / total
        m2 += s.m2 + delta * delta * count * s.n / total
        count = total
    variance = m2 / (n - 1) if n > 1 else 0.0
    second = math.fsum(s.sq_sum for s in summaries) / n
    atoms = sum(s.atoms for s in summaries)
    kplus = sum(s.kplus_counts for s in summaries) / n

    if keep_samples:
        samples = np.sort(np.concatenate([s.samples for s in summaries]))
        quantiles = {
            p: float(np.quantile(samples, p, method="inverted_cdf")) for p in REPORT_LEVELS
        }
        q_err = 0.0
    else:
        samples = None
        hist = sum(s.hist for s in summaries)
        overflow = np.concatenate([s.overflow for s in summaries])
        quantiles = {p: _sketch_quantile(hist, edges, overflow, n, p) for p in REPORT_LEVELS}
        q_err = float(edges[1] - edges[0])

    return SimulationReport(
        n_samples=n,
        seed=seed,
        mean=mean,
        variance=variance,
        second_moment=second,
        quantiles=quantiles,
        atom_frequency=atoms / n,
        kplus_frequency=kplus,
        samples=samples,
        quantile_error=q_err,
    )


def ks_distance(sorted_samples: np.ndarray, cdf_values: np.ndarray, cdf_left: np.ndarray | None = None) -> float:
    """Kolmogorov-Smirnov distance between a sample and a model CDF.

    ``cdf_values[i]`` is the model CDF at ``sorted_samples[i]`` and
    ``cdf_left[i]`` its left limit there (defaults to ``cdf_values`` for a
    continuous model). For the atom at zero pass ``cdf_left = 0`` at ``t = 0``.
    """
    x = np.asarray(sorted_samples)
    f = np.asarray(cdf_values)
    f_left = f if cdf_left is None else np.asarray(cdf_left)
    n = x.size
    after = np.searchsorted(x, x, side="right") / n
    before = np.searchsorted(x, x, side="left") / n
    return float(max(np.max(np.abs(after - f)), np.max(np.abs(f_left - before))))


def write_samples_csv(path: str | Path, samples: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("T_seconds\n")
        for t in samples:
            fh.write(f"{t:.17g}\n")

