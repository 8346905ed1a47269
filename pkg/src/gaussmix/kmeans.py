"""Multi-threaded k-means used to initialise the mixture fit.

Hard assignment with two distances (squared Euclidean, or squared
Mahalanobis under a diagonal global covariance), several seeding strategies,
and resurrection of means that end up with no members.

Every source of ambiguity is pinned for determinism: arg-min/arg-max ties
break to the lowest index, chunking follows the fixed block grid of
:mod:`gaussmix.parallel`, and per-block partial sums reduce in ascending
block order. Results are therefore bit-identical for any thread count and
repeatable for a fixed seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import parallel
from .config import DIST_MAHA, FitConfig, SeedMode, emit_progress
from .model import as_dataset

# Floor on the global per-dimension variances; keeps their reciprocals finite
# even for constant dimensions.
_GLOBAL_VAR_FLOOR = 1e-300


def global_diag_cov(X) -> np.ndarray:
    """Per-dimension population variance (divide by N) over the whole
    dataset, floored at 1e-300."""
    X = as_dataset(X)
    if X.shape[0] < 2:
        raise ValueError("global covariance needs at least 2 samples")
    return np.maximum(X.var(axis=0), _GLOBAL_VAR_FLOOR)


@dataclass(frozen=True)
class DistMode:
    """Distance used for seeding and clustering.

    ``inv_var is None`` selects squared Euclidean distance; otherwise the
    squared Mahalanobis distance with ``inv_var`` holding the reciprocals of
    a diagonal global covariance.
    """

    inv_var: np.ndarray | None = None

    def __post_init__(self):
        if self.inv_var is not None:
            iv = np.ascontiguousarray(self.inv_var, dtype=np.float64)
            if iv.ndim != 1 or iv.size < 1:
                raise ValueError("inv_var must be a 1-D vector")
            if not np.all(np.isfinite(iv)) or np.any(iv <= 0.0):
                raise ValueError("inv_var entries must be finite and positive")
            iv.flags.writeable = False
            object.__setattr__(self, "inv_var", iv)

    @classmethod
    def euclidean(cls) -> "DistMode":
        return cls(None)

    @classmethod
    def mahalanobis(cls, X) -> "DistMode":
        """Mahalanobis mode with the global covariance estimated from X."""
        return cls(1.0 / global_diag_cov(X))


def dist(a, b, mode: DistMode) -> float:
    """Squared distance between two vectors under ``mode``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    np.multiply(d, d, out=d)
    if mode.inv_var is not None:
        if mode.inv_var.shape != a.shape:
            raise ValueError(f"dimension mismatch: inv_var has shape {mode.inv_var.shape}, vectors {a.shape}")
        d *= mode.inv_var
    return float(d.sum())


def _distances_block(blk: np.ndarray, means: np.ndarray, mode: DistMode) -> np.ndarray:
    # (n, G) squared distances; identical op sequence for both modes so that
    # unit inv_var reproduces Euclidean results bit-exactly.
    out = np.empty((blk.shape[0], means.shape[0]))
    for g in range(means.shape[0]):
        d = blk - means[g]
        np.multiply(d, d, out=d)
        if mode.inv_var is not None:
            d *= mode.inv_var
        out[:, g] = d.sum(axis=1)
    return out


@dataclass
class KmState:
    """State carried between k-means iterations.

    ``counts``/``assignment`` are ``None`` before the first assignment pass.
    ``objective`` is the total within-cluster distance measured during the
    last assignment pass (against the means that pass started from).
    """

    means: np.ndarray
    counts: np.ndarray | None = None
    assignment: np.ndarray | None = None
    objective: float | None = None


def seed_means(X, n_gaus: int, seed_mode: SeedMode, dist_mode: DistMode | None = None, rng_seed=None) -> np.ndarray:
    """Choose ``n_gaus`` initial means from the training samples.

    * ``static-subset``: samples at indices ``floor(g * n / n_gaus)``.
    * ``random-subset``: distinct uniform indices drawn from ``rng_seed``.
    * ``static-spread``: farthest-point greedy starting from sample 0.
    * ``random-spread``: first seed uniform, then each next sample drawn
      with probability proportional to its squared distance to the nearest
      chosen seed.
    """
    X = as_dataset(X)
    n = X.shape[0]
    seed_mode = SeedMode(seed_mode)
    mode = dist_mode if dist_mode is not None else DistMode()
    if n_gaus < 1:
        raise ValueError("n_gaus must be a positive integer")
    if n < n_gaus:
        raise ValueError(f"insufficient samples: {n} samples for {n_gaus} seeds")
    if seed_mode == SeedMode.KEEP_EXISTING:
        raise ValueError("seed mode keep-existing does not produce seeds")

    if seed_mode == SeedMode.STATIC_SUBSET:
        idx = (np.arange(n_gaus, dtype=np.int64) * n) // n_gaus
    elif seed_mode == SeedMode.RANDOM_SUBSET:
        if rng_seed is None:
            raise ValueError("random-subset seeding requires rng_seed")
        rng = np.random.default_rng(rng_seed)
        idx = rng.choice(n, size=n_gaus, replace=False)
    elif seed_mode == SeedMode.STATIC_SPREAD:
        idx = _spread_indices(X, n_gaus, mode, rng=None)
    else:  # RANDOM_SPREAD
        if rng_seed is None:
            raise ValueError("random-spread seeding requires rng_seed")
        idx = _spread_indices(X, n_gaus, mode, rng=np.random.default_rng(rng_seed))
    return X[idx].copy()


def _spread_indices(X: np.ndarray, k: int, mode: DistMode, rng) -> np.ndarray:
    n = X.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    picked = np.zeros(n, dtype=bool)
    chosen[0] = 0 if rng is None else int(rng.integers(n))
    picked[chosen[0]] = True
    min_d = _distances_block(X, X[chosen[0]][None, :], mode)[:, 0]
    for j in range(1, k):
        if rng is None:
            cand = min_d.copy()
            cand[picked] = -1.0  # keep indices distinct even among duplicates
            nxt = int(np.argmax(cand))
        else:
            total = float(min_d.sum())
            if total > 0.0:
                nxt = int(rng.choice(n, p=min_d / total))
            else:
                nxt = int(rng.choice(np.flatnonzero(~picked)))
        chosen[j] = nxt
        picked[nxt] = True
        d_new = _distances_block(X, X[nxt][None, :], mode)[:, 0]
        np.minimum(min_d, d_new, out=min_d)
    return chosen


def kmeans_iterate(X, state: KmState, dist_mode: DistMode, n_threads: int = 1) -> KmState:
    """One assignment + mean-update pass.

    Samples are assigned to the closest mean (ties to the lowest index); new
    means are member averages from per-block sum/count partials reduced in
    ascending block order. Means that received no members keep their old
    value (see :func:`resurrect_dead_means`).
    """
    X = as_dataset(X)
    means = state.means
    n, _ = X.shape
    n_gaus = means.shape[0]
    gaus_range = np.arange(n_gaus)

    def work(s: int, e: int):
        blk = X[s:e]
        d = _distances_block(blk, means, dist_mode)
        asg = d.argmin(axis=1)
        closest = d[np.arange(blk.shape[0]), asg]
        membership = (asg[:, None] == gaus_range[None, :]).astype(np.float64)
        sums = membership.T @ blk
        counts = np.bincount(asg, minlength=n_gaus)
        return asg, counts, sums, float(closest.sum())

    parts = parallel.map_blocks(work, n, n_threads)

    assignment = np.concatenate([p[0] for p in parts])
    counts = np.zeros(n_gaus, dtype=np.int64)
    sums = np.zeros_like(means)
    objective = 0.0
    for _, c, s, o in parts:
        counts += c
        sums += s
        objective += o

    populated = counts > 0
    new_means = means.copy()
    new_means[populated] = sums[populated] / counts[populated, None]
    return KmState(new_means, counts, assignment, objective)


def resurrect_dead_means(X, state: KmState, dist_mode: DistMode) -> KmState:
    """Give every zero-count mean a member taken from the most popular mean.

    Dead means are processed in ascending index order. The donor is the mean
    with the currently largest count; the moved sample is the donor member
    farthest from the donor's mean under ``dist_mode`` (ties to the lowest
    sample index). Counts and the assignment are updated accordingly.
    """
    X = as_dataset(X)
    if state.counts is None or state.assignment is None:
        raise ValueError("state has no assignment pass to repair")
    dead = np.flatnonzero(state.counts == 0)
    if dead.size == 0:
        return state

    means = state.means.copy()
    counts = state.counts.copy()
    assignment = state.assignment.copy()
    for g in dead:
        donor = int(np.argmax(counts))
        if counts[donor] == 0:
            raise ValueError("cannot resurrect means without any assigned samples")
        members = np.flatnonzero(assignment == donor)
        d = _distances_block(X[members], means[donor][None, :], dist_mode)[:, 0]
        moved = int(members[int(np.argmax(d))])
        means[g] = X[moved]
        assignment[moved] = g
        counts[donor] -= 1
        counts[g] += 1
    return KmState(means, counts, assignment, state.objective)


@dataclass
class KmResult:
    """Final means/counts plus the per-iteration objective trace."""

    means: np.ndarray
    counts: np.ndarray | None
    assignment: np.ndarray | None
    objectives: list[float]
    iterations: int
    seconds: float


def run_kmeans(X, config: FitConfig, dist_mode: DistMode | None = None, init_means=None) -> KmResult:
    """Seed means and run up to ``config.km_iter`` k-means iterations.

    Resurrection runs after every assignment pass; iteration stops early
    once an assignment pass leaves the partition unchanged. ``init_means``
    bypasses seeding (e.g. to continue from external seeds).
    """
    X = as_dataset(X)
    config.validate()
    mode = dist_mode
    if mode is None:
        mode = DistMode.mahalanobis(X) if config.dist_mode == DIST_MAHA else DistMode()

    started = time.perf_counter()
    if init_means is None:
        means = seed_means(X, config.n_gaus, config.seed_mode, mode, config.rng_seed)
    else:
        means = np.array(init_means, dtype=np.float64, ndmin=2)
        if means.shape != (config.n_gaus, X.shape[1]):
            raise ValueError(f"init_means: expected shape ({config.n_gaus}, {X.shape[1]}), got {means.shape}")

    state = KmState(means)
    objectives: list[float] = []
    iterations = 0
    prev_assignment = None
    for it in range(config.km_iter):
        tick = time.perf_counter()
        state = kmeans_iterate(X, state, mode, config.n_threads)
        objectives.append(state.objective)
        state = resurrect_dead_means(X, state, mode)
        iterations = it + 1
        emit_progress(config.print_mode, "km", it, state.objective, (time.perf_counter() - tick) * 1e3)
        if prev_assignment is not None and np.array_equal(prev_assignment, state.assignment):
            break
        prev_assignment = state.assignment
    return KmResult(
        means=state.means,
        counts=state.counts,
        assignment=state.assignment,
        objectives=objectives,
        iterations=iterations,
        seconds=time.perf_counter() - started,
    )
