"""Post-fit utilities: hard assignment, histograms and sampling."""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import parallel
from .kmeans import DistMode, _distances_block
from .likelihood import component_log_densities, constants_for, log_hefts
from .model import GmmModel, as_dataset


class AssignMode(str, Enum):
    """Hard-assignment rule: nearest mean by squared Euclidean distance, or
    the component with the highest weighted likelihood."""

    EUCL = "eucl"
    PROB = "prob"


def _assign_block(blk: np.ndarray, model: GmmModel, mode: AssignMode) -> np.ndarray:
    if mode == AssignMode.EUCL:
        d = _distances_block(blk, model.means, DistMode())
        return d.argmin(axis=1)
    terms = component_log_densities(blk, model)
    terms += log_hefts(model)
    return terms.argmax(axis=1)


def assign(x, model: GmmModel, mode: AssignMode = AssignMode.EUCL) -> int:
    """Index of the closest mean (eucl) or most likely component (prob);
    ties break to the lowest index."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.n_dims:
        raise ValueError(f"dimension mismatch: vector has shape {x.shape}, model has {model.n_dims} dims")
    return int(_assign_block(x[None, :], model, AssignMode(mode))[0])


def assign_batch(X, model: GmmModel, mode: AssignMode = AssignMode.EUCL, n_threads: int = 1) -> np.ndarray:
    """Per-sample assignment indices; equals elementwise scalar calls."""
    X = as_dataset(X)
    if X.shape[1] != model.n_dims:
        raise ValueError(f"dimension mismatch: dataset has {X.shape[1]} dims, model has {model.n_dims}")
    mode = AssignMode(mode)
    constants_for(model)  # warm the cache before threads share the model
    out = np.empty(X.shape[0], dtype=np.int64)

    def work(s: int, e: int) -> None:
        out[s:e] = _assign_block(X[s:e], model, mode)

    parallel.map_blocks(work, X.shape[0], n_threads)
    return out


def raw_hist(X, model: GmmModel, mode: AssignMode = AssignMode.EUCL, n_threads: int = 1) -> np.ndarray:
    """Counts of how often each component was the assignment target."""
    idx = assign_batch(X, model, mode, n_threads)
    return np.bincount(idx, minlength=model.n_gaus)


def norm_hist(X, model: GmmModel, mode: AssignMode = AssignMode.EUCL, n_threads: int = 1) -> np.ndarray:
    """Assignment histogram normalised to sum to one."""
    counts = raw_hist(X, model, mode, n_threads)
    return counts / counts.sum()


def generate(model: GmmModel, n: int, rng_seed=None) -> np.ndarray:
    """Draw ``n`` samples from the mixture as an (n, n_dims) array.

    Each sample picks a component from the heft distribution, then adds
    per-dimension Gaussian noise scaled by the square roots of the diagonal
    covariances. Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    rng = np.random.default_rng(rng_seed)
    comps = rng.choice(model.n_gaus, size=n, p=model.hefts)
    noise = rng.standard_normal((n, model.n_dims))
    return model.means[comps] + np.sqrt(model.dcovs[comps]) * noise
