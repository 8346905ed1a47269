"""Log-domain density evaluation for diagonal Gaussian mixtures.

All mixture sums run in the log domain through a pairwise stable log-add
(max + log1p(exp(min - max))), so the exponential never sees a positive
argument and individual component underflow cannot zero out the total.
The mixture value only becomes -inf when every component underflows, which
for finite inputs requires the quadratic form itself to overflow.

The per-component fold is a left fold in ascending component index, and
scalar calls are evaluated through the same block code as batch calls, so
batch and scalar results are bit-identical and independent of threading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import parallel
from .model import GmmModel, as_dataset

LOG_2PI = math.log(2.0 * math.pi)


def log_add(log_a: float, log_b: float) -> float:
    """log(exp(log_a) + exp(log_b)) without overflow.

    ``-inf`` stands for log 0 and is absorbed; NaN inputs propagate.
    """
    if log_b > log_a:
        log_a, log_b = log_b, log_a
    if log_b == -math.inf:
        return log_a
    return log_a + math.log1p(math.exp(log_b - log_a))


def _log_add_rows(acc: np.ndarray, term: np.ndarray) -> np.ndarray:
    # Vectorised log_add over aligned arrays; same formula as the scalar.
    hi = np.maximum(acc, term)
    lo = np.minimum(acc, term)
    with np.errstate(invalid="ignore"):
        out = hi + np.log1p(np.exp(lo - hi))
    both_zero = np.isneginf(hi)
    if both_zero.any():
        out[both_zero] = -np.inf
    return out


@dataclass(frozen=True)
class GaussConstants:
    """Per-component terms of the log density that do not depend on x.

    ``log_det_term[g]`` is ``-(D/2) log(2 pi) - 0.5 * sum_d log(dcov[g, d])``
    and ``inv_dcov`` holds the elementwise reciprocals of the diagonal
    covariances.
    """

    log_det_term: np.ndarray  # (G,)
    inv_dcov: np.ndarray      # (G, D)

    @classmethod
    def from_model(cls, model: GmmModel) -> "GaussConstants":
        dcovs = model.dcovs
        log_det = -0.5 * model.n_dims * LOG_2PI - 0.5 * np.log(dcovs).sum(axis=1)
        return cls(log_det_term=log_det, inv_dcov=1.0 / dcovs)


def constants_for(model: GmmModel) -> GaussConstants:
    """Cached :class:`GaussConstants` for a model.

    Models are immutable, so the cache can never go stale; concurrent lazy
    initialisation is a benign race (both threads compute the same value).
    """
    cache = model._cache
    if cache is None:
        cache = GaussConstants.from_model(model)
        model._cache = cache
    return cache


def log_hefts(model: GmmModel) -> np.ndarray:
    """Elementwise log of the hefts with exact ``-inf`` for zero weights."""
    w = model.hefts
    out = np.full(w.shape, -np.inf)
    positive = w > 0
    out[positive] = np.log(w[positive])
    return out


def component_log_densities(X, model: GmmModel, constants: GaussConstants | None = None) -> np.ndarray:
    """(n, G) log Gaussian densities of each sample under each component.

    No heft is applied. Always finite for finite inputs unless the quadratic
    form overflows, in which case the affected entry is ``-inf``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_dims:
        raise ValueError(f"dimension mismatch: samples have shape {X.shape}, model has {model.n_dims} dims")
    cons = constants if constants is not None else constants_for(model)
    means = model.means
    out = np.empty((X.shape[0], model.n_gaus))
    # An overflowing quadratic form is the documented -inf case, not an error.
    with np.errstate(over="ignore"):
        for g in range(model.n_gaus):
            diff = X - means[g]
            np.multiply(diff, diff, out=diff)
            diff *= cons.inv_dcov[g]
            out[:, g] = cons.log_det_term[g] - 0.5 * diff.sum(axis=1)
    return out


def fold_log_terms(terms: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Left fold of the stable log-add over the ``active`` columns of an
    (n, G) matrix of log terms, in ascending column order."""
    if active.size == 0:
        return np.full(terms.shape[0], -np.inf)
    acc = terms[:, active[0]].copy()
    for g in active[1:]:
        acc = _log_add_rows(acc, terms[:, g])
    return acc


def _mixture_rows(X, model: GmmModel, constants: GaussConstants | None = None) -> np.ndarray:
    logw = log_hefts(model)
    terms = component_log_densities(X, model, constants)
    terms += logw
    return fold_log_terms(terms, np.flatnonzero(logw > -np.inf))


def _as_vector(x, n_dims: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n_dims:
        raise ValueError(f"dimension mismatch: vector has shape {x.shape}, model has {n_dims} dims")
    return x


def _check_component(g: int, model: GmmModel) -> int:
    if not 0 <= g < model.n_gaus:
        raise ValueError(f"component index {g} out of range for {model.n_gaus} Gaussians")
    return g


def log_gauss(x, g: int, model: GmmModel, constants: GaussConstants | None = None) -> float:
    """Log density of ``x`` under component ``g`` (no heft)."""
    x = _as_vector(x, model.n_dims)
    _check_component(g, model)
    return float(component_log_densities(x[None, :], model, constants)[0, g])


def log_p(x, model: GmmModel) -> float:
    """Log of the mixture density at ``x``.

    Zero-heft components are skipped; if every remaining component
    underflows the result is ``-inf``.
    """
    x = _as_vector(x, model.n_dims)
    return float(_mixture_rows(x[None, :], model)[0])


def log_p_batch(X, model: GmmModel, n_threads: int = 1) -> np.ndarray:
    """Mixture log density of every sample; equals elementwise scalar calls."""
    X = as_dataset(X)
    if X.shape[1] != model.n_dims:
        raise ValueError(f"dimension mismatch: dataset has {X.shape[1]} dims, model has {model.n_dims}")
    cons = constants_for(model)
    out = np.empty(X.shape[0])

    def work(s: int, e: int) -> None:
        out[s:e] = _mixture_rows(X[s:e], model, cons)

    parallel.map_blocks(work, X.shape[0], n_threads)
    return out


def log_p_comp(x, g: int, model: GmmModel) -> float:
    """Per-component log density (alias of :func:`log_gauss`)."""
    return log_gauss(x, g, model)


def log_p_comp_batch(X, g: int, model: GmmModel, n_threads: int = 1) -> np.ndarray:
    """Log density of every sample under component ``g`` only."""
    X = as_dataset(X)
    if X.shape[1] != model.n_dims:
        raise ValueError(f"dimension mismatch: dataset has {X.shape[1]} dims, model has {model.n_dims}")
    _check_component(g, model)
    cons = constants_for(model)
    out = np.empty(X.shape[0])

    def work(s: int, e: int) -> None:
        out[s:e] = component_log_densities(X[s:e], model, cons)[:, g]

    parallel.map_blocks(work, X.shape[0], n_threads)
    return out


def avg_log_p(X, model: GmmModel, g: int | None = None, n_threads: int = 1) -> float:
    """Average log-likelihood over a dataset, under the mixture or (with
    ``g``) under a single component.

    The mean is formed from per-block partial sums combined in ascending
    block order, so the value is identical for any thread count and matches
    the likelihood trace recorded while fitting.
    """
    X = as_dataset(X)
    if X.shape[1] != model.n_dims:
        raise ValueError(f"dimension mismatch: dataset has {X.shape[1]} dims, model has {model.n_dims}")
    cons = constants_for(model)
    if g is not None:
        _check_component(g, model)

    def work(s: int, e: int) -> float:
        if g is None:
            vals = _mixture_rows(X[s:e], model, cons)
        else:
            vals = component_log_densities(X[s:e], model, cons)[:, g]
        return float(vals.sum())

    partials = parallel.map_blocks(work, X.shape[0], n_threads)
    total = 0.0
    for p in partials:
        total += p
    return total / X.shape[0]
