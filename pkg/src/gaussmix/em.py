"""Expectation-maximisation for diagonal Gaussian mixtures.

The E-step evaluates responsibilities block by block over the fixed grid of
:mod:`gaussmix.parallel`; each block yields partial sums (responsibility
mass, responsibility-weighted coordinates and squared coordinates) that the
reduction folds in ascending block order. Covariances use the moment form
(weighted second moment minus squared mean) so the partials add without
centering, and a variance floor is applied after every update.

``learn`` is the full pipeline: seeding, k-means, conversion of clusters to
an initial mixture, then EM refinement.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import parallel
from .config import DIST_MAHA, FitConfig, FitReport, SeedMode, emit_progress
from .errors import FitError
from .kmeans import DistMode, global_diag_cov, run_kmeans
from .likelihood import (
    GaussConstants,
    avg_log_p,
    component_log_densities,
    constants_for,
    fold_log_terms,
    log_hefts,
)
from .model import GmmModel, as_dataset

# A component whose total responsibility mass falls at or below this fraction
# of the dataset is frozen for the update instead of producing 0/0 noise.
_DEGENERATE_MASS_FRAC = 1e-12


@dataclass
class Accumulators:
    """Partial sums of one contiguous chunk of samples.

    For every component: the summed responsibilities, the responsibility-
    weighted coordinate sums, and the responsibility-weighted squared
    coordinate sums (the diagonal of the weighted second moment).
    ``log_p_sum`` carries the chunk's total mixture log-density so the
    likelihood trace falls out of the same pass.
    """

    resp_sums: np.ndarray        # (G,)
    weighted_sums: np.ndarray    # (G, D)
    weighted_sq_sums: np.ndarray # (G, D)
    log_p_sum: float = 0.0
    n_samples: int = 0

    @classmethod
    def zeros(cls, n_gaus: int, n_dims: int) -> "Accumulators":
        return cls(np.zeros(n_gaus), np.zeros((n_gaus, n_dims)), np.zeros((n_gaus, n_dims)))


def _estep_block(X: np.ndarray, start: int, stop: int, model: GmmModel,
                 cons: GaussConstants, logw: np.ndarray, active: np.ndarray):
    blk = X[start:stop]
    terms = component_log_densities(blk, model, cons)
    terms += logw
    logp = fold_log_terms(terms, active)
    dead = np.isneginf(logp)
    if dead.any():
        offender = start + int(np.flatnonzero(dead)[0])
        raise FitError(f"mixture density underflowed to zero for sample {offender}; "
                       "check the data scaling and var_floor")
    terms -= logp[:, None]
    resp = np.exp(terms)
    return resp, logp, blk


def responsibilities(x, model: GmmModel, constants: GaussConstants | None = None) -> np.ndarray:
    """Posterior component probabilities for one sample.

    Sums to 1 within 1e-12; zero-heft components get exactly 0. Raises
    :class:`FitError` when the mixture density underflows to zero.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.n_dims:
        raise ValueError(f"dimension mismatch: vector has shape {x.shape}, model has {model.n_dims} dims")
    cons = constants if constants is not None else constants_for(model)
    logw = log_hefts(model)
    resp, _, _ = _estep_block(x[None, :], 0, 1, model, cons, logw, np.flatnonzero(logw > -np.inf))
    return resp[0]


def accumulate_chunk(X, start: int, stop: int, model: GmmModel,
                     constants: GaussConstants | None = None) -> Accumulators:
    """Accumulate E-step statistics over ``X[start:stop]``.

    Internally the range is cut at the global block-grid boundaries and the
    per-block partials are folded in ascending order, so accumulating two
    grid-aligned chunks and summing them reproduces the whole-range result
    exactly.
    """
    X = as_dataset(X)
    cons = constants if constants is not None else constants_for(model)
    logw = log_hefts(model)
    active = np.flatnonzero(logw > -np.inf)
    acc = Accumulators.zeros(model.n_gaus, model.n_dims)
    for s, e in parallel.block_bounds(X.shape[0], start, stop):
        resp, logp, blk = _estep_block(X, s, e, model, cons, logw, active)
        acc.resp_sums += resp.sum(axis=0)
        acc.weighted_sums += resp.T @ blk
        acc.weighted_sq_sums += resp.T @ np.square(blk)
        acc.log_p_sum += float(logp.sum())
        acc.n_samples += e - s
    return acc


def reduce_and_update(accs, model: GmmModel, var_floor: float, n_samples: int) -> GmmModel:
    """Combine per-chunk accumulators (in the given, ascending order) into
    the updated model.

    New hefts are the responsibility masses divided by ``n_samples`` and
    renormalised; new diagonal covariances are floored at ``var_floor``.
    Components whose mass is at most ``1e-12 * n_samples`` keep their
    previous mean and covariance (their heft still shrinks accordingly).
    """
    accs = list(accs)
    if not accs:
        raise ValueError("no accumulators to reduce")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")

    mass = np.zeros(model.n_gaus)
    coord_sums = np.zeros((model.n_gaus, model.n_dims))
    sq_sums = np.zeros((model.n_gaus, model.n_dims))
    for a in accs:
        mass += a.resp_sums
        coord_sums += a.weighted_sums
        sq_sums += a.weighted_sq_sums

    degenerate = mass <= _DEGENERATE_MASS_FRAC * n_samples
    if degenerate.all():
        raise FitError("every component lost its responsibility mass")

    hefts = mass / n_samples
    hefts = hefts / hefts.sum()

    safe_mass = np.where(degenerate, 1.0, mass)
    means = coord_sums / safe_mass[:, None]
    dcovs = np.maximum(sq_sums / safe_mass[:, None] - means * means, var_floor)
    means = np.where(degenerate[:, None], model.means, means)
    dcovs = np.where(degenerate[:, None], model.dcovs, dcovs)
    return GmmModel(means, dcovs, hefts)


def _relative_increase(previous: float, current: float) -> float:
    denom = abs(previous)
    if denom == 0.0:
        denom = 1.0
    return (current - previous) / denom


def em_fit(X, init_model: GmmModel, config: FitConfig, report: FitReport | None = None):
    """Run up to ``config.em_iter`` EM updates starting from ``init_model``.

    Returns ``(model, report)``. The report's likelihood trace holds the
    average log-likelihood of the model produced by each update, so its last
    entry equals ``avg_log_p`` of the returned model on the training data.
    Iteration stops early once the relative likelihood increase drops below
    ``config.em_rel_tol``.
    """
    X = as_dataset(X)
    config.validate()
    if X.shape[1] != init_model.n_dims:
        raise ValueError(f"dimension mismatch: dataset has {X.shape[1]} dims, model has {init_model.n_dims}")
    if report is None:
        report = FitReport()
    if config.em_iter == 0:
        return init_model, report

    n = X.shape[0]
    started = time.perf_counter()
    tick = started
    model = init_model
    updates = 0
    prev_avg = None
    converged = False
    while updates < config.em_iter:
        cons = constants_for(model)
        accs = parallel.map_blocks(
            lambda s, e: accumulate_chunk(X, s, e, model, cons), n, config.n_threads
        )
        total = 0.0
        for a in accs:
            total += a.log_p_sum
        cur_avg = total / n
        if updates > 0:
            # cur_avg scores the model produced by the previous update.
            report.em_log_likelihoods.append(cur_avg)
            now = time.perf_counter()
            emit_progress(config.print_mode, "em", updates - 1, cur_avg, (now - tick) * 1e3)
            tick = now
            if _relative_increase(prev_avg, cur_avg) < config.em_rel_tol:
                converged = True
                break
        prev_avg = cur_avg
        model = reduce_and_update(accs, model, config.var_floor, n)
        updates += 1

    if not converged:
        final_avg = avg_log_p(X, model, n_threads=config.n_threads)
        report.em_log_likelihoods.append(final_avg)
        emit_progress(config.print_mode, "em", updates - 1, final_avg, (time.perf_counter() - tick) * 1e3)
        if prev_avg is not None and _relative_increase(prev_avg, final_avg) < config.em_rel_tol:
            converged = True

    report.em_iterations = updates
    report.em_seconds = time.perf_counter() - started
    report.converged = converged
    return model, report


def _cluster_model(X: np.ndarray, means: np.ndarray, counts: np.ndarray | None,
                   assignment: np.ndarray | None, config: FitConfig,
                   fallback_cov: np.ndarray) -> GmmModel:
    """Initial mixture from a k-means result: hefts from the member counts
    (floored), per-cluster member variances (clusters with fewer than two
    members fall back to the global covariance), everything floored at
    ``config.var_floor``."""
    n, _ = X.shape
    n_gaus = config.n_gaus
    fallback = np.maximum(fallback_cov, config.var_floor)
    if counts is None or assignment is None:
        hefts = np.full(n_gaus, 1.0 / n_gaus)
        dcovs = np.tile(fallback, (n_gaus, 1))
        return GmmModel(means, dcovs, hefts)

    hefts = np.maximum(counts / n, 1.0 / (100.0 * n_gaus))
    hefts = hefts / hefts.sum()
    dcovs = np.empty_like(means)
    for g in range(n_gaus):
        members = X[assignment == g]
        if members.shape[0] < 2:
            dcovs[g] = fallback
        else:
            dcovs[g] = np.maximum(members.var(axis=0), config.var_floor)
    return GmmModel(means, dcovs, hefts)


def learn(X, config: FitConfig, init_model: GmmModel | None = None):
    """Full training pipeline: seed, k-means, cluster-to-mixture conversion,
    EM. Returns ``(model, report)``.

    With ``seed_mode == keep-existing`` the k-means phase is skipped and EM
    refines ``init_model`` directly.
    """
    X = as_dataset(X)
    config.validate()
    n, n_dims = X.shape
    if n < config.n_gaus:
        raise ValueError(f"insufficient samples: {n} samples for {config.n_gaus} Gaussians")

    report = FitReport()
    if n < 10 * config.n_gaus:
        report.warnings.append(
            f"only {n} samples for {config.n_gaus} Gaussians; "
            f"at least {10 * config.n_gaus} are recommended"
        )

    if config.seed_mode == SeedMode.KEEP_EXISTING:
        if init_model is None:
            raise ValueError("seed_mode keep-existing requires an initial model")
        if init_model.n_dims != n_dims:
            raise ValueError(f"dimension mismatch: dataset has {n_dims} dims, initial model has {init_model.n_dims}")
        if init_model.n_gaus != config.n_gaus:
            raise ValueError(f"initial model has {init_model.n_gaus} Gaussians, config asks for {config.n_gaus}")
        start_model = init_model
    else:
        mode = DistMode.mahalanobis(X) if config.dist_mode == DIST_MAHA else DistMode()
        km = run_kmeans(X, config, dist_mode=mode)
        report.km_objectives = km.objectives
        report.km_iterations = km.iterations
        report.km_seconds = km.seconds
        if mode.inv_var is not None:
            fallback_cov = 1.0 / mode.inv_var
        else:
            fallback_cov = global_diag_cov(X)
        start_model = _cluster_model(X, km.means, km.counts, km.assignment, config, fallback_cov)

    return em_fit(X, start_model, config, report)
