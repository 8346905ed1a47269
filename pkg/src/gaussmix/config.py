"""Training configuration and fit reporting."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from enum import Enum

DIST_EUCL = "eucl"
DIST_MAHA = "maha"


class SeedMode(str, Enum):
    """How initial means are chosen before k-means / EM."""

    KEEP_EXISTING = "keep-existing"
    STATIC_SUBSET = "static-subset"
    RANDOM_SUBSET = "random-subset"
    STATIC_SPREAD = "static-spread"
    RANDOM_SPREAD = "random-spread"


_RANDOM_SEED_MODES = (SeedMode.RANDOM_SUBSET, SeedMode.RANDOM_SPREAD)


@dataclass
class FitConfig:
    """All knobs of the fitting pipeline.

    ``dist_mode`` selects the distance used for seeding and k-means:
    ``"eucl"`` (squared Euclidean) or ``"maha"`` (squared Mahalanobis with a
    diagonal global covariance estimated from the training data).
    """

    n_gaus: int
    dist_mode: str = DIST_EUCL
    seed_mode: SeedMode = SeedMode.STATIC_SUBSET
    km_iter: int = 10
    em_iter: int = 5
    var_floor: float = 1e-10
    n_threads: int = 1
    rng_seed: int | None = None
    em_rel_tol: float = 1e-10
    print_mode: bool = False

    def validate(self) -> None:
        if self.n_gaus < 1:
            raise ValueError("n_gaus must be a positive integer")
        if self.dist_mode not in (DIST_EUCL, DIST_MAHA):
            raise ValueError(f"dist_mode must be {DIST_EUCL!r} or {DIST_MAHA!r}, got {self.dist_mode!r}")
        self.seed_mode = SeedMode(self.seed_mode)
        if self.km_iter < 0:
            raise ValueError("km_iter must be >= 0")
        if self.em_iter < 0:
            raise ValueError("em_iter must be >= 0")
        if not (self.var_floor > 0 and math.isfinite(self.var_floor)):
            raise ValueError("var_floor must be a positive finite real")
        if self.n_threads < 1:
            raise ValueError("n_threads must be >= 1")
        if self.em_rel_tol < 0 or not math.isfinite(self.em_rel_tol):
            raise ValueError("em_rel_tol must be a non-negative finite real")
        if self.seed_mode in _RANDOM_SEED_MODES and self.rng_seed is None:
            raise ValueError(f"seed_mode {self.seed_mode.value!r} requires rng_seed")


@dataclass
class FitReport:
    """Per-phase traces and timings collected while fitting.

    ``km_objectives`` holds the total within-cluster distance of each k-means
    assignment pass; ``em_log_likelihoods`` holds the average log-likelihood
    of the model produced by each EM update.
    """

    km_objectives: list[float] = field(default_factory=list)
    em_log_likelihoods: list[float] = field(default_factory=list)
    km_seconds: float = 0.0
    em_seconds: float = 0.0
    km_iterations: int = 0
    em_iterations: int = 0
    converged: bool = False
    warnings: list[str] = field(default_factory=list)

    @property
    def final_log_likelihood(self) -> float | None:
        return self.em_log_likelihoods[-1] if self.em_log_likelihoods else None


def emit_progress(enabled: bool, phase: str, index: int, value: float, ms: float) -> None:
    """One progress line per iteration on stderr: phase, index, value, ms."""
    if enabled:
        print(f"{phase} {index} {value:.17g} {ms:.1f}", file=sys.stderr)
