"""CSV dataset I/O and synthetic mixture generators.

Datasets are headerless CSV files, one sample per row. Generator presets:

* ``fig1``: two 5-D unit-variance clusters at (1..5) and (3..7), mixed 2:1.
* ``bench``: twenty 32-D unit-variance clusters with fixed random centres,
  sized for thread-scaling measurements.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .inference import generate
from .model import GmmModel, as_dataset


def load_dataset(path) -> np.ndarray:
    """Read a headerless CSV dataset; raises :class:`DataError` when the file
    is missing, unparsable, empty or contains non-finite values."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # empty input is reported below
            raw = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"malformed CSV dataset {path}: {exc}") from exc
    if raw.size == 0:
        raise DataError(f"dataset {path} is empty")
    try:
        return as_dataset(raw)
    except ValueError as exc:
        raise DataError(f"invalid dataset {path}: {exc}") from exc


def save_dataset(X, path_or_file) -> None:
    """Write samples as headerless CSV with full double precision."""
    np.savetxt(path_or_file, np.asarray(X, dtype=np.float64), delimiter=",", fmt="%.17g")


@dataclass(frozen=True)
class MixtureSpec:
    """Generator description: component weights, means and per-dimension
    standard deviations (``scales``)."""

    weights: np.ndarray  # (G,)
    means: np.ndarray    # (G, D)
    scales: np.ndarray   # (G, D)

    def __post_init__(self):
        weights = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        means = np.array(self.means, dtype=np.float64, ndmin=2)
        scales = np.array(self.scales, dtype=np.float64, ndmin=2)
        if means.ndim != 2:
            raise ValueError(f"means must be a (n_components, n_dims) matrix, got shape {means.shape}")
        if scales.shape != means.shape:
            raise ValueError(f"scales shape {scales.shape} does not match means shape {means.shape}")
        if weights.shape != (means.shape[0],):
            raise ValueError(f"weights: expected length {means.shape[0]}, got shape {weights.shape}")
        if np.any(scales <= 0) or not np.all(np.isfinite(scales)):
            raise ValueError("scales must be finite and positive")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "scales", scales)
        self.to_model()  # validates weights/means through the model invariants

    @classmethod
    def from_json(cls, path) -> "MixtureSpec":
        """Load ``{"weights": [...], "means": [[...]], "scales": [[...]]}``;
        ``scales`` is optional and defaults to all ones."""
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"cannot read generator spec {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed generator spec {path}: {exc}") from exc
        if not isinstance(doc, dict) or "weights" not in doc or "means" not in doc:
            raise DataError(f"generator spec {path} must be an object with 'weights' and 'means'")
        try:
            means = np.array(doc["means"], dtype=np.float64, ndmin=2)
            scales = doc.get("scales")
            scales = np.ones_like(means) if scales is None else np.array(scales, dtype=np.float64, ndmin=2)
            return cls(doc["weights"], means, scales)
        except ValueError as exc:
            raise DataError(f"invalid generator spec {path}: {exc}") from exc

    def to_model(self) -> GmmModel:
        return GmmModel(self.means, self.scales * self.scales, self.weights)

    def sample(self, n: int, rng_seed=None) -> np.ndarray:
        """Draw ``n`` samples; identical to sampling the equivalent model."""
        return generate(self.to_model(), n, rng_seed)


def preset_fig1() -> MixtureSpec:
    base = np.arange(1.0, 6.0)
    means = np.stack([base, base + 2.0])
    return MixtureSpec(np.array([2.0, 1.0]) / 3.0, means, np.ones_like(means))


def preset_bench(n_components: int = 20, n_dims: int = 32) -> MixtureSpec:
    centres = np.random.default_rng(1234).normal(0.0, 5.0, size=(n_components, n_dims))
    return MixtureSpec(np.full(n_components, 1.0 / n_components), centres, np.ones_like(centres))


PRESETS = {"fig1": preset_fig1, "bench": preset_bench}
PRESET_DEFAULT_N = {"fig1": 10_000, "bench": 100_000}
