"""Diagonal-covariance Gaussian mixture parameters and their on-disk format.

A :class:`GmmModel` owns the mixture weights ("hefts"), the component means
and the diagonal covariances. Models are immutable after construction: every
setter returns a new model, which makes sharing across threads for read-only
scoring safe and keeps cached density constants trivially consistent.

The persistent format is line-oriented UTF-8 text::

    GMM_DIAG 1
    <n_dims> <n_gaus>
    <heft_0> ... <heft_{G-1}>
    <mean row, one per component, n_dims values each>
    <dcov row, one per component, n_dims values each>

All reals are printed with 17 significant digits, so a save/load round trip
reproduces every double bit-exactly.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import ModelFormatError

_MAGIC = "GMM_DIAG"
_FORMAT_VERSION = 1

# Hefts within this absolute tolerance of summing to 1 are accepted and then
# renormalised exactly; anything further off is rejected.
HEFT_SUM_TOL = 1e-9


def as_dataset(samples) -> np.ndarray:
    """Validate and return a dataset as a C-contiguous (n_samples, n_dims)
    float64 array.

    Raises ``ValueError`` for empty, non-2-D or non-finite input.
    """
    arr = np.ascontiguousarray(samples, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"dataset must be 2-D (n_samples, n_dims), got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"dataset must have at least one sample and one dimension, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("dataset contains non-finite values")
    return arr


def _fmt(value: float) -> str:
    return format(value, ".17g")


class GmmModel:
    """Parameter set of a diagonal-covariance Gaussian mixture.

    Invariants enforced on every construction path:

    * ``hefts`` are non-negative and sum to 1 (renormalised exactly after an
      input tolerance of ``HEFT_SUM_TOL``),
    * ``dcovs`` entries are strictly positive and finite,
    * ``means`` and ``dcovs`` share the shape ``(n_gaus, n_dims)``.
    """

    __slots__ = ("_means", "_dcovs", "_hefts", "_cache")

    def __init__(self, means, dcovs, hefts):
        means = np.array(means, dtype=np.float64, ndmin=2)
        dcovs = np.array(dcovs, dtype=np.float64, ndmin=2)
        hefts = np.atleast_1d(np.array(hefts, dtype=np.float64))

        if means.ndim != 2 or means.shape[0] < 1 or means.shape[1] < 1:
            raise ValueError(f"means: expected a (n_gaus, n_dims) matrix, got shape {means.shape}")
        if not np.all(np.isfinite(means)):
            raise ValueError("means: contains non-finite values")
        if dcovs.shape != means.shape:
            raise ValueError(f"dcovs: shape {dcovs.shape} does not match means shape {means.shape}")
        if not np.all(np.isfinite(dcovs)):
            raise ValueError("dcovs: contains non-finite values")
        if np.any(dcovs <= 0.0):
            raise ValueError("dcovs: entries must be strictly positive")
        if hefts.ndim != 1 or hefts.shape[0] != means.shape[0]:
            raise ValueError(f"hefts: expected length {means.shape[0]}, got shape {hefts.shape}")
        if not np.all(np.isfinite(hefts)):
            raise ValueError("hefts: contains non-finite values")
        if np.any(hefts < 0.0):
            raise ValueError("hefts: entries must be non-negative")
        total = float(hefts.sum())
        if abs(total - 1.0) > HEFT_SUM_TOL:
            raise ValueError(f"hefts: must sum to 1 within {HEFT_SUM_TOL:g}, got sum {total!r}")

        self._means = means
        self._dcovs = dcovs
        # Renormalise only when the sum invariant does not already hold;
        # leaving compliant hefts untouched keeps save/load bit-exact.
        self._hefts = hefts if abs(total - 1.0) <= 1e-12 else hefts / total
        for arr in (self._means, self._dcovs, self._hefts):
            arr.flags.writeable = False
        self._cache = None  # lazily filled by likelihood.constants_for

    @classmethod
    def reset(cls, n_dims: int, n_gaus: int) -> "GmmModel":
        """Fresh model: zero means, unit diagonal covariances, uniform hefts."""
        if n_dims < 1 or n_gaus < 1:
            raise ValueError(f"n_dims and n_gaus must be positive, got {n_dims}, {n_gaus}")
        return cls(
            np.zeros((n_gaus, n_dims)),
            np.ones((n_gaus, n_dims)),
            np.full(n_gaus, 1.0 / n_gaus),
        )

    @property
    def hefts(self) -> np.ndarray:
        return self._hefts

    @property
    def means(self) -> np.ndarray:
        return self._means

    @property
    def dcovs(self) -> np.ndarray:
        return self._dcovs

    @property
    def n_gaus(self) -> int:
        return self._means.shape[0]

    @property
    def n_dims(self) -> int:
        return self._means.shape[1]

    def set_params(self, means, dcovs, hefts) -> "GmmModel":
        """New model with all parameters replaced; shape may change."""
        return GmmModel(means, dcovs, hefts)

    def set_hefts(self, hefts) -> "GmmModel":
        hefts = np.atleast_1d(np.asarray(hefts, dtype=np.float64))
        if hefts.shape != (self.n_gaus,):
            raise ValueError(f"hefts: expected length {self.n_gaus} to match the existing model, got shape {hefts.shape}")
        return GmmModel(self._means, self._dcovs, hefts)

    def set_means(self, means) -> "GmmModel":
        means = np.asarray(means, dtype=np.float64)
        if means.shape != self._means.shape:
            raise ValueError(f"means: expected shape {self._means.shape} to match the existing model, got {means.shape}")
        return GmmModel(means, self._dcovs, self._hefts)

    def set_dcovs(self, dcovs) -> "GmmModel":
        dcovs = np.asarray(dcovs, dtype=np.float64)
        if dcovs.shape != self._dcovs.shape:
            raise ValueError(f"dcovs: expected shape {self._dcovs.shape} to match the existing model, got {dcovs.shape}")
        return GmmModel(self._means, dcovs, self._hefts)

    def save(self, path) -> None:
        """Write the model as text; see the module docstring for the layout."""
        lines = [f"{_MAGIC} {_FORMAT_VERSION}", f"{self.n_dims} {self.n_gaus}"]
        lines.append(" ".join(_fmt(v) for v in self._hefts))
        for row in self._means:
            lines.append(" ".join(_fmt(v) for v in row))
        for row in self._dcovs:
            lines.append(" ".join(_fmt(v) for v in row))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "GmmModel":
        """Read a model written by :meth:`save`.

        Raises :class:`ModelFormatError` for bad magic, unsupported version,
        missing or extra tokens, non-finite values or parameters violating
        the model invariants. I/O problems propagate as ``OSError``.
        """
        text = Path(path).read_text(encoding="utf-8")
        lines = text.splitlines()
        if not lines:
            raise ModelFormatError("empty model file")

        header = lines[0].split()
        if len(header) != 2 or header[0] != _MAGIC:
            raise ModelFormatError(f"not a {_MAGIC} model file")
        if header[1] != str(_FORMAT_VERSION):
            raise ModelFormatError(f"unsupported model format version {header[1]!r}")

        if len(lines) < 2:
            raise ModelFormatError("model file is truncated: missing dimensions line")
        dims = lines[1].split()
        if len(dims) != 2:
            raise ModelFormatError(f"expected '<n_dims> <n_gaus>' on line 2, got {lines[1]!r}")
        try:
            n_dims, n_gaus = int(dims[0]), int(dims[1])
        except ValueError:
            raise ModelFormatError(f"non-integer dimensions on line 2: {lines[1]!r}") from None
        if n_dims < 1 or n_gaus < 1:
            raise ModelFormatError(f"dimensions must be positive, got {n_dims} x {n_gaus}")

        expected_lines = 3 + 2 * n_gaus
        if len(lines) < expected_lines:
            raise ModelFormatError(f"model file is truncated: expected {expected_lines} lines, got {len(lines)}")
        if any(line.strip() for line in lines[expected_lines:]):
            raise ModelFormatError("trailing content after model data")

        hefts = _parse_row(lines[2], n_gaus, "hefts")
        means = np.vstack([_parse_row(lines[3 + g], n_dims, f"mean {g}") for g in range(n_gaus)])
        dcovs = np.vstack([_parse_row(lines[3 + n_gaus + g], n_dims, f"dcov {g}") for g in range(n_gaus)])
        try:
            return cls(means, dcovs, hefts)
        except ValueError as exc:
            raise ModelFormatError(f"model file violates invariants: {exc}") from exc

    def __repr__(self) -> str:
        return f"GmmModel(n_gaus={self.n_gaus}, n_dims={self.n_dims})"


def _parse_row(line: str, width: int, what: str) -> np.ndarray:
    tokens = line.split()
    if len(tokens) != width:
        raise ModelFormatError(f"{what}: expected {width} values, got {len(tokens)}")
    values = np.empty(width)
    for i, tok in enumerate(tokens):
        try:
            v = float(tok)
        except ValueError:
            raise ModelFormatError(f"{what}: bad numeric token {tok!r}") from None
        if not math.isfinite(v):
            raise ModelFormatError(f"{what}: non-finite value {tok!r}")
        values[i] = v
    return values
