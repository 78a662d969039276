"""Classical LDA: scatter operators, the whitened spectrum, and projections.

The scatter operators follow the density-matrix normalisation: each is
divided by its trace, so ``tr(sw) == tr(sb) == 1``.  The within-class
difference vectors carry an additive regulariser ``alpha`` on every
component.
"""
from __future__ import annotations

import logging
import warnings as _warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError
from .linalg import ClampPolicy, build_rho, check_symmetric, mat_power_half, sym_eig, whitened_between

logger = logging.getLogger(__name__)

RIDGE_FLOOR = 1e-8
DEFAULT_THRESHOLD = 0.95


@dataclass(frozen=True)
class Dataset:
    """Labelled samples. ``labels`` hold class ids ``1..n``."""

    samples: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        y = np.array(self.labels).astype(int).ravel()
        if x.ndim != 2:
            raise DataError(f"samples must be a 2-D array, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DataError("samples contain non-finite values")
        m, d = x.shape
        if y.shape[0] != m:
            raise DataError(f"{m} samples but {y.shape[0]} labels")
        if d < 2:
            raise DataError("need at least 2 features")
        if m == 0 or y.min() < 1:
            raise DataError("class ids must start at 1")
        n = int(y.max())
        missing = sorted(set(range(1, n + 1)) - set(y.tolist()))
        if missing:
            raise DataError(f"class ids {missing} never occur")
        if n < 2:
            raise DataError("need at least 2 classes")
        zero_rows = np.flatnonzero(~x.any(axis=1))
        if zero_rows.size:
            raise DataError(f"row {int(zero_rows[0])} is all-zero; amplitude encoding needs nonzero rows")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "labels", y)

    @property
    def M(self) -> int:
        return self.samples.shape[0]

    @property
    def D(self) -> int:
        return self.samples.shape[1]

    @property
    def n(self) -> int:
        return int(self.labels.max())

    def centroids(self) -> np.ndarray:
        return np.stack([self.samples[self.labels == c].mean(axis=0) for c in range(1, self.n + 1)])

    def global_mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)


@dataclass(frozen=True)
class ScatterModel:
    sw: np.ndarray
    sb: np.ndarray
    a_norm: float
    b_norm: float
    alpha: float
    centroids: np.ndarray
    global_mean: np.ndarray
    ridge: float = 0.0
    warnings: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.centroids.shape[0]


@dataclass(frozen=True)
class ShadowSpectrum:
    """Eigenpairs of the unit-trace operator rho and the selected dimension.

    ``scale`` is the trace removed by normalisation, so ``values * scale``
    are the eigenvalues of ``S_W^{-1} S_B``.
    """

    values: np.ndarray
    vectors: np.ndarray
    d: int
    threshold: float
    scale: float = 1.0
    warnings: tuple[str, ...] = field(default=())

    @property
    def kept_values(self) -> np.ndarray:
        return self.values[: self.d]

    @property
    def kept_vectors(self) -> np.ndarray:
        return self.vectors[:, : self.d]


def within_scatter(ds: Dataset, alpha: float = 0.0) -> tuple[np.ndarray, float]:
    """Unit-trace within-class scatter and its normalisation constant ``A``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    diffs = ds.samples - ds.centroids()[ds.labels - 1] + alpha
    a_norm = float(np.sum(diffs**2))
    if a_norm == 0.0:
        raise DataError("degenerate within-class scatter")
    return diffs.T @ diffs / a_norm, a_norm


def between_scatter(ds: Dataset) -> tuple[np.ndarray, float]:
    """Unit-trace between-class scatter and its normalisation constant ``B``.

    Every class contributes equally, regardless of its size.
    """
    g = ds.centroids() - ds.global_mean()
    b_norm = float(np.sum(g**2))
    if b_norm == 0.0:
        raise DataError("no between-class variance")
    return g.T @ g / b_norm, b_norm


def default_alpha(ds: Dataset) -> float:
    return 1e-6 * float(np.mean(np.abs(ds.samples)))


def build_scatter_model(ds: Dataset, alpha: float | None = None) -> ScatterModel:
    """Scatter operators with a ridge fallback.

    If the additive regulariser leaves ``sw`` with smallest eigenvalue below
    ``1e-8 * tr(sw)``, a diagonal ridge is added before normalising and a
    warning is recorded.
    """
    if alpha is None:
        alpha = default_alpha(ds)
    sw, a_norm = within_scatter(ds, alpha)
    sb, b_norm = between_scatter(ds)
    notes = []
    raw = sw * a_norm
    lam_min = float(np.linalg.eigvalsh(raw)[0])
    ridge = 0.0
    if lam_min < RIDGE_FLOOR * a_norm:
        ridge = 2.0 * (RIDGE_FLOOR * a_norm - lam_min) / (1.0 - RIDGE_FLOOR * ds.D)
        raw = raw + ridge * np.eye(ds.D)
        a_norm = float(np.trace(raw))
        sw = raw / a_norm
        msg = f"within-class scatter near singular (min eigenvalue {lam_min:.3e}); added ridge {ridge:.3e}"
        logger.warning(msg)
        notes.append(msg)
    return ScatterModel(
        sw=sw,
        sb=sb,
        a_norm=a_norm,
        b_norm=b_norm,
        alpha=float(alpha),
        centroids=ds.centroids(),
        global_mean=ds.global_mean(),
        ridge=ridge,
        warnings=tuple(notes),
    )


def select_dimension(values: np.ndarray, threshold: float, n_classes: int) -> tuple[int, list[str]]:
    """Smallest ``d`` whose leading eigenvalues reach ``threshold``, capped at ``n - 1``."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    notes = []
    cap = n_classes - 1
    cum = np.cumsum(values)
    hits = np.flatnonzero(cum >= threshold - 1e-12)
    if hits.size and hits[0] < cap:
        return int(hits[0]) + 1, notes
    msg = f"threshold {threshold} unreachable within n-1={cap} components; using d={cap}"
    notes.append(msg)
    _warnings.warn(msg, RuntimeWarning, stacklevel=3)
    return cap, notes


def solve_shadow(
    model: ScatterModel,
    clamp: ClampPolicy | None = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> ShadowSpectrum:
    m = whitened_between(model.sw, model.sb, clamp)
    scale = float(np.trace(m))
    if scale <= 0:
        raise NumericalError("whitened between-class scatter has zero trace")
    values, vectors = sym_eig(m / scale)
    values = np.clip(values, 0.0, None)
    d, notes = select_dimension(values, threshold, model.n)
    return ShadowSpectrum(
        values=values, vectors=vectors, d=d, threshold=threshold, scale=scale, warnings=tuple(notes)
    )


def lda_directions(model: ScatterModel, spec: ShadowSpectrum, clamp: ClampPolicy | None = None) -> np.ndarray:
    """Unit-length LDA directions ``S_W^{-1/2} v_j`` for the kept components."""
    w = mat_power_half(model.sw, -0.5, clamp) @ spec.kept_vectors
    return w / np.linalg.norm(w, axis=0)


def project_pipeline_oracle(ds: Dataset, model: ScatterModel, spec: ShadowSpectrum) -> np.ndarray:
    """Coefficients ``y_ij = v_j . S_W^{1/2} x_i`` carried by the quantum output state."""
    root = mat_power_half(model.sw, 0.5)
    return ds.samples @ root @ spec.kept_vectors


def project_unit_directions(ds: Dataset, model: ScatterModel, spec: ShadowSpectrum) -> np.ndarray:
    """Textbook LDA projection ``y_ij = omega_j . x_i`` onto unit LDA directions."""
    return ds.samples @ lda_directions(model, spec)


def discriminant_objective(model: ScatterModel, w) -> float:
    """Fisher ratio ``(w' S_B w) / (w' S_W w)``."""
    w = np.asarray(w, dtype=float)
    den = float(w @ model.sw @ w)
    if den <= 0.0:
        raise NumericalError("zero within-class variance along w")
    return float(w @ model.sb @ w) / den


def rho_of(model: ScatterModel, clamp: ClampPolicy | None = None) -> np.ndarray:
    return build_rho(model.sw, model.sb, clamp)


def model_from_operators(sw, sb, n_classes: int) -> ScatterModel:
    """Wrap hand-built scatter operators (used for toy models and tests)."""
    sw = check_symmetric(sw, "sw")
    sb = check_symmetric(sb, "sb")
    dim = sw.shape[0]
    return ScatterModel(
        sw=sw,
        sb=sb,
        a_norm=float(np.trace(sw)),
        b_norm=float(np.trace(sb)),
        alpha=0.0,
        centroids=np.zeros((n_classes, dim)),
        global_mean=np.zeros(dim),
    )
