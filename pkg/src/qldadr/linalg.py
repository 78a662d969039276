"""Dense real-symmetric linear algebra.

Matrix functions are evaluated spectrally: a symmetric matrix is
diagonalised once and the function is applied to its eigenvalues.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

from .errors import NumericalError

SYM_ATOL = 1e-12
PSD_RTOL = 1e-10


class EigenDecomposition(NamedTuple):
    """Eigenpairs sorted by descending eigenvalue; ``vectors[:, k]`` pairs with ``values[k]``."""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class ClampPolicy:
    """Effective condition number used to cut off small eigenvalues.

    Eigenvalues below ``max_eigenvalue / kappa`` are either dropped
    (``mode="discard"``) or raised to that floor (``mode="floor"``).
    """

    kappa: float
    mode: Literal["discard", "floor"] = "discard"

    def __post_init__(self):
        if not np.isfinite(self.kappa) or self.kappa <= 1.0:
            raise ValueError(f"kappa must be finite and > 1, got {self.kappa}")
        if self.mode not in ("discard", "floor"):
            raise ValueError(f"unknown clamp mode {self.mode!r}")


def check_symmetric(a, name: str = "matrix") -> np.ndarray:
    """Validate a square real matrix and return its symmetrised copy.

    The asymmetry tolerance is 1e-12 absolute, scaled up for matrices whose
    entries exceed one in magnitude.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise NumericalError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{name} has non-finite entries")
    diff = np.abs(a - a.T)
    tol = SYM_ATOL * max(1.0, float(np.max(np.abs(a))))
    worst = float(diff.max())
    if worst > tol:
        r, c = np.unravel_index(int(np.argmax(diff)), diff.shape)
        raise NumericalError(
            f"{name} is not symmetric: entries [{r},{c}]={float(a[r, c])!r} and "
            f"[{c},{r}]={float(a[c, r])!r} differ by {worst:.3e}"
        )
    return 0.5 * (a + a.T)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so that its largest-magnitude entry is positive."""
    vectors = np.array(vectors, dtype=float)
    if vectors.size == 0:
        return vectors
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eig(a) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix, descending order.

    Equal eigenvalues keep the order in which the solver produced them, and
    every eigenvector is sign-fixed (see :func:`fix_signs`).
    """
    a = check_symmetric(a)
    values, vectors = np.linalg.eigh(a)
    order = np.argsort(-values, kind="stable")
    return EigenDecomposition(values[order], fix_signs(vectors[:, order]))


def mat_power_half(a, sign: float, clamp: ClampPolicy | None = None) -> np.ndarray:
    """Signed square root ``a**(+1/2)`` or ``a**(-1/2)`` of a PSD matrix.

    Parameters
    ----------
    a : array_like
        Symmetric positive semidefinite matrix.
    sign : {+0.5, -0.5}
        Exponent.
    clamp : ClampPolicy, optional
        Cut-off for small eigenvalues relative to the largest one. Without a
        policy only eigenvalues that are exactly representable are powered:
        a zero eigenvalue under ``sign=-0.5`` raises.
    """
    if sign not in (0.5, -0.5):
        raise ValueError("sign must be +0.5 or -0.5")
    values, vectors = sym_eig(a)
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if values[-1] < -PSD_RTOL * max(scale, 1e-300):
        raise NumericalError(f"matrix is not positive semidefinite (smallest eigenvalue {values[-1]:.3e})")
    values = np.clip(values, 0.0, None)
    top = values[0]
    if top <= 0.0:
        raise NumericalError("matrix entirely below condition floor")

    if clamp is None:
        keep = values > 0.0 if sign > 0 else np.ones_like(values, dtype=bool)
        if sign < 0 and np.any(values <= 0.0):
            raise NumericalError("inverse square root of a singular matrix; supply a ClampPolicy")
        powered = np.where(keep, values, 1.0) ** sign * keep
    else:
        floor = top / clamp.kappa
        below = values < floor
        if clamp.mode == "floor":
            powered = np.where(below, floor, values) ** sign
        else:
            powered = np.where(below, 1.0, values) ** sign
            powered[below] = 0.0
    return (vectors * powered) @ vectors.T


def whitened_between(sw, sb, clamp: ClampPolicy | None = None) -> np.ndarray:
    """``S_W^{-1/2} S_B S_W^{-1/2}`` without trace normalisation."""
    sb = check_symmetric(sb, "sb")
    w = mat_power_half(sw, -0.5, clamp)
    out = w @ sb @ w
    return 0.5 * (out + out.T)


def build_rho(sw, sb, clamp: ClampPolicy | None = None) -> np.ndarray:
    """Unit-trace density operator ``S_W^{-1/2} S_B S_W^{-1/2} / tr(.)``."""
    m = whitened_between(sw, sb, clamp)
    tr = float(np.trace(m))
    if tr <= 0.0:
        raise NumericalError("whitened between-class scatter has zero trace")
    return m / tr
