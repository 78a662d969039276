"""Synthetic datasets with controlled scatter spectra.

``dyadic_dataset`` builds data whose within-class scatter has square-root
eigenvalues and whose whitened between-class operator has eigenvalues that
are exact binary fractions, so both phase estimations read out without
truncation error.  ``generic_dataset`` draws Gaussian clusters.
"""
from __future__ import annotations

import numpy as np

from .lda import Dataset

# Square-root eigenvalues a / 8 with sum(a**2) == 64, so tr(S_W) == 1.
DYADIC_SIGMAS_5 = (
    (6, 4, 2, 2, 2),
    (7, 3, 2, 1, 1),
    (5, 5, 3, 2, 1),
    (6, 3, 3, 3, 1),
)


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _centered_frame(rng: np.random.Generator, m: int, k: int) -> np.ndarray:
    """``k x m`` matrix with orthonormal rows, each orthogonal to ``1_m``."""
    if k > m - 1:
        raise ValueError(f"need at least {k + 1} points per class, got {m}")
    a = np.column_stack([np.ones(m), rng.standard_normal((m, k))])
    q, _ = np.linalg.qr(a)
    return q[:, 1 : k + 1].T


def _dyadic_split(rng: np.random.Generator, total: int, parts: int, minimum: int) -> list[int]:
    """Distinct positive integers ``>= minimum`` summing to ``total``, descending."""
    for _ in range(10_000):
        cuts = np.sort(rng.choice(np.arange(1, total), size=parts - 1, replace=False))
        sizes = np.diff(np.concatenate([[0], cuts, [total]]))
        if sizes.min() >= minimum and len(set(sizes.tolist())) == parts:
            return sorted(sizes.tolist(), reverse=True)
    raise RuntimeError("could not draw a dyadic split")


def synthesize(
    rng: np.random.Generator,
    sw_root: np.ndarray,
    rho_vectors: np.ndarray,
    rho_values: np.ndarray,
    n_classes: int,
    per_class: int,
    offset_scale: float = 3.0,
) -> Dataset:
    """Dataset whose unit-trace scatters give ``sw = sw_root**2`` and rho exactly.

    Classes have equal size, so the global mean is the mean of the
    centroids; within-class deviations are built from centred orthonormal
    frames so they sum to zero per class.
    """
    D = sw_root.shape[0]
    if np.any(np.asarray(rho_values) <= 0):
        raise ValueError("rho values must be positive")
    helm = _centered_frame(rng, n_classes, n_classes - 1).T  # n x (n-1)
    f = sw_root @ rho_vectors @ np.diag(np.sqrt(rho_values))
    g = helm @ f.T  # n x D between-class offsets
    origin = rng.uniform(-1, 1, D) * offset_scale + offset_scale
    rows, labels = [], []
    for c in range(n_classes):
        frame = random_orthogonal(rng, D) @ _centered_frame(rng, per_class, D) / np.sqrt(n_classes)
        dev = (sw_root @ frame).T
        rows.append(origin + g[c] + dev)
        labels += [c + 1] * per_class
    return Dataset(np.vstack(rows), np.array(labels))


def dyadic_dataset(
    seed: int,
    n_classes: int = 3,
    L: int = 8,
    per_class: int = 6,
    sigmas=None,
) -> tuple[Dataset, dict]:
    """Dataset with exactly representable spectra.

    Square-root within-class eigenvalues are multiples of 1/8 (exact with
    ``sigma_bits >= 4`` at ``t = pi``); rho eigenvalues are multiples of
    ``2**(1 - L)`` (exact with ``L`` readout bits).
    """
    rng = np.random.default_rng(seed)
    if sigmas is None:
        sigmas = DYADIC_SIGMAS_5[rng.integers(len(DYADIC_SIGMAS_5))]
    sigmas = np.asarray(sigmas, dtype=float)
    sigmas = sigmas / np.sqrt(np.sum(sigmas**2))
    D = sigmas.size
    u = random_orthogonal(rng, D)
    root = (u * sigmas) @ u.T
    r = n_classes - 1
    nums = _dyadic_split(rng, 2 ** (L - 1), r, minimum=max(n_classes, 2))
    values = np.array(nums, dtype=float) / 2 ** (L - 1)
    v = random_orthogonal(rng, D)[:, :r]
    ds = synthesize(rng, root, v, values, n_classes, max(per_class, D + 1))
    return ds, {"sigma": sigmas, "rho_values": values, "rho_vectors": v, "sw_vectors": u}


def isotropic_dataset(seed: int, n_classes: int = 3, D: int = 4, per_class: int = 5) -> tuple[Dataset, dict]:
    """Dataset whose within-class scatter is a multiple of the identity."""
    rng = np.random.default_rng(seed)
    root = np.eye(D) / np.sqrt(D)
    r = n_classes - 1
    values = rng.dirichlet(np.ones(r)) * 0.8 + 0.2 / r
    values = np.sort(values)[::-1]
    v = random_orthogonal(rng, D)[:, :r]
    ds = synthesize(rng, root, v, values, n_classes, max(per_class, D + 1))
    return ds, {"rho_values": values, "rho_vectors": v}


def generic_dataset(
    seed: int,
    n_classes: int = 3,
    D: int = 4,
    per_class: int = 4,
    separation: float = 2.0,
) -> Dataset:
    """Gaussian clusters with anisotropic covariance."""
    rng = np.random.default_rng(seed)
    mix = rng.standard_normal((D, D)) * 0.5 + np.eye(D)
    means = rng.standard_normal((n_classes, D)) * separation
    rows, labels = [], []
    for c in range(n_classes):
        rows.append(means[c] + rng.standard_normal((per_class, D)) @ mix + 5.0)
        labels += [c + 1] * per_class
    return Dataset(np.vstack(rows), np.array(labels))
