"""Classical closed forms for the post-selection probabilities and fidelity.

These evaluate the same quantities as the simulated pipeline using plain
matrix algebra only, so the two routes can be checked against each other.
"""
from __future__ import annotations

import numpy as np

from .linalg import mat_power_half


def lda_basis(sw, vectors) -> np.ndarray:
    """Unit-length directions ``S_W^{-1/2} v_j`` for every column of ``vectors``."""
    w = mat_power_half(sw, -0.5) @ vectors
    return w / np.linalg.norm(w, axis=0)


def p1_closed_form(x, sw, vectors, sigma_vectors, amplitudes) -> tuple[float, float]:
    """Success probability of the rotation post-selection.

    ``x`` is expanded in the (possibly oblique) unit LDA basis ``omega``,
    ``beta_jk = <u_k|omega_j>``, and ``amplitudes[k] = C1 * sigma_k`` is the
    rotation amplitude on eigencomponent ``k``.  Returns the coherent sum
    ``sum_ik (sum_j y_ij beta_jk)^2 a_k^2 / ||X||^2`` and the diagonal form
    ``sum_ijk y_ij^2 beta_jk^2 a_k^2 / ||X||^2``; they agree when the omega
    basis is orthonormal.
    """
    x = np.asarray(x, dtype=float)
    omega = lda_basis(sw, vectors)
    y = np.linalg.solve(omega, x.T).T
    beta = omega.T @ sigma_vectors
    a2 = np.asarray(amplitudes, dtype=float) ** 2
    fro2 = float(np.sum(x**2))
    coherent = float(np.sum((y @ beta) ** 2 * a2)) / fro2
    diagonal = float(np.einsum("ij,jk,k->", y**2, beta**2, a2)) / fro2
    return coherent, diagonal


def effective_root(sigma_vectors, amplitudes) -> np.ndarray:
    """Operator ``sum_k a_k u_k u_k^T`` applied by the rotation branch."""
    u = np.asarray(sigma_vectors, dtype=float)
    return (u * np.asarray(amplitudes, dtype=float)) @ u.T


def p2_closed_form(x, sigma_vectors, amplitudes, vectors, d: int) -> float:
    """Share of the intermediate state carried by the ``d`` kept components."""
    y = np.asarray(x, dtype=float) @ effective_root(sigma_vectors, amplitudes) @ vectors
    return float(np.sum(y[:, :d] ** 2) / np.sum(y**2))


def degenerate_blocks(values, d: int, tol: float = 1e-9) -> list[list[int]]:
    """Group the first ``d`` indices into runs of (near-)equal eigenvalues."""
    blocks: list[list[int]] = []
    for j in range(d):
        if blocks and abs(values[j] - values[blocks[-1][-1]]) < tol:
            blocks[-1].append(j)
        else:
            blocks.append([j])
    return blocks


def columnwise_fidelity(a, b, blocks) -> float:
    """Overlap of two column-structured states, modulo column signs.

    ``a`` and ``b`` are amplitude matrices (rows = sample index, columns =
    component).  Each block of columns may be rotated independently, which
    covers per-column signs, global phase and degenerate eigenspaces.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    total = 0.0
    for blk in blocks:
        m = a[:, blk].conj().T @ b[:, blk]
        total += float(np.sum(np.linalg.svd(m, compute_uv=False)))
    return total / (na * nb)
