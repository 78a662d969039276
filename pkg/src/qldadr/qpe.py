"""Phase estimation of ``exp(-i H t)`` for a known Hermitian ``H``.

The simulator uses exact eigenphase arithmetic: the target register is
expanded in the eigenbasis of ``H`` and each eigencomponent adds its
rounded phase ``round(lambda * t / 2pi * 2**bits)`` to the readout
register (mod ``2**bits``).  On a zero readout register this coincides
with the textbook controlled-power / Fourier-transform circuit whenever
the phases are exact ``bits``-bit fractions; :func:`qpe_circuit` builds
that circuit for cross-checks on small systems.
"""
from __future__ import annotations

import numpy as np

from .circuits import Circuit, cx, embedded
from .errors import ConfigError
from .state import QuantumState

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def phase_integers(eigvals, bits: int, t: float) -> np.ndarray:
    """Readout integers: eigenphase ``lambda t / 2pi`` rounded to ``bits`` bits."""
    phi = np.asarray(eigvals, dtype=float) * t / (2 * np.pi)
    return (np.floor(phi * 2**bits + 0.5).astype(np.int64)) % (2**bits)


def decode_phase(m, bits: int, t: float) -> np.ndarray:
    """Eigenvalue estimate encoded by readout integer(s) ``m``."""
    return np.asarray(m, dtype=float) * 2 * np.pi / (t * 2**bits)


def check_phase_window(eigvals, t: float, what: str) -> None:
    """Require every eigenphase ``lambda t / 2pi`` to lie in ``[0, 1/2]``."""
    phi = np.asarray(eigvals, dtype=float) * t / (2 * np.pi)
    if np.any(phi < -1e-12) or np.any(phi > 0.5 + 1e-12):
        raise ConfigError(
            f"{what}: eigenphases {phi.min():.4f}..{phi.max():.4f} leave [0, 1/2]; "
            "choose t so that lambda_max * t <= pi"
        )


def _padded(eigvals, eigvecs, qubits: int):
    vals = np.asarray(eigvals, dtype=float)
    vecs = np.asarray(eigvecs, dtype=float)
    dim = 2**qubits
    n = vecs.shape[0]
    if n > dim:
        raise ValueError(f"{n}-dimensional operator does not fit {qubits} qubits")
    full = np.eye(dim)
    full[:n, :n] = vecs
    return np.concatenate([vals, np.zeros(dim - n)]), full


def qpe_apply(
    state: QuantumState,
    target: str,
    readout: str,
    eigvals,
    eigvecs,
    bits: int,
    t: float,
    inverse: bool = False,
) -> QuantumState:
    """Exact phase estimation of ``exp(-i H t)`` on ``target`` into ``readout``.

    ``H = eigvecs @ diag(eigvals) @ eigvecs.T``; padding dimensions of the
    target register get eigenvalue 0.  ``inverse=True`` uncomputes.
    """
    lay = state.layout
    if lay.qubits(readout) != bits:
        raise ValueError(f"readout register {readout!r} has {lay.qubits(readout)} qubits, expected {bits}")
    vals, vecs = _padded(eigvals, eigvecs, lay.qubits(target))
    shifts = phase_integers(vals, bits, t)
    if inverse:
        shifts = -shifts
    a_t, a_r = lay.index(target), lay.index(readout)
    arr = np.moveaxis(state.tensor, (a_t, a_r), (-2, -1))
    coeff = np.einsum("...fp,fk->...kp", arr, vecs)
    for k, s in enumerate(shifts):
        if s:
            coeff[..., k, :] = np.roll(coeff[..., k, :], int(s), axis=-1)
    out = np.einsum("...kp,fk->...fp", coeff, vecs)
    out = np.moveaxis(out, (-2, -1), (a_t, a_r))
    return QuantumState(lay, out, check=False)


def qft_gates(qubits: list[int]) -> list:
    """Forward Fourier transform ``|y> -> sum_x exp(2 pi i x y / N)|x> / sqrt(N)``."""
    gates = []
    n = len(qubits)
    for j in range(n):
        gates.append(embedded(_H, (qubits[j],), label="H"))
        for k in range(j + 1, n):
            phase = np.diag([1.0, np.exp(2j * np.pi / 2 ** (k - j + 1))])
            gates.append(embedded(phase, (qubits[j],), controls=(qubits[k],), label=f"R{k - j + 1}"))
    for j in range(n // 2):
        a, b = qubits[j], qubits[n - 1 - j]
        gates += [cx(a, b), cx(b, a), cx(a, b)]
    return gates


def qpe_circuit(h, target_qubits: int, bits: int, t: float) -> Circuit:
    """Textbook phase-estimation circuit for ``exp(-i h t)``.

    Qubits ``0..bits-1`` form the readout register (most significant
    first), the remaining ``target_qubits`` hold the target.
    """
    h = np.asarray(h, dtype=float)
    vals, vecs = np.linalg.eigh(h)
    vals, vecs = _padded(vals, vecs, target_qubits)
    readout = list(range(bits))
    target = list(range(bits, bits + target_qubits))
    gates = [embedded(_H, (q,), label="H") for q in readout]
    for q in readout:
        power = 2 ** (bits - 1 - q)
        u = (vecs * np.exp(-1j * vals * t * power)) @ vecs.T
        gates.append(embedded(u, target, controls=(q,), label=f"U^{power}"))
    gates += qft_gates(readout)
    return Circuit(bits + target_qubits, tuple(gates), name="QPE")
