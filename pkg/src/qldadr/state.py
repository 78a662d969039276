"""Exact statevector simulation over named registers.

A state is a flat complex amplitude vector whose index is the big-endian
concatenation of its registers: the first register holds the most
significant bits.  States are immutable; every operation returns a new
state.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log2

import numpy as np

from .errors import DataError, NumericalError

MAX_QUBITS = 30
NORM_ATOL = 1e-12
UNITARY_ATOL = 1e-10
NULL_BRANCH = 1e-15
PURITY_FLOOR = 1 - 1e-10


def qubits_for(size: int) -> int:
    """Qubits needed to index ``size`` basis states (at least one)."""
    return max(1, ceil(log2(size))) if size > 1 else 1


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        regs = tuple((str(n), int(q)) for n, q in self.registers)
        names = [n for n, _ in regs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register names in {names}")
        if any(q < 1 for _, q in regs):
            raise ValueError("every register needs at least one qubit")
        total = sum(q for _, q in regs)
        if total > MAX_QUBITS:
            raise ValueError(f"{total} qubits exceeds the {MAX_QUBITS}-qubit cap")
        object.__setattr__(self, "registers", regs)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.registers]

    @property
    def total_qubits(self) -> int:
        return sum(q for _, q in self.registers)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(2**q for _, q in self.registers)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no register named {name!r}; have {self.names}") from None

    def qubits(self, name: str) -> int:
        return self.registers[self.index(name)][1]

    def offset(self, name: str) -> int:
        """Global index of the register's most significant qubit."""
        k = self.index(name)
        return sum(q for _, q in self.registers[:k])

    def append(self, name: str, qubits: int) -> "RegisterLayout":
        return RegisterLayout(self.registers + ((name, qubits),))

    def remove(self, name: str) -> "RegisterLayout":
        k = self.index(name)
        return RegisterLayout(self.registers[:k] + self.registers[k + 1 :])


@dataclass(frozen=True)
class MeasurementRecord:
    register: str
    outcome: str
    probability: float


class QuantumState:
    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout: RegisterLayout, amplitudes, *, check: bool = True):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**layout.total_qubits:
            raise ValueError(f"{amps.size} amplitudes for a {layout.total_qubits}-qubit layout")
        if check:
            norm = np.linalg.norm(amps)
            if abs(norm - 1.0) > NORM_ATOL:
                raise NumericalError(f"state norm {norm!r} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "amplitudes", amps)

    def __setattr__(self, key, value):
        raise AttributeError("QuantumState is immutable")

    @property
    def tensor(self) -> np.ndarray:
        """Read-only view with one axis per register."""
        return self.amplitudes.reshape(self.layout.shape)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self, register: str) -> np.ndarray:
        """Outcome distribution of a computational-basis measurement on ``register``."""
        k = self.layout.index(register)
        p = np.abs(self.tensor) ** 2
        axes = tuple(a for a in range(p.ndim) if a != k)
        return p.sum(axis=axes)

    def register_vector(self, register: str) -> np.ndarray:
        """Pure state of ``register`` if it is separable from the rest."""
        psi, _ = _split_separable(self, register)
        return psi

    def __repr__(self):
        return f"QuantumState({self.layout.registers})"


def from_tensor(layout: RegisterLayout, tensor, *, normalize: bool = False) -> QuantumState:
    amps = np.asarray(tensor, dtype=complex).reshape(-1)
    if normalize:
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise NumericalError("cannot normalise the zero vector")
        amps = amps / nrm
    return QuantumState(layout, amps)


def product_state(parts: list[tuple[str, int, object]]) -> QuantumState:
    """Tensor product of register states.

    Each part is ``(name, qubits, vector_or_basis_index)``; vectors shorter
    than ``2**qubits`` are zero-padded and normalised.
    """
    layout = RegisterLayout(tuple((n, q) for n, q, _ in parts))
    amps = np.ones(1, dtype=complex)
    for _, q, v in parts:
        amps = np.kron(amps, _register_vector(q, v))
    return QuantumState(layout, amps)


def _register_vector(qubits: int, v) -> np.ndarray:
    out = np.zeros(2**qubits, dtype=complex)
    if isinstance(v, (int, np.integer)):
        out[int(v)] = 1.0
        return out
    v = np.asarray(v, dtype=complex).ravel()
    if v.size > out.size:
        raise ValueError(f"vector of length {v.size} does not fit {qubits} qubits")
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise NumericalError("zero register vector")
    out[: v.size] = v / nrm
    return out


def append_register(state: QuantumState, name: str, qubits: int, vector=0) -> QuantumState:
    """Tensor a fresh register (default ``|0>``) onto the end of ``state``."""
    layout = state.layout.append(name, qubits)
    return QuantumState(layout, np.kron(state.amplitudes, _register_vector(qubits, vector)), check=False)


def prepare_psi_x(ds) -> QuantumState:
    """Amplitude-encode the sample matrix: ``sum_ij x_ij |i>|j> / ||X||_F``.

    Row and feature indices are zero-padded up to powers of two.
    """
    x = np.asarray(ds.samples if hasattr(ds, "samples") else ds, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    fro = np.linalg.norm(x)
    if fro == 0.0:
        raise DataError("cannot encode an all-zero dataset")
    qi, qf = qubits_for(x.shape[0]), qubits_for(x.shape[1])
    padded = np.zeros((2**qi, 2**qf), dtype=complex)
    padded[: x.shape[0], : x.shape[1]] = x / fro
    return QuantumState(RegisterLayout((("index", qi), ("feature", qf))), padded)


def check_unitary(u, atol: float = UNITARY_ATOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NumericalError(f"unitary must be square, got shape {u.shape}")
    resid = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))
    if resid > atol:
        raise NumericalError(f"matrix is not unitary (||U'U - I|| = {resid:.3e})")
    return u


def apply_unitary(state: QuantumState, u, registers) -> QuantumState:
    """Apply ``u`` to the concatenation of ``registers`` (first is most significant)."""
    if isinstance(registers, str):
        registers = [registers]
    u = check_unitary(u)
    axes = [state.layout.index(r) for r in registers]
    dims = [state.layout.shape[a] for a in axes]
    size = int(np.prod(dims))
    if u.shape[0] != size:
        raise NumericalError(f"unitary of dimension {u.shape[0]} does not match registers {registers} ({size})")
    t = np.moveaxis(state.tensor, axes, range(len(axes)))
    moved_shape = t.shape
    t = (u @ t.reshape(size, -1)).reshape(moved_shape)
    t = np.moveaxis(t, range(len(axes)), axes)
    return QuantumState(state.layout, t, check=False)


def apply_circuit(state: QuantumState, circuit, registers) -> QuantumState:
    """Run a gate-level circuit whose qubits are the concatenated ``registers``."""
    from .circuits import apply_gates

    if isinstance(registers, str):
        registers = [registers]
    qmap = []
    for r in registers:
        off = state.layout.offset(r)
        qmap.extend(range(off, off + state.layout.qubits(r)))
    if len(qmap) != circuit.qubit_count:
        raise NumericalError(f"circuit has {circuit.qubit_count} qubits but registers {registers} give {len(qmap)}")
    n = state.layout.total_qubits
    t = np.array(state.amplitudes).reshape((2,) * n)
    t = apply_gates(t, circuit.gates, qmap, n)
    return QuantumState(state.layout, t, check=False)


def _outcome_index(outcome, qubits: int) -> int:
    if isinstance(outcome, str):
        if len(outcome) != qubits or set(outcome) - {"0", "1"}:
            raise ValueError(f"outcome {outcome!r} is not a {qubits}-bit pattern")
        return int(outcome, 2)
    idx = int(outcome)
    if not 0 <= idx < 2**qubits:
        raise ValueError(f"outcome {idx} out of range for {qubits} qubits")
    return idx


def postselect(state: QuantumState, register: str, outcome) -> tuple[QuantumState, MeasurementRecord]:
    """Condition on a measurement outcome and renormalise.

    The register stays in the layout, now in the basis state ``outcome``.
    The returned record carries the exact outcome probability.
    """
    k = state.layout.index(register)
    q = state.layout.qubits(register)
    idx = _outcome_index(outcome, q)
    t = state.tensor
    sl = [slice(None)] * t.ndim
    sl[k] = idx
    branch = t[tuple(sl)]
    p = float(np.vdot(branch, branch).real)
    if p < NULL_BRANCH:
        raise NumericalError(f"post-selection on null branch ({register}={idx}, p={p:.3e})")
    out = np.zeros_like(t)
    out[tuple(sl)] = branch / np.sqrt(p)
    return QuantumState(state.layout, out), MeasurementRecord(register, format(idx, f"0{q}b"), p)


def _split_separable(state: QuantumState, register: str):
    k = state.layout.index(register)
    t = np.moveaxis(state.tensor, k, -1)
    dim = t.shape[-1]
    mat = t.reshape(-1, dim)
    gram = mat.T @ mat.conj()  # reduced density matrix of the register
    purity = float(np.real(np.sum(gram * gram.T)))
    w, v = np.linalg.eigh(gram)
    phi = v[:, -1]
    j = int(np.argmax(np.abs(phi)))
    phi = phi * (abs(phi[j]) / phi[j])
    rest = mat @ phi.conj()
    return phi, (rest, t.shape[:-1], purity)


def discard_register(state: QuantumState, register: str) -> QuantumState:
    """Drop a register that is in a product state with the rest.

    Raises :class:`NumericalError` if the register is entangled, since
    tracing it out would leave a mixed state.
    """
    _, (rest, shape, purity) = _split_separable(state, register)
    if purity < PURITY_FLOOR:
        raise NumericalError(
            f"register {register!r} not separable (purity {purity:.12f}); discard would decohere"
        )
    rest = rest / np.linalg.norm(rest)
    return QuantumState(state.layout.remove(register), rest.reshape(shape))


def overlap(a: QuantumState, b: QuantumState) -> complex:
    if a.layout.shape != b.layout.shape:
        raise ValueError("states have different shapes")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """``|<a|b>|`` for pure states."""
    return abs(overlap(a, b))
