"""Gate-level circuits: X / CX / MCX / embedded unitaries.

Qubit 0 of a circuit is the most significant bit of its basis index.  Two
circuits from the algorithm are built here: the branch unitary that flags
a chosen eigenvalue bit pattern and rewrites it to a component index, and
the replacement unitary that clears a register holding a known eigenvector.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .state import check_unitary

KINDS = ("X", "CX", "MCX", "EMBEDDED_UNITARY")
MAX_DENSE_QUBITS = 12


@dataclass(frozen=True)
class Gate:
    kind: str
    controls: tuple[int, ...] = ()
    targets: tuple[int, ...] = ()
    payload: np.ndarray | None = field(default=None, compare=False, repr=False)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if set(self.controls) & set(self.targets):
            raise ValueError("controls and targets overlap")
        if len(set(self.controls)) != len(self.controls) or len(set(self.targets)) != len(self.targets):
            raise ValueError("repeated qubit in gate")
        expected = {"X": (0, 0), "CX": (1, 1), "MCX": (2, None)}
        if self.kind in expected:
            lo, hi = expected[self.kind]
            n = len(self.controls)
            if len(self.targets) != 1 or n < lo or (hi is not None and n > hi):
                raise ValueError(f"bad {self.kind}: controls={self.controls} targets={self.targets}")
        else:
            if self.payload is None or not self.targets:
                raise ValueError("embedded unitary needs targets and a payload")
            u = check_unitary(self.payload)
            if u.shape[0] != 2 ** len(self.targets):
                raise ValueError("payload size does not match target count")
            object.__setattr__(self, "payload", u)


def x(t: int) -> Gate:
    return Gate("X", (), (t,))


def cx(c: int, t: int) -> Gate:
    return Gate("CX", (c,), (t,))


def mcx(controls, t: int) -> Gate:
    controls = tuple(controls)
    if len(controls) == 0:
        return x(t)
    if len(controls) == 1:
        return cx(controls[0], t)
    return Gate("MCX", controls, (t,))


def embedded(u, targets, controls=(), label: str = "") -> Gate:
    return Gate("EMBEDDED_UNITARY", tuple(controls), tuple(targets), np.asarray(u, dtype=complex), label)


@dataclass(frozen=True)
class Circuit:
    qubit_count: int
    gates: tuple[Gate, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for q in g.controls + g.targets:
                if not 0 <= q < self.qubit_count:
                    raise ValueError(f"gate {g.kind} touches qubit {q} outside 0..{self.qubit_count - 1}")

    @property
    def gate_count(self) -> dict[str, int]:
        return dict(Counter(g.kind for g in self.gates))

    def inverse(self) -> "Circuit":
        inv = []
        for g in reversed(self.gates):
            if g.kind == "EMBEDDED_UNITARY":
                inv.append(embedded(g.payload.conj().T, g.targets, g.controls, g.label))
            else:
                inv.append(g)
        return Circuit(self.qubit_count, tuple(inv), self.name + "^-1" if self.name else "")

    def then(self, other: "Circuit") -> "Circuit":
        if other.qubit_count != self.qubit_count:
            raise ValueError("qubit counts differ")
        return Circuit(self.qubit_count, self.gates + other.gates, self.name)


def apply_gates(t: np.ndarray, gates, qmap, n: int) -> np.ndarray:
    """Apply gates to an array whose first ``n`` axes are qubits.

    ``qmap[q]`` is the array axis of circuit qubit ``q``; trailing axes
    beyond ``n`` are carried along untouched (used for batching).
    """
    t = np.array(t, dtype=complex, copy=True)
    nd = t.ndim
    for g in gates:
        ctrl = [qmap[c] for c in g.controls]
        tgt = [qmap[q] for q in g.targets]
        if g.kind in ("X", "CX", "MCX"):
            sl0 = [slice(None)] * nd
            for a in ctrl:
                sl0[a] = 1
            sl1 = list(sl0)
            sl0[tgt[0]], sl1[tgt[0]] = 0, 1
            sl0, sl1 = tuple(sl0), tuple(sl1)
            tmp = t[sl0].copy()
            t[sl0] = t[sl1]
            t[sl1] = tmp
            continue
        sl = [slice(None)] * nd
        for a in ctrl:
            sl[a] = 1
        sl = tuple(sl)
        sub = t[sl]
        left = [a for a in range(nd) if a not in ctrl]
        pos = [left.index(a) for a in tgt]
        k = len(pos)
        moved = np.moveaxis(sub, pos, range(k))
        shape = moved.shape
        new = (g.payload @ moved.reshape(2**k, -1)).reshape(shape)
        t[sl] = np.moveaxis(new, range(k), pos)
    return t


def circuit_to_unitary(c: Circuit) -> np.ndarray:
    """Dense matrix of the ordered gate product (at most 12 qubits)."""
    n = c.qubit_count
    if n > MAX_DENSE_QUBITS:
        raise NumericalError(f"{n} qubits exceeds the dense-matrix cap of {MAX_DENSE_QUBITS}")
    dim = 2**n
    basis = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    out = apply_gates(basis, c.gates, list(range(n)), n)
    u = out.reshape(dim, dim)
    resid = np.linalg.norm(u.conj().T @ u - np.eye(dim))
    if resid > 1e-10:
        raise NumericalError(f"circuit is not unitary (residual {resid:.3e})")
    return u


def _bits(value, width: int, what: str) -> list[int]:
    """MSB-first bit list of an int or bit-string."""
    if isinstance(value, str):
        if set(value) - {"0", "1"}:
            raise ValueError(f"{what} {value!r} is not a bit string")
        value = int(value, 2) if value else 0
    value = int(value)
    if value < 0 or value >= 2**width:
        raise ValueError(f"{what} {value} does not fit in {width} bits")
    return [(value >> (width - 1 - k)) & 1 for k in range(width)]


def check_index_bound(d_or_q: int, L: int, *, is_q: bool = True) -> None:
    """Reject index widths that exceed the eigenvalue register."""
    q = d_or_q if is_q else (int(np.ceil(np.log2(d_or_q))) if d_or_q > 1 else 0)
    if q > L:
        raise ConfigError(
            f"index register needs Q={q} qubits but the eigenvalue register has L={L}; "
            f"the branch step requires Q = ceil(log2 d) <= L"
        )


def build_u_lambda(lambda_bits, index_bits, L: int, Q: int) -> Circuit:
    """Branch unitary on ``L`` register qubits plus one signal qubit.

    ``|lambda>|0> -> |j>|1>`` when the register holds ``lambda_bits``;
    other basis inputs with signal 0 are left unchanged.  The index ``j`` is
    written into the low ``Q`` bits with the high bits zero.
    """
    if L < 1:
        raise ConfigError("eigenvalue register needs at least one qubit")
    check_index_bound(Q, L)
    lam = _bits(lambda_bits, L, "eigenvalue pattern")
    idx = _index_bits(index_bits, L, Q)
    signal = L
    gates = list(pattern_match(lambda_bits, L).gates)
    gates += [cx(signal, q) for q in range(L) if lam[q] != idx[q]]
    return Circuit(L + 1, tuple(gates), name="U_lambda")


def _index_bits(index_bits, L: int, Q: int) -> list[int]:
    return [0] * (L - Q) + _bits(index_bits, Q, "index") if Q else [0] * L


def fold_branch(index_bits, L: int, Q: int) -> Circuit:
    """Merge a per-branch signal into the shared one and reset it.

    Qubits ``0..L-1`` hold the eigenvalue register, ``L`` the shared signal
    and ``L + 1`` the branch's own signal.  After the CX the branch qubit is
    set exactly on terms holding index ``j`` with the shared signal raised,
    which no other branch can produce since indices are distinct, so one
    pattern-matched MCX returns it to ``|0>``.
    """
    check_index_bound(Q, L)
    idx = _index_bits(index_bits, L, Q)
    shared, own = L, L + 1
    layer = [x(q) for q in range(L) if idx[q] == 0]
    gates = [cx(own, shared)] + layer + [mcx(list(range(L)) + [shared], own)] + layer
    return Circuit(L + 2, tuple(gates), name="fold")


def pattern_match(pattern, L: int) -> Circuit:
    """Flip qubit ``L`` iff qubits ``0..L-1`` hold ``pattern``.

    The ``X`` layer maps the pattern to all-ones ahead of the multi-controlled
    X and is undone afterwards, so non-matching inputs are left unchanged.
    """
    bits = _bits(pattern, L, "pattern")
    layer = [x(q) for q in range(L) if bits[q] == 0]
    return Circuit(L + 1, tuple(layer + [mcx(range(L), L)] + layer), name="match")


def padded_basis(eigenbasis, qubits: int) -> np.ndarray:
    """Embed a ``D x D`` orthonormal basis into ``2**qubits`` dimensions."""
    v = np.asarray(eigenbasis, dtype=float)
    dim = 2**qubits
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] > dim:
        raise ValueError(f"eigenbasis of shape {v.shape} does not fit {qubits} qubits")
    if np.linalg.norm(v.T @ v - np.eye(v.shape[0])) > 1e-10:
        raise NumericalError("eigenbasis is not orthonormal")
    out = np.eye(dim)
    out[: v.shape[0], : v.shape[0]] = v
    return out


def comparator_gates(n: int) -> list[Gate]:
    """Equality test of registers ``0..n-1`` and ``n..2n-1`` into qubit ``2n``,
    then clear the first register where the flag is set."""
    first, second, flag = list(range(n)), list(range(n, 2 * n)), 2 * n
    xor = [cx(s, f) for f, s in zip(first, second)]
    neg = [x(f) for f in first]
    gates = xor + neg + [mcx(first, flag)] + neg + xor
    gates += [mcx((flag, s), f) for f, s in zip(first, second)]
    return gates


def build_u_v(v_index: int, eigenbasis, logD: int, rotate_first: bool = True) -> Circuit:
    """Replacement unitary on two ``logD``-qubit registers plus a flag qubit.

    ``|v_j>|v_j'>|0> -> |0>|v_j'>|1>`` if ``j == j'`` and identity otherwise.
    The eigenbasis is rotated to the computational basis around a bitwise
    comparator.  With ``rotate_first=False`` the first register is assumed
    to be in the rotated (computational) frame already and is not restored.
    """
    basis = padded_basis(eigenbasis, logD)
    if not 0 <= int(v_index) < np.asarray(eigenbasis).shape[0]:
        raise ValueError(f"v_index {v_index} outside the eigenbasis")
    first, second, flag = list(range(logD)), list(range(logD, 2 * logD)), 2 * logD
    vdag = basis.T.astype(complex)
    gates = []
    if rotate_first:
        gates.append(embedded(vdag, first, label="Vdag"))
    gates.append(embedded(vdag, second, label="Vdag"))
    gates += comparator_gates(logD)
    gates.append(embedded(basis, second, label="V"))
    if rotate_first:
        gates += [x(flag), embedded(basis, first, controls=(flag,), label="V"), x(flag)]
    return Circuit(2 * logD + 1, tuple(gates), name=f"U_v[{int(v_index)}]")


def mcx_toffoli_cost(controls: int) -> int:
    """Toffoli-ladder cost of a multi-controlled X with one borrowed ancilla."""
    return 2 * (controls - 1)


def gate_count_report(c: Circuit) -> dict:
    """Per-kind tally and elementary-gate total.

    Elementary gates are X, CX and Toffoli; each MCX expands to
    ``2 * (controls - 1)`` Toffolis.  Embedded unitaries are tallied but not
    counted as elementary.
    """
    tally = {k: 0 for k in KINDS}
    toffoli = 0
    for g in c.gates:
        tally[g.kind] += 1
        if g.kind == "MCX":
            toffoli += mcx_toffoli_cost(len(g.controls))
    return {
        "counts": tally,
        "toffoli": toffoli,
        "elementary": tally["X"] + tally["CX"] + toffoli,
    }


def circuit_to_dict(c: Circuit) -> dict:
    return {
        "name": c.name,
        "qubit_count": c.qubit_count,
        "gates": [
            {"kind": g.kind, "controls": list(g.controls), "targets": list(g.targets), **({"label": g.label} if g.label else {})}
            for g in c.gates
        ],
    }


def circuit_to_json(c: Circuit) -> str:
    return json.dumps(circuit_to_dict(c), sort_keys=True)
