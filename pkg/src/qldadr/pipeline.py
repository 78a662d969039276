"""The three-step quantum LDA dimensionality-reduction pipeline.

1. extract the shadow components (eigenpairs of rho) classically and
   confirm their phase-estimation readouts;
2. prepare the intermediate state ``sum_i |i> S_W^{1/2} x_i`` by phase
   estimation of ``exp(-i S_W^{1/2} t)``, a controlled rotation, and
   post-selection;
3. branch on the rho eigenvalue register, post-select the kept components,
   and clear the eigenvector register with the replacement unitary.

The result is the state ``sum_{i, j<=d} y_ij |i>|j> / ||Y||_F``.
"""
from __future__ import annotations

import contextlib
import logging
import time
from dataclasses import asdict, dataclass, field
from math import ceil, log2, pi, sqrt

import numpy as np

from . import closed_forms as cf
from .circuits import (
    Circuit,
    build_u_lambda,
    build_u_v,
    circuit_to_dict,
    cx,
    fold_branch,
    gate_count_report,
    padded_basis,
    pattern_match,
)
from .errors import BranchAmbiguityError, ConfigError, NumericalError, PipelineError, QldaError
from .lda import (
    Dataset,
    ScatterModel,
    ShadowSpectrum,
    build_scatter_model,
    project_unit_directions,
    project_pipeline_oracle,
    solve_shadow,
)
from .linalg import ClampPolicy, build_rho, sym_eig
from .qpe import check_phase_window, decode_phase, phase_integers, qpe_apply
from .state import (
    MAX_QUBITS,
    MeasurementRecord,
    QuantumState,
    append_register,
    apply_circuit,
    apply_unitary,
    discard_register,
    postselect,
    prepare_psi_x,
    product_state,
    qubits_for,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    """Precision and conditioning knobs.

    ``L`` and ``sigma_bits`` are the readout widths of the two phase
    estimations; ``c1=None`` picks ``1 / max(sigma estimate)``; ``alpha=None``
    uses ``1e-6`` times the mean absolute feature value.
    """

    L: int = 10
    sigma_bits: int = 10
    kappa_lambda: float = 100.0
    kappa_sigma: float = 100.0
    threshold: float = 0.95
    c1: float | None = None
    t_evolution: float = pi
    alpha: float | None = None
    clamp_mode: str = "discard"

    def __post_init__(self):
        if int(self.L) < 1 or int(self.sigma_bits) < 1:
            raise ConfigError("L and sigma_bits must be at least 1")
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError(f"threshold must lie in (0, 1], got {self.threshold}")
        if self.t_evolution <= 0:
            raise ConfigError("evolution time must be positive")
        if self.c1 is not None and self.c1 <= 0:
            raise ConfigError("c1 must be positive")
        if self.alpha is not None and self.alpha < 0:
            raise ConfigError("alpha must be non-negative")
        try:
            self.lambda_clamp, self.sigma_clamp
        except ValueError as e:
            raise ConfigError(str(e)) from None

    @property
    def lambda_clamp(self) -> ClampPolicy:
        return ClampPolicy(self.kappa_lambda, self.clamp_mode)

    @property
    def sigma_clamp(self) -> ClampPolicy:
        return ClampPolicy(self.kappa_sigma, self.clamp_mode)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SigmaModel:
    """Eigen-data of ``S_W^{1/2}`` as seen through the sigma phase estimation."""

    sigma: np.ndarray
    vectors: np.ndarray
    estimate: np.ndarray
    amplitudes: np.ndarray  # C1 * clamped estimate, per eigencomponent
    register_amplitudes: np.ndarray  # same, per readout value
    c1: float
    clamp_active: bool


@dataclass
class PipelineReport:
    d: int
    p1: float
    p2: float
    p1_closed_form: float
    p1_diagonal_form: float
    p2_closed_form: float
    fidelity_pipeline_oracle: float
    fidelity_unit_directions: float
    eigenvalues: list[float]
    readouts: list[int]
    sigma: list[float]
    sigma_estimate: list[float]
    c1: float
    clamp_active_sigma: bool
    p1_lower_bound: float
    p1_bound_holds: bool
    p2_dimension_ratio: float
    p2_ratio_bound_holds: bool
    repetition_estimates: dict[str, int]
    gate_counts: dict
    peak_qubits: int
    ridge: float
    warnings: list[str] = field(default_factory=list)
    timing: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@contextlib.contextmanager
def stage(name: str, timings: dict | None = None):
    """Label errors raised inside a pipeline stage and time it."""
    start = time.perf_counter()
    try:
        yield
    except QldaError as e:
        if getattr(e, "stage", None) is None:
            e.stage = name
            e.args = (f"[{name}] {e}",) + e.args[1:]
        raise
    except Exception as e:
        raise PipelineError(name, e) from e
    finally:
        if timings is not None:
            timings[name] = time.perf_counter() - start


def index_qubits(d: int) -> int:
    """Q = ceil(log2 d), the width of the component index."""
    return ceil(log2(d)) if d > 1 else 0


def validate_index_width(d: int, cfg: PipelineConfig) -> int:
    q = index_qubits(d)
    if q > cfg.L:
        raise ConfigError(
            f"d={d} components need Q=ceil(log2 d)={q} index qubits but L={cfg.L}; "
            "the eigenvalue register must host the index (Q <= L)"
        )
    return q


def peak_qubits(ds_shape: tuple[int, int], cfg: PipelineConfig) -> int:
    """Widest register layout any stage holds at once."""
    qi, qf = qubits_for(ds_shape[0]), qubits_for(ds_shape[1])
    intermediate = qi + qf + cfg.sigma_bits + 1  # + rotation
    branching = qi + qf + cfg.L + 2  # + shared and per-branch signal
    clearing = qi + 2 * qf + cfg.L + 2  # + reference, flag, match
    return max(intermediate, branching, clearing)


def validate_budget(ds_shape, cfg: PipelineConfig) -> int:
    peak = peak_qubits(ds_shape, cfg)
    if peak > MAX_QUBITS:
        raise ConfigError(f"simulation needs {peak} qubits, above the {MAX_QUBITS}-qubit cap")
    return peak


def build_model(ds: Dataset, cfg: PipelineConfig) -> ScatterModel:
    return build_scatter_model(ds, cfg.alpha)


def shadow_readouts(spec: ShadowSpectrum, cfg: PipelineConfig) -> np.ndarray:
    """Phase-estimation readouts of the kept eigenvalues of rho.

    Each kept eigenvector is run through the simulated phase estimation and
    the readout distribution must be concentrated on a single value.
    """
    qf = qubits_for(spec.vectors.shape[0])
    out = []
    for j in range(spec.d):
        psi = product_state([("feature", qf, spec.vectors[:, j]), ("eigen", cfg.L, 0)])
        psi = qpe_apply(psi, "feature", "eigen", spec.values, spec.vectors, cfg.L, cfg.t_evolution)
        p = psi.probabilities("eigen")
        m = int(np.argmax(p))
        if abs(p[m] - 1.0) > 1e-10:
            raise NumericalError(f"phase estimation of component {j} is not sharp (peak {p[m]:.3e})")
        out.append(m)
    return np.array(out, dtype=np.int64)


def extract_shadow(ds: Dataset, cfg: PipelineConfig, model: ScatterModel | None = None) -> ShadowSpectrum:
    """Solve for the shadow components, validate the index width, confirm readouts."""
    if model is None:
        model = build_model(ds, cfg)
    spec = solve_shadow(model, cfg.lambda_clamp, cfg.threshold)
    validate_index_width(spec.d, cfg)
    check_phase_window(spec.values, cfg.t_evolution, "rho")
    readouts = shadow_readouts(spec, cfg)
    expected = phase_integers(spec.kept_values, cfg.L, cfg.t_evolution)
    if not np.array_equal(readouts, expected):
        raise NumericalError(f"readouts {readouts.tolist()} differ from eigenphases {expected.tolist()}")
    return spec


def sigma_model(model: ScatterModel, cfg: PipelineConfig) -> SigmaModel:
    """Eigenvalues of ``S_W^{1/2}``, their readout estimates and rotation amplitudes."""
    s, u = sym_eig(model.sw)
    sigma = np.sqrt(np.clip(s, 0.0, None))
    check_phase_window(sigma, cfg.t_evolution, "S_W^{1/2}")
    bits, t = cfg.sigma_bits, cfg.t_evolution
    est = decode_phase(phase_integers(sigma, bits, t), bits, t)
    top = float(est.max())
    if top <= 0:
        raise NumericalError("every sigma estimate is zero; increase sigma_bits")
    c1 = cfg.c1 if cfg.c1 is not None else 1.0 / top
    if c1 * top > 1.0 + 1e-12:
        raise ConfigError(f"c1={c1} makes the rotation amplitude c1*sigma_max={c1 * top:.6f} exceed 1")
    floor = top / cfg.kappa_sigma

    def clamped(v):
        v = np.asarray(v, dtype=float)
        if cfg.clamp_mode == "floor":
            return np.where(v < floor, floor, v)
        return np.where(v < floor, 0.0, v)

    reg_values = decode_phase(np.arange(2**bits), bits, t)
    reg_amp = np.minimum(c1 * clamped(reg_values), 1.0)
    amp = np.minimum(c1 * clamped(est), 1.0)
    return SigmaModel(
        sigma=sigma,
        vectors=u,
        estimate=est,
        amplitudes=amp,
        register_amplitudes=reg_amp,
        c1=float(c1),
        clamp_active=bool(np.any(est < floor)),
    )


def controlled_rotation(state: QuantumState, control: str, target: str, amplitudes) -> QuantumState:
    """``|r>|0> -> |r>(sqrt(1-a_r^2)|0> + a_r|1>)`` for every control value ``r``."""
    lay = state.layout
    a = np.asarray(amplitudes, dtype=float)
    if a.size != 2 ** lay.qubits(control) or lay.qubits(target) != 1:
        raise ValueError("rotation amplitudes do not match the control register")
    c = np.sqrt(1.0 - a**2)
    ac, at = lay.index(control), lay.index(target)
    arr = np.moveaxis(state.tensor, (ac, at), (-2, -1))
    a0, a1 = arr[..., 0], arr[..., 1]
    out = np.stack([c * a0 - a * a1, a * a0 + c * a1], axis=-1)
    return QuantumState(lay, np.moveaxis(out, (-2, -1), (ac, at)), check=False)


def _snap(snapshots, key, state):
    if snapshots is not None:
        snapshots[key] = state


def prepare_intermediate(
    ds: Dataset,
    model: ScatterModel,
    cfg: PipelineConfig,
    snapshots: dict | None = None,
) -> tuple[QuantumState, MeasurementRecord]:
    """Encode X, apply ``S_W^{1/2}`` through a post-selected rotation.

    Snapshot keys: ``psi_x``, ``phi1``, ``phi2``, ``phi3``, ``psi_t``.
    """
    sm = sigma_model(model, cfg)
    bits, t = cfg.sigma_bits, cfg.t_evolution
    psi = prepare_psi_x(ds)
    _snap(snapshots, "psi_x", psi)
    psi = append_register(psi, "sigma", bits)
    psi = qpe_apply(psi, "feature", "sigma", sm.sigma, sm.vectors, bits, t)
    _snap(snapshots, "phi1", psi)
    psi = append_register(psi, "rotation", 1)
    psi = controlled_rotation(psi, "sigma", "rotation", sm.register_amplitudes)
    _snap(snapshots, "phi2", psi)
    psi = qpe_apply(psi, "feature", "sigma", sm.sigma, sm.vectors, bits, t, inverse=True)
    psi = discard_register(psi, "sigma")
    _snap(snapshots, "phi3", psi)
    psi, rec = postselect(psi, "rotation", 1)
    psi = discard_register(psi, "rotation")
    _snap(snapshots, "psi_t", psi)
    return psi, rec


def branch_patterns(spec: ShadowSpectrum, cfg: PipelineConfig) -> list[int]:
    """Readout patterns of the kept eigenvalues, checked for ambiguity.

    A kept pattern must differ from every other eigenvalue's pattern
    (padding dimensions count as eigenvalue 0) and from the indices written
    by earlier branches, which would otherwise be matched a second time.
    """
    dim = 2 ** qubits_for(spec.values.size)
    values = np.concatenate([spec.values, np.zeros(dim - spec.values.size)])
    m = phase_integers(values, cfg.L, cfg.t_evolution)
    kept = [int(v) for v in m[: spec.d]]
    for j, mj in enumerate(kept):
        clash = [k for k in range(len(m)) if k != j and m[k] == mj]
        if clash:
            raise BranchAmbiguityError(
                f"branch ambiguity: indistinguishable eigenvalues at L={cfg.L} bits "
                f"(components {j} and {clash[0]} share pattern {mj}); increase L"
            )
        if mj < j:
            raise BranchAmbiguityError(
                f"branch ambiguity: pattern {mj} of component {j} equals the index written by branch {mj}; increase L"
            )
    return kept


def branch_and_intercept(
    psi_t: QuantumState,
    spec: ShadowSpectrum,
    rho,
    cfg: PipelineConfig,
    snapshots: dict | None = None,
) -> tuple[QuantumState, MeasurementRecord]:
    """Estimate rho's eigenvalues, branch, post-select the kept set.

    Snapshot keys: ``psi1``, ``psi2``, ``psi3``.
    """
    q = validate_index_width(spec.d, cfg)
    patterns = branch_patterns(spec, cfg)
    vals, vecs = sym_eig(rho)
    check_phase_window(vals, cfg.t_evolution, "rho")
    psi = append_register(psi_t, "eigen", cfg.L)
    psi = qpe_apply(psi, "feature", "eigen", vals, vecs, cfg.L, cfg.t_evolution)
    _snap(snapshots, "psi1", psi)
    psi = append_register(psi, "signal", 1)
    for j, mj in enumerate(patterns):
        if j == 0:
            psi = apply_circuit(psi, build_u_lambda(mj, j, cfg.L, q), ["eigen", "signal"])
            continue
        psi = append_register(psi, "branch", 1)
        psi = apply_circuit(psi, build_u_lambda(mj, j, cfg.L, q), ["eigen", "branch"])
        psi = apply_circuit(psi, fold_branch(j, cfg.L, q), ["eigen", "signal", "branch"])
        psi = discard_register(psi, "branch")
    _snap(snapshots, "psi2", psi)
    psi, rec = postselect(psi, "signal", 1)
    psi = discard_register(psi, "signal")
    _snap(snapshots, "psi3", psi)
    return psi, rec


def replacement(
    psi: QuantumState,
    spec: ShadowSpectrum,
    cfg: PipelineConfig,
    snapshots: dict | None = None,
) -> QuantumState:
    """Clear the eigenvector register, one kept component per round.

    The eigenbasis rotation of the cleared register is applied once up
    front.  Round ``r`` (descending eigenvalue order) appends a fresh copy of
    ``|v_r>`` and a fresh comparator qubit, runs the replacement unitary,
    discards the copy, folds the comparator into the shared ``flag`` and
    resets it from the index register, which identifies the matched branch.

    Snapshot keys: ``rotated``, ``round{r}`` (after the unitary),
    ``cleared{r}`` (reference discarded), ``psi6``.
    """
    qf = psi.layout.qubits("feature")
    q = validate_index_width(spec.d, cfg)
    basis = padded_basis(spec.vectors, qf)
    psi = apply_unitary(psi, basis.T, "feature")
    psi = append_register(psi, "flag", 1)
    _snap(snapshots, "rotated", psi)
    for r in range(spec.d):
        psi = append_register(psi, "reference", qf, spec.vectors[:, r])
        psi = append_register(psi, "match", 1)
        circ = build_u_v(r, spec.vectors, qf, rotate_first=False)
        psi = apply_circuit(psi, circ, ["feature", "reference", "match"])
        _snap(snapshots, f"round{r}", psi)
        psi = discard_register(psi, "reference")
        _snap(snapshots, f"cleared{r}", psi)
        psi = apply_circuit(psi, Circuit(2, (cx(0, 1),)), ["match", "flag"])
        psi = apply_circuit(psi, pattern_match(r, cfg.L), ["eigen", "match"])
        psi = discard_register(psi, "match")
    _snap(snapshots, "psi6", psi)
    psi = discard_register(psi, "feature")
    psi = discard_register(psi, "flag")
    return psi


def output_fidelity(psi_y: QuantumState, y: np.ndarray, values, d: int) -> float:
    """Fidelity of the output state against ``vec(Y) / ||Y||`` modulo column signs."""
    a = psi_y.tensor
    b = np.zeros_like(a)
    b[: y.shape[0], :d] = y[:, :d]
    return cf.columnwise_fidelity(a, b, cf.degenerate_blocks(values, d))


def gate_counts(spec: ShadowSpectrum, patterns, cfg: PipelineConfig, qf: int) -> dict:
    q = index_qubits(spec.d)
    per_branch = [gate_count_report(build_u_lambda(m, j, cfg.L, q)) for j, m in enumerate(patterns)]
    u_v = gate_count_report(build_u_v(0, spec.vectors, qf, rotate_first=False))
    fold = [gate_count_report(fold_branch(j, cfg.L, q)) for j in range(1, spec.d)]
    reset = [gate_count_report(pattern_match(r, cfg.L)) for r in range(spec.d)]
    return {"u_lambda": per_branch, "branch_fold": fold, "u_v": u_v, "u_v_rounds": spec.d, "match_reset": reset}


def run_full(ds: Dataset, cfg: PipelineConfig) -> tuple[QuantumState, PipelineReport]:
    """Run every stage and compare the output with the classical oracles."""
    timing: dict[str, float] = {}
    notes: list[str] = []
    with stage("config", timing):
        peak = validate_budget(ds.samples.shape, cfg)
    with stage("scatter", timing):
        model = build_model(ds, cfg)
        notes += list(model.warnings)
    with stage("extract_shadow", timing):
        spec = extract_shadow(ds, cfg, model)
        notes += list(spec.warnings)
        rho = build_rho(model.sw, model.sb, cfg.lambda_clamp)
        patterns = branch_patterns(spec, cfg)
    with stage("prepare_intermediate", timing):
        psi_t, rec1 = prepare_intermediate(ds, model, cfg)
    with stage("branch_and_intercept", timing):
        psi3, rec2 = branch_and_intercept(psi_t, spec, rho, cfg)
    with stage("replacement", timing):
        psi_y = replacement(psi3, spec, cfg)
    with stage("oracle", timing):
        y_oracle = project_pipeline_oracle(ds, model, spec)
        y_unit = project_unit_directions(ds, model, spec)
        f_oracle = output_fidelity(psi_y, y_oracle, spec.values, spec.d)
        f_unit = output_fidelity(psi_y, y_unit, spec.values, spec.d)
        sm = sigma_model(model, cfg)
        p1_cf, p1_diag = cf.p1_closed_form(ds.samples, model.sw, spec.vectors, sm.vectors, sm.amplitudes)
        p2_cf = cf.p2_closed_form(ds.samples, sm.vectors, sm.amplitudes, spec.vectors, spec.d)
    p1, p2 = rec1.probability, rec2.probability
    bound = 1.0 / cfg.kappa_sigma**2
    ratio = spec.d / ds.D
    if not sm.clamp_active and p1 < bound * (1 - 1e-9):
        notes.append(f"p1={p1:.3e} below 1/kappa_sigma^2={bound:.3e} with clamping inactive")
    if p2 < ratio:
        notes.append(f"p2={p2:.3e} below d/D={ratio:.3e}")
    report = PipelineReport(
        d=spec.d,
        p1=p1,
        p2=p2,
        p1_closed_form=p1_cf,
        p1_diagonal_form=p1_diag,
        p2_closed_form=p2_cf,
        fidelity_pipeline_oracle=min(f_oracle, 1.0),
        fidelity_unit_directions=min(f_unit, 1.0),
        eigenvalues=[float(v) for v in spec.values],
        readouts=[int(m) for m in patterns],
        sigma=[float(v) for v in sm.sigma],
        sigma_estimate=[float(v) for v in sm.estimate],
        c1=sm.c1,
        clamp_active_sigma=sm.clamp_active,
        p1_lower_bound=bound,
        p1_bound_holds=bool(p1 >= bound * (1 - 1e-9)),
        p2_dimension_ratio=ratio,
        p2_ratio_bound_holds=bool(p2 >= ratio),
        repetition_estimates={"p1": ceil(1 / sqrt(p1)), "p2": ceil(1 / sqrt(p2))},
        gate_counts=gate_counts(spec, patterns, cfg, qubits_for(ds.D)),
        peak_qubits=peak,
        ridge=model.ridge,
        warnings=notes,
        timing=timing,
    )
    return psi_y, report


def circuit_dump(spec: ShadowSpectrum, cfg: PipelineConfig) -> dict:
    """JSON-ready gate lists of every branch circuit and one replacement round."""
    q = index_qubits(spec.d)
    patterns = branch_patterns(spec, cfg)
    qf = qubits_for(spec.vectors.shape[0])
    return {
        "u_lambda": [circuit_to_dict(build_u_lambda(m, j, cfg.L, q)) for j, m in enumerate(patterns)],
        "u_v": circuit_to_dict(build_u_v(0, spec.vectors, qf)),
    }
