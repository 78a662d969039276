"""Command-line front end: ``qldadr --input data.csv --output report.json``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, NumericalError, PipelineError, QldaError
from .lda import (
    Dataset,
    discriminant_objective,
    lda_directions,
    project_unit_directions,
    project_pipeline_oracle,
    solve_shadow,
)
from .pipeline import (
    PipelineConfig,
    branch_patterns,
    build_model,
    circuit_dump,
    extract_shadow,
    gate_counts,
    run_full,
    stage,
    validate_budget,
)
from .state import qubits_for

logger = logging.getLogger(__name__)

EXIT_CODES = {ConfigError: 2, DataError: 3, NumericalError: 4, PipelineError: 5}
MODES = ("full", "classical-only", "circuits-only")
RANDOM_DIRECTIONS = 10_000


def report_schema() -> dict:
    """The JSON schema every report validates against."""
    return json.loads(resources.files(__package__).joinpath("report.schema.json").read_text(encoding="utf-8"))


def exit_code_for(err: BaseException) -> int:
    for kind, code in EXIT_CODES.items():
        if isinstance(err, kind):
            return code
    return 5


def _label_index(header: list[str], label_column: str | int | None) -> int:
    if label_column is None:
        return len(header) - 1
    if isinstance(label_column, int) or str(label_column).lstrip("-").isdigit():
        idx = int(label_column)
        if not -len(header) <= idx < len(header):
            raise DataError(f"label column index {idx} out of range for {len(header)} columns")
        return idx % len(header)
    if label_column not in header:
        raise DataError(f"label column {label_column!r} not in header {header}")
    return header.index(label_column)


def load_csv(path, label_column: str | int | None = None) -> tuple[Dataset, dict[str, int], list[str]]:
    """Read a headed CSV into a dataset.

    Labels are remapped to ``1..n`` in order of first appearance. Returns the
    dataset, the mapping from the original label text, and the feature names.
    The label column defaults to the last one.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file {str(path)!r} does not exist")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path.name} is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise DataError(f"{path.name} has a header but no data rows")
    li = _label_index(header, label_column)
    features = [h for k, h in enumerate(header) if k != li]
    mapping: dict[str, int] = {}
    x = np.empty((len(body), len(features)))
    labels = np.empty(len(body), dtype=int)
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"line {r}: expected {len(header)} cells, got {len(row)}")
        lab = row[li].strip()
        labels[r - 2] = mapping.setdefault(lab, len(mapping) + 1)
        cells = [c for k, c in enumerate(row) if k != li]
        for c, (name, cell) in enumerate(zip(features, cells)):
            try:
                x[r - 2, c] = float(cell)
            except ValueError:
                raise DataError(f"line {r}, column {name!r}: non-numeric value {cell!r}") from None
    if len(mapping) < 2:
        raise DataError(f"{path.name} contains a single class; LDA needs at least two")
    return Dataset(x, labels), mapping, features


def _write_matrix(path: Path, y: np.ndarray) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"y{j + 1}" for j in range(y.shape[1])])
        w.writerows([[repr(float(v)) for v in row] for row in y])


def _optimality(ds: Dataset, model, spec, seed: int) -> dict:
    """Fisher objective of the top direction against random unit directions."""
    top = lda_directions(model, spec)[:, 0]
    best = discriminant_objective(model, top)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((RANDOM_DIRECTIONS, ds.D))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    num = np.einsum("ki,ij,kj->k", w, model.sb, w)
    den = np.einsum("ki,ij,kj->k", w, model.sw, w)
    rand_best = float(np.max(num / den))
    return {
        "top_objective": best,
        "top_eigenvalue": float(spec.values[0] * spec.scale),
        "random_directions": RANDOM_DIRECTIONS,
        "best_random_objective": rand_best,
        "dominates": bool(best >= rand_best * (1 - 1e-12)),
    }


def _classical(ds, cfg, args, out: Path, timing) -> dict:
    with stage("scatter", timing):
        model = build_model(ds, cfg)
    with stage("extract_shadow", timing):
        spec = solve_shadow(model, cfg.lambda_clamp, cfg.threshold)
    with stage("projection", timing):
        y_oracle = project_pipeline_oracle(ds, model, spec)
        y_unit = project_unit_directions(ds, model, spec)
        check = _optimality(ds, model, spec, args.seed)
    files = {}
    for tag, y in (("pipeline_oracle", y_oracle), ("lda_directions", y_unit)):
        target = out.with_name(f"{out.stem}.Y_{tag}.csv")
        _write_matrix(target, y)
        files[tag] = target.name
    return {
        "d": spec.d,
        "eigenvalues": [float(v) for v in spec.values],
        "ridge": model.ridge,
        "optimality": check,
        "y_files": files,
        "warnings": list(model.warnings) + list(spec.warnings),
    }


def _circuits(ds, cfg, timing) -> dict:
    with stage("config", timing):
        peak = validate_budget(ds.samples.shape, cfg)
    with stage("scatter", timing):
        model = build_model(ds, cfg)
    with stage("extract_shadow", timing):
        spec = extract_shadow(ds, cfg, model)
    with stage("circuits", timing):
        patterns = branch_patterns(spec, cfg)
        counts = gate_counts(spec, patterns, cfg, qubits_for(ds.D))
        dump = circuit_dump(spec, cfg)
    return {
        "d": spec.d,
        "eigenvalues": [float(v) for v in spec.values],
        "readouts": patterns,
        "gate_counts": counts,
        "circuits": dump,
        "peak_qubits": peak,
        "warnings": list(model.warnings) + list(spec.warnings),
    }


def run(args: argparse.Namespace) -> int:
    timing: dict[str, float] = {}
    start = time.perf_counter()
    out = Path(args.output)
    try:
        try:
            cfg = PipelineConfig(
                L=args.pe_bits,
                sigma_bits=args.sigma_bits,
                kappa_lambda=args.kappa_lambda,
                kappa_sigma=args.kappa_sigma,
                threshold=args.dims_threshold,
                c1=args.c1,
                alpha=args.alpha,
            )
        except ConfigError as e:
            e.stage = "config"
            raise
        with stage("load", timing):
            ds, mapping, features = load_csv(args.input, args.labels)
        report = {
            "mode": args.mode,
            "input": {
                "file": Path(args.input).name,
                "M": ds.M,
                "D": ds.D,
                "n": ds.n,
                "features": features,
                "label_mapping": mapping,
            },
            "config": {**cfg.to_dict(), "seed": args.seed},
        }
        if args.mode == "classical-only":
            report.update(_classical(ds, cfg, args, out, timing))
        elif args.mode == "circuits-only":
            report.update(_circuits(ds, cfg, timing))
        else:
            _, rep = run_full(ds, cfg)
            body = rep.to_dict()
            timing.update(body.pop("timing"))
            report.update(body)
    except QldaError as e:
        code = exit_code_for(e)
        where = getattr(e, "stage", None) or "run"
        msg = str(e)
        if not msg.startswith("["):
            msg = f"[{where}] {msg}"
        print(f"qldadr: error {msg}", file=sys.stderr)
        return code
    timing["total"] = time.perf_counter() - start
    report["timing"] = timing
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    d = PipelineConfig()
    p = argparse.ArgumentParser(
        prog="qldadr",
        description="Simulate quantum LDA dimensionality reduction on a CSV dataset.",
    )
    p.add_argument("--input", required=True, help="CSV file with a header row")
    p.add_argument("--labels", default=None, help="label column name or index (default: last column)")
    p.add_argument("--output", required=True, help="JSON report path")
    p.add_argument("--mode", choices=MODES, default="full")
    p.add_argument("--dims-threshold", type=float, default=d.threshold, help="cumulative spectrum threshold")
    p.add_argument("--pe-bits", type=int, default=d.L, help="eigenvalue register width L")
    p.add_argument("--sigma-bits", type=int, default=d.sigma_bits, help="readout width for S_W^(1/2)")
    p.add_argument("--kappa-lambda", type=float, default=d.kappa_lambda)
    p.add_argument("--kappa-sigma", type=float, default=d.kappa_sigma)
    p.add_argument("--alpha", type=float, default=None, help="additive regulariser (default 1e-6 * mean |x|)")
    p.add_argument("--c1", type=float, default=None, help="rotation constant (default 1 / max sigma)")
    p.add_argument("--seed", type=int, default=0, help="seed for random direction sampling")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
