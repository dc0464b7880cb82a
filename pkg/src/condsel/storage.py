"""File formats: conductance bundles (JSON), accuracy tables (CSV), toy
network definitions (JSON), and gap-matrix CSVs.

Serialization is canonical: fixed key order, two-space indentation for the
outer object, one sample row per line, and floats rendered with Python's
shortest round-trip repr. Writing, parsing, and re-writing a file is
byte-stable, which is what makes report-level determinism checkable.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attribution import BlockSpec, ToyNetwork
from .errors import ValidationError
from .ranking import AccuracyTable

BUNDLE_FORMAT = "conductance-bundle@1"
NETWORK_FORMAT = "toy-network@1"
OBJECTIVE_TAG = "l2norm"


@dataclass(frozen=True)
class ConductanceBundle:
    """All per-image block-conductance vectors of one (model, task) pair."""

    model_id: str
    task_id: str
    block_count: int
    samples: np.ndarray  # (n_samples, block_count), nonnegative
    objective: str = OBJECTIVE_TAG
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2:
            raise ValidationError(f"samples must be a matrix, got ndim={s.ndim}")
        if s.shape[0] < 1:
            raise ValidationError("bundle needs at least one sample row")
        if s.shape[1] != self.block_count:
            raise ValidationError(
                f"rows have {s.shape[1]} entries but block_count is "
                f"{self.block_count}"
            )
        bad = np.argwhere(~np.isfinite(s))
        if bad.size:
            r, c = bad[0]
            raise ValidationError(f"non-finite value at sample {r}, block {c}")
        neg = np.argwhere(s < 0)
        if neg.size:
            r, c = neg[0]
            raise ValidationError(f"negative value at sample {r}, block {c}")
        object.__setattr__(self, "samples", s)

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[0])


def _json_float(x: float) -> str:
    return repr(float(x))


def _bundle_text(bundle: ConductanceBundle) -> str:
    meta = json.dumps(bundle.metadata, sort_keys=True, separators=(", ", ": "))
    rows = ",\n".join(
        "    [" + ", ".join(_json_float(v) for v in row) + "]"
        for row in bundle.samples
    )
    return (
        "{\n"
        f'  "format": {json.dumps(BUNDLE_FORMAT)},\n'
        f'  "model_id": {json.dumps(bundle.model_id)},\n'
        f'  "task_id": {json.dumps(bundle.task_id)},\n'
        f'  "block_count": {bundle.block_count},\n'
        f'  "objective": {json.dumps(bundle.objective)},\n'
        f'  "metadata": {meta},\n'
        f'  "samples": [\n{rows}\n  ]\n'
        "}\n"
    )


def save_bundle(bundle: ConductanceBundle, path: str | Path) -> None:
    Path(path).write_text(_bundle_text(bundle), encoding="utf-8")


def load_bundle(path: str | Path) -> ConductanceBundle:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    try:
        if doc.get("format") != BUNDLE_FORMAT:
            raise ValidationError(
                f"unsupported format {doc.get('format')!r}, "
                f"expected {BUNDLE_FORMAT!r}"
            )
        return ConductanceBundle(
            model_id=doc["model_id"],
            task_id=doc["task_id"],
            block_count=int(doc["block_count"]),
            samples=np.asarray(doc["samples"], dtype=float),
            objective=doc.get("objective", OBJECTIVE_TAG),
            metadata=doc.get("metadata", {}),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: missing or malformed field ({exc})") from exc
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def load_bundle_dir(path: str | Path) -> dict[tuple[str, str], ConductanceBundle]:
    """Load every *.json bundle under a directory, keyed by (model, task)."""
    bundles: dict[tuple[str, str], ConductanceBundle] = {}
    files = sorted(Path(path).glob("*.json"))
    if not files:
        raise ValidationError(f"no bundle files found under {path}")
    for f in files:
        b = load_bundle(f)
        key = (b.model_id, b.task_id)
        if key in bundles:
            raise ValidationError(f"duplicate bundle for {key} at {f}")
        bundles[key] = b
    return bundles


def bundle_filename(model_id: str, task_id: str) -> str:
    return f"{model_id}__{task_id}.json"


def save_accuracy_table(table: AccuracyTable, path: str | Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model_id", *table.tasks])
    for i, m in enumerate(table.models):
        writer.writerow([m, *[_json_float(v) for v in table.acc[i]]])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_accuracy_table(path: str | Path) -> AccuracyTable:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 2 or rows[0][0] != "model_id":
        raise ValidationError(
            f"{path}: header must be 'model_id,<task>,...', got {rows[:1]}"
        )
    tasks = tuple(rows[0][1:])
    models = []
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(tasks) + 1:
            raise ValidationError(
                f"{path}:{lineno}: expected {len(tasks) + 1} cells, got {len(row)}"
            )
        models.append(row[0])
        parsed = []
        for j, cell in enumerate(row[1:]):
            try:
                v = float(cell)
            except ValueError as exc:
                raise ValidationError(
                    f"{path}:{lineno}: cell for task {tasks[j]!r} is not a number"
                ) from exc
            if not 0.0 <= v <= 1.0:
                raise ValidationError(
                    f"{path}:{lineno}: accuracy {v} for task {tasks[j]!r} "
                    f"outside [0, 1]"
                )
            parsed.append(v)
        values.append(parsed)
    try:
        return AccuracyTable(
            models=tuple(models), tasks=tasks, acc=np.array(values, dtype=float)
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def save_network(net: ToyNetwork, path: str | Path) -> None:
    blocks = []
    for blk in net.blocks:
        weight = ", ".join(
            "[" + ", ".join(_json_float(v) for v in row) + "]" for row in blk.weight
        )
        bias = ", ".join(_json_float(v) for v in blk.bias)
        blocks.append(
            "    {\n"
            f'      "kind": {json.dumps(blk.kind)},\n'
            f'      "weight": [{weight}],\n'
            f'      "bias": [{bias}]\n'
            "    }"
        )
    text = (
        "{\n"
        f'  "format": {json.dumps(NETWORK_FORMAT)},\n'
        f'  "input_dim": {net.input_dim},\n'
        f'  "blocks": [\n' + ",\n".join(blocks) + "\n  ]\n"
        "}\n"
    )
    Path(path).write_text(text, encoding="utf-8")


def load_network(path: str | Path) -> ToyNetwork:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if doc.get("format") != NETWORK_FORMAT:
        raise ValidationError(
            f"{path}: unsupported format {doc.get('format')!r}"
        )
    try:
        blocks = tuple(
            BlockSpec(
                kind=b["kind"],
                weight=np.asarray(b["weight"], dtype=float),
                bias=np.asarray(b["bias"], dtype=float),
            )
            for b in doc["blocks"]
        )
        net = ToyNetwork(blocks=blocks)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed network ({exc})") from exc
    if net.input_dim != int(doc.get("input_dim", net.input_dim)):
        raise ValidationError(
            f"{path}: declared input_dim {doc['input_dim']} does not match blocks"
        )
    return net


def save_matrix_csv(
    labels: tuple[str, ...], values: np.ndarray, path: str | Path, corner: str = "task"
) -> None:
    """Square labeled matrix (gap or correlation) as CSV."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([corner, *labels])
    for i, name in enumerate(labels):
        writer.writerow([name, *[_json_float(v) for v in values[i]]])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_matrix_csv(path: str | Path) -> tuple[tuple[str, ...], np.ndarray]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty matrix file")
    labels = tuple(rows[0][1:])
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(labels) + 1:
            raise ValidationError(f"{path}:{lineno}: ragged matrix row")
        values.append([float(c) for c in row[1:]])
    if len(values) != len(labels):
        raise ValidationError(f"{path}: matrix is not square")
    return labels, np.array(values, dtype=float)
