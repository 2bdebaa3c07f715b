"""Core data containers, CSV ingestion, and validation.

Labeling-function votes are stored source-major (M x N) because every model
computation iterates per source; feature matrices are object-major.  All
containers freeze their arrays after construction and are safe to share
read-only across workers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np


class DataError(Exception):
    """Malformed or out-of-domain input data."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _set(obj, **fields) -> None:
    # frozen-dataclass field assignment during __post_init__
    for name, value in fields.items():
        object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class LabelMatrix:
    """Votes of M sources over N objects; entries in {-1, 0, +1}, 0 = abstain."""

    votes: np.ndarray
    object_ids: tuple[str, ...] | None = None
    source_names: tuple[str, ...] | None = None

    def __post_init__(self):
        votes = np.asarray(self.votes)
        if votes.ndim != 2:
            raise DataError("label matrix must be 2-dimensional (sources x objects)")
        if votes.shape[0] < 1 or votes.shape[1] < 1:
            raise DataError("label matrix needs at least one source and one object")
        if not np.isin(votes, (-1, 0, 1)).all():
            j, o = np.argwhere(~np.isin(votes, (-1, 0, 1)))[0]
            raise DataError(f"vote outside {{-1,0,1}} at source {j}, object {o}")
        _set(self, votes=_frozen(votes.astype(np.int8)))
        if self.object_ids is not None and len(self.object_ids) != self.n:
            raise DataError("object_ids length does not match object count")
        if self.source_names is not None and len(self.source_names) != self.m:
            raise DataError("source_names length does not match source count")

    @property
    def m(self) -> int:
        return self.votes.shape[0]

    @property
    def n(self) -> int:
        return self.votes.shape[1]


@dataclass(frozen=True)
class FeatureMatrixBinary:
    """N x P feature matrix with entries in {-1, +1}."""

    values: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise DataError("binary feature matrix must be 2-dimensional")
        if not np.isin(values, (-1, 1)).all():
            o, j = np.argwhere(~np.isin(values, (-1, 1)))[0]
            raise DataError(f"binary feature outside {{-1,+1}} at object {o}, column {j}")
        _set(self, values=_frozen(values.astype(np.int8)))
        if self.column_names is not None and len(self.column_names) != self.p:
            raise DataError("column_names length does not match feature count")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FeatureMatrixReal:
    """N x Q real-valued feature matrix; all entries finite."""

    values: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError("real feature matrix must be 2-dimensional")
        if not np.isfinite(values).all():
            o, j = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite feature at object {o}, column {j}")
        _set(self, values=_frozen(values))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def q(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class HardLabelVector:
    """Length-N vector of hard labels in {-1, +1}."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise DataError("hard labels must be a vector")
        if not np.isin(labels, (-1, 1)).all():
            o = np.argwhere(~np.isin(labels, (-1, 1)))[0, 0]
            raise DataError(f"hard label outside {{-1,+1}} at object {o}")
        _set(self, labels=_frozen(labels.astype(np.int8)))

    @property
    def n(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class ProbLabelVector:
    """Soft labels stored as the expected label E[Y | votes] in [-1, 1].

    The probability of class +1 is (1 + expected) / 2.
    """

    expected: np.ndarray

    def __post_init__(self):
        expected = np.asarray(self.expected, dtype=np.float64)
        if expected.ndim != 1:
            raise DataError("soft labels must be a vector")
        if not np.isfinite(expected).all() or (np.abs(expected) > 1.0).any():
            o = np.argwhere(~(np.isfinite(expected) & (np.abs(expected) <= 1.0)))[0, 0]
            raise DataError(f"expected label outside [-1,1] at object {o}")
        _set(self, expected=_frozen(expected))

    @property
    def n(self) -> int:
        return self.expected.shape[0]

    @property
    def probability(self) -> np.ndarray:
        """P(Y = +1) per object."""
        return (1.0 + self.expected) / 2.0


@dataclass(frozen=True)
class Dataset:
    """Bundle of aligned inputs for one task.

    Cross-component consistency (shared N) is checked by :func:`validate`,
    not at construction, so that inconsistent bundles can still be reported.
    """

    labels: LabelMatrix
    bin_features: FeatureMatrixBinary | None = None
    real_features: FeatureMatrixReal | None = None
    truth: HardLabelVector | None = None

    @property
    def n(self) -> int:
        return self.labels.n


@dataclass(frozen=True)
class Finding:
    level: str  # "fatal" | "warning" | "info"
    message: str


@dataclass(frozen=True)
class ValidationReport:
    n_by_component: dict[str, int]
    n_consistent: bool
    coverage: tuple[float, ...]
    vote_counts: tuple[tuple[int, int, int], ...]  # per source: (neg, abstain, pos)
    constant_bin_columns: tuple[int, ...]
    findings: tuple[Finding, ...]

    @property
    def ok(self) -> bool:
        return not any(f.level == "fatal" for f in self.findings)

    def to_dict(self) -> dict:
        return {
            "n_by_component": dict(self.n_by_component),
            "n_consistent": self.n_consistent,
            "coverage": list(self.coverage),
            "vote_counts": [list(c) for c in self.vote_counts],
            "constant_bin_columns": list(self.constant_bin_columns),
            "findings": [{"level": f.level, "message": f.message} for f in self.findings],
            "ok": self.ok,
        }


def validate(dataset: Dataset) -> ValidationReport:
    """Report-only consistency and coverage checks; never mutates inputs."""
    findings: list[Finding] = []
    n_by = {"labels": dataset.labels.n}
    if dataset.bin_features is not None:
        n_by["bin_features"] = dataset.bin_features.n
    if dataset.real_features is not None:
        n_by["real_features"] = dataset.real_features.n
    if dataset.truth is not None:
        n_by["truth"] = dataset.truth.n
    n_consistent = len(set(n_by.values())) == 1
    if not n_consistent:
        findings.append(Finding("fatal", f"object counts disagree: {n_by}"))

    votes = dataset.labels.votes
    nonabstain = votes != 0
    coverage = tuple(nonabstain.mean(axis=1).tolist())
    vote_counts = tuple(
        (int((row == -1).sum()), int((row == 0).sum()), int((row == 1).sum()))
        for row in votes
    )
    for j, cov in enumerate(coverage):
        if cov == 0.0:
            findings.append(Finding("warning", f"source {j} never votes"))

    constant_cols: tuple[int, ...] = ()
    if dataset.bin_features is not None:
        x = dataset.bin_features.values
        constant_cols = tuple(int(j) for j in range(x.shape[1]) if (x[:, j] == x[0, j]).all())
        for j in constant_cols:
            findings.append(Finding("warning", f"binary feature column {j} is constant"))

    return ValidationReport(
        n_by_component=n_by,
        n_consistent=n_consistent,
        coverage=coverage,
        vote_counts=vote_counts,
        constant_bin_columns=constant_cols,
        findings=tuple(findings),
    )


# ---------------------------------------------------------------------------
# CSV ingestion.  All loaders preserve file row order: row i is object i
# everywhere downstream.


def _read_rows(reader: TextIO, what: str) -> tuple[list[str], list[list[str]]]:
    rows = list(csv.reader(reader))
    rows = [r for r in rows if r]  # tolerate trailing blank lines
    if not rows:
        raise DataError(f"{what}: empty file")
    header, body = rows[0], rows[1:]
    if not header or header[0] != "object_id":
        raise DataError(f"{what}: header must start with 'object_id'")
    if len(header) < 2:
        raise DataError(f"{what}: header declares no value columns")
    if not body:
        raise DataError(f"{what}: no objects")
    for i, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise DataError(
                f"{what}: row {i} has {len(row)} columns, expected {len(header)}"
            )
    return header, body


def _cell_int(cell: str, what: str, row: int, col: str) -> int:
    try:
        return int(cell)
    except ValueError:
        raise DataError(f"{what}: row {row}, column {col}: {cell!r} is not an integer") from None


def _cell_float(cell: str, what: str, row: int, col: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"{what}: row {row}, column {col}: {cell!r} is not numeric") from None


def load_label_matrix(reader: TextIO) -> LabelMatrix:
    """Read `object_id,lf_1..lf_M` CSV into a source-major LabelMatrix."""
    header, body = _read_rows(reader, "labels")
    names = tuple(header[1:])
    ids = []
    rows = []
    for i, row in enumerate(body, start=1):
        ids.append(row[0])
        vals = []
        for name, cell in zip(names, row[1:]):
            v = _cell_int(cell, "labels", i, name)
            if v not in (-1, 0, 1):
                raise DataError(f"labels: row {i}, column {name}: {v} outside {{-1,0,1}}")
            vals.append(v)
        rows.append(vals)
    votes = np.array(rows, dtype=np.int8).T  # source-major
    return LabelMatrix(votes=votes, object_ids=tuple(ids), source_names=names)


def save_label_matrix(labels: LabelMatrix, writer: TextIO) -> None:
    names = labels.source_names or tuple(f"lf_{j + 1}" for j in range(labels.m))
    ids = labels.object_ids or tuple(str(i) for i in range(labels.n))
    w = csv.writer(writer, lineterminator="\n")
    w.writerow(("object_id",) + names)
    for i in range(labels.n):
        w.writerow((ids[i],) + tuple(int(v) for v in labels.votes[:, i]))


def load_binary_features(reader: TextIO, encoding: str = "pm1") -> FeatureMatrixBinary:
    """Read `object_id,f_1..f_P` CSV; `zero_one` maps 0 -> -1, 1 -> +1."""
    if encoding not in ("pm1", "zero_one"):
        raise DataError(f"unknown binary feature encoding {encoding!r}")
    allowed = (-1.0, 1.0) if encoding == "pm1" else (0.0, 1.0)
    header, body = _read_rows(reader, "binary features")
    names = tuple(header[1:])
    rows = []
    for i, row in enumerate(body, start=1):
        vals = []
        for name, cell in zip(names, row[1:]):
            v = _cell_float(cell, "binary features", i, name)
            if v not in allowed:
                raise DataError(
                    f"binary features: row {i}, column {name}: {cell!r} invalid for "
                    f"encoding {encoding}"
                )
            vals.append(v if encoding == "pm1" else (1.0 if v == 1.0 else -1.0))
        rows.append(vals)
    return FeatureMatrixBinary(np.array(rows, dtype=np.int8), column_names=names)


def save_binary_features(features: FeatureMatrixBinary, writer: TextIO) -> None:
    names = features.column_names or tuple(f"f_{j + 1}" for j in range(features.p))
    w = csv.writer(writer, lineterminator="\n")
    w.writerow(("object_id",) + names)
    for i in range(features.n):
        w.writerow((str(i),) + tuple(int(v) for v in features.values[i]))


def load_real_features(reader: TextIO) -> FeatureMatrixReal:
    """Read `object_id,v_1..v_Q` CSV of finite reals."""
    header, body = _read_rows(reader, "real features")
    names = tuple(header[1:])
    rows = []
    for i, row in enumerate(body, start=1):
        vals = []
        for name, cell in zip(names, row[1:]):
            v = _cell_float(cell, "real features", i, name)
            if not np.isfinite(v):
                raise DataError(f"real features: row {i}, column {name}: non-finite value")
            vals.append(v)
        rows.append(vals)
    return FeatureMatrixReal(np.array(rows, dtype=np.float64), column_names=names)


def load_hard_labels(reader: TextIO, what: str = "truth") -> tuple[HardLabelVector, tuple[str, ...]]:
    """Read `object_id,y` CSV with y in {-1,+1}; returns (labels, object ids)."""
    header, body = _read_rows(reader, what)
    col = header[1]
    ids, vals = [], []
    for i, row in enumerate(body, start=1):
        ids.append(row[0])
        v = _cell_int(row[1], what, i, col)
        if v not in (-1, 1):
            raise DataError(f"{what}: row {i}, column {col}: {v} outside {{-1,+1}}")
        vals.append(v)
    return HardLabelVector(np.array(vals, dtype=np.int8)), tuple(ids)


def load_soft_labels(reader: TextIO) -> tuple[ProbLabelVector, tuple[str, ...]]:
    """Read `object_id,expected_label[,probability]` CSV; returns (labels, ids)."""
    header, body = _read_rows(reader, "soft labels")
    if header[1] != "expected_label":
        raise DataError("soft labels: second column must be 'expected_label'")
    ids, vals = [], []
    for i, row in enumerate(body, start=1):
        ids.append(row[0])
        v = _cell_float(row[1], "soft labels", i, "expected_label")
        if not (np.isfinite(v) and -1.0 <= v <= 1.0):
            raise DataError(f"soft labels: row {i}: {v} outside [-1,1]")
        vals.append(v)
    return ProbLabelVector(np.array(vals, dtype=np.float64)), tuple(ids)


def save_soft_labels(labels: ProbLabelVector, ids: Sequence[str] | None, writer: TextIO) -> None:
    """Write `object_id,expected_label,probability` rows (full float precision)."""
    ids = tuple(ids) if ids is not None else tuple(str(i) for i in range(labels.n))
    w = csv.writer(writer, lineterminator="\n")
    w.writerow(("object_id", "expected_label", "probability"))
    prob = labels.probability
    for i in range(labels.n):
        w.writerow((ids[i], repr(float(labels.expected[i])), repr(float(prob[i]))))


def save_hard_labels(labels: HardLabelVector, ids: Sequence[str] | None, writer: TextIO) -> None:
    ids = tuple(ids) if ids is not None else tuple(str(i) for i in range(labels.n))
    w = csv.writer(writer, lineterminator="\n")
    w.writerow(("object_id", "y"))
    for i in range(labels.n):
        w.writerow((ids[i], int(labels.labels[i])))


def load_vector(reader: TextIO, column: str, what: str) -> tuple[np.ndarray, tuple[str, ...]]:
    """Read a two-column `object_id,<column>` CSV of finite reals."""
    header, body = _read_rows(reader, what)
    if header[1] != column:
        raise DataError(f"{what}: second column must be {column!r}, got {header[1]!r}")
    ids, vals = [], []
    for i, row in enumerate(body, start=1):
        ids.append(row[0])
        v = _cell_float(row[1], what, i, column)
        if not np.isfinite(v):
            raise DataError(f"{what}: row {i}: non-finite value")
        vals.append(v)
    return np.array(vals, dtype=np.float64), tuple(ids)
