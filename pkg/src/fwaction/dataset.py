"""Firewall log CSV ingestion.

The expected input is the per-session export of a firewall device: eleven
numeric traffic columns plus an ``Action`` column holding the device's
verdict (allow, deny, drop or reset-both). Parsing is strict about row
validity but keeps going on bad rows, accounting for every line in an
:class:`IngestReport`.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

ACTION_NAMES: tuple[str, ...] = ("allow", "deny", "drop", "reset-both")
ACTION_INDEX: dict[str, int] = {name: i for i, name in enumerate(ACTION_NAMES)}
N_CLASSES = 4

FEATURE_NAMES: tuple[str, ...] = (
    "Source Port",
    "Destination Port",
    "NAT Source Port",
    "NAT Destination Port",
    "Bytes",
    "Bytes Sent",
    "Bytes Received",
    "Packets",
    "Elapsed Time (sec)",
    "pkts_sent",
    "pkts_received",
)
N_FEATURES = len(FEATURE_NAMES)

ACTION_COLUMN = "Action"

# Column order of the canonical export: the action verdict sits between the
# NAT ports and the byte counters.
CSV_COLUMNS: tuple[str, ...] = FEATURE_NAMES[:4] + (ACTION_COLUMN,) + FEATURE_NAMES[4:]

# The first four features are TCP/UDP port numbers.
PORT_FEATURES: tuple[int, ...] = (0, 1, 2, 3)
PORT_MAX = 65535


@dataclass(frozen=True)
class Dataset:
    """An immutable feature matrix with a parallel class-index vector."""

    matrix: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        matrix = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.float64))
        labels = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64))
        if matrix.ndim != 2:
            raise DataError("feature matrix must be two-dimensional")
        if matrix.shape[0] != labels.shape[0]:
            raise DataError(
                f"matrix has {matrix.shape[0]} rows but labels has {labels.shape[0]}"
            )
        matrix.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def take(self, indices: np.ndarray) -> "Dataset":
        """New Dataset holding the given rows, in the given order."""
        return Dataset(self.matrix[indices], self.labels[indices], self.feature_names)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and self.matrix.shape == other.matrix.shape
            and np.array_equal(self.matrix, other.matrix)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass
class IngestReport:
    """Per-file accounting: every input row is either accepted or rejected."""

    rows_read: int = 0
    rows_accepted: int = 0
    rows_rejected: int = 0
    rejection_reasons: list[tuple[int, str]] = field(default_factory=list)
    class_counts: list[int] = field(default_factory=lambda: [0] * N_CLASSES)

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_accepted": self.rows_accepted,
            "rows_rejected": self.rows_rejected,
            "rejection_reasons": [[line, reason] for line, reason in self.rejection_reasons],
            "class_counts": list(self.class_counts),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _open_source(source):
    """Accept a path, raw bytes, or a readable text/binary object."""
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return io.StringIO(data)
    raise DataError(f"unsupported CSV source: {type(source)!r}")


def _check_header(header: list[str], schema_policy: str) -> list[int]:
    """Validate the header and return, per CSV_COLUMNS entry, the column
    position it is found at in the file."""
    cells = [c.strip().lstrip("﻿") for c in header]
    if schema_policy == "strict":
        if cells != list(CSV_COLUMNS):
            raise DataError(
                "strict schema: header must be exactly "
                f"{','.join(CSV_COLUMNS)!r}, got {','.join(cells)!r}"
            )
        return list(range(len(CSV_COLUMNS)))
    if schema_policy == "header-mapped":
        positions = []
        for name in CSV_COLUMNS:
            try:
                positions.append(cells.index(name))
            except ValueError:
                raise DataError(f"header-mapped schema: missing column {name!r}") from None
        return positions
    raise DataError(f"unknown schema policy {schema_policy!r}")


def _parse_feature(raw: str, feature_idx: int) -> float:
    text = raw.strip()
    if not text:
        raise ValueError("empty field")
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"non-numeric value {text!r}") from None
    if not np.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    if value < 0:
        raise ValueError(f"negative value {text!r}")
    if value != int(value):
        raise ValueError(f"non-integer value {text!r}")
    if feature_idx in PORT_FEATURES and value > PORT_MAX:
        raise ValueError(f"port value {text!r} exceeds {PORT_MAX}")
    return value


def parse_csv(source, schema_policy: str = "strict") -> tuple[Dataset, IngestReport]:
    """Parse a firewall log CSV into a Dataset plus an IngestReport.

    Bad rows are rejected with a (line number, reason) record; a missing or
    malformed header and an empty file are fatal. Line numbers are 1-based
    and count the header line.
    """
    report = IngestReport()
    rows: list[list[float]] = []
    labels: list[int] = []

    handle = _open_source(source)
    try:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty file: no header row") from None
        positions = _check_header(header, schema_policy)
        n_columns = len(header)
        action_pos = positions[CSV_COLUMNS.index(ACTION_COLUMN)]
        feature_pos = [p for i, p in enumerate(positions) if CSV_COLUMNS[i] != ACTION_COLUMN]

        for line_no, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            report.rows_read += 1
            if len(record) != n_columns:
                report.rows_rejected += 1
                report.rejection_reasons.append(
                    (line_no, f"expected {n_columns} fields, got {len(record)}")
                )
                continue
            action = record[action_pos].strip()
            label = ACTION_INDEX.get(action)
            if label is None:
                report.rows_rejected += 1
                report.rejection_reasons.append(
                    (line_no, f"unknown action {action!r}")
                )
                continue
            try:
                values = [
                    _parse_feature(record[pos], j)
                    for j, pos in enumerate(feature_pos)
                ]
            except ValueError as exc:
                report.rows_rejected += 1
                report.rejection_reasons.append((line_no, str(exc)))
                continue
            rows.append(values)
            labels.append(label)
            report.rows_accepted += 1
            report.class_counts[label] += 1
    finally:
        handle.close()

    if report.rows_read == 0:
        raise DataError("empty file: no data rows")
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), N_FEATURES)
    ds = Dataset(matrix, np.array(labels, dtype=np.int64))
    return ds, report


def render_csv(ds: Dataset, destination) -> None:
    """Write a Dataset back out in the canonical column order.

    All feature values are integral by construction, so they are written as
    integers and ``parse_csv(render_csv(ds))`` reproduces ``ds`` exactly.
    """
    own = isinstance(destination, (str, Path))
    handle = open(destination, "w", encoding="utf-8", newline="") if own else destination
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i in range(ds.n):
            row = [int(v) for v in ds.matrix[i]]
            record = row[:4] + [ACTION_NAMES[ds.labels[i]]] + row[4:]
            writer.writerow(record)
    finally:
        if own:
            handle.close()


def class_distribution(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Counts and fractions per class index. Fractions sum to one."""
    counts = np.bincount(ds.labels, minlength=N_CLASSES).astype(np.int64)
    if ds.n == 0:
        return counts, np.zeros(N_CLASSES)
    return counts, counts / ds.n


def validate(ds: Dataset) -> list[str]:
    """Check Dataset invariants; returns one message per violation.

    Violations are data, not errors: an empty list means the dataset is
    well formed.
    """
    violations: list[str] = []
    if ds.matrix.shape[1] != N_FEATURES:
        violations.append(
            f"matrix has {ds.matrix.shape[1]} feature columns, expected {N_FEATURES}"
        )
        return violations
    if len(ds.feature_names) != N_FEATURES or len(set(ds.feature_names)) != N_FEATURES:
        violations.append("feature_names must hold 11 unique entries")

    bad_label = (ds.labels < 0) | (ds.labels >= N_CLASSES)
    for idx in np.nonzero(bad_label)[0]:
        violations.append(f"row {idx}: label {ds.labels[idx]} outside 0..{N_CLASSES - 1}")

    finite = np.isfinite(ds.matrix)
    nonneg = ds.matrix >= 0
    for idx, col in zip(*np.nonzero(~finite)):
        violations.append(f"row {idx}: feature {ds.feature_names[col]!r} is not finite")
    for idx, col in zip(*np.nonzero(finite & ~nonneg)):
        violations.append(f"row {idx}: feature {ds.feature_names[col]!r} is negative")
    for col in PORT_FEATURES:
        over = np.nonzero(finite[:, col] & (ds.matrix[:, col] > PORT_MAX))[0]
        for idx in over:
            violations.append(
                f"row {idx}: port feature {ds.feature_names[col]!r} value "
                f"{ds.matrix[idx, col]:.0f} exceeds {PORT_MAX}"
            )
    return violations


def dataset_fingerprint(ds: Dataset) -> str:
    """Content hash of a Dataset, independent of its CSV formatting."""
    digest = hashlib.sha256()
    digest.update("\x1f".join(ds.feature_names).encode("utf-8"))
    digest.update(ds.matrix.astype("<f8").tobytes())
    digest.update(ds.labels.astype("<i8").tobytes())
    return digest.hexdigest()
