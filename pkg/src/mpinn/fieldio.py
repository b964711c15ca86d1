"""Scalar field datasets on unstructured 2-d node sets, and their CSV form.

CSV files are comma-separated UTF-8 with a header row; scientific
notation is accepted on input and values are written with full
round-trip precision (shortest repr).  Column names are configuration,
not convention: a :class:`ColumnMap` adapts solver exports with
arbitrary headers.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateFieldError,
    DuplicateNodeError,
    EmptyFileError,
    MissingColumnError,
    NonFiniteCellError,
    NonNumericCellError,
    RaggedRowError,
    ValidationError,
)

# Nodes closer than this (after decimal rounding) count as duplicates;
# interpolation weights diverge at coincident nodes.
DUPLICATE_DECIMALS = 12


def find_duplicate_nodes(nodes):
    """First pair (i, j), i < j, of coinciding nodes, or None.

    Comparison is exact after rounding coordinates to 1e-12.
    """
    if len(nodes) < 2:
        return None
    key = np.round(nodes, DUPLICATE_DECIMALS)
    order = np.lexsort((key[:, 1], key[:, 0]))
    sorted_key = key[order]
    same = np.all(sorted_key[1:] == sorted_key[:-1], axis=1)
    if not same.any():
        return None
    pos = int(np.argmax(same))
    i, j = int(order[pos]), int(order[pos + 1])
    return (i, j) if i < j else (j, i)


class FieldDataset:
    """One scalar value per node of an unstructured 2-d point set.

    Immutable after construction.  Zero-length datasets are permitted in
    memory (an interpolation onto an empty target list yields one), but
    every ingestion and modeling boundary rejects them.
    """

    __slots__ = ("nodes", "values", "name")

    def __init__(self, nodes, values, name="field"):
        nodes = np.array(nodes, dtype=np.float64)
        values = np.array(values, dtype=np.float64)
        if nodes.size == 0:
            nodes = nodes.reshape(0, 2)
        if values.size == 0:
            values = values.reshape(0)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValidationError(f"nodes must have shape (n, 2), got {nodes.shape}")
        if values.ndim != 1 or values.shape[0] != nodes.shape[0]:
            raise ValidationError(
                f"{values.shape[0] if values.ndim == 1 else values.shape} values "
                f"for {nodes.shape[0]} nodes"
            )
        if not np.isfinite(nodes).all():
            raise ValidationError("coordinates contain non-finite entries")
        if not np.isfinite(values).all():
            raise ValidationError("values contain non-finite entries")
        dup = find_duplicate_nodes(nodes)
        if dup is not None:
            i, j = dup
            raise DuplicateNodeError(
                f"nodes {i} and {j} coincide at {tuple(nodes[i])}", indices=dup
            )
        nodes.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "name", str(name))

    def __setattr__(self, key, value):
        raise AttributeError("FieldDataset is immutable")

    def __len__(self):
        return self.nodes.shape[0]

    def __repr__(self):
        return f"FieldDataset({self.name!r}, n={len(self)})"


class FidelityPair:
    """Aligned training data: low-fidelity field plus high-fidelity values
    resampled onto the same nodes."""

    __slots__ = ("lf", "hf_on_lf_nodes", "hf_raw")

    def __init__(self, lf, hf_on_lf_nodes, hf_raw=None):
        if len(lf) == 0:
            raise ValidationError("fidelity pair needs at least one node")
        if not np.array_equal(lf.nodes, hf_on_lf_nodes.nodes):
            raise ValidationError(
                "lf and hf_on_lf_nodes must share identical node lists"
            )
        object.__setattr__(self, "lf", lf)
        object.__setattr__(self, "hf_on_lf_nodes", hf_on_lf_nodes)
        object.__setattr__(self, "hf_raw", hf_raw)

    def __setattr__(self, key, value):
        raise AttributeError("FidelityPair is immutable")

    def __len__(self):
        return len(self.lf)


@dataclass(frozen=True)
class ColumnMap:
    x_col: str = "x"
    y_col: str = "y"
    value_col: str = "value"


def _parse_cell(cell, path, lineno, column):
    try:
        value = float(cell)
    except ValueError:
        raise NonNumericCellError(
            f"{path}: row {lineno}, column {column!r}: not a number: {cell!r}"
        ) from None
    if not math.isfinite(value):
        raise NonFiniteCellError(
            f"{path}: row {lineno}, column {column!r}: non-finite value {cell!r}"
        )
    return value


def _read_rows(path, wanted):
    """Yield (lineno, parsed floats in `wanted` column order)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyFileError(f"{path}: file is empty") from None
        indices = []
        for column in wanted:
            if column not in header:
                raise MissingColumnError(
                    f"{path}: missing column {column!r} (header: {header})"
                )
            indices.append(header.index(column))
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue  # tolerate blank lines
            if len(row) != len(header):
                raise RaggedRowError(
                    f"{path}: row {lineno} has {len(row)} fields, header has "
                    f"{len(header)}"
                )
            yield lineno, [
                _parse_cell(row[idx].strip(), path, lineno, col)
                for idx, col in zip(indices, wanted)
            ]


def load_field_csv(path, column_map=None):
    """Read a field dataset from CSV, preserving row order."""
    cmap = column_map or ColumnMap()
    linenos, rows = [], []
    for lineno, rec in _read_rows(path, (cmap.x_col, cmap.y_col, cmap.value_col)):
        linenos.append(lineno)
        rows.append(rec)
    if not rows:
        raise EmptyFileError(f"{path}: no data rows")
    data = np.array(rows, dtype=np.float64)
    try:
        return FieldDataset(data[:, :2], data[:, 2], name=_stem(path))
    except DuplicateNodeError as err:
        i, j = err.indices
        raise DuplicateNodeError(
            f"{path}: rows {linenos[i]} and {linenos[j]} define the same node",
            indices=err.indices,
        ) from None


def load_nodes_csv(path, column_map=None):
    """Read only coordinates (for prediction targets); returns (n, 2) array."""
    cmap = column_map or ColumnMap()
    rows = [rec for _, rec in _read_rows(path, (cmap.x_col, cmap.y_col))]
    if not rows:
        raise EmptyFileError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def _stem(path):
    name = str(path).replace("\\", "/").rsplit("/", 1)[-1]
    return name.rsplit(".", 1)[0] if "." in name else name


def _fmt(x):
    # shortest repr round-trips exactly through float()
    return repr(float(x))


def save_field_csv(dataset, path):
    """Write ``x,y,value`` rows; loading the file reproduces the dataset."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "value"])
        for (x, y), v in zip(dataset.nodes, dataset.values):
            writer.writerow([_fmt(x), _fmt(y), _fmt(v)])


@dataclass(frozen=True)
class NormalizationMeta:
    """Z-score parameters: per input dimension and for the output field.

    Standard deviations use the population (divide-by-n) convention.
    """

    input_mean: tuple[float, float]
    input_std: tuple[float, float]
    output_mean: float
    output_std: float

    def norm_inputs(self, nodes):
        return (np.asarray(nodes, dtype=np.float64) - self.input_mean) / self.input_std

    def denorm_inputs(self, nodes):
        return np.asarray(nodes, dtype=np.float64) * self.input_std + self.input_mean

    def norm_values(self, values):
        return (np.asarray(values, dtype=np.float64) - self.output_mean) / self.output_std

    def denorm_values(self, values):
        return np.asarray(values, dtype=np.float64) * self.output_std + self.output_mean

    @staticmethod
    def identity():
        return NormalizationMeta((0.0, 0.0), (1.0, 1.0), 0.0, 1.0)


def fit_normalization(dataset):
    """Fit z-score parameters on a dataset (population std convention)."""
    if len(dataset) == 0:
        raise ValidationError("cannot fit normalization on an empty dataset")
    stats = {}
    for label, column in (
        ("x", dataset.nodes[:, 0]),
        ("y", dataset.nodes[:, 1]),
        ("value", dataset.values),
    ):
        std = float(np.std(column))
        if std == 0.0:
            raise DegenerateFieldError(
                f"column {label!r} is constant; cannot normalize"
            )
        stats[label] = (float(np.mean(column)), std)
    return NormalizationMeta(
        input_mean=(stats["x"][0], stats["y"][0]),
        input_std=(stats["x"][1], stats["y"][1]),
        output_mean=stats["value"][0],
        output_std=stats["value"][1],
    )


def apply_normalization(meta, dataset):
    return FieldDataset(
        meta.norm_inputs(dataset.nodes),
        meta.norm_values(dataset.values),
        name=dataset.name,
    )


def invert_normalization(meta, dataset):
    return FieldDataset(
        meta.denorm_inputs(dataset.nodes),
        meta.denorm_values(dataset.values),
        name=dataset.name,
    )
