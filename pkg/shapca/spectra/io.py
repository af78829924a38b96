"""
Spectra I/O
CSV schema: header `sample_id,group_id,label,<axis values...>`, one spectrum per row.
Lines starting with `#` are comments; `# key=value` comments written by save_csv carry
the unit label and class order so a save/load round-trip is exact.
"""
import csv
import io
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from shapca.spectra.errors import (
    NonMonotoneAxisError,
    NonNumericCellError,
    RaggedRowError,
    SpectraParseError,
    UnknownLabelColumnError,
)
from shapca.spectra.models import SpectraDataset, SpectralAxis
from shapca.utils.files import write_text_atomic

logger = logging.getLogger(__name__)

ID_COLUMNS = ("sample_id", "group_id", "label")


def _parse_float(cell: str, row: int, column: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise NonNumericCellError(f"non-numeric value {cell!r}", row=row, column=column) from None
    if not np.isfinite(value):
        raise NonNumericCellError(f"non-finite value {cell!r}", row=row, column=column)
    return value


def _read_meta(line: str, meta: Dict[str, str]):
    body = line.lstrip("#").strip()
    if "=" in body:
        key, value = body.split("=", 1)
        meta[key.strip()] = value.strip()


def parse_csv_text(text: str, class_names: Optional[Sequence[str]] = None) -> SpectraDataset:
    """
    Parse spectra CSV text.

    Row numbers in errors are 1-based file line numbers; columns are 0-based.
    """
    meta: Dict[str, str] = {}
    rows = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            _read_meta(line, meta)
            continue
        cells = next(csv.reader([line]))
        rows.append((line_no, [c.strip() for c in cells]))

    if not rows:
        raise SpectraParseError("no header row")

    header_row, header = rows[0]
    if len(header) < len(ID_COLUMNS) + 2:
        raise SpectraParseError("header must list sample_id, group_id, label and >= 2 axis values", row=header_row)
    for col, expected in enumerate(ID_COLUMNS):
        if header[col].lower() != expected:
            if expected == "label":
                raise UnknownLabelColumnError(f"expected 'label' column, found {header[col]!r}", row=header_row, column=col)
            raise SpectraParseError(f"expected {expected!r} column, found {header[col]!r}", row=header_row, column=col)

    axis_values = np.array([
        _parse_float(cell, header_row, col)
        for col, cell in enumerate(header[len(ID_COLUMNS):], start=len(ID_COLUMNS))
    ])
    steps = np.diff(axis_values)
    if np.any(steps <= 0):
        bad = int(np.argmax(steps <= 0)) + 1 + len(ID_COLUMNS)
        raise NonMonotoneAxisError("axis values must be strictly increasing", row=header_row, column=bad)
    n_cols = len(header)

    sample_ids: List[str] = []
    group_cells: List[str] = []
    label_cells: List[str] = []
    intensities = []
    for line_no, cells in rows[1:]:
        if len(cells) != n_cols:
            raise RaggedRowError(
                f"expected {n_cols - len(ID_COLUMNS)} intensities, found {len(cells) - len(ID_COLUMNS)}",
                row=line_no,
            )
        if not cells[2]:
            raise UnknownLabelColumnError("empty label", row=line_no, column=2)
        sample_ids.append(cells[0])
        group_cells.append(cells[1])
        label_cells.append(cells[2])
        intensities.append([
            _parse_float(cell, line_no, col)
            for col, cell in enumerate(cells[len(ID_COLUMNS):], start=len(ID_COLUMNS))
        ])

    if class_names is None and "class_names" in meta:
        class_names = json.loads(meta["class_names"])
    if class_names is None:
        class_names = sorted(set(label_cells))
    class_index = {name: i for i, name in enumerate(class_names)}
    labels = []
    for (line_no, _), label in zip(rows[1:], label_cells):
        if label not in class_index:
            raise UnknownLabelColumnError(f"label {label!r} is not a known class", row=line_no, column=2)
        labels.append(class_index[label])

    if all(g == "" for g in group_cells):
        groups = None
    elif any(g == "" for g in group_cells):
        line_no = rows[1 + group_cells.index("")][0]
        raise SpectraParseError("missing group_id while other rows have one", row=line_no, column=1)
    else:
        groups = group_cells

    axis = SpectralAxis(values=axis_values, unit_label=meta.get("unit_label", "cm-1"))
    return SpectraDataset(
        axis=axis,
        intensities=np.array(intensities, dtype=np.float64).reshape(len(sample_ids), axis.size),
        labels=np.array(labels, dtype=np.int64),
        class_names=list(class_names),
        sample_ids=sample_ids,
        groups=groups,
    )


def load_csv(path: Path, class_names: Optional[Sequence[str]] = None) -> SpectraDataset:
    """Load and validate a spectra CSV file"""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    ds = parse_csv_text(text, class_names=class_names)
    logger.info(f"Loaded {ds.n_samples} spectra x {ds.n_features} points from {path}")
    return ds


def format_csv(ds: SpectraDataset) -> str:
    buf = io.StringIO()
    buf.write(f"# unit_label={ds.axis.unit_label}\n")
    buf.write(f"# class_names={json.dumps(ds.class_names)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(ID_COLUMNS) + [repr(float(v)) for v in ds.axis.values])
    groups = ds.groups if ds.groups is not None else [""] * ds.n_samples
    for i in range(ds.n_samples):
        writer.writerow(
            [ds.sample_ids[i], groups[i], ds.class_names[int(ds.labels[i])]]
            + [repr(float(v)) for v in ds.intensities[i]]
        )
    return buf.getvalue()


def save_csv(ds: SpectraDataset, path: Path) -> Path:
    return write_text_atomic(path, format_csv(ds))


def to_json_dict(ds: SpectraDataset) -> dict:
    """JSON envelope used as the CLI dataset cache"""
    return {"format": "shapca.spectra/1", "dataset": ds.to_json_dict()}


def from_json_dict(data: dict) -> SpectraDataset:
    if data.get("format") != "shapca.spectra/1":
        raise SpectraParseError(f"unknown dataset envelope {data.get('format')!r}")
    return SpectraDataset.from_json_dict(data["dataset"])


def subset(ds: SpectraDataset, indices: Sequence[int]) -> SpectraDataset:
    """Row selection keeping axis and class order"""
    idx = np.asarray(indices, dtype=np.int64)
    return SpectraDataset(
        axis=ds.axis,
        intensities=ds.intensities[idx],
        labels=ds.labels[idx],
        class_names=ds.class_names,
        sample_ids=[ds.sample_ids[i] for i in idx],
        groups=[ds.groups[i] for i in idx] if ds.groups is not None else None,
    )


def drop_classes(ds: SpectraDataset, names: Sequence[str]) -> SpectraDataset:
    """Remove every sample of the named classes and re-index the rest"""
    unknown = [n for n in names if n not in ds.class_names]
    if unknown:
        raise ValueError(f"unknown classes: {unknown}")
    kept_names = [n for n in ds.class_names if n not in set(names)]
    if len(kept_names) < 2:
        raise ValueError("fewer than 2 classes would remain")
    remap = {ds.class_names.index(n): i for i, n in enumerate(kept_names)}
    keep = np.array([int(lab) in remap for lab in ds.labels])
    idx = np.flatnonzero(keep)
    logger.info(f"Dropping classes {list(names)}: {ds.n_samples - idx.size} spectra removed")
    return SpectraDataset(
        axis=ds.axis,
        intensities=ds.intensities[idx],
        labels=np.array([remap[int(ds.labels[i])] for i in idx], dtype=np.int64),
        class_names=kept_names,
        sample_ids=[ds.sample_ids[i] for i in idx],
        groups=[ds.groups[i] for i in idx] if ds.groups is not None else None,
    )


def class_mean_spectra(ds: SpectraDataset) -> np.ndarray:
    """C x P per-class mean intensities; rows of absent classes are NaN"""
    means = np.full((ds.n_classes, ds.n_features), np.nan)
    for c in range(ds.n_classes):
        mask = ds.labels == c
        if mask.any():
            means[c] = ds.intensities[mask].mean(axis=0)
    return means
