"""Reading, validating and trimming multi-country input-output tables.

A table on disk is a JSON manifest plus CSV files::

    {
      "year": 2000,
      "countries": ["AUS", "AUT", ...],
      "sectors": ["A01", "A02", ...],
      "z_csv": "Z.csv",          # n x n, header row and first column are node codes
      "fd_csv": "FD.csv",        # n x (>= n_c), columns mapped to demand countries
      "va_csv": "VA.csv",        # one value per node, either orientation
      "t_csv": "T.csv",          # optional; derived from row sums when absent
      "drop_countries": ["ROW"]  # optional
    }

Node codes are ``<country>_<sector>``. Final-demand columns are assigned to a
country either by an exact match on the header or by the header's prefix up to
the first ``_`` (``DEU_CONS_h`` belongs to ``DEU``); all columns of a country
are summed.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_REL_TOL = 1e-6


class IOTableError(ValueError):
    """Malformed or inconsistent input-output data."""


class AccountingError(IOTableError):
    """Accounting identity violated beyond tolerance (strict mode)."""


class AccountingWarning(UserWarning):
    """Accounting identity violated beyond tolerance (lenient mode)."""


@dataclass(frozen=True)
class IOTable:
    """One year of world input-output accounts in monetary units."""

    countries: tuple[str, ...]
    sectors: tuple[str, ...]
    Z: np.ndarray
    FD: np.ndarray
    VA: np.ndarray
    T: np.ndarray
    year: int

    def __post_init__(self):
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "sectors", tuple(self.sectors))
        for name in ("Z", "FD", "VA", "T"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.n_nodes
        if self.Z.shape != (n, n):
            raise IOTableError(f"Z has shape {self.Z.shape}, expected {(n, n)}")
        if self.FD.shape != (n, self.n_countries):
            raise IOTableError(
                f"FD has shape {self.FD.shape}, expected {(n, self.n_countries)}"
            )
        for name in ("VA", "T"):
            if getattr(self, name).shape != (n,):
                raise IOTableError(
                    f"{name} has shape {getattr(self, name).shape}, expected {(n,)}"
                )

    @property
    def n_countries(self) -> int:
        return len(self.countries)

    @property
    def n_sectors(self) -> int:
        return len(self.sectors)

    @property
    def n_nodes(self) -> int:
        return self.n_countries * self.n_sectors

    def node_of(self, country: str, sector: str) -> int:
        return self.countries.index(country) * self.n_sectors + self.sectors.index(sector)

    def country_of(self, k: int) -> str:
        return self.countries[k // self.n_sectors]

    def sector_of(self, k: int) -> str:
        return self.sectors[k % self.n_sectors]

    @property
    def nodes(self) -> tuple[tuple[str, str], ...]:
        return tuple((c, s) for c in self.countries for s in self.sectors)

    @property
    def node_codes(self) -> list[str]:
        return [f"{c}_{s}" for c, s in self.nodes]

    def scaled(self, factor: float) -> "IOTable":
        """Same table with every monetary quantity multiplied by ``factor``."""
        return replace(
            self,
            Z=self.Z * factor,
            FD=self.FD * factor,
            VA=self.VA * factor,
            T=self.T * factor,
        )


@dataclass(frozen=True)
class ValidationReport:
    row_residuals: np.ndarray
    col_residuals: np.ndarray
    rel_tol: float

    @property
    def max_row_residual(self) -> float:
        return float(self.row_residuals.max(initial=0.0))

    @property
    def max_col_residual(self) -> float:
        return float(self.col_residuals.max(initial=0.0))

    @property
    def max_residual(self) -> float:
        return max(self.max_row_residual, self.max_col_residual)

    @property
    def failed_rows(self) -> np.ndarray:
        return np.flatnonzero(self.row_residuals > self.rel_tol)

    @property
    def failed_cols(self) -> np.ndarray:
        return np.flatnonzero(self.col_residuals > self.rel_tol)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.rel_tol

    def summary(self) -> str:
        if self.passed:
            return f"accounting identities hold (max relative residual {self.max_residual:.3g})"
        parts = []
        if self.failed_rows.size:
            worst = int(np.argmax(self.row_residuals))
            parts.append(
                f"{self.failed_rows.size} row(s) violate T = sum(Z) + sum(FD), "
                f"worst row {worst} ({self.row_residuals[worst]:.3g})"
            )
        if self.failed_cols.size:
            worst = int(np.argmax(self.col_residuals))
            parts.append(
                f"{self.failed_cols.size} column(s) violate T = sum(Z) + VA, "
                f"worst column {worst} ({self.col_residuals[worst]:.3g})"
            )
        return "; ".join(parts) + f" (rel_tol {self.rel_tol:g})"


def _relative(total: np.ndarray, parts: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.abs(total), np.abs(parts))
    diff = np.abs(total - parts)
    out = np.zeros_like(diff)
    nz = scale > 0
    out[nz] = diff[nz] / scale[nz]
    return out


def validate_accounting(table: IOTable, rel_tol: float = DEFAULT_REL_TOL) -> ValidationReport:
    """Check the row (output use) and column (input cost) identities."""
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    rows = table.Z.sum(axis=1) + table.FD.sum(axis=1)
    cols = table.Z.sum(axis=0) + table.VA
    return ValidationReport(
        row_residuals=_relative(table.T, rows),
        col_residuals=_relative(table.T, cols),
        rel_tol=rel_tol,
    )


def _enforce(report: ValidationReport, strict: bool, context: str) -> None:
    if report.passed:
        return
    msg = f"{context}: {report.summary()}"
    if strict:
        raise AccountingError(msg)
    warnings.warn(msg, AccountingWarning, stacklevel=3)


# ---------------------------------------------------------------------------
# CSV helpers


def _read_rows(path: Path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        return [row for row in csv.reader(fh) if row]


def _to_float(cell: str, path: Path, r: int, c: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise IOTableError(f"{path}: non-numeric cell {cell!r} at row {r}, column {c}") from None
    if not np.isfinite(value):
        raise IOTableError(f"{path}: non-finite cell {cell!r} at row {r}, column {c}")
    return value


def read_labeled_matrix(path: Path) -> tuple[list[str], list[str], np.ndarray]:
    """Read a CSV whose first row and first column hold labels."""
    rows = _read_rows(path)
    if len(rows) < 2:
        raise IOTableError(f"{path}: expected a header row and at least one data row")
    header = [h.strip() for h in rows[0][1:]]
    row_labels = []
    data = np.empty((len(rows) - 1, len(header)))
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != len(header) + 1:
            raise IOTableError(
                f"{path}: row {r} has {len(row) - 1} values, header has {len(header)}"
            )
        row_labels.append(row[0].strip())
        for c, cell in enumerate(row[1:]):
            data[r - 1, c] = _to_float(cell, path, r, c + 1)
    return row_labels, header, data


def _read_vector(path: Path, codes: list[str]) -> np.ndarray:
    row_labels, header, data = read_labeled_matrix(path)
    if data.shape == (len(codes), 1):
        labels = row_labels
        values = data[:, 0]
    elif data.shape == (1, len(codes)):
        labels = header
        values = data[0]
    else:
        raise IOTableError(
            f"{path}: vector of shape {data.shape}, expected {len(codes)} values"
        )
    _check_labels(path, labels, codes)
    return values


def _check_labels(path: Path, found: list[str], expected: list[str]) -> None:
    if len(found) != len(expected):
        raise IOTableError(f"{path}: {len(found)} labels, expected {len(expected)}")
    for i, (a, b) in enumerate(zip(found, expected)):
        if a != b:
            raise IOTableError(f"{path}: label {a!r} at position {i}, expected {b!r}")


def _fd_country(label: str, countries: tuple[str, ...]) -> str:
    if label in countries:
        return label
    prefix = label.split("_", 1)[0]
    if prefix in countries:
        return prefix
    raise IOTableError(f"final-demand column {label!r} does not belong to any listed country")


def _write_matrix(path: Path, row_labels, col_labels, data: np.ndarray, corner: str = "") -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([corner, *col_labels])
        for label, row in zip(row_labels, data):
            w.writerow([label, *(repr(float(x)) for x in row)])
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# public API


def load_io_table(
    manifest_path: str | os.PathLike,
    rel_tol: float = DEFAULT_REL_TOL,
    strict: bool = False,
    apply_drop: bool = True,
) -> IOTable:
    """Load and validate the table described by a JSON manifest.

    Accounting violations raise :class:`AccountingError` when ``strict`` and
    emit :class:`AccountingWarning` otherwise. Countries listed under
    ``drop_countries`` are removed after validation when ``apply_drop``.
    """
    manifest_path = Path(manifest_path)
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    for key in ("year", "countries", "sectors", "z_csv", "fd_csv", "va_csv"):
        if key not in manifest:
            raise IOTableError(f"{manifest_path}: manifest lacks {key!r}")
    base = manifest_path.parent
    countries = tuple(manifest["countries"])
    sectors = tuple(manifest["sectors"])
    codes = [f"{c}_{s}" for c in countries for s in sectors]

    def resolve(key: str) -> Path:
        path = base / manifest[key]
        if not path.exists():
            raise FileNotFoundError(f"{manifest_path}: {key} file {path} not found")
        return path

    z_path = resolve("z_csv")
    rows, cols, Z = read_labeled_matrix(z_path)
    _check_labels(z_path, rows, codes)
    _check_labels(z_path, cols, codes)

    fd_path = resolve("fd_csv")
    rows, cols, fd_raw = read_labeled_matrix(fd_path)
    _check_labels(fd_path, rows, codes)
    FD = np.zeros((len(codes), len(countries)))
    for c, label in enumerate(cols):
        FD[:, countries.index(_fd_country(label, countries))] += fd_raw[:, c]

    VA = _read_vector(resolve("va_csv"), codes)
    if manifest.get("t_csv"):
        T = _read_vector(resolve("t_csv"), codes)
    else:
        T = Z.sum(axis=1) + FD.sum(axis=1)

    table = IOTable(countries, sectors, Z, FD, VA, T, int(manifest["year"]))
    _enforce(validate_accounting(table, rel_tol), strict, str(manifest_path))
    drop = manifest.get("drop_countries") or []
    if apply_drop and drop:
        table = drop_regions(table, drop)
    return table


def write_io_table(table: IOTable, directory: str | os.PathLike, stem: str = "") -> Path:
    """Write ``table`` as manifest + CSVs; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    codes = table.node_codes
    names = {key: f"{stem}{key}.csv" for key in ("Z", "FD", "VA", "T")}
    _write_matrix(directory / names["Z"], codes, codes, table.Z)
    _write_matrix(directory / names["FD"], codes, table.countries, table.FD)
    _write_matrix(directory / names["VA"], codes, ["VA"], table.VA[:, None])
    _write_matrix(directory / names["T"], codes, ["T"], table.T[:, None])
    manifest = {
        "year": table.year,
        "countries": list(table.countries),
        "sectors": list(table.sectors),
        "z_csv": names["Z"],
        "fd_csv": names["FD"],
        "va_csv": names["VA"],
        "t_csv": names["T"],
    }
    path = directory / f"{stem}manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def drop_regions(table: IOTable, codes: Iterable[str], rel_tol: float = DEFAULT_REL_TOL) -> IOTable:
    """Remove every row, column and final-demand column of the given countries.

    Total output ``T`` is kept as published, so the row identity no longer
    holds for the remaining sectors; any imbalance is logged, never raised.
    """
    codes = set(codes)
    unknown = codes - set(table.countries)
    if unknown:
        raise IOTableError(f"unknown country code(s): {sorted(unknown)}")
    if not codes:
        return table
    keep_c = [i for i, c in enumerate(table.countries) if c not in codes]
    ns = table.n_sectors
    keep = np.array([c * ns + s for c in keep_c for s in range(ns)], dtype=int)
    out = IOTable(
        countries=tuple(table.countries[i] for i in keep_c),
        sectors=table.sectors,
        Z=table.Z[np.ix_(keep, keep)],
        FD=table.FD[np.ix_(keep, keep_c)],
        VA=table.VA[keep],
        T=table.T[keep],
        year=table.year,
    )
    report = validate_accounting(out, rel_tol)
    if not report.passed:
        logger.info("after dropping %s: %s", sorted(codes), report.summary())
    return out
