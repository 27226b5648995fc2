"""Shared numeric containers, validation and CSV matrix I/O.

Matrices are plain dense ``float64`` numpy arrays.  Validated arrays are
returned read-only so they can be shared between threads and models without
defensive copies.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

SYMMETRY_REPAIR_TOL = 1e-9
DIAGONAL_TOL = 1e-12


class DrfError(Exception):
    """Base class for all errors raised by this package."""

    code = "DrfError"

    def __str__(self) -> str:
        msg = super().__str__()
        return msg or self.code


class ValidationError(DrfError, ValueError):
    code = "ValidationError"


class NonSquare(ValidationError):
    code = "NonSquare"


class NegativeEntry(ValidationError):
    code = "NegativeEntry"


class NonzeroDiagonal(ValidationError):
    code = "NonzeroDiagonal"


class AsymmetryTooLarge(ValidationError):
    code = "AsymmetryTooLarge"


class NonFiniteEntry(ValidationError):
    code = "NonFiniteEntry"


class DimensionMismatch(ValidationError):
    code = "DimensionMismatch"


class MatrixIOError(DrfError, OSError):
    code = "IoError"


class RaggedRows(DrfError, ValueError):
    code = "RaggedRows"


class NonNumericCell(DrfError, ValueError):
    code = "NonNumericCell"


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def as_input_matrix(X, name: str = "inputs") -> np.ndarray:
    """Validate an N x p input matrix (a 1-D array is read as one row)."""
    X = np.array(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteEntry(f"{name} contains non-finite entries")
    return _readonly(X)


def as_response_matrix(Y, n_rows: Optional[int] = None, name: str = "responses") -> np.ndarray:
    """Validate an N x q response matrix; a 1-D array is read as a column."""
    Y = np.array(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2 or Y.shape[0] < 1 or Y.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D matrix, got shape {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise NonFiniteEntry(f"{name} contains non-finite entries")
    if n_rows is not None and Y.shape[0] != n_rows:
        raise DimensionMismatch(f"{name} has {Y.shape[0]} rows, expected {n_rows}")
    return _readonly(Y)


def validate_distance_matrix(D) -> np.ndarray:
    """Check that ``D`` is a proper response distance matrix.

    Small floating-point asymmetry (at most 1e-9) is repaired by averaging
    ``D`` with its transpose; anything larger is rejected.  An array that
    already passed validation comes back bit-identical.
    """
    D = np.array(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] < 1:
        raise NonSquare(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise NonFiniteEntry("distance matrix contains non-finite entries")
    if np.any(D < 0):
        i, j = np.argwhere(D < 0)[0]
        raise NegativeEntry(f"negative distance D[{i},{j}]={D[i, j]!r}")
    diag = np.abs(np.diag(D))
    if np.any(diag > DIAGONAL_TOL):
        i = int(np.argmax(diag))
        raise NonzeroDiagonal(f"diagonal entry D[{i},{i}]={D[i, i]!r} exceeds {DIAGONAL_TOL}")
    asym = np.max(np.abs(D - D.T))
    if asym > SYMMETRY_REPAIR_TOL:
        raise AsymmetryTooLarge(f"max |D - D^T| = {asym:.3g} exceeds {SYMMETRY_REPAIR_TOL}")
    if asym > 0:
        D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return _readonly(D)


@dataclass(frozen=True)
class Dataset:
    """Paired inputs with responses and/or their distance matrix."""

    inputs: np.ndarray
    distances: Optional[np.ndarray] = None
    responses: Optional[np.ndarray] = None

    def __post_init__(self):
        X = as_input_matrix(self.inputs)
        object.__setattr__(self, "inputs", X)
        n = X.shape[0]
        if self.responses is not None:
            object.__setattr__(self, "responses", as_response_matrix(self.responses, n))
        if self.distances is not None:
            D = validate_distance_matrix(self.distances)
            if D.shape[0] != n:
                raise DimensionMismatch(f"distance matrix is {D.shape[0]}x{D.shape[0]}, expected {n}")
            object.__setattr__(self, "distances", D)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_matrix_csv(path, expected_cols: Optional[int] = None) -> np.ndarray:
    """Read a rectangular numeric CSV file into a 2-D float array.

    A first row containing any non-numeric token is treated as a header and
    skipped.  Blank lines are ignored.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise MatrixIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if rows and not all(_is_number(c.strip()) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise RaggedRows(f"{path}: no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRows(f"{path}: row {i + 1} has {len(row)} columns, expected {width}")
        for j, cell in enumerate(row):
            try:
                out[i, j] = float(cell.strip())
            except ValueError:
                raise NonNumericCell(f"{path}: non-numeric cell {cell!r} at row {i + 1}, column {j + 1}") from None
    if expected_cols is not None and width != expected_cols:
        raise DimensionMismatch(f"{path}: expected {expected_cols} columns, found {width}")
    return out


def write_matrix_csv(path, M, header: Optional[list[str]] = None) -> None:
    """Write a matrix as CSV with 17 significant digits (lossless for float64)."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            if header is not None:
                fh.write(",".join(header) + "\n")
            for row in M:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")
    except OSError as exc:
        raise MatrixIOError(f"cannot write {path}: {exc.strerror or exc}") from exc
