"""Input validation helpers shared across the toolkit.

All checks operate on plain numpy arrays and either raise ``ValueError``
(for hard preconditions) or return violation strings (for report-style
validation, see :func:`pomaint.model.validate_model`).
"""

from __future__ import annotations

import numpy as np

#: absolute tolerance for "sums to one" checks on probability rows/vectors
PROB_ATOL = 1e-12


def as_float_array(x, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_probability_vector(p, name: str = "p", atol: float = PROB_ATOL) -> np.ndarray:
    """Validate a probability vector (nonnegative, sums to one)."""
    p = as_float_array(p, name, ndim=1)
    if np.any(p < -atol):
        raise ValueError(f"{name} has a negative entry: min={p.min()}")
    s = p.sum()
    if abs(s - 1.0) > atol:
        raise ValueError(f"{name} does not sum to 1 (sum={s!r})")
    return p


def check_stochastic_matrix(A, name: str = "A", atol: float = PROB_ATOL) -> np.ndarray:
    """Validate a row-stochastic matrix."""
    A = as_float_array(A, name, ndim=2)
    if np.any(A < -atol) or np.any(A > 1.0 + atol):
        raise ValueError(f"{name} has entries outside [0, 1]")
    sums = A.sum(axis=1)
    bad = np.nonzero(np.abs(sums - 1.0) > atol)[0]
    if bad.size:
        raise ValueError(f"{name} row {bad[0]} sums to {sums[bad[0]]!r}, expected 1")
    return A


def stochastic_matrix_violations(A: np.ndarray, name: str, atol: float = PROB_ATOL) -> list[str]:
    """Report-style version of :func:`check_stochastic_matrix`: returns defects, never raises."""
    out: list[str] = []
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        return [f"{name}: expected a matrix, got shape {A.shape}"]
    for i, row in enumerate(A):
        if np.any(~np.isfinite(row)):
            out.append(f"{name}: row {i} has a non-finite entry")
            continue
        neg = np.nonzero(row < -atol)[0]
        for j in neg:
            out.append(f"{name}: negative entry at ({i},{j}) = {row[j]!r}")
        big = np.nonzero(row > 1.0 + atol)[0]
        for j in big:
            out.append(f"{name}: entry above 1 at ({i},{j}) = {row[j]!r}")
        s = row.sum()
        if abs(s - 1.0) > atol:
            out.append(f"{name}: row {i} sums to {s:.12g}")
    return out


def check_state(value: int, high: int, name: str) -> int:
    value = int(value)
    if not 0 <= value <= high:
        raise ValueError(f"{name}={value} outside {{0..{high}}}")
    return value
