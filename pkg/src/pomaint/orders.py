"""Stochastic-order predicates used as model assumptions and test oracles.

Implements the likelihood-ratio and first-order orders on probability
vectors, the TP2 property of matrices (every 2x2 minor nonnegative), and the
copositive order between two stochastic kernels. The copositive test for
matrices larger than 2x2 is NP-hard in general, so it is deliberately
tri-state: a certificate is only issued when one can actually be produced.

Index convention: the copositive-order definition is written 1-based in the
maintenance literature (column pairs j, j+1 for j = 1..N-1); everything here
is 0-based, so the compared column pairs are (c, c+1) for c = 0..N-2.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .validation import as_float_array

#: absolute tolerance for exact algebraic order tests (products of probabilities)
ORDER_ATOL = 1e-12
#: refutation tolerance for grid-based copositivity search
COPOSITIVE_GRID_ATOL = 1e-10

CERTIFIED_YES = "certified-yes"
CERTIFIED_NO = "certified-no"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class OrderCertificate:
    """Outcome of an order check.

    ``witness`` is present exactly when ``verdict == certified-no``: the 2x2
    minor indices (i, i', j, j') for TP2, or the simplex point (plus the
    offending kernel-pair column index) for copositivity. ``resolution`` is
    the simplex grid density used when an approximate search ran.
    """

    verdict: str
    witness: tuple | None = None
    resolution: int = 0

    def __post_init__(self):
        if self.verdict == CERTIFIED_NO and self.witness is None:
            raise ValueError("certified-no requires a witness")

    def __bool__(self) -> bool:
        return self.verdict == CERTIFIED_YES


def mlr_leq(p1, p2, atol: float = ORDER_ATOL) -> bool:
    """Likelihood-ratio order p1 <=_r p2.

    True iff p1[i] * p2[j] >= p1[j] * p2[i] for all i < j, within ``atol``
    on each product difference. Inputs must have equal length; the check is
    scale-invariant so unnormalized nonnegative vectors are accepted.
    """
    p1 = as_float_array(p1, "p1", ndim=1)
    p2 = as_float_array(p2, "p2", ndim=1)
    if p1.shape != p2.shape:
        raise ValueError(f"length mismatch: {p1.shape[0]} vs {p2.shape[0]}")
    # diffs[i, j] = p1[i] p2[j] - p1[j] p2[i]; need >= -atol above the diagonal
    outer = np.outer(p1, p2)
    diffs = outer - outer.T
    iu = np.triu_indices(p1.shape[0], k=1)
    return bool(np.all(diffs[iu] >= -atol))


def fsd_leq(p1, p2, atol: float = ORDER_ATOL) -> bool:
    """First-order stochastic dominance p1 <=_s p2 (upper-tail sums ordered)."""
    p1 = as_float_array(p1, "p1", ndim=1)
    p2 = as_float_array(p2, "p2", ndim=1)
    if p1.shape != p2.shape:
        raise ValueError(f"length mismatch: {p1.shape[0]} vs {p2.shape[0]}")
    tail1 = np.cumsum(p1[::-1])[::-1]
    tail2 = np.cumsum(p2[::-1])[::-1]
    return bool(np.all(tail1 <= tail2 + atol))


def check_tp2(A, atol: float = ORDER_ATOL) -> OrderCertificate:
    """TP2 check: every 2x2 minor A[i,j]A[i',j'] - A[i,j']A[i',j] >= -atol."""
    A = as_float_array(A, "A", ndim=2)
    if np.any(A < 0):
        i, j = np.unravel_index(np.argmin(A), A.shape)
        return OrderCertificate(CERTIFIED_NO, witness=(int(i), int(i), int(j), int(j)))
    n, m = A.shape
    for i, ip in combinations(range(n), 2):
        outer = np.outer(A[i], A[ip])
        # minors[j, jp] = A[i,j]A[ip,jp] - A[i,jp]A[ip,j]; upper triangle only
        minors = outer - outer.T
        ju, jpu = np.triu_indices(m, k=1)
        vals = minors[ju, jpu]
        bad = np.nonzero(vals < -atol)[0]
        if bad.size:
            b = bad[np.argmin(vals[bad])]
            return OrderCertificate(CERTIFIED_NO, witness=(i, ip, int(ju[b]), int(jpu[b])))
    return OrderCertificate(CERTIFIED_YES)


def _simplex_grid(n: int, resolution: int) -> np.ndarray:
    """All points of the regular simplex lattice {a / resolution : sum a = resolution}."""
    if n == 1:
        return np.ones((1, 1))
    pts = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            pts.append(prefix + [remaining])
            return
        for a in range(remaining, -1, -1):
            rec(prefix + [a], remaining - a, slots - 1)

    rec([], resolution, n)
    return np.asarray(pts, dtype=float) / resolution


def _is_copositive(E: np.ndarray, resolution: int) -> tuple[str, tuple | None]:
    """Tri-state copositivity of a symmetric matrix over the simplex."""
    n = E.shape[0]
    if n == 2:
        # exact criterion for E = [[a, b], [b, c]]
        a, b, c = E[0, 0], E[0, 1], E[1, 1]
        if a >= -ORDER_ATOL and c >= -ORDER_ATOL and b + np.sqrt(max(a, 0.0) * max(c, 0.0)) >= -ORDER_ATOL:
            return CERTIFIED_YES, None
        # a quadratic with a negative minimum on the segment; find the argmin
        grid = _simplex_grid(2, max(resolution, 1000))
        quad = np.einsum("ki,ij,kj->k", grid, E, grid)
        k = int(np.argmin(quad))
        return CERTIFIED_NO, tuple(grid[k])
    if np.all(E >= -ORDER_ATOL):
        return CERTIFIED_YES, None
    eig = np.linalg.eigvalsh(E)
    if eig.min() >= -ORDER_ATOL:
        return CERTIFIED_YES, None  # positive semidefinite
    grid = _simplex_grid(n, resolution)
    quad = np.einsum("ki,ij,kj->k", grid, E, grid)
    k = int(np.argmin(quad))
    if quad[k] < -COPOSITIVE_GRID_ATOL:
        return CERTIFIED_NO, tuple(grid[k])
    return UNDETERMINED, None


def pairwise_difference_matrices(Pu: np.ndarray, Pv: np.ndarray) -> np.ndarray:
    """Symmetrized column-pair difference matrices whose copositivity defines Pu <=_c Pv.

    For each adjacent column pair (c, c+1):
    e[m, n] = Pu[m, c] * Pv[n, c+1] - Pu[m, c+1] * Pv[n, c], E = (e + e^T) / 2.
    Returns an (N-1, N, N) stack.
    """
    n = Pu.shape[0]
    out = np.empty((n - 1, n, n))
    for c in range(n - 1):
        e = np.outer(Pu[:, c], Pv[:, c + 1]) - np.outer(Pu[:, c + 1], Pv[:, c])
        out[c] = 0.5 * (e + e.T)
    return out


def copositive_leq(Pu, Pv, resolution: int = 50) -> OrderCertificate:
    """Copositive order Pu <=_c Pv between two same-size stochastic kernels.

    certified-yes iff every symmetrized column-pair difference matrix is
    certified copositive; certified-no carries (column pair, simplex point)
    with a strictly negative quadratic form; undetermined when neither a
    certificate nor a refutation was found at the given grid resolution.
    """
    Pu = as_float_array(Pu, "Pu", ndim=2)
    Pv = as_float_array(Pv, "Pv", ndim=2)
    if Pu.shape != Pv.shape or Pu.shape[0] != Pu.shape[1]:
        raise ValueError(f"dimension mismatch: {Pu.shape} vs {Pv.shape}")
    n = Pu.shape[0]
    if n < 2:
        raise ValueError("kernels must be at least 2x2")
    verdict = CERTIFIED_YES
    for c, E in enumerate(pairwise_difference_matrices(Pu, Pv)):
        v, witness = _is_copositive(E, resolution)
        if v == CERTIFIED_NO:
            return OrderCertificate(CERTIFIED_NO, witness=(c, witness), resolution=resolution)
        if v == UNDETERMINED:
            verdict = UNDETERMINED
    return OrderCertificate(verdict, resolution=resolution)


def check_assumptions(model, resolution: int = 50) -> dict[str, OrderCertificate]:
    """Check the four structural assumptions behind the policy theory.

    A1: every hidden kernel P[j] is TP2.
    A2: P[j] <=_c P[j+1] for every adjacent observable-state pair.
    A3: Q is TP2.
    A4: B is TP2.

    A2 is reported as the worst verdict over the pairs (first refutation wins).
    """
    report: dict[str, OrderCertificate] = {}
    a1 = OrderCertificate(CERTIFIED_YES)
    for j in range(model.L1 + 1):
        cert = check_tp2(model.P[j])
        if not cert:
            a1 = OrderCertificate(CERTIFIED_NO, witness=(j,) + cert.witness)
            break
    report["A1"] = a1
    a2 = OrderCertificate(CERTIFIED_YES, resolution=resolution)
    for j in range(model.L1):
        cert = copositive_leq(model.P[j], model.P[j + 1], resolution=resolution)
        if cert.verdict == CERTIFIED_NO:
            a2 = OrderCertificate(CERTIFIED_NO, witness=(j,) + cert.witness, resolution=resolution)
            break
        if cert.verdict == UNDETERMINED:
            a2 = OrderCertificate(UNDETERMINED, resolution=resolution)
    report["A2"] = a2
    report["A3"] = check_tp2(model.Q)
    report["A4"] = check_tp2(model.B)
    return report
