"""Discounted POMDP machinery over (belief of the hidden component, observable state).

The decision problem: every period, observe the observable component's state
j and a signal z from the hidden component, maintain a Bayesian belief over
the hidden state, and choose one of four actions

    0   keep both components running,
    1   replace the observable component only,
    2   replace the hidden component only,
    12  replace both,

with a shared setup cost charged once per period in which any replacement
happens. A failed observable component (j = L1) forces action 1 or 12.

The value function is computed by synchronous value iteration on a regular
simplex lattice over beliefs; expectations land between lattice points and
are resolved by piecewise-linear (Freudenthal/barycentric) interpolation,
which is exact at lattice points and preserves the value function's
approximate concavity. The solver here does NOT require the TP2/copositive
assumptions; those affect the policy's structure, not well-posedness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .model import CostStructure, SystemModel, check_belief, reset_belief
from .validation import check_state

ACTIONS = (0, 1, 2, 12)
ACTION_KEEP, ACTION_REPLACE_1, ACTION_REPLACE_2, ACTION_REPLACE_BOTH = ACTIONS

#: iteration cap for fixed-point loops
DEFAULT_MAX_ITER = 100_000


class SolverError(RuntimeError):
    """Raised when a fixed-point loop fails to converge within its cap."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


# --- belief grid -------------------------------------------------------------


def _lattice_counts(n_states: int, resolution: int) -> np.ndarray:
    """Integer lattice points (a_0..a_{d-1}), sum = resolution, a_0 descending first."""
    pts: list[list[int]] = []

    def rec(prefix: list[int], remaining: int, slots: int):
        if slots == 1:
            pts.append(prefix + [remaining])
            return
        for a in range(remaining, -1, -1):
            rec(prefix + [a], remaining - a, slots - 1)

    rec([], resolution, n_states)
    return np.asarray(pts, dtype=np.int64)


@dataclass(frozen=True)
class BeliefGrid:
    """Regular simplex lattice over beliefs, with barycentric interpolation.

    For a 2-state hidden component the grid is {(1-u, u) : u = 0, step, ..., 1}
    ordered by ascending failure mass u; the first point is always the reset
    belief (1, 0, ..., 0).
    """

    n_states: int
    resolution: int
    points: np.ndarray = field(init=False)
    counts: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n_states < 2:
            raise ValueError("belief grid needs at least 2 hidden states")
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")
        counts = _lattice_counts(self.n_states, self.resolution)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "points", counts / self.resolution)
        self.counts.setflags(write=False)
        self.points.setflags(write=False)
        object.__setattr__(self, "_index", {tuple(c): i for i, c in enumerate(counts.tolist())})

    @classmethod
    def from_step(cls, step: float, n_states: int) -> "BeliefGrid":
        resolution = round(1.0 / step)
        if resolution < 1 or abs(resolution * step - 1.0) > 1e-12:
            raise ValueError(f"grid step {step} does not divide 1")
        return cls(n_states=n_states, resolution=resolution)

    @property
    def step(self) -> float:
        return 1.0 / self.resolution

    def __len__(self) -> int:
        return self.points.shape[0]

    def index_of(self, counts: tuple[int, ...]) -> int:
        return self._index[tuple(int(c) for c in counts)]

    def interpolate(self, beliefs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Barycentric vertex indices and weights for a batch of beliefs.

        Returns (idx, wts) of shape (m, n_states) with wts >= 0 summing to 1:
        a convex combination of at most n_states lattice points reproducing
        each input belief. Exact (single vertex) on lattice points.

        Uses the staircase construction on tail sums: with y_i = R * sum_{l>=i} pi_l,
        the cell corner is floor(y), and fractional parts sorted in descending
        order give the enclosing simplex and its weights.
        """
        b = np.atleast_2d(np.asarray(beliefs, dtype=float))
        m, d = b.shape
        if d != self.n_states:
            raise ValueError(f"beliefs have {d} states, grid has {self.n_states}")
        R = self.resolution
        # tail sums y_1..y_{d-1}, snapped to integers where float error is the
        # only thing keeping them off-lattice
        y = R * np.cumsum(b[:, ::-1], axis=1)[:, ::-1][:, 1:]
        ynear = np.rint(y)
        y = np.where(np.abs(y - ynear) < 1e-9, ynear, y)
        base = np.floor(y)
        frac = y - base

        order = np.argsort(-frac, axis=1, kind="stable")
        sorted_frac = np.take_along_axis(frac, order, axis=1)
        wts = np.empty((m, d))
        wts[:, 0] = 1.0 - (sorted_frac[:, 0] if d > 1 else 0.0)
        if d > 1:
            wts[:, 1:-1] = sorted_frac[:, :-1] - sorted_frac[:, 1:]
            wts[:, -1] = sorted_frac[:, -1]

        # vertex y-vectors: base plus unit increments in descending-frac order;
        # vertex v applies the first v increments
        onehot = np.zeros((m, d - 1, d - 1))
        onehot[np.arange(m)[:, None], np.arange(d - 1)[None, :], order] = 1.0
        increments = np.cumsum(onehot, axis=1)
        verts = np.concatenate([base[:, None, :], base[:, None, :] + increments], axis=1)

        # y-vectors -> lattice counts: a_0 = R - y_1, a_i = y_i - y_{i+1}, a_last = y_last
        full = np.concatenate([np.full((m, d, 1), float(R)), verts], axis=2)
        cnt = full[:, :, :-1] - full[:, :, 1:]
        cnt = np.concatenate([cnt, verts[:, :, -1:]], axis=2)
        cnt_i = np.rint(cnt).astype(np.int64)

        idx = np.zeros((m, d), dtype=np.int64)
        flat_ok = (cnt_i >= 0).all(axis=2) & (np.abs(cnt_i.sum(axis=2) - R) == 0)
        lookup = self._index
        for p, v in zip(*np.nonzero(flat_ok)):
            idx[p, v] = lookup[tuple(cnt_i[p, v])]
        bad = ~flat_ok
        if bad.any():
            # degenerate vertices (out of the simplex by a float whisker) carry
            # ~zero weight; fold them into the base vertex
            if np.any(np.abs(wts[bad]) > 1e-9):
                raise ValueError("interpolation produced an off-simplex vertex with mass")
            wts[bad] = 0.0
            base_idx = idx[:, 0]
            for p, v in zip(*np.nonzero(bad)):
                idx[p, v] = base_idx[p]
            wts /= wts.sum(axis=1, keepdims=True)
        return idx, wts

    def value_at(self, values: np.ndarray, beliefs: np.ndarray) -> np.ndarray:
        """Interpolate per-gridpoint values (G, ...) at arbitrary beliefs (m, d)."""
        idx, wts = self.interpolate(beliefs)
        return np.einsum("mv,mv...->m...", wts, values[idx])


# --- primitive operations ----------------------------------------------------


def stage_cost(costs: CostStructure, pi, j: int) -> float:
    """Expected one-period operating cost at (belief, observable state)."""
    pi = check_belief(pi, costs.c_o2.shape[0])
    j = check_state(j, costs.c_o1.shape[0] - 1, "j")
    return float(pi @ costs.c_o2 + costs.c_o1[j])


def observation_kernel(model: SystemModel, pi, j: int) -> np.ndarray:
    """Joint law of (next observable state k, next signal z) under action 0.

    Entry (k, z) = Q[j, k] * (pi P[j] B)_z; the table sums to 1.
    """
    pi = check_belief(pi, model.n_s2)
    j = check_state(j, model.L1, "j")
    w = (pi @ model.P[j]) @ model.B
    return np.outer(model.Q[j], w)


def belief_update(model: SystemModel, pi, j: int, z: int) -> np.ndarray:
    """Bayesian belief update after one period in observable state j with signal z.

    The result does not depend on the next observable state: the signal is
    conditionally independent of the observable chain given the hidden state.
    """
    pi = check_belief(pi, model.n_s2)
    j = check_state(j, model.L1, "j")
    z = check_state(z, model.M, "z")
    num = (pi @ model.P[j]) * model.B[:, z]
    denom = num.sum()
    if denom <= 0.0:
        raise ValueError(f"signal z={z} has zero probability at (pi={pi.tolist()}, j={j})")
    return num / denom


# --- value function / policy containers --------------------------------------


@dataclass(frozen=True)
class ValueFunction:
    """Discounted-cost values on the belief grid, one column per observable state."""

    grid: BeliefGrid
    values: np.ndarray  # (G, L1+1)

    def at(self, pi, j: int) -> float:
        pi = check_belief(pi, self.grid.n_states)
        return float(self.grid.value_at(self.values[:, j], pi[None, :])[0])


@dataclass(frozen=True)
class PolicyMap:
    """Greedy action per (grid point, observable state); entries in {0, 1, 2, 12}."""

    grid: BeliefGrid
    actions: np.ndarray  # (G, L1+1) int

    def at_index(self, g: int, j: int) -> int:
        return int(self.actions[g, j])


@dataclass(frozen=True)
class SolveResult:
    value: ValueFunction
    policy: PolicyMap
    iterations: int
    residual: float
    deltas: np.ndarray


# --- vectorized backup operator ----------------------------------------------


class BackupOperator:
    """Precomputed one-step backup of all four actions over an entire grid.

    Precomputes, per (observable state j, signal z): the signal probabilities
    (pi P[j] B)_z at every grid point, the updated beliefs, and their
    barycentric interpolation stencils. After that, one synchronous backup is
    a handful of dense gathers, so sweeping thousands of backups (value
    iteration, policy evaluation, threshold searches) stays cheap.
    """

    def __init__(self, model: SystemModel, costs: CostStructure, grid: BeliefGrid):
        if grid.n_states != model.n_s2:
            raise ValueError("grid and model disagree on hidden state count")
        if costs.c_o1.shape[0] != model.n_s1 or costs.c_o2.shape[0] != model.n_s2:
            raise ValueError("cost vectors do not match the model's spaces")
        self.model = model
        self.costs = costs
        self.grid = grid
        pts = grid.points
        G, d = pts.shape
        J, Z = model.n_s1, model.n_signals
        self.G, self.J, self.Z = G, J, Z

        self.co = (pts @ costs.c_o2)[:, None] + costs.c_o1[None, :]  # (G, J)
        self.e0_idx = grid.index_of((grid.resolution,) + (0,) * (d - 1))

        self.w = np.empty((J, Z, G))
        self.idx = np.empty((J, Z, G, d), dtype=np.int64)
        self.wts = np.empty((J, Z, G, d))
        for j in range(J):
            prior = pts @ model.P[j]  # (G, d)
            for z in range(Z):
                num = prior * model.B[None, :, z]
                wz = num.sum(axis=1)
                self.w[j, z] = wz
                safe = wz > 0.0
                nxt = np.where(safe[:, None], num / np.where(safe, wz, 1.0)[:, None], 0.0)
                nxt[~safe, 0] = 1.0  # placeholder belief; weight w=0 kills it
                self.idx[j, z], self.wts[j, z] = grid.interpolate(nxt)
                self.wts[j, z][~safe] = 0.0
        self._flat_idx = self.idx.reshape(-1, d)
        self._flat_wts = self.wts.reshape(-1, d)

    def gammas(self, V: np.ndarray) -> np.ndarray:
        """All four action values from a previous value table V (G, J).

        Returns an array (4, G, J) ordered (keep, replace-1, replace-2,
        replace-both). Admissibility at j = L1 is NOT applied here.
        """
        model, costs = self.model, self.costs
        gam = costs.gamma
        v_e0 = V[self.e0_idx]  # (J,)
        # interpolated continuation values at every updated belief, all (j, z)
        vb = np.einsum("nm,nmk->nk", self._flat_wts, V[self._flat_idx])
        vb = vb.reshape(self.J, self.Z, self.G, self.J)
        cont_keep = np.einsum("jzg,jzgk,jk->gj", self.w, vb, model.Q)
        cont_r1 = np.einsum("jzg,jzg->gj", self.w, vb[..., 0])
        out = np.empty((4, self.G, self.J))
        cs, cr1, cr2 = costs.c_s, costs.c_r1, costs.c_r2
        out[0] = self.co + gam * cont_keep
        out[1] = self.co + cs + cr1 + gam * cont_r1
        out[2] = self.co + cs + cr2 + gam * (model.Q @ v_e0)[None, :]
        out[3] = self.co + cs + cr1 + cr2 + gam * v_e0[0]
        return out

    def admissible_mask(self) -> np.ndarray:
        """(4, G, J) mask of allowed actions: all four below failure, {1, 12} at j = L1."""
        mask = np.ones((4, self.G, self.J), dtype=bool)
        mask[0, :, self.J - 1] = False
        mask[2, :, self.J - 1] = False
        return mask


def _fixed_point(op: BackupOperator, mask: np.ndarray, tol: float,
                 max_iter: int, V0: np.ndarray | None = None
                 ) -> tuple[np.ndarray, np.ndarray, int, float, np.ndarray]:
    """Iterate masked minimization backups to a sup-norm fixed point.

    Returns (V, action_index (G, J), iterations, residual, deltas). The
    returned V is the backup of the converged table and the action indices
    are its argmins, so the pair is mutually consistent.
    """
    V = np.zeros((op.G, op.J)) if V0 is None else V0.copy()
    deltas = []
    big = np.inf
    for it in range(1, max_iter + 1):
        gam = op.gammas(V)
        gam = np.where(mask, gam, big)
        Vn = gam.min(axis=0)
        delta = float(np.max(np.abs(Vn - V)))
        deltas.append(delta)
        V = Vn
        if delta <= tol:
            gam = np.where(mask, op.gammas(V), big)
            return gam.min(axis=0), gam.argmin(axis=0), it, delta, np.asarray(deltas)
    raise SolverError(
        f"no convergence within {max_iter} iterations (residual {deltas[-1]:.3e})",
        residual=deltas[-1])


_ACTION_CODES = np.asarray(ACTIONS, dtype=np.int64)


def value_iteration(model: SystemModel, costs: CostStructure, grid: BeliefGrid,
                    tol: float, max_iter: int = DEFAULT_MAX_ITER) -> SolveResult:
    """Optimal discounted values and greedy policy on the belief grid.

    Starts from V = 0 and iterates synchronous backups until the sup-norm
    change drops to ``tol``. Ties in the final argmin resolve in the action
    order 0 < 1 < 2 < 12 (cheapest, least invasive first).
    """
    op = BackupOperator(model, costs, grid)
    V, act_idx, iters, residual, deltas = _fixed_point(op, op.admissible_mask(), tol, max_iter)
    return SolveResult(
        value=ValueFunction(grid=grid, values=V),
        policy=PolicyMap(grid=grid, actions=_ACTION_CODES[act_idx]),
        iterations=iters, residual=residual, deltas=deltas)


def actions_from_rule(op: BackupOperator, rule) -> np.ndarray:
    """Materialize an action-selector callable into a validated (G, J) table."""
    acts = np.empty((op.G, op.J), dtype=np.int64)
    for j in range(op.J):
        for g in range(op.G):
            a = int(rule(op.grid.points[g], j))
            if a not in ACTIONS:
                raise ValueError(f"rule returned unknown action {a} at (grid {g}, j={j})")
            if j == op.J - 1 and a in (ACTION_KEEP, ACTION_REPLACE_2):
                raise ValueError(
                    f"inadmissible action {a} at failed observable state (grid {g}, j={j})")
            acts[g, j] = a
    return acts


def evaluate_fixed_policy(model: SystemModel, costs: CostStructure, rule,
                          grid: BeliefGrid, tol: float,
                          max_iter: int = DEFAULT_MAX_ITER) -> ValueFunction:
    """Discounted value of a fixed admissible rule (no optimization).

    ``rule`` is either a callable (belief, j) -> action or a precomputed
    (G, J) action table with entries in {0, 1, 2, 12}.
    """
    op = BackupOperator(model, costs, grid)
    V, _, _, _, _ = _fixed_point(op, policy_mask(op, rule), tol, max_iter)
    return ValueFunction(grid=grid, values=V)


def policy_mask(op: BackupOperator, rule) -> np.ndarray:
    """Single-action admissibility mask for a fixed rule."""
    if callable(rule):
        acts = actions_from_rule(op, rule)
    else:
        acts = np.asarray(rule, dtype=np.int64)
        if acts.shape != (op.G, op.J):
            raise ValueError(f"action table must have shape {(op.G, op.J)}")
        bad = ~np.isin(acts, _ACTION_CODES)
        if bad.any():
            g, j = np.argwhere(bad)[0]
            raise ValueError(f"unknown action {acts[g, j]} at (grid {g}, j={j})")
        tail = acts[:, op.J - 1]
        bad_tail = np.isin(tail, (ACTION_KEEP, ACTION_REPLACE_2))
        if bad_tail.any():
            g = int(np.nonzero(bad_tail)[0][0])
            raise ValueError(
                f"inadmissible action {tail[g]} at failed observable state (grid {g}, j={op.J - 1})")
    mask = np.zeros((4, op.G, op.J), dtype=bool)
    for a_i, a in enumerate(ACTIONS):
        mask[a_i] = acts == a
    return mask


def bellman_backup(model: SystemModel, costs: CostStructure, V: ValueFunction,
                   pi, j: int) -> tuple[float, int]:
    """One-step lookahead at an arbitrary belief; returns (value, best action).

    Off-grid continuation values come from the grid's barycentric
    interpolation. Zero-probability signals are skipped (their weight is 0).
    Ties resolve in the order 0 < 1 < 2 < 12.
    """
    pi = check_belief(pi, model.n_s2)
    j = check_state(j, model.L1, "j")
    gam = costs.gamma
    grid = V.grid
    co = stage_cost(costs, pi, j)
    prior = pi @ model.P[j]
    w = prior @ model.B  # (Z,)

    nz = np.nonzero(w > 0.0)[0]
    nxt = (prior[None, :] * model.B[:, nz].T) / w[nz, None]
    v_next = grid.value_at(V.values, nxt)  # (len(nz), J)
    e0 = reset_belief(model.n_s2)
    v_e0 = grid.value_at(V.values, e0[None, :])[0]  # (J,)

    g0 = co + gam * float(w[nz] @ (v_next @ model.Q[j]))
    g1 = co + costs.c_s + costs.c_r1 + gam * float(w[nz] @ v_next[:, 0])
    g2 = co + costs.c_s + costs.c_r2 + gam * float(model.Q[j] @ v_e0)
    g12 = co + costs.c_s + costs.c_r1 + costs.c_r2 + gam * float(v_e0[0])

    if j == model.L1:
        candidates = [(g1, ACTION_REPLACE_1), (g12, ACTION_REPLACE_BOTH)]
    else:
        candidates = list(zip((g0, g1, g2, g12), ACTIONS))
    best_v, best_a = candidates[0]
    for v, a in candidates[1:]:
        if v < best_v:
            best_v, best_a = v, a
    return float(best_v), int(best_a)


# --- policy structure report --------------------------------------------------


@dataclass(frozen=True)
class StructureReport:
    """Grid-resolution check of the threshold structure of a solved policy.

    All boundaries are expressed as the smallest grid value of pi(L2) (the
    hidden component's failure mass) at which the more aggressive action of
    the pair becomes weakly preferred; None when it never does. Violations
    smaller than one grid cell are undetectable at this resolution.
    """

    step: float
    l_star: int | None
    two_vs_both_pi_independent: bool
    boundaries: dict
    boundary_keep_both_non_increasing: bool
    replace1_both_regions_disjoint: bool
    violations: list

    def as_dict(self) -> dict:
        return {
            "step": self.step,
            "l_star": self.l_star,
            "two_vs_both_pi_independent": self.two_vs_both_pi_independent,
            "boundaries": {k: list(v) for k, v in self.boundaries.items()},
            "boundary_keep_both_non_increasing": self.boundary_keep_both_non_increasing,
            "replace1_both_regions_disjoint": self.replace1_both_regions_disjoint,
            "violations": list(self.violations),
            "clean": not self.violations,
            "note": f"checked at grid resolution step={self.step}; finer violations undetectable",
        }


def policy_structure_report(model: SystemModel, costs: CostStructure,
                            V: ValueFunction, policy: PolicyMap) -> StructureReport:
    """Verify the threshold-policy structure numerically on a 1-D belief grid.

    Checks, at grid resolution: (a) the replace-2 vs replace-both preference
    depends only on the observable state and switches once along it (threshold
    l*); (b) the keep -> replace-both boundary is non-increasing in the
    observable state; (c) per observable state, the replace-1-only and
    replace-both optimal regions do not overlap.
    """
    if model.L2 != 1:
        raise ValueError("structure report requires a 1-D belief grid (two hidden states)")
    grid = V.grid
    op = BackupOperator(model, costs, grid)
    gam_all = op.gammas(V.values)  # (4, G, J)
    g0, g1, g2, g12 = gam_all
    pi1 = grid.points[:, 1]
    J = op.J
    violations: list[str] = []

    bad_tail = ~np.isin(policy.actions[:, J - 1], (ACTION_REPLACE_1, ACTION_REPLACE_BOTH))
    if bad_tail.any():
        g = int(np.nonzero(bad_tail)[0][0])
        violations.append(
            f"policy keeps or only swaps the hidden component at failed observable state "
            f"(pi(1)={pi1[g]:.4f})")

    # (a) replace-2 vs replace-both: difference must not vary with the belief,
    # and its sign must switch at most once (2 preferred at low j)
    diff = g2 - g12  # (G, J)
    spread = diff.max(axis=0) - diff.min(axis=0)
    pi_independent = bool(np.all(spread < 1e-9))
    if not pi_independent:
        j_bad = int(np.argmax(spread))
        violations.append(
            f"replace-2 vs replace-both preference varies with belief at j={j_bad} "
            f"(spread {spread[j_bad]:.3e})")
    prefer_both = diff.mean(axis=0) >= 0.0  # per j
    l_star = None
    switches = np.nonzero(np.diff(prefer_both.astype(int)) != 0)[0]
    if prefer_both.any():
        if switches.size > 1 or not prefer_both[-1]:
            violations.append(
                "replace-2 vs replace-both preference is not a single threshold in j: "
                f"pattern {prefer_both.astype(int).tolist()}")
        first_both = int(np.argmax(prefer_both))
        l_star = first_both - 1 if first_both > 0 else -1
    else:
        l_star = J - 1

    # pairwise boundaries: smallest pi(1) where the aggressive action is weakly preferred
    def boundary(g_mild: np.ndarray, g_agg: np.ndarray) -> list:
        out = []
        for j in range(J):
            hit = np.nonzero(g_agg[:, j] <= g_mild[:, j] + 1e-12)[0]
            out.append(float(pi1[hit[0]]) if hit.size else None)
        return out

    boundaries = {
        "keep_vs_both": boundary(g0, g12),
        "replace1_vs_both": boundary(g1, g12),
        "keep_vs_replace2": boundary(g0, g2),
        "replace1_vs_replace2": boundary(g1, g2),
    }

    b = boundaries["keep_vs_both"]
    mono = True
    for j in range(J - 1):
        lo = b[j + 1] if b[j + 1] is not None else np.inf
        hi = b[j] if b[j] is not None else np.inf
        if lo > hi + 1e-12:
            mono = False
            violations.append(
                f"keep->replace-both boundary increases from j={j} ({b[j]}) to j={j + 1} ({b[j + 1]})")
    disjoint = True
    gam_adm = np.where(op.admissible_mask(), gam_all, np.inf)
    vmin = gam_adm.min(axis=0)
    both_opt = (np.abs(gam_adm[1] - vmin) < 1e-9) & (np.abs(gam_adm[3] - vmin) < 1e-9)
    if both_opt.any():
        disjoint = False
        g, j = np.argwhere(both_opt)[0]
        violations.append(
            f"replace-1 and replace-both both optimal at (pi(1)={pi1[g]:.4f}, j={j})")

    return StructureReport(
        step=grid.step, l_star=l_star, two_vs_both_pi_independent=pi_independent,
        boundaries=boundaries, boundary_keep_both_non_increasing=mono,
        replace1_both_regions_disjoint=disjoint, violations=violations)


class BeliefGridSolver(BaseEstimator):
    """scikit-learn style wrapper around grid value iteration.

    ``fit(model, costs)`` solves the decision problem; afterwards
    ``predict(pi, j)`` returns the optimal action at an arbitrary belief
    (via a one-step lookahead on the converged values, so off-grid beliefs
    are handled exactly like the solver handles them internally) and
    ``value(pi, j)`` the interpolated optimal cost.
    """

    def __init__(self, grid_step: float = 0.002, tol: float = 1e-3,
                 max_iter: int = DEFAULT_MAX_ITER):
        self.grid_step = grid_step
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, model: SystemModel, costs: CostStructure) -> "BeliefGridSolver":
        grid = BeliefGrid.from_step(self.grid_step, model.n_s2)
        result = value_iteration(model, costs, grid, tol=self.tol,
                                 max_iter=self.max_iter)
        self.model_ = model
        self.costs_ = costs
        self.grid_ = grid
        self.result_ = result
        self.value_ = result.value
        self.policy_ = result.policy
        self.n_iter_ = result.iterations
        self.residual_ = result.residual
        return self

    def predict(self, pi, j: int) -> int:
        return bellman_backup(self.model_, self.costs_, self.value_, pi, j)[1]

    def value(self, pi, j: int) -> float:
        return self.value_.at(pi, j)

    def structure_report(self) -> StructureReport:
        return policy_structure_report(self.model_, self.costs_,
                                       self.value_, self.policy_)
