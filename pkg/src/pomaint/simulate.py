"""Trajectory simulation of the coupled (observable, hidden, signal) process.

No maintenance happens during simulation: both components start new and
degrade freely, so trajectories may spend most epochs in the absorbing
failure states. At epoch k >= 1 the draw order is

    X1[k] ~ Q[X1[k-1]],   X2[k] ~ P[X1[k-1]][X2[k-1]],   Z[k] ~ B[X2[k]],

i.e. the hidden transition is modulated by the observable state at the
*previous* epoch.

Reproducibility: the root seed is split into one child stream per trajectory
(stream index = trajectory index), so generation is order-independent and
embarrassingly parallel. Categorical draws invert the row CDF with ties
resolved toward the lower index, which keeps output identical across
platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import SystemModel, validate_model


@dataclass(frozen=True)
class Trajectory:
    """One realization: observable states x1[0..n], signals z[1..n], optional hidden x2[0..n]."""

    x1: np.ndarray
    z: np.ndarray
    x2: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "x1", np.asarray(self.x1, dtype=np.int64))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=np.int64))
        if self.x2 is not None:
            object.__setattr__(self, "x2", np.asarray(self.x2, dtype=np.int64))
        if self.x1.shape[0] != self.z.shape[0] + 1:
            raise ValueError("x1 must have one more entry than z")
        if self.x2 is not None and self.x2.shape != self.x1.shape:
            raise ValueError("x2 must have the same length as x1")

    @property
    def n(self) -> int:
        return self.z.shape[0]


@dataclass(frozen=True)
class TrajectorySet:
    """T trajectories of common length n, stored column-stacked.

    ``x1`` has shape (T, n+1), ``z`` shape (T, n); ``x2`` is None unless the
    simulation revealed the hidden path for testing.
    """

    x1: np.ndarray
    z: np.ndarray
    x2: np.ndarray | None
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "x1", np.asarray(self.x1, dtype=np.int64))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=np.int64))
        if self.x2 is not None:
            object.__setattr__(self, "x2", np.asarray(self.x2, dtype=np.int64))
        if self.x1.ndim != 2 or self.z.ndim != 2:
            raise ValueError("x1 and z must be 2-d (trajectory, epoch) arrays")
        if self.x1.shape != (self.z.shape[0], self.z.shape[1] + 1):
            raise ValueError(f"shape mismatch: x1 {self.x1.shape}, z {self.z.shape}")
        if self.x2 is not None and self.x2.shape != self.x1.shape:
            raise ValueError("x2 must match x1's shape")

    @property
    def T(self) -> int:
        return self.x1.shape[0]

    @property
    def n(self) -> int:
        return self.z.shape[1]

    def trajectory(self, t: int) -> Trajectory:
        x2 = None if self.x2 is None else self.x2[t]
        return Trajectory(x1=self.x1[t], z=self.z[t], x2=x2)

    def __iter__(self):
        return (self.trajectory(t) for t in range(self.T))

    def __eq__(self, other):
        if not isinstance(other, TrajectorySet):
            return NotImplemented
        if (self.x2 is None) != (other.x2 is None):
            return False
        same_hidden = self.x2 is None or np.array_equal(self.x2, other.x2)
        return (np.array_equal(self.x1, other.x1)
                and np.array_equal(self.z, other.z) and same_hidden)


def _sample_rows(cum_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw per row; u on a CDF boundary resolves to the lower index."""
    return np.sum(cum_rows < u[:, None], axis=1)


def simulate_trajectories(model: SystemModel, T: int, n: int, seed: int,
                          reveal_hidden: bool = False) -> TrajectorySet:
    """Generate T independent length-n trajectories of (X1, X2, Z).

    Deterministic given (model, T, n, seed). ``reveal_hidden`` keeps the
    hidden path in the output (testing aid; real data never has it).
    """
    report = validate_model(model)
    if report:
        raise ValueError("invalid model: " + "; ".join(report))
    if T < 1 or n < 1:
        raise ValueError(f"T and n must be >= 1, got T={T}, n={n}")

    cum_q = np.cumsum(model.Q, axis=1)
    cum_p = np.cumsum(model.P, axis=2)
    cum_b = np.cumsum(model.B, axis=1)

    # one child stream per trajectory; each pre-draws its n x 3 uniforms
    streams = np.random.SeedSequence(seed).spawn(T)
    u = np.stack([np.random.default_rng(s).random((n, 3)) for s in streams])

    x1 = np.zeros((T, n + 1), dtype=np.int64)
    x2 = np.zeros((T, n + 1), dtype=np.int64)
    z = np.zeros((T, n), dtype=np.int64)
    for k in range(1, n + 1):
        j_prev = x1[:, k - 1]
        x1[:, k] = _sample_rows(cum_q[j_prev], u[:, k - 1, 0])
        x2[:, k] = _sample_rows(cum_p[j_prev, x2[:, k - 1]], u[:, k - 1, 1])
        z[:, k - 1] = _sample_rows(cum_b[x2[:, k]], u[:, k - 1, 2])
    return TrajectorySet(x1=x1, z=z, x2=x2 if reveal_hidden else None, seed=seed)


# --- CSV persistence ---------------------------------------------------------
#
# Format: a header comment `# seed=<int> T=<int> n=<int>`, a column header
# `traj,step,x1,z[,x2]`, then one row per (t, k) for k = 0..n. The k = 0 row
# has an empty z field (no signal is emitted at epoch 0).


def write_trajectories(data: TrajectorySet, path) -> None:
    lines = [f"# seed={data.seed} T={data.T} n={data.n}"]
    hidden = data.x2 is not None
    lines.append("traj,step,x1,z,x2" if hidden else "traj,step,x1,z")
    for t in range(data.T):
        for k in range(data.n + 1):
            zval = "" if k == 0 else str(data.z[t, k - 1])
            row = f"{t},{k},{data.x1[t, k]},{zval}"
            if hidden:
                row += f",{data.x2[t, k]}"
            lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectories(path, L1: int | None = None, L2: int | None = None,
                      M: int | None = None) -> TrajectorySet:
    """Parse a trajectory CSV; optional space sizes enable range checks."""
    raw = Path(path).read_text().splitlines()
    seed = 0
    rows = []
    header = None
    for line in raw:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if tok.startswith("seed="):
                    seed = int(tok[5:])
            continue
        if header is None:
            header = line.split(",")
            if header[:4] != ["traj", "step", "x1", "z"]:
                raise ValueError(f"unexpected trajectory CSV header: {line!r}")
            continue
        rows.append(line.split(","))
    if header is None or not rows:
        raise ValueError("empty trajectory file")
    hidden = len(header) == 5

    by_traj: dict[int, list] = {}
    for parts in rows:
        if len(parts) != len(header):
            raise ValueError(f"malformed row: {','.join(parts)!r}")
        t, k = int(parts[0]), int(parts[1])
        by_traj.setdefault(t, []).append((k, parts[2], parts[3], parts[4] if hidden else None))

    T = len(by_traj)
    if sorted(by_traj) != list(range(T)):
        raise ValueError("non-contiguous trajectory ids")
    n = len(by_traj[0]) - 1
    x1 = np.zeros((T, n + 1), dtype=np.int64)
    z = np.zeros((T, n), dtype=np.int64)
    x2 = np.zeros((T, n + 1), dtype=np.int64) if hidden else None
    for t, entries in by_traj.items():
        entries.sort(key=lambda e: e[0])
        if [e[0] for e in entries] != list(range(n + 1)):
            raise ValueError(f"non-contiguous epochs in trajectory {t}")
        for k, sx1, sz, sx2 in entries:
            v1 = int(sx1)
            if L1 is not None and not 0 <= v1 <= L1:
                raise ValueError(f"x1 out of range at traj {t}, step {k}: {v1}")
            x1[t, k] = v1
            if k == 0:
                if sz != "":
                    raise ValueError(f"trajectory {t} has a signal at epoch 0")
            else:
                vz = int(sz)
                if M is not None and not 0 <= vz <= M:
                    raise ValueError(f"signal out of range at traj {t}, step {k}: {vz}")
                z[t, k - 1] = vz
            if hidden:
                v2 = int(sx2)
                if L2 is not None and not 0 <= v2 <= L2:
                    raise ValueError(f"x2 out of range at traj {t}, step {k}: {v2}")
                x2[t, k] = v2
    return TrajectorySet(x1=x1, z=z, x2=x2, seed=seed)
