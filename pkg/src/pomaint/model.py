"""Core model types: the two-component system, its cost structure, and beliefs.

The system couples a fully observable degradation chain (states ``0..L1``,
kernel ``Q``) with a hidden chain (states ``0..L2``) whose one-step kernel
``P[j]`` is selected by the observable component's current state ``j``.
The hidden component emits signals ``0..M`` through the emission matrix ``B``.
State ``L1`` / ``L2`` is the failure state of the respective component.

Everything here is immutable after construction and purely functional, so
instances can be shared freely across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .validation import (
    PROB_ATOL,
    as_float_array,
    check_probability_vector,
    stochastic_matrix_violations,
)


@dataclass(frozen=True)
class SystemModel:
    """Parameter triple (Q, P family, B) with its space sizes.

    Attributes:
        L1: highest state index of the observable component.
        L2: highest state index of the hidden component.
        M: highest signal index.
        Q: (L1+1, L1+1) transition matrix of the observable component.
        P: (L1+1, L2+1, L2+1) stack; ``P[j]`` is the hidden component's
            transition matrix while the observable component sits in state j.
        B: (L2+1, M+1) emission matrix, ``B[i, z] = P(signal z | hidden i)``.
    """

    L1: int
    L2: int
    M: int
    Q: np.ndarray
    P: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float))
        object.__setattr__(self, "P", np.asarray(self.P, dtype=float))
        object.__setattr__(self, "B", np.asarray(self.B, dtype=float))
        self.Q.setflags(write=False)
        self.P.setflags(write=False)
        self.B.setflags(write=False)
        report = validate_model(self)
        if report:
            raise ValueError("invalid SystemModel: " + "; ".join(report))

    @property
    def n_s1(self) -> int:
        return self.L1 + 1

    @property
    def n_s2(self) -> int:
        return self.L2 + 1

    @property
    def n_signals(self) -> int:
        return self.M + 1

    def replace(self, **kwargs) -> "SystemModel":
        """Copy with some fields swapped (re-validates)."""
        data = dict(L1=self.L1, L2=self.L2, M=self.M, Q=self.Q, P=self.P, B=self.B)
        data.update(kwargs)
        return SystemModel(**data)


def validate_model(model: SystemModel) -> list[str]:
    """Return all invariant violations of a model; empty list means valid.

    Each entry names the offending matrix, row and defect, e.g.
    ``"Q: row 0 sums to 0.9"``.
    """
    out: list[str] = []
    n1, n2, nz = model.L1 + 1, model.L2 + 1, model.M + 1
    if model.L1 < 1:
        out.append(f"L1 must be >= 1, got {model.L1}")
    if model.L2 < 1:
        out.append(f"L2 must be >= 1, got {model.L2}")
    if model.M < 0:
        out.append(f"M must be >= 0, got {model.M}")
    if model.Q.shape != (n1, n1):
        out.append(f"Q: expected shape {(n1, n1)}, got {model.Q.shape}")
    else:
        out += stochastic_matrix_violations(model.Q, "Q")
    if model.P.shape != (n1, n2, n2):
        out.append(f"P: expected {n1} matrices of shape {(n2, n2)}, got {model.P.shape}")
    else:
        for j in range(n1):
            out += stochastic_matrix_violations(model.P[j], f"P[{j}]")
    if model.B.shape != (n2, nz):
        out.append(f"B: expected shape {(n2, nz)}, got {model.B.shape}")
    else:
        out += stochastic_matrix_violations(model.B, "B")
    return out


@dataclass(frozen=True)
class CostStructure:
    """Per-period operating costs, replacement costs and discount factor.

    ``c_o1``/``c_o2`` must be non-decreasing in the state index (worse states
    never cost less to run); violating inputs are rejected, not repaired.
    """

    c_o1: np.ndarray
    c_o2: np.ndarray
    c_s: float
    c_r1: float
    c_r2: float
    gamma: float

    def __post_init__(self):
        c1 = as_float_array(self.c_o1, "c_o1", ndim=1)
        c2 = as_float_array(self.c_o2, "c_o2", ndim=1)
        object.__setattr__(self, "c_o1", c1)
        object.__setattr__(self, "c_o2", c2)
        c1.setflags(write=False)
        c2.setflags(write=False)
        for name in ("c_s", "c_r1", "c_r2"):
            v = float(getattr(self, name))
            object.__setattr__(self, name, v)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be nonnegative and finite, got {v}")
        if np.any(c1 < 0) or np.any(c2 < 0):
            raise ValueError("operating costs must be nonnegative")
        if np.any(np.diff(c1) < 0):
            raise ValueError("c_o1 must be non-decreasing in the state index")
        if np.any(np.diff(c2) < 0):
            raise ValueError("c_o2 must be non-decreasing in the state index")
        g = float(self.gamma)
        object.__setattr__(self, "gamma", g)
        if not 0.0 < g < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {g}")

    def max_stage_cost(self) -> float:
        """Upper bound on the one-period cost over all states and actions."""
        return float(self.c_o1.max() + self.c_o2.max() + self.c_s + self.c_r1 + self.c_r2)


def reset_belief(n_states: int) -> np.ndarray:
    """The post-replacement belief e0 = (1, 0, ..., 0)."""
    e = np.zeros(n_states)
    e[0] = 1.0
    return e


def check_belief(pi, n_states: int | None = None) -> np.ndarray:
    """Validate a belief vector over the hidden component's states."""
    pi = check_probability_vector(pi, "belief", atol=PROB_ATOL)
    if n_states is not None and pi.shape[0] != n_states:
        raise ValueError(f"belief has length {pi.shape[0]}, expected {n_states}")
    return pi


# --- JSON persistence -------------------------------------------------------
#
# Model file keys: L1, L2, M, Q (list of rows), P (list of matrices), B.
# Costs file keys: c_o1, c_o2, c_s, c_r1, c_r2, gamma.
# json round-trips Python floats through repr, so read->write->read is
# bit-identical for decimal values of <= 15 significant digits.


def model_to_dict(model: SystemModel) -> dict:
    return {
        "L1": model.L1,
        "L2": model.L2,
        "M": model.M,
        "Q": model.Q.tolist(),
        "P": model.P.tolist(),
        "B": model.B.tolist(),
    }


def model_from_dict(d: dict) -> SystemModel:
    missing = {"L1", "L2", "M", "Q", "P", "B"} - set(d)
    if missing:
        raise ValueError(f"model file missing keys: {sorted(missing)}")
    return SystemModel(L1=int(d["L1"]), L2=int(d["L2"]), M=int(d["M"]),
                       Q=d["Q"], P=d["P"], B=d["B"])


def write_model(model: SystemModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def read_model(path) -> SystemModel:
    return model_from_dict(json.loads(Path(path).read_text()))


def costs_to_dict(costs: CostStructure) -> dict:
    return {
        "c_o1": costs.c_o1.tolist(),
        "c_o2": costs.c_o2.tolist(),
        "c_s": costs.c_s,
        "c_r1": costs.c_r1,
        "c_r2": costs.c_r2,
        "gamma": costs.gamma,
    }


def costs_from_dict(d: dict) -> CostStructure:
    missing = {"c_o1", "c_o2", "c_s", "c_r1", "c_r2", "gamma"} - set(d)
    if missing:
        raise ValueError(f"costs file missing keys: {sorted(missing)}")
    return CostStructure(c_o1=d["c_o1"], c_o2=d["c_o2"], c_s=d["c_s"],
                         c_r1=d["c_r1"], c_r2=d["c_r2"], gamma=d["gamma"])


def write_costs(costs: CostStructure, path) -> None:
    Path(path).write_text(json.dumps(costs_to_dict(costs), indent=2) + "\n")


def read_costs(path) -> CostStructure:
    return costs_from_dict(json.loads(Path(path).read_text()))
