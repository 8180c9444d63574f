"""Text rendering of solved policies and tabular CSV output helpers."""

from __future__ import annotations

import csv
from pathlib import Path

from .solver import PolicyMap, ValueFunction

GLYPHS = {0: ".", 1: "1", 2: "2", 12: "X"}


def policy_heatmap(policy: PolicyMap, width: int = 80) -> str:
    """ASCII map of a policy over a 1-D belief grid.

    One row per observable state (worst at the top), columns binning the
    hidden component's failure mass from 0 to 1. Glyphs: '.' keep, '1'
    replace observable, '2' replace hidden, 'X' replace both.
    """
    if policy.grid.n_states != 2:
        raise ValueError("heatmap rendering requires a 1-D belief grid")
    G, J = policy.actions.shape
    width = min(width, G)
    lines = [f"policy map (columns: pi(1) from 0 to 1 in {width} bins)"]
    for j in reversed(range(J)):
        row = []
        for b in range(width):
            g = round(b * (G - 1) / (width - 1)) if width > 1 else 0
            row.append(GLYPHS[int(policy.actions[g, j])])
        lines.append(f"j={j} |" + "".join(row) + "|")
    lines.append("      " + "0" + " " * (width - 2) + "1")
    lines.append("legend: . keep   1 replace observable   2 replace hidden   X replace both")
    return "\n".join(lines)


def write_value_csv(value: ValueFunction, path) -> None:
    """CSV with header j,pi1,...,piL2,value, one row per (j, grid point)."""
    d = value.grid.n_states
    pi_cols = [f"pi{i}" for i in range(1, d)]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["j"] + pi_cols + ["value"])
        for j in range(value.values.shape[1]):
            for g, point in enumerate(value.grid.points):
                wr.writerow([j] + [f"{x:.10g}" for x in point[1:]]
                            + [f"{value.values[g, j]:.10g}"])


def write_policy_csv(policy: PolicyMap, path) -> None:
    """CSV with header j,pi1,...,piL2,action."""
    d = policy.grid.n_states
    pi_cols = [f"pi{i}" for i in range(1, d)]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["j"] + pi_cols + ["action"])
        for j in range(policy.actions.shape[1]):
            for g, point in enumerate(policy.grid.points):
                wr.writerow([j] + [f"{x:.10g}" for x in point[1:]]
                            + [int(policy.actions[g, j])])


def write_rows_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        wr.writerows(rows)


def replacement_thresholds(policy: PolicyMap) -> list[float | None]:
    """Per observable state, smallest failure mass at which the hidden part is replaced."""
    out = []
    G, J = policy.actions.shape
    pi1 = policy.grid.points[:, -1]
    for j in range(J):
        hits = [g for g in range(G) if policy.actions[g, j] in (2, 12)]
        out.append(float(pi1[hits[0]]) if hits else None)
    return out
