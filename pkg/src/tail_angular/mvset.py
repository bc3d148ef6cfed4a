"""Minimum-volume sets of the angular measure and anomaly flagging."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .estimators import AngularEstimate
from .geometry import EmptySet, Grid, SphereSet, angle, volume
from .transform import Dataset, RankModel


@dataclass(frozen=True)
class MvResult:
    chosen: SphereSet
    volume: float
    mass_hat: float
    feasible: bool
    index: int | None = None
    cells: tuple = ()


def _check_levels(alpha: float, psi: float) -> None:
    if not alpha > 0:
        raise ValueError("target mass alpha must be positive")
    if psi < 0:
        raise ValueError("tolerance psi must be non-negative")


def solve_mvset_arrays(volumes, masses, alpha: float, psi: float) -> tuple[int | None, bool]:
    """Index of the smallest-volume member with ``mass >= alpha - psi``; lowest index on ties."""
    _check_levels(alpha, psi)
    volumes = np.asarray(volumes, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if volumes.size == 0:
        raise ValueError("empty candidate class")
    feasible = np.flatnonzero(masses >= alpha - psi)
    if feasible.size == 0:
        return None, False
    # argmin returns the first minimiser, i.e. the lowest class index
    return int(feasible[np.argmin(volumes[feasible])]), True


def solve_mvset(sets: Sequence[SphereSet], alpha: float, psi: float, estimate: AngularEstimate,
                volumes: Sequence[float] | None = None) -> MvResult:
    """Exhaustive solver over a finite class."""
    if len(sets) == 0:
        raise ValueError("empty candidate class")
    d = estimate.angles.shape[1]
    vols = np.array([volume(A, d) for A in sets]) if volumes is None else np.asarray(volumes, dtype=float)
    masses = estimate.masses(sets)
    idx, ok = solve_mvset_arrays(vols, masses, alpha, psi)
    if not ok:
        return MvResult(EmptySet(), 0.0, 0.0, False)
    return MvResult(sets[idx], float(vols[idx]), float(masses[idx]), True, index=idx)


def greedy_cells(masses, target: float) -> tuple[list[int], bool]:
    """Cells by descending mass (lowest id first on ties) until the running mass reaches ``target``."""
    masses = np.asarray(masses, dtype=float)
    if target <= 0:
        return [], True
    order = np.lexsort((np.arange(masses.size), -masses))
    chosen, total = [], 0.0
    for i in order:
        chosen.append(int(i))
        total += masses[i]
        if total >= target:
            return chosen, True
    return list(range(masses.size)), False


def solve_mvset_greedy_cells(grid: Grid, alpha: float, psi: float, estimate: AngularEstimate,
                             masses=None) -> MvResult:
    """Exact MV-set over all unions of equal-volume grid cells."""
    _check_levels(alpha, psi)
    if masses is None:
        counts = estimate.grid_counts(grid)
        masses = estimate.factor * counts
    masses = np.asarray(masses, dtype=float)
    chosen, ok = greedy_cells(masses, alpha - psi)
    if not ok:
        return MvResult(EmptySet(), 0.0, 0.0, False)
    cells = tuple(sorted(chosen))
    mass = float(masses[list(cells)].sum()) if cells else 0.0
    return MvResult(grid.union(cells), len(cells) * grid.cell_volume, mass, True, cells=cells)


NON_EXTREME = "non-extreme"


def score_anomalies(result: MvResult, model: RankModel, k: int, test) -> list[bool | str]:
    """Per test row: ``"non-extreme"`` below the radial cut, else whether the angle is outside the MV-set.

    ``n`` is the training size stored in ``model``.
    """
    X = test.X if isinstance(test, Dataset) else np.atleast_2d(np.asarray(test, dtype=float))
    V = model.transform(X)
    r = V.max(axis=1)
    extreme = r >= model.n / k
    flags: list[bool | str] = [NON_EXTREME] * X.shape[0]
    if extreme.any():
        inside = result.chosen.contains(angle(V[extreme]))
        for i, ins in zip(np.flatnonzero(extreme), inside):
            flags[i] = not bool(ins)
    return flags
