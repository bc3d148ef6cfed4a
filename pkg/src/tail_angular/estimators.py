"""Empirical, truncated, oracle and Monte Carlo angular-measure estimators.

All sample-based estimators share one representation: the standardised points
whose norm passes the radial cut ``||V_i|| >= n/k`` (angles and norms only),
a per-point weight and an optional upper band ``||V_i|| < M n/k``. Queries
count retained angles inside a set; whole grids are counted in one pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Protocol, Sequence

import numpy as np

from .geometry import Grid, SphereSet, angle
from .transform import Dataset, Margins, RankModel, fit_ranks

MC_BLOCK = 1 << 20


@dataclass(frozen=True)
class AngularEstimate:
    """A fitted estimator queryable on sphere sets.

    ``angles``/``norms`` hold the points with ``norm >= n/k`` (and, when
    truncated, ``norm < M n/k``). ``mass(A) = factor * count(A)`` with
    ``factor = M/(M-1)/k`` (truncated) or ``1/k_sign`` (conditional).
    """

    kind: str
    angles: np.ndarray
    norms: np.ndarray
    n: int
    k: int
    factor: float
    M: float | None = None
    labels: np.ndarray | None = None

    @property
    def retained(self) -> int:
        return self.angles.shape[0]

    def count(self, A: SphereSet) -> int:
        if self.retained == 0:
            return 0
        return int(np.count_nonzero(A.contains(self.angles)))

    def mass(self, A: SphereSet) -> float:
        return self.factor * self.count(A)

    def masses(self, sets: Sequence[SphereSet]) -> np.ndarray:
        return np.array([self.mass(A) for A in sets])

    def grid_counts(self, grid: Grid) -> np.ndarray:
        ids = grid.locate(self.angles) if self.retained else np.empty(0, dtype=np.int64)
        return np.bincount(ids[ids >= 0], minlength=grid.n_cells)

    def grid_masses(self, grid: Grid) -> np.ndarray:
        return self.factor * self.grid_counts(grid)

    def total_mass(self) -> float:
        return self.factor * self.retained


def _retain(V: np.ndarray, n: int, k: int, M: float | None, labels=None):
    r = np.max(V, axis=1)
    thresh = n / k
    keep = r >= thresh
    if M is not None:
        keep &= r < M * thresh
    lab = None if labels is None else labels[keep]
    return angle(V[keep]) if keep.any() else np.empty((0, V.shape[1])), r[keep], lab


def _check_k(n: int, k: int) -> None:
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= n):
        raise ValueError(f"k must be an integer in [1, n={n}], got {k!r}")


def _check_M(M: float) -> None:
    if not M > 1:
        raise ValueError(f"truncation level M must exceed 1, got {M!r}")


def _X(data) -> np.ndarray:
    return data.X if isinstance(data, Dataset) else np.atleast_2d(np.asarray(data, dtype=float))


def standardize_training(data, model: RankModel | None = None) -> tuple[RankModel, np.ndarray]:
    X = _X(data)
    model = model if model is not None else fit_ranks(X)
    return model, model.transform(X)


def from_standardized(V: np.ndarray, k: int, M: float | None = None, kind: str | None = None) -> AngularEstimate:
    """Build an estimate from already standardised points ``V`` (rows = sample)."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    n = V.shape[0]
    _check_k(n, k)
    if M is not None:
        _check_M(M)
    ang, r, _ = _retain(V, n, k, M)
    if M is None:
        return AngularEstimate(kind or "empirical", ang, r, n, int(k), 1.0 / k)
    return AngularEstimate(kind or "truncated", ang, r, n, int(k), M / (M - 1.0) / k, M=float(M))


def fit_empirical(data, k: int) -> AngularEstimate:
    """``(1/k) #{i : ||V_hat_i|| >= n/k, angle(V_hat_i) in A}``."""
    X = _X(data)
    _check_k(X.shape[0], k)
    _, V = standardize_training(X)
    return from_standardized(V, k)


def fit_truncated(data, k: int, M: float) -> AngularEstimate:
    """``M/(M-1) (1/k) #{i : n/k <= ||V_hat_i|| < M n/k, angle(V_hat_i) in A}``."""
    _check_M(M)
    X = _X(data)
    _check_k(X.shape[0], k)
    _, V = standardize_training(X)
    return from_standardized(V, k, M)


def fit_oracle(data, k: int, margins: Margins) -> AngularEstimate:
    """Same as :func:`fit_empirical` with the exact standardisation ``v``."""
    X = _X(data)
    _check_k(X.shape[0], k)
    return from_standardized(margins.standardize(X), k, kind="oracle")


def fit_conditional(data: Dataset, k: int, sign: int, model: RankModel | None = None) -> tuple[AngularEstimate, float]:
    """Class-conditional empirical angular measure, normalised by ``k_sign = k n_sign / n``.

    The rank transform is fitted on the full unlabeled sample.
    """
    if data.y is None:
        raise ValueError("conditional estimate needs labels")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    n = data.n
    _check_k(n, k)
    n_sign = int(np.count_nonzero(data.y == sign))
    if n_sign == 0:
        raise ValueError(f"class {sign:+d} has no members")
    k_sign = k * n_sign / n
    _, V = standardize_training(data, model)
    sel = data.y == sign
    ang, r, lab = _retain(V[sel], n, k, None, data.y[sel])
    est = AngularEstimate("conditional", ang, r, n, int(k), 1.0 / k_sign, labels=lab)
    return est, k_sign


def k_sign_exact(data: Dataset, k: int, sign: int) -> Fraction:
    return Fraction(k * int(np.count_nonzero(data.y == sign)), data.n)


class PolarDraws(Protocol):
    d: int

    def draw(self, rng: np.random.Generator, m: int) -> tuple[np.ndarray, np.ndarray]: ...


def monte_carlo_counts(R: np.ndarray, Theta: np.ndarray, target) -> np.ndarray:
    """Counts of ``Theta/||Theta|| in A`` and ``R ||Theta|| >= 1`` for each set / grid cell."""
    t_norm = Theta.max(axis=1)
    keep = R * t_norm >= 1.0
    ang = Theta[keep] / t_norm[keep, None]
    if isinstance(target, Grid):
        ids = target.locate(ang)
        return np.bincount(ids[ids >= 0], minlength=target.n_cells)
    return np.array([np.count_nonzero(A.contains(ang)) for A in target], dtype=np.int64)


def fit_monte_carlo(sampler: PolarDraws, N: int, A, seed: int = 0, block: int = MC_BLOCK):
    """Unbiased Monte Carlo angular mass ``(d/N) #{Theta'/||Theta'|| in A, R' ||Theta'|| >= 1}``.

    ``A`` may be one set, a list of sets or a :class:`Grid`; the sample is
    streamed in blocks with one spawned seed per block and never stored.
    """
    if N < 1:
        raise ValueError("Monte Carlo size must be positive")
    single = isinstance(A, SphereSet)
    target = [A] if single else A
    n_targets = target.n_cells if isinstance(target, Grid) else len(target)
    counts = np.zeros(n_targets, dtype=np.int64)
    n_blocks = -(-N // block)
    for b, ss in enumerate(np.random.SeedSequence(seed).spawn(n_blocks)):
        m = min(block, N - b * block)
        R, Theta = sampler.draw(np.random.default_rng(ss), m)
        counts += monte_carlo_counts(R, Theta, target)
    masses = sampler.d * counts / N
    return float(masses[0]) if single else masses


def monte_carlo_std(mass, d: int, N: int):
    """Standard deviation of the Monte Carlo estimate, plugging in the estimate itself."""
    p = np.clip(np.asarray(mass, dtype=float) / d, 0.0, 1.0)
    return d * np.sqrt(p * (1.0 - p) / N)


def truncation_level(norms: np.ndarray, n: int, k: int, fraction: float) -> float:
    """Truncation level discarding the ``ceil(fraction * retained)`` largest retained norms.

    ``M n/k`` is placed halfway between the smallest discarded norm and the
    next smaller retained norm (or ``n/k``), so the same points are dropped
    whether the band's upper edge is strict or weak. Tied norms are dropped
    together.
    """
    if not 0 < fraction < 1:
        raise ValueError("discard fraction must be in (0, 1)")
    thresh = n / k
    r = np.sort(np.asarray(norms, dtype=float)[np.asarray(norms) >= thresh])[::-1]
    if r.size == 0:
        raise ValueError("no retained points to truncate")
    q = math.ceil(fraction * r.size)
    cut = r[q - 1]
    below = r[r < cut]
    lower = below[0] if below.size else thresh
    M = 0.5 * (cut + lower) / thresh
    if not M > 1:
        raise ValueError("cannot truncate: discarded norms sit on the threshold")
    return float(M)
