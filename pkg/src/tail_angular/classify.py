"""Binary classification in extreme regions with angular grid classifiers.

A classifier assigns a label to each cell of a regular grid on ``S_tau``;
training is per-cell majority vote over the retained extremes, which is an
exact empirical risk minimiser over all cell labelings.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .estimators import fit_conditional, fit_monte_carlo, k_sign_exact
from .geometry import Grid, Intersection, SphereSet, TauInterior, angle
from .simgen import PolarSampler
from .transform import Dataset, RankModel


@dataclass(frozen=True)
class AngularClassifier:
    grid: Grid
    cell_labels: np.ndarray
    default_label: int = 1

    def __post_init__(self):
        labels = np.asarray(self.cell_labels, dtype=int)
        if labels.shape != (self.grid.n_cells,) or not np.all(np.abs(labels) == 1):
            raise ValueError("need one label in {-1, +1} per grid cell")
        object.__setattr__(self, "cell_labels", labels)

    def predict(self, theta) -> np.ndarray:
        ids = self.grid.locate(theta, closed=True)
        return np.where(ids >= 0, self.cell_labels[np.maximum(ids, 0)], self.default_label)

    def region(self, sign: int) -> SphereSet:
        return ClassifierRegion(self, sign)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "cell_labels": self.cell_labels.tolist(),
            "default_label": int(self.default_label),
        }


class ClassifierRegion(SphereSet):
    """``{x in S : g(x) = sign}``."""

    kind = "classifier_region"

    def __init__(self, g: AngularClassifier, sign: int):
        self.g = g
        self.sign = sign

    def contains(self, theta) -> np.ndarray:
        th = np.atleast_2d(np.asarray(theta, dtype=float))
        return self.g.predict(th) == self.sign

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sign": self.sign, "classifier": self.g.to_dict()}


@dataclass(frozen=True)
class RiskReport:
    empirical_risk: float
    retained: int
    errors: int
    errors_pos: int  # Y = +1 predicted -1
    errors_neg: int  # Y = -1 predicted +1
    prefactor: float

    @property
    def by_class(self) -> tuple[float, float]:
        return self.prefactor * self.errors_pos, self.prefactor * self.errors_neg


def _band(model: RankModel, X, k: int, tau: float, M: float | None = None):
    """Angles and the selection mask ``angle in S_tau, n/k <= ||V|| (<= M n/k)``."""
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    if not 1 <= k <= model.n:
        raise ValueError("k must lie in [1, n]")
    if M is not None and not M > 1:
        raise ValueError("truncation level M must exceed 1")
    V = model.transform(X)
    r = V.max(axis=1)
    theta = angle(V)
    thresh = model.n / k
    mask = (theta.min(axis=1) > tau) & (r >= thresh)
    if M is not None:
        mask &= r <= M * thresh
    return theta, mask


def _XY(data: Dataset):
    if data.y is None:
        raise ValueError("labels required")
    return data.X, data.y


def empirical_risk(g: AngularClassifier, model: RankModel, data: Dataset, k: int, tau: float,
                   M: float | None = None) -> RiskReport:
    X, y = _XY(data)
    theta, mask = _band(model, X, k, tau, M)
    pred = g.predict(theta[mask])
    yy = y[mask]
    wrong = pred != yy
    pref = 1.0 / k if M is None else M / (k * (M - 1.0))
    e_pos = int(np.count_nonzero(wrong & (yy == 1)))
    e_neg = int(np.count_nonzero(wrong & (yy == -1)))
    return RiskReport(pref * (e_pos + e_neg), int(mask.sum()), e_pos + e_neg, e_pos, e_neg, pref)


def train_grid_majority(model: RankModel, data: Dataset, k: int, tau: float, S: int,
                        M: float | None = None) -> AngularClassifier:
    """Per-cell majority vote; ties and empty cells get the overall retained majority (+1 on a tie)."""
    X, y = _XY(data)
    grid = Grid(X.shape[1], tau, S)
    theta, mask = _band(model, X, k, tau, M)
    if not mask.any():
        raise ValueError("no retained training points")
    ids = grid.locate(theta[mask], closed=True)
    votes = np.bincount(ids, weights=y[mask], minlength=grid.n_cells)
    default = 1 if y[mask].sum() >= 0 else -1
    labels = np.where(votes > 0, 1, np.where(votes < 0, -1, default))
    return AngularClassifier(grid, labels, default)


def test_error(g: AngularClassifier, model: RankModel, test: Dataset, k: int, tau: float) -> float:
    """Error rate on test points with ``angle in S_tau`` and ``||V_hat'|| >= n/k`` (training ``n``)."""
    X, y = _XY(test)
    theta, mask = _band(model, X, k, tau)
    if not mask.any():
        return float("nan")
    return float(np.mean(g.predict(theta[mask]) != y[mask]))


test_error.__test__ = False  # not a pytest test


def risk_identity_check(g: AngularClassifier, model: RankModel, data: Dataset, k: int,
                        tau: float) -> tuple[Fraction, Fraction]:
    """Empirical risk directly and via the class-conditional angular measures, in exact arithmetic."""
    rep = empirical_risk(g, model, data, k, tau)
    lhs = Fraction(rep.errors, k)
    rhs = Fraction(0)
    interior = TauInterior(tau)
    for sign in (1, -1):
        if not np.any(data.y == sign):
            continue
        est, _ = fit_conditional(data, k, sign, model)
        wrong_region = Intersection((g.region(-sign), interior))
        k_s = k_sign_exact(data, k, sign)
        rhs += (k_s / k) * (Fraction(est.count(wrong_region)) / k_s)
    return lhs, rhs


def asymptotic_risk_mc(g: AngularClassifier, nu_plus: float, nu_minus: float, p: float, tau: float,
                       N: int, seed: int = 0) -> float:
    """Monte Carlo surrogate of ``p Phi_+(S_g^- n S_tau) + (1-p) Phi_-(S_g^+ n S_tau)``."""
    d = g.grid.d
    interior = TauInterior(tau)
    seeds = np.random.SeedSequence(seed).generate_state(2)
    m_pos = fit_monte_carlo(PolarSampler(d, nu_plus), N, Intersection((g.region(-1), interior)), seed=int(seeds[0]))
    m_neg = fit_monte_carlo(PolarSampler(d, nu_minus), N, Intersection((g.region(1), interior)), seed=int(seeds[1]))
    return p * m_pos + (1.0 - p) * m_neg
