"""Reference data with a known angular measure: ``X = R * Theta``.

``R`` is unit-Pareto and ``Theta`` symmetric Dirichlet on the unit simplex,
independent of ``R``. For this model the exact margin standardisation is
``v(x) = d x`` on ``[1, inf)^d`` and ``Phi(A) = d E[||Theta|| 1{Theta/||Theta|| in A}]``.

Randomness comes from ``numpy.random.SeedSequence``: each block of rows gets
its own spawned child seed, so output does not depend on how blocks are
scheduled.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .geometry import EmptySet, FullSphere, GridCell, SphereSet, Union, angle
from .transform import Dataset, Margins

BLOCK_ROWS = 1 << 16


@dataclass(frozen=True)
class SimSpec:
    """Simulation settings.

    ``nu`` is the Dirichlet concentration; in labeled mode it is the
    concentration of the positive class and ``nu_minus`` that of the negative
    class. Class sizes are fixed (``round(p * n)`` positives), not drawn.
    """

    d: int
    nu: float
    n: int
    seed: int = 0
    labeled: bool = False
    nu_minus: float | None = None
    p: float = 0.5

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("dimension must be at least 2")
        if self.nu <= 0 or (self.nu_minus is not None and self.nu_minus <= 0):
            raise ValueError("Dirichlet concentration must be positive")
        if self.n < 1:
            raise ValueError("sample size must be positive")
        if self.labeled:
            n_plus = self.n_plus
            if n_plus < 1 or self.n - n_plus < 1:
                raise ValueError("both classes need at least one member")

    @property
    def n_plus(self) -> int:
        return int(round(self.p * self.n))

    @property
    def nu_neg(self) -> float:
        return self.nu if self.nu_minus is None else self.nu_minus

    def to_dict(self) -> dict:
        return asdict(self)


def _draw_theta(rng: np.random.Generator, shape: np.ndarray | float, m: int, d: int) -> np.ndarray:
    shape = np.broadcast_to(np.asarray(shape, dtype=float).reshape(-1, 1), (m, d))
    g = rng.standard_gamma(shape)
    return g / g.sum(axis=1, keepdims=True)


def _draw_radius(rng: np.random.Generator, m: int) -> np.ndarray:
    # 1 - U lies in (0, 1], so R = 1 / (1 - U) is finite and >= 1
    return 1.0 / (1.0 - rng.random(m))


def sample_polar(spec: SimSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Draw ``(R, Theta, labels)`` for ``spec``."""
    n, d = spec.n, spec.d
    labels = None
    shapes = np.full(n, spec.nu)
    root = np.random.SeedSequence(spec.seed)
    label_seed, data_seed = root.spawn(2)
    if spec.labeled:
        labels = np.concatenate([np.ones(spec.n_plus, dtype=int), -np.ones(n - spec.n_plus, dtype=int)])
        labels = np.random.default_rng(label_seed).permutation(labels)
        shapes = np.where(labels == 1, spec.nu, spec.nu_neg)
    R = np.empty(n)
    Theta = np.empty((n, d))
    for b, ss in enumerate(data_seed.spawn(max(1, -(-n // BLOCK_ROWS)))):
        lo, hi = b * BLOCK_ROWS, min(n, (b + 1) * BLOCK_ROWS)
        rng = np.random.default_rng(ss)
        R[lo:hi] = _draw_radius(rng, hi - lo)
        Theta[lo:hi] = _draw_theta(rng, shapes[lo:hi], hi - lo, d)
    return R, Theta, labels


def sample(spec: SimSpec) -> Dataset:
    R, Theta, labels = sample_polar(spec)
    return Dataset(R[:, None] * Theta, labels)


class PolarSampler:
    """Draws ``(R, Theta)`` blocks; the sampler used by Monte Carlo truth."""

    def __init__(self, d: int, nu: float):
        if nu <= 0:
            raise ValueError("Dirichlet concentration must be positive")
        self.d = d
        self.nu = float(nu)

    def draw(self, rng: np.random.Generator, m: int) -> tuple[np.ndarray, np.ndarray]:
        return _draw_radius(rng, m), _draw_theta(rng, self.nu, m, self.d)


def _tail_expectation(x: np.ndarray, d: int, nu: float) -> np.ndarray:
    """``E min(1, Theta_j / x)`` for ``0 < x``; ``Theta_j ~ Beta(nu, (d-1) nu)``."""
    a, b = nu, (d - 1) * nu
    xc = np.minimum(x, 1.0)
    return (1.0 - special.betainc(a, b, xc)) + (a / (a + b)) * special.betainc(a + 1, b, xc) / x


class SimMargins(Margins):
    """Exact margins of the simulation model, optionally a two-class mixture.

    ``components`` is a list of ``(weight, nu)`` pairs.
    """

    def __init__(self, d: int, components: Sequence[tuple[float, float]]):
        self.d = d
        self.components = [(float(w), float(nu)) for w, nu in components]
        if not math.isclose(sum(w for w, _ in self.components), 1.0):
            raise ValueError("mixture weights must sum to one")

    @classmethod
    def for_spec(cls, spec: SimSpec) -> SimMargins:
        if spec.labeled:
            p = spec.n_plus / spec.n
            return cls(spec.d, [(p, spec.nu), (1.0 - p, spec.nu_neg)])
        return cls(spec.d, [(1.0, spec.nu)])

    def survival(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.ones_like(X)
        pos = X > 0
        xs = X[pos]
        out[pos] = sum(w * _tail_expectation(xs, self.d, nu) for w, nu in self.components)
        return out

    def standardize(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.where(X >= 1.0, self.d * X, 1.0 / self.survival(X))


def oracle_margin_transform(x, d: int, nu: float | None = None) -> np.ndarray:
    """``d * x`` on ``[1, inf)^d``; elsewhere needs ``nu`` for the exact tail expectation."""
    x = np.asarray(x, dtype=float)
    if np.all(x >= 1.0):
        return d * x
    if nu is None:
        raise ValueError("coordinates below 1 need the Dirichlet concentration")
    return SimMargins(d, [(1.0, nu)]).standardize(x)


def tail_expectation_quad(x: float, d: int, nu: float) -> float:
    """Quadrature for ``E min(1, Theta_j / x)``; cross-check of the closed form."""
    a, b = nu, (d - 1) * nu
    pdf = lambda t: math.exp((a - 1) * math.log(t) + (b - 1) * math.log1p(-t) - special.betaln(a, b))
    pts = [x] if 0 < x < 1 else None
    val, _ = integrate.quad(lambda t: min(1.0, t / x) * pdf(t), 0.0, 1.0, points=pts, limit=200)
    return val


def _face_interval_mass(face: int, lo: float, hi: float, nu: float) -> float:
    """``2 E[max(U, 1-U) 1{angle on face, free coordinate in (lo, hi)}]`` for d = 2."""
    I = special.betainc
    if face == 0:
        # angle (1, (1-U)/U) with U >= 1/2
        a, b = 1.0 / (1.0 + hi), 1.0 / (1.0 + lo)
        return float(I(nu + 1, nu, b) - I(nu + 1, nu, a))
    # angle (U/(1-U), 1) with U <= 1/2
    a, b = lo / (1.0 + lo), hi / (1.0 + hi)
    first = I(nu, nu, b) - I(nu, nu, a)
    second = 0.5 * (I(nu + 1, nu, b) - I(nu + 1, nu, a))
    return float(2.0 * (first - second))


def analytic_mass(A: SphereSet, d: int, nu: float) -> float:
    """``Phi(A) = d E[||Theta|| 1{Theta/||Theta|| in A}]`` computed without sampling.

    Only ``d = 2`` is supported: grid cells and their unions use incomplete
    beta functions, other sets a fine composite Gauss-Legendre rule.
    """
    if d != 2:
        raise NotImplementedError("closed-form angular mass is only available for d = 2")
    if isinstance(A, EmptySet):
        return 0.0
    if isinstance(A, FullSphere):
        return _face_interval_mass(0, 0.0, 1.0, nu) + _face_interval_mass(1, 0.0, 1.0, nu)
    if isinstance(A, GridCell):
        lo, hi = A.interval(A.index[0])
        return _face_interval_mass(A.face, lo, hi, nu)
    if isinstance(A, Union) and all(isinstance(m, GridCell) for m in A.members) and len(set(A.members)) == len(A.members):
        return math.fsum(analytic_mass(m, d, nu) for m in A.members)
    nodes, weights = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0.0, 1.0, 40001)
    mid, half = (edges[1:] + edges[:-1]) / 2, (edges[1:] - edges[:-1]) / 2
    u = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    theta = angle(np.column_stack([u, 1.0 - u]))
    dens = np.exp((nu - 1) * (np.log(u) + np.log1p(-u)) - special.betaln(nu, nu))
    integrand = 2.0 * np.maximum(u, 1.0 - u) * dens * A.contains(theta)
    return float(np.sum(w * integrand))


def true_angular_mass(A: SphereSet | Sequence[SphereSet], spec: SimSpec, N: int, seed: int) -> np.ndarray | float:
    """Monte Carlo truth for ``A`` (or a list of sets) with ``N`` fresh draws."""
    from .estimators import fit_monte_carlo

    return fit_monte_carlo(PolarSampler(spec.d, spec.nu), N, A, seed=seed)
