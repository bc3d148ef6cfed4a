"""Closed-form concentration bounds for the (truncated) empirical angular measure.

The universal constant ``C`` of the underlying VC inequality is not known
explicitly, so totals are bound *shapes* unless the caller supplies a
certified ``C``. Logarithms are natural. Side conditions are reported, never
enforced.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class BoundInputs:
    n: int
    k: int
    d: int
    delta: float
    rho: float
    tau: float
    c: float = 1.0
    C: float = 1.0
    vc_dim: float = 1.0
    M: float | None = None
    bias: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.k < 1 or self.d < 2:
            raise ValueError("need n >= 1, k >= 1 and d >= 2")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not (self.rho > 0 and self.c > 0 and self.C >= 0 and self.vc_dim >= 0 and self.bias >= 0):
            raise ValueError("rho, c must be positive; C, vc_dim, bias non-negative")
        if self.M is not None and not self.M > 1:
            raise ValueError("truncation level M must exceed 1")

    @property
    def log_term(self) -> float:
        return math.log((self.d + 1) / self.delta)


@dataclass(frozen=True)
class BoundReport:
    delta_term: float
    error_term: float
    gap_term: float
    bias_term: float
    total: float
    r_minus: float
    r_plus: float
    side_conditions: dict = field(default_factory=dict)
    truncated: bool = False

    @property
    def violations(self) -> list[str]:
        return [name for name, ok in self.side_conditions.items() if not ok]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["violations"] = self.violations
        out["kind"] = "bound shape"
        return out


def compute_delta(inp: BoundInputs) -> float:
    """``C sqrt(log((d+1)/delta) / (rho k)) + C log((d+1)/delta) / k``."""
    L = inp.log_term
    return inp.C * math.sqrt(L / (inp.rho * inp.k)) + inp.C * L / inp.k


def side_conditions(inp: BoundInputs, Delta: float | None = None) -> dict[str, bool]:
    D = compute_delta(inp) if Delta is None else Delta
    n, k, c, tau, rho = inp.n, inp.k, inp.c, inp.tau, inp.rho
    lo = max(3.0, 6.0 * c)
    return {
        "n > (3 v 6c)/tau": n > lo / tau,
        "k > 3 v 6c": k > lo,
        "k < tau n": k < tau * n,
        "k/n < rho < tau": k / n < rho < tau,
        "Delta >= 2/k": D >= 2.0 / k,
        "Delta < (1 - 1/k) ^ 1/(3c)": D < min(1.0 - 1.0 / k, 1.0 / (3.0 * c)),
        "rho/(1 - Delta rho) <= tau": (1.0 - D * rho) > 0 and rho / (1.0 - D * rho) <= tau,
    }


def _error(inp: BoundInputs, D: float) -> float:
    L = inp.log_term
    return inp.C * (math.sqrt(inp.d * (1.0 + D) * inp.vc_dim * L / inp.k) + L / inp.k)


def framing_gap(d: int, c: float, D: float) -> float:
    """``(2d + 3c (log(d/(3c)) - log D + 1)) D``; zero when ``D = 0``."""
    if D <= 0:
        return 0.0
    return (2 * d + 3 * c * (math.log(d / (3 * c)) - math.log(D) + 1.0)) * D


def bound_untruncated(inp: BoundInputs) -> BoundReport:
    D = compute_delta(inp)
    err = _error(inp, D)
    gap = framing_gap(inp.d, inp.c, D)
    r0 = 1.0 + 1.0 / inp.n - 1.0 / inp.k
    return BoundReport(
        delta_term=D,
        error_term=err,
        gap_term=gap,
        bias_term=inp.bias,
        total=inp.bias + err + gap,
        r_minus=r0 - D,
        r_plus=r0 + D,
        side_conditions=side_conditions(inp, D),
    )


def framing_gap_truncated(d: int, c: float, D: float, M: float) -> float:
    """Band-truncated gap before the ``M/(M-1)`` rescaling."""
    if D <= 0:
        return 0.0
    return 4 * d * D + 3 * c * D * math.log(min(M, d / (3 * c * D))) + max(3 * c * D - d / M, 0.0)


def bound_truncated(inp: BoundInputs) -> BoundReport:
    if inp.M is None:
        raise ValueError("truncated bound needs M")
    M = inp.M
    scale = M / (M - 1.0)
    D = compute_delta(inp)
    err = scale * _error(inp, D)
    gap = scale * framing_gap_truncated(inp.d, inp.c, D, M)
    bias = scale * inp.bias
    r0 = 1.0 + 1.0 / inp.n - 1.0 / inp.k
    return BoundReport(
        delta_term=D,
        error_term=err,
        gap_term=gap,
        bias_term=bias,
        total=bias + err + gap,
        r_minus=r0 - D,
        r_plus=r0 + D,
        side_conditions=side_conditions(inp, D),
        truncated=True,
    )


def bound_classification(inp: BoundInputs) -> tuple[float, float]:
    """Return ``(2 (error + bias + gap), confidence)`` with confidence ``1 - delta (d+2)/(d+1)``."""
    rep = bound_untruncated(inp)
    return 2.0 * rep.total, 1.0 - inp.delta * (inp.d + 2) / (inp.d + 1)


def delta_for_confidence(confidence: float, d: int) -> float:
    """Solve ``delta (d+2)/(d+1) = 1 - confidence`` for the classification bound."""
    return (1.0 - confidence) * (d + 1) / (d + 2)


def vc_dim_heuristic(d: int, n_constraints: int = 1) -> int:
    """``(d + 2)`` per linear constraint on ``(radius, angle)``.

    Half-spaces in ``d + 1`` variables have VC dimension ``d + 2``; summing
    over constraints is a rough upper-bound heuristic, not a theorem.
    """
    return n_constraints * (d + 2)
