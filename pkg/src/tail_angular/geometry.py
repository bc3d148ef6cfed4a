"""Max-norm geometry of the punctured orthant.

Angles live on the max-norm unit sphere ``S = {x >= 0 : max_j x_j = 1}``.
Subsets of the sphere are immutable :class:`SphereSet` values with a
vectorised membership predicate ``contains(theta)`` taking an ``(m, d)``
array of angles. Every set also knows how to build its inner and outer
epsilon-hulls, which frame the set against sup-norm perturbations of size
epsilon.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import qmc

HULL_MODES = ("standard", "tight")
VOLUME_QMC_LOG2 = 17  # 131072 scrambled Sobol points per face
VOLUME_QMC_SEED = 20240601


class GeometryError(ValueError):
    """Raised on invalid geometric input, e.g. the zero vector."""


def _as_angles(theta) -> np.ndarray:
    arr = np.asarray(theta, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


def norm(x) -> np.ndarray | float:
    """Max-norm along the last axis."""
    arr = np.asarray(x, dtype=float)
    return np.max(np.abs(arr), axis=-1)


def angle(x) -> np.ndarray:
    """Return ``x / ||x||_inf``; works on a single point or row-wise on a matrix."""
    arr = np.asarray(x, dtype=float)
    r = np.max(np.abs(arr), axis=-1, keepdims=True)
    if np.any(r <= 0):
        raise GeometryError("angle of the zero vector is undefined")
    return arr / r


def _shift(eps: float, d: int, mode: str) -> float:
    if mode == "standard":
        return math.sqrt(d) * eps
    if mode == "tight":
        return eps
    raise GeometryError(f"unknown hull mode {mode!r}; expected one of {HULL_MODES}")


def _check_side(side: str) -> None:
    if side not in ("inner", "outer"):
        raise GeometryError(f"hull side must be 'inner' or 'outer', got {side!r}")


class SphereSet:
    """Base class for Borel subsets of the max-norm sphere."""

    kind: str = ""

    def contains(self, theta) -> np.ndarray:
        raise NotImplementedError

    def hull(self, eps: float, side: str, mode: str = "standard") -> SphereSet:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def contains_point(self, theta) -> bool:
        return bool(self.contains(theta)[0])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class EmptySet(SphereSet):
    kind = "empty"

    def contains(self, theta) -> np.ndarray:
        return np.zeros(_as_angles(theta).shape[0], dtype=bool)

    def hull(self, eps, side, mode="standard"):
        return self

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class FullSphere(SphereSet):
    kind = "full"

    def contains(self, theta) -> np.ndarray:
        return np.ones(_as_angles(theta).shape[0], dtype=bool)

    def hull(self, eps, side, mode="standard"):
        _check_side(side)
        return self

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class TauInterior(SphereSet):
    """``{x in S : min_j x_j > tau}``; a negative ``tau`` means the whole sphere."""

    tau: float
    kind = "tau_interior"

    def contains(self, theta) -> np.ndarray:
        th = _as_angles(theta)
        if self.tau < 0:
            return np.ones(th.shape[0], dtype=bool)
        return th.min(axis=1) > self.tau

    def hull(self, eps, side, mode="standard"):
        _check_side(side)
        if side == "inner":
            if self.tau + eps >= 1.0:
                return EmptySet()
            return TauInterior(self.tau + eps)
        return TauInterior(self.tau - eps)

    def to_dict(self):
        return {"kind": self.kind, "tau": self.tau}


@dataclass(frozen=True)
class HalfSpaceCap(SphereSet):
    """``{x in S : <a, x> <= beta, min_j x_j > tau}`` with ``||a||_2 = 1``."""

    a: tuple
    beta: float
    tau: float
    kind = "half_space"

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        if abs(math.fsum(v * v for v in a) - 1.0) > 1e-9:
            raise GeometryError("half-space normal must have unit Euclidean norm")
        object.__setattr__(self, "a", a)

    def contains(self, theta) -> np.ndarray:
        th = _as_angles(theta)
        inside = th @ np.asarray(self.a) <= self.beta
        if self.tau >= 0:
            inside &= th.min(axis=1) > self.tau
        return inside

    def hull(self, eps, side, mode="standard"):
        _check_side(side)
        d = len(self.a)
        if mode == "standard":
            s = math.sqrt(d) * eps
        elif mode == "tight":
            # <a, y - x> <= ||a||_1 ||y - x||_inf and ||a||_1 <= sqrt(d)
            s = math.fsum(abs(v) for v in self.a) * eps
        else:
            raise GeometryError(f"unknown hull mode {mode!r}")
        if side == "inner":
            if self.tau + eps >= 1.0:
                return EmptySet()
            return HalfSpaceCap(self.a, self.beta - s, self.tau + eps)
        return HalfSpaceCap(self.a, self.beta + s, self.tau - eps)

    def to_dict(self):
        return {"kind": self.kind, "a": list(self.a), "beta": self.beta, "tau": self.tau}


@dataclass(frozen=True)
class Box(SphereSet):
    """Axis-aligned region ``lower_j < x_j < upper_j`` on the sphere.

    When ``face`` is set, that coordinate is constrained by ``x_face >= face_min``
    instead of by its interval. Hulls of grid cells are boxes.
    """

    lower: tuple
    upper: tuple
    face: int | None = None
    face_min: float = 1.0
    kind = "box"

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))

    @property
    def d(self) -> int:
        return len(self.lower)

    def _free(self) -> list[int]:
        return [j for j in range(self.d) if j != self.face]

    def is_empty(self) -> bool:
        if any(self.lower[j] >= self.upper[j] for j in self._free()):
            return True
        return self.face is not None and self.face_min > 1.0

    def contains(self, theta) -> np.ndarray:
        th = _as_angles(theta)
        free = self._free()
        lo = np.asarray(self.lower)[free]
        hi = np.asarray(self.upper)[free]
        sub = th[:, free]
        inside = np.all((sub > lo) & (sub < hi), axis=1)
        if self.face is not None:
            inside &= th[:, self.face] >= self.face_min
        return inside

    def hull(self, eps, side, mode="standard"):
        _check_side(side)
        s = _shift(eps, self.d, mode)
        free = self._free()
        lower = list(self.lower)
        upper = list(self.upper)
        face_min = self.face_min
        if side == "outer":
            for j in free:
                lower[j] -= s
                upper[j] += s
            face_min -= s
        else:
            for j in free:
                lower[j] += s
                upper[j] -= s
            if self.face is not None:
                if face_min + s <= 1.0:
                    face_min += s
                else:
                    # Pin x_face = 1 and keep the other coordinates 2*eps below
                    # it so every eps-perturbation keeps its argmax on the face.
                    face_min = 1.0
                    for j in free:
                        upper[j] = min(upper[j], 1.0 - 2.0 * eps)
        out = Box(tuple(lower), tuple(upper), self.face, face_min)
        return EmptySet() if out.is_empty() else out

    def to_dict(self):
        return {
            "kind": self.kind,
            "lower": [_json_float(v) for v in self.lower],
            "upper": [_json_float(v) for v in self.upper],
            "face": self.face,
            "face_min": self.face_min,
        }


def _json_float(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _parse_float(v) -> float:
    # float() accepts "inf" and "-inf"
    return float(v)


@dataclass(frozen=True)
class GridCell(SphereSet):
    """One cell of the regular grid on ``S_tau``.

    Coordinate ``face`` equals 1; every other coordinate ``j`` lies in the open
    interval ``(tau + i_j h, tau + (i_j + 1) h)`` with ``h = (1 - tau) / bins``.
    ``face`` is 0-based and ``index`` lists ``i_j`` for the non-face coordinates
    in increasing ``j``.
    """

    face: int
    index: tuple
    tau: float
    bins: int
    kind = "grid_cell"

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))
        if not 0 <= self.tau < 1:
            raise GeometryError("grid cells need 0 <= tau < 1")
        if any(not 0 <= i < self.bins for i in self.index):
            raise GeometryError("grid cell index out of range")
        if not 0 <= self.face <= len(self.index):
            raise GeometryError("grid cell face out of range")

    @classmethod
    def from_side(cls, face: int, index: Sequence[int], tau: float, side: float) -> GridCell:
        bins = int(round((1.0 - tau) / side))
        if not math.isclose(bins * side, 1.0 - tau, rel_tol=1e-9):
            raise GeometryError("side length must divide 1 - tau")
        return cls(face, tuple(index), tau, bins)

    @property
    def d(self) -> int:
        return len(self.index) + 1

    @property
    def side(self) -> float:
        return (1.0 - self.tau) / self.bins

    @property
    def volume(self) -> float:
        return self.side ** (self.d - 1)

    def interval(self, i: int) -> tuple[float, float]:
        return _edge(self.tau, self.bins, i), _edge(self.tau, self.bins, i + 1)

    def to_box(self) -> Box:
        lower, upper = [-math.inf] * self.d, [math.inf] * self.d
        free = [j for j in range(self.d) if j != self.face]
        for j, i in zip(free, self.index):
            lower[j], upper[j] = self.interval(i)
        return Box(tuple(lower), tuple(upper), self.face, 1.0)

    def contains(self, theta) -> np.ndarray:
        return self.to_box().contains(theta)

    def hull(self, eps, side, mode="standard"):
        return self.to_box().hull(eps, side, mode)

    def to_dict(self):
        return {
            "kind": self.kind,
            "face": self.face,
            "index": list(self.index),
            "tau": self.tau,
            "bins": self.bins,
        }


def _edge(tau: float, bins: int, i: int) -> float:
    # The top edge is exactly 1 so points with a tied maximum fall in no cell.
    return 1.0 if i >= bins else tau + i * ((1.0 - tau) / bins)


@dataclass(frozen=True)
class Intersection(SphereSet):
    members: tuple
    kind = "intersection"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))

    def contains(self, theta) -> np.ndarray:
        th = _as_angles(theta)
        out = np.ones(th.shape[0], dtype=bool)
        for m in self.members:
            out &= m.contains(th)
        return out

    def hull(self, eps, side, mode="standard"):
        hulls = [m.hull(eps, side, mode) for m in self.members]
        if any(isinstance(h, EmptySet) for h in hulls):
            return EmptySet()
        return Intersection(tuple(hulls))

    def to_dict(self):
        return {"kind": self.kind, "members": [m.to_dict() for m in self.members]}


@dataclass(frozen=True)
class Union(SphereSet):
    members: tuple
    kind = "union"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))

    def contains(self, theta) -> np.ndarray:
        th = _as_angles(theta)
        out = np.zeros(th.shape[0], dtype=bool)
        for m in self.members:
            out |= m.contains(th)
        return out

    def hull(self, eps, side, mode="standard"):
        hulls = [m.hull(eps, side, mode) for m in self.members]
        hulls = [h for h in hulls if not isinstance(h, EmptySet)]
        if not hulls:
            return EmptySet()
        return Union(tuple(hulls))

    def to_dict(self):
        return {"kind": self.kind, "members": [m.to_dict() for m in self.members]}


def hull(A: SphereSet, eps: float, side: str, mode: str = "standard") -> SphereSet:
    """Inner (shrunk) or outer (grown) eps-hull of ``A``."""
    if eps <= 0:
        raise GeometryError("hull radius must be positive")
    return A.hull(eps, side, mode)


def cone_contains(A: SphereSet, p, M: float = math.inf) -> bool:
    """Whether ``p`` lies in the cone ``{1 <= ||x|| < M, angle(x) in A}``."""
    if not M > 1:
        raise GeometryError("truncation level M must exceed 1")
    p = np.asarray(p, dtype=float)
    r = float(norm(p))
    if r < 1.0 or r >= M:
        return False
    return A.contains_point(angle(p))


@dataclass(frozen=True)
class FramingSpec:
    """Radial window ``1/r <= ||x|| < 1/s`` with angular hull tolerance ``h ||x||``."""

    r: float
    s: float = 0.0
    h: float = 1e-12
    side: str = "inner"

    def __post_init__(self):
        if not (self.r > 0 and 0 <= self.s < self.r and self.h > 0):
            raise GeometryError("framing spec needs r > 0, 0 <= s < r and h > 0")
        _check_side(self.side)


def framing_contains(A: SphereSet, spec: FramingSpec, p, mode: str = "standard") -> bool:
    p = np.asarray(p, dtype=float)
    r = float(norm(p))
    if r < 1.0 / spec.r:
        return False
    if spec.s > 0 and r >= 1.0 / spec.s:
        return False
    return hull(A, spec.h * r, spec.side, mode).contains_point(angle(p))


class Grid:
    """Regular grid class on ``S_tau``: ``d * bins**(d-1)`` cells.

    Cell ids are face-major, then the row-major flattening of the index tuple.
    """

    def __init__(self, d: int, tau: float, bins: int):
        if d < 2 or bins < 1 or not 0 <= tau < 1:
            raise GeometryError("grid needs d >= 2, bins >= 1 and 0 <= tau < 1")
        self.d = d
        self.tau = float(tau)
        self.bins = int(bins)
        self.edges = np.array([_edge(self.tau, self.bins, i) for i in range(self.bins + 1)])

    @property
    def side(self) -> float:
        return (1.0 - self.tau) / self.bins

    @property
    def n_cells(self) -> int:
        return self.d * self.bins ** (self.d - 1)

    @property
    def cell_volume(self) -> float:
        return self.side ** (self.d - 1)

    def cell(self, cell_id: int) -> GridCell:
        per_face = self.bins ** (self.d - 1)
        face, rest = divmod(int(cell_id), per_face)
        index = np.unravel_index(rest, (self.bins,) * (self.d - 1))
        return GridCell(face, tuple(int(i) for i in index), self.tau, self.bins)

    @property
    def cells(self) -> list[GridCell]:
        return [self.cell(i) for i in range(self.n_cells)]

    def locate(self, theta, closed: bool = False) -> np.ndarray:
        """Cell id of each angle, ``-1`` when outside every cell.

        With ``closed=False`` membership matches :meth:`GridCell.contains`
        exactly (open intervals, tied maxima belong to no cell). With
        ``closed=True`` every angle in ``S_tau`` gets a cell: the face is the
        lowest argmax and interval boundaries go to the upper cell.
        """
        th = _as_angles(theta)
        m, d = th.shape
        if d != self.d:
            raise GeometryError(f"expected angles of dimension {self.d}, got {d}")
        face = np.argmax(th, axis=1)
        ok = th[np.arange(m), face] >= 1.0
        rest = np.zeros(m, dtype=np.int64)
        mask = np.ones((m, d), dtype=bool)
        mask[np.arange(m), face] = False
        others = th[mask].reshape(m, d - 1)
        if closed:
            idx = np.searchsorted(self.edges, others, side="right") - 1
            idx = np.where(others >= 1.0, self.bins - 1, idx)
            ok &= np.all(others > self.tau, axis=1)
        else:
            idx = np.searchsorted(self.edges, others, side="left") - 1
            valid = (idx >= 0) & (idx < self.bins)
            upper = self.edges[np.clip(idx + 1, 0, self.bins)]
            valid &= others < upper
            ok &= np.all(valid, axis=1)
        idx = np.clip(idx, 0, self.bins - 1)
        for col in range(d - 1):
            rest = rest * self.bins + idx[:, col]
        cell_id = face * self.bins ** (d - 1) + rest
        return np.where(ok, cell_id, -1)

    def union(self, cell_ids: Iterable[int]) -> SphereSet:
        ids = sorted(set(int(i) for i in cell_ids))
        if not ids:
            return EmptySet()
        return Union(tuple(self.cell(i) for i in ids))

    def to_dict(self) -> dict:
        return {"d": self.d, "tau": self.tau, "bins": self.bins}


def grid_class(d: int, tau: float, S: int) -> list[GridCell]:
    return Grid(d, tau, S).cells


def hull_gap_constant(d: int, mode: str = "standard") -> float:
    """Upper bound ``c`` with ``Leb(A_+(eps) minus A_-(eps)) <= c eps`` for grid cells.

    Valid whenever the grown cell side ``h + 2 s`` stays below 1, where ``s`` is
    the hull shift (``sqrt(d) eps`` in standard mode, ``eps`` in tight mode).
    """
    m = _shift(1.0, d, mode)
    # face strip: (d-1) coordinates each lose at most 4s + 2eps of width;
    # spill onto each of the d-1 other faces has measure at most s.
    return (d - 1) * (4.0 * m + 2.0) + (d - 1) * m


def face_points(d: int, log2_n: int = VOLUME_QMC_LOG2, seed: int = VOLUME_QMC_SEED) -> list[np.ndarray]:
    """Scrambled Sobol points on each of the ``d`` faces of the sphere."""
    u = qmc.Sobol(d - 1, scramble=True, seed=seed).random_base2(log2_n)
    faces = []
    for f in range(d):
        th = np.insert(u, f, 1.0, axis=1)
        faces.append(th)
    return faces


def volume(A: SphereSet, d: int, log2_n: int = VOLUME_QMC_LOG2, seed: int = VOLUME_QMC_SEED) -> float:
    """Face-wise Lebesgue measure of ``A``.

    Exact for grid cells and unions of distinct cells from one grid; otherwise a
    scrambled-Sobol estimate with a fixed seed.
    """
    if isinstance(A, EmptySet):
        return 0.0
    if isinstance(A, FullSphere):
        return float(d)
    if isinstance(A, GridCell):
        return A.volume
    if isinstance(A, Union) and all(isinstance(m, GridCell) for m in A.members):
        if len(set(A.members)) == len(A.members) and len({(m.tau, m.bins) for m in A.members}) == 1:
            return math.fsum(m.volume for m in A.members)
    return float(sum(A.contains(th).mean() for th in face_points(d, log2_n, seed)))


def from_dict(obj: dict) -> SphereSet:
    kind = obj["kind"]
    if kind == "grid_cell":
        if "bins" in obj:
            return GridCell(int(obj["face"]), tuple(obj["index"]), float(obj["tau"]), int(obj["bins"]))
        return GridCell.from_side(int(obj["face"]), obj["index"], float(obj["tau"]), float(obj["side"]))
    if kind == "half_space":
        return HalfSpaceCap(tuple(obj["a"]), float(obj["beta"]), float(obj["tau"]))
    if kind == "intersection":
        return Intersection(tuple(from_dict(m) for m in obj["members"]))
    if kind == "union":
        return Union(tuple(from_dict(m) for m in obj["members"]))
    if kind == "full":
        return FullSphere()
    if kind == "tau_interior":
        return TauInterior(float(obj["tau"]))
    if kind == "empty":
        return EmptySet()
    if kind == "box":
        return Box(
            tuple(_parse_float(v) for v in obj["lower"]),
            tuple(_parse_float(v) for v in obj["upper"]),
            obj.get("face"),
            float(obj.get("face_min", 1.0)),
        )
    raise GeometryError(f"unknown sphere set kind {kind!r}")


def from_json(text: str) -> SphereSet:
    return from_dict(json.loads(text))


def dump_class(sets: Sequence[SphereSet]) -> str:
    return json.dumps([s.to_dict() for s in sets])


def load_class(text: str) -> list[SphereSet]:
    return [from_dict(o) for o in json.loads(text)]
