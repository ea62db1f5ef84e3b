"""Axis-aligned boxes inside the unit cube.

Boxes are half-open, ``[lower, upper)``, except along a dimension whose upper
edge sits on the domain boundary 1.0, where the box is closed. Under this
convention every point of ``[0, 1]^d`` falls in exactly one leaf of a binary
partition, including points lying exactly on a cut.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class GeometryError(ValueError):
    """Raised for malformed boxes, dimension mismatches and out-of-box points."""


def cut_position(lower, upper, k, m):
    """Location of the ``k``-th of ``m`` equally spaced cuts of ``[lower, upper)``.

    Shared by gap scoring and splitting so both see bit-identical cut values.
    Works elementwise on numpy arrays.
    """
    return lower + (upper - lower) * k / m


@dataclass(frozen=True)
class HyperRect:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise GeometryError(f"bounds must be nonempty and equal length, got {len(lo)} and {len(hi)}")
        for j, (a, b) in enumerate(zip(lo, hi)):
            if not (0.0 <= a < b <= 1.0):
                raise GeometryError(f"invalid extent [{a}, {b}] in dimension {j}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, d: int) -> "HyperRect":
        if d < 1:
            raise GeometryError("dimension must be at least 1")
        return cls((0.0,) * d, (1.0,) * d)

    @property
    def d(self) -> int:
        return len(self.lower)

    def widths(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def volume(self) -> float:
        return volume(self)

    def contains(self, x) -> bool:
        return contains(self, x)

    def split(self, dim: int, k: int, m: int) -> tuple["HyperRect", "HyperRect"]:
        return split(self, dim, k, m)

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper)}


def volume(r: HyperRect) -> float:
    v = 1.0
    for a, b in zip(r.lower, r.upper):
        v *= b - a
    return v


def _check_dim(r: HyperRect, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != r.d:
        raise GeometryError(f"point has dimension {x.shape[-1]}, box has dimension {r.d}")
    return x


def contains_mask(lower, upper, X) -> np.ndarray:
    """Vectorised membership test.

    ``lower``/``upper`` broadcast against ``X`` on the last axis; the result
    drops that axis.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    X = np.asarray(X, dtype=float)
    inside_hi = (X < upper) | ((upper == 1.0) & (X <= 1.0))
    return np.all((X >= lower) & inside_hi, axis=-1)


def contains(r: HyperRect, x) -> bool:
    x = _check_dim(r, x)
    if x.ndim != 1:
        raise GeometryError("contains expects a single point")
    return bool(contains_mask(r.lower, r.upper, x))


def split(r: HyperRect, dim: int, k: int, m: int) -> tuple[HyperRect, HyperRect]:
    """Cut ``r`` along ``dim`` at fraction ``k/m`` of its extent.

    Returns ``(left, right)``; the cut value is shared exactly by both boxes.
    """
    if not 0 <= dim < r.d:
        raise GeometryError(f"split dimension {dim} out of range for d={r.d}")
    if m < 2 or not 1 <= k <= m - 1:
        raise GeometryError(f"split fraction {k}/{m} is not inside (0, 1)")
    cut = cut_position(r.lower[dim], r.upper[dim], k, m)
    if not r.lower[dim] < cut < r.upper[dim]:
        raise GeometryError(f"box too thin to split along dimension {dim}")
    left_hi = list(r.upper)
    left_hi[dim] = cut
    right_lo = list(r.lower)
    right_lo[dim] = cut
    return HyperRect(r.lower, tuple(left_hi)), HyperRect(tuple(right_lo), r.upper)


def scale_to_unit(r: HyperRect, P) -> np.ndarray:
    """Affinely map points of ``r`` onto the unit cube, preserving order."""
    P = np.atleast_2d(_check_dim(r, P))
    if P.size and not np.all(_on_closure(r, P)):
        raise GeometryError("point outside the box being rescaled")
    lo = np.asarray(r.lower)
    return np.clip((P - lo) / r.widths(), 0.0, 1.0)


def _on_closure(r: HyperRect, P) -> np.ndarray:
    return np.all((P >= np.asarray(r.lower)) & (P <= np.asarray(r.upper)), axis=-1)


def unscale_from_unit(r: HyperRect, U) -> np.ndarray:
    return np.asarray(r.lower) + np.asarray(U, dtype=float) * r.widths()


def are_neighbors(a: HyperRect, b: HyperRect) -> bool:
    """True when ``a`` and ``b`` share a (d-1)-face of positive measure."""
    if a.d != b.d:
        raise GeometryError("boxes of different dimension")
    touching = 0
    for j in range(a.d):
        if a.upper[j] == b.lower[j] or b.upper[j] == a.lower[j]:
            touching += 1
        elif min(a.upper[j], b.upper[j]) - max(a.lower[j], b.lower[j]) <= 0.0:
            return False
    return touching == 1


def adjacency_lists(lowers: np.ndarray, uppers: np.ndarray) -> list[np.ndarray]:
    """Face-adjacency for a tiling given as stacked bounds, by pairwise tests.

    Same rule as :func:`are_neighbors`, vectorised one box at a time.
    """
    lowers = np.asarray(lowers, dtype=float)
    uppers = np.asarray(uppers, dtype=float)
    n = lowers.shape[0]
    neighbors: list[list[int]] = [[] for _ in range(n)]
    for i in range(n - 1):
        lo, hi = lowers[i + 1 :], uppers[i + 1 :]
        touch = (uppers[i] == lo) | (hi == lowers[i])
        overlap = (np.minimum(uppers[i], hi) - np.maximum(lowers[i], lo)) > 0.0
        ok = (touch.sum(axis=1) == 1) & np.all(touch | overlap, axis=1)
        for j in np.flatnonzero(ok) + i + 1:
            neighbors[i].append(int(j))
            neighbors[j].append(i)
    return [np.asarray(sorted(v), dtype=np.intp) for v in neighbors]


def assign(leaves: Sequence[HyperRect], x, check: bool = False) -> int:
    """Index of the leaf containing ``x``.

    With ``check=True`` the leaves are first verified to tile the cube
    (volumes sum to one and exactly one leaf claims ``x``).
    """
    if not leaves:
        raise GeometryError("no leaves to assign into")
    lowers = np.array([r.lower for r in leaves])
    uppers = np.array([r.upper for r in leaves])
    hits = np.flatnonzero(contains_mask(lowers, uppers, _check_dim(leaves[0], x)))
    if check:
        total = float(np.sum(np.prod(uppers - lowers, axis=1)))
        if abs(total - 1.0) > 1e-12 or hits.size != 1:
            raise GeometryError("leaves do not tile the unit cube")
    if hits.size == 0:
        raise GeometryError("point not covered by any leaf")
    return int(hits[0])


def assign_many(lowers: np.ndarray, uppers: np.ndarray, X: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Leaf index for each row of ``X``; -1 where no leaf contains the row."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.full(X.shape[0], -1, dtype=np.intp)
    # rows per chunk chosen so the boolean cube stays a few tens of MB
    step = max(1, chunk * 64 // max(1, lowers.shape[0]))
    for s in range(0, X.shape[0], step):
        block = X[s : s + step, None, :]
        mask = contains_mask(lowers[None], uppers[None], block)
        found = mask.any(axis=1)
        out[s : s + step] = np.where(found, mask.argmax(axis=1), -1)
    return out
