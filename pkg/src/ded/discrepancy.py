"""Star discrepancy of point sets in the unit cube.

The local discrepancy of an anchored box ``[0, a)`` is the gap between the
fraction of points it holds and its volume; the star discrepancy is the sup
of its absolute value over all anchors. This module provides the exact 1-D
formula, an exact grid enumeration for small sets, the per-coordinate lower
bound, and Warnock's closed form of the L2 star discrepancy. It also houses
the uniformity gate that the partitioner applies to every box.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

import numpy as np

if TYPE_CHECKING:
    from ded.partitioner import DedConfig


class DiscrepancyError(ValueError):
    pass


Backend = Literal["exact1d-bound", "exact-small", "l2-warnock", "shortcut-split", "saturated-uniform"]


@dataclass(frozen=True)
class UniformityVerdict:
    """Outcome of the uniformity gate for one box.

    ``statistic`` is the value that decided: a discrepancy (or its lower
    bound) for the computed backends, 1.0 for ``saturated-uniform`` (the
    universal upper bound) and the threshold itself for ``shortcut-split``.
    """

    decision: Literal["uniform", "split"]
    statistic: float
    backend: Backend
    threshold: float

    @property
    def split(self) -> bool:
        return self.decision == "split"

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "statistic": self.statistic,
            "backend": self.backend,
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "UniformityVerdict":
        return cls(rec["decision"], float(rec["statistic"]), rec["backend"], float(rec["threshold"]))


def _as_points(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2 or P.shape[0] == 0:
        raise DiscrepancyError("discrepancy of an empty point set is undefined")
    return P


def star_1d(xs) -> float:
    """Exact star discrepancy of a 1-D set, O(n log n)."""
    x = np.sort(np.asarray(xs, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise DiscrepancyError("discrepancy of an empty point set is undefined")
    centers = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    return float(1.0 / (2.0 * n) + np.max(np.abs(x - centers)))


def coord_lower_bound(P) -> float:
    """Largest 1-D star discrepancy over the coordinate projections."""
    P = _as_points(P)
    return max(star_1d(P[:, j]) for j in range(P.shape[1]))


def star_exact_small(P, cap_n: int = 64, cap_d: int = 3) -> float:
    """Exact star discrepancy by enumerating the critical anchor grid.

    Along each axis the anchors are the distinct point coordinates plus 1.
    At every grid anchor two candidates are scored: the open box (points
    strictly below the anchor, which maximises volume minus fraction) and the
    limit from above (points at or below, which maximises fraction minus
    volume). No limit from above exists at the boundary value 1.

    Raises :class:`DiscrepancyError` when ``n > cap_n`` or ``d > cap_d``.
    """
    P = _as_points(P)
    n, d = P.shape
    if n > cap_n or d > cap_d:
        raise DiscrepancyError(f"instance n={n}, d={d} exceeds exact enumeration caps ({cap_n}, {cap_d})")
    if d > len(string.ascii_lowercase) - 1:
        raise DiscrepancyError("too many dimensions for grid enumeration")
    grids, opens, closeds = [], [], []
    for j in range(d):
        g = np.union1d(P[:, j], [1.0])
        col = P[:, j]
        opens.append((col[None, :] < g[:, None]).astype(float))
        closed = np.where(g[:, None] < 1.0, col[None, :] <= g[:, None], col[None, :] < g[:, None])
        closeds.append(closed.astype(float))
        grids.append(g)
    letters = string.ascii_lowercase[:d]
    spec = ",".join(f"{c}z" for c in letters) + "->" + letters
    open_count = np.einsum(spec, *opens)
    closed_count = np.einsum(spec, *closeds)
    vol = grids[0]
    for g in grids[1:]:
        vol = np.multiply.outer(vol, g)
    worst = max(np.max(vol - open_count / n), np.max(closed_count / n - vol))
    return float(worst)


def l2_star_warnock(P, block: int = 256) -> float:
    """L2 star discrepancy from Warnock's closed form, O(n^2 d).

    The pairwise term is accumulated in row blocks to bound memory.
    """
    P = _as_points(P)
    n, d = P.shape
    one_minus = 1.0 - P
    term1 = 3.0 ** (-d)
    term2 = (2.0 ** (1 - d) / n) * math.fsum(np.prod(1.0 - P * P, axis=1))
    acc = []
    for s in range(0, n, block):
        blk = one_minus[s : s + block]
        prod = np.minimum(blk[:, None, 0], one_minus[None, :, 0])
        for k in range(1, d):
            prod *= np.minimum(blk[:, None, k], one_minus[None, :, k])
        acc.append(prod.sum())
    term3 = math.fsum(acc) / (n * n)
    sq = term1 - term2 + term3
    if sq < -1e-12:
        raise DiscrepancyError(f"negative squared L2 discrepancy {sq!r}")
    return math.sqrt(max(sq, 0.0))


def decide_uniformity(P_tilde, n_i: int, N: int, cfg: "DedConfig") -> UniformityVerdict:
    """Decide whether the rescaled points of one box are uniform enough.

    Rules, applied in order against ``T = theta * sqrt(N) / n_i``:
    ``T >= 1`` is uniform without work, ``T <= epsilon`` splits without work,
    a coordinate lower bound above ``T`` splits, otherwise the configured
    backend decides.
    """
    T = cfg.theta * math.sqrt(N) / n_i
    if T >= 1.0:
        return UniformityVerdict("uniform", 1.0, "saturated-uniform", T)
    if T <= cfg.epsilon_shortcut:
        return UniformityVerdict("split", T, "shortcut-split", T)
    P_tilde = _as_points(P_tilde)
    bound = coord_lower_bound(P_tilde)
    if bound > T:
        return UniformityVerdict("split", bound, "exact1d-bound", T)
    n, d = P_tilde.shape
    fits_caps = n <= cfg.cap_n and d <= cfg.cap_d
    if cfg.backend == "l2" or (cfg.backend == "auto" and not fits_caps):
        stat, name = l2_star_warnock(P_tilde), "l2-warnock"
    else:
        stat, name = star_exact_small(P_tilde, cfg.cap_n, cfg.cap_d), "exact-small"
    return UniformityVerdict("split" if stat > T else "uniform", stat, name, T)
