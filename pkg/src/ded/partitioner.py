"""Greedy discrepancy-controlled binary partitioning.

Starting from the unit cube, every box whose rescaled points fail the
uniformity gate is cut at its largest empirical gap. Sweeps are
level-synchronous: all boxes created in one sweep are examined in the next.
Each box is judged exactly once, since its points never change after it is
created.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ded.discrepancy import UniformityVerdict, decide_uniformity
from ded.geometry import GeometryError, HyperRect, cut_position, scale_to_unit, split


class FitError(ValueError):
    pass


BACKENDS = ("auto", "l2", "exact")


@dataclass(frozen=True)
class DedConfig:
    """Tuning knobs of the estimator.

    Attributes
    ----------
    theta : float
        Scale of the per-box tolerance ``theta * sqrt(N) / n_i``.
    m : int
        Number of equal bins per dimension scored for the split location.
    pseudo_count : float
        Laplace smoother added to child counts when propagating mass.
    epsilon_shortcut : float
        Boxes whose tolerance falls to this value are split unchecked.
    max_depth : int or None
        Deepest tree level allowed (root is level 1).
    c : float
        Constant of the uniform star-discrepancy bound; only used to report
        the relative-uniformity factor.
    backend : {"auto", "l2", "exact"}
        ``auto`` uses exact enumeration within ``cap_n``/``cap_d`` and the
        L2 star discrepancy beyond; ``l2`` always uses L2; ``exact`` refuses
        instances beyond the caps.
    """

    theta: float = 1.0
    m: int = 8
    pseudo_count: float = 0.0
    epsilon_shortcut: float = 0.001
    max_depth: Optional[int] = None
    c: float = 10.0
    backend: str = "auto"
    cap_n: int = 64
    cap_d: int = 3
    seed: int = 0

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"m must be an integer >= 2, got {self.m}")
        if self.pseudo_count < 0:
            raise ValueError(f"pseudo_count must be nonnegative, got {self.pseudo_count}")
        if not 0 <= self.epsilon_shortcut < 1:
            raise ValueError(f"epsilon_shortcut must lie in [0, 1), got {self.epsilon_shortcut}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")

    def replace(self, **changes) -> "DedConfig":
        return DedConfig(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, rec: dict) -> "DedConfig":
        return cls(**{k: v for k, v in rec.items() if k in cls.__dataclass_fields__})


def threshold(N: int, n_i: int, theta: float) -> float:
    return theta * math.sqrt(N) / n_i


def relative_uniformity(N: int, n_i: int, d: int, theta: float, c: float) -> float:
    """Factor ``sqrt(N / (n_i d)) * theta / c`` scaling the optimal discrepancy bound."""
    return math.sqrt(N / (n_i * d)) * theta / c


def compute_gaps(P, r: HyperRect, m: int) -> np.ndarray:
    """Gap matrix of shape ``(d, m - 1)``.

    Entry ``(j, k-1)`` is ``|fraction of points below cut k/m along j - k/m|``.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n = P.shape[0]
    if n == 0:
        raise FitError("gaps of an empty box are undefined")
    ks = np.arange(1, m)
    cuts = cut_position(np.asarray(r.lower)[:, None], np.asarray(r.upper)[:, None], ks[None, :], m)
    below = (P[:, :, None] < cuts[None, :, :]).sum(axis=0)
    return np.abs(below / n - ks / m)


def select_split(gaps) -> tuple[int, int]:
    """``(dim, k)`` of the largest gap; ties go to the lowest dim, then lowest k."""
    gaps = np.asarray(gaps, dtype=float)
    dim, col = np.unravel_index(int(np.argmax(gaps)), gaps.shape)
    return int(dim), int(col) + 1


@dataclass
class Node:
    rect: HyperRect
    depth: int
    count: int
    mass: float
    parent: Optional[int] = None
    verdict: Optional[UniformityVerdict] = None
    split_dim: Optional[int] = None
    split_k: Optional[int] = None
    left: Optional[int] = None
    right: Optional[int] = None
    # "depth" or "resolution" when a split verdict could not be carried out
    capped: Optional[str] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class PartitionTree:
    nodes: list[Node]
    N: int
    d: int
    config: DedConfig
    points: np.ndarray = field(repr=False)
    members: dict[int, np.ndarray] = field(repr=False, default_factory=dict)

    @property
    def root(self) -> Node:
        return self.nodes[0]

    def leaf_ids(self) -> list[int]:
        return [i for i, nd in enumerate(self.nodes) if nd.is_leaf]

    def leaves(self) -> list[Node]:
        return [nd for nd in self.nodes if nd.is_leaf]

    def leaf_points(self, node_id: int) -> np.ndarray:
        return self.points[self.members[node_id]]

    @property
    def attained_depth(self) -> int:
        return max(nd.depth for nd in self.nodes)

    def cut_ids(self, max_depth: int) -> list[int]:
        """Leaves of the tree pruned to ``max_depth`` levels."""
        out, stack = [], [0]
        while stack:
            i = stack.pop()
            nd = self.nodes[i]
            if nd.is_leaf or nd.depth >= max_depth:
                out.append(i)
            else:
                stack.extend((nd.right, nd.left))
        return out

    def density(self, max_depth: Optional[int] = None):
        from ded.density import PiecewiseDensity

        ids = self.leaf_ids() if max_depth is None else self.cut_ids(max_depth)
        return PiecewiseDensity.from_nodes([self.nodes[i] for i in ids], self.N, self.d, self.config)


def _validate(data) -> np.ndarray:
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] == 0:
        raise FitError("data must be an n x d array with d >= 1")
    if X.shape[0] == 0:
        raise FitError("data must contain at least one point")
    if not np.all(np.isfinite(X)):
        raise FitError("data contains non-finite coordinates")
    if np.any(X < 0.0) or np.any(X > 1.0):
        raise FitError("data contains points outside the unit cube")
    return X


def fit(data, cfg: Optional[DedConfig] = None):
    """Fit the partition and return ``(tree, density)``.

    Rows are put in lexicographic order first, so any permutation of the
    input yields a bit-identical fit.
    """
    cfg = cfg or DedConfig()
    X = _validate(data)
    X = X[np.lexsort(X.T[::-1])]
    N, d = X.shape
    m, alpha = int(cfg.m), cfg.pseudo_count

    nodes = [Node(HyperRect.unit(d), depth=1, count=N, mass=1.0)]
    members = {0: np.arange(N)}
    frontier = [0]
    while frontier:
        created = []
        for nid in frontier:
            node = nodes[nid]
            idx = members[nid]
            if node.count == 0:
                continue
            P = X[idx]
            node.verdict = decide_uniformity(scale_to_unit(node.rect, P), node.count, N, cfg)
            if not node.verdict.split:
                continue
            if cfg.max_depth is not None and node.depth >= cfg.max_depth:
                node.capped = "depth"
                continue
            dim, k = select_split(compute_gaps(P, node.rect, m))
            try:
                lrect, rrect = split(node.rect, dim, k, m)
            except GeometryError:
                node.capped = "resolution"
                continue
            go_left = P[:, dim] < lrect.upper[dim]
            n_left = int(go_left.sum())
            if alpha == 0:
                # the product of ratios telescopes to count / N; use it directly
                mass_left, mass_right = n_left / N, (node.count - n_left) / N
            else:
                # ratio first: keeps mass_left <= node.mass, so the right mass is never negative
                mass_left = node.mass * ((n_left + alpha) / (node.count + 2 * alpha))
                mass_right = node.mass - mass_left
            left_id, right_id = len(nodes), len(nodes) + 1
            nodes.append(Node(lrect, node.depth + 1, n_left, mass_left, parent=nid))
            nodes.append(Node(rrect, node.depth + 1, node.count - n_left, mass_right, parent=nid))
            members[left_id] = idx[go_left]
            members[right_id] = idx[~go_left]
            del members[nid]
            node.split_dim, node.split_k, node.left, node.right = dim, k, left_id, right_id
            created.extend((left_id, right_id))
        frontier = created

    tree = PartitionTree(nodes, N, d, cfg, points=X, members=members)
    return tree, tree.density()
