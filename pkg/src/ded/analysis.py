"""Modes, level set trees and multi-level features of a fitted density."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ded.density import PiecewiseDensity
from ded.geometry import adjacency_lists
from ded.partitioner import DedConfig, fit


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return ra


@dataclass(frozen=True)
class Mode:
    members: tuple[int, ...]
    representative: int
    density: float
    mass: float

    def to_dict(self, p: PiecewiseDensity) -> dict:
        rep = self.representative
        return {
            "members": list(self.members),
            "representative": {"lower": p.lowers[rep].tolist(), "upper": p.uppers[rep].tolist()},
            "density": self.density,
            "mass": self.mass,
        }


@dataclass
class ModeSet:
    modes: list[Mode]

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, i) -> Mode:
        return self.modes[i]


def _adjacency(p: PiecewiseDensity, adjacency) -> list[np.ndarray]:
    return adjacency if adjacency is not None else adjacency_lists(p.lowers, p.uppers)


# densities closer than this (relatively) count as one level; masses are
# products of count ratios, so equal-count equal-volume leaves may differ by an ulp
LEVEL_RTOL = 1e-12


def _levels(p: PiecewiseDensity) -> np.ndarray:
    """Leaf densities with near-equal values snapped to the largest of their group."""
    dens = np.asarray(p.densities, dtype=float)
    out = dens.copy()
    order = np.argsort(-dens, kind="stable")
    head = None
    for i in order:
        v = dens[i]
        if head is None or head - v > LEVEL_RTOL * head:
            head = v
        out[i] = head
    return out


def _plateaus(p: PiecewiseDensity, adj, dens) -> list[list[int]]:
    """Maximal face-connected groups of positive-mass leaves with equal density."""
    alive = [i for i in range(len(p)) if p.masses[i] > 0]
    uf = UnionFind(len(p))
    for i in alive:
        for j in adj[i]:
            if dens[j] == dens[i] and p.masses[j] > 0:
                uf.union(i, int(j))
    groups: dict[int, list[int]] = {}
    for i in alive:
        groups.setdefault(uf.find(i), []).append(i)
    return list(groups.values())


def find_modes(p: PiecewiseDensity, adjacency: Optional[Sequence[np.ndarray]] = None) -> ModeSet:
    """Plateaus whose density strictly exceeds that of every outside neighbour.

    Sorted by density, highest first; ties keep the order of the lowest
    member index.
    """
    adj = _adjacency(p, adjacency)
    dens = _levels(p)
    modes = []
    for group in _plateaus(p, adj, dens):
        inside = set(group)
        level = dens[group[0]]
        outside = [int(j) for i in group for j in adj[i] if int(j) not in inside]
        if all(dens[j] < level for j in outside):
            members = tuple(sorted(group))
            modes.append(Mode(members, members[0], float(level), float(sum(p.masses[i] for i in members))))
    modes.sort(key=lambda md: (-md.density, md.members[0]))
    return ModeSet(modes)


@dataclass
class LstNode:
    birth: float
    death: Optional[float] = None
    members: list[int] = field(default_factory=list)
    children: list[int] = field(default_factory=list)
    parent: Optional[int] = None


@dataclass
class LevelSetTree:
    """Merge tree of the connected components of ``{p >= level}``.

    A node appears at ``birth`` (a plateau density for tree leaves, a merge
    level for internal nodes) and is absorbed into its parent at ``death``.
    ``members`` holds every partition leaf in the component at its death.
    """

    nodes: list[LstNode]
    root: Optional[int]

    def tree_leaves(self) -> list[int]:
        return [i for i, nd in enumerate(self.nodes) if not nd.children]

    def alive_at(self, level: float) -> list[int]:
        out = []
        for i, nd in enumerate(self.nodes):
            lo = -np.inf if nd.death is None else nd.death
            if lo < level <= nd.birth:
                out.append(i)
        return out

    def to_dict(self, node: Optional[int] = None) -> dict:
        if node is None:
            node = self.root
        if node is None:
            return {}
        nd = self.nodes[node]
        return {
            "birth": nd.birth,
            "death": nd.death,
            "leaves": sorted(nd.members),
            "children": [self.to_dict(c) for c in nd.children],
        }


def level_set_tree(p: PiecewiseDensity, adjacency: Optional[Sequence[np.ndarray]] = None) -> LevelSetTree:
    """Sweep leaves by decreasing density, merging face-adjacent components.

    Leaves of equal density are activated together, so the result does not
    depend on how ties are ordered.
    """
    adj = _adjacency(p, adjacency)
    dens = _levels(p)
    alive = [i for i in range(len(p)) if p.masses[i] > 0]
    uf = UnionFind(len(p))
    active = np.zeros(len(p), dtype=bool)
    comp_node: dict[int, int] = {}
    nodes: list[LstNode] = []

    by_level: dict[float, list[int]] = {}
    for i in alive:
        by_level.setdefault(float(dens[i]), []).append(i)
    for level in sorted(by_level, reverse=True):
        group = by_level[level]
        touched = {}
        for i in group:
            touched[i] = {comp_node[uf.find(int(j))] for j in adj[i] if active[j]}
        for i in group:
            active[i] = True
        for i in group:
            for j in adj[i]:
                if active[j]:
                    uf.union(i, int(j))
        by_root: dict[int, tuple[set, list]] = {}
        for i in group:
            old, fresh = by_root.setdefault(uf.find(i), (set(), []))
            old |= touched[i]
            fresh.append(i)
        for root, (old, fresh) in by_root.items():
            if not old:
                nodes.append(LstNode(birth=level, members=list(fresh)))
                comp_node[root] = len(nodes) - 1
            elif len(old) == 1:
                (nid,) = old
                nodes[nid].members.extend(fresh)
                comp_node[root] = nid
            else:
                parent = LstNode(birth=level, children=sorted(old))
                nodes.append(parent)
                pid = len(nodes) - 1
                for c in parent.children:
                    nodes[c].death = level
                    nodes[c].parent = pid
                    parent.members.extend(nodes[c].members)
                parent.members.extend(fresh)
                comp_node[root] = pid

    tops = sorted({comp_node[uf.find(i)] for i in alive})
    if not tops:
        return LevelSetTree([], None)
    if len(tops) == 1:
        return LevelSetTree(nodes, tops[0])
    # positive-mass regions separated by empty leaves join at density zero
    root = LstNode(birth=0.0, children=tops)
    nodes.append(root)
    rid = len(nodes) - 1
    for c in tops:
        nodes[c].death = 0.0
        nodes[c].parent = rid
        root.members.extend(nodes[c].members)
    return LevelSetTree(nodes, rid)


def multilevel_features(data, levels: Sequence[int], cfg: Optional[DedConfig] = None) -> np.ndarray:
    """Densities of each point under fits capped at each depth in ``levels``.

    A fit capped at depth ``L`` equals the full fit pruned to ``L`` levels,
    so one fit at the deepest requested level serves every column.
    """
    levels = [int(v) for v in levels]
    if not levels:
        raise ValueError("levels must be nonempty")
    if any(v < 1 for v in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing integers >= 1")
    cfg = (cfg or DedConfig()).replace(max_depth=levels[-1])
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    tree, _ = fit(X, cfg)
    return np.column_stack([tree.density(max_depth=L).eval(X) for L in levels])
