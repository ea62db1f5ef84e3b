"""The fitted piecewise-constant density and its JSON model format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ded.geometry import HyperRect, assign_many

SCHEMA_VERSION = 1
_POWERS = (0.0, 0.5, 1.0)


class DensityError(ValueError):
    pass


@dataclass(frozen=True)
class TestFunction:
    """A sum of separable terms ``coef * prod_j x_j ** powers[j]``.

    Only powers 0, 1/2 and 1 are supported; each has a closed-form
    antiderivative, so integrals against a piecewise-constant density are
    exact.
    """

    __test__ = False  # keep pytest from collecting this class

    d: int
    terms: tuple[tuple[float, tuple[float, ...]], ...]
    name: str = "f"

    def __post_init__(self):
        for coef, powers in self.terms:
            if len(powers) != self.d:
                raise DensityError(f"term has {len(powers)} powers, function has d={self.d}")
            for p in powers:
                if p not in _POWERS:
                    raise DensityError(f"unsupported univariate piece x**{p}")

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0])
        for coef, powers in self.terms:
            out += coef * np.prod(X ** np.asarray(powers), axis=1)
        return out

    @classmethod
    def constant(cls, d: int, value: float = 1.0) -> "TestFunction":
        return cls(d, ((value, (0.0,) * d),), name="const")

    @classmethod
    def sum_sqrt(cls, d: int) -> "TestFunction":
        """``sum_j sqrt(x_j)``."""
        return cls(d, tuple((1.0, _unit_powers(d, {j: 0.5})) for j in range(d)), name="f1")

    @classmethod
    def sum_linear(cls, d: int) -> "TestFunction":
        """``sum_j x_j``."""
        return cls(d, tuple((1.0, _unit_powers(d, {j: 1.0})) for j in range(d)), name="f2")

    @classmethod
    def sum_sqrt_squared(cls, d: int) -> "TestFunction":
        """``(sum_j sqrt(x_j))**2``, expanded into supported terms."""
        terms = [(1.0, _unit_powers(d, {j: 1.0})) for j in range(d)]
        terms += [(2.0, _unit_powers(d, {i: 0.5, j: 0.5})) for i in range(d) for j in range(i + 1, d)]
        return cls(d, tuple(terms), name="f3")

    @classmethod
    def by_name(cls, name: str, d: int) -> "TestFunction":
        table = {"f1": cls.sum_sqrt, "f2": cls.sum_linear, "f3": cls.sum_sqrt_squared, "const": cls.constant}
        if name not in table:
            raise DensityError(f"unknown test function {name!r}; choose from {sorted(table)}")
        return table[name](d)


def _unit_powers(d: int, nonzero: dict[int, float]) -> tuple[float, ...]:
    return tuple(nonzero.get(j, 0.0) for j in range(d))


def _antiderivative_diff(a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    q = p + 1.0
    return (b**q - a**q) / q


@dataclass
class PiecewiseDensity:
    """Leaves of a partition with their probability masses.

    ``density = mass / volume`` for every leaf; ``meta`` carries optional
    per-leaf fitting records (depth, verdict) that travel with the model.
    """

    lowers: np.ndarray
    uppers: np.ndarray
    masses: np.ndarray
    counts: np.ndarray
    N: int
    config: Optional[dict] = None
    transform: Optional[dict] = None
    meta: list[dict] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.lowers = np.atleast_2d(np.asarray(self.lowers, dtype=float))
        self.uppers = np.atleast_2d(np.asarray(self.uppers, dtype=float))
        self.masses = np.asarray(self.masses, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.lowers.shape != self.uppers.shape or self.lowers.shape[0] != self.masses.size:
            raise DensityError("inconsistent leaf arrays")
        if np.any(self.masses < 0):
            raise DensityError("negative leaf mass")
        self.volumes = np.prod(self.uppers - self.lowers, axis=1)
        self.densities = self.masses / self.volumes

    @classmethod
    def from_nodes(cls, nodes, N: int, d: int, config=None) -> "PiecewiseDensity":
        cfg = config.to_dict() if hasattr(config, "to_dict") else config
        meta = []
        for nd in nodes:
            rec = {"depth": nd.depth}
            if nd.verdict is not None:
                rec["verdict"] = nd.verdict.to_dict()
            if nd.capped:
                rec["capped"] = nd.capped
            meta.append(rec)
        return cls(
            lowers=np.array([nd.rect.lower for nd in nodes]).reshape(len(nodes), d),
            uppers=np.array([nd.rect.upper for nd in nodes]).reshape(len(nodes), d),
            masses=[nd.mass for nd in nodes],
            counts=[nd.count for nd in nodes],
            N=N,
            config=cfg,
            meta=meta,
        )

    @property
    def d(self) -> int:
        return self.lowers.shape[1]

    def __len__(self) -> int:
        return self.masses.size

    @property
    def leaves(self) -> list[tuple[HyperRect, float, float]]:
        return [
            (HyperRect(lo, hi), float(ms), float(dn))
            for lo, hi, ms, dn in zip(self.lowers, self.uppers, self.masses, self.densities)
        ]

    def leaf_index(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise DensityError(f"points have dimension {X.shape[1]}, density has d={self.d}")
        idx = assign_many(self.lowers, self.uppers, X)
        if np.any(idx < 0):
            bad = int(np.flatnonzero(idx < 0)[0])
            raise DensityError(f"point {bad} lies outside the unit cube")
        return idx

    def eval(self, X) -> np.ndarray:
        """Density at each row of ``X`` (a single point returns a length-1 array)."""
        return self.densities[self.leaf_index(X)]

    def __call__(self, X) -> np.ndarray:
        return self.eval(X)

    def rect_prob(self, A: HyperRect) -> float:
        """Estimated probability of box ``A``."""
        if A.d != self.d:
            raise DensityError("box dimension does not match density")
        lo = np.maximum(self.lowers, np.asarray(A.lower))
        hi = np.minimum(self.uppers, np.asarray(A.upper))
        overlap = np.prod(np.clip(hi - lo, 0.0, None), axis=1)
        return math.fsum(self.densities * overlap)

    def integrate(self, f: TestFunction) -> float:
        """Exact integral of ``f`` against the density."""
        if f.d != self.d:
            raise DensityError("test function dimension does not match density")
        per_leaf = np.zeros(len(self))
        for coef, powers in f.terms:
            box = np.ones(len(self))
            for j, p in enumerate(powers):
                box *= _antiderivative_diff(self.lowers[:, j], self.uppers[:, j], p)
            per_leaf += coef * box
        return math.fsum(self.densities * per_leaf)

    def sample(self, n: int, seed=0) -> np.ndarray:
        """Draw ``n`` points: a leaf by mass, then uniformly inside it."""
        if n < 0:
            raise DensityError("sample size must be nonnegative")
        rng = np.random.Generator(np.random.Philox(seed))
        p = self.masses / self.masses.sum()
        leaf = rng.choice(len(self), size=n, p=p)
        u = rng.random((n, self.d))
        return self.lowers[leaf] + u * (self.uppers[leaf] - self.lowers[leaf])

    # serialisation

    def to_dict(self) -> dict:
        leaves = []
        for i in range(len(self)):
            rec = {
                "lower": self.lowers[i].tolist(),
                "upper": self.uppers[i].tolist(),
                "count": int(self.counts[i]),
                "mass": float(self.masses[i]),
                "density": float(self.densities[i]),
            }
            if self.meta:
                rec.update(self.meta[i])
            leaves.append(rec)
        return {
            "schema_version": SCHEMA_VERSION,
            "d": self.d,
            "N": int(self.N),
            "config": self.config,
            "transform": self.transform,
            "leaves": leaves,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, rec: dict) -> "PiecewiseDensity":
        version = rec.get("schema_version")
        if version != SCHEMA_VERSION:
            raise DensityError(f"unsupported model schema_version {version!r}")
        d = int(rec["d"])
        leaves = rec["leaves"]
        if not leaves:
            raise DensityError("model has no leaves")
        meta = [{k: v for k, v in leaf.items() if k in ("depth", "verdict", "capped")} for leaf in leaves]
        return cls(
            lowers=np.array([leaf["lower"] for leaf in leaves], dtype=float).reshape(len(leaves), d),
            uppers=np.array([leaf["upper"] for leaf in leaves], dtype=float).reshape(len(leaves), d),
            masses=[leaf["mass"] for leaf in leaves],
            counts=[leaf["count"] for leaf in leaves],
            N=int(rec["N"]),
            config=rec.get("config"),
            transform=rec.get("transform"),
            meta=meta if any(meta) else [],
        )

    @classmethod
    def from_json(cls, text: str) -> "PiecewiseDensity":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_leaves(cls, leaves: Sequence[tuple[HyperRect, float]], N: int = 0) -> "PiecewiseDensity":
        """Build from ``(rect, mass)`` pairs; handy for hand-made densities."""
        if not leaves:
            raise DensityError("no leaves")
        return cls(
            lowers=[r.lower for r, _ in leaves],
            uppers=[r.upper for r, _ in leaves],
            masses=[ms for _, ms in leaves],
            counts=np.zeros(len(leaves), dtype=np.int64),
            N=N,
        )

