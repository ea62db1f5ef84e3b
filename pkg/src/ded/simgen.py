"""Seeded synthetic mixtures on the unit cube.

Every draw uses ``numpy.random.Generator`` over the Philox 4x64 counter-based
bit generator (numpy >= 1.17 stream definition), seeded with the integer
given by the caller. Gaussians are drawn as ``mean + L z`` with ``L`` the
Cholesky factor and ``z`` standard normals; Betas as ``G_a / (G_a + G_b)``
from two standard gammas. Gaussian mixtures are truncated to the cube by
rejection: each attempt picks a component by weight, and attempts landing
outside the cube are discarded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

MIN_ACCEPTANCE = 1e-4
_BATCH = 4096


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class Gaussian:
    mean: tuple[float, ...]
    cov: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (len(self.mean),) * 2 or not np.allclose(cov, cov.T):
            raise SimulationError("covariance must be a symmetric d x d matrix")
        if np.any(np.linalg.eigvalsh(cov) <= 0):
            raise SimulationError("covariance must be positive definite")

    @property
    def d(self) -> int:
        return len(self.mean)


@dataclass(frozen=True)
class ProductBeta:
    shapes: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if any(a <= 0 or b <= 0 for a, b in self.shapes):
            raise SimulationError("beta shapes must be positive")

    @property
    def d(self) -> int:
        return len(self.shapes)


Component = Union[Gaussian, ProductBeta]


@dataclass(frozen=True)
class MixtureSpec:
    weights: tuple[float, ...]
    components: tuple[Component, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.components) or not self.components:
            raise SimulationError("need one weight per component")
        if any(w <= 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            raise SimulationError("weights must be positive and sum to 1")
        if len({c.d for c in self.components}) != 1:
            raise SimulationError("components disagree on dimension")

    @property
    def d(self) -> int:
        return self.components[0].d


def _draw(comp: Component, rng: np.random.Generator, k: int) -> np.ndarray:
    if isinstance(comp, Gaussian):
        chol = np.linalg.cholesky(np.asarray(comp.cov, dtype=float))
        return np.asarray(comp.mean) + rng.standard_normal((k, comp.d)) @ chol.T
    shapes = np.asarray(comp.shapes, dtype=float)
    ga = rng.standard_gamma(np.broadcast_to(shapes[:, 0], (k, comp.d)))
    gb = rng.standard_gamma(np.broadcast_to(shapes[:, 1], (k, comp.d)))
    return ga / (ga + gb)


def sample_mixture(spec: MixtureSpec, n: int, seed=0, return_labels: bool = False):
    """Draw ``n`` points of ``spec`` restricted to the unit cube."""
    if n < 0:
        raise SimulationError("sample size must be nonnegative")
    rng = np.random.Generator(np.random.Philox(seed))
    weights = np.asarray(spec.weights)
    points, labels = [], []
    have = attempts = 0
    while have < n:
        batch = max(_BATCH, 2 * (n - have))
        comp = rng.choice(len(weights), size=batch, p=weights)
        draws = np.empty((batch, spec.d))
        for c, component in enumerate(spec.components):
            sel = comp == c
            draws[sel] = _draw(component, rng, int(sel.sum()))
        keep = np.all((draws >= 0.0) & (draws <= 1.0), axis=1)
        attempts += batch
        if keep.sum() / attempts < MIN_ACCEPTANCE and attempts >= 10 * _BATCH:
            raise SimulationError(f"rejection acceptance rate below {MIN_ACCEPTANCE}")
        points.append(draws[keep])
        labels.append(comp[keep])
        have += int(keep.sum())
    X = np.concatenate(points)[:n] if points else np.empty((0, spec.d))
    if return_labels:
        lab = np.concatenate(labels)[:n] if labels else np.empty(0, dtype=int)
        return X, lab
    return X


def table1_spec(d: int) -> MixtureSpec:
    """Four equal-weight Gaussians centred on the quadrants of the first two axes."""
    if d < 2:
        raise SimulationError("the four-mode mixture needs d >= 2")
    cov = tuple(tuple(0.01 if i == j else 0.0 for j in range(d)) for i in range(d))
    heads = [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]
    comps = tuple(Gaussian(head + (0.5,) * (d - 2), cov) for head in heads)
    return MixtureSpec((0.25,) * 4, comps)


def beta_mixture_spec(d: int) -> MixtureSpec:
    if d < 1:
        raise SimulationError("dimension must be at least 1")
    return MixtureSpec((0.5, 0.5), (ProductBeta(((15.0, 5.0),) * d), ProductBeta(((5.0, 15.0),) * d)))


def fig2_gauss_spec() -> MixtureSpec:
    return MixtureSpec((1.0,), (Gaussian((0.5, 0.5), ((0.08, 0.02), (0.02, 0.02))),))


def fig2_gauss2_spec() -> MixtureSpec:
    cov = ((0.04, 0.01), (0.01, 0.01))
    return MixtureSpec((0.5, 0.5), (Gaussian((0.5, 0.25), cov), Gaussian((0.5, 0.75), cov)))


def fig2_beta3_spec() -> MixtureSpec:
    comps = (
        ProductBeta(((2.0, 5.0), (5.0, 2.0))),
        ProductBeta(((4.0, 2.0), (2.0, 4.0))),
        ProductBeta(((1.0, 3.0), (3.0, 1.0))),
    )
    return MixtureSpec((1 / 3,) * 3, comps)


def preset(name: str) -> MixtureSpec:
    """Resolve a preset name such as ``table1-d3`` or ``beta-mixture-d5``."""
    fixed = {"fig2-gauss": fig2_gauss_spec, "fig2-gauss2": fig2_gauss2_spec, "fig2-beta3": fig2_beta3_spec}
    if name in fixed:
        return fixed[name]()
    match = re.fullmatch(r"(table1|beta-mixture)-d(\d+)", name)
    if not match:
        raise SimulationError(f"unknown preset {name!r}")
    family, d = match.group(1), int(match.group(2))
    return table1_spec(d) if family == "table1" else beta_mixture_spec(d)
