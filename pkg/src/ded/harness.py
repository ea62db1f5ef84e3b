"""Seeded reproduction experiments and the per-leaf bound audit.

Replica ``r`` at ladder position ``s`` draws its sample with the seed
``SeedSequence(seed).spawn(...)`` child for that cell, so every replica is
reproducible in isolation and replicas never share streams.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ded.analysis import find_modes
from ded.density import TestFunction
from ded.discrepancy import l2_star_warnock, star_exact_small
from ded.geometry import scale_to_unit
from ded.partitioner import DedConfig, PartitionTree, fit, threshold
from ded.simgen import MixtureSpec, sample_mixture, table1_spec


def replica_seeds(seed: int, cells: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(cells)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


@dataclass
class ConvergenceRow:
    n: int
    mean_error: float
    std_error: float
    errors: list[float] = field(default_factory=list)


@dataclass
class ConvergenceReport:
    rows: list[ConvergenceRow]
    slope: Optional[float]
    config: dict
    function: str
    relative: bool
    elapsed: float = 0.0

    def summary(self) -> dict:
        return {
            "function": self.function,
            "relative": self.relative,
            "slope": self.slope,
            "sizes": [r.n for r in self.rows],
            "mean_error": [r.mean_error for r in self.rows],
            "std_error": [r.std_error for r in self.rows],
            "config": self.config,
            "elapsed_seconds": self.elapsed,
        }


# errors this small are rounding in the mass normalisation, not estimator error
ZERO_ERROR = 1e-13


def loglog_slope(ns: Sequence[float], errs: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(err) on log(n); None if any error is (numerically) zero."""
    errs = np.asarray(errs, dtype=float)
    if errs.size < 2 or np.any(errs <= ZERO_ERROR) or not np.all(np.isfinite(errs)):
        return None
    slope, _ = np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(errs), 1)
    return float(slope)


def integration_error(p, f: TestFunction, X, relative: bool = True) -> float:
    """``|integral of f p - sample mean of f|``, optionally over ``|sample mean|``."""
    mc = math.fsum(f(X)) / len(X)
    err = abs(p.integrate(f) - mc)
    if relative:
        return err / abs(mc) if mc != 0 else (0.0 if err == 0 else math.inf)
    return err


def convergence_experiment(
    spec: MixtureSpec,
    f: TestFunction,
    sizes: Sequence[int],
    replicas: int,
    cfg: Optional[DedConfig] = None,
    seed: int = 0,
    relative: bool = True,
) -> ConvergenceReport:
    sizes = [int(n) for n in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])) or not sizes:
        raise ValueError("sizes must be nonempty and strictly increasing")
    if replicas < 2:
        raise ValueError("need at least two replicas")
    cfg = cfg or DedConfig()
    seeds = replica_seeds(seed, len(sizes) * replicas)
    start = time.perf_counter()
    rows = []
    for s, n in enumerate(sizes):
        errs = []
        for r in range(replicas):
            X = sample_mixture(spec, n, seeds[s * replicas + r])
            _, p = fit(X, cfg)
            errs.append(integration_error(p, f, X, relative))
        mean = math.fsum(errs) / replicas
        std = math.sqrt(math.fsum((e - mean) ** 2 for e in errs) / (replicas - 1))
        rows.append(ConvergenceRow(n, mean, std, errs))
    slope = loglog_slope([r.n for r in rows], [r.mean_error for r in rows])
    return ConvergenceReport(rows, slope, cfg.to_dict(), f.name, relative, time.perf_counter() - start)


@dataclass
class ModeStudy:
    d: int
    n: int
    counts: list[int]
    config: dict

    @property
    def mean(self) -> float:
        return math.fsum(self.counts) / len(self.counts)

    @property
    def sd(self) -> float:
        if len(self.counts) < 2:
            return 0.0
        m = self.mean
        return math.sqrt(math.fsum((c - m) ** 2 for c in self.counts) / (len(self.counts) - 1))

    def summary(self) -> dict:
        return {"d": self.d, "n": self.n, "mean_modes": self.mean, "sd_modes": self.sd,
                "counts": self.counts, "config": self.config}


def mode_experiment(d: int, n: int, replicas: int, cfg: Optional[DedConfig] = None, seed: int = 0) -> ModeStudy:
    """Mode counts of fits to the four-Gaussian mixture over seeded replicas."""
    cfg = cfg or DedConfig()
    spec = table1_spec(d)
    counts = []
    for s in replica_seeds(seed, replicas):
        _, p = fit(sample_mixture(spec, n, s), cfg)
        counts.append(len(find_modes(p)))
    return ModeStudy(d, n, counts, cfg.to_dict())


@dataclass
class AuditRow:
    node: int
    count: int
    depth: int
    backend: str
    recorded: float
    recomputed: float
    threshold: float
    status: str
    exact: Optional[float] = None


@dataclass
class AuditReport:
    rows: list[AuditRow]
    violations: int
    backend_fractions: dict[str, float]
    exact_verified: bool

    def summary(self) -> dict:
        return {
            "leaves_audited": len(self.rows),
            "violations": self.violations,
            "backend_fractions": self.backend_fractions,
            "exact_verified": self.exact_verified,
        }


def bound_audit(tree: PartitionTree, cfg: Optional[DedConfig] = None) -> AuditReport:
    """Re-check every nonempty leaf against its tolerance.

    A leaf passes if its recomputed statistic is within ``theta sqrt(N)/n_i``,
    or it is saturated (tolerance >= 1), or a split was refused by the depth
    or resolution cap. When every leaf fits the exact-enumeration caps the
    statistic is also re-derived from the exact star discrepancy.
    """
    cfg = cfg or tree.config
    rows = []
    leaf_ids = [i for i in tree.leaf_ids() if tree.nodes[i].count > 0]
    all_small = all(tree.nodes[i].count <= cfg.cap_n for i in leaf_ids) and tree.d <= cfg.cap_d
    for i in leaf_ids:
        nd = tree.nodes[i]
        T = threshold(tree.N, nd.count, cfg.theta)
        v = nd.verdict
        U = scale_to_unit(nd.rect, tree.leaf_points(i))
        exact = star_exact_small(U, cfg.cap_n, cfg.cap_d) if all_small else None
        if v is None:
            status, recomputed = "unjudged", math.nan
        elif nd.capped:
            status, recomputed = f"{nd.capped}-capped", v.statistic
        elif v.backend == "saturated-uniform":
            status = "ok" if T >= 1.0 else "violation"
            recomputed = 1.0
        else:
            if v.backend == "l2-warnock":
                recomputed = l2_star_warnock(U)
            else:
                recomputed = star_exact_small(U, cfg.cap_n, cfg.cap_d)
            status = "ok" if recomputed <= T else "violation"
        if exact is not None and status == "ok" and v.backend != "saturated-uniform" and exact > T:
            status = "violation"
        rows.append(AuditRow(i, nd.count, nd.depth, v.backend if v else "none", v.statistic if v else math.nan,
                             recomputed, T, status, exact))
    backends = Counter(r.backend for r in rows)
    total = max(1, len(rows))
    fractions = {k: backends[k] / total for k in sorted(backends)}
    violations = sum(r.status in ("violation", "unjudged") for r in rows)
    return AuditReport(rows, violations, fractions, all_small)
