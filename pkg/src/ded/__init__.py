"""Density estimation on adaptive binary partitions of the unit cube.

A piecewise-constant density is grown by splitting boxes at their largest
empirical gap until the points inside every box look uniform under a
star-discrepancy test.
"""

from ded.analysis import LevelSetTree, ModeSet, find_modes, level_set_tree, multilevel_features
from ded.density import PiecewiseDensity, TestFunction
from ded.discrepancy import (
    UniformityVerdict,
    coord_lower_bound,
    decide_uniformity,
    l2_star_warnock,
    star_1d,
    star_exact_small,
)
from ded.geometry import HyperRect
from ded.partitioner import DedConfig, PartitionTree, fit, threshold

__version__ = "0.1.0"

__all__ = [
    "DedConfig",
    "HyperRect",
    "LevelSetTree",
    "ModeSet",
    "PartitionTree",
    "PiecewiseDensity",
    "TestFunction",
    "UniformityVerdict",
    "coord_lower_bound",
    "decide_uniformity",
    "find_modes",
    "fit",
    "l2_star_warnock",
    "level_set_tree",
    "multilevel_features",
    "star_1d",
    "star_exact_small",
    "threshold",
]
