"""Build reports: realized sizes, the guaranteed error and the measured one."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grids import GridSpec
from .network import Network, count, eval_batch, to_strict

BOUND_SLACK = 1e-12

CSV_COLUMNS = (
    "function",
    "epsilon",
    "depth",
    "relu",
    "step",
    "total",
    "strict_total",
    "bound",
    "measured",
    "grid",
    "seed",
)


@dataclass
class BuildReport:
    function: str
    epsilon: float
    depth: int
    relu: int
    step: int
    total: int
    strict_total: int
    bound: float
    measured: float
    grid: str
    seed: int = 0
    bits: Optional[int] = None
    degree: Optional[int] = None
    # closed-form counts predicted by the builder, keyed like count()
    expected: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound + BOUND_SLACK and self.bound <= self.epsilon + BOUND_SLACK

    @property
    def counts_match(self) -> bool:
        actual = {"depth": self.depth, "relu": self.relu, "step": self.step}
        return all(actual[k] == v for k, v in self.expected.items())

    def row(self) -> dict:
        return {name: getattr(self, name) for name in CSV_COLUMNS}


def sup_error(net: Network, func: Callable, grid: GridSpec) -> float:
    """``max |net(x) - func(x)|`` over the grid; ``func`` takes ``(M, d)`` points."""
    pts = grid.points()
    return float(np.max(np.abs(eval_batch(net, pts) - func(pts))))


def make_report(
    name: str,
    net: Network,
    epsilon: float,
    bound: float,
    func: Callable,
    grid: GridSpec,
    *,
    bits: int | None = None,
    degree: int | None = None,
    expected: dict | None = None,
    extra: dict | None = None,
) -> BuildReport:
    c = count(net)
    return BuildReport(
        function=name,
        epsilon=float(epsilon),
        depth=c.depth,
        relu=c.relu_count,
        step=c.step_count,
        total=c.total,
        strict_total=count(to_strict(net)).total,
        bound=float(bound),
        measured=sup_error(net, func, grid),
        grid=grid.describe(),
        seed=grid.seed,
        bits=bits,
        degree=degree,
        expected=dict(expected or {}),
        extra=dict(extra or {}),
    )
