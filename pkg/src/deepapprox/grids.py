"""Point sets on the unit cube used for evaluation and error measurement."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

DEFAULT_POINTS = 100_000
DEFAULT_DELTA = 1e-9
MAX_DYADIC_LEVEL = 16


@dataclass(frozen=True)
class GridSpec:
    """Declarative description of a point set in ``[0, 1]^dim``.

    kind
        ``"uniform"``: ``size`` equispaced points on ``[0, 1]`` (1-D only).
        ``"dyadic"``: the uniform grid plus ``k/2^level`` and
        ``k/2^level ± delta``, clipped to ``[0, 1]``.
        ``"random"``: ``size`` seeded uniform points in ``[0, 1]^dim``,
        optionally followed by the corner set ``{0, 0.5, 1}^dim``.
    """

    kind: str = "uniform"
    size: int = DEFAULT_POINTS
    dim: int = 1
    level: int = 0
    delta: float = DEFAULT_DELTA
    seed: int = 0
    corners: bool = False

    def __post_init__(self):
        if self.kind not in ("uniform", "dyadic", "random"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.size <= 0:
            raise ValueError("grid needs at least one point")
        if self.kind != "random" and self.dim != 1:
            raise ValueError(f"{self.kind} grids are one-dimensional")

    def points(self) -> np.ndarray:
        """Points as an array of shape ``(M, dim)``."""
        if self.kind == "random":
            rng = np.random.default_rng(self.seed)
            pts = rng.random((self.size, self.dim))
            if self.corners:
                corner = np.array(list(itertools.product((0.0, 0.5, 1.0), repeat=self.dim)))
                pts = np.vstack([pts, corner])
            return pts
        x = np.linspace(0.0, 1.0, self.size)
        if self.kind == "dyadic":
            knots = np.arange(2**self.level + 1) / 2.0**self.level
            extra = np.concatenate([knots, knots - self.delta, knots + self.delta])
            x = np.unique(np.concatenate([x, np.clip(extra, 0.0, 1.0)]))
        return x.reshape(-1, 1)

    def describe(self) -> str:
        if self.kind == "uniform":
            return f"uniform:{self.size}"
        if self.kind == "dyadic":
            return f"dyadic:{self.size}:L{self.level}"
        tail = "+corners" if self.corners else ""
        return f"random:{self.size}:d{self.dim}:s{self.seed}{tail}"


def verification_grid_1d(bits: int, size: int = DEFAULT_POINTS) -> GridSpec:
    """Uniform points enriched around the dyadic knots at ``bits + 1`` levels.

    The level is capped so the grid stays at desk scale for very fine
    decoders; the uniform part still probes between knots.
    """
    return GridSpec("dyadic", size, level=min(bits + 1, MAX_DYADIC_LEVEL))


def verification_grid_nd(dim: int, size: int = DEFAULT_POINTS, seed: int = 0) -> GridSpec:
    return GridSpec("random", size, dim=dim, seed=seed, corners=dim <= 5)
