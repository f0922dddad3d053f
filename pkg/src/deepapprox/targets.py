"""Target functions with declared derivative bounds.

``profile(n)`` is an upper bound on ``sup |f^(n)|`` over the domain.  It
is declared, never inferred from the evaluator.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class ApproxTarget:
    name: str
    func: Callable
    dim: int = 1
    profile: Optional[Callable[[int], float]] = None
    mu: Optional[float] = None
    coeffs: Optional[tuple[float, ...]] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.mu is not None and self.mu <= 0:
            raise ValueError("strong-convexity parameter must be positive")

    def __call__(self, x):
        return self.func(x)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at points of shape ``(M, dim)``."""
        pts = np.asarray(points, dtype=float)
        arg = pts[:, 0] if self.dim == 1 else pts
        return np.asarray(self.func(arg), dtype=float).reshape(-1)

    def deriv_bound(self, n: int) -> float:
        if self.profile is None:
            raise ValueError(f"target {self.name!r} declares no derivative bounds")
        return float(self.profile(n))

    def factorial_certified(self, upto: int) -> bool:
        """Whether ``sup |f^(n)| <= n!`` is declared for ``n = 0..upto``."""
        if self.profile is None:
            return False
        return all(self.profile(n) <= math.factorial(n) for n in range(upto + 1))


def polynomial(coeffs: Sequence[float], name: str | None = None, mu: float | None = None) -> ApproxTarget:
    """``sum a_k x^k`` on ``[0, 1]`` with its exact derivative bounds."""
    a = tuple(float(c) for c in coeffs)

    exact = tuple(Fraction(c) for c in a)

    def func(x):
        # rational input stays rational so interpolation can sample exactly
        coeffs = exact if isinstance(x, Fraction) else a
        acc = 0 * x
        for c in reversed(coeffs):
            acc = acc * x + c
        return acc

    def profile(n):
        return sum(abs(c) * math.perm(k, n) for k, c in enumerate(a) if k >= n)

    label = name or "poly[" + ",".join(repr(c) for c in a) + "]"
    return ApproxTarget(label, func, 1, profile, mu, a)


def _square_profile(n):
    return (1.0, 2.0, 2.0)[n] if n < 3 else 0.0


def _exp_shift(x):
    return np.exp(x - 1.0)


def _half_sin(x):
    return 0.5 * np.sin(x) + 0.5


def _identity(x):
    return x


def _square(x):
    return x * x


def square() -> ApproxTarget:
    return ApproxTarget("square", _square, 1, _square_profile, 2.0, (0.0, 0.0, 1.0))


def exp_shift() -> ApproxTarget:
    return ApproxTarget("exp", _exp_shift, 1, lambda n: 1.0, math.exp(-1.0))


def identity() -> ApproxTarget:
    return ApproxTarget("identity", _identity, 1, lambda n: 1.0 if n < 2 else 0.0, None, (0.0, 1.0))


def half_sin() -> ApproxTarget:
    return ApproxTarget("half_sin", _half_sin, 1, lambda n: 1.0 if n == 0 else 0.5)


def exp_decay(rate: float) -> ApproxTarget:
    """``u -> exp(-rate * u)`` on ``[0, 1]``; ``sup |f^(n)| = rate^n``."""
    return ApproxTarget(
        f"exp_decay[{rate!r}]",
        lambda u: np.exp(-rate * u),
        1,
        lambda n: float(rate) ** n,
        rate * rate * math.exp(-rate),
    )


def uncertified(name: str, func: Callable) -> ApproxTarget:
    return ApproxTarget(name, func, 1, None)


REGISTRY: dict[str, Callable[[], ApproxTarget]] = {
    "square": square,
    "exp": exp_shift,
    "identity": identity,
    "half_sin": half_sin,
}


def get_target(name: str) -> ApproxTarget:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise ValueError(
            f"unknown target {name!r}; choose from {', '.join(sorted(REGISTRY))}"
        ) from None
