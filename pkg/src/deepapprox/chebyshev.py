"""Polynomial interpolation at Chebyshev points mapped to ``[0, 1]``.

The networks consume monomial coefficients, so :func:`interpolate` returns
the interpolant in the monomial basis.  The divided-difference table and
the Newton-to-monomial expansion are carried out in exact rational
arithmetic on the sampled values; the only rounding is the final
conversion of each coefficient to a double.  Monomial coefficients grow
roughly like ``5.8^N`` for an interpolant bounded by 1, which is why the
degree is capped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

DEFAULT_MAX_DEGREE = 40


class ConditioningError(ValueError):
    """Requested degree exceeds the monomial-extraction cap."""


@dataclass(frozen=True)
class ChebGrid:
    degree: int
    nodes: np.ndarray  # on [-1, 1], strictly decreasing
    mapped: np.ndarray  # (nodes + 1) / 2 on [0, 1]


@dataclass(frozen=True)
class MonomialPoly:
    """``P(x) = sum_n coeffs[n] * x**n``."""

    coeffs: tuple[float, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc if acc.ndim else float(acc)


def cheb_points(N: int) -> ChebGrid:
    if N < 0:
        raise ValueError("degree must be nonnegative")
    i = np.arange(N + 1)
    z = np.cos((i + 0.5) * np.pi / (N + 1))
    return ChebGrid(N, z, (z + 1.0) / 2.0)


def _sample(f: Callable, x: float):
    """Exact rational sample when ``f`` supports it, else a float sample."""
    try:
        v = f(Fraction(x))
    except Exception:
        v = None
    if isinstance(v, (Fraction, int)) and not isinstance(v, bool):
        return Fraction(v)
    return Fraction(float(f(x)))


def interpolate(f: Callable, N: int, max_degree: int = DEFAULT_MAX_DEGREE) -> MonomialPoly:
    """Monomial coefficients of the degree-``N`` interpolant of ``f``.

    ``f`` is sampled at the mapped Chebyshev points.  If ``f`` accepts a
    :class:`fractions.Fraction` and returns a rational, the samples are
    exact and polynomials of degree at most ``N`` are reproduced up to the
    final rounding of their coefficients.
    """
    if N < 0:
        raise ValueError("degree must be nonnegative")
    if N > max_degree:
        raise ConditioningError(
            f"interpolation degree {N} exceeds the conditioning cap {max_degree}; "
            "monomial coefficients would be unreliable"
        )
    xs = [Fraction(float(v)) for v in cheb_points(N).mapped]
    table = [_sample(f, float(x)) for x in xs]
    newton = [table[0]]
    for k in range(1, N + 1):
        table = [
            (table[i + 1] - table[i]) / (xs[i + k] - xs[i]) for i in range(len(table) - 1)
        ]
        newton.append(table[0])
    # Horner on the Newton form: P = d_0 + (x - x_0)(d_1 + (x - x_1)(...))
    coeffs = [newton[N]]
    for k in range(N - 1, -1, -1):
        shifted = [Fraction(0)] + coeffs
        for m, c in enumerate(coeffs):
            shifted[m] -= xs[k] * c
        shifted[0] += newton[k]
        coeffs = shifted
    return MonomialPoly(tuple(float(c) for c in coeffs))


def lagrange_eval(samples: Sequence[float], x):
    """Barycentric evaluation of the interpolant through ``samples``.

    ``samples[i]`` is the value at the ``i``-th mapped Chebyshev point.
    Returns the sample itself when ``x`` coincides with a node.
    """
    y = np.asarray(samples, dtype=float)
    N = len(y) - 1
    grid = cheb_points(N)
    i = np.arange(N + 1)
    w = (-1.0) ** i * np.sin((i + 0.5) * np.pi / (N + 1))
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    diff = xa[:, None] - grid.mapped[None, :]
    exact = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = w / diff
        out = (t @ y) / t.sum(axis=1)
    hit = exact.any(axis=1)
    out[hit] = y[exact[hit].argmax(axis=1)]
    return out if np.ndim(x) else float(out[0])


def remainder_bound(N: int, deriv_bound: float) -> float:
    """``deriv_bound / (2^N (N+1)!)``, computed in log space for large ``N``."""
    if deriv_bound < 0:
        raise ValueError("derivative bound must be nonnegative")
    if N < 0:
        raise ValueError("degree must be nonnegative")
    if deriv_bound == 0:
        return 0.0
    if N < 160:
        return deriv_bound / (2.0**N * float(math.factorial(N + 1)))
    return math.exp(math.log(deriv_bound) - N * math.log(2.0) - math.lgamma(N + 2))
