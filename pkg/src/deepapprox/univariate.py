"""Univariate constructions: the square net, monomial ladders, polynomials
and smooth functions through Chebyshev interpolation.

Everything is built from decoded bits and one gadget: for ``b`` in ``{0, 1}``
and ``y`` in ``[0, 2]`` the unit ``relu(2(b - 1) + y)`` outputs ``b * y``.
A ladder stage multiplies the previous power of the truncated input by
``sum_j b_j 2^-j`` using one gadget per bit, then an accumulator unit sums
the gadgets so the power is available as a single tagged node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import chebyshev
from .decoder import add_decoder
from .grids import GridSpec, verification_grid_1d
from .network import NetBuilder, Network, NodeRef, Term
from .report import BuildReport, make_report
from .targets import ApproxTarget, polynomial

L1_SLACK = 1e-12


def gate_value(b: float, y: float) -> float:
    """Plain-arithmetic value of the bit gadget, ``max(0, 2(b - 1) + y)``."""
    return max(0.0, 2.0 * (b - 1.0) + y)


def bit_gate(
    builder: NetBuilder,
    layer: int,
    bit: NodeRef,
    y: Sequence[Term],
    y_bias: float = 0.0,
    tag: str | None = None,
) -> NodeRef:
    """Add ``relu(2(bit - 1) + y)``, equal to ``bit * y`` when ``y`` is in ``[0, 2]``.

    ``y`` is the affine form ``y_bias + sum(w * node)``; the constant part is
    folded into the bias.
    """
    return builder.relu(layer, [(bit, 2.0), *y], bias=y_bias - 2.0, nonneg=True, tag=tag)


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps out of range: expected 0 < eps < 1, got {eps}")


@dataclass(frozen=True)
class Ladder:
    bits: list[NodeRef]
    powers: list[NodeRef]  # powers[m - 1] holds truncate(x, n)^m
    last_layer: int


def ladder_counts(n: int, p: int) -> dict:
    return {"depth": n + 1 + 2 * p, "relu": p * (n + 2), "step": n + 1}


def add_ladder(
    builder: NetBuilder,
    source: Sequence[Term],
    n: int,
    p: int,
    first_layer: int = 1,
    source_bias: float = 0.0,
    prefix: str = "",
) -> Ladder:
    """Decoder with ``n + 1`` bits followed by ``p`` multiplication stages."""
    if p < 1:
        raise ValueError("ladder needs at least one stage")
    bits = add_decoder(builder, source, n, first_layer, source_bias, prefix)
    layer = first_layer + n + 1
    powers: list[NodeRef] = []
    for m in range(1, p + 1):
        units = []
        for j, b in enumerate(bits):
            if powers:
                units.append(bit_gate(builder, layer, b, [(powers[-1], 2.0**-j)]))
            else:
                units.append(bit_gate(builder, layer, b, [], y_bias=2.0**-j))
        powers.append(
            builder.relu(layer + 1, [(u, 1.0) for u in units], nonneg=True, tag=f"{prefix}g_{m}")
        )
        layer += 2
    return Ladder(bits, powers, layer - 1)


def build_monomials(p: int, n: int) -> Network:
    """Network tagging ``g_1 .. g_p`` with ``g_m(x) = truncate(x, n)^m``.

    The readout is ``g_p``.
    """
    b = NetBuilder(1)
    lad = add_ladder(b, [(b.input(0), 1.0)], n, p)
    return b.build([(lad.powers[-1], 1.0)])


def square_counts(n: int) -> dict:
    return {"depth": n + 2, "relu": n + 1, "step": n + 1}


def square_bits(eps: float) -> int:
    return math.ceil(math.log2(1.0 / eps)) + 1


def build_square(eps: float, grid: GridSpec | None = None) -> tuple[Network, BuildReport]:
    """Approximate ``x^2`` with one gadget layer over the decoded bits.

    Unit ``i`` multiplies bit ``i`` by ``2^-i * truncate(x, n)``; the readout
    sums the units, giving ``truncate(x, n)^2``.
    """
    _check_eps(eps)
    n = square_bits(eps)
    b = NetBuilder(1)
    bits = add_decoder(b, [(b.input(0), 1.0)], n)
    units = [
        bit_gate(b, n + 2, bi, [(bj, 2.0 ** -(i + j)) for j, bj in enumerate(bits)])
        for i, bi in enumerate(bits)
    ]
    net = b.build([(u, 1.0) for u in units])
    grid = grid or verification_grid_1d(n)
    report = make_report(
        "square",
        net,
        eps,
        2.0 ** -(n - 1),
        lambda pts: pts[:, 0] ** 2,
        grid,
        bits=n,
        expected=square_counts(n),
        extra={"relu_per_bit": 1, "step_per_bit": 1},
    )
    return net, report


def polynomial_bits(p: int, eps: float) -> int:
    return math.ceil(math.log2(p / eps)) + 1


def _degree(coeffs: Sequence[float]) -> int:
    p = len(coeffs) - 1
    while p > 0 and coeffs[p] == 0:
        p -= 1
    return p


def build_polynomial(
    coeffs: Sequence[float], eps: float, grid: GridSpec | None = None, name: str | None = None
) -> tuple[Network, BuildReport]:
    """``sum a_i x^i`` with ``sum_{i>=1} |a_i| <= 1``; ``a_0`` is unrestricted."""
    _check_eps(eps)
    a = [float(c) for c in coeffs]
    p = _degree(a)
    if p < 1:
        raise ValueError("polynomial degree must be at least 1")
    l1 = sum(abs(c) for c in a[1 : p + 1])
    if l1 > 1.0 + L1_SLACK:
        raise ValueError(f"coefficient l1 norm {l1} exceeds 1 (constant term excluded)")
    n = polynomial_bits(p, eps)
    b = NetBuilder(1)
    lad = add_ladder(b, [(b.input(0), 1.0)], n, p)
    net = b.build([(g, a[m]) for m, g in enumerate(lad.powers, start=1)], bias=a[0])
    target = polynomial(a[: p + 1], name)
    report = make_report(
        target.name,
        net,
        eps,
        p / 2.0 ** (n - 1),
        target.evaluate,
        grid or verification_grid_1d(n),
        bits=n,
        degree=p,
        expected=ladder_counts(n, p),
    )
    return net, report


def smooth_degree(eps: float) -> int:
    return math.ceil(math.log2(2.0 / eps))


def smooth_bound(target: ApproxTarget, N: int) -> float:
    """Truncation error plus interpolation remainder for an ``N``-bit, degree-``N`` build."""
    return target.deriv_bound(1) * 2.0**-N + chebyshev.remainder_bound(N, target.deriv_bound(N + 1))


def certify_smooth(target: ApproxTarget, eps: float) -> tuple[int, float]:
    """Degree and guaranteed error of the smooth build, or raise if over budget."""
    if target.dim != 1:
        raise ValueError("smooth builds need a one-dimensional target")
    if target.profile is None:
        raise ValueError(f"target {target.name!r} has no declared derivative bounds")
    N = smooth_degree(eps)
    bound = smooth_bound(target, N)
    if bound > eps:
        raise ValueError(
            f"declared derivative bounds of {target.name!r} give error bound {bound:.3g} "
            f"> eps={eps:.3g} at degree {N}"
        )
    return N, bound


def add_smooth(
    builder: NetBuilder,
    source: Sequence[Term],
    target: ApproxTarget,
    N: int,
    first_layer: int = 1,
    source_bias: float = 0.0,
    prefix: str = "",
    max_degree: int = chebyshev.DEFAULT_MAX_DEGREE,
) -> tuple[list[Term], float, Ladder]:
    """Ladder of degree ``N`` plus the interpolant's coefficients.

    Returns the output affine form ``(terms, bias)`` and the ladder.
    """
    poly = chebyshev.interpolate(target.func, N, max_degree=max_degree)
    lad = add_ladder(builder, source, N, N, first_layer, source_bias, prefix)
    terms = [(g, c) for g, c in zip(lad.powers, poly.coeffs[1:])]
    return terms, poly.coeffs[0], lad


def build_smooth(
    target: ApproxTarget,
    eps: float,
    grid: GridSpec | None = None,
    max_degree: int = chebyshev.DEFAULT_MAX_DEGREE,
) -> tuple[Network, BuildReport]:
    """Interpolate at ``N = ceil(log2(2/eps))`` Chebyshev points and read out
    the monomial coefficients over an ``N``-bit ladder."""
    _check_eps(eps)
    N, bound = certify_smooth(target, eps)
    if N > max_degree:
        raise chebyshev.ConditioningError(
            f"degree {N} for eps={eps} exceeds the conditioning cap {max_degree}"
        )
    b = NetBuilder(1)
    terms, bias, _ = add_smooth(b, [(b.input(0), 1.0)], target, N, max_degree=max_degree)
    net = b.build(terms, bias)
    report = make_report(
        target.name,
        net,
        eps,
        bound,
        target.evaluate,
        grid or verification_grid_1d(N),
        bits=N,
        degree=N,
        expected=ladder_counts(N, N),
    )
    return net, report
