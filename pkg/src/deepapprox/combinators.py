"""Sums, products and compositions of univariate targets, plus the ridge
and Gaussian constructions.

Composition cascades stage networks: each stage's output affine form,
shrunk by ``1 / (1 + t)`` where ``t`` is the stage tolerance, becomes the
source of the next stage's decoder.  Stage ``m`` (counted from the
outermost function) gets tolerance ``eps / (3^m * L_1 ... L_{m-1})`` where
``L_i`` bounds the slope of stage ``i``.  A shrunk stage deviates from its
target by at most ``2t``, so the cascade error is at most
``sum_m 2 eps / 3^m < eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import chebyshev
from .decoder import add_decoder
from .grids import GridSpec, verification_grid_1d, verification_grid_nd
from .network import NetBuilder, Network, Term, affine_values, forward
from .report import BuildReport, make_report
from .targets import ApproxTarget, exp_decay
from .univariate import (
    _check_eps,
    add_ladder,
    add_smooth,
    bit_gate,
    certify_smooth,
    smooth_degree,
    square_bits,
)

NORM_SLACK = 1e-12
RANGE_SLACK = 1e-12


def _smooth_targets(targets: Sequence[ApproxTarget]) -> None:
    for i, h in enumerate(targets):
        if h.dim != 1 or h.profile is None:
            raise ValueError(f"target {i} ({h.name!r}) needs declared derivative bounds in 1-D")


def combine_sum(
    targets: Sequence[ApproxTarget],
    beta: Sequence[float],
    eps: float,
    grid: GridSpec | None = None,
) -> tuple[Network, BuildReport]:
    """``sum beta_i h_i`` over one ladder; only the readout depends on ``k``."""
    _check_eps(eps)
    if len(targets) != len(beta) or not targets:
        raise ValueError("need one weight per target and at least one target")
    norm = sum(abs(b) for b in beta)
    if abs(norm - 1.0) > NORM_SLACK:
        raise ValueError(f"weights must have l1 norm 1, got {norm}")
    _smooth_targets(targets)
    N = smooth_degree(eps)
    bounds = [certify_smooth(h, eps)[1] for h in targets]
    coeffs = np.zeros(N + 1)
    for h, bw in zip(targets, beta):
        coeffs = coeffs + bw * np.array(chebyshev.interpolate(h.func, N).coeffs)
    b = NetBuilder(1)
    lad = add_ladder(b, [(b.input(0), 1.0)], N, N)
    net = b.build([(g, float(c)) for g, c in zip(lad.powers, coeffs[1:])], float(coeffs[0]))

    def func(pts):
        return sum(bw * h.evaluate(pts) for h, bw in zip(targets, beta))

    name = "+".join(f"{bw!r}*{h.name}" for h, bw in zip(targets, beta))
    report = make_report(
        name,
        net,
        eps,
        sum(abs(bw) * bd for bw, bd in zip(beta, bounds)),
        func,
        grid or verification_grid_1d(N),
        bits=N,
        degree=N,
    )
    return net, report


def product_degree(k: int, eps: float) -> int:
    return math.ceil(4 * k * math.log2(4 * k) + 4 * k + 2 * math.log2(2.0 / eps))


def product_remainder(k: int, N: int) -> float:
    """Remainder bound ``2^(2k + k log2 N - N)`` for a ``k``-fold product."""
    return 2.0 ** (2 * k + k * math.log2(N) - N)


def combine_product(
    targets: Sequence[ApproxTarget],
    eps: float,
    grid: GridSpec | None = None,
    max_degree: int = chebyshev.DEFAULT_MAX_DEGREE,
) -> tuple[Network, BuildReport]:
    """Interpolate ``prod h_i`` once at the product degree and build its ladder.

    Each factor must satisfy ``sup |h^(n)| <= n!`` up to ``n = N + 1``.
    """
    _check_eps(eps)
    k = len(targets)
    if k < 1:
        raise ValueError("need at least one factor")
    _smooth_targets(targets)
    N = product_degree(k, eps)
    for i, h in enumerate(targets):
        if not h.factorial_certified(N + 1):
            raise ValueError(f"factor {i} ({h.name!r}) is not certified with |h^(n)| <= n!")
    rem = product_remainder(k, N)
    if rem > eps / 2:
        raise ValueError(f"remainder bound {rem:.3g} exceeds eps/2 at degree {N}")
    if N > max_degree:
        raise chebyshev.ConditioningError(
            f"product degree N={N} for k={k}, eps={eps} exceeds the conditioning cap {max_degree}"
        )

    def prod(x):
        out = 1
        for h in targets:
            out = out * h.func(x)
        return out

    poly = chebyshev.interpolate(prod, N, max_degree=max_degree)
    b = NetBuilder(1)
    lad = add_ladder(b, [(b.input(0), 1.0)], N, N)
    net = b.build(list(zip(lad.powers, poly.coeffs[1:])), poly.coeffs[0])

    def func(pts):
        out = np.ones(len(pts))
        for h in targets:
            out = out * h.evaluate(pts)
        return out

    report = make_report(
        "*".join(h.name for h in targets),
        net,
        eps,
        k * 2.0**-N + rem,
        func,
        grid or verification_grid_1d(N),
        bits=N,
        degree=N,
    )
    return net, report


# ---------------------------------------------------------------------------
# composition


@dataclass(frozen=True)
class CompositionPlan:
    """Stages listed outermost first: the function is ``h_1(h_2(...h_k(x)))``."""

    stages: tuple[ApproxTarget, ...]
    tolerances: tuple[float, ...]

    @property
    def shrink(self) -> tuple[float, ...]:
        return tuple(1.0 / (1.0 + t) for t in self.tolerances)


def stage_tolerances(slopes: Sequence[float], eps: float) -> tuple[float, ...]:
    """Tolerances for stages with the given slope bounds, outermost first."""
    out = []
    lip = 1.0
    for m, slope in enumerate(slopes, start=1):
        out.append(eps / (3.0**m * lip))
        lip *= max(slope, 1.0)
    return tuple(out)


def plan_composition(stages: Sequence[ApproxTarget], eps: float) -> CompositionPlan:
    if not stages:
        raise ValueError("composition needs at least one stage")
    _smooth_targets(stages)
    slopes = [h.deriv_bound(1) for h in stages]
    return CompositionPlan(tuple(stages), stage_tolerances(slopes, eps))


@dataclass
class ChainResult:
    terms: list[Term]
    bias: float
    last_layer: int
    stage_outputs: list[tuple[list[Term], float]]  # shrunk outputs, innermost first
    bound: float
    degrees: list[int]


def add_chain(
    builder: NetBuilder,
    source: Sequence[Term],
    source_bias: float,
    first_layer: int,
    plan: CompositionPlan,
    inner_error: float = 0.0,
) -> ChainResult:
    """Cascade the plan's stages on top of an affine source in ``[0, 1]``.

    ``inner_error`` is the deviation of the source from its ideal value; it
    is propagated through the stage slopes into the returned bound.
    """
    k = len(plan.stages)
    terms, bias = list(source), source_bias
    layer = first_layer
    err = inner_error
    outputs, degrees = [], []
    for m in range(k, 0, -1):
        h, t, s = plan.stages[m - 1], plan.tolerances[m - 1], plan.shrink[m - 1]
        try:
            N, stage_bound = certify_smooth(h, t)
        except ValueError as exc:
            raise ValueError(f"stage {m} ({h.name}): {exc}") from exc
        out_terms, out_bias, lad = add_smooth(
            builder, terms, h, N, layer, bias, prefix=f"s{m}/"
        )
        terms = [(r, w * s) for r, w in out_terms]
        bias = out_bias * s
        outputs.append((terms, bias))
        degrees.append(N)
        layer = lad.last_layer + 1
        # shrinking by 1/(1+t) moves a value within [0, 1 + t] by at most t
        err = h.deriv_bound(1) * err + stage_bound + t
    return ChainResult(terms, bias, layer - 1, outputs, err, degrees)


def _stage_max(net: Network, grid: GridSpec, outputs) -> list[float]:
    values, _, _ = forward(net, grid.points())
    return [float(np.max(affine_values(net, values, t, b))) for t, b in outputs]


def _check_stage_range(maxima: Sequence[float], k: int) -> None:
    for i, top in enumerate(maxima):
        if top > 1.0 + RANGE_SLACK:
            raise ValueError(f"stage {k - i} output reaches {top} > 1 after shrinking")


def compose(
    plan: CompositionPlan | Sequence[ApproxTarget],
    eps: float,
    grid: GridSpec | None = None,
) -> tuple[Network, BuildReport]:
    _check_eps(eps)
    if not isinstance(plan, CompositionPlan):
        plan = plan_composition(plan, eps)
    b = NetBuilder(1)
    chain = add_chain(b, [(b.input(0), 1.0)], 0.0, 1, plan)
    net = b.build(chain.terms, chain.bias)
    grid = grid or verification_grid_1d(chain.degrees[0])
    maxima = _stage_max(net, grid, chain.stage_outputs)
    _check_stage_range(maxima, len(plan.stages))

    def func(pts):
        v = pts[:, 0]
        for h in reversed(plan.stages):
            v = h.func(v)
        return v

    report = make_report(
        "∘".join(h.name for h in plan.stages),
        net,
        eps,
        chain.bound,
        func,
        grid,
        degree=max(chain.degrees),
        extra={"stage_max": maxima, "tolerances": list(plan.tolerances), "degrees": chain.degrees},
    )
    return net, report


# ---------------------------------------------------------------------------
# ridge and Gaussian


def build_ridge(
    a: Sequence[float],
    g: ApproxTarget,
    eps: float,
    grid: GridSpec | None = None,
    seed: int = 0,
) -> tuple[Network, BuildReport]:
    """``g(a . x)`` for nonnegative ``a`` with unit l1 norm."""
    _check_eps(eps)
    a = [float(v) for v in a]
    if any(v < 0 for v in a):
        raise ValueError("ridge direction must be nonnegative")
    if abs(sum(a) - 1.0) > NORM_SLACK:
        raise ValueError(f"ridge direction must have l1 norm 1, got {sum(a)}")
    N, bound = certify_smooth(g, eps)
    d = len(a)
    b = NetBuilder(d)
    source = [(b.input(k), w) for k, w in enumerate(a) if w != 0.0]
    terms, bias, _ = add_smooth(b, source, g, N)
    net = b.build(terms, bias)
    direction = np.array(a)
    report = make_report(
        f"ridge[{g.name}]",
        net,
        eps,
        bound,
        lambda pts: g.func(pts @ direction),
        grid or verification_grid_nd(d, seed=seed),
        bits=N,
        degree=N,
    )
    return net, report


def gaussian_outer(d: int, eps: float) -> tuple[int, int]:
    """Bit count and degree of the outer ``u -> exp(-d u)`` stage."""
    n = math.ceil(math.log2(4 * d / eps))
    p = 1
    while chebyshev.remainder_bound(p, float(d) ** (p + 1)) > eps / 4:
        p += 1
    return n, p


def build_gaussian(
    d: int,
    eps: float,
    grid: GridSpec | None = None,
    seed: int = 0,
    max_degree: int = chebyshev.DEFAULT_MAX_DEGREE,
) -> tuple[Network, BuildReport]:
    """``exp(-|x|^2 / 2)`` on ``[0, 1]^d``.

    Per-coordinate square nets within ``eps/d`` produce ``u ~ |x|^2 / (2d)``;
    an outer ladder approximates ``exp(-d u)`` within ``eps/2``.
    """
    _check_eps(eps)
    if d < 1:
        raise ValueError("dimension must be positive")
    n_in = square_bits(eps / d)
    b = NetBuilder(d)
    u_terms: list[Term] = []
    for k in range(d):
        bits = add_decoder(b, [(b.input(k), 1.0)], n_in, prefix=f"x{k}/")
        for i, bi in enumerate(bits):
            y = [(bj, 2.0 ** -(i + j)) for j, bj in enumerate(bits)]
            u_terms.append((bit_gate(b, n_in + 2, bi, y), 1.0 / (2 * d)))
    n_out, p = gaussian_outer(d, eps)
    if p > max_degree:
        raise chebyshev.ConditioningError(
            f"outer degree {p} exceeds the conditioning cap {max_degree}"
        )
    outer = exp_decay(float(d))
    poly = chebyshev.interpolate(outer.func, p, max_degree=max_degree)
    lad = add_ladder(b, u_terms, n_out, p, first_layer=n_in + 3, prefix="u/")
    net = b.build(list(zip(lad.powers, poly.coeffs[1:])), poly.coeffs[0])
    inner = d * d * 2.0 ** -(n_in - 1) / (2 * d)
    bound = inner + d * 2.0**-n_out + chebyshev.remainder_bound(p, float(d) ** (p + 1))
    report = make_report(
        f"gaussian[d={d}]",
        net,
        eps,
        bound,
        lambda pts: np.exp(-0.5 * np.sum(pts * pts, axis=1)),
        grid or verification_grid_nd(d, seed=seed),
        bits=n_out,
        degree=p,
        extra={"inner_bits": n_in},
    )
    return net, report
