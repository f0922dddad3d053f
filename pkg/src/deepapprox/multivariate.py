"""Multivariate constructions: products of linear forms, multinomials, and
multinomials fed into a univariate cascade.

Every coordinate gets one decoder.  A product stage multiplies the running
product by ``w . truncate(x)`` with one gadget per (coordinate, bit) pair
and an accumulator unit; the accumulator is the stage's value ``g_l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .combinators import RANGE_SLACK, _stage_max, _check_stage_range, add_chain, stage_tolerances, _smooth_targets, CompositionPlan
from .decoder import add_decoder
from .grids import GridSpec, verification_grid_nd
from .network import NetBuilder, Network, NodeRef, Term, forward, node_index
from .report import BuildReport, make_report
from .targets import ApproxTarget
from .univariate import _check_eps, bit_gate

NORM_SLACK = 1e-12
DEFAULT_INDEX_CAP = 10**6

MultiIndex = tuple[int, ...]


def linear_product_bits(p: int, d: int, eps: float) -> int:
    return math.ceil(math.log2(p * d / eps))


def add_product_stages(
    builder: NetBuilder,
    bits: Sequence[Sequence[NodeRef]],
    rows: Sequence[Sequence[float]],
    first_layer: int,
    prefix: str = "",
) -> list[NodeRef]:
    """Accumulators ``g_1 .. g_p`` with ``g_l = prod_{i<=l} rows[i] . truncate(x)``.

    ``bits[k]`` are the decoded bits of coordinate ``k``.  Zero weights get
    no gadgets.
    """
    layer = first_layer
    acc: list[NodeRef] = []
    for l, w in enumerate(rows, start=1):
        terms: list[Term] = []
        for k, wk in enumerate(w):
            if wk == 0.0:
                continue
            for r, b in enumerate(bits[k]):
                if acc:
                    u = bit_gate(builder, layer, b, [(acc[-1], 2.0**-r)])
                else:
                    u = bit_gate(builder, layer, b, [], y_bias=2.0**-r)
                terms.append((u, float(wk)))
        acc.append(builder.relu(layer + 1, terms, nonneg=True, tag=f"{prefix}g_{l}"))
        layer += 2
    return acc


def _check_accumulators(net: Network, grid: GridSpec, refs: Sequence[NodeRef]) -> float:
    """Largest accumulator value; raise with a witness if any leaves ``[0, 1]``."""
    pts = grid.points()
    _, pre, _ = forward(net, pts, keep_pre=True)
    top = 0.0
    for ref in refs:
        v = pre[node_index(net, ref)]
        bad = np.flatnonzero((v < -RANGE_SLACK) | (v > 1.0 + RANGE_SLACK))
        if bad.size:
            i = bad[0]
            raise ValueError(
                f"intermediate product {tuple(ref)} equals {v[i]} at x={pts[i].tolist()}, outside [0, 1]"
            )
        top = max(top, float(v.max()))
    return top


def build_linear_product(
    W: Sequence[Sequence[float]],
    eps: float,
    grid: GridSpec | None = None,
    seed: int = 0,
) -> tuple[Network, BuildReport]:
    """``prod_i (w_i . x)`` for rows ``w_i`` of unit l1 norm."""
    _check_eps(eps)
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.size == 0:
        raise ValueError("need a nonempty p x d weight matrix")
    p, d = W.shape
    norms = np.abs(W).sum(axis=1)
    if np.any(np.abs(norms - 1.0) > NORM_SLACK):
        raise ValueError(f"every row needs l1 norm 1, got {norms.tolist()}")
    n = linear_product_bits(p, d, eps)
    b = NetBuilder(d)
    bits = [add_decoder(b, [(b.input(k), 1.0)], n, prefix=f"x{k}/") for k in range(d)]
    acc = add_product_stages(b, bits, W.tolist(), n + 2)
    net = b.build([(acc[-1], 1.0)])
    grid = grid or verification_grid_nd(d, seed=seed)
    top = _check_accumulators(net, grid, acc)
    nnz = int(np.count_nonzero(W))
    report = make_report(
        "linear_product",
        net,
        eps,
        p * d * 2.0**-n,
        lambda pts: np.prod(pts @ W.T, axis=1),
        grid,
        bits=n,
        degree=p,
        expected={"depth": n + 1 + 2 * p, "relu": nnz * (n + 1) + p, "step": d * (n + 1)},
        extra={"max_product": top},
    )
    return net, report


def enumerate_multi_indices(d: int, p: int, cap: int = DEFAULT_INDEX_CAP) -> list[MultiIndex]:
    """All exponent vectors of length ``d`` with total degree at most ``p``, in lexicographic order."""
    if d < 1 or p < 0:
        raise ValueError("need d >= 1 and p >= 0")
    total = math.comb(p + d, d)
    if total > cap:
        raise ValueError(f"{total} multi-indices exceed the cap {cap}")

    def gen(dim, budget):
        if dim == 1:
            for a in range(budget + 1):
                yield (a,)
            return
        for a in range(budget + 1):
            for rest in gen(dim - 1, budget - a):
                yield (a,) + rest

    return list(gen(d, p))


def multinomial_size_formula(d: int, p: int, eps: float) -> float:
    """``p^2 * C(p + d - 1, d - 1) * log2(p d / eps)``."""
    return p * p * math.comb(p + d - 1, d - 1) * math.log2(p * d / eps)


def _normalise_terms(coeffs) -> dict[MultiIndex, float]:
    if isinstance(coeffs, Mapping):
        items = coeffs.items()
    else:
        items = ((rec["alpha"], rec["coeff"]) for rec in coeffs)
    out: dict[MultiIndex, float] = {}
    for alpha, c in items:
        alpha = tuple(int(a) for a in alpha)
        if any(a < 0 for a in alpha):
            raise ValueError(f"negative exponent in {alpha}")
        out[alpha] = out.get(alpha, 0.0) + float(c)
    dims = {len(a) for a in out}
    if len(dims) != 1:
        raise ValueError("all multi-indices need the same length")
    return out


def multinomial_eval(terms: Mapping[MultiIndex, float], pts: np.ndarray) -> np.ndarray:
    out = np.zeros(len(pts))
    for alpha, c in terms.items():
        out = out + c * np.prod(pts ** np.array(alpha), axis=1)
    return out


@dataclass
class MultinomialPart:
    terms: list[Term]
    bias: float
    last_layer: int
    accumulators: list[NodeRef]
    bits: int
    degree: int
    bound: float
    counts: dict


def multinomial_bits(p: int, d: int, eps: float) -> int:
    return math.ceil(math.log2(max(p, 1) * d / eps))


def add_multinomial(
    builder: NetBuilder, terms: Mapping[MultiIndex, float], eps: float, cap: int = DEFAULT_INDEX_CAP
) -> MultinomialPart:
    """Shared decoders and one coordinate-picking product per monomial."""
    if len(terms) > cap:
        raise ValueError(f"{len(terms)} terms exceed the cap {cap}")
    l1 = sum(abs(c) for c in terms.values())
    if l1 > 1.0 + NORM_SLACK:
        raise ValueError(f"coefficient l1 norm {l1} exceeds 1")
    d = builder.input_dim
    p = max(sum(a) for a in terms)
    n = multinomial_bits(p, d, eps)
    bits = [add_decoder(builder, [(builder.input(k), 1.0)], n, prefix=f"x{k}/") for k in range(d)]
    out: list[Term] = []
    bias = 0.0
    acc_all: list[NodeRef] = []
    relu = 0
    for t, (alpha, c) in enumerate(sorted(terms.items())):
        order = sum(alpha)
        if order == 0:
            bias += c
        elif order == 1:
            k = alpha.index(1)
            out.extend((bk, c * 2.0**-r) for r, bk in enumerate(bits[k]))
        else:
            picks = [k for k, a in enumerate(alpha) for _ in range(a)]
            rows = [[1.0 if j == k else 0.0 for j in range(d)] for k in picks]
            acc = add_product_stages(builder, bits, rows, n + 2, prefix=f"m{t}/")
            acc_all.extend(acc)
            out.append((acc[-1], c))
            relu += order * (n + 2)
    bound = sum(abs(c) * sum(a) * d for a, c in terms.items()) * 2.0**-n
    depth = n + 1 + 2 * p if p >= 2 else n + 1
    return MultinomialPart(
        out, bias, depth, acc_all, n, p, bound, {"depth": depth, "relu": relu, "step": d * (n + 1)}
    )


def build_multinomial(
    coeffs,
    eps: float,
    grid: GridSpec | None = None,
    seed: int = 0,
    cap: int = DEFAULT_INDEX_CAP,
) -> tuple[Network, BuildReport]:
    """``sum C_alpha x^alpha`` with ``sum |C_alpha| <= 1``.

    ``coeffs`` maps exponent tuples to coefficients, or is a list of
    ``{"alpha": [...], "coeff": c}`` records.
    """
    _check_eps(eps)
    terms = _normalise_terms(coeffs)
    d = len(next(iter(terms)))
    b = NetBuilder(d)
    part = add_multinomial(b, terms, eps, cap)
    net = b.build(part.terms, part.bias)
    grid = grid or verification_grid_nd(d, seed=seed)
    top = _check_accumulators(net, grid, part.accumulators) if part.accumulators else 0.0
    report = make_report(
        "multinomial",
        net,
        eps,
        part.bound,
        lambda pts: multinomial_eval(terms, pts),
        grid,
        bits=part.bits,
        degree=part.degree,
        expected=part.counts,
        extra={
            "max_product": top,
            "size_formula": multinomial_size_formula(d, max(part.degree, 1), eps),
        },
    )
    return net, report


def build_poly_then_chain(
    coeffs,
    chain: Sequence[ApproxTarget],
    eps: float,
    grid: GridSpec | None = None,
    seed: int = 0,
) -> tuple[Network, BuildReport]:
    """``h_1(...h_k(l(x)))`` for a multinomial ``l`` with range in ``[0, 1]``.

    ``l`` is treated as the innermost stage of the cascade and gets the
    smallest tolerance; its output is shrunk like any other stage.
    """
    if not chain:
        return build_multinomial(coeffs, eps, grid, seed)
    _check_eps(eps)
    terms = _normalise_terms(coeffs)
    d = len(next(iter(terms)))
    _smooth_targets(chain)
    grid = grid or verification_grid_nd(d, seed=seed)
    pts = grid.points()
    inner_vals = multinomial_eval(terms, pts)
    bad = np.flatnonzero((inner_vals < -RANGE_SLACK) | (inner_vals > 1.0 + RANGE_SLACK))
    if bad.size:
        i = bad[0]
        raise ValueError(
            f"inner polynomial equals {inner_vals[i]} at x={pts[i].tolist()}, outside [0, 1]"
        )
    tol = stage_tolerances([h.deriv_bound(1) for h in chain] + [1.0], eps)
    t_inner = tol[-1]
    b = NetBuilder(d)
    part = add_multinomial(b, terms, t_inner)
    shrink = 1.0 / (1.0 + t_inner)
    source = [(r, w * shrink) for r, w in part.terms]
    plan = CompositionPlan(tuple(chain), tol[:-1])
    res = add_chain(b, source, part.bias * shrink, part.last_layer + 1, plan, part.bound + t_inner)
    net = b.build(res.terms, res.bias)
    maxima = _stage_max(net, grid, [(source, part.bias * shrink)] + res.stage_outputs)
    _check_stage_range(maxima, len(chain) + 1)
    if part.accumulators:
        _check_accumulators(net, grid, part.accumulators)

    def func(p):
        v = multinomial_eval(terms, p)
        for h in reversed(chain):
            v = h.func(v)
        return v

    report = make_report(
        "∘".join(h.name for h in chain) + "∘multinomial",
        net,
        eps,
        res.bound,
        func,
        grid,
        bits=part.bits,
        degree=max(res.degrees),
        extra={"stage_max": maxima, "tolerances": list(tol)},
    )
    return net, report
