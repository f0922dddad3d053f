"""Lower bounds, break-point detection, shallow baselines and the
deep-versus-shallow size experiment."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .grids import GridSpec
from .network import NetBuilder, Network, eval_batch
from .report import BOUND_SLACK, BuildReport, make_report
from .targets import ApproxTarget
from .univariate import build_polynomial, build_smooth

JUMP_TOL = 1e-7
KINK_TOL = 1e-5
BISECT_STEPS = 40
SHALLOW_CAP = 10**7


@dataclass(frozen=True)
class PieceScan:
    locations: tuple[float, ...]
    kinds: tuple[str, ...]  # "jump" or "kink"
    resolution: int
    jump_tol: float
    kink_tol: float

    def __len__(self):
        return len(self.locations)


def count_breakpoints_1d(
    net: Network,
    resolution: int = 20,
    jump_tol: float = JUMP_TOL,
    kink_tol: float = KINK_TOL,
    steps: int = BISECT_STEPS,
) -> PieceScan:
    """Locate jumps and slope kinks of a 1-D network strictly inside ``(0, 1)``.

    Secant slopes on ``2^resolution`` intervals are compared at every
    interior grid point.  Runs of consecutive flagged points form a suspect
    region bounded by clean slopes ``sL`` and ``sR``.  The region is a jump
    when its net change cannot be explained by any continuous path with
    those slopes, else a kink; either is then localised by bisection.
    """
    if net.input_dim != 1:
        raise ValueError("break-point scan needs a one-dimensional network")
    K = 2**resolution
    h = 1.0 / K
    x = np.arange(K + 1) * h
    f = eval_batch(net, x)
    s = np.diff(f) / h
    ds = np.abs(np.diff(s))
    scale = np.maximum(1.0, np.maximum(np.abs(s[:-1]), np.abs(s[1:])))
    flagged = np.flatnonzero(ds > kink_tol * scale) + 1  # interior point indices

    # suspect regions: runs of consecutive flagged points
    runs = np.split(flagged, np.flatnonzero(np.diff(flagged) != 1) + 1) if flagged.size else []
    runs = [r for r in runs if r[0] > 1 and r[-1] < K - 1]  # skip runs touching 0 or 1
    first = np.array([r[0] for r in runs], dtype=np.int64)
    last = np.array([r[-1] for r in runs], dtype=np.int64)
    sL, sR = s[first - 1], s[last]
    a, b = x[first], x[last]
    fa, fb = f[first], f[last]
    dev = np.minimum(np.abs(fb - fa - sL * (b - a)), np.abs(fb - fa - sR * (b - a)))
    jump = dev > jump_tol + (b - a) * np.abs(sR - sL)
    a0, fa0, b0 = a.copy(), fa.copy(), b.copy()
    line_tol = 1e-12 * np.maximum(1.0, np.abs(fa0))
    # bisect all regions together, one batched evaluation per step
    for _ in range(steps):
        m = 0.5 * (a + b)
        live = (m > a) & (m < b)
        if not live.any():
            break
        fm = eval_batch(net, m)
        # jumps: keep the half whose change the clean slope explains least
        left_jump = np.abs(fm - fa - sL * (m - a)) >= np.abs(fb - fm - sR * (b - m))
        # kinks: move right while the midpoint is still on the left line
        on_left = np.abs(fm - fa0 - sL * (m - a0)) <= line_tol
        go_left = np.where(jump, left_jump, ~on_left) & live
        go_right = ~go_left & live
        b, fb = np.where(go_left, m, b), np.where(go_left, fm, fb)
        a, fa = np.where(go_right, m, a), np.where(go_right, fm, fa)
    with np.errstate(divide="ignore", invalid="ignore"):
        # both sides of a kink are straight, so their intersection is sharper
        cross = (f[last] - fa0 - sR * b0 + sL * a0) / (sL - sR)
    sharp = np.isfinite(cross) & (cross >= a0) & (cross <= b0)
    kink_loc = np.where(sharp, cross, 0.5 * (a + b))
    locs = np.where(jump, b, kink_loc).tolist()
    kinds = ["jump" if j else "kink" for j in jump]
    order = np.argsort(locs, kind="stable")
    return PieceScan(
        tuple(float(locs[k]) for k in order),
        tuple(kinds[k] for k in order),
        resolution,
        jump_tol,
        kink_tol,
    )


def telgarsky_capacity(N: float, L: int) -> float:
    """``(N / L)^L``; returns ``inf`` when the value overflows a double."""
    if L < 1:
        raise ValueError("depth must be at least 1")
    if N < L:
        raise ValueError("size must be at least the depth")
    try:
        return float((N / L) ** L)
    except OverflowError:
        return math.inf


class BreakpointRequirement(NamedTuple):
    count: int
    vacuous: bool  # the four probe points do not fit inside [0, 1]


def required_breakpoints(mu: float, eps: float, rho: float = 2.0) -> BreakpointRequirement:
    """``ceil(sqrt(mu / (rho eps)) / 4)`` break points needed for error ``eps``."""
    if rho <= 1:
        raise ValueError("rho must exceed 1")
    if mu <= 0 or eps <= 0:
        raise ValueError("mu and eps must be positive")
    needed = math.ceil(0.25 * math.sqrt(mu / (rho * eps)))
    return BreakpointRequirement(needed, 6.0 * math.sqrt(rho * eps / mu) > 1.0)


class SizeBound(NamedTuple):
    value: float
    vacuous: bool


def size_lower_bound(mu: float, eps: float, L: int | None = None) -> SizeBound:
    """Minimum size for error ``eps`` on a ``mu``-strongly convex target.

    With depth ``L`` this is ``L (mu / 16 eps)^(1 / 2L)``; without it the
    depth-free ``log2(mu / 16 eps)``.  For ``eps >= mu / 16`` the bound is
    vacuous and reported as ``0``.
    """
    if mu <= 0 or eps <= 0:
        raise ValueError("mu and eps must be positive")
    ratio = mu / (16.0 * eps)
    if ratio <= 1.0:
        return SizeBound(0.0, True)
    if L is None:
        return SizeBound(math.log2(ratio), False)
    if L < 1:
        raise ValueError("depth must be at least 1")
    return SizeBound(L * ratio ** (1.0 / (2 * L)), False)


# ---------------------------------------------------------------------------
# shallow baseline


def _interp_error(target: ApproxTarget, K: int, probe: np.ndarray) -> float:
    knots = np.arange(K + 1) / K
    vals = target.evaluate(knots.reshape(-1, 1))
    mids = (np.arange(K) + 0.5) / K
    x = np.concatenate([probe, mids])
    return float(np.max(np.abs(np.interp(x, knots, vals) - target.evaluate(x.reshape(-1, 1)))))


def shallow_network(target: ApproxTarget, K: int) -> Network:
    """``f(0) + sum_k c_k relu(x - k/K)``: the interpolant at ``K + 1`` knots."""
    knots = np.arange(K + 1) / K
    vals = target.evaluate(knots.reshape(-1, 1))
    slopes = np.diff(vals) * K
    change = np.diff(slopes, prepend=0.0)
    b = NetBuilder(1)
    units = [b.relu(1, [(b.input(0), 1.0)], bias=-k / K) for k in range(K)]
    return b.build(list(zip(units, change.tolist())), float(vals[0]))


def build_shallow_baseline(
    target: ApproxTarget,
    eps: float,
    grid: GridSpec | None = None,
    cap: int = SHALLOW_CAP,
) -> tuple[Network, BuildReport]:
    """Smallest equispaced piecewise-linear interpolant within ``eps``.

    ``K`` is found by doubling and then bisection; errors are probed on a
    uniform grid plus every interval midpoint.
    """
    if target.dim != 1:
        raise ValueError("shallow baseline is one-dimensional")
    if eps <= 0:
        raise ValueError("eps must be positive")
    grid = grid or GridSpec("uniform")
    probe = grid.points()[:, 0]
    hi = 1
    while _interp_error(target, hi, probe) > eps:
        hi *= 2
        if hi > cap:
            raise ValueError(f"shallow baseline needs more than {cap} pieces for eps={eps}")
    lo = hi // 2  # fails, or 0 when K = 1 already works
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _interp_error(target, mid, probe) <= eps:
            hi = mid
        else:
            lo = mid
    net = shallow_network(target, hi)
    report = make_report(
        f"shallow[{target.name}]", net, eps, eps, target.evaluate, grid, extra={"pieces": hi}
    )
    return net, report


# ---------------------------------------------------------------------------
# gap experiment


@dataclass
class GapRow:
    epsilon: float
    nd: int
    ld: int
    ns: int
    ls: int
    deep_error: float
    shallow_error: float
    deep_breakpoints: int
    required_breakpoints: int
    vacuous: bool
    deep_report: BuildReport = field(repr=False)
    shallow_report: BuildReport = field(repr=False)


@dataclass
class GapResult:
    rows: list[GapRow]
    c: float  # calibrated constant in nd <= c log2(1/eps)^2
    verdicts: dict[str, bool]
    per_row: list[dict[str, bool]]

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())


def default_deep_builder(target: ApproxTarget) -> Callable[[ApproxTarget, float], tuple[Network, BuildReport]]:
    """Polynomial ladder for polynomial targets within the l1 budget, else the smooth build."""
    if target.coeffs is not None and sum(abs(c) for c in target.coeffs[1:]) <= 1.0:
        return lambda t, eps: build_polynomial(t.coeffs, eps, name=t.name)
    return build_smooth


def gap_experiment(
    target: ApproxTarget,
    eps_list: Sequence[float],
    deep: Callable[[ApproxTarget, float], tuple[Network, BuildReport]] | None = None,
    rho: float = 2.0,
    resolution: int = 20,
    workers: int = 1,
) -> GapResult:
    """Build deep and shallow nets for each ``eps`` and test the size relations.

    Verdicts
    ``a``: deep size stays below ``c log2(1/eps)^2`` with ``c`` calibrated
    on the coarser half of the sweep; ``b``: shallow size meets the depth-1
    lower bound; ``c``: the deep net has at least the required break points
    whenever it is within ``eps``; ``d``: deep size meets the depth-free
    lower bound.
    """
    if not eps_list:
        raise ValueError("empty eps list")
    if target.mu is None:
        raise ValueError(f"target {target.name!r} declares no strong-convexity parameter")
    deep = deep or default_deep_builder(target)
    mu = target.mu

    def row(eps: float) -> GapRow:
        try:
            dnet, drep = deep(target, eps)
            snet, srep = build_shallow_baseline(target, eps)
        except Exception as exc:
            raise RuntimeError(f"build failed at eps={eps}: {exc}") from exc
        req = required_breakpoints(mu, eps, rho)
        return GapRow(
            eps,
            drep.total,
            drep.depth,
            srep.total,
            srep.depth,
            drep.measured,
            srep.measured,
            len(count_breakpoints_1d(dnet, resolution)),
            req.count,
            req.vacuous,
            drep,
            srep,
        )

    eps_sorted = sorted(eps_list, reverse=True)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(row, eps_sorted))
    else:
        rows = [row(e) for e in eps_sorted]

    logs = [math.log2(1.0 / r.epsilon) ** 2 for r in rows]
    calib = max(1, len(rows) // 2)
    c = max(r.nd / lg for r, lg in zip(rows[:calib], logs[:calib]))
    per_row = []
    for r, lg in zip(rows, logs):
        within = r.deep_error <= r.epsilon + BOUND_SLACK
        per_row.append(
            {
                "a": r.nd <= c * lg + 1e-9,
                "b": r.ns >= size_lower_bound(mu, r.epsilon, 1).value,
                "c": (not within) or r.deep_breakpoints >= r.required_breakpoints,
                "d": r.nd >= size_lower_bound(mu, r.epsilon).value,
            }
        )
    verdicts = {k: all(v[k] for v in per_row) for k in "abcd"}
    return GapResult(rows, c, verdicts, per_row)
