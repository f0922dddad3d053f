import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepapprox.chebyshev import ConditioningError
from deepapprox.grids import GridSpec, verification_grid_1d
from deepapprox.network import NetBuilder, count, eval, eval_batch, tagged_values
from deepapprox.targets import exp_shift, half_sin, polynomial, square, uncertified
from deepapprox.univariate import (
    bit_gate,
    build_monomials,
    build_polynomial,
    build_smooth,
    build_square,
    gate_value,
    ladder_counts,
)

from oracles import exact_truncate


def gate_net():
    b = NetBuilder(2)
    u = bit_gate(b, 1, b.input(0), [(b.input(1), 1.0)])
    return b.build([(u, 1.0)])


@pytest.mark.parametrize("bit, y, want", [(1, 0.75, 0.75), (0, 2.0, 0.0), (0, 1.3, 0.0)])
def test_gate_examples(bit, y, want):
    assert gate_value(bit, y) == want
    assert eval(gate_net(), [bit, y]) == want


def test_gate_identity_sampled():
    rng = np.random.default_rng(11)
    ys = np.concatenate([rng.uniform(0, 2, 10_000), [0.0, 2.0, np.nextafter(2.0, 0), 5e-324]])
    pts = np.array([(b, y) for b in (0.0, 1.0) for y in ys])
    assert np.array_equal(eval_batch(gate_net(), pts), pts[:, 0] * pts[:, 1])


@given(st.sampled_from([0.0, 1.0]), st.floats(0, 2))
def test_gate_identity_property(bit, y):
    assert gate_value(bit, y) == bit * y


def test_square_examples():
    net, rep = build_square(0.25)
    assert rep.bits == 3
    assert eval(net, [0.5]) == 0.25
    net, rep = build_square(2.0**-6)
    out = eval(net, [0.7])
    t = float(exact_truncate(0.7, rep.bits))
    assert out == t * t
    assert abs(0.49 - out) <= 2.0 ** -(rep.bits - 1)
    assert rep.passed and rep.counts_match


@pytest.mark.parametrize("k", range(1, 13))
def test_square_within_bound(k):
    net, rep = build_square(2.0**-k)
    assert rep.bound == 2.0 ** -(rep.bits - 1) <= 2.0**-k
    assert rep.measured <= rep.bound + 1e-12
    assert rep.counts_match


def test_square_rejects_eps():
    for eps in (0.0, 1.0, 1.5, -0.1):
        with pytest.raises(ValueError, match="eps"):
            build_square(eps)


def test_monomials_examples():
    net = build_monomials(3, 1)
    assert eval(net, [0.5]) == 0.125
    net = build_monomials(4, 6)
    assert eval(net, [0.7]) == 0.6875**4


def test_monomials_p2_matches_square_gadget():
    sq, rep = build_square(2.0**-5)
    mono = build_monomials(2, rep.bits)
    pts = verification_grid_1d(rep.bits).points()
    assert np.max(np.abs(eval_batch(mono, pts) - eval_batch(sq, pts))) <= 1e-15


@pytest.mark.parametrize("p, n", [(1, 0), (3, 5), (6, 9), (10, 12)])
def test_stage_soundness_and_counts(p, n):
    net = build_monomials(p, n)
    pts = GridSpec("dyadic", 20_000, level=min(n + 1, 16)).points()
    names = [f"g_{m}" for m in range(1, p + 1)]
    g = tagged_values(net, pts, names)
    t = np.floor(pts[:, 0] * 2.0**n) / 2.0**n
    assert np.max(np.abs(g["g_1"] - t)) <= 1e-12
    for m in range(1, p):
        assert np.max(np.abs(g[f"g_{m + 1}"] - g[f"g_{m}"] * t)) <= 1e-12
    c = count(net)
    want = ladder_counts(n, p)
    assert (c.depth, c.relu_count, c.step_count) == (want["depth"], want["relu"], want["step"])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10), st.floats(0, 1))
def test_monomials_equal_truncated_power(p, n, x):
    t = exact_truncate(x, n)
    assert abs(eval(build_monomials(p, n), [x]) - float(t**p)) <= 1e-12


def test_polynomial_identity():
    for k in (2, 5, 9):
        net, rep = build_polynomial([0.0, 1.0], 2.0**-k)
        xs = np.linspace(0, 1, 4097)
        err = xs - eval_batch(net, xs)
        assert np.all(err >= 0) and np.all(err <= 2.0**-rep.bits)


def test_polynomial_half_half():
    eps = 2.0**-5
    net, rep = build_polynomial([0.0, 0.5, 0.5], eps)
    n = rep.bits
    assert rep.measured <= 2 / 2.0 ** (n - 1)
    xs = np.linspace(0, 1, 10_001)
    t = np.floor(xs * 2.0**n) / 2.0**n
    assert np.max(np.abs(eval_batch(net, xs) - (0.5 * t + 0.5 * t * t))) <= 1e-12
    assert rep.passed and rep.counts_match


def test_polynomial_counts_scale_with_degree():
    for p in range(1, 6):
        a = [0.0] * p + [1.0]
        _, rep = build_polynomial(a, 2.0**-8)
        n = rep.bits
        assert rep.step == n + 1
        assert rep.relu == p * (n + 2)


def test_polynomial_constant_term_unconstrained():
    net, rep = build_polynomial([7.0, -0.25, 0.75], 2.0**-6)
    assert rep.passed
    assert eval(net, [0.0]) == 7.0


def test_polynomial_rejects_l1():
    with pytest.raises(ValueError, match="l1"):
        build_polynomial([0.0, 0.8, 0.3], 0.1)
    with pytest.raises(ValueError):
        build_polynomial([3.0], 0.1)


def test_smooth_square():
    net, rep = build_smooth(square(), 2.0**-4)
    assert rep.measured <= 2.0**-4
    assert rep.passed and rep.counts_match


@pytest.mark.parametrize("k", [4, 8, 12, 16])
def test_smooth_exp(k):
    eps = 2.0**-k
    net, rep = build_smooth(exp_shift(), eps)
    assert rep.degree == math.ceil(math.log2(2 / eps))
    xs = np.linspace(0, 1, 100_001)
    assert np.max(np.abs(eval_batch(net, xs) - np.exp(xs - 1))) <= eps
    assert rep.passed and rep.counts_match


def test_smooth_half_sin():
    _, rep = build_smooth(half_sin(), 2.0**-10)
    assert rep.passed


def test_smooth_rejects_uncertified():
    with pytest.raises(ValueError, match="derivative"):
        build_smooth(uncertified("half_sin", lambda x: 0.5 * np.sin(x) + 0.5), 0.1)


def test_smooth_rejects_profile_over_budget():
    steep = polynomial([0.0, 0.0, 0.0, 40.0])
    with pytest.raises(ValueError, match="bound"):
        build_smooth(steep, 2.0**-3)


def test_smooth_conditioning_cap():
    with pytest.raises(ConditioningError):
        build_smooth(exp_shift(), 2.0**-45)


def test_reports_are_deterministic():
    _, a = build_smooth(exp_shift(), 2.0**-6)
    _, b = build_smooth(exp_shift(), 2.0**-6)
    assert a.row() == b.row()
