import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepapprox.grids import GridSpec
from deepapprox.network import (
    Activation,
    NetBuilder,
    Network,
    NetworkFormatError,
    NodeRef,
    Neuron,
    Readout,
    count,
    deserialize,
    eval,
    eval_batch,
    eval_grid,
    serialize,
    to_strict,
)
from deepapprox.univariate import build_monomials, build_square


def single(act, weight, bias):
    b = NetBuilder(1)
    u = b.add(1, act, [(b.input(0), weight)], bias)
    return b.build([(u, 1.0)])


def test_identity_relu():
    assert eval(single("relu", 1.0, 0.0), [0.3]) == 0.3


def test_step_fires_at_zero():
    net = single("step", 1.0, -0.5)
    assert eval(net, [0.5]) == 1.0
    assert eval(net, [np.nextafter(0.5, 0)]) == 0.0


def test_square_net_small_decoder_value():
    # four fractional bits: 0.7 -> 0.6875, squared
    b = NetBuilder(1)
    from deepapprox.decoder import add_decoder
    from deepapprox.univariate import bit_gate

    bits = add_decoder(b, [(b.input(0), 1.0)], 4)
    units = [bit_gate(b, 6, bi, [(bj, 2.0 ** -(i + j)) for j, bj in enumerate(bits)]) for i, bi in enumerate(bits)]
    net = b.build([(u, 1.0) for u in units])
    assert eval(net, [0.7]) == 0.47265625


def test_dimension_mismatch():
    net = single("relu", 1.0, 0.0)
    with pytest.raises(ValueError):
        eval(net, [0.1, 0.2])
    b = NetBuilder(2)
    u = b.relu(1, [(b.input(0), 1.0), (b.input(1), 1.0)])
    with pytest.raises(ValueError):
        eval(b.build([(u, 1.0)]), [0.5])


def test_out_of_domain_is_evaluated():
    assert eval(single("relu", 1.0, 0.0), [1.5]) == 1.5


def test_count_small():
    b = NetBuilder(1)
    r1 = b.relu(1, [(b.input(0), 1.0)])
    r2 = b.relu(1, [(b.input(0), -1.0)])
    s = b.step(1, [(b.input(0), 1.0)], -0.5)
    c = count(b.build([(r1, 1.0), (r2, 1.0), (s, 1.0)]))
    assert (c.depth, c.relu_count, c.step_count, c.total) == (1, 2, 1, 3)


@pytest.mark.parametrize("n_eps", [2, 4, 6, 9])
def test_square_counts(n_eps):
    net, rep = build_square(2.0**-n_eps)
    n = rep.bits
    c = count(net)
    assert (c.step_count, c.relu_count, c.depth) == (n + 1, n + 1, n + 2)
    assert c.total == sum(len(layer) for layer in net.layers)


def test_strict_no_skip_unchanged():
    b = NetBuilder(1)
    u = b.relu(1, [(b.input(0), 1.0)])
    v = b.relu(2, [(u, 2.0)])
    net = b.build([(v, 1.0)])
    assert to_strict(net) is net


def test_strict_single_nonneg_skip():
    b = NetBuilder(1)
    bit = b.step(1, [(b.input(0), 1.0)], -0.5)
    u = b.relu(2, [(bit, 1.0)])
    v = b.relu(3, [(u, 1.0), (bit, 1.0)])
    net = b.build([(v, 1.0)])
    strict = to_strict(net)
    assert count(strict).total == count(net).total + 1
    _assert_adjacent(strict)


def test_strict_signed_skip_uses_pair():
    b = NetBuilder(1)
    u = b.relu(1, [(b.input(0), 1.0)], -0.5)
    v = b.relu(2, [(u, 1.0)])
    w = b.relu(3, [(v, 1.0), (b.input(0), -1.0)], 1.0)
    net = b.build([(w, 1.0)])
    strict = to_strict(net)
    # the input skips two layers and is signed: two pairs
    assert count(strict).total == count(net).total + 4
    xs = np.linspace(0, 1, 101)
    assert np.array_equal(eval_batch(strict, xs), eval_batch(net, xs))


def _assert_adjacent(net: Network):
    for l, layer in enumerate(net.layers, start=1):
        for nr in layer:
            assert all(ref.layer == l - 1 for ref, _ in nr.inputs)
    assert all(ref.layer == net.depth for ref, _ in net.readout.terms)


def test_strict_square_counts_match_report():
    net, rep = build_square(2.0**-5)
    assert rep.bits == 6
    strict = to_strict(net)
    _assert_adjacent(strict)
    assert count(strict).total == rep.strict_total
    assert rep.strict_total >= rep.total


def test_strict_agreement_on_ladder():
    net = build_monomials(4, 7)
    strict = to_strict(net)
    _assert_adjacent(strict)
    xs = np.random.default_rng(0).random(1000)
    assert np.max(np.abs(eval_batch(strict, xs) - eval_batch(net, xs))) <= 1e-12


@st.composite
def random_networks(draw):
    d = draw(st.integers(1, 3))
    depth = draw(st.integers(1, 4))
    b = NetBuilder(d)
    refs = [b.input(k) for k in range(d)]
    weights = st.floats(-2, 2, allow_nan=False, allow_infinity=False)
    for l in range(1, depth + 1):
        new = []
        for _ in range(draw(st.integers(1, 3))):
            srcs = draw(st.lists(st.sampled_from(refs), min_size=1, max_size=4))
            act = draw(st.sampled_from(["relu", "step"]))
            node = b.add(l, act, [(s, draw(weights)) for s in srcs], draw(weights), nonneg=True)
            new.append(node)
        refs = refs + new
    out = draw(st.lists(st.sampled_from(refs), min_size=1, max_size=5))
    return b.build([(r, draw(weights)) for r in out], draw(weights))


@settings(max_examples=60, deadline=None)
@given(random_networks(), st.integers(0, 2**32 - 1))
def test_strict_agreement_property(net, seed):
    pts = np.random.default_rng(seed).random((1000, net.input_dim))
    strict = to_strict(net)
    _assert_adjacent(strict)
    assert count(strict).total >= count(net).total
    assert np.max(np.abs(eval_batch(strict, pts) - eval_batch(net, pts))) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(random_networks())
def test_roundtrip_property(net):
    back = deserialize(serialize(net))
    assert back == net
    pts = np.random.default_rng(1).random((50, net.input_dim))
    assert np.array_equal(eval_batch(back, pts), eval_batch(net, pts))


@settings(max_examples=30, deadline=None)
@given(random_networks())
def test_eval_is_pure(net):
    pts = np.random.default_rng(2).random((64, net.input_dim))
    assert np.array_equal(eval_batch(net, pts), eval_batch(net, pts))
    assert eval(net, pts[3]) == eval_batch(net, pts)[3]


def test_chunking_does_not_change_values():
    net = build_monomials(3, 9)
    xs = np.random.default_rng(3).random(5000)
    assert np.array_equal(eval_batch(net, xs, chunk=7), eval_batch(net, xs))


def test_roundtrip_square_bitwise():
    net, _ = build_square(2.0**-7)
    text = serialize(net)
    assert deserialize(text) == net
    assert serialize(deserialize(text)) == text


def test_roundtrip_awkward_floats():
    b = NetBuilder(1)
    u = b.relu(1, [(b.input(0), 0.1 + 0.2)], bias=-1e-300, tag="u")
    net = b.build([(u, np.nextafter(1.0, 2.0))], bias=5e-324)
    back = deserialize(serialize(net))
    assert back.readout.terms[0][1] == np.nextafter(1.0, 2.0)
    assert back.layers[0][0].bias == -1e-300
    assert back.tags == {"u": NodeRef(1, 0)}


def _doc():
    net, _ = build_square(0.25)
    return json.loads(serialize(net))


def test_reject_forward_reference():
    doc = _doc()
    doc["layers"][0][0]["inputs"].append({"layer": 2, "index": 0, "weight": 1.0})
    with pytest.raises(NetworkFormatError):
        deserialize(json.dumps(doc))


def test_reject_dangling_reference():
    doc = _doc()
    doc["readout"]["terms"].append({"layer": 1, "index": 7, "weight": 1.0})
    with pytest.raises(NetworkFormatError):
        deserialize(json.dumps(doc))


def test_reject_unknown_activation():
    doc = _doc()
    doc["layers"][0][0]["act"] = "tanh"
    with pytest.raises(NetworkFormatError, match="tanh"):
        deserialize(json.dumps(doc))


def test_reject_version_and_garbage():
    doc = _doc()
    doc["version"] = 2
    with pytest.raises(NetworkFormatError):
        deserialize(json.dumps(doc))
    with pytest.raises(NetworkFormatError):
        deserialize("{not json")
    with pytest.raises(NetworkFormatError):
        deserialize(json.dumps({"version": 1}))
    with pytest.raises(NetworkFormatError):
        deserialize("[]")


def test_network_invariants():
    with pytest.raises(NetworkFormatError):
        Network(1, (), Readout())
    with pytest.raises(NetworkFormatError):
        Network(1, ((),), Readout())
    with pytest.raises(ValueError):
        Neuron("sigmoid", ())
    b = NetBuilder(1)
    with pytest.raises(ValueError):
        b.relu(1, [(NodeRef(1, 0), 1.0)])


def test_activation_enum_values():
    assert {a.value for a in Activation} == {"relu", "step"}


def test_eval_grid_uniform():
    net = single("relu", 1.0, 0.0)
    rows = eval_grid(net, GridSpec("uniform", 3))
    assert [p for p, _ in rows] == [(0.0,), (0.5,), (1.0,)]
    assert [v for _, v in rows] == [0.0, 0.5, 1.0]


def test_grid_dyadic_neighbours():
    pts = GridSpec("dyadic", 5, level=1, delta=1e-9).points()[:, 0]
    assert 0.5 - 1e-9 in pts and 0.5 + 1e-9 in pts and 0.5 in pts
    assert pts.min() == 0.0 and pts.max() == 1.0


def test_grid_random_deterministic():
    g = GridSpec("random", 4, dim=2, seed=7)
    assert np.array_equal(g.points(), g.points())
    assert g.points().shape == (4, 2)
    assert not np.array_equal(g.points(), GridSpec("random", 4, dim=2, seed=8).points())


def test_grid_errors():
    with pytest.raises(ValueError):
        GridSpec("uniform", 0)
    with pytest.raises(ValueError):
        GridSpec("hexagonal", 3)


def test_random_grid_corners():
    pts = GridSpec("random", 10, dim=2, seed=0, corners=True).points()
    assert pts.shape == (19, 2)
    assert [0.5, 1.0] in pts.tolist()
