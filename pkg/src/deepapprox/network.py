"""Feedforward networks of rectifier and binary step units.

A :class:`Network` is a layered DAG.  Layer 0 is the external input vector,
hidden layers are numbered from 1, and the output is an affine readout over
any existing nodes.  Skip connections (a neuron reading from any earlier
layer) are allowed; :func:`to_strict` converts to adjacent-layer form.

Evaluation order is part of the contract: a neuron's pre-activation is
accumulated as ``((bias + w_1*z_1) + w_2*z_2) + ...`` in the listed input
order, in double precision.  Builders rely on this to keep the bit decoder
and the bit-multiplication gadget exact.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class Activation(str, enum.Enum):
    RELU = "relu"
    STEP = "step"


class NodeRef(NamedTuple):
    """Position of a node: ``layer`` 0 is the input vector."""

    layer: int
    index: int


Term = tuple[NodeRef, float]


class NetworkFormatError(ValueError):
    """Raised for malformed or inconsistent network descriptions."""


@dataclass(frozen=True)
class Neuron:
    activation: Activation
    inputs: tuple[Term, ...]
    bias: float = 0.0
    nonneg: bool = False

    def __post_init__(self):
        object.__setattr__(self, "activation", Activation(self.activation))
        object.__setattr__(
            self,
            "inputs",
            tuple((NodeRef(*ref), float(w)) for ref, w in self.inputs),
        )
        object.__setattr__(self, "bias", float(self.bias))


@dataclass(frozen=True)
class Readout:
    terms: tuple[Term, ...] = ()
    bias: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "terms", tuple((NodeRef(*ref), float(w)) for ref, w in self.terms)
        )
        object.__setattr__(self, "bias", float(self.bias))


@dataclass(frozen=True)
class Counts:
    depth: int
    relu_count: int
    step_count: int
    total: int


@dataclass(frozen=True, eq=False)
class Network:
    input_dim: int
    layers: tuple[tuple[Neuron, ...], ...]
    readout: Readout
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(tuple(layer) for layer in self.layers))
        object.__setattr__(
            self, "tags", {name: NodeRef(*ref) for name, ref in self.tags.items()}
        )
        _validate(self)
        object.__setattr__(self, "_plan", None)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def layer_size(self, layer: int) -> int:
        return self.input_dim if layer == 0 else len(self.layers[layer - 1])

    def neuron(self, ref: NodeRef) -> Neuron:
        if ref.layer == 0:
            raise KeyError("layer 0 holds inputs, not neurons")
        return self.layers[ref.layer - 1][ref.index]

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.input_dim == other.input_dim
            and self.layers == other.layers
            and self.readout == other.readout
            and self.tags == other.tags
        )

    __hash__ = None

    def __call__(self, x):
        return eval_batch(self, x)


def _validate(net: Network) -> None:
    if net.input_dim < 1:
        raise NetworkFormatError("input_dim must be positive")
    if not net.layers:
        raise NetworkFormatError("network needs at least one hidden layer")

    def check_ref(ref: NodeRef, before: int, what: str):
        if not 0 <= ref.layer < before:
            raise NetworkFormatError(
                f"{what} references layer {ref.layer}; only layers < {before} allowed"
            )
        if not 0 <= ref.index < net.layer_size(ref.layer):
            raise NetworkFormatError(f"{what} references missing node {tuple(ref)}")

    for l, layer in enumerate(net.layers, start=1):
        if not layer:
            raise NetworkFormatError(f"layer {l} is empty")
        for j, neuron in enumerate(layer):
            for ref, w in neuron.inputs:
                check_ref(ref, l, f"neuron ({l},{j})")
                if not math.isfinite(w):
                    raise NetworkFormatError(f"neuron ({l},{j}) has non-finite weight")
            if not math.isfinite(neuron.bias):
                raise NetworkFormatError(f"neuron ({l},{j}) has non-finite bias")
    for ref, w in net.readout.terms:
        check_ref(ref, net.depth + 1, "readout")
    for name, ref in net.tags.items():
        check_ref(ref, net.depth + 1, f"tag {name!r}")


class NetBuilder:
    """Incremental construction of a :class:`Network`.

    Neurons may be added to any layer in any order as long as their sources
    live in strictly earlier layers.
    """

    def __init__(self, input_dim: int):
        self.input_dim = input_dim
        self._layers: list[list[Neuron]] = []
        self.tags: dict[str, NodeRef] = {}

    @property
    def depth(self) -> int:
        return len(self._layers)

    def input(self, k: int = 0) -> NodeRef:
        return NodeRef(0, k)

    def add(
        self,
        layer: int,
        activation: Activation | str,
        inputs: Iterable[Term],
        bias: float = 0.0,
        nonneg: bool = False,
        tag: str | None = None,
    ) -> NodeRef:
        if layer < 1:
            raise ValueError("hidden layers start at 1")
        inputs = tuple(inputs)
        for ref, _ in inputs:
            if ref.layer >= layer:
                raise ValueError(f"source {tuple(ref)} is not before layer {layer}")
        while len(self._layers) < layer:
            self._layers.append([])
        self._layers[layer - 1].append(Neuron(activation, inputs, bias, nonneg))
        ref = NodeRef(layer, len(self._layers[layer - 1]) - 1)
        if tag is not None:
            self.tags[tag] = ref
        return ref

    def relu(self, layer, inputs, bias=0.0, nonneg=False, tag=None) -> NodeRef:
        return self.add(layer, Activation.RELU, inputs, bias, nonneg, tag)

    def step(self, layer, inputs, bias=0.0, tag=None) -> NodeRef:
        return self.add(layer, Activation.STEP, inputs, bias, True, tag)

    def build(self, terms: Iterable[Term] = (), bias: float = 0.0) -> Network:
        return Network(
            self.input_dim,
            tuple(tuple(layer) for layer in self._layers),
            Readout(tuple(terms), bias),
            dict(self.tags),
        )


# ---------------------------------------------------------------------------
# evaluation


class _Plan:
    """Index arrays for vectorised evaluation in listed term order."""

    def __init__(self, net: Network):
        sizes = [net.input_dim] + [len(layer) for layer in net.layers]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.n_nodes = int(self.offsets[-1])
        self.layers = []
        for l, layer in enumerate(net.layers, start=1):
            bias = np.array([nr.bias for nr in layer])
            is_step = np.array([nr.activation is Activation.STEP for nr in layer])
            self.layers.append((bias, is_step, self._positions(layer)))
        ro = net.readout
        self.readout = (ro.bias, self._positions([Neuron("relu", ro.terms)]))

    def _positions(self, neurons: Sequence[Neuron]):
        width = max((len(nr.inputs) for nr in neurons), default=0)
        out = []
        for t in range(width):
            tgt, src, w = [], [], []
            for j, nr in enumerate(neurons):
                if t < len(nr.inputs):
                    ref, weight = nr.inputs[t]
                    tgt.append(j)
                    src.append(self.offsets[ref.layer] + ref.index)
                    w.append(weight)
            full = len(tgt) == len(neurons)
            out.append(
                (None if full else np.array(tgt), np.array(src), np.array(w)[:, None])
            )
        return out


def _plan(net: Network) -> _Plan:
    if net._plan is None:
        object.__setattr__(net, "_plan", _Plan(net))
    return net._plan


def _accumulate(acc, values, positions):
    for tgt, src, w in positions:
        if tgt is None:
            acc += w * values[src]
        else:
            acc[tgt] += w * values[src]


def forward(net: Network, X, keep_pre: bool = False):
    """Evaluate every node at the points ``X`` (shape ``(M, d)``).

    Returns ``(values, pre, out)`` where ``values`` has shape
    ``(n_nodes, M)`` indexed by :func:`node_index`, ``pre`` holds hidden
    pre-activations (or ``None``) and ``out`` is the readout.
    """
    X = _as_points(net, X)
    plan = _plan(net)
    M = X.shape[0]
    values = np.empty((plan.n_nodes, M))
    pre = np.full((plan.n_nodes, M), np.nan) if keep_pre else None
    values[: net.input_dim] = X.T
    for l, (bias, is_step, positions) in enumerate(plan.layers, start=1):
        acc = np.repeat(bias[:, None], M, axis=1)
        _accumulate(acc, values, positions)
        lo, hi = plan.offsets[l], plan.offsets[l + 1]
        if keep_pre:
            pre[lo:hi] = acc
        values[lo:hi] = np.where(
            is_step[:, None], (acc >= 0).astype(float), np.maximum(acc, 0.0)
        )
    rbias, rpos = plan.readout
    out = np.full((1, M), rbias)
    _accumulate(out, values, rpos)
    return values, pre, out[0]


def node_index(net: Network, ref: NodeRef) -> int:
    return int(_plan(net).offsets[ref.layer] + ref.index)


def _as_points(net: Network, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(-1, 1) if net.input_dim == 1 else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ValueError(
            f"expected points of dimension {net.input_dim}, got shape {X.shape}"
        )
    return X


def eval_batch(net: Network, X, chunk: int | None = None) -> np.ndarray:
    """Readout values at many points, processed in chunks to bound memory."""
    X = _as_points(net, X)
    if chunk is None:
        chunk = int(min(65536, max(256, 4_000_000 // max(_plan(net).n_nodes, 1))))
    out = np.empty(X.shape[0])
    for lo in range(0, X.shape[0], chunk):
        out[lo : lo + chunk] = forward(net, X[lo : lo + chunk])[2]
    return out


def eval(net: Network, x) -> float:
    """Readout value at a single point ``x`` of dimension ``input_dim``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != net.input_dim:
        raise ValueError(f"expected {net.input_dim} coordinates, got {x.shape[0]}")
    return float(forward(net, x.reshape(1, -1))[2][0])


def tagged_values(net: Network, X, names: Sequence[str]) -> dict[str, np.ndarray]:
    """Values of tagged nodes at points ``X``."""
    values, _, _ = forward(net, X)
    return {name: values[node_index(net, net.tags[name])] for name in names}


def eval_grid(net: Network, grid) -> list[tuple[tuple[float, ...], float]]:
    pts = grid.points()
    vals = eval_batch(net, pts)
    return [(tuple(float(c) for c in p), float(v)) for p, v in zip(pts, vals)]


# ---------------------------------------------------------------------------
# counting and strict form


def count(net: Network) -> Counts:
    relu = sum(nr.activation is Activation.RELU for layer in net.layers for nr in layer)
    step = sum(nr.activation is Activation.STEP for layer in net.layers for nr in layer)
    return Counts(net.depth, relu, step, relu + step)


def to_strict(net: Network) -> Network:
    """Equivalent network whose neurons only read the previous layer.

    A skipped value is carried forward by one relu per intermediate layer
    when it is known to be nonnegative, otherwise by a ``(relu(v), relu(-v))``
    pair recombined with weights ``(+w, -w)``.  The readout is treated as
    layer ``depth + 1``.  The carried values are bitwise identical, so the
    result evaluates identically to the input network.
    """
    L = net.depth
    # furthest layer (<= L + 1) that reads each node
    need: dict[NodeRef, int] = {}
    for l, layer in enumerate(net.layers, start=1):
        for nr in layer:
            for ref, _ in nr.inputs:
                need[ref] = max(need.get(ref, 0), l)
    for ref, _ in net.readout.terms:
        need[ref] = max(need.get(ref, 0), L + 1)
    if all(need_l == ref.layer + 1 for ref, need_l in need.items()):
        return net

    layers = [list(layer) for layer in net.layers]
    # carriers[ref][l] = terms in layer l standing in for ref (unit weight)
    carriers: dict[NodeRef, dict[int, list[tuple[NodeRef, float]]]] = {}
    for ref in sorted(need, key=lambda r: (r.layer, r.index)):
        last = need[ref]
        if last <= ref.layer + 1:
            continue
        signed = ref.layer == 0 or not net.neuron(ref).nonneg
        chain: dict[int, list[tuple[NodeRef, float]]] = {}
        prev = [(ref, 1.0), (ref, -1.0)] if signed else [(ref, 1.0)]
        for l in range(ref.layer + 1, last):
            cur = []
            for src, sign in prev:
                layers[l - 1].append(Neuron(Activation.RELU, ((src, sign if l == ref.layer + 1 else 1.0),), 0.0, True))
                cur.append((NodeRef(l, len(layers[l - 1]) - 1), sign))
            chain[l] = cur
            prev = cur
        carriers[ref] = chain

    def rewrite(terms, at_layer):
        out = []
        for ref, w in terms:
            chain = carriers.get(ref)
            if chain is None or at_layer == ref.layer + 1:
                out.append((ref, w))
            else:
                out.extend((c, w * sign) for c, sign in chain[at_layer - 1])
        return tuple(out)

    new_layers = []
    for l, layer in enumerate(layers, start=1):
        n_orig = len(net.layers[l - 1])
        new_layer = [
            Neuron(nr.activation, rewrite(nr.inputs, l), nr.bias, nr.nonneg)
            if j < n_orig
            else nr
            for j, nr in enumerate(layer)
        ]
        new_layers.append(tuple(new_layer))
    readout = Readout(rewrite(net.readout.terms, L + 1), net.readout.bias)
    return Network(net.input_dim, tuple(new_layers), readout, dict(net.tags))


# ---------------------------------------------------------------------------
# serialization

FORMAT_VERSION = 1


def _ref_json(ref: NodeRef) -> dict:
    return {"layer": ref.layer, "index": ref.index}


def _terms_json(terms) -> list:
    return [{"layer": r.layer, "index": r.index, "weight": w} for r, w in terms]


def to_dict(net: Network) -> dict:
    return {
        "version": FORMAT_VERSION,
        "input_dim": net.input_dim,
        "layers": [
            [
                {
                    "act": nr.activation.value,
                    "inputs": _terms_json(nr.inputs),
                    "bias": nr.bias,
                    "nonneg": nr.nonneg,
                }
                for nr in layer
            ]
            for layer in net.layers
        ],
        "readout": {"terms": _terms_json(net.readout.terms), "bias": net.readout.bias},
        "tags": {name: _ref_json(ref) for name, ref in net.tags.items()},
    }


def serialize(net: Network) -> str:
    # json writes floats with repr(), which round-trips doubles exactly
    return json.dumps(to_dict(net), allow_nan=False, separators=(",", ":")) + "\n"


def _parse_terms(raw) -> tuple[Term, ...]:
    return tuple(
        (NodeRef(int(t["layer"]), int(t["index"])), float(t["weight"])) for t in raw
    )


def from_dict(doc: dict) -> Network:
    try:
        version = doc["version"]
        if version != FORMAT_VERSION:
            raise NetworkFormatError(f"unknown format version {version!r}")
        layers = []
        for layer in doc["layers"]:
            neurons = []
            for nd in layer:
                act = nd["act"]
                if act not in ("relu", "step"):
                    raise NetworkFormatError(f"unsupported activation {act!r}")
                neurons.append(
                    Neuron(act, _parse_terms(nd["inputs"]), float(nd["bias"]), bool(nd["nonneg"]))
                )
            layers.append(tuple(neurons))
        ro = doc["readout"]
        tags = {
            name: NodeRef(int(r["layer"]), int(r["index"]))
            for name, r in doc.get("tags", {}).items()
        }
        return Network(
            int(doc["input_dim"]),
            tuple(layers),
            Readout(_parse_terms(ro["terms"]), float(ro["bias"])),
            tags,
        )
    except NetworkFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise NetworkFormatError(f"malformed network description: {exc}") from exc


def deserialize(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise NetworkFormatError("top level must be an object")
    return from_dict(doc)


def affine_values(net: Network, values: np.ndarray, terms: Sequence[Term], bias: float = 0.0) -> np.ndarray:
    """Evaluate an affine form over node values returned by :func:`forward`."""
    out = np.full(values.shape[1], float(bias))
    for ref, w in terms:
        out += w * values[node_index(net, ref)]
    return out
