"""Binary expansion of a scalar in ``[0, 1]`` with step units.

Bit ``i`` is ``step(r_i - 2^-i)`` where ``r_i = x - sum_{j<i} 2^-j bit_j``.
The residual is never materialised as a neuron: each bit reads the source
and all earlier bits directly through skip connections.  Because the
inclusive step fires at 0, dyadic points get their terminating expansion
(0.5 decodes as 0.1000...).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .network import NetBuilder, Network, NodeRef, Term


def add_decoder(
    builder: NetBuilder,
    source: Sequence[Term],
    n: int,
    first_layer: int = 1,
    source_bias: float = 0.0,
    prefix: str = "",
) -> list[NodeRef]:
    """Append ``n + 1`` bit units decoding the affine form ``source + source_bias``.

    Bit ``i`` lands in layer ``first_layer + i``.  The pre-activation adds
    the bias, then the earlier bits (largest first), then the source terms;
    every partial sum before the source is an exact dyadic number, so the
    sign test is exact for a single-term source.
    """
    if n < 0:
        raise ValueError("bit count must be nonnegative")
    bits: list[NodeRef] = []
    for i in range(n + 1):
        inputs = [(b, -(2.0**-j)) for j, b in enumerate(bits)]
        inputs.extend(source)
        bits.append(
            builder.step(
                first_layer + i,
                inputs,
                bias=source_bias - 2.0**-i,
                tag=f"{prefix}bit_{i}",
            )
        )
    return bits


@dataclass(frozen=True)
class DecoderFragment:
    network: Network
    bit_count: int
    bits: tuple[NodeRef, ...]


def build_decoder(n: int) -> DecoderFragment:
    """Standalone decoder whose readout is the truncation ``sum bit_i / 2^i``."""
    b = NetBuilder(1)
    bits = add_decoder(b, [(b.input(0), 1.0)], n)
    net = b.build([(ref, 2.0**-i) for i, ref in enumerate(bits)])
    return DecoderFragment(net, n, tuple(bits))


def truncate(x: float, n: int) -> float:
    """``floor(x * 2^n) / 2^n`` for ``x`` in ``[0, 1]``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"truncate expects x in [0, 1], got {x}")
    if n < 0:
        raise ValueError("bit count must be nonnegative")
    scale = 2.0**n
    return math.floor(x * scale) / scale

