"""Reference computations that share no code with the package."""

from fractions import Fraction
from math import floor


def doubling_bits(x, n):
    """Binary digits of ``x`` in [0, 1] by repeated doubling of an exact rational."""
    r = Fraction(x)
    out = []
    for _ in range(n + 1):
        d = 1 if r >= 1 else 0
        out.append(d)
        r = 2 * (r - d)
    return out


def exact_truncate(x, n):
    return Fraction(floor(Fraction(x) * 2**n), 2**n)


def chord_error(f, K, probes=2001):
    """Sup error of the equispaced K-piece interpolant, by dense sampling of each piece."""
    worst = 0.0
    for k in range(K):
        a, b = k / K, (k + 1) / K
        fa, fb = f(a), f(b)
        for j in range(1, probes):
            t = j / probes
            x = a + t * (b - a)
            worst = max(worst, abs(f(x) - (fa + t * (fb - fa))))
    return worst
