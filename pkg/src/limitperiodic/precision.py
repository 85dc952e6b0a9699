"""Extended-precision (mpmath) paths used to certify decisions near gap closures."""

from __future__ import annotations

import os

import mpmath

DEFAULT_BITS = 128
ENV_VAR = "FLOQUET_PRECISION_BITS"


def default_bits() -> int:
    raw = os.environ.get(ENV_VAR)
    if raw is None:
        return DEFAULT_BITS
    try:
        bits = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    if bits < 53:
        raise ValueError(f"{ENV_VAR} must be >= 53, got {bits}")
    return bits


def _symmetric_bloch(values, sign):
    # sign=+1: periodic (k = 0); sign=-1: antiperiodic (kp = pi); both are real symmetric
    p = len(values)
    A = mpmath.matrix(p, p)
    for i, v in enumerate(values):
        A[i, i] = mpmath.mpf(v)
    for i in range(p - 1):
        A[i, i + 1] = A[i + 1, i] = mpmath.mpf(1)
    A[0, p - 1] += sign
    A[p - 1, 0] += sign
    return A


def band_edges(values, bits: int | None = None) -> list:
    """All ``2p`` band edges as sorted mpf numbers, computed at ``bits`` of precision.

    ``values`` entries may be floats, strings or mpf numbers.
    """
    bits = default_bits() if bits is None else bits
    with mpmath.workprec(bits):
        vals = [mpmath.mpf(v) for v in values]
        p = len(vals)
        if p == 1:
            edges = [vals[0] - 2, vals[0] + 2]
        else:
            edges = []
            for sign in (1, -1):
                ev = mpmath.eigsy(_symmetric_bloch(vals, sign), eigvals_only=True)
                edges.extend(ev[i] for i in range(p))
        return sorted(edges)


def gap_lengths(values, bits: int | None = None) -> list:
    """The ``p - 1`` gap lengths (zero or positive) as mpf numbers."""
    bits = default_bits() if bits is None else bits
    edges = band_edges(values, bits)
    with mpmath.workprec(bits):
        return [max(edges[2 * i + 2] - edges[2 * i + 1], mpmath.mpf(0)) for i in range(len(edges) // 2 - 1)]


def transfer(E, values, n: int, bits: int | None = None):
    """``T_n`` as a 2x2 mpmath matrix."""
    bits = default_bits() if bits is None else bits
    with mpmath.workprec(bits):
        E = mpmath.mpf(E)
        p = len(values)
        M = mpmath.eye(2)
        for i in range(n):
            S = mpmath.matrix([[E - mpmath.mpf(values[i % p]), -1], [1, 0]])
            M = S * M
        return M


def to_string(x, bits: int) -> str:
    """Decimal string carrying enough digits for ``bits`` of binary precision."""
    digits = int(bits * 0.30103) + 2
    return mpmath.nstr(mpmath.mpf(x), digits, strip_zeros=False)
