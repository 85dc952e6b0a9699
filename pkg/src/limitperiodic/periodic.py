"""Transfer matrices, discriminant and band structure of period-p potentials.

The operator is ``(H psi)(n) = psi(n+1) + psi(n-1) + V(n) psi(n)`` with ``V(n + p) = V(n)``.
One-step matrices ``S_i = [[E - V(i), -1], [1, 0]]`` map ``(u(i), u(i-1))`` to
``(u(i+1), u(i))``, and ``T_n = S_{n-1} ... S_0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import precision
from .errors import SpectrumError
from .odometer import as_values

TOL_GAP = 1e-12


def step_matrix(E: float, v: float) -> np.ndarray:
    return np.array([[E - v, -1.0], [1.0, 0.0]])


def transfer(E: float, V, n: int | None = None) -> np.ndarray:
    """``T_n(E)``; ``n`` defaults to the period.  Negative ``n`` uses inverse steps."""
    vals = as_values(V)
    p = len(vals)
    if n is None:
        n = p
    M = np.eye(2)
    if n >= 0:
        for i in range(n):
            M = step_matrix(E, vals[i % p]) @ M
    else:
        for i in range(-1, n - 1, -1):
            inv = np.array([[0.0, 1.0], [-1.0, E - vals[i % p]]])
            M = inv @ M
    return M


def transfer_entries(E, vals, n: int | None = None, derivative: bool = False):
    """Vectorized ``T_n(E)`` entries ``(a, b, c, d)`` over an array of energies.

    With ``derivative=True`` also returns the entries of ``dT_n/dE``.
    """
    E = np.asarray(E, dtype=float)
    p = len(vals)
    n = p if n is None else n
    a = np.ones_like(E)
    b = np.zeros_like(E)
    c = np.zeros_like(E)
    d = np.ones_like(E)
    if derivative:
        da = np.zeros_like(E)
        db = np.zeros_like(E)
        dc = np.zeros_like(E)
        dd = np.zeros_like(E)
    for i in range(n):
        x = E - vals[i % p]
        if derivative:
            da, db, dc, dd = a + x * da - dc, b + x * db - dd, da, db
        a, b, c, d = x * a - c, x * b - d, a, b
    if derivative:
        return (a, b, c, d), (da, db, dc, dd)
    return a, b, c, d


def trace_and_derivative(E, V):
    """``(Delta(E), Delta'(E))`` from the transfer recursion (no polynomial coefficients)."""
    vals = as_values(V)
    (a, _, _, d), (da, _, _, dd) = transfer_entries(E, vals, derivative=True)
    return a + d, da + dd


def delta(E, V):
    vals = as_values(V)
    a, _, _, d = transfer_entries(E, vals)
    return a + d


@dataclass(frozen=True)
class DiscriminantPoly:
    """``Delta(E) = trace T_p(E)`` as a monic polynomial; ``coeffs`` highest degree first."""

    coeffs: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, E):
        return np.polyval(self.coeffs, E)

    def deriv(self) -> np.ndarray:
        return np.polyder(self.coeffs)

    def roots_of_shift(self, c: float) -> np.ndarray:
        """Roots of ``Delta - c`` from the companion matrix, sorted by real part."""
        shifted = np.array(self.coeffs, dtype=float)
        shifted[-1] -= c
        r = np.roots(shifted)
        return r[np.argsort(r.real)]


def discriminant(V) -> DiscriminantPoly:
    vals = as_values(V)
    P = np.polynomial.polynomial
    # polynomial-valued transfer product, coefficients lowest degree first
    a, b, c, d = (np.array([1.0]), np.array([0.0]), np.array([0.0]), np.array([1.0]))
    for v in vals:
        x = np.array([-v, 1.0])
        a, b, c, d = P.polysub(P.polymul(x, a), c), P.polysub(P.polymul(x, b), d), a, b
    tr = P.polyadd(a, d)
    tr = np.trim_zeros(tr, "b")
    return DiscriminantPoly(tr[::-1].copy())


def bloch_matrix(V, k: float, l: int = 0) -> np.ndarray:
    """Restriction of ``H`` to ``l .. l+p-1`` with Bloch boundary phase ``e^{ikp}``."""
    vals = as_values(V)
    p = len(vals)
    theta = k * p
    if p == 1:
        return np.array([[vals[0] + 2.0 * math.cos(theta) + 0j]])
    A = np.zeros((p, p), dtype=complex)
    A[np.arange(p), np.arange(p)] = np.roll(vals, -l)
    idx = np.arange(p - 1)
    A[idx, idx + 1] = 1.0
    A[idx + 1, idx] = 1.0
    A[0, p - 1] += np.exp(-1j * theta)
    A[p - 1, 0] += np.exp(1j * theta)
    return A


@dataclass(frozen=True)
class Gap:
    lower: float
    upper: float
    length: float
    open: bool

    @property
    def center(self) -> float:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True)
class BandStructure:
    """Bands ``[l_i, u_i]`` (always ``p`` of them, touching when a gap is closed) and gaps."""

    period: int
    edges: np.ndarray
    bands: tuple[tuple[float, float], ...]
    gaps: tuple[Gap, ...]
    tol_gap: float
    discriminant: DiscriminantPoly
    precision_bits: int = 53
    exact_gap_lengths: tuple = field(default=(), compare=False)

    @property
    def min_gap(self) -> float:
        return min((g.length for g in self.gaps), default=math.inf)

    @property
    def total_measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.bands))

    @property
    def open_gaps(self) -> tuple[Gap, ...]:
        return tuple(g for g in self.gaps if g.open)

    @property
    def n_open(self) -> int:
        return len(self.open_gaps)

    @property
    def n_closed(self) -> int:
        return len(self.gaps) - self.n_open

    @property
    def components(self) -> list[tuple[float, float]]:
        """Connected components of the spectrum (bands merged across closed gaps)."""
        comps = [list(self.bands[0])]
        for gap, band in zip(self.gaps, self.bands[1:]):
            if gap.open:
                comps.append(list(band))
            else:
                comps[-1][1] = band[1]
        return [tuple(c) for c in comps]

    def contains(self, E: float) -> bool:
        return any(lo <= E <= hi for lo, hi in self.bands)

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "bands": [list(b) for b in self.bands],
            "gaps": [
                {"lower": g.lower, "upper": g.upper, "length": g.length, "open": g.open}
                for g in self.gaps
            ],
            "min_gap": None if not self.gaps else self.min_gap,
            "total_measure": self.total_measure,
            "tol_gap": self.tol_gap,
            "precision_bits": self.precision_bits,
            "discriminant": [float(c) for c in self.discriminant.coeffs],
        }


def _assemble(vals, edges, tol_gap, bits, exact_lengths=()):
    p = len(vals)
    bands = tuple((float(edges[2 * i]), float(edges[2 * i + 1])) for i in range(p))
    gaps = []
    for i in range(p - 1):
        lo, hi = bands[i][1], bands[i + 1][0]
        length = float(exact_lengths[i]) if exact_lengths else max(hi - lo, 0.0)
        gaps.append(Gap(lo, hi, length, length > tol_gap))
    return BandStructure(
        period=p,
        edges=np.asarray(edges, dtype=float),
        bands=bands,
        gaps=tuple(gaps),
        tol_gap=tol_gap,
        discriminant=discriminant(vals),
        precision_bits=bits,
        exact_gap_lengths=tuple(exact_lengths),
    )


def periodic_antiperiodic_eigenvalues(V) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of the Bloch matrices at ``k = 0`` and ``kp = pi``."""
    vals = as_values(V)
    if not np.all(np.isfinite(vals)):
        raise SpectrumError("potential has non-finite values")
    p = len(vals)
    if p == 1:
        return np.array([vals[0] + 2.0]), np.array([vals[0] - 2.0])
    try:
        per = np.linalg.eigvalsh(bloch_matrix(vals, 0.0).real)
        anti = np.linalg.eigvalsh(bloch_matrix(vals, math.pi / p).real)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"Bloch eigensolve failed: {exc}") from exc
    if not (np.all(np.isfinite(per)) and np.all(np.isfinite(anti))):
        raise SpectrumError("Bloch eigensolve returned non-finite eigenvalues")
    return per, anti


def band_structure(V, tol_gap: float = TOL_GAP) -> BandStructure:
    vals = as_values(V)
    per, anti = periodic_antiperiodic_eigenvalues(vals)
    edges = np.sort(np.concatenate([per, anti]))
    return _assemble(vals, edges, tol_gap, 53)


def band_structure_mp(V, bits: int | None = None, tol_gap: float = TOL_GAP) -> BandStructure:
    """Band structure with edges and gap lengths computed in extended precision."""
    bits = precision.default_bits() if bits is None else bits
    raw = V.values if hasattr(V, "values") else V
    edges = precision.band_edges(list(raw), bits)
    with mpmath.workprec(bits):
        lengths = [max(edges[2 * i + 2] - edges[2 * i + 1], mpmath.mpf(0)) for i in range(len(edges) // 2 - 1)]
    return _assemble(as_values(V), [float(e) for e in edges], tol_gap, bits, lengths)


def spectrum_measure(V, tol: float = 1e-9) -> float:
    bs = band_structure(V)
    bound = 2 * math.pi / bs.period
    for lo, hi in bs.bands:
        if hi - lo > bound + tol:
            raise SpectrumError(f"band [{lo}, {hi}] longer than 2*pi/p = {bound}")
    return bs.total_measure


def measure_upper_bound(V, C: float = 1.0) -> tuple[float, bool]:
    """``4 pi p / C`` and whether the measured total band length respects it."""
    if C < 1:
        raise ValueError("C must be >= 1 (transfer matrices are unimodular)")
    p = len(as_values(V))
    bound = 4 * math.pi * p / C
    return bound, spectrum_measure(V) <= bound


def norm_lower_bound_scan(V, n_grid: int = 400, max_steps: int | None = None) -> float:
    """Grid estimate of ``C = min_E max_{omega, 1<=k<=max_steps} ||T_k^{(E, V_omega)}||``.

    Energies are sampled in the interior of every band; ``omega`` runs over all cyclic
    shifts.  This is a grid estimate, not a rigorous lower bound between grid points.
    """
    vals = as_values(V)
    p = len(vals)
    max_steps = 4 * p if max_steps is None else max_steps
    bs = band_structure(vals)
    per_band = max(2, n_grid // p)
    Es = np.concatenate([
        lo + (hi - lo) * (np.arange(per_band) + 0.5) / per_band for lo, hi in bs.bands
    ])
    best = np.ones_like(Es)
    for shift in range(p):
        sv = np.roll(vals, -shift)
        a, b, c, d = np.ones_like(Es), np.zeros_like(Es), np.zeros_like(Es), np.ones_like(Es)
        for i in range(max_steps):
            x = Es - sv[i % p]
            a, b, c, d = x * a - c, x * b - d, a, b
            M = np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)
            best = np.maximum(best, np.linalg.norm(M, ord=2, axis=(-2, -1)))
    return float(best.min())


@dataclass(frozen=True)
class TraceMatrix:
    matrix: np.ndarray
    trace: float
    kind: str  # "+identity", "-identity", "parabolic", "hyperbolic", "elliptic"


def classify(M: np.ndarray, tol: float = 1e-9) -> str:
    tr = M[0, 0] + M[1, 1]
    scale = max(1.0, float(np.abs(M).max()))
    for sign, name in ((1.0, "+identity"), (-1.0, "-identity")):
        if np.abs(M - sign * np.eye(2)).max() <= tol * scale:
            return name
    if abs(abs(tr) - 2.0) <= tol * scale:
        return "parabolic"
    return "hyperbolic" if abs(tr) > 2.0 else "elliptic"


def trace_matrix_at(V, E: float, tol: float = 1e-9) -> TraceMatrix:
    M = transfer(E, V)
    return TraceMatrix(M, float(M[0, 0] + M[1, 1]), classify(M, tol))


def companion_edges(V) -> tuple[np.ndarray, np.ndarray]:
    """Real parts of the roots of ``Delta - 2`` and ``Delta + 2`` (companion-matrix route)."""
    disc = discriminant(V)
    return disc.roots_of_shift(2.0).real, disc.roots_of_shift(-2.0).real


def minimal_period(V) -> int:
    vals = as_values(V)
    p = len(vals)
    for q in range(1, p + 1):
        if p % q == 0 and np.array_equal(vals, np.tile(vals[:q], p // q)):
            return q
    return p


def hausdorff_distance(bands_a, bands_b) -> float:
    """Hausdorff distance between two finite unions of closed intervals."""
    def one_sided(A, B):
        B = sorted(B)
        cands = [x for lo, hi in A for x in (lo, hi)]
        for (_, u1), (l2, _) in zip(B, B[1:]):
            mid = 0.5 * (u1 + l2)
            if any(lo <= mid <= hi for lo, hi in A):
                cands.append(mid)
        def dist(x):
            return min(0.0 if lo <= x <= hi else min(abs(x - lo), abs(x - hi)) for lo, hi in B)
        return max(dist(x) for x in cands)
    return max(one_sided(bands_a, bands_b), one_sided(bands_b, bands_a))
