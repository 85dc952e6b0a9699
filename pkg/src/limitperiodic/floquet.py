"""Floquet solutions, the direct-integral transform and spectral-measure densities.

Band integrals are carried out in the Bloch phase ``theta = k p`` in ``[0, pi]``.  On each
band ``Delta(E(theta)) = 2 cos(theta)`` is inverted by safeguarded Newton, which removes the
inverse-square-root singularity of ``dk/dE`` at open band edges.

Normalization: ``sum_{j<p} |phi_j|^2 = 1``.  With that normalization the spectral density of
a finitely supported ``u`` is ``g(E) = (1/2pi) (|u^+|^2 + |u^-|^2) |d theta/dE|`` and
``d rho = d theta / pi``; note ``|d theta/dE| = p |dk/dE|``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import BandEdgeError, DomainError, NotEllipticError, QuadratureError
from .odometer import as_values
from .periodic import band_structure, minimal_period

EDGE_EXCLUSION = 1e-12
QUAD_EPSABS = 1e-11
QUAD_EPSREL = 1e-10


@dataclass(frozen=True)
class FiniteVector:
    offsets: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        offs = tuple(int(o) for o in self.offsets)
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if len(offs) != len(vals):
            raise ValueError("offsets and values differ in length")
        if len(set(offs)) != len(offs):
            raise ValueError("repeated offsets in finite vector")
        object.__setattr__(self, "offsets", offs)
        object.__setattr__(self, "values", vals)

    @classmethod
    def delta(cls, n: int = 0) -> "FiniteVector":
        return cls((n,), [1.0])

    @classmethod
    def zero(cls) -> "FiniteVector":
        return cls((), [])

    @classmethod
    def from_spec(cls, spec: str) -> "FiniteVector":
        """Parse ``"offset:value,offset:value"``, e.g. ``"0:1,1:-0.5"``."""
        offs, vals = [], []
        for item in filter(None, (s.strip() for s in spec.split(","))):
            try:
                o, v = item.split(":")
                offs.append(int(o))
                vals.append(float(v))
            except ValueError:
                raise ValueError(f"bad u-spec entry {item!r}; expected offset:value") from None
        return cls(tuple(offs), vals)

    @property
    def norm2(self) -> float:
        return float(np.sum(self.values**2))

    def __mul__(self, c: float) -> "FiniteVector":
        return FiniteVector(self.offsets, self.values * c)

    __rmul__ = __mul__

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.offsets, self.values.tolist()))


@dataclass(frozen=True)
class FloquetPoint:
    E: float
    k: float
    phi_plus: np.ndarray
    phi_minus: np.ndarray
    dk_dE: float
    phase_site: int = 0  # coordinate made positive real (0 unless phi_0 vanishes)

    @property
    def period(self) -> int:
        return len(self.phi_plus)

    def value(self, n: int, sign: int = 1) -> complex:
        """``phi^{+/-}_n`` for any integer ``n`` via ``phi_{n+lp} = e^{+/- i l k p} phi_n``."""
        p = self.period
        l, j = divmod(n, p)
        phi = self.phi_plus if sign > 0 else self.phi_minus
        return phi[j] * cmath.exp(1j * sign * l * self.k * p)


def _trace_pair(E: float, vals) -> tuple[float, float]:
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    da = db = dc = dd = 0.0
    for v in vals:
        x = E - v
        da, db, dc, dd = a + x * da - dc, b + x * db - dd, da, db
        a, b, c, d = x * a - c, x * b - d, a, b
    return a + d, da + dd


def _transfer_scalar(E: float, vals):
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    for v in vals:
        x = E - v
        a, b, c, d = x * a - c, x * b - d, a, b
    return a, b, c, d


def _floquet_vector(vals, E: float, theta: float) -> tuple[np.ndarray, int]:
    """Normalized ``phi^+`` over one period for the Bloch phase ``theta`` (``0 < theta < pi``)."""
    a, b, c, d = _transfer_scalar(E, vals)
    lam = cmath.exp(1j * theta)
    x1 = (b, lam - a)
    x2 = (lam - d, c)
    if abs(x1[0]) ** 2 + abs(x1[1]) ** 2 >= abs(x2[0]) ** 2 + abs(x2[1]) ** 2:
        phi0, phim1 = x1
    else:
        phi0, phim1 = x2
    p = len(vals)
    phi = np.empty(p, dtype=complex)
    phi[0] = phi0
    prev = phim1
    for n in range(p - 1):
        phi[n + 1] = (E - vals[n]) * phi[n] - prev
        prev = phi[n]
    phi /= np.sqrt(np.sum(np.abs(phi) ** 2))
    mags = np.abs(phi)
    site = int(np.argmax(mags > 1e-8 * mags.max()))
    phi *= np.conj(phi[site]) / mags[site]
    phi[site] = mags[site]
    return phi, site


def _vals(V):
    return [float(v) for v in as_values(V)]


def _reduced(V):
    vals = _vals(V)
    q = minimal_period(vals)
    return vals[:q]


def quasimomentum(V, E: float) -> float:
    vals = _vals(V)
    D, _ = _trace_pair(E, vals)
    if abs(D) > 2.0 + 1e-12 * max(1.0, abs(D)):
        raise DomainError(f"E = {E} is outside the spectrum (Delta = {D})")
    return math.acos(max(-1.0, min(1.0, D / 2.0))) / len(vals)


def _dtheta_dE(D: float, dD: float) -> float:
    return abs(dD) / math.sqrt(4.0 - D * D)


def dk_dE(V, E: float) -> float:
    vals = _vals(V)
    D, dD = _trace_pair(E, vals)
    if abs(D) > 2.0:
        raise DomainError(f"E = {E} is outside the spectrum (Delta = {D})")
    if 4.0 - D * D <= 1e-14:
        raise BandEdgeError(f"dk/dE diverges at the band edge E = {E}")
    return _dtheta_dE(D, dD) / len(vals)


def floquet_solutions(V, E: float) -> FloquetPoint:
    vals = _vals(V)
    D, dD = _trace_pair(E, vals)
    if abs(D) >= 2.0:
        raise NotEllipticError(f"|Delta(E)| = {abs(D)} >= 2 at E = {E}")
    theta = math.acos(D / 2.0)
    phi, site = _floquet_vector(vals, E, theta)
    return FloquetPoint(
        E=E,
        k=theta / len(vals),
        phi_plus=phi,
        phi_minus=np.conj(phi),
        dk_dE=_dtheta_dE(D, dD) / len(vals),
        phase_site=site,
    )


def _extended(phi: np.ndarray, theta: float, offsets) -> np.ndarray:
    p = len(phi)
    offs = np.asarray(offsets, dtype=int)
    l, j = np.divmod(offs, p)
    return phi[j] * np.exp(1j * theta * l)


def _transform(phi, theta, u: FiniteVector) -> tuple[complex, complex]:
    if not u.offsets:
        return 0j, 0j
    ext = _extended(phi, theta, u.offsets)
    plus = complex(np.sum(np.conj(ext) * u.values))
    # phi^- = conj(phi^+) extends with e^{-i l theta}, so conj(phi^-_n) = phi^+_n
    minus = complex(np.sum(ext * u.values))
    return plus, minus


def u_hat(V, E: float, u: FiniteVector) -> tuple[complex, complex]:
    pt = floquet_solutions(V, E)
    return _transform(pt.phi_plus, pt.k * pt.period, u)


def _density_vals(vals, u: FiniteVector, E: float) -> float:
    D, dD = _trace_pair(E, vals)
    if abs(D) >= 2.0 or 4.0 - D * D <= 0.0:
        return 0.0
    theta = math.acos(D / 2.0)
    phi, _ = _floquet_vector(vals, E, theta)
    up, um = _transform(phi, theta, u)
    return (abs(up) ** 2 + abs(um) ** 2) * _dtheta_dE(D, dD) / (2.0 * math.pi)


def density(V, u: FiniteVector, E: float) -> float:
    """Spectral density ``g_{V,u}(E)``; zero off the spectrum."""
    vals = _reduced(V)
    D, _ = _trace_pair(E, vals)
    if abs(D) > 2.0:
        return 0.0
    if 4.0 - D * D <= 1e-14:
        raise BandEdgeError(f"density diverges at the band edge E = {E}")
    return _density_vals(vals, u, E)


# ---------------------------------------------------------------------------
# band parametrization by the Bloch phase


@dataclass(frozen=True)
class _Band:
    lo: float
    hi: float
    lo_is_periodic: bool  # Delta(lo) = +2, i.e. theta = 0 at the lower edge


def _bands(vals) -> list[_Band]:
    bs = band_structure(vals)
    out = []
    for lo, hi in bs.bands:
        D_lo, _ = _trace_pair(lo, vals)
        D_hi, _ = _trace_pair(hi, vals)
        out.append(_Band(lo, hi, D_lo > D_hi))
    return out


def _band_energy(vals, band: _Band, theta: float) -> float:
    """Solve ``Delta(E) = 2 cos(theta)`` on ``band`` by bracketed Newton."""
    target = 2.0 * math.cos(theta)
    lo, hi = band.lo, band.hi
    if hi <= lo:
        return lo
    # orientation: s = +1 when Delta decreases across the band
    s = 1.0 if band.lo_is_periodic else -1.0
    phase = theta if band.lo_is_periodic else math.pi - theta
    x = lo + (hi - lo) * 0.5 * (1.0 - math.cos(phase))
    tol = 4e-16 * max(1.0, abs(lo), abs(hi))
    for _ in range(200):
        D, dD = _trace_pair(x, vals)
        h = s * (D - target)  # positive left of the root
        if h == 0.0:
            return x
        if h > 0:
            lo = x
        else:
            hi = x
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
        nx = x - (D - target) / dD if dD != 0.0 else math.nan
        if not (lo < nx < hi):
            nx = 0.5 * (lo + hi)
        if abs(nx - x) <= tol:
            return nx
        x = nx
    return x


def _clamp(theta: float) -> float:
    return min(max(theta, EDGE_EXCLUSION), math.pi - EDGE_EXCLUSION)


def _quad(fun, a, b, what, **kw):
    kw.setdefault("epsabs", QUAD_EPSABS)
    kw.setdefault("epsrel", QUAD_EPSREL)
    kw.setdefault("limit", 200)
    with warnings.catch_warnings():
        # convergence is judged from the returned error estimate below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(fun, a, b, **kw)
    if not math.isfinite(val) or err > max(1e-7, 1e-6 * abs(val)):
        raise QuadratureError(f"{what}: quadrature error estimate {err:.3g}", err)
    return val


def band_energy(V, band_index: int, theta: float) -> float:
    """``E`` on band ``band_index`` with Bloch phase ``theta = k p``."""
    vals = _vals(V)
    return _band_energy(vals, _bands(vals)[band_index], theta)


def spectral_mass(V, u: FiniteVector) -> float:
    """``mu_{V,u}(R)``; equals ``||u||^2``."""
    if not u.offsets or not np.any(u.values):
        return 0.0
    vals = _reduced(V)
    total = 0.0
    for band in _bands(vals):
        def integrand(theta, band=band):
            th = _clamp(theta)
            E = _band_energy(vals, band, th)
            phi, _ = _floquet_vector(vals, E, th)
            up, um = _transform(phi, th, u)
            return abs(up) ** 2 + abs(um) ** 2
        total += _quad(integrand, 0.0, math.pi, "spectral mass") / (2.0 * math.pi)
    return total


def spectral_mass_in(V, u: FiniteVector, intervals) -> float:
    """``mu_{V,u}(A)`` for ``A`` a finite union of intervals ``[(a, b), ...]``."""
    vals = _reduced(V)
    total = 0.0
    for band in _bands(vals):
        for a, b in intervals:
            lo, hi = max(a, band.lo), min(b, band.hi)
            if hi <= lo:
                continue
            th = []
            for E in (lo, hi):
                D, _ = _trace_pair(E, vals)
                th.append(math.acos(max(-1.0, min(1.0, D / 2.0))))
            t0, t1 = sorted(th)

            def integrand(theta, band=band):
                tc = _clamp(theta)
                E = _band_energy(vals, band, tc)
                phi, _ = _floquet_vector(vals, E, tc)
                up, um = _transform(phi, tc, u)
                return abs(up) ** 2 + abs(um) ** 2
            total += _quad(integrand, t0, t1, "spectral mass on A") / (2.0 * math.pi)
    return total


def inverse_transform(V, f_pm, sites) -> FiniteVector:
    """Reconstruct ``u_n`` for ``n`` in ``sites`` from band functions ``f_pm(E) -> (f+, f-)``.

    ``u_n = 1/2 int [phi^+_n f^+ + phi^-_n f^-] d rho`` with ``d rho = d theta / pi``.
    """
    vals = _vals(V)
    sites = list(sites)
    if not sites:
        return FiniteVector.zero()
    m = len(sites)
    acc = np.zeros(m, dtype=complex)
    for band in _bands(vals):
        def integrand(theta, band=band):
            th = _clamp(theta)
            E = _band_energy(vals, band, th)
            phi, _ = _floquet_vector(vals, E, th)
            fp, fm = f_pm(E)
            ext = _extended(phi, th, sites)
            val = ext * fp + np.conj(ext) * fm
            return np.concatenate([val.real, val.imag])
        res, err = integrate.quad_vec(integrand, 0.0, math.pi, epsabs=1e-11, epsrel=1e-10, limit=200)
        if not np.all(np.isfinite(res)) or err > 1e-7:
            raise QuadratureError(f"inverse transform: error estimate {err:.3g}", err)
        acc += (res[:m] + 1j * res[m:]) / (2.0 * math.pi)
    return FiniteVector(tuple(sites), acc.real)


def roundtrip(V, u: FiniteVector, sites=None) -> FiniteVector:
    sites = u.offsets if sites is None else sites
    return inverse_transform(V, lambda E: u_hat(V, E, u), sites)


# ---------------------------------------------------------------------------
# L^t functionals


def _check_t(t: float):
    if not 1.0 < t < 2.0:
        raise ValueError(f"t must be in (1,2), got {t}")


def _sin_ratio(theta: float) -> float:
    """``sin(theta) / (theta (pi - theta))``, smooth and positive on ``[0, pi]``."""
    if theta < 0.5 * math.pi:
        return float(np.sinc(theta / math.pi)) / (math.pi - theta)
    return float(np.sinc((math.pi - theta) / math.pi)) / theta


def _jacobi_integral(smooth, t: float, nodes: int) -> float:
    x, w = special.roots_jacobi(nodes, 1.0 - t, 1.0 - t)
    thetas = 0.5 * math.pi * (1.0 + x)
    scale = (0.5 * math.pi) ** (2.0 * (1.0 - t) + 1.0)
    return scale * float(sum(wi * smooth(th) for wi, th in zip(w, thetas)))


def _weighted_integral(smooth, t, method, nodes, what):
    # integral over theta in [0, pi] of smooth(theta) * theta^(1-t) * (pi - theta)^(1-t)
    if method == "adaptive":
        return _quad(smooth, 0.0, math.pi, what, weight="alg", wvar=(1.0 - t, 1.0 - t))
    if method == "gauss-jacobi":
        return _jacobi_integral(smooth, t, nodes)
    raise ValueError(f"unknown method {method!r}")


def lt_norm_dkdE(V, t: float, method: str = "adaptive", nodes: int = 64) -> float:
    """``int_{sigma(H)} |dk/dE|^t dE`` computed as ``sum_bands int |dk/dE|^(t-1) dk``."""
    _check_t(t)
    vals = _reduced(V)
    p = len(vals)
    total = 0.0
    for band in _bands(vals):
        def smooth(theta, band=band):
            E = _band_energy(vals, band, theta)
            _, dD = _trace_pair(E, vals)
            return (abs(dD) / (2.0 * p)) ** (t - 1.0) * _sin_ratio(theta) ** (1.0 - t) / p
        total += _weighted_integral(smooth, t, method, nodes, "L^t norm of dk/dE")
    return total


def lt_norm_density(V, u: FiniteVector, t: float, method: str = "adaptive", nodes: int = 64) -> float:
    """``int |g_{V,u}(E)|^t dE``."""
    _check_t(t)
    if not u.offsets or not np.any(u.values):
        return 0.0
    vals = _reduced(V)
    total = 0.0
    for band in _bands(vals):
        def smooth(theta, band=band):
            E = _band_energy(vals, band, theta)
            _, dD = _trace_pair(E, vals)
            tc = _clamp(theta)
            phi, _ = _floquet_vector(vals, E, tc)
            up, um = _transform(phi, tc, u)
            S = (abs(up) ** 2 + abs(um) ** 2) / (2.0 * math.pi)
            return S**t * (abs(dD) / 2.0) ** (t - 1.0) * _sin_ratio(theta) ** (1.0 - t)
        total += _weighted_integral(smooth, t, method, nodes, "L^t norm of the density")
    return total


def _density_near(vals, edges, u: FiniteVector, end: float, off: float) -> float:
    """``g`` at ``E = end + off`` with ``4 - Delta^2 = -prod(E - e_j)`` taken from the edges.

    The factor belonging to the edge equal to ``end`` is ``off`` itself, which keeps the
    inverse square root accurate right next to the edge.
    """
    E = end + off
    diffs = np.where(edges == end, off, E - edges)
    R = -float(np.prod(diffs))
    if R <= 0.0:
        return 0.0
    D, dD = _trace_pair(E, vals)
    theta = math.atan2(math.sqrt(R), D)
    phi, _ = _floquet_vector(vals, E, _clamp(theta))
    up, um = _transform(phi, theta, u)
    return (abs(up) ** 2 + abs(um) ** 2) * abs(dD) / math.sqrt(R) / (2.0 * math.pi)


def lt_distance(V1, V2, u: FiniteVector, t: float) -> float:
    """``(int |g_{V1,u} - g_{V2,u}|^t dE)^(1/t)`` over the union of both spectra."""
    _check_t(t)
    p1, p2 = len(as_values(V1)), len(as_values(V2))
    if p1 % p2 and p2 % p1:
        raise ValueError(f"incompatible periods {p1} and {p2}")
    if not u.offsets or not np.any(u.values):
        return 0.0
    va, vb = _reduced(V1), _reduced(V2)
    bs_a, bs_b = band_structure(va), band_structure(vb)
    points = sorted({float(e) for e in np.concatenate([bs_a.edges, bs_b.edges])})

    def inside(bands, x):
        return any(lo < x < hi for lo, hi in bands)

    # x = end + h s^m flattens the (x - edge)^(-t/2) singularities at both ends
    m = math.ceil(2.0 / (2.0 - t))

    def half(end, h):
        def f(s):
            off = h * s**m
            ga = _density_near(va, bs_a.edges, u, end, off)
            gb = _density_near(vb, bs_b.edges, u, end, off)
            return abs(ga - gb) ** t * abs(h) * m * s ** (m - 1)
        return _quad(f, 0.0, 1.0, "L^t distance", epsabs=1e-13, epsrel=1e-9, limit=400)

    total = 0.0
    for a, b in zip(points, points[1:]):
        if b - a <= 0.0:
            continue
        mid = 0.5 * (a + b)
        if not (inside(bs_a.bands, mid) or inside(bs_b.bands, mid)):
            continue
        total += half(a, mid - a) + half(b, mid - b)
    return total ** (1.0 / t)


# ---------------------------------------------------------------------------
# sampled profiles


@dataclass
class DensityProfile:
    bands: list[dict] = field(default_factory=list)
    mass: float = 0.0
    hat_bound: float = 0.0  # M with |u^{+/-}|^2 <= M
    hat_max_sampled: float = 0.0

    def rows(self):
        for band in self.bands:
            yield from zip(band["E"], band["k"], band["g"])


def density_profile(V, u: FiniteVector, n_per_band: int = 200) -> DensityProfile:
    """Samples ``(E, k, g)`` at Bloch-phase midpoints of every band."""
    vals = _vals(V)
    p = len(vals)
    prof = DensityProfile()
    prof.hat_bound = float(np.sum(np.abs(u.values))) ** 2
    thetas = (np.arange(n_per_band) + 0.5) * math.pi / n_per_band
    for band in _bands(vals):
        Es, ks, gs = [], [], []
        for th in thetas:
            E = _band_energy(vals, band, th)
            D, dD = _trace_pair(E, vals)
            phi, _ = _floquet_vector(vals, E, th)
            up, um = _transform(phi, th, u)
            prof.hat_max_sampled = max(prof.hat_max_sampled, abs(up) ** 2, abs(um) ** 2)
            Es.append(E)
            ks.append(th / p)
            gs.append((abs(up) ** 2 + abs(um) ** 2) * _dtheta_dE(D, dD) / (2.0 * math.pi))
        order = np.argsort(Es)
        prof.bands.append({
            "lower": band.lo,
            "upper": band.hi,
            "E": np.asarray(Es)[order],
            "k": np.asarray(ks)[order],
            "g": np.asarray(gs)[order],
        })
    prof.mass = spectral_mass(vals, u)
    return prof
