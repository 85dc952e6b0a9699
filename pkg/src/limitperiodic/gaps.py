"""Opening every gap of a periodic sampling function by a single-site perturbation.

For ``f`` of period ``p`` and a budget ``eps``, pick the least ``M`` with
``(2p + 1)/M < eps`` and try ``f + t/M`` at the last site of the period block for
``t = 1, ..., 2p + 1``.  Two trials cannot share a closed-gap energy (their one-period
transfer matrices at such an energy would differ), and ``Delta = +/-2`` has at most ``2p``
solutions, so one of the trials has all ``p - 1`` gaps open.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import precision
from .errors import NumericalEscalationError
from .odometer import GroupElement, SamplingFunction, as_values
from .periodic import TOL_GAP, band_structure, band_structure_mp, classify, transfer


@dataclass(frozen=True)
class TrialRecord:
    t: int
    n_open: int
    min_gap: float
    witness_E: float | None
    witness_kind: str | None
    precision_bits: int = 53


@dataclass(frozen=True)
class GapCertificate:
    period: int
    epsilon: float
    M: int | None
    t: int
    site: int
    gap_lengths: tuple[float, ...] = ()
    rejected: tuple[TrialRecord, ...] = ()
    precision_bits: int = 53
    tol_gap: float = TOL_GAP

    @property
    def amplitude(self) -> float:
        return 0.0 if not self.M else self.t / self.M

    @property
    def trials(self) -> int:
        return len(self.rejected) + (1 if self.M else 0)

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "epsilon": self.epsilon,
            "M": self.M,
            "t": self.t,
            "site": self.site,
            "amplitude": self.amplitude,
            "gap_lengths": list(self.gap_lengths),
            "rejected": [vars(r) for r in self.rejected],
            "precision_bits": self.precision_bits,
            "tol_gap": self.tol_gap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GapCertificate":
        return cls(
            period=int(d["period"]),
            epsilon=float(d["epsilon"]),
            M=None if d["M"] is None else int(d["M"]),
            t=int(d["t"]),
            site=int(d["site"]),
            gap_lengths=tuple(d.get("gap_lengths", ())),
            rejected=tuple(TrialRecord(**r) for r in d.get("rejected", ())),
            precision_bits=int(d.get("precision_bits", 53)),
            tol_gap=float(d.get("tol_gap", TOL_GAP)),
        )


def choose_M(p: int, eps: float) -> int:
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    M = math.floor((2 * p + 1) / eps) + 1
    while not (2 * p + 1) / M < eps:
        M += 1
    return M


def perturbation_site(f: SamplingFunction, alpha: GroupElement | None = None) -> int:
    """Residue of ``T^{p-1} omega`` at ``f``'s level, with ``omega`` the identity."""
    a = 1 if alpha is None else alpha.residue(f.level)
    return ((f.period - 1) * a) % f.period


def perturbed(f: SamplingFunction, site: int, amplitude: float) -> SamplingFunction:
    vals = np.array(f.values, dtype=float)
    vals[site] += amplitude
    return SamplingFunction(f.chain, f.level, vals)


def _witness(values, bs):
    closed = [g for g in bs.gaps if not g.open]
    if not closed:
        return None, None
    E = closed[0].center
    return E, classify(transfer(E, values))


def open_all_gaps(
    f: SamplingFunction,
    eps: float,
    tol_gap: float = TOL_GAP,
    alpha: GroupElement | None = None,
    bits: int | None = None,
) -> tuple[SamplingFunction, GapCertificate]:
    p = f.period
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if p == 1:
        return f, GapCertificate(p, eps, None, 0, 0, tol_gap=tol_gap)
    M = choose_M(p, eps)
    site = perturbation_site(f, alpha)
    rejected = []
    for t in range(1, 2 * p + 2):
        ft = perturbed(f, site, t / M)
        bs = band_structure(ft.values, tol_gap)
        if bs.n_open == p - 1:
            lengths = tuple(g.length for g in bs.gaps)
            return ft, GapCertificate(p, eps, M, t, site, lengths, tuple(rejected), 53, tol_gap)
        E, kind = _witness(ft.values, bs)
        rejected.append(TrialRecord(t, bs.n_open, bs.min_gap, E, kind))

    bits = precision.default_bits() if bits is None else bits
    escalated = []
    for t in range(1, 2 * p + 2):
        ft = perturbed(f, site, t / M)
        bs = band_structure_mp(ft.values, bits, tol_gap)
        if bs.n_open == p - 1:
            lengths = tuple(float(x) for x in bs.exact_gap_lengths)
            return ft, GapCertificate(p, eps, M, t, site, lengths, tuple(rejected + escalated), bits, tol_gap)
        escalated.append(TrialRecord(t, bs.n_open, bs.min_gap, None, None, bits))
    raise NumericalEscalationError(
        f"no trial among t = 1..{2 * p + 1} opened all {p - 1} gaps at {bits} bits "
        f"(M = {M}, tol_gap = {tol_gap}); the tolerance is too coarse for this budget"
    )


def count_open_gaps(V, tol_gap: float = TOL_GAP, bits: int | None = None) -> tuple[int, int]:
    """``(open, closed)`` gap counts; ``open + closed = p - 1``.

    A gap shorter than ``tol_gap`` counts as closed only when ``T_p = +/-I`` at its centre;
    otherwise the decision is rechecked in extended precision.
    """
    vals = as_values(V)
    bs = band_structure(vals, tol_gap)
    n_open = bs.n_open
    suspicious = False
    for g in bs.gaps:
        if g.open:
            continue
        kind = classify(transfer(g.center, vals), tol=1e-6)
        if kind not in ("+identity", "-identity"):
            suspicious = True
    if suspicious:
        raw = V.values if hasattr(V, "values") else vals
        n_open = band_structure_mp(list(raw), bits, tol_gap).n_open
    return n_open, len(bs.gaps) - n_open


def verify_certificate(
    f: SamplingFunction, f_tilde: SamplingFunction, cert: GapCertificate, bits: int | None = None
) -> bool:
    """Recheck a certificate from scratch; gap lengths are recomputed at >= 106 bits."""
    p = f.period
    if f_tilde.chain != f.chain or f_tilde.level != f.level or cert.period != p:
        return False
    if p == 1:
        return cert.t == 0 and f_tilde == f
    if not cert.M or not 1 <= cert.t <= 2 * p + 1:
        return False
    if not (2 * p + 1) / cert.M < cert.epsilon:
        return False
    if f_tilde != perturbed(f, cert.site, cert.t / cert.M):
        return False
    if not f_tilde.distance(f) < cert.epsilon:
        return False
    bits = max(106, precision.default_bits() if bits is None else bits)
    bs = band_structure_mp(f_tilde.values, bits, cert.tol_gap)
    return bs.n_open == p - 1


def rescaled(cert: GapCertificate, factor: int, gap_lengths=None) -> GapCertificate:
    """Same trial with amplitude ``t/(factor M)``."""
    return replace(
        cert,
        M=cert.M * factor,
        gap_lengths=cert.gap_lengths if gap_lengths is None else tuple(gap_lengths),
    )
