"""Staged limit-periodic constructions: Cantor spectrum and absolutely continuous spectrum.

Stage ``k`` adds a function ``s_k`` living one chain level finer than ``s_{k-1}``, so
``f_k = f_0 + s_0 + ... + s_k`` has period ``p_{base + k}``.  Each stage opens every gap
while staying inside the budget ``min(eps/2^k, beta_k/(3 * 2^k))``, where ``beta_k`` is the
smallest gap length seen in the earlier stages.  The AC variant additionally shrinks the
perturbation until consecutive spectral densities are ``2^-k`` close in ``L^t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import floquet
from .errors import NumericalEscalationError
from .floquet import FiniteVector
from .gaps import GapCertificate, count_open_gaps, open_all_gaps, perturbed, rescaled
from .odometer import SamplingFunction
from .periodic import TOL_GAP, BandStructure, band_structure, hausdorff_distance

MAX_HALVINGS = 60


@dataclass(frozen=True)
class StageRecord:
    index: int
    s: SamplingFunction
    budget: float
    beta: float | None
    certificate: GapCertificate
    distance: float | None = None
    halvings: int = 0

    @property
    def level(self) -> int:
        return self.s.level

    @property
    def norm(self) -> float:
        return float(self.s.sup_norm())

    def to_dict(self) -> dict:
        return {
            "k": self.index,
            "level": self.level,
            "period": self.s.period,
            "s": [float(v) for v in self.s.values],
            "norm": self.norm,
            "budget": self.budget,
            "beta": self.beta,
            "certificate": self.certificate.to_dict(),
            "distance": self.distance,
            "halvings": self.halvings,
        }


@dataclass(frozen=True, eq=False)
class ConstructionState:
    f0: SamplingFunction
    epsilon: float
    stages: tuple[StageRecord, ...] = ()
    mode: str = "cantor"
    u: FiniteVector | None = None
    t: float | None = None
    tol_gap: float = TOL_GAP
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError(f"eps must be positive, got {self.epsilon}")
        if self.mode not in ("cantor", "ac"):
            raise ValueError(f"unknown construction mode {self.mode!r}")
        if self.mode == "ac":
            if self.u is None or self.t is None:
                raise ValueError("AC mode needs a vector u and an exponent t")
            if not 1.0 < self.t < 2.0:
                raise ValueError(f"t must be in (1,2), got {self.t}")

    @property
    def chain(self):
        return self.f0.chain

    @property
    def k(self) -> int:
        """Index of the last completed stage (-1 before the first one)."""
        return len(self.stages) - 1

    def f(self, k: int | None = None) -> SamplingFunction:
        k = self.k if k is None else k
        if k < 0:
            return self.f0
        key = ("f", k)
        if key not in self._cache:
            self._cache[key] = self.f(k - 1) + self.stages[k].s
        return self._cache[key]

    def bands(self, k: int | None = None) -> BandStructure:
        k = self.k if k is None else k
        key = ("bands", k)
        if key not in self._cache:
            self._cache[key] = band_structure(self.f(k).values, self.tol_gap)
        return self._cache[key]

    def alpha(self, k: int) -> float:
        return self.bands(k).min_gap

    def beta(self, k: int) -> float | None:
        """``min(alpha_0, ..., alpha_{k-1})``; ``None`` for ``k = 0``."""
        if k <= 0:
            return None
        return min(self.alpha(j) for j in range(k))

    def budget(self, k: int) -> float:
        b = self.epsilon / 2**k
        if k >= 1:
            b = min(b, self.beta(k) / (3 * 2**k))
        return b

    def with_stage(self, record: StageRecord) -> "ConstructionState":
        return replace(self, stages=self.stages + (record,), _cache=dict(self._cache))

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "periods": list(self.chain.periods),
            "f0": self.f0.to_dict(),
            "epsilon": self.epsilon,
            "tol_gap": self.tol_gap,
            "stages": [],
        }
        if self.mode == "ac":
            out["u"] = self.u.as_dict()
            out["t"] = self.t
        for rec in self.stages:
            row = rec.to_dict()
            bs = self.bands(rec.index)
            row["alpha"] = bs.min_gap
            row["gaps"] = [[g.lower, g.upper] for g in bs.gaps]
            row["f"] = [float(v) for v in self.f(rec.index).values]
            out["stages"].append(row)
        return out


def start_construction(f0, eps, mode="cantor", u=None, t=None, tol_gap=TOL_GAP) -> ConstructionState:
    return ConstructionState(f0, float(eps), (), mode, u, t, tol_gap)


def _next_level(state: ConstructionState) -> int:
    level = state.f0.level + state.k + 1
    if level > state.chain.depth:
        raise ValueError(
            f"stage {state.k + 1} needs chain level {level}, chain depth is {state.chain.depth}"
        )
    return level


def _single_site(f: SamplingFunction, site: int, amplitude: float) -> SamplingFunction:
    vals = np.zeros(f.period)
    vals[site] = amplitude
    return SamplingFunction(f.chain, f.level, vals)


def _check_stage(state: ConstructionState, rec: StageRecord):
    failures = [row for row in audit_stage(state, rec.index) if not row[2]]
    if failures:
        raise NumericalEscalationError(f"stage {rec.index} violates {[r[0] for r in failures]}")


def cantor_stage(state: ConstructionState) -> ConstructionState:
    k = state.k + 1
    level = _next_level(state)
    prev = state.f().embed(level)
    budget = state.budget(k)
    f_tilde, cert = open_all_gaps(prev, budget, state.tol_gap)
    s = _single_site(prev, cert.site, cert.amplitude)
    new = state.with_stage(StageRecord(k, s, budget, state.beta(k), cert))
    _check_stage(new, new.stages[-1])
    return new


def ac_stage(state: ConstructionState) -> ConstructionState:
    if state.mode != "ac":
        raise ValueError("ac_stage needs a state built in AC mode")
    k = state.k + 1
    level = _next_level(state)
    prev = state.f()
    prev_emb = prev.embed(level)
    budget = state.budget(k)
    _, cert = open_all_gaps(prev_emb, budget, state.tol_gap)
    target = 2.0**-k
    factor = 1
    for halvings in range(MAX_HALVINGS + 1):
        amp = cert.t / (cert.M * factor)
        cand = perturbed(prev_emb, cert.site, amp)
        bs = band_structure(cand.values, state.tol_gap)
        if bs.n_open == cand.period - 1:
            d = floquet.lt_distance(prev.values, cand.values, state.u, state.t)
            if d <= target:
                break
        factor *= 2
    else:
        raise NumericalEscalationError(
            f"stage {k}: L^t distance stayed above 2^-{k} after {MAX_HALVINGS} halvings"
        )
    cert = rescaled(cert, factor, (g.length for g in bs.gaps))
    s = _single_site(prev_emb, cert.site, amp)
    new = state.with_stage(StageRecord(k, s, budget, state.beta(k), cert, d, halvings))
    _check_stage(new, new.stages[-1])
    return new


def build_cantor(f0: SamplingFunction, eps: float, K: int, tol_gap: float = TOL_GAP) -> ConstructionState:
    if K < 0:
        raise ValueError(f"stages must be >= 0, got {K}")
    state = start_construction(f0, eps, tol_gap=tol_gap)
    for _ in range(K + 1):
        state = cantor_stage(state)
    return state


@dataclass(frozen=True)
class ACSummary:
    Q: float
    t: float
    norms: tuple[float, ...]
    distances: tuple[float, ...]

    @property
    def exponent(self) -> float:
        """``1/q = 1 - 1/t``."""
        return 1.0 - 1.0 / self.t

    def modulus(self, measure: float) -> float:
        """Hoelder bound ``Q^(1/t) |A|^(1/q)`` on ``<u, P_A u>``."""
        return self.Q ** (1.0 / self.t) * measure**self.exponent

    def modulus_linear(self, measure: float) -> float:
        """The cruder ``Q |A|^(1/q)`` form; dominates ``modulus`` only when ``Q >= 1``."""
        return self.Q * measure**self.exponent


def ac_summary(state: ConstructionState) -> ACSummary:
    norms = tuple(
        floquet.lt_norm_density(state.f(k).values, state.u, state.t) for k in range(len(state.stages))
    )
    return ACSummary(
        Q=max(norms, default=0.0),
        t=state.t,
        norms=norms,
        distances=tuple(rec.distance for rec in state.stages),
    )


def build_ac(f0, eps, u: FiniteVector, t: float, K: int, tol_gap: float = TOL_GAP):
    """Returns ``(state, summary)``; ``summary.Q`` is the largest stage ``L^t`` norm."""
    if K < 0:
        raise ValueError(f"stages must be >= 0, got {K}")
    state = start_construction(f0, eps, "ac", u, t, tol_gap)
    for _ in range(K + 1):
        state = ac_stage(state)
    return state, ac_summary(state)


# ---------------------------------------------------------------------------
# audits


def audit_stage(state: ConstructionState, k: int) -> list[tuple[str, int, bool, str]]:
    """Rows ``(check, k, passed, detail)`` for one stage, from stored data only."""
    rec = state.stages[k]
    norm = rec.norm
    rows = []
    lim4 = state.epsilon / 2**k
    rows.append(("choice4", k, norm < lim4, f"|s| = {norm:.6g} < {lim4:.6g}"))
    if k >= 1:
        lim5 = state.beta(k) / (3 * 2**k)
        rows.append(("choice5", k, norm < lim5, f"|s| = {norm:.6g} < {lim5:.6g}"))
    n_open, n_closed = count_open_gaps(state.f(k).values, state.tol_gap)
    p = state.f(k).period
    rows.append(("choice6", k, n_open == p - 1, f"{n_open} open, {n_closed} closed"))
    if state.mode == "ac":
        d = rec.distance
        ok = d is not None and d <= 2.0**-k
        rows.append(("Gfinal", k, ok, f"d = {d} <= {2.0**-k:.6g}"))
    return rows


@dataclass
class AuditReport:
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r[2] for r in self.rows)

    def failures(self) -> list:
        return [r for r in self.rows if not r[2]]

    def failed(self, check: str) -> bool:
        return any(r[0] == check and not r[2] for r in self.rows)


def audit_state(state: ConstructionState) -> AuditReport:
    report = AuditReport()
    for k in range(len(state.stages)):
        report.rows.extend(audit_stage(state, k))
    K = state.k
    fK = state.f(K)
    for j in range(K):
        bound = sum(state.epsilon / 2**i for i in range(j + 1, K + 1))
        dist = float(fK.distance(state.f(j)))
        report.rows.append(("telescoping", j, dist < bound, f"|f_K - f_j| = {dist:.6g} < {bound:.6g}"))
    if K >= 0:
        dist = float(fK.distance(state.f0))
        report.rows.append(("total", K, dist < state.epsilon, f"|f_K - f0| = {dist:.6g}"))
    for j in range(K):
        h = hausdorff_distance(state.bands(j).bands, state.bands(j + 1).bands)
        step = float(state.f(j + 1).distance(state.f(j)))
        report.rows.append(("nesting", j, h <= step + 1e-12, f"d_H = {h:.6g} <= {step:.6g}"))
    return report


@dataclass
class PersistenceReport:
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def gap_persistence_check(state: ConstructionState) -> PersistenceReport:
    """Middle thirds of every recorded open gap must miss the final spectrum."""
    report = PersistenceReport()
    K = state.k
    final = state.bands(K).bands
    for j in range(K):
        for g in state.bands(j).gaps:
            if not g.open:
                continue
            a = g.center
            delta = 0.5 * (g.upper - g.lower)
            lo, hi = a - delta / 3, a + delta / 3
            report.checked += 1
            hit = [b for b in final if b[0] < hi and b[1] > lo]
            if hit:
                report.violations.append({"stage": j, "gap": (g.lower, g.upper), "bands": hit})
    return report


def inflate_stage(state: ConstructionState, k: int, amount: float) -> ConstructionState:
    """Copy of ``state`` with ``s_k`` raised by the constant ``amount`` (negative controls)."""
    rec = state.stages[k]
    s = SamplingFunction(rec.s.chain, rec.s.level, np.asarray(rec.s.values) + amount)
    stages = list(state.stages)
    stages[k] = replace(rec, s=s)
    return replace(state, stages=tuple(stages), _cache={})


def stage_gap_counts(state: ConstructionState) -> list[int]:
    return [state.bands(k).n_open for k in range(len(state.stages))]


def holder_check(state: ConstructionState, summary: ACSummary, sets) -> list[tuple[float, float, float]]:
    """``(mass, modulus, modulus_linear)`` of the final stage for each interval family in ``sets``."""
    out = []
    fK = state.f().values
    for intervals in sets:
        measure = sum(b - a for a, b in intervals)
        mass = floquet.spectral_mass_in(fK, state.u, intervals)
        out.append((mass, summary.modulus(measure), summary.modulus_linear(measure)))
    return out


def measure_of(intervals) -> float:
    return float(math.fsum(b - a for a, b in intervals))
