"""Gordon potentials: synthesis along an odometer chain and direct checking of the condition

    max_{1 <= n <= q_k} |V(n) - V(n +/- q_k)| <= k^(-q_k).

Stage ``k`` uses ``j_k = p_k`` and ``q_k = k j_k``; the limit function must stay within
``b_k = (1/2) q_k^(-q_k)`` of its level-``k`` part, which forces extended precision once
``b_k`` drops below what a double can resolve next to O(1) values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import precision
from .errors import PrecisionError
from .odometer import GroupChain, Potential, SamplingFunction, as_values
from .periodic import transfer

GUARD_BITS = 16


def stage_q(chain: GroupChain, k: int) -> int:
    return k * chain.period(k)


def stage_budget(q: int):
    """``(1/2) q^-q`` as an mpf (exact enough at any working precision)."""
    return mpmath.mpf(q) ** (-q) / 2


def required_bits(chain: GroupChain, K: int, scale: float = 1.0) -> int:
    """Bits needed to resolve ``b_K`` (and the perturbations below it) next to ``scale``."""
    with mpmath.workprec(64):
        b = stage_budget(stage_q(chain, K))
        need = math.ceil(float(mpmath.log(max(scale, 1.0) / b, 2))) + 3
    return need + GUARD_BITS


@dataclass(frozen=True)
class GordonStage:
    k: int
    j: int
    q: int
    deviation: object
    threshold: object
    budget: object
    precision_bits: int
    perturbation: object = None  # sup-norm of the perturbation added one level finer
    cap: object = None

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.threshold)

    @property
    def within_budget(self) -> bool:
        return bool(self.deviation <= self.budget)

    def to_dict(self) -> dict:
        def num(x):
            if x is None:
                return None
            if self.precision_bits > 53:
                return precision.to_string(x, self.precision_bits)
            return float(x)

        return {
            "k": self.k,
            "j": self.j,
            "q": self.q,
            "deviation": num(self.deviation),
            "threshold": num(self.threshold),
            "budget": num(self.budget),
            "passed": self.passed,
            "within_budget": self.within_budget,
            "perturbation": num(self.perturbation),
            "cap": num(self.cap),
            "precision_bits": self.precision_bits,
        }


@dataclass(frozen=True)
class GordonCertificate:
    stages: tuple[GordonStage, ...]
    precision_bits: int
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def qs(self) -> list[int]:
        return [s.q for s in self.stages]

    @property
    def increasing(self) -> bool:
        return all(a < b for a, b in zip(self.qs, self.qs[1:]))

    @property
    def passed(self) -> bool:
        return self.increasing and all(s.passed for s in self.stages)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "precision_bits": self.precision_bits,
            "stages": [s.to_dict() for s in self.stages],
            **self.meta,
        }


def _evaluator(V, bits):
    """``n -> V(n)`` plus the covered index range (``None`` when unbounded)."""
    if isinstance(V, SamplingFunction):
        V = Potential(V.values)
    if isinstance(V, Potential) or callable(V):
        return V, None
    seq, start = V
    seq = list(seq)

    def get(n):
        return seq[n - start]

    return get, (start, start + len(seq) - 1)


def check_gordon(V, qs, bits: int | None = None, js=None) -> GordonCertificate:
    """Measure the Gordon deviations of ``V`` along ``qs``.

    ``V`` is a ``Potential``/``SamplingFunction``, a callable ``n -> V(n)``, or a pair
    ``(values, start)`` with ``values[i] = V(start + i)`` covering ``[1 - q_K, 2 q_K]``.
    """
    qs = [int(q) for q in qs]
    if not qs or any(q <= 0 for q in qs):
        raise ValueError("qs must be a nonempty list of positive integers")
    if any(a >= b for a, b in zip(qs, qs[1:])):
        raise ValueError(f"qs must be strictly increasing, got {qs}")
    get, span = _evaluator(V, bits)
    qK = qs[-1]
    if span is not None and (span[0] > 1 - qK or span[1] < 2 * qK):
        raise ValueError(f"window {span} does not cover [{1 - qK}, {2 * qK}]")
    window = {n: get(n) for n in range(1 - qK, 2 * qK + 1)}
    if bits is None:
        tiny = any(stage_budget(q) < mpmath.mpf("1e-300") for q in qs)
        extended = any(isinstance(v, mpmath.mpf) for v in window.values())
        bits = precision.default_bits() if tiny or extended else 53
    mp = bits > 53
    stages = []
    with mpmath.workprec(max(bits, 53)):
        conv = mpmath.mpf if mp else float
        vals = {n: conv(v) for n, v in window.items()}
        for k, q in enumerate(qs, start=1):
            dev = conv(0)
            for n in range(1, q + 1):
                for m in (n + q, n - q):
                    dev = max(dev, abs(vals[n] - vals[m]))
            thr = mpmath.mpf(k) ** (-q)
            bud = stage_budget(q)
            if not mp:
                thr, bud = float(thr), float(bud)
            j = js[k - 1] if js is not None else None
            stages.append(GordonStage(k, j, q, dev, thr, bud, bits))
    return GordonCertificate(tuple(stages), bits)


def build_gordon(
    chain: GroupChain,
    K: int,
    f0: SamplingFunction | None = None,
    seed: int = 0,
    precision_bits: int | None = None,
):
    """Stage functions ``f_1, ..., f_L`` (``L = min(K + 1, depth)``) and their certificate.

    The perturbation added at level ``l`` has sup-norm below
    ``(1/4) min_{i < l} b_i 2^-(l - i)``, so the limit stays within ``b_k / 4`` of ``f_k``.
    """
    if K < 1:
        raise ValueError(f"stages must be >= 1, got {K}")
    if chain.depth < K:
        raise ValueError(f"K = {K} needs a chain of depth >= {K}, got {chain.depth}")
    rng = np.random.default_rng(seed)
    if f0 is None:
        f0 = SamplingFunction(chain, 1, rng.uniform(-1.0, 1.0, chain.period(1)))
    if f0.chain != chain or f0.level != 1:
        raise ValueError("the seed must be a level-1 sampling function on the given chain")
    scale = 1.0 + float(max(abs(float(v)) for v in f0.values))
    need = required_bits(chain, K, scale)
    if precision_bits is None:
        bits = 53 if need <= 53 else max(precision.DEFAULT_BITS, need)
    elif precision_bits < need:
        raise PrecisionError(
            f"K = {K} needs at least {need} bits of precision, got {precision_bits}", need
        )
    else:
        bits = precision_bits
    mp = bits > 53
    L = min(K + 1, chain.depth)
    qs = [stage_q(chain, k) for k in range(1, K + 1)]
    js = [chain.period(k) for k in range(1, K + 1)]
    with mpmath.workprec(max(bits, 53)):
        budgets = [stage_budget(q) for q in qs]
        if mp:
            f = SamplingFunction(chain, 1, np.array([mpmath.mpf(float(v)) for v in f0.values], dtype=object))
        else:
            f = SamplingFunction(chain, 1, np.asarray(f0.values, dtype=float))
        funcs = [f]
        caps, norms = {}, {}
        for level in range(2, L + 1):
            cap = min(budgets[i - 1] * mpmath.mpf(2) ** (-(level - i)) for i in range(1, level) if i <= K) / 4
            r = rng.uniform(-0.9, 0.9, chain.period(level))
            if mp:
                w = np.array([cap * mpmath.mpf(float(x)) for x in r], dtype=object)
            else:
                w = float(cap) * r
            f = SamplingFunction(chain, level, f.embed(level).values + w)
            funcs.append(f)
            caps[level - 1] = cap
            norms[level - 1] = max(abs(x) for x in w)
        V = Potential(f.values)
        cert = check_gordon(V, qs, bits, js)
    stages = []
    for s in cert.stages:
        cap = caps.get(s.k)
        nrm = norms.get(s.k)
        if not mp and cap is not None:
            cap, nrm = float(cap), float(nrm)
        stages.append(GordonStage(s.k, s.j, s.q, s.deviation, s.threshold, s.budget, bits, nrm, cap))
    cert = GordonCertificate(tuple(stages), bits, {"levels": L, "seed": seed})
    return funcs, cert


@dataclass(frozen=True)
class GrowthReport:
    min_ratio: float
    min_ratio_two_term: float
    max_residual: float
    worst_E: float
    n_energies: int
    n_angles: int

    @property
    def passed(self) -> bool:
        return self.min_ratio >= 0.5 - 1e-12


def gordon_growth_check(V, energies, n_angles: int = 64) -> GrowthReport:
    """``max(|T_q v|, |T_2q v|, |T_-q v|) >= |v|/2`` over a grid of energies and directions.

    The two-term ratio ``max(|T_q v|, |T_2q v|)`` is reported separately; it is only
    guaranteed to reach ``1/2`` when ``|tr T_q| <= 1``.  All three matrices come from
    direct products, and the Cayley-Hamilton residual ``|T_2q - tr(T_q) T_q + I|`` is
    recorded as a consistency check.
    """
    vals = as_values(V)
    q = len(vals)
    ang = np.linspace(0.0, np.pi, n_angles, endpoint=False)
    vs = np.stack([np.cos(ang), np.sin(ang)])
    best3 = best2 = math.inf
    worst_E = math.nan
    resid = 0.0
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    for E in energies:
        T = transfer(E, vals, q)
        T2 = transfer(E, vals, 2 * q)
        Tm = transfer(E, vals, -q)
        scale = max(1.0, np.abs(T).max() ** 2)
        resid = max(resid, float(np.abs(T2 - np.trace(T) * T + np.eye(2)).max() / scale))
        n1 = np.linalg.norm(T @ vs, axis=0)
        n2 = np.linalg.norm(T2 @ vs, axis=0)
        n3 = np.linalg.norm(Tm @ vs, axis=0)
        r3 = float(np.max([n1, n2, n3], axis=0).min())
        r2 = float(np.maximum(n1, n2).min())
        if r3 < best3:
            best3, worst_E = r3, float(E)
        best2 = min(best2, r2)
    return GrowthReport(best3, best2, resid, worst_E, len(energies), n_angles)


def periodic_values(values, lo: int, hi: int) -> tuple[list, int]:
    """``(V(lo), ..., V(hi))`` for the periodic potential with block ``values``."""
    p = len(values)
    return [values[n % p] for n in range(lo, hi + 1)], lo
